"""Camera model and slot-to-image projection for the driver view.

Conventions (fixed here, asserted in tests):
  world frame   x east, y north, z up; the road plane is z = 0
  camera frame  x right, y down, z forward (optical axis)

Extrinsics map world to camera as p_c = R p_w + t. The forward projection
is the standard pinhole

    u = (f / d_x) * (x_c / z_c) + u_0
    v = (f / d_y) * (y_c / z_c) + v_0

and `image_to_camera` is its exact algebraic inverse given a depth, which
is the back-projection some derivations print as a matrix with entries
z*d_x/f, -z*d_x*u_0/f etc. Points at or behind the near plane are
rejected; quads are clipped, not culled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

Z_NEAR = 0.5  # m


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics plus absolute world-to-camera extrinsics."""

    R: object          # 3x3 rotation, world -> camera
    t: object          # 3-vector, world -> camera
    f: float           # focal length, m
    d_x: float         # pixel pitch, m/px
    d_y: float
    u_0: float         # principal point, px
    v_0: float
    image_w: int = 1280
    image_h: int = 720

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        t = np.asarray(self.t, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValidationError("R", "extrinsic rotation must be 3x3")
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9):
            raise ValidationError("R", "extrinsic rotation is not orthonormal")
        if self.f <= 0 or self.d_x <= 0 or self.d_y <= 0:
            raise ValidationError("f", "focal length and pixel pitch must be positive")
        if not (0 <= self.u_0 <= self.image_w and 0 <= self.v_0 <= self.image_h):
            raise ValidationError("u_0", "principal point outside the image")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class ProjectedQuad:
    """Image-space slot polygon; 4 corners when unclipped, more after clipping."""

    ref_id: int
    color: str
    corners: tuple  # ((u, v), ...)


def world_to_ar_frame(p_w, cam: CameraModel):
    p = np.asarray(p_w, dtype=float).reshape(3)
    return cam.R @ p + cam.t


def ar_frame_to_image(p_a, cam: CameraModel, z_near: float = Z_NEAR):
    """Pixel coordinates of a camera-frame point, or None before the near plane."""
    x, y, z = float(p_a[0]), float(p_a[1]), float(p_a[2])
    if z <= z_near:
        return None
    u = (cam.f / cam.d_x) * (x / z) + cam.u_0
    v = (cam.f / cam.d_y) * (y / z) + cam.v_0
    return (u, v)


def image_to_ar_frame(u: float, v: float, z: float, cam: CameraModel):
    """Back-project a pixel to the camera frame at a known depth z."""
    x = (u - cam.u_0) * z * cam.d_x / cam.f
    y = (v - cam.v_0) * z * cam.d_y / cam.f
    return np.array([x, y, z])


def ar_frame_to_world(p_a, cam: CameraModel):
    p = np.asarray(p_a, dtype=float).reshape(3)
    return cam.R.T @ (p - cam.t)


@dataclass(frozen=True)
class CameraRig:
    """Static mount: intrinsics plus pose relative to the ego body.

    The rig composes with an ego pose (position on the road plane plus
    heading) into the absolute extrinsics of a CameraModel each tick.
    """

    f: float = 0.004        # 4 mm
    d_x: float = 4.0e-6     # m/px -> f/d_x = 1000 px
    d_y: float = 4.0e-6
    u_0: float = 640.0
    v_0: float = 360.0
    image_w: int = 1280
    image_h: int = 720
    height: float = 1.2     # camera above the road plane, m
    pitch: float = 0.0      # rad, positive tilts the view down

    @classmethod
    def from_dict(cls, d: dict) -> "CameraRig":
        return cls(**d)

    def at(self, position, heading: float) -> CameraModel:
        """Absolute camera for an ego at `position` (x, y) facing `heading`."""
        ch, sh = math.cos(heading), math.sin(heading)
        forward = np.array([ch, sh, 0.0])
        right = np.array([sh, -ch, 0.0])
        down = np.array([0.0, 0.0, -1.0])
        if self.pitch:
            cp, sp = math.cos(self.pitch), math.sin(self.pitch)
            forward, down = cp * forward + sp * down, cp * down - sp * forward
        R = np.vstack([right, down, forward])
        center = np.array([position[0], position[1], self.height])
        t = -R @ center
        return CameraModel(R=R, t=t, f=self.f, d_x=self.d_x, d_y=self.d_y,
                           u_0=self.u_0, v_0=self.v_0,
                           image_w=self.image_w, image_h=self.image_h)


def _clip_polygon(points, inside, intersect):
    """One Sutherland-Hodgman pass against a single boundary."""
    out = []
    n = len(points)
    for i in range(n):
        cur, nxt = points[i], points[(i + 1) % n]
        cur_in, nxt_in = inside(cur), inside(nxt)
        if cur_in:
            out.append(cur)
            if not nxt_in:
                out.append(intersect(cur, nxt))
        elif nxt_in:
            out.append(intersect(cur, nxt))
    return out


def clip_near(points_cam, z_near: float = Z_NEAR):
    """Clip a camera-space polygon against the plane z = z_near."""
    def inside(p):
        return p[2] > z_near

    def intersect(p, q):
        t = (z_near - p[2]) / (q[2] - p[2])
        return p + t * (q - p)

    return _clip_polygon(list(points_cam), inside, intersect)


def clip_image_rect(points_uv, w: int, h: int):
    """Clip an image-space polygon to [0, w] x [0, h]."""
    pts = [np.array(p, dtype=float) for p in points_uv]
    bounds = [
        (lambda p: p[0] >= 0.0, 0, 0.0, False),
        (lambda p: p[0] <= w, 0, float(w), False),
        (lambda p: p[1] >= 0.0, 1, 0.0, False),
        (lambda p: p[1] <= h, 1, float(h), False),
    ]
    for inside, axis, value, _ in bounds:
        if not pts:
            return []

        def intersect(p, q, axis=axis, value=value):
            t = (value - p[axis]) / (q[axis] - p[axis])
            return p + t * (q - p)

        pts = _clip_polygon(pts, inside, intersect)
    return pts


def slot_corners_world(slot, path):
    """World-frame corners of a slot rectangle laid flat on the road plane."""
    half_l, half_w = slot.l_s / 2.0, slot.w_s / 2.0
    corners = []
    for dr, dx in ((half_l, -half_w), (half_l, half_w),
                   (-half_l, half_w), (-half_l, -half_w)):
        r = slot.r_s + dr
        px, py = path.point_at(r)
        tx, ty = path.tangent_at(r)
        lat = slot.x_s + dx
        # lateral offset to the right of travel
        corners.append(np.array([px + ty * lat, py - tx * lat, 0.0]))
    return corners


def project_slot(slot, path, cam: CameraModel, z_near: float = Z_NEAR):
    """Slot rectangle as an image polygon, or None when fully out of view."""
    cam_pts = [world_to_ar_frame(p, cam) for p in slot_corners_world(slot, path)]
    cam_pts = clip_near(cam_pts, z_near)
    if len(cam_pts) < 3:
        return None
    uv = [ar_frame_to_image(p, cam, z_near=0.0) for p in cam_pts]
    uv = clip_image_rect(uv, cam.image_w, cam.image_h)
    if len(uv) < 3:
        return None
    return ProjectedQuad(ref_id=slot.ref_id, color=slot.availability,
                         corners=tuple((float(u), float(v)) for u, v in uv))
