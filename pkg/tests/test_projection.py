"""Pinhole projection tests.

The round-trip and clipping checks have independent oracles: back-projection
is compared against the original world points, and the Sutherland-Hodgman
clipper against a half-plane area computation done with shapely-free
polygon arithmetic (shoelace on hand-clipped figures).
"""

import math

import numpy as np
import pytest

from slotsim.errors import ValidationError
from slotsim.network import build_network
from slotsim.projection import (CameraModel, CameraRig, ar_frame_to_image,
                                ar_frame_to_world, clip_image_rect, clip_near,
                                image_to_ar_frame, project_slot,
                                slot_corners_world, world_to_ar_frame)
from slotsim.slots import SlotGeometry


def identity_cam(**kw):
    args = dict(R=np.eye(3), t=np.zeros(3), f=0.004, d_x=4e-6, d_y=4e-6,
                u_0=640.0, v_0=360.0)
    args.update(kw)
    return CameraModel(**args)


def test_point_on_optical_axis_hits_principal_point():
    cam = identity_cam()
    assert ar_frame_to_image((0.0, 0.0, 10.0), cam) == (640.0, 360.0)


def test_doubling_depth_halves_the_pixel_offset():
    cam = identity_cam()
    u1, v1 = ar_frame_to_image((2.0, 1.0, 10.0), cam)
    u2, v2 = ar_frame_to_image((2.0, 1.0, 20.0), cam)
    assert (u2 - cam.u_0) == pytest.approx((u1 - cam.u_0) / 2.0, rel=1e-15)
    assert (v2 - cam.v_0) == pytest.approx((v1 - cam.v_0) / 2.0, rel=1e-15)


def test_anisotropic_pixel_pitch():
    cam = identity_cam(d_y=8e-6)  # half the vertical pixel density
    u, v = ar_frame_to_image((1.0, 1.0, 10.0), cam)
    assert u - cam.u_0 == pytest.approx(100.0)
    assert v - cam.v_0 == pytest.approx(50.0)


def random_rotation(rng):
    # QR of a Gaussian matrix, sign-fixed: uniform-ish orthonormal basis
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def test_round_trip_through_random_extrinsics():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(1000):
        R = random_rotation(rng)
        t = rng.normal(scale=20.0, size=3)
        cam = CameraModel(R=R, t=t, f=0.004, d_x=4e-6, d_y=4e-6,
                          u_0=640.0, v_0=360.0)
        p_w = rng.normal(scale=50.0, size=3)
        p_c = world_to_ar_frame(p_w, cam)
        if p_c[2] <= 0.5:
            continue
        u, v = ar_frame_to_image(p_c, cam)
        back_c = image_to_ar_frame(u, v, p_c[2], cam)
        back_w = ar_frame_to_world(back_c, cam)
        err = np.linalg.norm(back_w - p_w) / max(np.linalg.norm(p_w), 1.0)
        worst = max(worst, err)
    assert worst < 1e-9


def test_points_behind_near_plane_are_rejected():
    cam = identity_cam()
    assert ar_frame_to_image((0.0, 0.0, 0.5), cam) is None
    assert ar_frame_to_image((0.0, 0.0, -3.0), cam) is None
    assert ar_frame_to_image((0.0, 0.0, 0.5000001), cam) is not None


@pytest.mark.parametrize("field,kw", [
    ("R", dict(R=np.eye(3) * 1.001)),
    ("R", dict(R=np.ones((3, 3)))),
    ("R", dict(R=np.eye(4))),
    ("f", dict(f=0.0)),
    ("f", dict(d_x=-1e-6)),
    ("u_0", dict(u_0=5000.0)),
])
def test_camera_validation(field, kw):
    with pytest.raises(ValidationError) as ei:
        identity_cam(**kw)
    assert ei.value.field == field


# ----------------------------------------------------------------- rig

def test_rig_heading_north_looks_along_y():
    rig = CameraRig()
    cam = rig.at((10.0, 5.0), math.pi / 2)  # facing +y
    # a road point straight ahead: below the horizon, on the image centerline
    u, v = ar_frame_to_image(world_to_ar_frame((10.0, 25.0, 0.0), cam), cam)
    assert u == pytest.approx(rig.u_0)
    assert v > rig.v_0
    # ... and the camera center itself maps to the origin of its own frame
    assert world_to_ar_frame((10.0, 5.0, rig.height), cam) == pytest.approx([0, 0, 0])


def test_rig_offset_to_the_right_moves_image_right():
    cam = CameraRig().at((0.0, 0.0), math.pi / 2)  # facing +y, right = +x
    u, v = ar_frame_to_image(world_to_ar_frame((2.0, 20.0, 0.0), cam), cam)
    assert u > 640.0


def test_rig_depth_is_distance_along_heading():
    cam = CameraRig(height=1.2).at((3.0, -7.0), 0.0)  # facing +x
    p = world_to_ar_frame((3.0 + 12.5, -7.0, 1.2), cam)
    assert p[2] == pytest.approx(12.5)
    assert p[0] == pytest.approx(0.0)
    assert p[1] == pytest.approx(0.0)


def test_rig_pitch_tilts_the_horizon():
    flat = CameraRig(pitch=0.0).at((0.0, 0.0), 0.0)
    tilted = CameraRig(pitch=0.1).at((0.0, 0.0), 0.0)
    target = (30.0, 0.0, 1.2)  # at camera height: on the horizon when flat
    _, v_flat = ar_frame_to_image(world_to_ar_frame(target, flat), flat)
    _, v_tilt = ar_frame_to_image(world_to_ar_frame(target, tilted), tilted)
    assert v_flat == pytest.approx(360.0)
    assert v_tilt < v_flat  # looking down lifts the horizon up the image


def test_rig_rotation_is_orthonormal_for_any_pose():
    rng = np.random.default_rng(3)
    for _ in range(50):
        rig = CameraRig(pitch=float(rng.uniform(-0.4, 0.4)))
        cam = rig.at((float(rng.normal()), float(rng.normal())),
                     float(rng.uniform(-math.pi, math.pi)))
        assert np.allclose(cam.R @ cam.R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(cam.R) == pytest.approx(1.0)


# ------------------------------------------------------------- clipping

def shoelace(pts):
    a = 0.0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + [pts[0]]):
        a += x1 * y2 - x2 * y1
    return abs(a) / 2.0


def test_near_clip_splits_a_straddling_quad():
    # square from z=-1 to z=2 clipped at z=0.5: area scales by 1.5/3
    pts = [np.array(p, float) for p in
           [(-1, 0, -1), (1, 0, -1), (1, 0, 2), (-1, 0, 2)]]
    out = clip_near(pts, z_near=0.5)
    assert len(out) == 4
    assert all(p[2] >= 0.5 - 1e-12 for p in out)
    area = shoelace([(p[0], p[2]) for p in out])
    assert area == pytest.approx(2.0 * 1.5)


def test_near_clip_keeps_or_drops_whole_polygons():
    ahead = [np.array(p, float) for p in [(0, 0, 2), (1, 0, 2), (0, 1, 2)]]
    assert len(clip_near(ahead)) == 3
    behind = [np.array(p, float) for p in [(0, 0, 0.1), (1, 0, 0.2), (0, 1, 0.3)]]
    assert clip_near(behind) == []


def test_image_rect_clip_matches_hand_figure():
    # triangle poking out of the left edge of a 10x10 viewport
    tri = [(-5.0, 5.0), (5.0, 0.0), (5.0, 10.0)]
    out = clip_image_rect(tri, 10, 10)
    got = sorted((round(float(u), 6), round(float(v), 6)) for u, v in out)
    assert got == [(0.0, 2.5), (0.0, 7.5), (5.0, 0.0), (5.0, 10.0)]
    assert shoelace([(float(u), float(v)) for u, v in out]) == pytest.approx(
        shoelace(tri) - shoelace([(-5, 5), (0, 2.5), (0, 7.5)]))


def test_image_rect_clip_area_never_grows():
    rng = np.random.default_rng(23)
    for _ in range(200):
        quad = [(float(rng.uniform(-300, 1600)), float(rng.uniform(-300, 1000)))
                for _ in range(3)]
        out = clip_image_rect(quad, 1280, 720)
        if not out:
            continue
        # convexity of the clip region guarantees the clipped figure fits it
        for u, v in out:
            assert -1e-9 <= u <= 1280 + 1e-9
            assert -1e-9 <= v <= 720 + 1e-9
        assert shoelace([(float(u), float(v)) for u, v in out]) <= \
            shoelace(quad) + 1e-9


# --------------------------------------------------------- slot -> image

NET = build_network(intersections=1, spacing=200.0, lane_width=3.5,
                    approach_len=160.0, v_limit=15.0)
PATH = NET.paths["nb0:through"]


def test_slot_corners_follow_the_lane():
    slot = SlotGeometry(ref_id=7, r_s=50.0, x_s=0.0, l_s=18.0, w_s=1.8)
    corners = slot_corners_world(slot, PATH)
    assert len(corners) == 4
    # nb0 runs straight up x=1.75; tangent (0,1); right-of-travel is +x...
    # lateral (ty, -tx) = (1, 0) scaled by x_s + dx
    ys = sorted(c[1] for c in corners)
    assert ys[0] == pytest.approx(50.0 - 9.0)
    assert ys[-1] == pytest.approx(50.0 + 9.0)
    xs = sorted(c[0] for c in corners)
    assert xs[0] == pytest.approx(1.75 - 0.9)
    assert xs[-1] == pytest.approx(1.75 + 0.9)
    assert all(c[2] == 0.0 for c in corners)


def test_slot_lateral_offset_convention():
    slot = SlotGeometry(ref_id=7, r_s=50.0, x_s=2.0, l_s=4.0, w_s=2.0)
    xs = [c[0] for c in slot_corners_world(slot, PATH)]
    # positive x_s shifts right of travel, which on a northbound lane is +x
    assert min(xs) == pytest.approx(1.75 + 2.0 - 1.0)
    assert max(xs) == pytest.approx(1.75 + 2.0 + 1.0)


def make_dashcam(r_ego):
    rig = CameraRig()
    return rig.at(PATH.point_at(r_ego), PATH.heading_at(r_ego))


def test_project_slot_ahead_is_a_quad_below_the_horizon():
    cam = make_dashcam(30.0)
    slot = SlotGeometry(ref_id=7, r_s=60.0, x_s=0.0, l_s=18.0, w_s=1.8)
    quad = project_slot(slot, PATH, cam)
    assert quad is not None
    assert quad.ref_id == 7 and quad.color == "red"
    assert len(quad.corners) == 4
    assert all(v > 360.0 for _, v in quad.corners)  # road plane sits low
    us = [u for u, _ in quad.corners]
    assert min(us) < 640.0 < max(us)  # straddles the centerline


def test_project_slot_fully_behind_returns_none():
    cam = make_dashcam(100.0)
    slot = SlotGeometry(ref_id=7, r_s=60.0, x_s=0.0, l_s=18.0, w_s=1.8)
    assert project_slot(slot, PATH, cam) is None


def test_project_slot_straddling_the_camera_is_clipped_not_dropped():
    cam = make_dashcam(60.0)
    slot = SlotGeometry(ref_id=7, r_s=60.0, x_s=0.0, l_s=18.0, w_s=1.8)
    quad = project_slot(slot, PATH, cam)
    assert quad is not None
    # everything on-screen and in front: v cannot exceed the image
    for u, v in quad.corners:
        assert 0.0 <= u <= cam.image_w
        assert 0.0 <= v <= cam.image_h


def test_projected_quad_scale_shrinks_with_distance():
    cam = make_dashcam(10.0)
    near = project_slot(SlotGeometry(0, 40.0, 0.0, 4.0, 1.8), PATH, cam)
    far = project_slot(SlotGeometry(0, 100.0, 0.0, 4.0, 1.8), PATH, cam)
    w_near = max(u for u, _ in near.corners) - min(u for u, _ in near.corners)
    w_far = max(u for u, _ in far.corners) - min(u for u, _ in far.corners)
    assert w_far < w_near
