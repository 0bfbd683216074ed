"""Road network geometry: links, lane paths, conflict points.

The network is a parametric grid corridor: a main street running south to
north, crossed by a side street at every intersection. One lane per
direction, right-hand traffic. World frame: x east, y north, meters.
Stop lines sit at the end of each approach link, which is also the edge of
the square intersection box.

A Path is the lane centerline from the start of one link to the start of
the next link, i.e. the full approach plus the connector through the box.
Longitudinal positions r are arclengths along that polyline.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import ValidationError

# Turning arcs are sampled at roughly this angular step; conflict points are
# computed on the sampled polylines, so this also bounds their resolution.
ARC_SEGMENTS = 9

_EPS = 1e-9


@dataclass(frozen=True)
class Link:
    """Directed lane segment between two network nodes (edge or intersection)."""

    id: str
    start: tuple
    end: tuple
    v_limit: float
    is_entry: bool = False
    is_exit: bool = False

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])


@dataclass(frozen=True)
class ConflictPoint:
    """First geometric crossing of two lane paths, in each path's arclength.

    delta_ij is the signed stop-line-to-point distance difference,
    (entry-to-point on j) minus (entry-to-point on i); it is antisymmetric
    under argument swap.
    """

    point: tuple
    arclength_on_i: float
    arclength_on_j: float
    delta_ij: float


@dataclass
class Path:
    """Lane centerline from the start of `from_link` to the start of `to_link`."""

    id: str
    from_link: str
    to_link: str
    intersection_id: str
    move: str  # left | through | right
    polyline: list
    stop_arclength: float = 0.0  # arclength of the stop line (approach end)
    cum: list = field(default_factory=list, repr=False)
    total_length: float = 0.0

    def __post_init__(self):
        if len(self.polyline) < 2:
            raise ValidationError("polyline", f"path {self.id} needs at least 2 points")
        cum = [0.0]
        for (x0, y0), (x1, y1) in zip(self.polyline, self.polyline[1:]):
            seg = math.hypot(x1 - x0, y1 - y0)
            if seg <= _EPS:
                raise ValidationError("polyline", f"path {self.id} has a zero-length segment")
            cum.append(cum[-1] + seg)
        self.cum = cum
        self.total_length = cum[-1]
        if not 0.0 <= self.stop_arclength <= self.total_length + _EPS:
            raise ValidationError("stop_arclength", f"path {self.id}: outside [0, total_length]")

    def point_at(self, r: float) -> tuple:
        """World point at arclength r; extrapolates linearly beyond the ends."""
        x, y = self._interp(r)
        return (x, y)

    def tangent_at(self, r: float) -> tuple:
        i = self._segment_index(r)
        (x0, y0), (x1, y1) = self.polyline[i], self.polyline[i + 1]
        seg = self.cum[i + 1] - self.cum[i]
        return ((x1 - x0) / seg, (y1 - y0) / seg)

    def heading_at(self, r: float) -> float:
        tx, ty = self.tangent_at(r)
        return math.atan2(ty, tx)

    def _segment_index(self, r: float) -> int:
        i = bisect_right(self.cum, r) - 1
        return min(max(i, 0), len(self.polyline) - 2)

    def _interp(self, r: float) -> tuple:
        i = self._segment_index(r)
        (x0, y0), (x1, y1) = self.polyline[i], self.polyline[i + 1]
        seg = self.cum[i + 1] - self.cum[i]
        t = (r - self.cum[i]) / seg
        return (x0 + t * (x1 - x0), y0 + t * (y1 - y0))


@dataclass(frozen=True)
class Intersection:
    id: str
    center: tuple
    box_half: float
    approach_links: tuple  # link ids, order (nb, sb, eb, wb)
    exit_links: tuple
    moves: dict  # approach link id -> {move: exit link id}
    axis_of: dict  # approach link id -> "ns" | "ew"


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _segment_hits(p0, p1, q0, q1):
    """Intersections of segment p0p1 with q0q1 as (t, u) params in [0, 1].

    Returns at most one hit: the earliest along p. Collinear overlap yields
    the start of the shared stretch.
    """
    dx1, dy1 = p1[0] - p0[0], p1[1] - p0[1]
    dx2, dy2 = q1[0] - q0[0], q1[1] - q0[1]
    rx, ry = q0[0] - p0[0], q0[1] - p0[1]
    denom = _cross(dx1, dy1, dx2, dy2)
    if abs(denom) > _EPS:
        t = _cross(rx, ry, dx2, dy2) / denom
        u = _cross(rx, ry, dx1, dy1) / denom
        if -_EPS <= t <= 1 + _EPS and -_EPS <= u <= 1 + _EPS:
            return (min(max(t, 0.0), 1.0), min(max(u, 0.0), 1.0))
        return None
    # Parallel: collinear if the offset has no perpendicular component.
    if abs(_cross(rx, ry, dx1, dy1)) > 1e-6:
        return None
    len1sq = dx1 * dx1 + dy1 * dy1
    s0 = (rx * dx1 + ry * dy1) / len1sq
    s1 = ((q1[0] - p0[0]) * dx1 + (q1[1] - p0[1]) * dy1) / len1sq
    lo, hi = min(s0, s1), max(s0, s1)
    if hi < -_EPS or lo > 1 + _EPS:
        return None
    t = min(max(lo, 0.0), 1.0)
    px = p0[0] + t * dx1 - q0[0]
    py = p0[1] + t * dy1 - q0[1]
    len2sq = dx2 * dx2 + dy2 * dy2
    u = (px * dx2 + py * dy2) / len2sq
    return (t, min(max(u, 0.0), 1.0))


def conflict_point(p_i: Path, p_j: Path):
    """First crossing of two paths, ordered by arclength on p_i.

    Returns None for disjoint paths. The returned point lies on both
    polylines; delta_ij uses each path's stop line as the lane entry anchor.
    """
    best = None
    for si in range(len(p_i.polyline) - 1):
        a0, a1 = p_i.polyline[si], p_i.polyline[si + 1]
        seg_i = p_i.cum[si + 1] - p_i.cum[si]
        for sj in range(len(p_j.polyline) - 1):
            hit = _segment_hits(a0, a1, p_j.polyline[sj], p_j.polyline[sj + 1])
            if hit is None:
                continue
            t, u = hit
            arc_i = p_i.cum[si] + t * seg_i
            arc_j = p_j.cum[sj] + u * (p_j.cum[sj + 1] - p_j.cum[sj])
            key = (arc_i, arc_j)
            if best is None or key < best[0]:
                point = (a0[0] + t * (a1[0] - a0[0]), a0[1] + t * (a1[1] - a0[1]))
                best = (key, point)
        if best is not None and best[0][0] <= p_i.cum[si] + _EPS:
            break  # nothing later on p_i can beat a hit at this arclength
    if best is None:
        return None
    (arc_i, arc_j), point = best
    delta = (arc_j - p_j.stop_arclength) - (arc_i - p_i.stop_arclength)
    return ConflictPoint(point=point, arclength_on_i=arc_i, arclength_on_j=arc_j, delta_ij=delta)


def distance_to_arrival(path: Path, r: float) -> float:
    """Distance from r to the stop line; negative once past it."""
    if r < -_EPS or r > path.total_length + _EPS:
        raise ValidationError("r", f"position {r} outside path {path.id}")
    return path.stop_arclength - r


def _quarter_arc(a, heading, b, segments=ARC_SEGMENTS):
    """Sampled 90-degree arc from point a (tangent `heading`) to point b."""
    hx, hy = heading
    radius = math.hypot(b[0] - a[0], b[1] - a[1]) / math.sqrt(2.0)
    for side in (1.0, -1.0):  # left normal, right normal
        nx, ny = -hy * side, hx * side
        cx, cy = a[0] + radius * nx, a[1] + radius * ny
        if abs(math.hypot(b[0] - cx, b[1] - cy) - radius) < 1e-6:
            break
    th0 = math.atan2(a[1] - cy, a[0] - cx)
    th1 = math.atan2(b[1] - cy, b[0] - cx)
    sweep = (th1 - th0 + math.pi) % (2 * math.pi) - math.pi  # shortest signed sweep
    pts = []
    for k in range(1, segments + 1):
        th = th0 + sweep * k / segments
        pts.append((cx + radius * math.cos(th), cy + radius * math.sin(th)))
    pts[-1] = b  # exact endpoint
    return pts


@dataclass
class RoadNetwork:
    links: dict
    intersections: dict
    paths: dict
    path_by_pair: dict  # (from_link, to_link) -> path id
    _conflicts: dict = field(default_factory=dict, repr=False)

    def path_between(self, from_link: str, to_link: str) -> Path:
        return self.paths[self.path_by_pair[(from_link, to_link)]]

    def paths_at(self, intersection_id: str):
        return [p for p in self.paths.values() if p.intersection_id == intersection_id]

    def conflict_between(self, path_i: str, path_j: str):
        """Cached conflict point; identical ids conflict at arclength zero."""
        key = (path_i, path_j)
        if key not in self._conflicts:
            self._conflicts[key] = conflict_point(self.paths[path_i], self.paths[path_j])
        return self._conflicts[key]

    def entry_links(self):
        return [l for l in self.links.values() if l.is_entry]


def build_network(intersections: int, spacing: float, lane_width: float,
                  approach_len: float, v_limit: float) -> RoadNetwork:
    """Build the grid corridor. Validates parameters before constructing."""
    if intersections < 1:
        raise ValidationError("intersections", "need at least one intersection")
    if lane_width <= 0:
        raise ValidationError("lane_width", "must be positive")
    if approach_len <= 0:
        raise ValidationError("approach_len", "must be positive")
    if v_limit <= 0:
        raise ValidationError("v_limit", "must be positive")
    box_half = lane_width  # two crossing lanes per road -> road half-width
    if intersections > 1 and spacing <= 2 * box_half:
        raise ValidationError("spacing", "intersections overlap: spacing too small")

    off = lane_width / 2.0
    centers = [approach_len + box_half + k * spacing for k in range(intersections)]
    n = intersections
    links = {}

    def add(lid, start, end, **kw):
        links[lid] = Link(id=lid, start=start, end=end, v_limit=v_limit, **kw)

    # Main street, northbound (x = +off) and southbound (x = -off).
    add("nb0", (off, 0.0), (off, centers[0] - box_half), is_entry=True)
    for k in range(1, n):
        add(f"nb{k}", (off, centers[k - 1] + box_half), (off, centers[k] - box_half))
    top = centers[-1] + box_half
    add(f"nb{n}", (off, top), (off, top + approach_len), is_exit=True)
    add(f"sb{n}", (-off, top + approach_len), (-off, top), is_entry=True)
    for k in range(n - 1, 0, -1):
        add(f"sb{k}", (-off, centers[k] - box_half), (-off, centers[k - 1] + box_half))
    add("sb0", (-off, centers[0] - box_half), (-off, 0.0), is_exit=True)

    # Side streets: _in links approach the box, _out links leave it.
    for k, cy in enumerate(centers):
        add(f"eb_in{k}", (-box_half - approach_len, cy - off), (-box_half, cy - off), is_entry=True)
        add(f"eb_out{k}", (box_half, cy - off), (box_half + approach_len, cy - off), is_exit=True)
        add(f"wb_in{k}", (box_half + approach_len, cy + off), (box_half, cy + off), is_entry=True)
        add(f"wb_out{k}", (-box_half, cy + off), (-box_half - approach_len, cy + off), is_exit=True)

    intersections_map = {}
    paths = {}
    path_by_pair = {}
    for k, cy in enumerate(centers):
        iid = f"i{k}"
        approaches = (f"nb{k}", f"sb{k + 1}", f"eb_in{k}", f"wb_in{k}")
        exits = (f"nb{k + 1}", f"sb{k}", f"eb_out{k}", f"wb_out{k}")
        moves = {
            f"nb{k}": {"through": f"nb{k + 1}", "right": f"eb_out{k}", "left": f"wb_out{k}"},
            f"sb{k + 1}": {"through": f"sb{k}", "right": f"wb_out{k}", "left": f"eb_out{k}"},
            f"eb_in{k}": {"through": f"eb_out{k}", "right": f"sb{k}", "left": f"nb{k + 1}"},
            f"wb_in{k}": {"through": f"wb_out{k}", "right": f"nb{k + 1}", "left": f"sb{k}"},
        }
        axis_of = {f"nb{k}": "ns", f"sb{k + 1}": "ns", f"eb_in{k}": "ew", f"wb_in{k}": "ew"}
        intersections_map[iid] = Intersection(
            id=iid, center=(0.0, cy), box_half=box_half,
            approach_links=approaches, exit_links=exits, moves=moves, axis_of=axis_of)

        for app in approaches:
            a = links[app]
            hx, hy = a.end[0] - a.start[0], a.end[1] - a.start[1]
            alen = math.hypot(hx, hy)
            heading = (hx / alen, hy / alen)
            for move, exit_id in moves[app].items():
                e = links[exit_id]
                poly = [a.start, a.end]
                if move == "through":
                    poly.append(e.start)
                else:
                    poly.extend(_quarter_arc(a.end, heading, e.start))
                pid = f"{app}:{move}"
                p = Path(id=pid, from_link=app, to_link=exit_id, intersection_id=iid,
                         move=move, polyline=poly, stop_arclength=alen)
                paths[pid] = p
                path_by_pair[(app, exit_id)] = pid

    net = RoadNetwork(links=links, intersections=intersections_map,
                      paths=paths, path_by_pair=path_by_pair)
    # Precompute conflicts between path pairs that share an intersection.
    for iid in intersections_map:
        group = net.paths_at(iid)
        for pi in group:
            for pj in group:
                net.conflict_between(pi.id, pj.id)
    return net
