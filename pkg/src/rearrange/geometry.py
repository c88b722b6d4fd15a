"""Oriented-rectangle math: corners, SAT overlap, boundary gaps, grasp yaw, pixel/world mapping.

Coordinate frame is the image convention: origin at the workspace top-left,
+x rightward, +y toward the bottom edge (camera side). Angles are radians
measured from +x; box rotations are normalized to [-pi/2, pi/2), which keeps
the corner set unchanged (a rectangle is invariant under theta + pi).
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

HALF_PI = math.pi / 2.0


def normalize_half_pi(angle: float) -> float:
    """Wrap an angle into [-pi/2, pi/2) modulo pi."""
    return (angle + HALF_PI) % math.pi - HALF_PI


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point components must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle given by center (cx, cy), side lengths (w, h) and rotation theta.

    w runs along the theta direction, h along theta + pi/2. theta is
    normalized at construction; w and h are kept as given.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"box field {name} must be finite")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got w={self.w}, h={self.h}")
        object.__setattr__(self, "theta", normalize_half_pi(self.theta))

    @property
    def center(self) -> Point2:
        return Point2(self.cx, self.cy)

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.w, self.h)

    def moved(self, cx: float, cy: float, theta=None) -> "OrientedBox":
        """Copy of this box at a new center and optional new rotation."""
        t = self.theta if theta is None else theta
        return OrientedBox(cx, cy, self.w, self.h, t)

    def rotated(self, delta: float) -> "OrientedBox":
        return OrientedBox(self.cx, self.cy, self.w, self.h, self.theta + delta)


@dataclass(frozen=True)
class Calibration:
    """Affine pixel-to-world map over a fixed table plane."""

    px_per_meter: float
    origin_world: Tuple[float, float] = (0.0, 0.0)
    table_height: float = 0.0

    def __post_init__(self):
        if self.px_per_meter <= 0:
            raise ValueError("px_per_meter must be positive")


def corners(box: OrientedBox) -> List[Point2]:
    """Four corners in counter-clockwise order starting from local (+w/2, +h/2)."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    hw, hh = box.w / 2.0, box.h / 2.0
    local = [(hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh)]
    return [Point2(box.cx + dx * c - dy * s, box.cy + dx * s + dy * c) for dx, dy in local]


def box_from_corners(pts: List[Point2]) -> OrientedBox:
    """Rebuild a box from corners laid out in the `corners` convention."""
    if len(pts) != 4:
        raise ValueError("expected exactly 4 corners")
    cx = sum(p.x for p in pts) / 4.0
    cy = sum(p.y for p in pts) / 4.0
    ex, ey = pts[0].x - pts[1].x, pts[0].y - pts[1].y  # +w direction
    w = math.hypot(ex, ey)
    h = math.hypot(pts[1].x - pts[2].x, pts[1].y - pts[2].y)
    return OrientedBox(cx, cy, w, h, math.atan2(ey, ex))


def aabb(box: OrientedBox) -> Tuple[float, float, float, float]:
    """Axis-aligned bounds (min_x, min_y, max_x, max_y)."""
    hx, hy = half_extents(box)
    return box.cx - hx, box.cy - hy, box.cx + hx, box.cy + hy


def half_extents(box: OrientedBox) -> Tuple[float, float]:
    """Half-extents of the axis-aligned bounding box at the current rotation."""
    c, s = abs(math.cos(box.theta)), abs(math.sin(box.theta))
    return (box.w * c + box.h * s) / 2.0, (box.w * s + box.h * c) / 2.0


def contains_point(box: OrientedBox, p: Point2) -> bool:
    """Closed-rectangle membership test."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    dx, dy = p.x - box.cx, p.y - box.cy
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return abs(u) <= box.w / 2.0 and abs(v) <= box.h / 2.0


def _project(pts: List[Point2], ax: float, ay: float) -> Tuple[float, float]:
    dots = [p.x * ax + p.y * ay for p in pts]
    return min(dots), max(dots)


def _sat_axes(a: OrientedBox, b: OrientedBox) -> List[Tuple[float, float]]:
    axes = []
    for box in (a, b):
        c, s = math.cos(box.theta), math.sin(box.theta)
        axes.append((c, s))
        axes.append((-s, c))
    return axes


def overlaps(a: OrientedBox, b: OrientedBox) -> bool:
    """True iff the closed rectangles intersect (separating-axis test)."""
    return sat_penetration(a, b) >= 0.0


def sat_penetration(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum projection overlap over the 4 edge normals.

    Negative when the boxes are separated (largest projection gap, negated);
    >= 0 when they intersect, 0 meaning exact touch.
    """
    ca, cb = corners(a), corners(b)
    depth = math.inf
    for ax, ay in _sat_axes(a, b):
        lo_a, hi_a = _project(ca, ax, ay)
        lo_b, hi_b = _project(cb, ax, ay)
        overlap = min(hi_a, hi_b) - max(lo_a, lo_b)
        depth = min(depth, overlap)
    return depth


def _segment_distance(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> float:
    """Minimum distance between two closed 2D segments."""
    if _segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(
        _point_segment_distance(p1, q1, q2),
        _point_segment_distance(p2, q1, q2),
        _point_segment_distance(q1, p1, p2),
        _point_segment_distance(q2, p1, p2),
    )


def _point_segment_distance(p: Point2, a: Point2, b: Point2) -> float:
    abx, aby = b.x - a.x, b.y - a.y
    apx, apy = p.x - a.x, p.y - a.y
    denom = abx * abx + aby * aby
    t = 0.0 if denom == 0 else max(0.0, min(1.0, (apx * abx + apy * aby) / denom))
    return math.hypot(apx - t * abx, apy - t * aby)


def _orient(a: Point2, b: Point2, c: Point2) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if d == 0 and _on_segment(a, b, c):
            return True
    return False


def _on_segment(a: Point2, b: Point2, c: Point2) -> bool:
    return min(a.x, b.x) <= c.x <= max(a.x, b.x) and min(a.y, b.y) <= c.y <= max(a.y, b.y)


def min_gap(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum boundary distance; 0 whenever the boxes overlap."""
    if overlaps(a, b):
        return 0.0
    ca, cb = corners(a), corners(b)
    best = math.inf
    for i in range(4):
        p1, p2 = ca[i], ca[(i + 1) % 4]
        for j in range(4):
            best = min(best, _segment_distance(p1, p2, cb[j], cb[(j + 1) % 4]))
    return best


def grasp_yaw(box: OrientedBox) -> float:
    """Jaw-closing direction perpendicular to the longest edge, in [-pi/2, pi/2).

    Long side along w (w >= h, ties included): jaws close across it, yaw =
    theta + pi/2. Long side along h: yaw = theta.
    """
    if box.w >= box.h:
        return normalize_half_pi(box.theta + HALF_PI)
    return normalize_half_pi(box.theta)


def pixel_to_world(p: Point2, calib: Calibration) -> Tuple[float, float, float]:
    """Map pixel coordinates onto the table plane in meters."""
    return (
        calib.origin_world[0] + p.x / calib.px_per_meter,
        calib.origin_world[1] + p.y / calib.px_per_meter,
        calib.table_height,
    )


def world_to_pixel(x_m: float, y_m: float, calib: Calibration) -> Point2:
    """Inverse of pixel_to_world (the table-plane projection)."""
    return Point2(
        (x_m - calib.origin_world[0]) * calib.px_per_meter,
        (y_m - calib.origin_world[1]) * calib.px_per_meter,
    )
