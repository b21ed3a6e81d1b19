"""Planar geometry for the printable part domain.

A part slice is an outer polygon (counterclockwise) with optional hole
polygons (clockwise). All coordinates are millimeters. Boundary loops are
piecewise linear; curved features are polygonized at a chord tolerance well
below positioning tolerances. Every operation here is a pure function of
immutable inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

BOUNDARY_TOL = 1e-9
MIN_EDGE_LEN = 1e-9
DEFAULT_CHORD_TOL = 0.01


@dataclass(frozen=True)
class BoundaryCursor:
    """Position on a boundary loop: loop id plus arc length along it (mm)."""

    loop_id: int
    arc_length: float


class _Loop:
    """Precomputed polyline loop: edges, lengths, cumulative arc lengths."""

    def __init__(self, vertices: np.ndarray):
        self.pts = vertices
        self.a = vertices
        self.b = np.roll(vertices, -1, axis=0)
        self.vec = self.b - self.a
        self.lens = np.hypot(self.vec[:, 0], self.vec[:, 1])
        self.cum = np.concatenate(([0.0], np.cumsum(self.lens)))
        self.perimeter = float(self.cum[-1])


def _as_vertices(raw, name: str) -> np.ndarray:
    pts = np.asarray(raw, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValidationError(f"{name}: expected >=3 [x,y] vertices",
                              module="geometry", operation="validate")
    return pts


def signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def _segments_properly_intersect(a, b, c, d) -> bool:
    """Proper or touching intersection of segments ab and cd."""
    r = b - a
    s = d - c
    denom = r[0] * s[1] - r[1] * s[0]
    qp = c - a
    if abs(denom) < 1e-15:
        # parallel: overlap only if collinear
        if abs(qp[0] * r[1] - qp[1] * r[0]) > 1e-12:
            return False
        rr = r @ r
        if rr == 0.0:
            return False
        t0 = (qp @ r) / rr
        t1 = ((d - a) @ r) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        return hi > 1e-12 and lo < 1.0 - 1e-12
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    u = (qp[0] * r[1] - qp[1] * r[0]) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def _check_simple(loop: _Loop, name: str) -> None:
    n = len(loop.pts)
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                continue
            if _segments_properly_intersect(loop.a[i], loop.b[i],
                                            loop.a[j], loop.b[j]):
                raise ValidationError(
                    f"{name}: self-intersection between edges at vertex "
                    f"{i} and vertex {j}",
                    module="geometry", operation="validate")


def _crossing_parity(pts: np.ndarray, loop: _Loop) -> np.ndarray:
    """Vectorized even-odd test: True where points are inside the loop."""
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    ax, ay = loop.a[:, 0][None, :], loop.a[:, 1][None, :]
    bx, by = loop.b[:, 0][None, :], loop.b[:, 1][None, :]
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = ax + (py - ay) * (bx - ax) / (by - ay)
    hits = straddle & (xcross > px)
    return (np.sum(hits, axis=1) % 2).astype(bool)


def _point_segment_distances(pts: np.ndarray, loop: _Loop):
    """Distances (m, e) from each point to each loop edge, plus edge params."""
    d = pts[:, None, :] - loop.a[None, :, :]
    rr = np.maximum(loop.lens ** 2, 1e-300)
    t = np.clip(np.einsum("mev,ev->me", d, loop.vec) / rr, 0.0, 1.0)
    proj = loop.a[None, :, :] + t[:, :, None] * loop.vec[None, :, :]
    diff = pts[:, None, :] - proj
    return np.hypot(diff[..., 0], diff[..., 1]), t


class PartSlice:
    """2D printable domain: outer loop plus hole loops, millimeter units."""

    def __init__(self, outer, holes=()):
        outer = _as_vertices(outer, "outer")
        holes = [_as_vertices(h, f"hole {i}") for i, h in enumerate(holes)]
        self._validate(outer, holes)
        self.outer = outer
        self.holes = holes
        self.loops = [_Loop(outer)] + [_Loop(h) for h in holes]

    @staticmethod
    def _validate(outer: np.ndarray, holes: list[np.ndarray]) -> None:
        named = [("outer", outer)] + [(f"hole {i}", h)
                                      for i, h in enumerate(holes)]
        for name, pts in named:
            edge = np.roll(pts, -1, axis=0) - pts
            lens = np.hypot(edge[:, 0], edge[:, 1])
            bad = np.flatnonzero(lens <= MIN_EDGE_LEN)
            if bad.size:
                raise ValidationError(
                    f"{name}: vertex {int(bad[0])}: degenerate edge "
                    f"(length {lens[bad[0]]:.3g} mm)",
                    module="geometry", operation="validate")
        if signed_area(outer) <= 0:
            raise ValidationError("outer: must be counterclockwise",
                                  module="geometry", operation="validate")
        for i, h in enumerate(holes):
            if signed_area(h) >= 0:
                raise ValidationError(
                    f"hole {i}: must be clockwise (orientation is never "
                    "silently flipped)",
                    module="geometry", operation="validate")
        loops = [_Loop(pts) for _, pts in named]
        for name, pts in named:
            _check_simple(_Loop(pts), name)
        outer_loop = loops[0]
        for i, h in enumerate(holes):
            inside = _crossing_parity(h, outer_loop)
            dist, _ = _point_segment_distances(h, outer_loop)
            ok = inside & (dist.min(axis=1) > BOUNDARY_TOL)
            if not np.all(ok):
                v = int(np.flatnonzero(~ok)[0])
                raise ValidationError(
                    f"hole {i}: vertex {v}: not strictly inside outer",
                    module="geometry", operation="validate")
        for i in range(len(holes)):
            for j in range(i + 1, len(holes)):
                li, lj = loops[1 + i], loops[1 + j]
                if np.any(_crossing_parity(holes[i], lj)) or \
                        np.any(_crossing_parity(holes[j], li)):
                    raise ValidationError(
                        f"hole {i}: overlaps hole {j}",
                        module="geometry", operation="validate")
                for e in range(len(li.pts)):
                    for f in range(len(lj.pts)):
                        if _segments_properly_intersect(li.a[e], li.b[e],
                                                        lj.a[f], lj.b[f]):
                            raise ValidationError(
                                f"hole {i}: edge at vertex {e} intersects "
                                f"hole {j}",
                                module="geometry", operation="validate")

    def bounds(self):
        lo = self.outer.min(axis=0)
        hi = self.outer.max(axis=0)
        return lo, hi

    def loop_perimeter(self, loop_id: int) -> float:
        return self.loops[loop_id].perimeter


def contains_many(slice_: PartSlice, pts: np.ndarray) -> np.ndarray:
    """Boolean mask: inside outer and outside holes; boundary counts inside."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    inside = _crossing_parity(pts, slice_.loops[0])
    for loop in slice_.loops[1:]:
        inside &= ~_crossing_parity(pts, loop)
    # points within tolerance of any boundary count as inside
    maybe = ~inside
    if np.any(maybe):
        idx = np.flatnonzero(maybe)
        sub = pts[idx]
        near = np.zeros(len(sub), dtype=bool)
        for loop in slice_.loops:
            dist, _ = _point_segment_distances(sub, loop)
            near |= dist.min(axis=1) <= BOUNDARY_TOL
        inside[idx] |= near
    return inside


def contains(slice_: PartSlice, p) -> bool:
    return bool(contains_many(slice_, np.asarray(p, dtype=float)[None, :])[0])


def project_to_boundary(slice_: PartSlice, p,
                        loop_ids=None) -> tuple[BoundaryCursor, float]:
    """Closest boundary point over all loops; ties go to the lowest loop id."""
    p = np.asarray(p, dtype=float)[None, :]
    best = None
    ids = range(len(slice_.loops)) if loop_ids is None else loop_ids
    for loop_id in ids:
        loop = slice_.loops[loop_id]
        dist, t = _point_segment_distances(p, loop)
        e = int(np.argmin(dist[0]))
        d = float(dist[0, e])
        if best is None or d < best[0]:
            arc = float(loop.cum[e] + t[0, e] * loop.lens[e])
            if arc >= loop.perimeter:
                arc = 0.0
            best = (d, BoundaryCursor(loop_id, arc))
    return best[1], best[0]


def cursor_to_point(slice_: PartSlice, c: BoundaryCursor) -> np.ndarray:
    loop = slice_.loops[c.loop_id]
    s = c.arc_length % loop.perimeter
    e = int(np.searchsorted(loop.cum, s, side="right")) - 1
    e = min(max(e, 0), len(loop.lens) - 1)
    local = s - loop.cum[e]
    return loop.a[e] + (local / loop.lens[e]) * loop.vec[e]


def cursor_tangent(slice_: PartSlice, c: BoundaryCursor) -> np.ndarray:
    """Unit tangent in the direction of increasing arc length."""
    loop = slice_.loops[c.loop_id]
    s = c.arc_length % loop.perimeter
    e = int(np.searchsorted(loop.cum, s, side="right")) - 1
    e = min(max(e, 0), len(loop.lens) - 1)
    return loop.vec[e] / loop.lens[e]


def cursor_advance(slice_: PartSlice, c: BoundaryCursor,
                   ds: float) -> BoundaryCursor:
    perim = slice_.loops[c.loop_id].perimeter
    return BoundaryCursor(c.loop_id, (c.arc_length + ds) % perim)


def arc_distance(slice_: PartSlice, loop_id: int, s1: float,
                 s2: float) -> float:
    """Shortest cyclic arc distance between two positions on one loop."""
    perim = slice_.loops[loop_id].perimeter
    d = abs(s1 - s2) % perim
    return min(d, perim - d)


def segment_hits(slice_: PartSlice, a, b, loop_ids=None):
    """First boundary intersection of segment a->b, or None.

    Returns (loop_id, hit_point) for the crossing with the smallest
    parameter from a. Passing within BOUNDARY_TOL of a loop vertex counts
    as a hit at that vertex.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    r = b - a
    rlen = float(np.hypot(*r))
    if rlen <= 0.0:
        return None
    best_t = None
    best = None
    ids = range(len(slice_.loops)) if loop_ids is None else loop_ids
    for loop_id in ids:
        loop = slice_.loops[loop_id]
        qp = loop.a - a[None, :]
        denom = r[0] * loop.vec[:, 1] - r[1] * loop.vec[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qp[:, 0] * loop.vec[:, 1] - qp[:, 1] * loop.vec[:, 0]) / denom
            u = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / denom
        ok = (np.abs(denom) > 1e-15) & (t >= -BOUNDARY_TOL / rlen) & \
            (t <= 1.0 + BOUNDARY_TOL / rlen) & (u >= 0.0) & (u <= 1.0)
        if np.any(ok):
            i = int(np.argmin(np.where(ok, t, np.inf)))
            ti = float(np.clip(t[i], 0.0, 1.0))
            if best_t is None or ti < best_t:
                best_t = ti
                best = (loop_id, a + ti * r)
        # vertex tangency within tolerance
        dv = loop.pts - a[None, :]
        tv = np.clip((dv @ r) / (rlen * rlen), 0.0, 1.0)
        proj = a[None, :] + tv[:, None] * r[None, :]
        dd = np.hypot(*(loop.pts - proj).T)
        near = dd <= BOUNDARY_TOL
        if np.any(near):
            i = int(np.argmin(np.where(near, tv, np.inf)))
            if best_t is None or tv[i] < best_t:
                best_t = float(tv[i])
                best = (loop_id, loop.pts[i].copy())
    return best


def point_to_polyline_distances(pts: np.ndarray, q: np.ndarray,
                                chunk: int = 200_000) -> np.ndarray:
    """Distance from each point to the nearest point of polyline q."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if len(q) == 1:
        return np.hypot(*(pts - q[0]).T)
    a = q[:-1]
    vec = q[1:] - a
    rr = np.maximum(np.sum(vec * vec, axis=1), 1e-300)
    out = np.empty(len(pts))
    step = max(1, chunk // max(1, len(a)))
    for s in range(0, len(pts), step):
        block = pts[s:s + step]
        d = block[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mev,ev->me", d, vec) / rr, 0.0, 1.0)
        diff = d - t[:, :, None] * vec[None, :, :]
        out[s:s + step] = np.hypot(diff[..., 0], diff[..., 1]).min(axis=1)
    return out


def polyline_pair_min_distance(p, q) -> np.ndarray:
    """Per-point distances from polyline p to the nearest segment of q."""
    return point_to_polyline_distances(np.asarray(p, dtype=float),
                                       np.asarray(q, dtype=float))


def circle_polygon(center, radius: float, chord_tol: float = DEFAULT_CHORD_TOL,
                   clockwise: bool = True) -> np.ndarray:
    """Polygonize a circle so the sagitta stays below chord_tol."""
    if radius <= 0:
        raise ValidationError("circle radius must be positive",
                              module="geometry", operation="circle_polygon")
    tol = min(chord_tol, radius * 0.5)
    n = max(12, int(math.ceil(math.pi / math.acos(1.0 - tol / radius))))
    ang = np.arange(n) * (2.0 * math.pi / n)
    if clockwise:
        ang = -ang
    cx, cy = center
    return np.column_stack((cx + radius * np.cos(ang),
                            cy + radius * np.sin(ang)))


def make_open_hole_specimen(length: float = 150.0, width: float = 36.0,
                            hole_diameter: float = 6.0,
                            chord_tol: float = DEFAULT_CHORD_TOL) -> PartSlice:
    """Open-hole tensile specimen: length x width rectangle, centered hole."""
    outer = [(0.0, 0.0), (length, 0.0), (length, width), (0.0, width)]
    hole = circle_polygon((length / 2.0, width / 2.0), hole_diameter / 2.0,
                          chord_tol=chord_tol, clockwise=True)
    return PartSlice(outer, [hole])


def load_part(path) -> PartSlice:
    """Load a part from JSON: {"outer": [[x,y],...], "holes": [...], "units": "mm"}."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}",
                         module="geometry", operation="load_part") from e
    if not isinstance(doc, dict) or "outer" not in doc:
        raise ValidationError(f"{path}: missing 'outer' loop",
                              module="geometry", operation="load_part")
    units = doc.get("units", "mm")
    if units != "mm":
        raise ValidationError(f"{path}: unsupported units {units!r}",
                              module="geometry", operation="load_part")
    return PartSlice(doc["outer"], doc.get("holes", []))


def save_part(slice_: PartSlice, path) -> None:
    doc = {"outer": slice_.outer.tolist(),
           "holes": [h.tolist() for h in slice_.holes],
           "units": "mm"}
    with open(path, "w") as fh:
        json.dump(doc, fh)
