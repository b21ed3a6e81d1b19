"""Trajectory quality metrics, baseline infills, and the timing benchmark.

Metrics: stress-alignment score (mass-weighted mean absolute cosine between
print direction and principal-stress direction), spacing distribution against
the linked successor trace, and transversal crossing detection. Baselines:
aligned rectilinear and single-layer cross-hatch infills clipped to the part,
for comparison against the swarm output. The benchmark times end-to-end
generation with the engine's per-phase breakdown.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import engine, geometry, stress
from .errors import EmptyTrajectorySet, SingleTrace, ValidationError

ENDPOINT_TOL = 1e-6


# -- reports -----------------------------------------------------------------

@dataclass
class AlignmentReport:
    """Mass-weighted mean |cos| between print and stress directions."""

    beta_bar: float
    point_count: int
    samples: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"beta_bar": self.beta_bar, "point_count": self.point_count}


@dataclass
class SpacingReport:
    """Distribution of point-to-successor-trace distances, normalized by l."""

    normalized_distances: np.ndarray
    variance: float
    histogram: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "variance": self.variance,
            "count": int(len(self.normalized_distances)),
            "mean": float(np.mean(self.normalized_distances)),
            "histogram": [
                {"bin_left": lo, "bin_right": hi, "count": int(n)}
                for lo, hi, n in self.histogram],
        }

    def histogram_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count"])
            for lo, hi, n in self.histogram:
                w.writerow([repr(lo), repr(hi), int(n)])


@dataclass(frozen=True)
class BaselineKind:
    """Baseline infill style: parallel lines at a fixed angle and spacing."""

    spacing: float
    angle_deg: float | None = None   # None = along the part's long side

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValidationError("spacing must be positive",
                                  module="analysis", operation="baseline")

    @classmethod
    def aligned_rectilinear(cls, spacing: float) -> "BaselineKind":
        return cls(spacing=spacing, angle_deg=None)

    @classmethod
    def cross_hatch(cls, angle_deg: float, spacing: float) -> "BaselineKind":
        return cls(spacing=spacing, angle_deg=float(angle_deg))

    @property
    def kind(self) -> str:
        return ("aligned_rectilinear" if self.angle_deg is None
                else "cross_hatch")


# -- alignment ---------------------------------------------------------------

def _print_directions(pts: np.ndarray) -> np.ndarray:
    """Per-point print direction: normalized average of incident chords.

    End points use their single chord. A degenerate averaged chord (exact
    reversal) falls back to the incoming chord.
    """
    chords = np.diff(pts, axis=0)
    norms = np.hypot(chords[:, 0], chords[:, 1])
    norms[norms == 0.0] = 1.0
    unit = chords / norms[:, None]
    dirs = np.empty_like(pts)
    dirs[0] = unit[0]
    dirs[-1] = unit[-1]
    if len(pts) > 2:
        avg = unit[:-1] + unit[1:]
        an = np.hypot(avg[:, 0], avg[:, 1])
        bad = an < 1e-12
        avg[bad] = unit[:-1][bad]
        an[bad] = 1.0
        dirs[1:-1] = avg / an[:, None]
    return dirs


def alignment_beta(traj: engine.TrajectorySet, field_) -> AlignmentReport:
    """Stress-magnitude-weighted mean |cos| over all trajectory points."""
    pts = []
    pdirs = []
    for tr in traj.traces:
        p = tr.array()
        if len(p) < 2:
            continue
        pts.append(p)
        pdirs.append(_print_directions(p))
    if not pts:
        raise EmptyTrajectorySet("no trajectories with at least two points",
                                 module="analysis",
                                 operation="alignment_beta")
    pts = np.vstack(pts)
    pdirs = np.vstack(pdirs)
    sdirs, mags, ok = stress.sample_many_guarded(field_, pts)
    weights = np.where(ok & (mags > 0.0),
                       stress.virtual_mass_many(field_, mags), 0.0)
    wsum = float(np.sum(weights))
    if wsum <= 0.0:
        raise EmptyTrajectorySet("field magnitude is zero at every point",
                                 module="analysis",
                                 operation="alignment_beta")
    samples = np.abs(np.einsum("ni,ni->n", sdirs, pdirs))
    beta = float(np.sum(weights * samples) / wsum)
    return AlignmentReport(beta_bar=beta, point_count=len(pts),
                           samples=samples)


# -- spacing -----------------------------------------------------------------

def _histogram(values: np.ndarray, bins: int = 40) -> list:
    hi = max(2.0, float(np.max(values)) if len(values) else 2.0)
    counts, edges = np.histogram(values, bins=bins, range=(0.0, hi))
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(bins)]


def spacing_report(traj: engine.TrajectorySet, l: float) -> SpacingReport:
    """Per-point distance to the linked successor trace, normalized by l.

    The successor of each point is the trace recorded as the adjacency
    neighbor when the point was laid down.
    """
    if l <= 0:
        raise ValidationError("l must be positive", module="analysis",
                              operation="spacing_report")
    if not traj.traces:
        raise EmptyTrajectorySet("no trajectories", module="analysis",
                                 operation="spacing_report")
    by_id = {tr.id: tr for tr in traj.traces if len(tr.points) >= 2}
    out = []
    for tr in traj.traces:
        p = tr.array()
        if len(p) < 2:
            continue
        succ = np.asarray(tr.succ if len(tr.succ) == len(p)
                          else [-1] * len(p))
        for sid in np.unique(succ):
            if sid < 0 or sid not in by_id:
                continue
            mask = succ == sid
            d = geometry.point_to_polyline_distances(
                p[mask], by_id[sid].array())
            out.append(d)
    if not out:
        raise SingleTrace("no trace has a successor to measure against",
                          module="analysis", operation="spacing_report")
    norm = np.concatenate(out) / l
    variance = float(np.mean((norm - np.mean(norm)) ** 2))
    return SpacingReport(normalized_distances=norm, variance=variance,
                         histogram=_histogram(norm))


# -- crossings ---------------------------------------------------------------

def crossing_count(traj: engine.TrajectorySet) -> int:
    """Transversal intersections between segments of distinct traces.

    Contacts within ENDPOINT_TOL of a segment endpoint (traces touching or
    joining end to end) do not count; neither do parallel overlaps.
    """
    seg_a = []
    seg_b = []
    seg_trace = []
    for tr in traj.traces:
        p = tr.array()
        if len(p) < 2:
            continue
        seg_a.append(p[:-1])
        seg_b.append(p[1:])
        seg_trace.append(np.full(len(p) - 1, tr.id))
    if not seg_a:
        return 0
    a = np.vstack(seg_a)
    b = np.vstack(seg_b)
    owner = np.concatenate(seg_trace)
    n = len(a)
    lens = np.hypot(*(b - a).T)
    cell = max(float(np.max(lens)), 1e-9)
    grid: dict = {}
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    ilo = np.floor(lo / cell).astype(int)
    ihi = np.floor(hi / cell).astype(int)
    for i in range(n):
        for cx in range(ilo[i, 0], ihi[i, 0] + 1):
            for cy in range(ilo[i, 1], ihi[i, 1] + 1):
                grid.setdefault((cx, cy), []).append(i)
    count = 0
    seen = set()
    for bucket in grid.values():
        m = len(bucket)
        for ii in range(m):
            i = bucket[ii]
            for jj in range(ii + 1, m):
                j = bucket[jj]
                if owner[i] == owner[j]:
                    continue
                key = (i, j) if i < j else (j, i)
                if key in seen:
                    continue
                seen.add(key)
                if _transversal(a[i], b[i], a[j], b[j]):
                    count += 1
    return count


def _transversal(p, p2, q, q2) -> bool:
    r = p2 - p
    s = q2 - q
    denom = float(r[0] * s[1] - r[1] * s[0])
    scale = max(float(np.hypot(*r)) * float(np.hypot(*s)), 1e-300)
    if abs(denom) <= 1e-12 * scale:
        return False
    qp = q - p
    t = float(qp[0] * s[1] - qp[1] * s[0]) / denom
    u = float(qp[0] * r[1] - qp[1] * r[0]) / denom
    if not (0.0 <= t <= 1.0 and 0.0 <= u <= 1.0):
        return False
    x = p + t * r
    for e in (p, p2, q, q2):
        if float(np.hypot(*(x - e))) <= ENDPOINT_TOL:
            return False
    return True


# -- baselines ---------------------------------------------------------------

def generate_baseline(slice_: geometry.PartSlice,
                      kind: BaselineKind) -> engine.TrajectorySet:
    """Parallel-line infill clipped to the part, holes subtracted.

    Lines run along the long side of the bounding box (aligned rectilinear)
    or at the requested angle (cross-hatch, single layer). Offsets start
    half a spacing in from the low edge; traces are ordered by signed
    offset, and each trace's recorded successor is the first trace of the
    next offset, so spacing metrics apply unchanged.
    """
    allpts = np.vstack([lp.pts for lp in slice_.loops])
    if kind.angle_deg is None:
        w = np.ptp(allpts[:, 0])
        hgt = np.ptp(allpts[:, 1])
        ang = 0.0 if w >= hgt else 90.0
    else:
        ang = kind.angle_deg
    d = np.array([math.cos(math.radians(ang)), math.sin(math.radians(ang))])
    nrm = np.array([-d[1], d[0]])
    offs = allpts @ nrm
    o_min, o_max = float(np.min(offs)), float(np.max(offs))
    ts = allpts @ d
    t_lo, t_hi = float(np.min(ts)) - 1.0, float(np.max(ts)) + 1.0

    traces = []
    groups = []          # trace ids per offset line, in offset order
    o = o_min + kind.spacing / 2.0
    tid = 0
    while o <= o_max + 1e-9:
        base = o * nrm
        cuts = _line_cuts(slice_, base, d, t_lo, t_hi)
        ids_here = []
        for ta, tb in cuts:
            p0 = base + ta * d
            p1 = base + tb * d
            npts = max(2, int(math.ceil((tb - ta) / kind.spacing)) + 1)
            pts = np.linspace(p0, p1, npts)
            tr = engine.Trace(id=tid, born_iter=0,
                              points=[q for q in pts],
                              masses=[None] * npts,
                              succ=[-1] * npts)
            traces.append(tr)
            ids_here.append(tid)
            tid += 1
        if ids_here:
            groups.append(ids_here)
        o += kind.spacing
    for g, g_next in zip(groups[:-1], groups[1:]):
        for t_id in g:
            tr = traces[t_id]
            tr.succ = [g_next[0]] * len(tr.points)
    config = {"baseline": kind.kind, "spacing": kind.spacing,
              "angle_deg": ang}
    return engine.TrajectorySet(traces=traces, events=[], config=config,
                                l=kind.spacing)


def _line_cuts(slice_: geometry.PartSlice, base, d, t_lo, t_hi):
    """In-part parameter intervals of the line base + t*d."""
    ts = []
    for lp in slice_.loops:
        a = lp.a
        v = lp.vec
        # solve base + t*d = a + u*v for each edge
        denom = d[0] * v[:, 1] - d[1] * v[:, 0]
        w = a - base
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (w[:, 0] * v[:, 1] - w[:, 1] * v[:, 0]) / denom
            u = (w[:, 1] * d[0] - w[:, 0] * d[1]) / -denom
        ok = (np.abs(denom) > 1e-15) & (u >= 0.0) & (u < 1.0)
        ts.extend(t[ok].tolist())
    ts = sorted(t for t in ts if t_lo <= t <= t_hi)
    cuts = []
    for ta, tb in zip(ts[:-1], ts[1:]):
        if tb - ta <= 1e-9:
            continue
        mid = base + 0.5 * (ta + tb) * d
        if geometry.contains(slice_, mid):
            cuts.append((ta, tb))
    return cuts


# -- coverage ----------------------------------------------------------------

def coverage_fraction(slice_: geometry.PartSlice,
                      traj: engine.TrajectorySet, l: float,
                      grid_step: float = 0.2,
                      reach_factor: float = 1.5) -> float:
    """Fraction of interior grid points within reach_factor*l of a trace."""
    from scipy.spatial import cKDTree

    allpts = np.vstack([lp.pts for lp in slice_.loops])
    xs = np.arange(allpts[:, 0].min(), allpts[:, 0].max() + grid_step / 2,
                   grid_step)
    ys = np.arange(allpts[:, 1].min(), allpts[:, 1].max() + grid_step / 2,
                   grid_step)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts = pts[geometry.contains_many(slice_, pts)]
    if len(pts) == 0:
        return 1.0
    dense = []
    for tr in traj.traces:
        p = tr.array()
        if len(p) < 2:
            continue
        for s, e in zip(p[:-1], p[1:]):
            seg = float(np.hypot(*(e - s)))
            k = max(1, int(math.ceil(seg / grid_step)))
            dense.append(s + np.outer(np.arange(k), (e - s) / k))
        dense.append(p[-1:])
    if not dense:
        return 0.0
    tree = cKDTree(np.vstack(dense))
    dist, _ = tree.query(pts, k=1)
    return float(np.mean(dist <= reach_factor * l))


# -- benchmark ---------------------------------------------------------------

def benchmark(slice_: geometry.PartSlice, field_, config: dict,
              repetitions: int = 5) -> dict:
    """Median/min/max wall time of full generation plus phase breakdown.

    Generation itself is sequential; nothing here spawns workers, so the
    numbers are comparable across machines at equal clock speed.
    """
    if repetitions < 3:
        raise ValidationError("repetitions must be at least 3",
                              module="analysis", operation="benchmark")
    cfg = dict(config)
    seed_edge = cfg.pop("seed_edge")
    samples = []
    phase_rows = []
    result = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        result = engine.run(slice_, field_, seed_edge, **cfg)
        samples.append(time.perf_counter() - t0)
        phase_rows.append(dict(result.timings))
    phases = {}
    for name in phase_rows[0]:
        phases[name] = statistics.median(row[name] for row in phase_rows)
    return {
        "samples": samples,
        "median": statistics.median(samples),
        "min": min(samples),
        "max": max(samples),
        "phases": phases,
        "repetitions": repetitions,
        "iterations": result.iterations,
        "trace_count": len(result.traces),
    }


def save_report(report, path) -> None:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")
