"""Principal stress fields: grid-sampled FEA exports and the analytic
open-hole (Kirsch) plane-stress solution.

A field answers one question: what is the dominant in-plane principal
stress at a point? The answer is a direction (a line, not an orientation;
canonicalized so its first nonzero component is >= 0) and a nonnegative
magnitude. Consumers must be invariant to a global sign flip of the input.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateField, ParseError, QueryOutsideDomain

MASS_FLOOR = 1e-6


@dataclass(frozen=True)
class StressSample:
    """Unit principal direction plus nonnegative magnitude at one point."""

    direction: np.ndarray
    magnitude: float


def canonicalize(vecs: np.ndarray) -> np.ndarray:
    """Flip vectors so the first nonzero component is nonnegative."""
    vecs = np.array(vecs, dtype=float, copy=True)
    single = vecs.ndim == 1
    if single:
        vecs = vecs[None, :]
    flip = (vecs[:, 0] < 0) | ((vecs[:, 0] == 0) & (vecs[:, 1] < 0))
    vecs[flip] *= -1.0
    return vecs[0] if single else vecs


def _principal_of_tensor(sxx, syy, sxy):
    """Dominant principal value/direction of symmetric 2x2 tensors."""
    avg = 0.5 * (sxx + syy)
    dif = 0.5 * (sxx - syy)
    rad = np.hypot(dif, sxy)
    lam1 = avg + rad
    lam2 = avg - rad
    lam = np.where(np.abs(lam1) >= np.abs(lam2), lam1, lam2)
    # eigenvector candidates; pick the better-conditioned construction
    v_a = np.stack((sxy, lam - sxx), axis=-1)
    v_b = np.stack((lam - syy, sxy), axis=-1)
    na = np.hypot(v_a[:, 0], v_a[:, 1])
    nb = np.hypot(v_b[:, 0], v_b[:, 1])
    v = np.where((na >= nb)[:, None], v_a, v_b)
    n = np.maximum(np.hypot(v[:, 0], v[:, 1]), 1e-300)
    dirs = v / n[:, None]
    # isotropic tensors have no preferred direction; fix one deterministically
    iso = np.maximum(na, nb) <= 1e-12 * np.maximum(np.abs(lam), 1.0)
    dirs[iso] = (1.0, 0.0)
    mags = np.abs(lam)
    dirs = canonicalize(dirs)
    dirs[mags == 0.0] = 0.0
    return dirs, mags


@dataclass(frozen=True)
class UniformField:
    """Constant stress vector everywhere; mostly a test and baseline field."""

    vector: tuple

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        if v.shape != (2,):
            raise DegenerateField("uniform field needs a 2-vector",
                                  module="stress_field", operation="init")
        object.__setattr__(self, "vector", (float(v[0]), float(v[1])))

    @property
    def max_magnitude(self) -> float:
        return float(np.hypot(*self.vector))

    def sample_many(self, pts: np.ndarray):
        pts = np.atleast_2d(pts)
        mag = self.max_magnitude
        if mag == 0.0:
            return np.zeros((len(pts), 2)), np.zeros(len(pts))
        d = canonicalize(np.asarray(self.vector) / mag)
        return np.tile(d, (len(pts), 1)), np.full(len(pts), mag)

    def domain_mask(self, pts: np.ndarray) -> np.ndarray:
        return np.ones(len(np.atleast_2d(pts)), dtype=bool)

    def describe(self) -> dict:
        return {"kind": "uniform", "vector": list(self.vector)}


@dataclass(frozen=True)
class KirschField:
    """Infinite plate with a circular hole under remote uniaxial tension.

    far_stress is the remote stress magnitude (> 0) applied along
    load_angle (radians from +x). Queries inside the hole are invalid;
    queries within rim_tol of the rim are clamped onto the rim so that
    polygonized-hole boundary points remain sampleable.
    """

    far_stress: float
    hole_radius: float
    hole_center: tuple
    load_angle: float = 0.0
    rim_tol: float = 0.05
    sign: float = 1.0

    def __post_init__(self):
        if self.far_stress <= 0:
            raise DegenerateField("far_stress must be positive",
                                  module="stress_field", operation="init")
        if self.hole_radius <= 0:
            raise DegenerateField("hole_radius must be positive",
                                  module="stress_field", operation="init")
        c = np.asarray(self.hole_center, dtype=float)
        object.__setattr__(self, "hole_center", (float(c[0]), float(c[1])))

    @property
    def max_magnitude(self) -> float:
        # stress concentration factor 3 at the rim
        return 3.0 * self.far_stress

    def sample_many(self, pts: np.ndarray):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rel = pts - np.asarray(self.hole_center)
        ca, sa = np.cos(self.load_angle), np.sin(self.load_angle)
        x = rel[:, 0] * ca + rel[:, 1] * sa
        y = -rel[:, 0] * sa + rel[:, 1] * ca
        r = np.hypot(x, y)
        a = self.hole_radius
        bad = r < a - self.rim_tol
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise QueryOutsideDomain(
                f"point {pts[i].tolist()} lies inside the hole",
                module="stress_field", operation="sample")
        r = np.maximum(r, a)
        theta = np.arctan2(y, x)
        rho = (a / r) ** 2
        c2 = np.cos(2.0 * theta)
        s2 = np.sin(2.0 * theta)
        s = self.far_stress * self.sign
        srr = 0.5 * s * (1.0 - rho) + 0.5 * s * (1.0 - 4.0 * rho + 3.0 * rho ** 2) * c2
        stt = 0.5 * s * (1.0 + rho) - 0.5 * s * (1.0 + 3.0 * rho ** 2) * c2
        srt = -0.5 * s * (1.0 + 2.0 * rho - 3.0 * rho ** 2) * s2
        ct, st = np.cos(theta), np.sin(theta)
        sxx = srr * ct ** 2 + stt * st ** 2 - 2.0 * srt * st * ct
        syy = srr * st ** 2 + stt * ct ** 2 + 2.0 * srt * st * ct
        sxy = (srr - stt) * st * ct + srt * (ct ** 2 - st ** 2)
        # rotate tensor back into part coordinates
        gxx = sxx * ca ** 2 + syy * sa ** 2 - 2.0 * sxy * ca * sa
        gyy = sxx * sa ** 2 + syy * ca ** 2 + 2.0 * sxy * ca * sa
        gxy = (sxx - syy) * ca * sa + sxy * (ca ** 2 - sa ** 2)
        return _principal_of_tensor(gxx, gyy, gxy)

    def domain_mask(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rel = pts - np.asarray(self.hole_center)
        return np.hypot(rel[:, 0], rel[:, 1]) >= self.hole_radius - self.rim_tol

    def describe(self) -> dict:
        return {"kind": "kirsch", "far_stress": self.far_stress,
                "hole_radius": self.hole_radius,
                "hole_center": list(self.hole_center),
                "load_angle": self.load_angle}


class GridField:
    """Scattered stress vectors interpolated over their Delaunay triangulation.

    Node vectors carry the 180-degree orientation ambiguity, so naive
    averaging can cancel to zero; within each triangle the second and third
    vertex vectors are flipped into the half-plane of the first before
    blending.
    """

    def __init__(self, points, vectors):
        from scipy.spatial import Delaunay

        pts = np.asarray(points, dtype=float)
        vecs = np.asarray(vectors, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape != vecs.shape:
            raise DegenerateField("points and vectors must be (n, 2)",
                                  module="stress_field", operation="init")
        if len(pts) < 3:
            raise DegenerateField("need at least 3 nodes",
                                  module="stress_field", operation="init")
        centered = pts - pts.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-9) < 2:
            raise DegenerateField("nodes are collinear",
                                  module="stress_field", operation="init")
        mags = np.hypot(vecs[:, 0], vecs[:, 1])
        if not np.any(mags > 0):
            raise DegenerateField("all node vectors are zero",
                                  module="stress_field", operation="init")
        self.points = pts
        self.vectors = vecs
        self.max_magnitude = float(mags.max())
        self._tri = Delaunay(pts)

    def sample_many(self, pts: np.ndarray):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        simplex = self._tri.find_simplex(pts)
        if np.any(simplex < 0):
            i = int(np.flatnonzero(simplex < 0)[0])
            raise QueryOutsideDomain(
                f"point {pts[i].tolist()} is outside the node hull",
                module="stress_field", operation="sample")
        trans = self._tri.transform[simplex]
        bary = np.einsum("nij,nj->ni", trans[:, :2], pts - trans[:, 2])
        w = np.concatenate((bary, 1.0 - bary.sum(axis=1, keepdims=True)),
                           axis=1)
        verts = self._tri.simplices[simplex]
        vv = self.vectors[verts]                      # (n, 3, 2)
        ref = vv[:, 0, :]
        for k in (1, 2):
            dot = np.einsum("ni,ni->n", vv[:, k, :], ref)
            vv[:, k, :] = np.where((dot < 0)[:, None], -vv[:, k, :],
                                   vv[:, k, :])
        blend = np.einsum("nk,nki->ni", w, vv)
        mags = np.hypot(blend[:, 0], blend[:, 1])
        dirs = np.zeros_like(blend)
        ok = mags > 0
        dirs[ok] = canonicalize(blend[ok] / mags[ok, None])
        return dirs, mags

    def domain_mask(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self._tri.find_simplex(pts) >= 0

    def describe(self) -> dict:
        return {"kind": "grid", "nodes": len(self.points)}


def sample(field, p) -> StressSample:
    """Dominant in-plane principal stress at one point."""
    dirs, mags = field.sample_many(np.asarray(p, dtype=float)[None, :])
    return StressSample(direction=dirs[0], magnitude=float(mags[0]))


def virtual_mass(field, smp: StressSample) -> float:
    """Stress magnitude normalized by the field maximum, clamped to [1e-6, 1]."""
    return float(np.clip(smp.magnitude / field.max_magnitude,
                         MASS_FLOOR, 1.0))


def virtual_mass_many(field, mags: np.ndarray) -> np.ndarray:
    return np.clip(mags / field.max_magnitude, MASS_FLOOR, 1.0)


def sample_many_guarded(field, pts: np.ndarray):
    """Like sample_many but out-of-domain points become zero-magnitude samples.

    Returns (dirs, mags, ok_mask). Used where trajectories may graze the
    domain edge (hole rims, grid hulls, slight far-edge overshoot).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    ok = field.domain_mask(pts)
    if np.all(ok):
        dirs, mags = field.sample_many(pts)
        return dirs, mags, ok
    dirs = np.zeros((len(pts), 2))
    mags = np.zeros(len(pts))
    if np.any(ok):
        dirs[ok], mags[ok] = field.sample_many(pts[ok])
    return dirs, mags, ok


def negated(field):
    """The same field with every raw stress vector negated."""
    if isinstance(field, UniformField):
        return UniformField((-field.vector[0], -field.vector[1]))
    if isinstance(field, KirschField):
        return dataclasses.replace(field, sign=-field.sign)
    if isinstance(field, GridField):
        return GridField(field.points, -field.vectors)
    raise TypeError(f"cannot negate field of type {type(field).__name__}")


def load_grid_field(path) -> GridField:
    """Load a CSV stress export: header x,y,sx,sy; '#' starts a comment."""
    pts = []
    vecs = []
    header_seen = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                cols = [c.strip().lower() for c in line.split(",")]
                if cols != ["x", "y", "sx", "sy"]:
                    raise ParseError(
                        f"{path}: line {lineno}: expected header x,y,sx,sy",
                        module="stress_field", operation="load_grid_field")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(
                    f"{path}: line {lineno}: expected 4 comma-separated "
                    f"values, got {len(parts)}",
                    module="stress_field", operation="load_grid_field")
            try:
                x, y, sx, sy = (float(v) for v in parts)
            except ValueError:
                raise ParseError(
                    f"{path}: line {lineno}: non-numeric token",
                    module="stress_field",
                    operation="load_grid_field") from None
            pts.append((x, y))
            vecs.append((sx, sy))
    if not header_seen:
        raise ParseError(f"{path}: missing header x,y,sx,sy",
                         module="stress_field", operation="load_grid_field")
    return GridField(pts, vecs)
