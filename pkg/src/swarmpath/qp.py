"""Box-constrained convex QP solver for the per-iteration repositioning step.

minimize 0.5 x'Hx + q'x + c  subject to  lower <= x <= upper

H is symmetric PSD and banded (the swarm couples consecutive agents only,
so bandwidth is small). The algorithm alternates a projected-gradient
Cauchy step with exact line search on the feasible segment and a Newton
refinement on the free variable set, using a banded Cholesky factorization.
Both steps are deterministic; convergence is declared on the projected
gradient KKT residual.

A compiled extension (`swarmpath._qpcore`) provides the same iteration in C;
the pure numpy path below is the fallback and the reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverFailure, ValidationError

try:
    from . import _qpcore
except ImportError:                       # pure-python install
    _qpcore = None

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITER = 10000

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max_iter"


def default_backend() -> str:
    return "python" if _qpcore is None else "compiled"


def available_backends() -> tuple:
    return ("python",) if _qpcore is None else ("compiled", "python")


@dataclass
class BoxQp:
    """0.5 x'Hx + q'x + const over a box; H given in banded lower storage.

    band[d, j] = H[j + d, j] for d = 0..bw; entries past the matrix edge
    are zero. `const` does not affect the argmin but makes objectives
    comparable across problems of different dimension.
    """

    band: np.ndarray
    linear: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        self.band = np.ascontiguousarray(self.band, dtype=float)
        self.linear = np.ascontiguousarray(self.linear, dtype=float)
        self.lower = np.ascontiguousarray(self.lower, dtype=float)
        self.upper = np.ascontiguousarray(self.upper, dtype=float)
        n = self.dim
        if self.band.ndim != 2 or self.band.shape[1] != n:
            raise ValidationError("band must be (bw+1, dim)",
                                  module="qp_solver", operation="init")
        for arr, name in ((self.lower, "lower"), (self.upper, "upper")):
            if arr.shape != (n,):
                raise ValidationError(f"{name} must have length {n}",
                                      module="qp_solver", operation="init")
        if not (np.all(np.isfinite(self.lower))
                and np.all(np.isfinite(self.upper))):
            raise ValidationError("bounds must be finite",
                                  module="qp_solver", operation="init")
        if np.any(self.lower > self.upper):
            raise ValidationError("lower > upper",
                                  module="qp_solver", operation="init")

    @property
    def dim(self) -> int:
        return len(self.linear)

    @property
    def bandwidth(self) -> int:
        return self.band.shape[0] - 1

    @classmethod
    def from_dense(cls, quadratic, linear, lower, upper, const=0.0):
        h = np.asarray(quadratic, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValidationError("quadratic must be square",
                                  module="qp_solver", operation="from_dense")
        if np.max(np.abs(h - h.T)) > 1e-12 * max(1.0, np.max(np.abs(h))):
            raise ValidationError("quadratic must be symmetric",
                                  module="qp_solver", operation="from_dense")
        h = 0.5 * (h + h.T)
        n = h.shape[0]
        bw = 0
        for d in range(n - 1, 0, -1):
            if np.any(np.diag(h, -d) != 0.0):
                bw = d
                break
        band = np.zeros((bw + 1, n))
        for d in range(bw + 1):
            band[d, :n - d] = np.diag(h, -d)
        return cls(band, np.asarray(linear, dtype=float),
                   np.asarray(lower, dtype=float),
                   np.asarray(upper, dtype=float), const)

    def dense(self) -> np.ndarray:
        n = self.dim
        h = np.zeros((n, n))
        for d in range(self.band.shape[0]):
            idx = np.arange(n - d)
            h[idx + d, idx] = self.band[d, :n - d]
            h[idx, idx + d] = self.band[d, :n - d]
        return h

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.band[0] * x
        n = self.dim
        for d in range(1, self.band.shape[0]):
            y[d:] += self.band[d, :n - d] * x[:n - d]
            y[:n - d] += self.band[d, :n - d] * x[d:]
        return y

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.matvec(x) + self.linear @ x + self.const)


@dataclass
class QpSolution:
    x: np.ndarray
    objective: float
    status: str
    kkt_residual: float
    iterations: int = 0
    backend: str = field(default="python")


def _free_newton_step(qp: BoxQp, x, g, eps):
    """Newton direction on the free set via banded Cholesky; None if empty."""
    from scipy.linalg import solveh_banded

    at_lo = x <= qp.lower + eps
    at_up = x >= qp.upper - eps
    free = ~((at_lo & (g > 0.0)) | (at_up & (g < 0.0)))
    free &= qp.upper - qp.lower > eps
    if not np.any(free):
        return None, None
    fidx = np.flatnonzero(free)
    nf = len(fidx)
    full_bw = qp.bandwidth
    bw = min(full_bw, nf - 1)
    sub = np.zeros((bw + 1, nf))
    for a in range(nf):
        fa = fidx[a]
        sub[0, a] = qp.band[0, fa]
        for d in range(1, min(bw, nf - 1 - a) + 1):
            gap = fidx[a + d] - fa
            if gap <= full_bw:
                sub[d, a] = qp.band[gap, fa]
    rhs = -g[fidx]
    ridge = 1e-12 * max(1.0, float(np.max(sub[0])))
    for attempt in range(3):
        try:
            p = solveh_banded(sub, rhs, lower=True)
            break
        except np.linalg.LinAlgError:
            sub[0] += ridge
            ridge *= 1e4
    else:
        return None, None
    if not np.all(np.isfinite(p)):
        return None, None
    return fidx, p


def _solve_python(qp: BoxQp, x, tolerance, max_iter):
    lo, up, q = qp.lower, qp.upper, qp.linear
    eps = 1e-12 * (1.0 + float(np.max(np.abs(np.concatenate((lo, up))))))
    kkt = np.inf
    it = 0
    while it < max_iter:
        it += 1
        g = qp.matvec(x) + q
        xc = np.clip(x - g, lo, up)
        kkt = float(np.max(np.abs(xc - x))) if qp.dim else 0.0
        if kkt <= tolerance:
            return x, kkt, it, True
        # Cauchy step: exact minimizer on the feasible segment [x, xc]
        d = xc - x
        hd = qp.matvec(d)
        dhd = float(d @ hd)
        gd = float(g @ d)
        alpha = 1.0 if dhd <= 0.0 else min(1.0, -gd / dhd)
        x = np.clip(x + alpha * d, lo, up)
        # Newton refinement on the free set
        g = qp.matvec(x) + q
        fidx, p = _free_newton_step(qp, x, g, eps)
        if fidx is None:
            continue
        # longest step toward the box, capped at the full Newton step
        t = 1.0
        pos = p > 0.0
        neg = p < 0.0
        if np.any(pos):
            t = min(t, float(np.min((up[fidx][pos] - x[fidx][pos])
                                    / p[pos])))
        if np.any(neg):
            t = min(t, float(np.min((lo[fidx][neg] - x[fidx][neg])
                                    / p[neg])))
        if t > 0.0:
            x = x.copy()
            x[fidx] += t * p
            np.clip(x, lo, up, out=x)
    g = qp.matvec(x) + q
    kkt = float(np.max(np.abs(np.clip(x - g, lo, up) - x))) if qp.dim else 0.0
    return x, kkt, it, kkt <= tolerance


def solve(qp: BoxQp, tolerance: float = DEFAULT_TOLERANCE,
          max_iter: int = DEFAULT_MAX_ITER, warm_start=None,
          backend: str | None = None,
          raise_on_failure: bool = True) -> QpSolution:
    """Solve to the projected-gradient KKT tolerance.

    On hitting max_iter the best iterate is still returned inside the
    raised SolverFailure (or directly, with status max_iter, when
    raise_on_failure is false).
    """
    if tolerance <= 0:
        raise ValidationError("tolerance must be positive",
                              module="qp_solver", operation="solve")
    if backend is None:
        backend = default_backend()
    if backend not in available_backends():
        raise ValidationError(f"backend {backend!r} not available",
                              module="qp_solver", operation="solve")
    if warm_start is not None:
        x0 = np.clip(np.asarray(warm_start, dtype=float), qp.lower, qp.upper)
    else:
        x0 = np.clip(np.zeros(qp.dim), qp.lower, qp.upper)
    if qp.dim == 0:
        return QpSolution(x=x0, objective=qp.const, status=STATUS_OPTIMAL,
                          kkt_residual=0.0, iterations=0, backend=backend)
    if backend == "compiled":
        x, kkt, it, ok = _qpcore.solve_banded_boxqp(
            qp.band, qp.linear, qp.lower, qp.upper,
            np.ascontiguousarray(x0), tolerance, max_iter)
    else:
        x, kkt, it, ok = _solve_python(qp, x0.copy(), tolerance, max_iter)
    sol = QpSolution(x=np.asarray(x), objective=qp.objective(np.asarray(x)),
                     status=STATUS_OPTIMAL if ok else STATUS_MAX_ITER,
                     kkt_residual=kkt, iterations=it, backend=backend)
    if not ok and raise_on_failure:
        raise SolverFailure(
            f"no convergence in {max_iter} iterations "
            f"(kkt residual {kkt:.3e} > {tolerance:.3e})",
            solution=sol, module="qp_solver", operation="solve")
    return sol
