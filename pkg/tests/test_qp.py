"""Box-constrained QP solver: examples, oracle agreement, backend parity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmpath import qp
from swarmpath.errors import SolverFailure, ValidationError


def random_block_tridiagonal(rng, n_agents):
    """Random PSD box-QP with the engine's two-variables-per-agent band."""
    n = 2 * n_agents
    band = np.zeros((3, n))
    band[0] = rng.uniform(0.2, 5.0, size=n)
    if n > 2:
        coupling = rng.uniform(-1.0, 1.0, size=n - 2)
        band[2, :n - 2] = coupling
        # diagonal dominance guarantees positive semidefiniteness
        band[0, :n - 2] += np.abs(coupling)
        band[0, 2:] += np.abs(coupling)
    linear = rng.normal(scale=1.0, size=n)
    lo = rng.uniform(-1.0, 0.0, size=n)
    up = rng.uniform(0.0, 1.0, size=n)
    return qp.BoxQp(band=band, linear=linear, lower=lo, upper=up)


def oracle_objective(prob: qp.BoxQp, tolerance=1e-9, max_iter=500_000):
    """Independent long-run projected gradient with a 10x tighter tolerance.

    Dense numpy only: fixed step 1/L with L from an eigenvalue computation,
    entirely separate from the banded Cauchy/Newton iteration under test.
    """
    h = prob.dense()
    lof, upf = prob.lower, prob.upper
    lip = float(np.linalg.eigvalsh(h)[-1])
    step = 1.0 / max(lip, 1e-12)
    x = np.clip(np.zeros(prob.dim), lof, upf)
    for _ in range(max_iter):
        g = h @ x + prob.linear
        x_new = np.clip(x - step * g, lof, upf)
        if np.max(np.abs(np.clip(x - g, lof, upf) - x)) <= tolerance:
            break
        x = x_new
    return float(0.5 * x @ (h @ x) + prob.linear @ x + prob.const), x


def grid_refine_objective(prob: qp.BoxQp, rounds=14, pts=11):
    """Coordinate-wise grid refinement oracle for tiny dimensions."""
    h = prob.dense()

    def obj(x):
        return float(0.5 * x @ (h @ x) + prob.linear @ x + prob.const)

    x = 0.5 * (prob.lower + prob.upper)
    radius = 0.5 * (prob.upper - prob.lower)
    for _ in range(rounds):
        for j in range(prob.dim):
            grid = np.clip(np.linspace(x[j] - radius[j], x[j] + radius[j],
                                       pts),
                           prob.lower[j], prob.upper[j])
            vals = []
            for g in grid:
                y = x.copy()
                y[j] = g
                vals.append(obj(y))
            x[j] = grid[int(np.argmin(vals))]
        radius *= 0.35
    return obj(x)


# -- stated examples ------------------------------------------------------------

def test_clipped_unconstrained_optimum():
    # minimize (x - 1)^2 on [0, 0.5]  ->  x = 0.5, objective 0.25
    prob = qp.BoxQp.from_dense([[2.0]], [-2.0], [0.0], [0.5], const=1.0)
    sol = qp.solve(prob)
    assert sol.x[0] == pytest.approx(0.5, abs=1e-8)
    assert sol.objective == pytest.approx(0.25, abs=1e-8)
    assert sol.status == qp.STATUS_OPTIMAL


def test_interior_optimum():
    prob = qp.BoxQp.from_dense(2.0 * np.eye(2), [0.0, 0.0],
                               [-1.0, -1.0], [1.0, 1.0])
    sol = qp.solve(prob)
    assert sol.x == pytest.approx([0.0, 0.0], abs=1e-8)
    assert sol.objective == pytest.approx(0.0, abs=1e-12)


def test_oracle_agreement_random_six_dimensional():
    rng = np.random.default_rng(0)
    for _ in range(100):
        prob = random_block_tridiagonal(rng, 3)
        sol = qp.solve(prob)
        ref, _ = oracle_objective(prob)
        assert sol.objective == pytest.approx(ref, abs=1e-6)


def test_grid_refinement_oracle_small_problems():
    rng = np.random.default_rng(42)
    for _ in range(10):
        prob = random_block_tridiagonal(rng, 2)
        sol = qp.solve(prob)
        ref = grid_refine_objective(prob)
        assert sol.objective <= ref + 1e-6


# -- backend parity and bounds -----------------------------------------------------

def test_backends_agree_on_random_problems():
    rng = np.random.default_rng(1)
    backends = qp.available_backends()
    for _ in range(40):
        prob = random_block_tridiagonal(rng, int(rng.integers(1, 26)))
        objs = [qp.solve(prob, backend=b).objective for b in backends]
        assert max(objs) - min(objs) <= 1e-9 * max(1.0, abs(objs[0]))


def test_solution_respects_bounds():
    rng = np.random.default_rng(9)
    for _ in range(30):
        prob = random_block_tridiagonal(rng, int(rng.integers(1, 20)))
        sol = qp.solve(prob)
        assert np.all(sol.x >= prob.lower - 1e-9)
        assert np.all(sol.x <= prob.upper + 1e-9)
        if sol.status == qp.STATUS_OPTIMAL:
            assert sol.kkt_residual <= qp.DEFAULT_TOLERANCE


def test_objective_beats_projected_unconstrained_minimizer():
    rng = np.random.default_rng(3)
    for _ in range(30):
        prob = random_block_tridiagonal(rng, int(rng.integers(1, 12)))
        h = prob.dense()
        # positive-definite by diagonal dominance with positive diagonal
        xs = np.clip(np.linalg.solve(h + 1e-12 * np.eye(prob.dim),
                                     -prob.linear),
                     prob.lower, prob.upper)
        sol = qp.solve(prob)
        assert sol.objective <= prob.objective(xs) + 1e-9


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(1e-3, 1e3), seed=st.integers(0, 2 ** 31))
def test_scaling_covariance(scale, seed):
    rng = np.random.default_rng(seed)
    prob = random_block_tridiagonal(rng, 3)
    scaled = qp.BoxQp(band=prob.band * scale, linear=prob.linear * scale,
                      lower=prob.lower, upper=prob.upper,
                      const=prob.const * scale)
    x1 = qp.solve(prob).x
    x2 = qp.solve(scaled, tolerance=qp.DEFAULT_TOLERANCE * min(1.0, scale)).x
    assert x2 == pytest.approx(x1, abs=1e-5)


def test_warm_start_from_optimum_converges_immediately():
    rng = np.random.default_rng(7)
    prob = random_block_tridiagonal(rng, 10)
    cold = qp.solve(prob)
    warm = qp.solve(prob, warm_start=cold.x)
    assert warm.iterations <= cold.iterations
    assert warm.iterations == 1


# -- storage and validation ---------------------------------------------------------

def test_from_dense_band_roundtrip():
    rng = np.random.default_rng(12)
    prob = random_block_tridiagonal(rng, 4)
    dense = prob.dense()
    again = qp.BoxQp.from_dense(dense, prob.linear, prob.lower, prob.upper)
    assert np.allclose(again.dense(), dense)
    x = rng.normal(size=prob.dim)
    assert prob.matvec(x) == pytest.approx(dense @ x)


def test_from_dense_rejects_asymmetric():
    with pytest.raises(ValidationError, match="symmetric"):
        qp.BoxQp.from_dense([[1.0, 0.5], [0.0, 1.0]], [0, 0],
                            [-1, -1], [1, 1])


def test_invalid_bounds_rejected():
    with pytest.raises(ValidationError, match="lower > upper"):
        qp.BoxQp(np.ones((1, 1)), np.zeros(1), np.array([1.0]),
                 np.array([0.0]))
    with pytest.raises(ValidationError, match="finite"):
        qp.BoxQp(np.ones((1, 1)), np.zeros(1), np.array([-np.inf]),
                 np.array([0.0]))


def test_invalid_tolerance_and_backend():
    prob = qp.BoxQp.from_dense([[2.0]], [0.0], [-1.0], [1.0])
    with pytest.raises(ValidationError, match="tolerance"):
        qp.solve(prob, tolerance=0.0)
    with pytest.raises(ValidationError, match="backend"):
        qp.solve(prob, backend="gpu")


def test_max_iter_raises_with_best_iterate():
    rng = np.random.default_rng(5)
    prob = random_block_tridiagonal(rng, 20)
    with pytest.raises(SolverFailure) as exc:
        qp.solve(prob, max_iter=1, tolerance=1e-14)
    sol = exc.value.solution
    assert sol.status == qp.STATUS_MAX_ITER
    assert np.all(sol.x >= prob.lower - 1e-9)
    assert np.all(sol.x <= prob.upper + 1e-9)
    relaxed = qp.solve(prob, max_iter=1, tolerance=1e-14,
                       raise_on_failure=False)
    assert relaxed.status == qp.STATUS_MAX_ITER


def test_zero_dimensional_problem():
    prob = qp.BoxQp(np.zeros((1, 0)), np.zeros(0), np.zeros(0), np.zeros(0),
                    const=3.5)
    sol = qp.solve(prob)
    assert sol.objective == 3.5
    assert sol.status == qp.STATUS_OPTIMAL


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_solution_is_projected_gradient_fixed_point(seed):
    rng = np.random.default_rng(seed)
    prob = random_block_tridiagonal(rng, int(rng.integers(1, 15)))
    sol = qp.solve(prob)
    g = prob.matvec(sol.x) + prob.linear
    residual = np.max(np.abs(np.clip(sol.x - g, prob.lower, prob.upper)
                             - sol.x))
    assert residual <= qp.DEFAULT_TOLERANCE
