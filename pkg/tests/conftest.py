"""Shared fixtures: canonical parts, fields, and the generation test matrix."""

import numpy as np
import pytest

from swarmpath import engine, geometry, stress

L = 0.4
SPECIMEN_SEED = ((0.0, 0.0), (0.0, 36.0))
RECT_SEED = ((0.0, 0.0), (0.0, 24.0))
K_VALUES = (0.5, 5.0, 50.0)


@pytest.fixture(scope="session")
def specimen():
    return geometry.make_open_hole_specimen()


@pytest.fixture(scope="session")
def rectangle():
    return geometry.PartSlice([(0.0, 0.0), (60.0, 0.0),
                               (60.0, 24.0), (0.0, 24.0)])


@pytest.fixture(scope="session")
def kirsch():
    return stress.KirschField(far_stress=1.0, hole_radius=3.0,
                              hole_center=(75.0, 18.0))


@pytest.fixture(scope="session")
def uniform_x():
    return stress.UniformField((1.0, 0.0))


def _rect_kirsch():
    # hole center below the rectangle: a curved but hole-free in-part field
    return stress.KirschField(far_stress=1.0, hole_radius=3.0,
                              hole_center=(30.0, -8.0))


@pytest.fixture(scope="session")
def matrix_cases(specimen, rectangle, kirsch, uniform_x):
    """All (slice, field, seed) combos the acceptance matrix runs over."""
    cases = {}
    for K in K_VALUES:
        cases[("specimen", "kirsch", K)] = (specimen, kirsch, SPECIMEN_SEED)
        cases[("specimen", "uniform", K)] = (specimen, uniform_x,
                                             SPECIMEN_SEED)
        cases[("rectangle", "kirsch", K)] = (rectangle, _rect_kirsch(),
                                             RECT_SEED)
        cases[("rectangle", "uniform", K)] = (rectangle, uniform_x,
                                              RECT_SEED)
    return cases


@pytest.fixture(scope="session")
def matrix_runs(matrix_cases):
    """Generated trajectories for every matrix case (the expensive part)."""
    runs = {}
    for key, (slice_, field_, seed) in matrix_cases.items():
        runs[key] = engine.run(slice_, field_, seed, l=L, K=key[2])
    return runs


@pytest.fixture(scope="session")
def specimen_run_k5(matrix_runs):
    return matrix_runs[("specimen", "kirsch", 5.0)]


def straight_traces(n_traces, n_pts, spacing, angle_deg=0.0, l=None):
    """Synthetic parallel straight polylines with chained succ metadata."""
    ang = np.radians(angle_deg)
    d = np.array([np.cos(ang), np.sin(ang)])
    nrm = np.array([-d[1], d[0]])
    traces = []
    for i in range(n_traces):
        base = i * spacing * nrm
        pts = [base + j * d for j in range(n_pts)]
        succ = [i + 1 if i + 1 < n_traces else -1] * n_pts
        traces.append(engine.Trace(id=i, born_iter=0, points=pts,
                                   masses=[1.0] * n_pts, succ=succ))
    return engine.TrajectorySet(traces=traces, events=[], config={},
                                l=l if l is not None else spacing)
