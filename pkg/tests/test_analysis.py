"""Quality metrics and baseline infills: alignment, spacing, crossings."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmpath import analysis, engine, geometry, stress
from swarmpath.errors import EmptyTrajectorySet, SingleTrace, ValidationError

from conftest import straight_traces


# -- alignment -------------------------------------------------------------------

def test_beta_is_one_for_traces_parallel_to_uniform_field():
    ts = straight_traces(4, 10, spacing=0.4)
    rep = analysis.alignment_beta(ts, stress.UniformField((1.0, 0.0)))
    assert rep.beta_bar == pytest.approx(1.0, abs=1e-12)
    assert rep.point_count == 40


def test_beta_at_forty_five_degrees():
    ts = straight_traces(4, 25, spacing=0.4, angle_deg=45.0)
    rep = analysis.alignment_beta(ts, stress.UniformField((1.0, 0.0)))
    assert rep.beta_bar == pytest.approx(np.sqrt(0.5), abs=1e-5)


def test_beta_invariant_under_trace_reversal_and_field_negation():
    ts = straight_traces(3, 12, spacing=0.4, angle_deg=30.0)
    field = stress.UniformField((0.8, 0.6))
    base = analysis.alignment_beta(ts, field).beta_bar
    for tr in ts.traces:
        tr.points = tr.points[::-1]
    assert analysis.alignment_beta(ts, field).beta_bar == pytest.approx(
        base, abs=1e-12)
    neg = stress.negated(field)
    assert analysis.alignment_beta(ts, neg).beta_bar == pytest.approx(
        base, abs=1e-12)


def test_beta_requires_nonempty_trajectories():
    empty = engine.TrajectorySet(traces=[], events=[], config={}, l=0.4)
    with pytest.raises(EmptyTrajectorySet):
        analysis.alignment_beta(empty, stress.UniformField((1.0, 0.0)))


def test_beta_in_unit_interval_on_generated_runs(matrix_cases, matrix_runs):
    for key, ts in matrix_runs.items():
        field = matrix_cases[key][1]
        rep = analysis.alignment_beta(ts, field)
        assert 0.0 <= rep.beta_bar <= 1.0


# -- spacing ----------------------------------------------------------------------

def test_parallel_traces_have_unit_spacing_zero_variance():
    ts = straight_traces(5, 10, spacing=0.4)
    rep = analysis.spacing_report(ts, 0.4)
    assert rep.normalized_distances == pytest.approx(
        np.ones(len(rep.normalized_distances)))
    assert rep.variance == pytest.approx(0.0, abs=1e-15)


def test_alternating_spacings_give_quarter_variance():
    # successor gaps alternate 0.3 / 0.5 with l = 0.4: values 0.75 / 1.25
    pts = lambda y: [np.array([float(j), y]) for j in range(10)]  # noqa: E731
    traces = [
        engine.Trace(id=0, born_iter=0, points=pts(0.0),
                     masses=[1.0] * 10, succ=[1] * 10),
        engine.Trace(id=1, born_iter=0, points=pts(0.3),
                     masses=[1.0] * 10, succ=[2] * 10),
        engine.Trace(id=2, born_iter=0, points=pts(0.8),
                     masses=[1.0] * 10, succ=[-1] * 10),
    ]
    ts = engine.TrajectorySet(traces=traces, events=[], config={}, l=0.4)
    rep = analysis.spacing_report(ts, 0.4)
    assert sorted(set(np.round(rep.normalized_distances, 12))) == [0.75, 1.25]
    assert rep.variance == pytest.approx(0.0625, abs=1e-12)


def test_variance_matches_population_definition():
    ts = straight_traces(4, 8, spacing=0.37, l=0.4)
    rep = analysis.spacing_report(ts, 0.4)
    assert rep.variance == pytest.approx(
        float(np.var(rep.normalized_distances)), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.01, 100.0))
def test_spacing_variance_scale_invariance(scale):
    base = straight_traces(4, 8, spacing=0.3, l=0.4)
    scaled_traces = [
        engine.Trace(id=t.id, born_iter=0,
                     points=[p * scale for p in t.points],
                     masses=list(t.masses), succ=list(t.succ))
        for t in base.traces]
    scaled = engine.TrajectorySet(traces=scaled_traces, events=[],
                                  config={}, l=0.4 * scale)
    v1 = analysis.spacing_report(base, 0.4).variance
    v2 = analysis.spacing_report(scaled, 0.4 * scale).variance
    assert v2 == pytest.approx(v1, rel=1e-9, abs=1e-12)


def test_spacing_single_trace_raises():
    ts = straight_traces(1, 5, spacing=0.4)
    with pytest.raises(SingleTrace):
        analysis.spacing_report(ts, 0.4)


def test_spacing_histogram_csv(tmp_path):
    ts = straight_traces(3, 6, spacing=0.4)
    rep = analysis.spacing_report(ts, 0.4)
    path = tmp_path / "hist.csv"
    rep.histogram_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "bin_left,bin_right,count"
    counts = [int(row.split(",")[2]) for row in lines[1:]]
    assert sum(counts) == len(rep.normalized_distances)


# -- crossings --------------------------------------------------------------------

def two_trace_set(p, q):
    traces = [engine.Trace(id=0, born_iter=0, points=list(map(np.asarray, p)),
                           masses=[1.0] * len(p), succ=[-1] * len(p)),
              engine.Trace(id=1, born_iter=0, points=list(map(np.asarray, q)),
                           masses=[1.0] * len(q), succ=[-1] * len(q))]
    return engine.TrajectorySet(traces=traces, events=[], config={}, l=0.4)


def test_crossing_diagonals_count_one():
    ts = two_trace_set([(0.0, 0.0), (1.0, 1.0)], [(0.0, 1.0), (1.0, 0.0)])
    assert analysis.crossing_count(ts) == 1


def test_endpoint_touch_does_not_count():
    ts = two_trace_set([(0.0, 0.0), (1.0, 1.0)], [(1.0, 1.0), (2.0, 0.0)])
    assert analysis.crossing_count(ts) == 0


def test_disjoint_parallel_traces_count_zero():
    assert analysis.crossing_count(straight_traces(3, 5, 0.4)) == 0


# -- baselines --------------------------------------------------------------------

def test_aligned_rectilinear_on_specimen(specimen):
    kind = analysis.BaselineKind.aligned_rectilinear(0.4)
    ts = analysis.generate_baseline(specimen, kind)
    # one offset line every 0.4 mm across the 36 mm width
    offsets = sorted({round(float(tr.points[0][1]), 9) for tr in ts.traces})
    assert len(offsets) in (90, 91)
    # lines passing through the hole split into exactly two segments
    split = [o for o in offsets
             if sum(1 for tr in ts.traces
                    if round(float(tr.points[0][1]), 9) == o) == 2]
    whole = [o for o in offsets if o not in split]
    assert all(15.0 < o < 21.0 for o in split)
    assert len(ts.traces) == len(whole) + 2 * len(split)
    assert len(split) >= 10


def test_cross_hatch_on_unit_square():
    sl = geometry.PartSlice([(0.0, 0.0), (10.0, 0.0), (10.0, 10.0),
                             (0.0, 10.0)])
    ts = analysis.generate_baseline(
        sl, analysis.BaselineKind.cross_hatch(45.0, 1.0))
    assert len(ts.traces) in (13, 14)
    assert ts.config["angle_deg"] == 45.0


def test_slice_narrower_than_spacing_yields_single_trace():
    sl = geometry.PartSlice([(0.0, 0.0), (10.0, 0.0), (10.0, 0.3),
                             (0.0, 0.3)])
    ts = analysis.generate_baseline(
        sl, analysis.BaselineKind.aligned_rectilinear(0.5))
    assert len(ts.traces) == 1


def test_baseline_spacing_is_validated():
    with pytest.raises(ValidationError):
        analysis.BaselineKind.aligned_rectilinear(0.0)


def test_baseline_beta_one_on_uniform_axial_field(rectangle):
    ts = analysis.generate_baseline(
        rectangle, analysis.BaselineKind.aligned_rectilinear(0.4))
    rep = analysis.alignment_beta(ts, stress.UniformField((1.0, 0.0)))
    assert rep.beta_bar == pytest.approx(1.0, abs=1e-12)


def test_baseline_spacing_report_is_uniform(rectangle):
    ts = analysis.generate_baseline(
        rectangle, analysis.BaselineKind.aligned_rectilinear(0.4))
    rep = analysis.spacing_report(ts, 0.4)
    assert rep.variance == pytest.approx(0.0, abs=1e-18)


# -- coverage ---------------------------------------------------------------------

def test_baseline_covers_part(specimen):
    ts = analysis.generate_baseline(
        specimen, analysis.BaselineKind.aligned_rectilinear(0.4))
    assert analysis.coverage_fraction(specimen, ts, 0.4) >= 0.99


def test_empty_trajectories_cover_nothing(specimen):
    empty = engine.TrajectorySet(traces=[], events=[], config={}, l=0.4)
    assert analysis.coverage_fraction(specimen, empty, 0.4) == 0.0


# -- benchmark --------------------------------------------------------------------

def test_benchmark_contract(rectangle, uniform_x):
    small = geometry.PartSlice([(0.0, 0.0), (4.0, 0.0), (4.0, 4.0),
                                (0.0, 4.0)])
    rep = analysis.benchmark(small, uniform_x,
                             {"seed_edge": ((0.0, 0.0), (0.0, 4.0)),
                              "l": 0.4, "K": 5.0},
                             repetitions=3)
    assert len(rep["samples"]) == 3
    assert rep["median"] >= rep["min"]
    assert set(rep["phases"]) == {"sampling", "assembly", "solve",
                                  "geometry", "other"}
    with pytest.raises(ValidationError):
        analysis.benchmark(small, uniform_x,
                           {"seed_edge": ((0.0, 0.0), (0.0, 4.0))},
                           repetitions=2)


def test_save_report_handles_dataclasses_and_dicts(tmp_path):
    import json

    ts = straight_traces(3, 5, spacing=0.4)
    rep = analysis.spacing_report(ts, 0.4)
    path = tmp_path / "rep.json"
    analysis.save_report(rep, path)
    data = json.loads(path.read_text())
    assert data["variance"] == rep.variance
    analysis.save_report({"a": 1}, path)
    assert json.loads(path.read_text()) == {"a": 1}
