"""CLI entry point, configuration, input loading, and exporters.

Wires the geometry / stress / engine / analysis modules into the pipeline a
user invokes: load a part slice and a stress field, generate (or clip a
baseline of) trajectories, and write them as polyline JSON, SVG line art,
or minimal single-layer G-code, together with alignment and spacing
reports. Everything here is a deterministic single-threaded orchestrator;
``SWARMPATH_THREADS`` caps the worker threads of the numeric libraries
underneath but never parallelizes the generation loop itself.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis, engine, geometry, stress
from .errors import ParseError, SwarmPathError, ValidationError

FORMATS = ("json", "svg", "gcode")


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class GridFile:
    """Stress field from a grid CSV export (header x,y,sx,sy)."""

    path: str

    def build(self):
        return stress.load_grid_field(self.path)

    def describe(self) -> dict:
        return {"kind": "grid_file", "path": str(self.path)}


@dataclass(frozen=True)
class Kirsch:
    """Analytic open-hole field: remote uniaxial tension around a hole."""

    far_stress: float
    hole_radius: float
    hole_center: tuple
    load_angle: float = 0.0

    def build(self):
        return stress.KirschField(far_stress=self.far_stress,
                                  hole_radius=self.hole_radius,
                                  hole_center=tuple(self.hole_center),
                                  load_angle=self.load_angle)

    def describe(self) -> dict:
        return self.build().describe()


@dataclass(frozen=True)
class Uniform:
    """Constant stress vector; mainly for calibration parts."""

    vector: tuple

    def build(self):
        return stress.UniformField(tuple(self.vector))

    def describe(self) -> dict:
        return self.build().describe()


@dataclass
class RunConfig:
    """Everything one `generate` invocation needs."""

    part_path: str
    field_source: object
    l: float = 0.4
    K: float = 5.0
    seed_edge: tuple | None = None       # None = pick automatically
    max_iterations: int | None = None    # None = 10 * part length / h
    formats: tuple = ("json",)
    output_dir: str = "."

    def __post_init__(self):
        if self.l <= 0:
            raise ValidationError("spacing l must be positive",
                                  module="toolpath_io", operation="config")
        if self.K <= 0:
            raise ValidationError("K must be positive",
                                  module="toolpath_io", operation="config")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1",
                                  module="toolpath_io", operation="config")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValidationError(
                f"unknown output format {bad[0]!r} (choose from "
                f"{', '.join(FORMATS)})",
                module="toolpath_io", operation="config")
        self.formats = tuple(self.formats)


@dataclass
class GcodeParams:
    """Print parameters for the minimal single-layer G-code exporter."""

    feed_rate: float = 3150.0
    layer_height: float = 0.2
    filament_diameter: float = 1.75
    extrusion_width: float = 0.4

    def __post_init__(self):
        for name in ("feed_rate", "layer_height", "filament_diameter",
                     "extrusion_width"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive",
                                      module="toolpath_io",
                                      operation="gcode_params")


def default_seed_edge(slice_: geometry.PartSlice, field_) -> tuple:
    """Pick the shortest outer edge nearest the strongest boundary stress.

    The chain should start where the load enters the part, which a file
    input cannot state directly; the proxy is the outer-boundary region of
    highest stress magnitude. Among the shortest outer edges (within 1e-9
    of the minimum length) the one whose midpoint is closest to the
    densely-sampled magnitude peak wins; remaining ties go to the lowest
    edge index, keeping the choice deterministic.
    """
    outer = slice_.outer
    n = len(outer)
    a = outer
    b = np.roll(outer, -1, axis=0)
    lens = np.hypot(*(b - a).T)
    # dense boundary sampling: one probe per quarter edge-spacing, at least
    # 8 probes per edge, pulled slightly inward so hole-rim clamps and grid
    # hulls stay in-domain
    probes = []
    centroid = outer.mean(axis=0)
    for i in range(n):
        m = max(8, int(math.ceil(lens[i] / 0.25)))
        t = (np.arange(m) + 0.5) / m
        pts = a[i] + t[:, None] * (b[i] - a[i])
        probes.append(pts + 1e-6 * (centroid - pts))
    probes = np.vstack(probes)
    _, mags, ok = stress.sample_many_guarded(field_, probes)
    if not np.any(ok) or float(np.max(mags)) == 0.0:
        peak = centroid
    else:
        peak = probes[int(np.argmax(mags))]
    mids = 0.5 * (a + b)
    shortest = np.flatnonzero(lens <= np.min(lens) + 1e-9)
    best = min(shortest,
               key=lambda i: (float(np.hypot(*(mids[i] - peak))), int(i)))
    return (tuple(float(v) for v in a[best]),
            tuple(float(v) for v in b[best]))


# -- polyline JSON -----------------------------------------------------------

def export_json(traj: engine.TrajectorySet, path) -> None:
    """Write the trajectory set as JSON with full-precision floats.

    Floats serialize through repr (the json module's default), which
    round-trips every IEEE double exactly, so load_trajectories
    reconstructs a bit-identical set.
    """
    doc = {
        "config": _jsonable(traj.config),
        "l": traj.l,
        "iterations": traj.iterations,
        "incomplete": traj.incomplete,
        "traces": [
            {
                "id": tr.id,
                "points": [[float(x), float(y)] for x, y in tr.points],
                "born_iter": tr.born_iter,
                "died_iter": tr.died_iter,
                "succ": [int(s) for s in tr.succ],
                "masses": [None if m is None else float(m)
                           for m in tr.masses],
            }
            for tr in traj.traces
        ],
        "events": traj.events,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_trajectories(path) -> engine.TrajectorySet:
    """Reload a trajectory set written by export_json."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}",
                         module="toolpath_io",
                         operation="load_trajectories") from e
    if not isinstance(doc, dict) or "traces" not in doc:
        raise ParseError(f"{path}: missing 'traces' list",
                         module="toolpath_io", operation="load_trajectories")
    traces = []
    for row in doc["traces"]:
        tr = engine.Trace(id=int(row["id"]),
                          born_iter=int(row["born_iter"]),
                          points=[np.asarray(p, dtype=float)
                                  for p in row["points"]],
                          masses=list(row.get("masses",
                                               [None] * len(row["points"]))),
                          succ=[int(s) for s in
                                row.get("succ", [-1] * len(row["points"]))])
        traces.append(tr)
    config = doc.get("config", {})
    return engine.TrajectorySet(
        traces=traces, events=doc.get("events", []), config=config,
        l=float(doc.get("l", config.get("l", 0.0))),
        iterations=int(doc.get("iterations", 0)),
        incomplete=bool(doc.get("incomplete", False)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# -- SVG ---------------------------------------------------------------------

def export_svg(traj: engine.TrajectorySet, slice_: geometry.PartSlice,
               path, options: dict | None = None) -> None:
    """Render outlines and one polyline per trace; 1 SVG user unit = 1 mm.

    options: {"markers": bool} — when true, spawn events draw green
    circles and kill events red crosses at the event position. The y axis
    is flipped inside a group so the drawing matches part coordinates.
    """
    options = options or {}
    markers = bool(options.get("markers", False))
    lo, hi = slice_.bounds()
    w, h = float(hi[0] - lo[0]), float(hi[1] - lo[1])
    margin = 0.05 * max(w, h)
    vb = (lo[0] - margin, lo[1] - margin, w + 2 * margin, h + 2 * margin)

    def fmt(v):
        return f"{float(v):.6g}"

    def pathd(pts):
        coords = " L".join(f"{fmt(x)} {fmt(y)}" for x, y in pts)
        return f"M{coords} Z"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{fmt(vb[2])}mm" height="{fmt(vb[3])}mm" '
        f'viewBox="{fmt(vb[0])} {fmt(vb[1])} {fmt(vb[2])} {fmt(vb[3])}">',
        # flip y about the part's horizontal midline: SVG y grows downward
        f'<g transform="translate(0 {fmt(lo[1] + hi[1])}) scale(1 -1)" '
        f'fill="none" stroke-linecap="round" stroke-linejoin="round">',
        f'<path class="outer" d="{pathd(slice_.outer)}" '
        f'stroke="black" stroke-width="0.15"/>',
    ]
    for hole in slice_.holes:
        lines.append(f'<path class="hole" d="{pathd(hole)}" '
                     f'stroke="black" stroke-width="0.15"/>')
    for tr in traj.traces:
        pts = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in tr.points)
        lines.append(f'<polyline class="trace" points="{pts}" '
                     f'stroke="#1f77b4" stroke-width="0.08"/>')
    if markers:
        r = 0.35
        for ev in traj.events:
            x, y = ev["position"]
            if ev["event"] == "spawn":
                lines.append(
                    f'<circle class="spawn" cx="{fmt(x)}" cy="{fmt(y)}" '
                    f'r="{fmt(r)}" stroke="green" stroke-width="0.1"/>')
            elif ev["event"] == "kill":
                lines.append(
                    f'<path class="kill" d="M{fmt(x - r)} {fmt(y - r)} '
                    f'L{fmt(x + r)} {fmt(y + r)} M{fmt(x - r)} {fmt(y + r)} '
                    f'L{fmt(x + r)} {fmt(y - r)}" '
                    f'stroke="red" stroke-width="0.1"/>')
    lines.append("</g>")
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- G-code ------------------------------------------------------------------

GCODE_HEADER = (
    "; single-layer stress-aligned toolpath",
    "; heater, homing and priming are post-processor responsibility",
    "G21 ; millimeter units",
    "G90 ; absolute coordinates",
    "M83 ; relative extrusion",
)
GCODE_FOOTER = (
    "; end of toolpath",
)


def extrusion_length(segment_length: float, params: GcodeParams) -> float:
    """Filament length for one segment: deposited volume / filament area."""
    area = math.pi * (params.filament_diameter / 2.0) ** 2
    return (segment_length * params.extrusion_width * params.layer_height
            / area)


def export_gcode(traj: engine.TrajectorySet, params: GcodeParams,
                 path) -> None:
    """One travel move per trace start, then extruding moves along it."""
    lines = list(GCODE_HEADER)
    feed = f"F{params.feed_rate:g}"
    for tr in traj.traces:
        pts = tr.array()
        if len(pts) == 0:
            continue
        lines.append(f"G0 {feed} X{pts[0, 0]!r} Y{pts[0, 1]!r}")
        for prev, cur in zip(pts[:-1], pts[1:]):
            seg = float(np.hypot(*(cur - prev)))
            e = extrusion_length(seg, params)
            lines.append(f"G1 {feed} X{cur[0]!r} Y{cur[1]!r} E{e!r}")
    lines.extend(GCODE_FOOTER)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# -- pipeline helpers --------------------------------------------------------

def build_field(source):
    return source.build()


def make_report(traj: engine.TrajectorySet, slice_: geometry.PartSlice,
                field_) -> dict:
    align = analysis.alignment_beta(traj, field_)
    spacing = analysis.spacing_report(traj, traj.l)
    return {
        "beta_bar": align.beta_bar,
        "point_count": align.point_count,
        "spacing": spacing.to_dict(),
        "crossings": analysis.crossing_count(traj),
        "coverage": analysis.coverage_fraction(slice_, traj, traj.l),
        "iterations": traj.iterations,
        "trace_count": len(traj.traces),
        "incomplete": traj.incomplete,
    }


def run_pipeline(cfg: RunConfig, markers: bool = False,
                 gcode: GcodeParams | None = None,
                 prefix: str = "trajectories") -> dict:
    """Load, generate, export, report. Returns the report dict."""
    slice_ = geometry.load_part(cfg.part_path)
    field_ = build_field(cfg.field_source)
    seed = cfg.seed_edge or default_seed_edge(slice_, field_)
    traj = engine.run(slice_, field_, seed, l=cfg.l, K=cfg.K,
                      max_iterations=cfg.max_iterations,
                      config={"part": str(cfg.part_path),
                              "field": cfg.field_source.describe(),
                              "seed_edge": [list(seed[0]), list(seed[1])]})
    os.makedirs(cfg.output_dir, exist_ok=True)
    out = lambda name: os.path.join(cfg.output_dir, name)  # noqa: E731
    if "json" in cfg.formats:
        export_json(traj, out(f"{prefix}.json"))
    if "svg" in cfg.formats:
        export_svg(traj, slice_, out(f"{prefix}.svg"),
                   {"markers": markers})
    if "gcode" in cfg.formats:
        export_gcode(traj, gcode or GcodeParams(extrusion_width=cfg.l),
                     out(f"{prefix}.gcode"))
    report = make_report(traj, slice_, field_)
    analysis.save_report(report, out("report.json"))
    return report


# -- CLI ---------------------------------------------------------------------

def _parse_floats(text: str, n: int, what: str) -> list:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ValidationError(f"{what} needs {n} comma-separated numbers",
                              module="toolpath_io", operation="cli")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValidationError(f"{what}: non-numeric value",
                              module="toolpath_io", operation="cli") from None


def _field_from_args(args) -> object:
    given = [name for name in ("kirsch", "grid", "uniform")
             if getattr(args, name, None)]
    if len(given) != 1:
        raise ValidationError(
            "exactly one of --kirsch, --grid, --uniform is required",
            module="toolpath_io", operation="cli")
    if args.kirsch:
        vals = _parse_floats(args.kirsch, 4, "--kirsch")
        return Kirsch(far_stress=vals[0], hole_radius=vals[1],
                      hole_center=(vals[2], vals[3]))
    if args.grid:
        return GridFile(args.grid)
    vx, vy = _parse_floats(args.uniform, 2, "--uniform")
    return Uniform((vx, vy))


def _seed_from_args(args) -> tuple | None:
    if not getattr(args, "seed_edge", None):
        return None
    v = _parse_floats(args.seed_edge, 4, "--seed-edge")
    return ((v[0], v[1]), (v[2], v[3]))


def _add_field_args(p):
    p.add_argument("--kirsch", metavar="S,R,CX,CY",
                   help="analytic open-hole field: far stress, hole "
                        "radius, hole center x, y")
    p.add_argument("--grid", metavar="CSV",
                   help="grid stress export (header x,y,sx,sy)")
    p.add_argument("--uniform", metavar="SX,SY",
                   help="constant stress vector")


def _add_run_args(p):
    p.add_argument("--part", required=True, help="part slice JSON")
    _add_field_args(p)
    p.add_argument("--spacing", type=float, default=0.4,
                   help="nominal line distance l in mm (default 0.4)")
    p.add_argument("--k", default="5",
                   help="alignment weight K (default 5)")
    p.add_argument("--seed-edge", metavar="X1,Y1,X2,Y2",
                   help="seed boundary edge (default: shortest outer edge "
                        "nearest the strongest boundary stress)")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--formats", default="json",
                   help="comma list from json,svg,gcode (default json)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--markers", action="store_true",
                   help="draw spawn/kill markers in the SVG")
    p.add_argument("--feed-rate", type=float, default=3150.0)
    p.add_argument("--layer-height", type=float, default=0.2)
    p.add_argument("--filament-diameter", type=float, default=1.75)
    p.add_argument("--extrusion-width", type=float, default=None,
                   help="defaults to the line spacing")


def _gcode_from_args(args, l: float) -> GcodeParams:
    return GcodeParams(feed_rate=args.feed_rate,
                       layer_height=args.layer_height,
                       filament_diameter=args.filament_diameter,
                       extrusion_width=(args.extrusion_width
                                        if args.extrusion_width is not None
                                        else l))


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="swarmpath",
        description="stress-aligned print trajectory generation")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="full generation pipeline")
    _add_run_args(g)

    b = sub.add_parser("baseline", help="parallel-line infill baseline")
    b.add_argument("--part", required=True)
    b.add_argument("--spacing", type=float, required=True)
    b.add_argument("--angle", type=float, default=None,
                   help="line angle in degrees (default: along the part's "
                        "long side)")
    b.add_argument("--formats", default="json")
    b.add_argument("--out", default=".")
    _add_field_args(b)

    m = sub.add_parser("metrics",
                       help="recompute reports from an exported JSON")
    m.add_argument("--trajectories", required=True)
    m.add_argument("--part", required=True)
    _add_field_args(m)
    m.add_argument("--out", default=".")

    be = sub.add_parser("bench", help="time full generation")
    be.add_argument("--part", required=True)
    _add_field_args(be)
    be.add_argument("--spacing", type=float, default=0.4)
    be.add_argument("--k", type=float, default=5.0)
    be.add_argument("--seed-edge", metavar="X1,Y1,X2,Y2")
    be.add_argument("--repetitions", type=int, default=5)
    be.add_argument("--out", default=".")

    s = sub.add_parser("sweep", help="generate over a list of K values")
    _add_run_args(s)
    return ap


def _cap_threads() -> None:
    cap = os.environ.get("SWARMPATH_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _cmd_generate(args) -> int:
    k_vals = _parse_floats(args.k, 1, "--k")
    cfg = RunConfig(part_path=args.part,
                    field_source=_field_from_args(args),
                    l=args.spacing, K=k_vals[0],
                    seed_edge=_seed_from_args(args),
                    max_iterations=args.max_iterations,
                    formats=tuple(f.strip()
                                  for f in args.formats.split(",") if f),
                    output_dir=args.out)
    report = run_pipeline(cfg, markers=args.markers,
                          gcode=_gcode_from_args(args, cfg.l))
    print(f"generate: {report['trace_count']} traces, "
          f"beta_bar={report['beta_bar']:.4f}, "
          f"crossings={report['crossings']}", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    k_list = [float(p) for p in args.k.split(",") if p.strip()]
    if not k_list:
        raise ValidationError("--k needs at least one value",
                              module="toolpath_io", operation="cli")
    combined = []
    for kv in k_list:
        sub_out = os.path.join(args.out, f"k_{kv:g}")
        cfg = RunConfig(part_path=args.part,
                        field_source=_field_from_args(args),
                        l=args.spacing, K=kv,
                        seed_edge=_seed_from_args(args),
                        max_iterations=args.max_iterations,
                        formats=tuple(f.strip()
                                      for f in args.formats.split(",")
                                      if f),
                        output_dir=sub_out)
        report = run_pipeline(cfg, markers=args.markers,
                              gcode=_gcode_from_args(args, cfg.l))
        combined.append({"K": kv, "beta_bar": report["beta_bar"],
                         "variance": report["spacing"]["variance"],
                         "crossings": report["crossings"],
                         "coverage": report["coverage"]})
        print(f"sweep K={kv:g}: beta_bar={report['beta_bar']:.4f}, "
              f"variance={report['spacing']['variance']:.3e}",
              file=sys.stderr)
    os.makedirs(args.out, exist_ok=True)
    analysis.save_report({"runs": combined},
                         os.path.join(args.out, "combined_report.json"))
    return 0


def _cmd_baseline(args) -> int:
    slice_ = geometry.load_part(args.part)
    kind = (analysis.BaselineKind.aligned_rectilinear(args.spacing)
            if args.angle is None
            else analysis.BaselineKind.cross_hatch(args.angle, args.spacing))
    traj = analysis.generate_baseline(slice_, kind)
    os.makedirs(args.out, exist_ok=True)
    formats = tuple(f.strip() for f in args.formats.split(",") if f)
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ValidationError(f"unknown output format {bad[0]!r}",
                              module="toolpath_io", operation="cli")
    if "json" in formats:
        export_json(traj, os.path.join(args.out, "baseline.json"))
    if "svg" in formats:
        export_svg(traj, slice_, os.path.join(args.out, "baseline.svg"))
    if "gcode" in formats:
        export_gcode(traj, GcodeParams(extrusion_width=args.spacing),
                     os.path.join(args.out, "baseline.gcode"))
    report = {"trace_count": len(traj.traces), "kind": kind.kind,
              "spacing": analysis.spacing_report(traj, traj.l).to_dict()}
    if any(getattr(args, nm, None) for nm in ("kirsch", "grid", "uniform")):
        field_ = build_field(_field_from_args(args))
        report["beta_bar"] = analysis.alignment_beta(traj, field_).beta_bar
    analysis.save_report(report,
                         os.path.join(args.out, "baseline_report.json"))
    print(f"baseline: {len(traj.traces)} traces", file=sys.stderr)
    return 0


def _cmd_metrics(args) -> int:
    traj = load_trajectories(args.trajectories)
    slice_ = geometry.load_part(args.part)
    field_ = build_field(_field_from_args(args))
    report = make_report(traj, slice_, field_)
    os.makedirs(args.out, exist_ok=True)
    analysis.save_report(report, os.path.join(args.out, "report.json"))
    print(f"metrics: beta_bar={report['beta_bar']:.4f}, "
          f"crossings={report['crossings']}", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    slice_ = geometry.load_part(args.part)
    field_ = build_field(_field_from_args(args))
    seed = _seed_from_args(args) or default_seed_edge(slice_, field_)
    result = analysis.benchmark(slice_, field_,
                                {"seed_edge": seed, "l": args.spacing,
                                 "K": args.k},
                                repetitions=args.repetitions)
    os.makedirs(args.out, exist_ok=True)
    analysis.save_report(result, os.path.join(args.out, "bench.json"))
    total = sum(result["phases"].values())
    solve_share = (result["phases"].get("solve", 0.0) / total
                   if total > 0 else 0.0)
    print(f"bench: median {result['median'] * 1000:.0f} ms over "
          f"{result['repetitions']} runs, solve {solve_share:.0%} of "
          f"phase time", file=sys.stderr)
    return 0


_COMMANDS = {"generate": _cmd_generate, "baseline": _cmd_baseline,
             "metrics": _cmd_metrics, "bench": _cmd_bench,
             "sweep": _cmd_sweep}


def cli_main(argv=None) -> int:
    """Entry point. Exit 0 on success, 1 on usage error, 2 on runtime error."""
    _cap_threads()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help, 2 for usage errors
        return 0 if e.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except SwarmPathError as e:
        print(f"error [{e.location()}]: {e}", file=sys.stderr)
        # bad flag combinations are usage errors; everything else is runtime
        return 1 if e.location() == "toolpath_io.cli" else 2
    except OSError as e:
        print(f"error [toolpath_io.cli]: {e}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
