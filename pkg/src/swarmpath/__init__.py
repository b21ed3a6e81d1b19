"""Stress-aligned toolpath generation for planar part slices.

A swarm of agents is advected across a part along its principal-stress
field; each iteration repositions the whole chain by one small
box-constrained convex QP. The traced agent paths become print
trajectories, exported as JSON, SVG, or G-code with alignment and spacing
quality metrics.
"""

from . import analysis, engine, geometry, qp, stress, toolpath_io
from .analysis import (AlignmentReport, BaselineKind, SpacingReport,
                       alignment_beta, benchmark, coverage_fraction,
                       crossing_count, generate_baseline, spacing_report)
from .engine import Engine, Trace, TrajectorySet, run
from .errors import SwarmPathError
from .geometry import PartSlice, load_part, make_open_hole_specimen, save_part
from .stress import GridField, KirschField, UniformField, load_grid_field
from .toolpath_io import (GcodeParams, RunConfig, cli_main, export_gcode,
                          export_json, export_svg, load_trajectories)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport", "BaselineKind", "Engine", "GcodeParams", "GridField",
    "KirschField", "PartSlice", "RunConfig", "SpacingReport",
    "SwarmPathError", "Trace", "TrajectorySet", "UniformField",
    "alignment_beta", "analysis", "benchmark", "cli_main",
    "coverage_fraction", "crossing_count", "engine", "export_gcode",
    "export_json", "export_svg", "generate_baseline", "geometry",
    "load_grid_field", "load_part", "load_trajectories",
    "make_open_hole_specimen", "qp", "run", "save_part", "spacing_report",
    "stress", "toolpath_io",
]
