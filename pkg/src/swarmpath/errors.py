"""Exception hierarchy shared by all swarmpath modules."""

from __future__ import annotations


class SwarmPathError(Exception):
    """Base class; carries the module/operation that failed for CLI reporting."""

    def __init__(self, message: str, *, module: str | None = None,
                 operation: str | None = None):
        super().__init__(message)
        self.module = module
        self.operation = operation

    def location(self) -> str:
        if self.module and self.operation:
            return f"{self.module}.{self.operation}"
        return self.module or "swarmpath"


class ValidationError(SwarmPathError):
    """Invalid part geometry or configuration."""


class QueryOutsideDomain(SwarmPathError):
    """Stress field queried outside its valid domain."""


class ParseError(SwarmPathError):
    """Malformed input file; message names the offending line."""


class DegenerateField(SwarmPathError):
    """Stress field with no usable data (collinear nodes, all-zero vectors)."""


class SeedTooShort(SwarmPathError):
    """Seed edge cannot host at least one interior agent."""


class StalledAgent(SwarmPathError):
    """Agent with no stress sample and no momentum to derive a heading from."""


class SolverFailure(SwarmPathError):
    """QP solver hit its iteration cap; `.solution` holds the best iterate."""

    def __init__(self, message: str, solution=None, **kw):
        super().__init__(message, **kw)
        self.solution = solution


class HoleTooSmall(SwarmPathError):
    """Hole perimeter below 4*l; cannot host two boundary agents."""


class EmptyTrajectorySet(SwarmPathError):
    """Metric requested on a trajectory set with no points."""


class SingleTrace(SwarmPathError):
    """Spacing metric needs at least two traces."""
