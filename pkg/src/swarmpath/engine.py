"""Swarm trajectory generation.

A chain of agents is seeded along one boundary edge and advected across the
part. Each iteration every agent proposes an ideal step of length h along
the local principal stress direction (sign resolved by momentum), then all
agents are repositioned at once by minimizing P = P_a + K * P_e inside a
per-agent box: P_a keeps consecutive agents at lateral spacing l with zero
axial offset, P_e is a stress-magnitude-weighted pull toward the ideal
targets. Boundary agents move one-dimensionally along boundary loops. Holes
split the chain around a pair of hole-rim agents; over-compressed or
over-stretched regions trigger at most one potential-selected kill or spawn
per iteration. Each agent's positions form one output trace.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry, qp, stress
from .errors import (HoleTooSmall, SeedTooShort, StalledAgent,
                     ValidationError)

INTERIOR = "interior"
OUTER_BOUNDARY = "outer_boundary"
INNER_BOUNDARY = "inner_boundary"

# chord-dot threshold below which a boundary agent cannot advance without
# breaking momentum (both arc directions turn >= 90 degrees); it freezes
FREEZE_TOL = 1e-9


@dataclass(eq=False)
class Agent:
    pos: np.ndarray
    prev_pos: np.ndarray
    kind: str
    trace_id: int
    cursor: geometry.BoundaryCursor | None = None
    mass: float = 1.0
    link_next: bool = True        # couples this agent with its successor
    arc_travel: float = 0.0       # cumulative arc walked (boundary kinds)
    frozen: bool = False
    adrift: int = 0               # consecutive iterations moving against
                                  # every coupled neighbour

    @property
    def is_boundary(self) -> bool:
        return self.kind != INTERIOR


@dataclass
class Swarm:
    agents: list
    l: float
    h: float
    K: float
    k: int = 0


@dataclass
class Trace:
    id: int
    born_iter: int
    points: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    # id of the linked successor trace when each point was laid (-1 = none);
    # spacing metrics follow this adjacency order
    succ: list = field(default_factory=list)

    @property
    def died_iter(self) -> int:
        return self.born_iter + len(self.points) - 1

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


@dataclass
class TrajectorySet:
    traces: list
    events: list
    config: dict
    l: float
    iterations: int = 0
    incomplete: bool = False
    timings: dict = field(default_factory=dict)


@dataclass
class Targets:
    """Per-agent repositioning data for one iteration."""

    t: np.ndarray                 # ideal points (n, 2)
    e_ax: np.ndarray              # axial frame vector per agent (n, 2)
    e_rad: np.ndarray             # radial frame vector per agent (n, 2)
    lower: np.ndarray             # per-variable bounds (2n,)
    upper: np.ndarray
    masses: np.ndarray            # virtual masses (n,)
    mags: np.ndarray              # raw stress magnitudes (n,)
    cursors: list                 # target cursor per agent (None = interior)
    signed_ds: np.ndarray         # arc step taken by boundary agents (n,)
    interior: np.ndarray          # boolean mask (n,)


def _perp(v: np.ndarray) -> np.ndarray:
    """Counterclockwise 90 degree rotation."""
    return np.stack((-v[..., 1], v[..., 0]), axis=-1)


def init_swarm(slice_: geometry.PartSlice, field_, seed_edge, l: float,
               K: float, h: float | None = None) -> Swarm:
    """Seed the chain along one outer-boundary edge.

    Interior agents sit at spacing l between two outer-boundary agents at
    the edge endpoints; everyone's previous position lies one step h behind
    along the inward normal, which fixes the initial momentum.
    """
    if l <= 0 or K <= 0:
        raise ValidationError("l and K must be positive",
                              module="swarm_engine", operation="init_swarm")
    h = l if h is None else h
    p1 = np.asarray(seed_edge[0], dtype=float)
    p2 = np.asarray(seed_edge[1], dtype=float)
    length = float(np.hypot(*(p2 - p1)))
    if length <= 0:
        raise ValidationError("seed edge has zero length",
                              module="swarm_engine", operation="init_swarm")
    for p in (p1, p2):
        _, dist = geometry.project_to_boundary(slice_, p, loop_ids=[0])
        if dist > 1e-6:
            raise ValidationError(
                f"seed endpoint {p.tolist()} is not on the outer boundary",
                module="swarm_engine", operation="init_swarm")
    # small float guard so an exact multiple of l is not rounded down
    n_int = int(math.floor(length / l + 1e-9)) - 1
    if n_int < 1:
        raise SeedTooShort(
            f"seed edge of length {length:g} fits no interior agent "
            f"at spacing {l:g}",
            module="swarm_engine", operation="init_swarm")
    u = (p2 - p1) / length
    w = _perp(u)                  # inward normal when p1->p2 runs ccw
    mid = 0.5 * (p1 + p2)
    if not geometry.contains(slice_, mid + 1e-6 * w):
        p1, p2 = p2, p1
        u = -u
        w = -w
    agents = []
    c1, _ = geometry.project_to_boundary(slice_, p1, loop_ids=[0])
    agents.append(Agent(pos=p1.copy(), prev_pos=p1 - h * w,
                        kind=OUTER_BOUNDARY, trace_id=0, cursor=c1))
    for i in range(1, n_int + 1):
        pos = p1 + (i * l) * u
        agents.append(Agent(pos=pos, prev_pos=pos - h * w, kind=INTERIOR,
                            trace_id=i))
    c2, _ = geometry.project_to_boundary(slice_, p2, loop_ids=[0])
    agents.append(Agent(pos=p2.copy(), prev_pos=p2 - h * w,
                        kind=OUTER_BOUNDARY, trace_id=n_int + 1, cursor=c2))
    return Swarm(agents=agents, l=l, h=h, K=K)


def ideal_step(agent: Agent, field_, h: float) -> np.ndarray:
    """Target point one step along the momentum-resolved stress direction."""
    delta = agent.pos - agent.prev_pos
    dirs, mags, _ = stress.sample_many_guarded(field_, agent.pos[None, :])
    if mags[0] > 0.0:
        shat = dirs[0]
        mu = 1.0 if float(shat @ delta) >= 0.0 else -1.0
        heading = mu * shat
    else:
        nd = float(np.hypot(*delta))
        if nd == 0.0:
            raise StalledAgent(
                f"agent at {agent.pos.tolist()} has no stress sample and "
                "no previous displacement",
                module="swarm_engine", operation="ideal_step")
        heading = delta / nd
    return agent.pos + h * heading


def boundary_ideal_step(agent: Agent, slice_: geometry.PartSlice,
                        h: float):
    """Arc step of +-h whose chord best continues the previous displacement.

    Returns (cursor, signed_ds, chord_dot). Ties go to +h. A nonpositive
    best dot means both directions would turn at least 90 degrees; the
    caller freezes the agent in that case.
    """
    delta = agent.pos - agent.prev_pos
    best = None
    for sgn in (1.0, -1.0):
        c = geometry.cursor_advance(slice_, agent.cursor, sgn * h)
        chord = geometry.cursor_to_point(slice_, c) - agent.pos
        d = float(chord @ delta)
        if best is None or d > best[2]:
            best = (c, sgn * h, d)
    return best


def _sharp_corner_stop(slice_: geometry.PartSlice,
                       cursor: geometry.BoundaryCursor, ds: float):
    """Signed arc to the first >=90-degree corner within a step, or None.

    A boundary walker must not round such a corner in one arc step: the
    chord would hide the turn. The caller clamps the step so the walker
    lands exactly on the vertex, where the momentum rule then freezes it.
    """
    loop = slice_.loops[cursor.loop_id]
    perim = loop.perimeter
    n = len(loop.lens)
    s0 = cursor.arc_length % perim
    sgn = 1.0 if ds >= 0 else -1.0
    remaining = abs(ds)
    traveled = 0.0
    # edge index containing s0
    e = int(np.searchsorted(loop.cum, s0, side="right")) - 1
    e = min(max(e, 0), n - 1)
    local = s0 - loop.cum[e]
    while True:
        # arc from the current position to the next vertex along the walk
        step_to_vertex = (loop.lens[e] - local) if sgn > 0 else local
        if step_to_vertex <= 1e-12:
            # sitting on a vertex already: move to the far end of the
            # adjacent edge instead
            e = (e + 1) % n if sgn > 0 else (e - 1) % n
            local = 0.0 if sgn > 0 else loop.lens[e]
            continue
        traveled += step_to_vertex
        if traveled >= remaining - 1e-12:
            return None
        j = (e + 1) % n if sgn > 0 else e  # vertex index reached
        t_in = loop.vec[j - 1] / loop.lens[j - 1]
        t_out = loop.vec[j] / loop.lens[j]
        if float(t_in @ t_out) <= 1e-12:
            return sgn * traveled
        e = (e + 1) % n if sgn > 0 else (e - 1) % n
        local = 0.0 if sgn > 0 else loop.lens[e]


def compute_targets(swarm: Swarm, slice_: geometry.PartSlice, field_,
                    hole_ids=()) -> Targets:
    n = len(swarm.agents)
    h = swarm.h
    pos = np.array([a.pos for a in swarm.agents])
    prev = np.array([a.prev_pos for a in swarm.agents])
    delta = pos - prev
    dirs, mags, _ = stress.sample_many_guarded(field_, pos)
    masses = stress.virtual_mass_many(field_, mags)
    interior = np.array([a.kind == INTERIOR for a in swarm.agents])
    for a, m in zip(swarm.agents, masses):
        a.mass = float(m)

    t = np.empty((n, 2))
    e_ax = np.empty((n, 2))
    e_rad = np.empty((n, 2))
    lower = np.empty(2 * n)
    upper = np.empty(2 * n)
    cursors = [None] * n
    signed_ds = np.zeros(n)

    # interior agents: momentum-resolved stress heading, fall back to the
    # previous displacement where the field vanishes
    has_field = mags > 0.0
    dm = np.einsum("ni,ni->n", dirs, delta)
    mu = np.where(dm >= 0.0, 1.0, -1.0)
    heading = mu[:, None] * dirs
    nd = np.hypot(delta[:, 0], delta[:, 1])
    stalled = interior & ~has_field & (nd == 0.0)
    if np.any(stalled):
        i = int(np.flatnonzero(stalled)[0])
        raise StalledAgent(
            f"agent {i} at {pos[i].tolist()} has no stress sample and no "
            "previous displacement",
            module="swarm_engine", operation="compute_targets")
    fallback = interior & ~has_field
    if np.any(fallback):
        heading[fallback] = delta[fallback] / nd[fallback, None]
    t[:] = pos + h * heading
    e_ax[:] = heading
    e_rad[:] = _perp(heading)
    for i in np.flatnonzero(interior):
        lower[2 * i:2 * i + 2] = (-h / 4.0, -h / 8.0)
        upper[2 * i:2 * i + 2] = (h / 4.0, h / 8.0)

    # keep every realizable step under a 90-degree turn: when the heading
    # is nearly perpendicular to the momentum, full radial slack could tip
    # the displacement against the previous one, so cap the away-side
    # radial bound to half of the worst-case axial advance along momentum
    cap_mask = interior & (nd > 0.0)
    if np.any(cap_mask):
        uhat = np.zeros_like(delta)
        uhat[cap_mask] = delta[cap_mask] / nd[cap_mask, None]
        cphi = np.einsum("ni,ni->n", e_ax, uhat)
        sphi = np.einsum("ni,ni->n", e_rad, uhat)
        risky = cap_mask & (0.75 * h * cphi - (h / 8.0) * np.abs(sphi)
                            <= 0.0)
        for i in np.flatnonzero(risky):
            r_cap = min(h / 8.0, 0.5 * 0.75 * h * max(cphi[i], 0.0)
                        / max(abs(sphi[i]), 1e-12))
            if sphi[i] >= 0.0:
                lower[2 * i + 1] = -r_cap
            else:
                upper[2 * i + 1] = r_cap

    # interior agents whose ideal step would pierce a hole aim at the rim
    # instead; the rim is part of the domain, the hole interior is not
    if hole_ids:
        near = _near_hole_mask(slice_, pos, hole_ids, 2.0 * h)
        for i in np.flatnonzero(interior & near):
            hit = geometry.segment_hits(slice_, pos[i], t[i],
                                        loop_ids=hole_ids)
            if hit is not None:
                t[i] = hit[1]

    # boundary agents: one arc step along their loop
    for i in np.flatnonzero(~interior):
        a = swarm.agents[i]
        if a.frozen:
            t[i] = a.pos
            e_ax[i] = (1.0, 0.0)
            e_rad[i] = (0.0, 1.0)
            lower[2 * i:2 * i + 2] = 0.0
            upper[2 * i:2 * i + 2] = 0.0
            cursors[i] = a.cursor
            continue
        c, ds, dot = boundary_ideal_step(a, slice_, h)
        scale = h * float(np.hypot(*(pos[i] - prev[i])))
        if dot <= FREEZE_TOL * max(scale, h * h):
            # Every arc step would turn the momentum by 90 degrees or more:
            # the agent has reached its terminal corner. Anchor it and cut
            # its chain links so the marching front stops spawning fillers
            # into the widening gap behind it.
            a.frozen = True
            a.link_next = False
            if i > 0:
                swarm.agents[i - 1].link_next = False
            t[i] = a.pos
            e_ax[i] = (1.0, 0.0)
            e_rad[i] = (0.0, 1.0)
            lower[2 * i:2 * i + 2] = 0.0
            upper[2 * i:2 * i + 2] = 0.0
            cursors[i] = a.cursor
            continue
        stop = _sharp_corner_stop(slice_, a.cursor, ds)
        if stop is not None:
            # land exactly on the corner vertex with no axial slack; the
            # momentum rule freezes the walker there next iteration
            ds = stop
            c = geometry.cursor_advance(slice_, a.cursor, ds)
            lower[2 * i:2 * i + 2] = 0.0
            upper[2 * i:2 * i + 2] = 0.0
        else:
            lower[2 * i:2 * i + 2] = (-h / 4.0, 0.0)
            upper[2 * i:2 * i + 2] = (h / 4.0, 0.0)
        tp = geometry.cursor_to_point(slice_, c)
        chord = tp - pos[i]
        clen = float(np.hypot(*chord))
        e_ax[i] = chord / clen if clen > 0 else (1.0, 0.0)
        e_rad[i] = _perp(e_ax[i])
        t[i] = tp
        cursors[i] = c
        signed_ds[i] = ds

    return Targets(t=t, e_ax=e_ax, e_rad=e_rad, lower=lower, upper=upper,
                   masses=masses, mags=mags, cursors=cursors,
                   signed_ds=signed_ds, interior=interior)


def _near_hole_mask(slice_, pts, hole_ids, margin):
    near = np.zeros(len(pts), dtype=bool)
    for hid in hole_ids:
        loop = slice_.loops[hid]
        center = loop.pts.mean(axis=0)
        radius = float(np.max(np.hypot(*(loop.pts - center).T)))
        near |= np.hypot(*(pts - center).T) <= radius + margin
    return near


def _coupled_pairs(agents) -> np.ndarray:
    idx = [i for i in range(len(agents) - 1) if agents[i].link_next]
    return np.asarray(idx, dtype=int)


def _pair_dhat(pos, prev, t, pairs):
    """Frozen lateral direction per coupled pair, oriented i -> i+1."""
    if len(pairs) == 0:
        return np.zeros((0, 2))
    s = (pos[pairs] - prev[pairs]) + (pos[pairs + 1] - prev[pairs + 1])
    d = np.stack((s[:, 1], -s[:, 0]), axis=1)
    sep = pos[pairs + 1] - pos[pairs]
    flip = np.einsum("ni,ni->n", d, sep) < 0.0
    d[flip] *= -1.0
    norms = np.hypot(d[:, 0], d[:, 1])
    weak = norms < 1e-12
    if np.any(weak):
        alt = t[pairs + 1] - t[pairs]
        d[weak] = alt[weak]
        norms = np.hypot(d[:, 0], d[:, 1])
        weak = norms < 1e-12
        d[weak] = (0.0, 0.0)
        norms[norms < 1e-12] = 1.0
    return d / norms[:, None]


def assemble_qp(t, e_ax, e_rad, lower, upper, masses, pairs, dhat,
                K: float, l: float) -> qp.BoxQp:
    """Quadratic potential P_a + K*P_e over per-agent frame displacements.

    Variables are (axial, radial) per agent in its own frame. For a coupled
    pair with separation v and frozen lateral direction dhat, the pair term
    expands to |v|^2 - 2*l*(dhat . v) + l^2, which is quadratic in the
    displacements since dhat is constant within the iteration.
    """
    n = len(t)
    dim = 2 * n
    band = np.zeros((4, dim))
    qvec = np.zeros(dim)
    const = 0.0
    band[0, 0::2] += 2.0 * K * masses
    band[0, 1::2] += 2.0 * K * masses
    if len(pairs) > 0:
        i = pairs
        j = pairs + 1
        v0 = t[j] - t[i]
        # diagonal blocks gain identity from |v|^2
        np.add.at(band[0], 2 * i, 2.0)
        np.add.at(band[0], 2 * i + 1, 2.0)
        np.add.at(band[0], 2 * j, 2.0)
        np.add.at(band[0], 2 * j + 1, 2.0)
        # coupling block H[j, i] = -2 * Bj' Bi
        bi = np.stack((e_ax[i], e_rad[i]), axis=2)   # (p, 2, 2) columns
        bj = np.stack((e_ax[j], e_rad[j]), axis=2)
        m = -2.0 * np.einsum("pvr,pvc->prc", bj, bi)
        band[2, 2 * i] = m[:, 0, 0]
        band[3, 2 * i] = m[:, 1, 0]
        band[1, 2 * i + 1] = m[:, 0, 1]
        band[2, 2 * i + 1] = m[:, 1, 1]
        # linear terms: g = 2 (v0 - l dhat)
        g = 2.0 * (v0 - l * dhat)
        np.add.at(qvec, 2 * j, np.einsum("pv,pv->p", e_ax[j], g))
        np.add.at(qvec, 2 * j + 1, np.einsum("pv,pv->p", e_rad[j], g))
        np.add.at(qvec, 2 * i, -np.einsum("pv,pv->p", e_ax[i], g))
        np.add.at(qvec, 2 * i + 1, -np.einsum("pv,pv->p", e_rad[i], g))
        dv = np.einsum("pv,pv->p", dhat, v0)
        const += float(np.sum(np.einsum("pv,pv->p", v0, v0)
                              - 2.0 * l * dv + l * l))
    return qp.BoxQp(band, qvec, lower, upper, const)


class _Scenario:
    """Agent-array view of one spawn/kill alternative."""

    def __init__(self, t, e_ax, e_rad, lower, upper, masses, links):
        self.t = t
        self.e_ax = e_ax
        self.e_rad = e_rad
        self.lower = lower
        self.upper = upper
        self.masses = masses
        self.links = links            # couples index i with i+1

    def pairs(self):
        return np.flatnonzero(self.links[:-1])

    def solve(self, pos, prev, K, l, backend, warm=None):
        pairs = self.pairs()
        dhat = _pair_dhat(pos, prev, self.t, pairs)
        prob = assemble_qp(self.t, self.e_ax, self.e_rad, self.lower,
                           self.upper, self.masses, pairs, dhat, K, l)
        sol = qp.solve(prob, backend=backend, warm_start=warm)
        return sol, prob


class Engine:
    """Owns the generation loop state for one run."""

    def __init__(self, slice_: geometry.PartSlice, field_, seed_edge,
                 l: float = 0.4, K: float = 5.0,
                 max_iterations: int | None = None,
                 qp_backend: str | None = None, config: dict | None = None):
        self.slice = slice_
        self.field = field_
        self.swarm = init_swarm(slice_, field_, seed_edge, l, K)
        self.hole_ids = tuple(range(1, len(slice_.loops)))
        if max_iterations is None:
            (x0, y0), (x1, y1) = slice_.bounds()
            max_iterations = max(1, int(round(
                10.0 * max(x1 - x0, y1 - y0) / self.swarm.h)))
        self.max_iterations = max_iterations
        self.qp_backend = qp_backend
        self.events = []
        self.traces = []
        self.active_pairs = {}        # hole loop id -> (agent, agent)
        self.holes_done = set()       # holes whose rim pair has completed
        self._warm = None
        self._next_trace = 0
        self.timings = {k: 0.0 for k in
                        ("sampling", "assembly", "solve", "geometry",
                         "other")}
        self.config = dict(config or {})
        self.config.setdefault("l", l)
        self.config.setdefault("K", K)
        self.config.setdefault("max_iterations", max_iterations)
        for a in self.swarm.agents:
            self._open_trace(a, born_iter=0, first_point=a.pos)
        agents = self.swarm.agents
        for i, a in enumerate(agents[:-1]):
            if a.link_next:
                self.traces[a.trace_id].succ[0] = agents[i + 1].trace_id
        self._fill_masses(agents)

    # -- trace bookkeeping -------------------------------------------------

    def _open_trace(self, agent: Agent, born_iter: int, first_point=None):
        tr = Trace(id=self._next_trace, born_iter=born_iter)
        agent.trace_id = self._next_trace
        self._next_trace += 1
        self.traces.append(tr)
        if first_point is not None:
            tr.points.append(np.array(first_point, dtype=float))
            tr.masses.append(None)
            tr.succ.append(-1)

    def _append(self, agent: Agent, succ_id: int = -1):
        tr = self.traces[agent.trace_id]
        tr.points.append(agent.pos.copy())
        tr.masses.append(None)
        tr.succ.append(succ_id)

    def _fill_masses(self, agents):
        """Backfill the virtual mass of each agent's newest trace point."""
        if not agents:
            return
        pts = np.array([self.traces[a.trace_id].points[-1] for a in agents])
        t0 = time.perf_counter()
        _, mags, _ = stress.sample_many_guarded(self.field, pts)
        self.timings["sampling"] += time.perf_counter() - t0
        vm = stress.virtual_mass_many(self.field, mags)
        for a, m in zip(agents, vm):
            self.traces[a.trace_id].masses[-1] = float(m)

    # -- hole handling -----------------------------------------------------

    def _hole_center(self, hid: int) -> np.ndarray:
        return self.slice.loops[hid].pts.mean(axis=0)

    def _crossing_interior(self, targets: Targets, hid: int):
        """Interior agents stepping into the hole while approaching it.

        Receding agents grazing the rim from behind (the chains rejoining
        past the hole) are not hole encounters.
        """
        pos = np.array([a.pos for a in self.swarm.agents])
        near = _near_hole_mask(self.slice, pos, [hid], 2.0 * self.swarm.h)
        center = self._hole_center(hid)
        out = []
        for i in np.flatnonzero(targets.interior & near):
            if not geometry.contains(self.slice, pos[i]):
                out.append(i)
                continue
            approaching = float(
                targets.e_ax[i] @ (center - pos[i])) > 0.0
            if approaching and geometry.segment_hits(
                    self.slice, pos[i], targets.t[i],
                    loop_ids=[hid]) is not None:
                out.append(i)
        return out

    def _doomed_interior(self, targets: Targets, hid: int):
        """Interior agents inside a split hole's lens still aimed at the rim.

        By the time the chain tears, every surviving lane has curved enough
        that its heading ray clears the hole; an agent whose ray still
        enters the rim sits too close to the stagnation line to pass on
        either side, and left alone it wanders across its neighbors' laid
        lines before dying on the rim. It retires at the tear instead.
        """
        agents = self.swarm.agents
        loop = self.slice.loops[hid]
        center = loop.pts.mean(axis=0)
        radius = float(np.max(np.hypot(*(loop.pts - center).T)))
        lens = 1.5 * radius + self.swarm.h
        out = []
        for i in np.flatnonzero(targets.interior):
            to_c = center - agents[i].pos
            ndc = float(np.hypot(*to_c))
            if ndc > lens:
                continue
            e = targets.e_ax[i]
            if float(e @ to_c) <= 0.0:
                continue
            if abs(float(to_c[0] * e[1] - to_c[1] * e[0])) < radius:
                out.append(i)
        return out

    def _crossing_pairs(self, targets: Targets, hid: int):
        agents = self.swarm.agents
        pos = np.array([a.pos for a in agents])
        near = _near_hole_mask(self.slice, pos, [hid], 2.0 * self.swarm.h)
        center = self._hole_center(hid)
        out = []
        for i in _coupled_pairs(agents):
            if not (near[i] or near[i + 1]):
                continue
            approaching = (
                float(targets.e_ax[i] @ (center - pos[i])) > 0.0
                or float(targets.e_ax[i + 1] @ (center - pos[i + 1])) > 0.0)
            if not approaching:
                continue
            if geometry.segment_hits(self.slice, targets.t[i],
                                     targets.t[i + 1],
                                     loop_ids=[hid]) is not None:
                out.append(i)
        return out

    def _diverging_pairs(self, targets: Targets, hid: int):
        """Coupled interior pairs pulled apart by opposed headings.

        Ahead of a hole the principal direction rotates 90 degrees inside a
        lens reaching sqrt(2) hole radii from the center, so the chain
        splits there before any segment touches the rim. That divergence is
        the hole encounter.
        """
        agents = self.swarm.agents
        pos = np.array([a.pos for a in agents])
        loop = self.slice.loops[hid]
        center = loop.pts.mean(axis=0)
        radius = float(np.max(np.hypot(*(loop.pts - center).T)))
        margin = 0.5 * radius + self.swarm.h
        near = np.hypot(*(pos - center).T) <= radius + margin
        out = []
        for i in _coupled_pairs(agents):
            if not (near[i] and near[i + 1]):
                continue
            if not (targets.interior[i] and targets.interior[i + 1]):
                continue
            if float(targets.e_ax[i] @ targets.e_ax[i + 1]) >= -0.25:
                continue
            dt = float(np.hypot(*(targets.t[i + 1] - targets.t[i])))
            dp = float(np.hypot(*(pos[i + 1] - pos[i])))
            if dt > dp:
                out.append(i)
        return out

    def _colliding_pairs(self, targets: Targets, hid: int):
        """One victim per coupled pair meeting head-on inside a hole's lens.

        Where the principal direction swings vertical at the stagnation
        points, two coupled agents can end up on the same rotated lane with
        opposed headings, closing on each other; they cannot pass through
        without their lines crossing, so the lighter member retires.
        """
        agents = self.swarm.agents
        pairs = _coupled_pairs(agents)
        if len(pairs) == 0:
            return []
        loop = self.slice.loops[hid]
        center = loop.pts.mean(axis=0)
        radius = float(np.max(np.hypot(*(loop.pts - center).T)))
        lens = 1.5 * radius + self.swarm.h
        pos = np.array([a.pos for a in agents])
        near = np.hypot(*(pos - center).T) <= lens
        ok = (targets.interior[pairs] & targets.interior[pairs + 1]
              & near[pairs] & near[pairs + 1])
        ok &= np.einsum("ni,ni->n",
                        targets.e_ax[pairs], targets.e_ax[pairs + 1]) < 0.0
        dt = np.hypot(*(targets.t[pairs + 1] - targets.t[pairs]).T)
        dp = np.hypot(*(pos[pairs + 1] - pos[pairs]).T)
        ok &= dt < dp
        masses = np.array([a.mass for a in agents])
        hits = pairs[ok]
        return list(np.where(masses[hits] <= masses[hits + 1],
                             hits, hits + 1))

    def handle_holes(self, targets: Targets) -> bool:
        """Insert, retire around, and remove hole-rim agents. True if the
        swarm changed (targets must then be recomputed)."""
        changed = False
        k = self.swarm.k + 1
        agents = self.swarm.agents
        for hid in self.hole_ids:
            pair = self.active_pairs.get(hid)
            if pair is not None:
                ba, bb = pair
                perim = self.slice.loop_perimeter(hid)
                dist = geometry.arc_distance(
                    self.slice, hid, ba.cursor.arc_length,
                    bb.cursor.arc_length)
                # the walkers close on each other at up to 2h per iteration,
                # so "met" must trigger a full combined step early or they
                # overshoot and their rim lines cross
                if (dist < 2.0 * self.swarm.h
                        and min(ba.arc_travel, bb.arc_travel)
                        > perim / 4.0):
                    ia = agents.index(ba)
                    ib = agents.index(bb)
                    for idx, ag in sorted(((ia, ba), (ib, bb)),
                                          key=lambda p: p[0]):
                        self.events.append({
                            "iter": k, "event": "inner_boundary_remove",
                            "agent_index": idx,
                            "position": [float(ag.pos[0]),
                                         float(ag.pos[1])]})
                    lo = min(ia, ib)
                    for ag in (ba, bb):
                        agents.remove(ag)
                    if 0 < lo <= len(agents) - 1:
                        agents[lo - 1].link_next = True
                    self.active_pairs[hid] = None
                    self.holes_done.add(hid)
                    pair = None
                    changed = True
        if changed:
            return True
        for hid in self.hole_ids:
            colliding = sorted(set(self._colliding_pairs(targets, hid)))
            if colliding:
                self._retire(colliding, k)
                return True
            if hid in self.holes_done:
                # once the rim pair has rounded the hole, the split is over;
                # stray contacts from the rejoining chains just retire
                retire = self._crossing_interior(targets, hid)
                if retire:
                    self._retire(retire, k)
                    changed = True
            elif self.active_pairs.get(hid) is None:
                cross_pairs = (self._crossing_pairs(targets, hid)
                               + self._diverging_pairs(targets, hid))
                cross_agents = self._crossing_interior(targets, hid)
                if not cross_pairs and not cross_agents:
                    continue
                perim = self.slice.loop_perimeter(hid)
                if perim < 4.0 * self.swarm.l:
                    raise HoleTooSmall(
                        f"hole {hid} perimeter {perim:g} cannot host rim "
                        f"agents at spacing {self.swarm.l:g}",
                        module="swarm_engine", operation="handle_holes")
                doomed = [agents[i]
                          for i in self._doomed_interior(targets, hid)]
                self._insert_rim_pair(hid, cross_pairs, cross_agents, k)
                if doomed:
                    self._retire(sorted(agents.index(a) for a in doomed), k)
                changed = True
            else:
                retire = sorted(set(self._crossing_interior(targets, hid))
                                | set(self._doomed_interior(targets, hid)))
                if retire:
                    self._retire(retire, k)
                    changed = True
        return changed

    def _insert_rim_pair(self, hid, cross_pairs, cross_agents, k):
        agents = self.swarm.agents
        loop = self.slice.loops[hid]
        center = loop.pts.mean(axis=0)

        def pair_score(i):
            return (float(np.hypot(*(agents[i].pos - center)))
                    + float(np.hypot(*(agents[i + 1].pos - center))))

        candidates = list(cross_pairs)
        if not candidates:
            # only step segments cross: flank the closest crossing agent
            coupled = set(_coupled_pairs(agents).tolist())
            for i in cross_agents:
                for j in (i - 1, i):
                    if j in coupled:
                        candidates.append(j)
        if not candidates:
            return
        best = min(candidates, key=pair_score)
        a1 = agents[best]
        a2 = agents[best + 1]
        cursors = []
        for src in (a1, a2):
            c, _ = geometry.project_to_boundary(self.slice, src.pos,
                                                loop_ids=[hid])
            cursors.append(c)
        # the walkers must round the hole on opposite sides: their initial
        # momentum points arc-wise away from each other
        perim = self.slice.loop_perimeter(hid)
        delta = (cursors[0].arc_length - cursors[1].arc_length) % perim
        sign_a = 1.0 if 0.0 < delta <= perim / 2.0 else -1.0
        new_agents = []
        for c, sgn in zip(cursors, (sign_a, -sign_a)):
            p = geometry.cursor_to_point(self.slice, c)
            tau = geometry.cursor_tangent(self.slice, c) * sgn
            new_agents.append(Agent(pos=p,
                                    prev_pos=p - self.swarm.h * tau,
                                    kind=INNER_BOUNDARY, trace_id=-1,
                                    cursor=c))
        ba, bb = new_agents
        ba.link_next = False
        agents.insert(best + 1, ba)
        agents.insert(best + 2, bb)
        for off, ag in ((1, ba), (2, bb)):
            self._open_trace(ag, born_iter=k)
            self.events.append({
                "iter": k, "event": "inner_boundary_add",
                "agent_index": int(best + off),
                "position": [float(ag.pos[0]), float(ag.pos[1])]})
        self.active_pairs[hid] = (ba, bb)

    def _retire(self, indices, k, break_links: bool = False):
        """Remove interior agents that hit a split hole or left the part.

        Hole retirement restitches the chain around the obstruction;
        retirement at the far boundary breaks it instead, because the
        departed line is complete and coupling its distant neighbors
        would only breed filler spawns along the exit edge.
        """
        agents = self.swarm.agents
        for ag in [agents[i] for i in indices]:
            idx = agents.index(ag)
            self.events.append({
                "iter": k, "event": "kill", "agent_index": idx,
                "position": [float(ag.pos[0]), float(ag.pos[1])]})
            if idx > 0:
                agents[idx - 1].link_next = (
                    not break_links
                    and agents[idx - 1].link_next and ag.link_next)
            agents.pop(idx)

    # -- spawn/kill selection and repositioning -----------------------------

    def _base_scenario(self, targets: Targets) -> _Scenario:
        links = np.array([a.link_next for a in self.swarm.agents])
        links[-1] = False
        return _Scenario(targets.t, targets.e_ax, targets.e_rad,
                         targets.lower, targets.upper, targets.masses,
                         links)

    def _spawn_row(self, i):
        """Target data for an agent inserted between i and i+1."""
        a1 = self.swarm.agents[i]
        a2 = self.swarm.agents[i + 1]
        pos = 0.5 * (a1.pos + a2.pos)
        prev = 0.5 * (a1.prev_pos + a2.prev_pos)
        tmp = Agent(pos=pos, prev_pos=prev, kind=INTERIOR, trace_id=-1)
        t0 = time.perf_counter()
        t = ideal_step(tmp, self.field, self.swarm.h)
        self.timings["sampling"] += time.perf_counter() - t0
        heading = (t - pos) / self.swarm.h
        # momentum starts aligned with the local field (oriented by the
        # parents' consensus), not with the raw parent average: a stale
        # average can point against the flow and strand the newcomer
        tmp.prev_pos = pos - self.swarm.h * heading
        _, mags, _ = stress.sample_many_guarded(self.field, pos[None, :])
        mass = float(stress.virtual_mass_many(self.field, mags)[0])
        return tmp, t, heading, mass

    def step(self, targets: Targets):
        """One spawn/kill selection plus repositioning."""
        swarm = self.swarm
        agents = swarm.agents
        n = len(agents)
        h, l, K = swarm.h, swarm.l, swarm.K
        pos = np.array([a.pos for a in agents])
        prev = np.array([a.prev_pos for a in agents])
        base = self._base_scenario(targets)
        pairs = base.pairs()
        dhat = _pair_dhat(pos, prev, targets.t, pairs)
        gaps = np.einsum("pv,pv->p",
                         targets.t[pairs + 1] - targets.t[pairs], dhat)

        t0 = time.perf_counter()
        warm = self._warm if (self._warm is not None
                              and len(self._warm) == 2 * n) else None
        sol0, prob0 = base.solve(pos, prev, K, l, self.qp_backend, warm)
        self.timings["solve"] += time.perf_counter() - t0
        best = (sol0.objective / n, "keep", base, sol0, None)

        if len(pairs) > 0:
            kill_pair = int(pairs[int(np.argmin(gaps))])
            if float(np.min(gaps)) < 0.75 * l:
                victim = self._kill_victim(kill_pair)
                if victim is not None:
                    links = np.array([a.link_next for a in agents])
                    links[-1] = False
                    nl = np.delete(links, victim)
                    if victim > 0:
                        nl[victim - 1] = links[victim - 1] and links[victim]
                    sc = _Scenario(
                        np.delete(targets.t, victim, axis=0),
                        np.delete(targets.e_ax, victim, axis=0),
                        np.delete(targets.e_rad, victim, axis=0),
                        np.delete(targets.lower,
                                  [2 * victim, 2 * victim + 1]),
                        np.delete(targets.upper,
                                  [2 * victim, 2 * victim + 1]),
                        np.delete(targets.masses, victim), nl)
                    t0 = time.perf_counter()
                    sol, _ = sc.solve(np.delete(pos, victim, axis=0),
                                      np.delete(prev, victim, axis=0),
                                      K, l, self.qp_backend)
                    self.timings["solve"] += time.perf_counter() - t0
                    if sol.objective / (n - 1) < best[0]:
                        best = (sol.objective / (n - 1), "kill", sc, sol,
                                victim)
            spawn_pair = int(pairs[int(np.argmax(gaps))])
            if (float(np.max(gaps)) > 1.5 * l
                    and self._spawn_ok(agents[spawn_pair],
                                       agents[spawn_pair + 1],
                                       targets.e_ax[spawn_pair],
                                       targets.e_ax[spawn_pair + 1])):
                tmp, t_new, heading, mass = self._spawn_row(spawn_pair)
                at = spawn_pair + 1
                links = np.array([a.link_next for a in agents])
                links[-1] = False
                nl = np.insert(links, at, True)
                sc = _Scenario(
                    np.insert(targets.t, at, t_new, axis=0),
                    np.insert(targets.e_ax, at, heading, axis=0),
                    np.insert(targets.e_rad, at, _perp(heading), axis=0),
                    np.insert(targets.lower, 2 * at,
                              (-h / 4.0, -h / 8.0)),
                    np.insert(targets.upper, 2 * at, (h / 4.0, h / 8.0)),
                    np.insert(targets.masses, at, mass), nl)
                t0 = time.perf_counter()
                sol, _ = sc.solve(np.insert(pos, at, tmp.pos, axis=0),
                                  np.insert(prev, at, tmp.prev_pos, axis=0),
                                  K, l, self.qp_backend)
                self.timings["solve"] += time.perf_counter() - t0
                if sol.objective / (n + 1) < best[0]:
                    best = (sol.objective / (n + 1), "spawn", sc, sol,
                            (at, tmp))

        _, action, sc, sol, info = best
        k = swarm.k + 1
        if action == "kill":
            victim = info
            ag = agents[victim]
            self.events.append({
                "iter": k, "event": "kill", "agent_index": int(victim),
                "position": [float(ag.pos[0]), float(ag.pos[1])]})
            if victim > 0:
                agents[victim - 1].link_next = (
                    agents[victim - 1].link_next and ag.link_next)
            agents.pop(victim)
            targets = _delete_target_row(targets, victim)
        elif action == "spawn":
            at, tmp = info
            self.events.append({
                "iter": k, "event": "spawn", "agent_index": int(at),
                "position": [float(tmp.pos[0]), float(tmp.pos[1])]})
            agents.insert(at, tmp)
            self._open_trace(tmp, born_iter=k)
            targets = _scenario_targets(sc, targets, at)
        self._warm = sol.x if action == "keep" else None
        self._apply_solution(sc, sol, targets, k)

    def _spawn_ok(self, a1: Agent, a2: Agent, e1, e2) -> bool:
        """A gap is fillable only between parents moving the same way.

        A pair drifting apart in opposite directions (by momentum or by
        upcoming heading) re-stretches at once, so a midpoint agent there
        would just seed an endless spawn cycle; such gaps belong to the
        hole-splitting logic. The midpoint must also not lie inside or be
        heading into a hole.
        """
        u1 = a1.pos - a1.prev_pos
        u2 = a2.pos - a2.prev_pos
        if float(u1 @ u2) < 0.0 or float(np.dot(e1, e2)) <= 0.0:
            return False
        if not self.hole_ids:
            return True
        mid = 0.5 * (a1.pos + a2.pos)
        seg = 0.5 * (u1 + u2)
        # gaps opening toward a hole belong to the splitting logic (the lens
        # ahead of the rim is where the chain is meant to tear), and in the
        # hole's wake the stress direction is noise-dominated and the two
        # rejoining chains are still converging, so a midpoint agent there
        # tends to double back or braid into the seam; spawn in neither zone
        nseg = np.linalg.norm(seg)
        if nseg > 0.0:
            for hid in self.hole_ids:
                loop = self.slice.loops[hid]
                center = loop.pts.mean(axis=0)
                radius = float(np.max(np.hypot(*(loop.pts - center).T)))
                to_c = center - mid
                ndc = np.linalg.norm(to_c)
                if ndc <= 0.0:
                    return False
                cos = float(seg @ to_c) / (nseg * ndc)
                if ndc <= radius + 5.0 * self.swarm.h and cos < -0.2:
                    return False
                if ndc <= 1.5 * radius + self.swarm.h and cos > 0.2:
                    return False
        if not _near_hole_mask(self.slice, mid[None, :], self.hole_ids,
                               2.0 * self.swarm.h)[0]:
            return True
        if not geometry.contains(self.slice, mid):
            return False
        return geometry.segment_hits(self.slice, mid, mid + seg,
                                     loop_ids=self.hole_ids) is None

    def _kill_victim(self, i):
        a1 = self.swarm.agents[i]
        a2 = self.swarm.agents[i + 1]
        if a1.is_boundary and a2.is_boundary:
            return None
        if a1.is_boundary:
            return i + 1
        if a2.is_boundary:
            return i
        return i if a1.mass <= a2.mass else i + 1

    def _apply_solution(self, sc: _Scenario, sol, targets: Targets, k):
        agents = self.swarm.agents
        x = sol.x
        d_ax = x[0::2]
        d_rad = x[1::2]
        new_pos = (targets.t + d_ax[:, None] * sc.e_ax
                   + d_rad[:, None] * sc.e_rad)
        moving = np.array([not a.frozen for a in agents])
        inter = targets.interior & moving
        inside = np.ones(len(agents), dtype=bool)
        if np.any(inter):
            inside[inter] = geometry.contains_many(self.slice, new_pos[inter])
        if self.hole_ids:
            near_hole = _near_hole_mask(self.slice, new_pos, self.hole_ids,
                                        self.swarm.h)
        else:
            near_hole = np.zeros(len(agents), dtype=bool)
        # adjacency is recorded only while the coupled pair actually runs
        # side by side; a link stretched across a hole transit is a
        # topological tie, not a printed lane spacing
        succ_ids = [
            agents[i + 1].trace_id
            if (a.link_next and i + 1 < len(agents)
                and float(np.hypot(*(agents[i + 1].pos - a.pos)))
                <= 3.0 * self.swarm.l) else -1
            for i, a in enumerate(agents)]
        appended = []
        squeezed = []
        for i, a in enumerate(agents):
            if a.frozen:
                continue
            new_prev = a.pos
            if a.is_boundary:
                step = targets.signed_ds[i] + d_ax[i]
                c = geometry.cursor_advance(self.slice, a.cursor, step)
                a.cursor = c
                a.pos = geometry.cursor_to_point(self.slice, c)
                a.arc_travel += abs(step)
            else:
                p = new_pos[i]
                if not inside[i]:
                    # the box around a rim-clamped or edge-grazing target
                    # can stick out of the part; feasibility wins over
                    # optimality, so clamp to the nearest boundary
                    loops = self.hole_ids if near_hole[i] else [0]
                    c, _ = geometry.project_to_boundary(self.slice, p,
                                                        loop_ids=loops)
                    p = geometry.cursor_to_point(self.slice, c)
                    # an unclamped step always advances at least 3h/4; a
                    # clamped one that moves less is pinned against the
                    # boundary and can never rejoin the march
                    if float(np.hypot(*(p - a.pos))) < 0.5 * self.swarm.h:
                        squeezed.append(a)
                        continue
                a.pos = p
            a.prev_pos = new_prev
            self._append(a, succ_ids[i])
            appended.append(a)
        self._fill_masses(appended)
        for a in squeezed:
            idx = agents.index(a)
            self.events.append({
                "iter": k, "event": "kill", "agent_index": idx,
                "position": [float(a.pos[0]), float(a.pos[1])]})
            if idx > 0:
                agents[idx - 1].link_next = (
                    agents[idx - 1].link_next and a.link_next)
            agents.pop(idx)
        self.swarm.k = k

    # -- termination --------------------------------------------------------

    def _exiting_mask(self, targets: Targets) -> np.ndarray:
        """Per-agent flag: interior agent whose whole step box leaves the part.

        An agent exits when its ideal target is outside and no point of its
        repositioning box (sampled on a 3x3 grid of the axial/radial bound
        extremes) stays inside.
        """
        mask = np.zeros(len(targets.t), dtype=bool)
        idx = np.flatnonzero(targets.interior)
        if len(idx) == 0:
            return mask
        t0 = time.perf_counter()
        inside = geometry.contains_many(self.slice, targets.t[idx])
        cand = idx[~inside]
        if len(cand):
            h = self.swarm.h
            offs_ax = np.array([-h / 4.0, 0.0, h / 4.0])
            offs_rad = np.array([-h / 8.0, 0.0, h / 8.0])
            grid = np.stack(np.meshgrid(offs_ax, offs_rad), axis=-1)
            grid = grid.reshape(-1, 2)
            pts = (targets.t[cand][:, None, :]
                   + grid[None, :, 0:1] * targets.e_ax[cand][:, None, :]
                   + grid[None, :, 1:2] * targets.e_rad[cand][:, None, :])
            ok = geometry.contains_many(self.slice, pts.reshape(-1, 2))
            ok = ok.reshape(len(cand), -1)
            mask[cand[~np.any(ok, axis=1)]] = True
        self.timings["geometry"] += time.perf_counter() - t0
        return mask

    def _adrift_indices(self) -> np.ndarray:
        """Interior agents persistently moving against every coupled neighbour.

        Near a stagnation point the principal direction rotates a quarter
        turn and the momentum sign can lock an agent onto the reverse lane
        of its own streamline.  Such an agent retraces covered ground while
        the rest of the front marches on, so once the reversal has persisted
        for a few iterations the agent is removed and its neighbours are
        stitched together.
        """
        agents = self.swarm.agents
        n = len(agents)
        tiny = 1e-9 * self.swarm.h
        disp = np.array([a.pos - a.prev_pos for a in agents]) \
            if n else np.zeros((0, 2))
        moving = np.linalg.norm(disp, axis=1) > tiny if n else np.zeros(0)
        out = []
        for i, a in enumerate(agents):
            if a.kind != INTERIOR or a.frozen or not moving[i]:
                a.adrift = 0
                continue
            opposed = 0
            for j in ((i - 1) if i > 0 and agents[i - 1].link_next else None,
                      (i + 1) if a.link_next and i + 1 < n else None):
                if j is None or not moving[j]:
                    continue
                if float(disp[i] @ disp[j]) < 0.0:
                    opposed += 1
                else:
                    opposed = -1
                    break
            if opposed > 0:
                a.adrift += 1
                if a.adrift >= 3:
                    out.append(i)
            else:
                a.adrift = 0
        return np.array(out, dtype=int)

    # -- main loop -----------------------------------------------------------

    def _targets(self) -> Targets:
        t0 = time.perf_counter()
        targets = compute_targets(self.swarm, self.slice, self.field,
                                  self.hole_ids)
        self.timings["sampling"] += time.perf_counter() - t0
        return targets

    def run(self) -> TrajectorySet:
        incomplete = True
        while self.swarm.k < self.max_iterations:
            targets = self._targets()
            if not np.any(targets.interior):
                incomplete = False
                break
            exiting = self._exiting_mask(targets)
            if np.array_equal(exiting, targets.interior):
                incomplete = False
                break
            if np.any(exiting):
                # agents that reached the far side retire where they stand;
                # the rest of the front keeps marching
                self._retire(np.flatnonzero(exiting), self.swarm.k,
                             break_links=True)
                targets = self._targets()
                if not np.any(targets.interior):
                    incomplete = False
                    break
            adrift = self._adrift_indices()
            if len(adrift):
                self._retire(adrift, self.swarm.k)
                targets = self._targets()
                if not np.any(targets.interior):
                    incomplete = False
                    break
            guard = 0
            while True:
                t0 = time.perf_counter()
                changed = self.handle_holes(targets)
                self.timings["geometry"] += time.perf_counter() - t0
                if not changed:
                    break
                targets = self._targets()
                guard += 1
                if guard > 4 + len(self.hole_ids):
                    break
            if not any(a.kind == INTERIOR for a in self.swarm.agents):
                incomplete = False
                break
            solve0 = self.timings["solve"]
            sample0 = self.timings["sampling"]
            t0 = time.perf_counter()
            self.step(targets)
            self.timings["assembly"] += (
                time.perf_counter() - t0
                - (self.timings["solve"] - solve0)
                - (self.timings["sampling"] - sample0))
        traces = [t for t in self.traces if len(t.points) >= 2]
        return TrajectorySet(traces=traces, events=self.events,
                             config=self.config, l=self.swarm.l,
                             iterations=self.swarm.k,
                             incomplete=incomplete, timings=self.timings)


def _delete_target_row(targets: Targets, i) -> Targets:
    return Targets(
        t=np.delete(targets.t, i, axis=0),
        e_ax=np.delete(targets.e_ax, i, axis=0),
        e_rad=np.delete(targets.e_rad, i, axis=0),
        lower=np.delete(targets.lower, [2 * i, 2 * i + 1]),
        upper=np.delete(targets.upper, [2 * i, 2 * i + 1]),
        masses=np.delete(targets.masses, i),
        mags=np.delete(targets.mags, i),
        cursors=targets.cursors[:i] + targets.cursors[i + 1:],
        signed_ds=np.delete(targets.signed_ds, i),
        interior=np.delete(targets.interior, i))


def _scenario_targets(sc: _Scenario, targets: Targets, at) -> Targets:
    return Targets(
        t=sc.t, e_ax=sc.e_ax, e_rad=sc.e_rad, lower=sc.lower,
        upper=sc.upper, masses=sc.masses,
        mags=np.insert(targets.mags, at, 0.0),
        cursors=targets.cursors[:at] + [None] + targets.cursors[at:],
        signed_ds=np.insert(targets.signed_ds, at, 0.0),
        interior=np.insert(targets.interior, at, True))


def run(slice_: geometry.PartSlice, field_, seed_edge, l: float = 0.4,
        K: float = 5.0, max_iterations: int | None = None,
        qp_backend: str | None = None,
        config: dict | None = None) -> TrajectorySet:
    """Generate the full trajectory set for one part slice and field."""
    eng = Engine(slice_, field_, seed_edge, l=l, K=K,
                 max_iterations=max_iterations, qp_backend=qp_backend,
                 config=config)
    return eng.run()
