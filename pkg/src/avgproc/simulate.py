"""Stochastic mass-redistribution dynamics on a torus.

Two dynamics share the machinery. "averaging": each edge carries an
exponential clock of rate 1/(2d); when it rings the two endpoint masses are
replaced by their mean. "potlach": each vertex carries a rate-1 clock; when
it rings the vertex splits its entire mass evenly over its 2d neighbours.
Both conserve total mass exactly.

Events are drawn by superposition: the number of rings in [0, t] is Poisson
(total rate x t), marks are iid uniform over edges (or vertices), times are
sorted uniforms. That is the standard order-statistics representation of the
superposed Poisson processes, so the sampled schedule is exact in
distribution. Trials are seeded from spawned SeedSequence children, so any
single trial can be reproduced in isolation; the float path executes all
trials in lockstep with vectorized updates, consuming each child generator
in the same order as ``EventSchedule.sample``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .lattice import Box, Point, origin, unit_vectors

DYNAMICS = ("averaging", "potlach")

#: uniformization rate of the dual single-particle walk, used for box sizing
WALK_RATE = {"averaging": 0.5, "potlach": 1.0}


def default_box_radius(t: float, dynamics: str = "averaging") -> int:
    """Six diffusive standard deviations of the dual walk, plus slack."""
    lam = WALK_RATE[dynamics]
    return math.ceil(6.0 * math.sqrt(max(t, 1.0) * lam)) + 5


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one simulation run."""

    dimension: int = 1
    t: float = 64.0
    trials: int = 1
    seed: int = 0
    dynamics: str = "averaging"
    mode: str = "float"
    box_radius: int | None = None
    initial: str = "point"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.dynamics not in DYNAMICS:
            raise ValueError(f"dynamics must be one of {DYNAMICS}")
        if self.mode not in ("float", "exact"):
            raise ValueError("mode must be 'float' or 'exact'")
        if self.initial != "point":
            raise ValueError("only the point-mass initial condition is supported")

    @property
    def box(self) -> Box:
        r = self.box_radius
        if r is None:
            r = default_box_radius(self.t, self.dynamics)
        return Box(self.dimension, r, "torus")


@dataclass
class MassField:
    """A nonnegative mass configuration on the box (total mass 1 here)."""

    box: Box
    values: np.ndarray
    time: float = 0.0
    exact: bool = False

    @classmethod
    def point_mass(cls, box: Box, site: Point | None = None,
                   exact: bool = False) -> "MassField":
        if site is None:
            site = origin(box.dimension)
        if exact:
            vals = np.full((box.side,) * box.dimension, Fraction(0), dtype=object)
            vals[cls._idx(box, site)] = Fraction(1)
        else:
            vals = np.zeros((box.side,) * box.dimension)
            vals[cls._idx(box, site)] = 1.0
        return cls(box, vals, 0.0, exact)

    @staticmethod
    def _idx(box: Box, p: Point) -> tuple[int, ...]:
        return tuple(c + box.radius for c in box.wrap(p))

    def mass_at(self, p: Point):
        return self.values[self._idx(self.box, p)]

    def total(self):
        return sum(self.values.flat) if self.exact else float(np.sum(self.values))

    def two_norm_sq(self):
        if self.exact:
            return sum(v * v for v in self.values.flat)
        return float(np.sum(self.values * self.values))


def apply_edge_average(field: MassField, x: Point, y: Point) -> None:
    """Replace the masses at adjacent x, y by their mean (in place)."""
    box = field.box
    diff = box.wrap(tuple(a - b for a, b in zip(y, x)))
    if diff not in unit_vectors(box.dimension):
        raise ValueError(f"{x} and {y} are not torus neighbours")
    ix, iy = MassField._idx(box, x), MassField._idx(box, y)
    two = Fraction(2) if field.exact else 2.0
    m = (field.values[ix] + field.values[iy]) / two
    field.values[ix] = m
    field.values[iy] = m


def apply_vertex_potlach(field: MassField, x: Point) -> None:
    """Split the whole mass at x evenly over its 2d neighbours (in place)."""
    box = field.box
    ix = MassField._idx(box, x)
    v = field.values[ix]
    deg = 2 * box.dimension
    share = v / (Fraction(deg) if field.exact else float(deg))
    field.values[ix] = Fraction(0) if field.exact else 0.0
    for e in unit_vectors(box.dimension):
        field.values[MassField._idx(box, tuple(a + b for a, b in zip(x, e)))] += share


@dataclass(frozen=True)
class EventSchedule:
    """Sorted (time, mark) stream for one trial.

    Marks are edge indices site*d + axis for averaging (the edge from the
    site to its +e_axis neighbour; every torus edge appears exactly once) and
    site indices for potlach. Ties in time are broken by position in the
    stream, which is deterministic given the generator state.
    """

    times: np.ndarray
    marks: np.ndarray
    dynamics: str
    box: Box

    @classmethod
    def total_rate(cls, box: Box, dynamics: str) -> float:
        if dynamics == "averaging":
            return box.n_sites / 2.0  # d * n_sites edges, rate 1/(2d) each
        return float(box.n_sites)

    @classmethod
    def n_marks(cls, box: Box, dynamics: str) -> int:
        return box.n_sites * (box.dimension if dynamics == "averaging" else 1)

    @classmethod
    def sample(cls, rng: np.random.Generator, box: Box, t: float,
               dynamics: str = "averaging") -> "EventSchedule":
        n = int(rng.poisson(cls.total_rate(box, dynamics) * t))
        marks = rng.integers(0, cls.n_marks(box, dynamics), size=n, dtype=np.int64)
        times = np.sort(rng.random(n)) * t
        return cls(times, marks, dynamics, box)

    def __len__(self) -> int:
        return len(self.marks)


def _neighbor_table(box: Box) -> np.ndarray:
    """nbr[i, k]: flat index of neighbour k (unit_vectors order) of site i."""
    d, side, n = box.dimension, box.side, box.n_sites
    idx = np.arange(n)
    coords = np.empty((n, d), dtype=np.int64)
    rem = idx
    for j in range(d - 1, -1, -1):
        coords[:, j] = rem % side
        rem = rem // side
    out = np.empty((n, 2 * d), dtype=np.int64)
    for k, e in enumerate(unit_vectors(d)):
        shifted = coords.copy()
        for j, ej in enumerate(e):
            if ej:
                shifted[:, j] = (shifted[:, j] + ej) % side
        flat = np.zeros(n, dtype=np.int64)
        for j in range(d):
            flat = flat * side + shifted[:, j]
        out[:, k] = flat
    return out


def run_schedule(field: MassField, schedule: EventSchedule) -> MassField:
    """Apply every event of the schedule to the field, in order (in place)."""
    box = field.box
    d = box.dimension
    flat = field.values.reshape(-1)
    nbr = _neighbor_table(box)
    if schedule.dynamics == "averaging":
        two = Fraction(2) if field.exact else 2.0
        for m in schedule.marks:
            a = int(m) // d
            b = int(nbr[a, 2 * (int(m) % d)])  # +e_axis neighbour
            mean = (flat[a] + flat[b]) / two
            flat[a] = mean
            flat[b] = mean
    else:
        deg = Fraction(2 * d) if field.exact else float(2 * d)
        zero = Fraction(0) if field.exact else 0.0
        for m in schedule.marks:
            a = int(m)
            share = flat[a] / deg
            flat[a] = zero
            for k in range(2 * d):
                flat[int(nbr[a, k])] += share
    field.time = float(schedule.times[-1]) if len(schedule) else field.time
    return field


@dataclass
class SimulationResult:
    """Final-time fields of every trial plus the generating configuration."""

    config: ExperimentConfig
    box: Box
    fields: np.ndarray  # float: (trials, side, ..., side); exact: object array

    def field(self, i: int) -> MassField:
        return MassField(self.box, self.fields[i], self.config.t,
                         self.config.mode == "exact")

    def totals(self) -> np.ndarray:
        n = self.config.trials
        flat = self.fields.reshape(n, -1)
        if self.config.mode == "exact":
            return np.array([sum(row) for row in flat], dtype=object)
        return flat.sum(axis=1)

    def two_norms_sq(self) -> np.ndarray:
        n = self.config.trials
        flat = self.fields.reshape(n, -1)
        if self.config.mode == "exact":
            return np.array([sum(v * v for v in row) for row in flat], dtype=object)
        return (flat * flat).sum(axis=1)

    def mean_field(self) -> np.ndarray:
        if self.config.mode == "exact":
            acc = sum(self.fields[i] for i in range(self.config.trials))
            return acc / Fraction(self.config.trials)
        return self.fields.mean(axis=0)


def simulate(config: ExperimentConfig) -> SimulationResult:
    """Run ``config.trials`` independent trials from the point-mass start.

    Deterministic in the config: trial i is driven by the i-th spawned child
    of SeedSequence(config.seed) in both modes, so exact and float runs with
    the same seed see identical event streams.
    """
    box = config.box
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    if config.mode == "exact":
        fields = np.empty((config.trials,) + (box.side,) * box.dimension, dtype=object)
        for i, ss in enumerate(children):
            rng = np.random.default_rng(ss)
            sched = EventSchedule.sample(rng, box, config.t, config.dynamics)
            f = MassField.point_mass(box, exact=True)
            run_schedule(f, sched)
            fields[i] = f.values
        return SimulationResult(config, box, fields)
    return SimulationResult(config, box, _simulate_lockstep(config, box, children))


def _simulate_lockstep(config: ExperimentConfig, box: Box, children) -> np.ndarray:
    d, n_sites = box.dimension, box.n_sites
    n_marks = EventSchedule.n_marks(box, config.dynamics)
    mu = EventSchedule.total_rate(box, config.dynamics) * config.t
    nbr = _neighbor_table(box)
    origin_flat = int(np.ravel_multi_index((box.radius,) * d, (box.side,) * d))

    out = np.empty((config.trials, n_sites))
    # chunk the trials so the padded mark matrix stays modest
    max_n_est = int(mu + 10 * math.sqrt(mu + 1) + 10)
    chunk = max(1, min(config.trials, int(5e7 // max(max_n_est, 1))))
    for lo in range(0, config.trials, chunk):
        hi = min(lo + chunk, config.trials)
        counts = []
        marks_list = []
        for ss in children[lo:hi]:
            rng = np.random.default_rng(ss)
            n = int(rng.poisson(mu))
            counts.append(n)
            marks_list.append(rng.integers(0, n_marks, size=n, dtype=np.int64))
        n_max = max(counts) if counts else 0
        marks = np.full((hi - lo, n_max), -1, dtype=np.int64)
        for i, mk in enumerate(marks_list):
            marks[i, : len(mk)] = mk
        del marks_list

        states = np.zeros((hi - lo, n_sites))
        states[:, origin_flat] = 1.0
        rows = np.arange(hi - lo)
        for k in range(n_max):
            m = marks[:, k]
            act = rows[m >= 0]
            if len(act) == 0:
                continue
            mk = m[act]
            if config.dynamics == "averaging":
                a = mk // d
                b = nbr[a, 2 * (mk % d)]
                mean = 0.5 * (states[act, a] + states[act, b])
                states[act, a] = mean
                states[act, b] = mean
            else:
                share = states[act, mk] / (2 * d)
                states[act, mk] = 0.0
                for kk in range(2 * d):
                    states[act, nbr[mk, kk]] += share
        out[lo:hi] = states
    return out.reshape((config.trials,) + (box.side,) * d)
