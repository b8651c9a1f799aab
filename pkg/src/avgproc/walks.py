"""Step-n distributions, return/first-passage sequences, and Poissonization.

The workhorse is a dynamic program over the positive orthant: every start
distribution used here (point mass at the origin, uniform on the unit sphere)
is invariant under coordinate sign flips, and so is every kernel row pattern,
so only the nonnegative cone is stored and the low faces are mirror-padded.
Exact mode runs on integer numerators scaled by ``kernel.scale`` per step;
float mode runs in double precision inside a certified window and tracks the
mass that leaves it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, NamedTuple

import numpy as np
from scipy.stats import poisson

from .kernels import TransitionKernel, srw_kernel
from .lattice import Box, Point, origin, unit_vectors


class SequenceTooShortError(ValueError):
    """Poisson tail past the available entries exceeds the tolerance."""

    def __init__(self, have: int, required: int, tail: float):
        self.have, self.required, self.tail = have, required, tail
        super().__init__(
            f"sequence has entries to n={have} but the Poisson tail there is "
            f"{tail:.3e}; need entries to about n={required}"
        )


@dataclass
class SequenceTable:
    """Entries of one of the walk sequences, indexed from ``first_index``.

    Exact tables hold Fractions; float tables hold lower bounds whose total
    defect is at most ``escape_bound`` (mass lost past the DP window).
    """

    name: str
    dimension: int
    first_index: int
    entries: list
    exact: bool
    kernel_name: str = ""
    escape_bound: float = 0.0

    @property
    def last_index(self) -> int:
        return self.first_index + len(self.entries) - 1

    def __getitem__(self, n: int):
        if not self.first_index <= n <= self.last_index:
            raise IndexError(f"{self.name}_{n} not computed (have {self.first_index}..{self.last_index})")
        return self.entries[n - self.first_index]

    def __len__(self) -> int:
        return len(self.entries)

    def floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.entries])

    def csv_rows(self) -> Iterable[tuple]:
        for n, v in enumerate(self.entries, start=self.first_index):
            if self.exact:
                yield (self.name, n, v.numerator, v.denominator, float(v))
            else:
                yield (self.name, n, "", "", repr(v))


class FirstPassageTables(NamedTuple):
    q: SequenceTable  # first return to the origin
    r: SequenceTable  # on the unit sphere at step n, origin avoided
    s: SequenceTable  # first return to the unit sphere, origin avoided


@dataclass
class DistVector:
    """Distribution of a walk after ``step`` kernel applications on a box.

    In exact mode ``data`` holds integer numerators against ``denominator``;
    in float mode it holds double-precision probabilities. ``escaped`` is the
    mass absorbed at the boundary (absorbing topology), in the same units as
    ``data``; ``tail_bound`` is any extra certified truncation (used by
    Poisson mixtures such as the heat kernel).
    """

    box: Box
    step: int
    exact: bool
    data: np.ndarray
    denominator: int = 1
    escaped: int | float = 0
    tail_bound: float = 0.0
    time: float | None = None

    def prob(self, p: Point):
        v = self.data[tuple(c + self.box.radius for c in self.box.wrap(p))]
        return Fraction(int(v), self.denominator) if self.exact else float(v)

    def values_float(self) -> np.ndarray:
        if self.exact:
            return (self.data / self.denominator).astype(float)
        return np.asarray(self.data, dtype=float)

    def escaped_mass(self):
        return Fraction(int(self.escaped), self.denominator) if self.exact else self.escaped

    def total_mass(self):
        if self.exact:
            return Fraction(int(sum(self.data.flat)) + int(self.escaped), self.denominator)
        return float(np.sum(self.data) + self.escaped)


def float_window_radius(n: int, d: int, c: float | None = None) -> int:
    """Certified DP window for n float steps: ceil(c*sqrt(n log(n+2))) + 2.

    The default c = 3.4/sqrt(d) keeps the per-axis Gaussian tail far below
    1e-13; the realized escape is measured and reported as a certificate.
    """
    if c is None:
        c = 3.4 / math.sqrt(d)
    return math.ceil(c * math.sqrt(n * math.log(n + 2))) + 2


def _orthant_weights(shape: tuple[int, ...]) -> np.ndarray:
    """Orbit sizes 2^(# nonzero coords) for points stored in the orthant."""
    axes = []
    for s in shape:
        a = np.full(s, 2.0)
        a[0] = 1.0
        axes.append(a)
    return reduce(np.multiply.outer, axes) if len(axes) > 1 else axes[0]


class _OrthantWalker:
    """Sign-symmetric DP engine shared by all sequence computations."""

    def __init__(self, kernel: TransitionKernel, n_steps: int, mode: str = "exact",
                 start: str = "origin", window_radius: int | None = None):
        if mode not in ("exact", "float"):
            raise ValueError("mode must be 'exact' or 'float'")
        self.kernel = kernel
        self.exact = mode == "exact"
        d = kernel.dimension
        self.d = d
        scale = kernel.scale

        if self.exact:
            self.bulk = [(o, int(p * scale)) for o, p in kernel.bulk.items()]
            self.scale = scale
        else:
            self.bulk = [(o, float(p)) for o, p in kernel.bulk.items()]
            self.scale = 1

        # Row corrections at perturbed sites, in full (signed) coordinates.
        self.deltas: list[tuple[Point, list[tuple[Point, object]]]] = []
        for site, row in kernel.perturbation.items():
            delta = []
            for o in set(row) | set(kernel.bulk):
                diff = row.get(o, Fraction(0)) - kernel.bulk.get(o, Fraction(0))
                if diff:
                    delta.append((o, int(diff * scale) if self.exact else float(diff)))
            self.deltas.append((site, delta))

        if window_radius is None:
            if self.exact:
                window_radius = n_steps + kernel.max_step
            else:
                window_radius = float_window_radius(n_steps, d)
        self.rmax = max(window_radius, 2)

        dtype = object if self.exact else np.float64
        self.cur = np.zeros((self.rmax + 1,) * d, dtype=dtype)
        one = 1 if self.exact else 1.0
        if start == "origin":
            self.cur[(0,) * d] = one
            self.denominator = 1
            self.r = 0
        elif start == "sphere":
            for j in range(d):
                self.cur[tuple(1 if i == j else 0 for i in range(d))] = one if self.exact else 1.0 / (2 * d)
            self.denominator = 2 * d if self.exact else 1
            self.r = 1
        else:
            raise ValueError("start must be 'origin' or 'sphere'")
        self.escaped = 0.0  # float mode only; exact windows never overflow
        self._weights: np.ndarray | None = None

    # -- stored-entry helpers ------------------------------------------------

    def _at(self, site: Point):
        stored = tuple(abs(c) for c in site)
        if any(c > self.r for c in stored):
            return 0 if self.exact else 0.0
        return self.cur[stored]

    def origin_value(self):
        v = self.cur[(0,) * self.d]
        return Fraction(int(v), self.denominator) if self.exact else float(v)

    def sphere_value(self):
        total = sum(self.cur[tuple(1 if i == j else 0 for i in range(self.d))] for j in range(self.d))
        total = 2 * total
        return Fraction(int(total), self.denominator) if self.exact else float(total)

    def kill_origin(self):
        self.cur[(0,) * self.d] = 0 if self.exact else 0.0

    def kill_sphere(self):
        for j in range(self.d):
            self.cur[tuple(1 if i == j else 0 for i in range(self.d))] = 0 if self.exact else 0.0

    # -- stepping ------------------------------------------------------------

    def step(self) -> None:
        d, r = self.d, self.r
        r2 = min(max(r + 1, 2), self.rmax)
        dtype = object if self.exact else np.float64

        if not self.exact and r == self.rmax:
            # mass about to shift past the high faces is absorbed; account for
            # it directly (only unit bulk offsets can cross).
            if self._weights is None:
                self._weights = _orthant_weights(self.cur.shape)
            w = self._weights
            for o, c in self.bulk:
                j = next(i for i, oj in enumerate(o) if oj)
                if o[j] > 0:
                    layer = tuple(slice(None) if i != j else self.rmax for i in range(d))
                    self.escaped += c * float(np.sum(self.cur[layer] * w[layer]))

        padded = np.zeros((r2 + 3,) * d, dtype=dtype)
        padded[(slice(1, r + 2),) * d] = self.cur[(slice(0, r + 1),) * d]
        for axis in range(d):
            lo = tuple(slice(None) if i != axis else 0 for i in range(d))
            src = tuple(slice(None) if i != axis else 2 for i in range(d))
            padded[lo] = padded[src]

        nxt = np.zeros((r2 + 1,) * d, dtype=dtype)
        for o, c in self.bulk:
            sl = tuple(slice(1 - oj, 1 - oj + r2 + 1) for oj in o)
            nxt += c * padded[sl]

        for site, delta in self.deltas:
            val = self._at(site)
            if val if self.exact else val != 0.0:
                for o, c in delta:
                    tgt = tuple(a + b for a, b in zip(site, o))
                    if all(0 <= t <= r2 for t in tgt):
                        nxt[tgt] += val * c

        self.cur = nxt
        self.r = r2
        self.denominator *= self.scale

    def as_distribution(self) -> dict[Point, object]:
        """Full signed-space distribution {point: probability} (small r only)."""
        out = {}
        for idx in np.ndindex(self.cur.shape):
            v = self.cur[idx]
            if v if self.exact else v != 0.0:
                val = Fraction(int(v), self.denominator) if self.exact else float(v)
                for signs in itertools.product(*[(1, -1) if c else (1,) for c in idx]):
                    out[tuple(s * c for s, c in zip(signs, idx))] = val
        return out


def return_sequence(kernel: TransitionKernel, n_max: int, mode: str = "exact",
                    name: str | None = None, window_radius: int | None = None) -> SequenceTable:
    """p_n = Pr_0(walk at origin after n steps), n = 0..n_max."""
    if name is None:
        name = "p" if not kernel.perturbation else "p_tilde"
    w = _OrthantWalker(kernel, n_max, mode, "origin", window_radius)
    entries = [w.origin_value()]
    for _ in range(n_max):
        w.step()
        entries.append(w.origin_value())
    return SequenceTable(name, kernel.dimension, 0, entries, w.exact,
                         kernel.name, w.escaped)


def first_return_sequence(kernel: TransitionKernel, n_max: int, mode: str = "exact",
                          name: str | None = None) -> SequenceTable:
    """q_n = Pr_0(first return to the origin at step n), n = 1..n_max."""
    if name is None:
        name = "q" if not kernel.perturbation else "q_tilde"
    w = _OrthantWalker(kernel, n_max, mode, "origin")
    entries = []
    for _ in range(n_max):
        w.step()
        entries.append(w.origin_value())
        w.kill_origin()
    return SequenceTable(name, kernel.dimension, 1, entries, w.exact,
                         kernel.name, w.escaped)


def sphere_taboo_sequence(kernel: TransitionKernel, n_max: int, mode: str = "exact",
                          name: str | None = None) -> SequenceTable:
    """r_n = Pr_sphere(on the unit sphere at step n, origin avoided), n >= 0.

    The start is uniform on S_d(1); the entries do not depend on the start
    point, and the uniform choice preserves the sign symmetry the DP uses.
    """
    if name is None:
        name = "r" if not kernel.perturbation else "r_tilde"
    w = _OrthantWalker(kernel, n_max, mode, "sphere")
    entries = [w.sphere_value()]
    for _ in range(n_max):
        w.step()
        w.kill_origin()
        entries.append(w.sphere_value())
    return SequenceTable(name, kernel.dimension, 0, entries, w.exact,
                         kernel.name, w.escaped)


def sphere_first_return_sequence(kernel: TransitionKernel, n_max: int, mode: str = "exact",
                                 name: str | None = None) -> SequenceTable:
    """s_n = Pr_sphere(first return to the sphere at step n, origin avoided)."""
    if name is None:
        name = "s" if not kernel.perturbation else "s_tilde"
    w = _OrthantWalker(kernel, n_max, mode, "sphere")
    entries = []
    for _ in range(n_max):
        w.step()
        w.kill_origin()
        entries.append(w.sphere_value())
        w.kill_sphere()
    return SequenceTable(name, kernel.dimension, 1, entries, w.exact,
                         kernel.name, w.escaped)


def first_passage_sequences(kernel: TransitionKernel, n_max: int,
                            mode: str = "exact") -> FirstPassageTables:
    """The (q, r, s) tables, each from its own independent DP pass.

    Keeping the passes independent matters: the renewal identities the series
    lab verifies would be circular if r were derived from s or q from r.
    """
    return FirstPassageTables(
        q=first_return_sequence(kernel, n_max, mode),
        r=sphere_taboo_sequence(kernel, n_max, mode),
        s=sphere_first_return_sequence(kernel, n_max, mode),
    )


# ---------------------------------------------------------------------------
# Full-box DP (general start, torus or absorbing boundary)
# ---------------------------------------------------------------------------


def _box_step(kernel, box: Box, cur: np.ndarray, exact: bool, coeffs, deltas):
    d, L, side = box.dimension, box.radius, box.side
    dtype = object if exact else np.float64
    if box.topology == "torus":
        nxt = np.zeros_like(cur)
        for o, c in coeffs:
            nxt += c * np.roll(cur, shift=o, axis=tuple(range(d)))
    else:
        nxt = np.zeros((side,) * d, dtype=dtype)
        for o, c in coeffs:
            src = tuple(slice(max(0, -oj), side - max(0, oj)) for oj in o)
            dst = tuple(slice(max(0, oj), side + min(0, oj)) for oj in o)
            nxt[dst] += c * cur[src]
    for site, delta in deltas:
        idx = tuple(c_ + L for c_ in site)
        val = cur[idx]
        if val if exact else val != 0.0:
            for o, c in delta:
                tgt = tuple(a + b for a, b in zip(site, o))
                if box.topology == "torus":
                    tgt = box.wrap(tgt)
                elif not box.contains(tgt):
                    raise ValueError("perturbed row reaches the absorbing boundary; enlarge the box")
                nxt[tuple(t + L for t in tgt)] += val * c
    return nxt


def _kernel_box_data(kernel: TransitionKernel, exact: bool):
    scale = kernel.scale if exact else 1
    if exact:
        coeffs = [(o, int(p * scale)) for o, p in kernel.bulk.items()]
    else:
        coeffs = [(o, float(p)) for o, p in kernel.bulk.items()]
    deltas = []
    for site, row in kernel.perturbation.items():
        delta = []
        for o in set(row) | set(kernel.bulk):
            diff = row.get(o, Fraction(0)) - kernel.bulk.get(o, Fraction(0))
            if diff:
                delta.append((o, int(diff * scale) if exact else float(diff)))
        deltas.append((site, delta))
    return scale, coeffs, deltas


def dp_distribution(kernel: TransitionKernel, start: Point, n: int, box: Box,
                    mode: str = "exact") -> DistVector:
    """Distribution of the walk after n steps from ``start`` on ``box``.

    Absorbing topology loses the mass that steps outside; the per-site values
    are then lower bounds and the escaped mass bounds the defect.
    """
    if mode not in ("exact", "float"):
        raise ValueError("mode must be 'exact' or 'float'")
    exact = mode == "exact"
    if kernel.perturbation and box.radius < kernel.max_step + 2:
        raise ValueError("box too small for the perturbation zone")
    d, side = box.dimension, box.side
    scale, coeffs, deltas = _kernel_box_data(kernel, exact)

    cur = np.zeros((side,) * d, dtype=object if exact else np.float64)
    cur[tuple(c + box.radius for c in box.wrap(start))] = 1 if exact else 1.0
    for _ in range(n):
        cur = _box_step(kernel, box, cur, exact, coeffs, deltas)

    den = scale**n if exact else 1
    out = DistVector(box=box, step=n, exact=exact, data=cur, denominator=den)
    if box.topology == "absorbing":
        if exact:
            out.escaped = den - int(sum(cur.flat))
        else:
            out.escaped = max(0.0, 1.0 - float(np.sum(cur)))
    return out


def _log_self_conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """c[m] = log sum_j exp(a[j] + b[m-j]) without leaving log space."""
    n = len(a)
    out = np.empty(n)
    for m in range(n):
        s = a[: m + 1] + b[m::-1]
        mx = s.max()
        out[m] = mx + math.log(float(np.sum(np.exp(s - mx))))
    return out


def srw_return_sequence_float(d: int, n_max: int) -> SequenceTable:
    """SRW return probabilities from the closed multinomial form, in floats.

    p_{2m} = (2m)!/(2d)^{2m} sum_{k_1+...+k_d=m} prod_i (k_i!)^{-2}: split the
    2m balanced steps by axis. The inner sum is a d-fold convolution of
    1/(k!)^2, done in log space, so entries stay accurate to a few ulp per
    convolution even at n in the tens of thousands. Odd entries are zero.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    m_max = n_max // 2
    ks = np.arange(m_max + 1, dtype=float)
    base = -2.0 * np.vectorize(math.lgamma)(ks + 1.0)
    conv = base
    for _ in range(d - 1):
        conv = _log_self_conv(conv, base)
    entries = [0.0] * (n_max + 1)
    log2d = math.log(2 * d)
    for m in range(m_max + 1):
        logp = math.lgamma(2 * m + 1) - 2 * m * log2d + conv[m]
        entries[2 * m] = math.exp(logp)
    return SequenceTable("p", d, 0, entries, exact=False, kernel_name="srw",
                         escape_bound=0.0)


def required_poisson_order(mu: float, tol: float) -> int:
    """Smallest N with Pr(Po(mu) > N) <= tol."""
    n = int(poisson.isf(tol, mu))
    while poisson.sf(n, mu) > tol:
        n += 1
    return n


class PoissonizedValue(NamedTuple):
    value: float
    error: float


def poissonized_return(seq: SequenceTable, lam: float, t: float,
                       tol: float = 1e-12) -> PoissonizedValue:
    """e^{-lam t} sum (lam t)^n / n! * p_n with a certified truncation bound.

    The kernel's uniformization rate ``lam`` rescales time; raises
    SequenceTooShortError when the Poisson tail past the table is above tol.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    mu = lam * t
    if mu == 0:
        return PoissonizedValue(float(seq[0]) if seq.first_index == 0 else 0.0, 0.0)
    tail = float(poisson.sf(seq.last_index, mu))
    if tail > tol:
        raise SequenceTooShortError(seq.last_index, required_poisson_order(mu, tol), tail)
    ns = np.arange(seq.first_index, seq.last_index + 1)
    weights = poisson.pmf(ns, mu)
    value = math.fsum(w * float(p) for w, p in zip(weights, seq.entries))
    error = tail + seq.escape_bound + 1e-15
    return PoissonizedValue(value, error)


def heat_kernel(d: int, t: float, box: Box, start: Point | None = None,
                tol: float = 1e-12) -> DistVector:
    """Continuous-time SRW kernel h_t(start, .) on the box.

    The walk jumps at total rate 1/2 (rate 1/(4d) per neighbor), so h_t is
    the Poisson(t/2) mixture of the discrete SRW powers; the mixture is
    truncated with certified tail at most ``tol`` (reported in tail_bound).
    """
    if start is None:
        start = origin(d)
    kernel = srw_kernel(d)
    mu = t / 2.0
    n_max = required_poisson_order(mu, tol) if mu > 0 else 0
    _, coeffs, deltas = _kernel_box_data(kernel, exact=False)
    side = box.side
    cur = np.zeros((side,) * d, dtype=np.float64)
    cur[tuple(c + box.radius for c in box.wrap(start))] = 1.0
    weights = poisson.pmf(np.arange(n_max + 1), mu) if mu > 0 else np.array([1.0])
    acc = weights[0] * cur
    for n in range(1, n_max + 1):
        cur = _box_step(kernel, box, cur, False, coeffs, deltas)
        acc = acc + weights[n] * cur
    out = DistVector(box=box, step=n_max, exact=False, data=acc, time=t,
                     tail_bound=float(poisson.sf(n_max, mu)) if mu > 0 else 0.0)
    if box.topology == "absorbing":
        out.escaped = max(0.0, 1.0 - float(np.sum(acc)) - out.tail_bound)
    return out
