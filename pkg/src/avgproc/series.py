"""Truncated power series over Q and the generating-function identity suite.

Everything here is exact: coefficients are Fractions, truncation orders are
tracked through every operation, and an identity "holds" only when the
residual series is identically zero through its computable order. The
identities tie the eight walk sequences (return, first return, sphere taboo,
sphere first return — for the plain SRW and for the perturbed difference
walk) to each other, so each DP pass independently cross-checks the others.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .kernels import avg_difference_kernel, potlach_kernels, srw_kernel
from .walks import SequenceTable, first_passage_sequences, return_sequence

#: identity-suite truncation orders used by the acceptance harness
DEFAULT_ORDERS = {1: 64, 2: 64, 3: 32}


@dataclass(frozen=True)
class RationalSeries:
    """A power series known through z^order (order=None: exact polynomial)."""

    coeffs: tuple
    order: int | None = None

    def __post_init__(self):
        cs = [Fraction(c) for c in self.coeffs]
        if self.order is None:
            while cs and cs[-1] == 0:
                cs.pop()
        else:
            if self.order < 0:
                raise ValueError("order must be >= 0")
            cs = cs[: self.order + 1]
            cs += [Fraction(0)] * (self.order + 1 - len(cs))
        object.__setattr__(self, "coeffs", tuple(cs))

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, c) -> "RationalSeries":
        return cls((Fraction(c),), None)

    @classmethod
    def monomial(cls, k: int, c=1) -> "RationalSeries":
        return cls((Fraction(0),) * k + (Fraction(c),), None)

    @classmethod
    def zero(cls) -> "RationalSeries":
        return cls((), None)

    # -- bookkeeping ---------------------------------------------------------

    @property
    def eff_order(self) -> float:
        return math.inf if self.order is None else self.order

    def c(self, k: int) -> Fraction:
        if k > self.eff_order:
            raise IndexError(f"coefficient {k} beyond known order {self.order}")
        return self.coeffs[k] if k < len(self.coeffs) else Fraction(0)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.coeffs)

    def first_nonzero(self):
        for k, v in enumerate(self.coeffs):
            if v != 0:
                return k, v
        return None

    def truncate(self, order: int) -> "RationalSeries":
        if order > self.eff_order:
            raise ValueError(f"cannot extend known order {self.order} to {order}")
        return RationalSeries(self.coeffs, order)

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "RationalSeries":
        if isinstance(other, RationalSeries):
            return other
        return RationalSeries.constant(other)

    def __add__(self, other) -> "RationalSeries":
        other = self._coerce(other)
        n = min(self.eff_order, other.eff_order)
        if n is math.inf:
            top = max(len(self.coeffs), len(other.coeffs))
            return RationalSeries(
                tuple(self.c(k) + other.c(k) for k in range(top)), None)
        n = int(n)
        return RationalSeries(
            tuple(self.c(k) + other.c(k) for k in range(n + 1)), n)

    __radd__ = __add__

    def __neg__(self) -> "RationalSeries":
        return RationalSeries(tuple(-v for v in self.coeffs), self.order)

    def __sub__(self, other) -> "RationalSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RationalSeries":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "RationalSeries":
        if not isinstance(other, RationalSeries):
            return RationalSeries(
                tuple(Fraction(other) * v for v in self.coeffs), self.order)
        n = min(self.eff_order, other.eff_order)
        if n is math.inf:
            top = len(self.coeffs) + len(other.coeffs)
            n_out = max(top - 1, 0)
        else:
            n_out = int(n)
        out = [Fraction(0)] * (n_out + 1)
        for i, a in enumerate(self.coeffs):
            if a == 0 or i > n_out:
                continue
            for j, b in enumerate(other.coeffs):
                if i + j > n_out:
                    break
                if b != 0:
                    out[i + j] += a * b
        return RationalSeries(tuple(out), None if n is math.inf else n_out)

    __rmul__ = __mul__

    def shift(self, k: int) -> "RationalSeries":
        """Multiply by z^k."""
        if k < 0:
            raise ValueError("shift must be >= 0")
        order = None if self.order is None else self.order + k
        return RationalSeries((Fraction(0),) * k + self.coeffs, order)

    def divide(self, other: "RationalSeries", order: int | None = None) -> "RationalSeries":
        """Long division; the divisor needs an invertible constant term."""
        other = self._coerce(other)
        b0 = other.c(0)
        if b0 == 0:
            raise ZeroDivisionError("divisor has zero constant term")
        n = min(self.eff_order, other.eff_order,
                math.inf if order is None else order)
        if n is math.inf:
            raise ValueError("division of polynomials needs an explicit order")
        n = int(n)
        out = [Fraction(0)] * (n + 1)
        for k in range(n + 1):
            acc = self.c(k)
            for j in range(1, k + 1):
                bj = other.c(j) if j <= other.eff_order else Fraction(0)
                if bj != 0:
                    acc -= bj * out[k - j]
            out[k] = acc / b0
        return RationalSeries(tuple(out), n)

    def __repr__(self):
        head = ", ".join(str(v) for v in self.coeffs[:6])
        tail = ", ..." if len(self.coeffs) > 6 else ""
        o = "poly" if self.order is None else f"O(z^{self.order + 1})"
        return f"RationalSeries([{head}{tail}], {o})"


def series_from_sequence(table: SequenceTable, order: int | None = None) -> RationalSeries:
    """Generating function sum_n table[n] z^n as an exact truncated series."""
    if not table.exact:
        raise ValueError(f"table {table.name!r} is float-valued; identities need exact mode")
    if order is None:
        order = table.last_index
    if order > table.last_index:
        raise ValueError(
            f"table {table.name!r} has entries to n={table.last_index}, need n={order}")
    coeffs = [Fraction(0)] * (order + 1)
    for n in range(table.first_index, order + 1):
        coeffs[n] = table[n]
    return RationalSeries(tuple(coeffs), order)


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of one generating-function identity check."""

    name: str
    dimension: int
    order: int
    residual: RationalSeries

    @property
    def ok(self) -> bool:
        return self.residual.is_zero()

    @property
    def first_defect(self):
        return self.residual.first_nonzero()

    def summary(self) -> str:
        if self.ok:
            return f"{self.name} (d={self.dimension}): residual == 0 through z^{self.order}"
        k, v = self.first_defect
        return (f"{self.name} (d={self.dimension}): FAILS, first nonzero "
                f"coefficient {v} at z^{k}")


def _report(name: str, d: int, residual: RationalSeries) -> IdentityReport:
    return IdentityReport(name, d, int(residual.eff_order), residual)


def gf_tables(d: int, n_max: int) -> dict[str, SequenceTable]:
    """All eight exact sequence tables used by the identity suite."""
    pert = avg_difference_kernel(d)
    srw = srw_kernel(d)
    out = {"p_tilde": return_sequence(pert, n_max),
           "p": return_sequence(srw, n_max)}
    qt, rt, st = first_passage_sequences(pert, n_max)
    q, r, s = first_passage_sequences(srw, n_max)
    out.update(q_tilde=qt, r_tilde=rt, s_tilde=st, q=q, r=r, s=s)
    return out


def verify_gf_relations(d: int, n_max: int | None = None,
                        tables: dict[str, SequenceTable] | None = None) -> list[IdentityReport]:
    """Check the ten denominator-cleared series identities through z^n_max.

    Every identity is evaluated as an exact residual series; a report is "ok"
    only when every computable coefficient vanishes. The sequences entering
    each identity come from independent DP passes, so a bug in any one of the
    kill/record rules shows up as a nonzero residual here.
    """
    if n_max is None:
        n_max = DEFAULT_ORDERS.get(d, 32)
    if tables is None:
        tables = gf_tables(d, n_max)
    G = series_from_sequence(tables["p"], n_max)
    Gt = series_from_sequence(tables["p_tilde"], n_max)
    Q = series_from_sequence(tables["q"], n_max)
    Qt = series_from_sequence(tables["q_tilde"], n_max)
    R = series_from_sequence(tables["r"], n_max)
    Rt = series_from_sequence(tables["r_tilde"], n_max)
    S = series_from_sequence(tables["s"], n_max)
    St = series_from_sequence(tables["s_tilde"], n_max)

    z = RationalSeries.monomial(1)
    one = RationalSeries.constant(1)
    half = Fraction(1, 2)
    omz2 = (one - z) * (one - z)          # (1-z)^2

    checks: list[tuple[str, RationalSeries]] = [
        ("gtilde-from-g", Gt * (one - omz2 * G) - (one - (one - 2 * z) * G)),
        ("renewal-perturbed", Gt - one - Gt * Qt),
        ("skeleton-perturbed", Qt - half * z - Fraction(1, 8 * d) * Rt.shift(2)),
        ("sphere-renewal-perturbed", Rt - one - Rt * St),
        ("gtilde-from-s",
         Gt * ((one - half * z) * (one - St) - RationalSeries.monomial(2, Fraction(1, 8 * d)))
         - (one - St)),
        ("stilde-from-s", St - Fraction(1, 4 * d) * z - S),
        ("s-from-g", 2 * d * S * (G - one) - 2 * d * (G - one) + G.shift(2)),
        ("renewal-srw", G - one - G * Q),
        ("skeleton-srw", 2 * d * Q - R.shift(2)),
        ("sphere-renewal-srw", R - one - R * S),
    ]
    return [_report(name, d, res) for name, res in checks]


def verify_closed_form_d1(n_max: int = 64) -> list[IdentityReport]:
    """d=1 SRW: p_2m = C(2m, m)/4^m, i.e. G(z) = (1 - z^2)^(-1/2).

    Checked two ways: coefficientwise against the central binomial numbers,
    and algebraically as (1 - z^2) G^2 - 1 == 0.
    """
    p = return_sequence(srw_kernel(1), n_max)
    G = series_from_sequence(p, n_max)
    closed = [Fraction(math.comb(n, n // 2), 2**n) if n % 2 == 0 else Fraction(0)
              for n in range(n_max + 1)]
    direct = G - RationalSeries(tuple(closed), n_max)
    z2 = RationalSeries.monomial(2)
    algebraic = (RationalSeries.constant(1) - z2) * G * G - 1
    return [_report("central-binomial-d1", 1, direct),
            _report("closed-form-square-d1", 1, algebraic)]


def verify_potlach_relation(d: int, n_max: int = 48) -> IdentityReport:
    """Coupled/independent relation for the uniform-redistribution dynamics.

    With G the independent-pair return GF (plain SRW skeleton) and Gt the
    coupled-pair one: Gt (1 - (1-z)^2 G) - 2 z G == 0.
    """
    ind, coup = potlach_kernels(d)
    G = series_from_sequence(return_sequence(ind, n_max), n_max)
    Gt = series_from_sequence(return_sequence(coup, n_max), n_max)
    z = RationalSeries.monomial(1)
    one = RationalSeries.constant(1)
    res = Gt * (one - (one - z) * (one - z) * G) - 2 * z * G
    return _report(f"potlach-coupling-d{d}", d, res)
