from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from avgproc.kernels import srw_kernel
from avgproc.series import (
    DEFAULT_ORDERS,
    IdentityReport,
    RationalSeries,
    series_from_sequence,
    verify_closed_form_d1,
    verify_gf_relations,
    verify_potlach_relation,
)
from avgproc.walks import SequenceTable, return_sequence

F = Fraction

coeff_lists = st.lists(st.integers(-5, 5), max_size=5)


def poly(coeffs):
    return RationalSeries(tuple(F(c) for c in coeffs), None)


# ---------------------------------------------------------------------------
# Series arithmetic
# ---------------------------------------------------------------------------


@given(coeff_lists, coeff_lists, coeff_lists)
def test_ring_laws(a, b, c):
    A, B, C = poly(a), poly(b), poly(c)
    assert (A + B) + C == A + (B + C)
    assert A + B == B + A
    assert A * B == B * A
    assert (A * B) * C == A * (B * C)
    assert A * (B + C) == A * B + A * C


@given(coeff_lists, coeff_lists, st.integers(0, 6))
def test_truncation_commutes_with_multiplication(a, b, n):
    A, B = poly(a), poly(b)
    assert (A * B).truncate(n) == A.truncate(n) * B


def test_normalization_and_constructors():
    assert poly([1, 2, 0, 0]).coeffs == (F(1), F(2))
    assert RationalSeries.zero().coeffs == ()
    assert RationalSeries.zero().is_zero()
    assert RationalSeries.constant(3).coeffs == (F(3),)
    assert RationalSeries.monomial(2, F(1, 2)).coeffs == (F(0), F(0), F(1, 2))
    # truncated series keep explicit padding
    assert RationalSeries((1,), 3).coeffs == (F(1), F(0), F(0), F(0))


def test_order_propagation():
    t = RationalSeries((1, 1), 5)
    p = poly([2, 3])
    assert (t + p).order == 5
    assert (t * p).order == 5
    assert (p + p).order is None
    assert (2 * t).order == 5
    assert t.shift(3).order == 8
    short = RationalSeries((1,), 2)
    assert (t * short).order == 2


def test_coefficient_access_and_defects():
    t = RationalSeries((0, 0, 5, 7), 6)
    assert t.c(2) == 5
    assert t.c(6) == 0
    with pytest.raises(IndexError):
        t.c(7)
    assert t.first_nonzero() == (2, F(5))
    with pytest.raises(ValueError):
        t.truncate(9)


def test_scalar_and_reflected_ops():
    t = RationalSeries((1, 2), 3)
    assert (1 - t).coeffs[:2] == (F(0), F(-2))
    assert (F(1, 2) * t).c(1) == 1
    assert (t - 1).c(0) == 0


@given(coeff_lists, coeff_lists, st.integers(0, 8))
def test_division_round_trip(a, b, n):
    B = poly([1] + b)  # force invertible constant term
    A = poly(a)
    qout = A.divide(B, order=n)
    assert qout.order == n
    assert (qout * B.truncate(n)) == A.truncate(n)


def test_division_errors():
    z = RationalSeries.monomial(1)
    with pytest.raises(ZeroDivisionError):
        RationalSeries.constant(1).divide(z, order=4)
    with pytest.raises(ValueError):
        RationalSeries.constant(1).divide(RationalSeries.constant(2))


# ---------------------------------------------------------------------------
# Bridging tables to series
# ---------------------------------------------------------------------------


def test_series_from_sequence_layout(tables_d1):
    q = series_from_sequence(tables_d1["q_tilde"], 6)
    assert q.c(0) == 0  # first_index = 1
    assert q.c(1) == F(1, 2)
    assert q.order == 6


def test_series_from_sequence_errors():
    flo = return_sequence(srw_kernel(1), 8, mode="float")
    with pytest.raises(ValueError):
        series_from_sequence(flo)
    exact = return_sequence(srw_kernel(1), 8)
    with pytest.raises(ValueError):
        series_from_sequence(exact, 9)


# ---------------------------------------------------------------------------
# The identity suite
# ---------------------------------------------------------------------------

IDENTITY_NAMES = [
    "gtilde-from-g",
    "renewal-perturbed",
    "skeleton-perturbed",
    "sphere-renewal-perturbed",
    "gtilde-from-s",
    "stilde-from-s",
    "s-from-g",
    "renewal-srw",
    "skeleton-srw",
    "sphere-renewal-srw",
]


def test_identity_suite_d1(tables_d1):
    reports = verify_gf_relations(1, 32, tables_d1)
    assert [r.name for r in reports] == IDENTITY_NAMES
    for r in reports:
        assert r.ok, r.summary()
        assert "residual == 0" in r.summary()
        assert r.order == 32


def test_identity_suite_d2(tables_d2):
    reports = verify_gf_relations(2, 24, tables_d2)
    assert all(r.ok for r in reports)


def test_identity_suite_detects_corruption(tables_d1):
    bad = dict(tables_d1)
    src = bad["p_tilde"]
    entries = list(src.entries)
    entries[5] += F(1, 1000)
    bad["p_tilde"] = SequenceTable(src.name, src.dimension, src.first_index,
                                   entries, src.exact, src.kernel_name)
    reports = {r.name: r for r in verify_gf_relations(1, 32, bad)}
    involved = {"gtilde-from-g", "renewal-perturbed", "gtilde-from-s"}
    for name, rep in reports.items():
        if name in involved:
            assert not rep.ok, name
            k, _ = rep.first_defect
            assert k >= 5
            assert "FAILS" in rep.summary()
        else:
            assert rep.ok, name


def test_default_orders():
    assert set(DEFAULT_ORDERS) == {1, 2, 3}
    assert all(v >= 32 for v in DEFAULT_ORDERS.values())


def test_closed_form_d1():
    reports = verify_closed_form_d1(40)
    assert [r.name for r in reports] == ["central-binomial-d1", "closed-form-square-d1"]
    assert all(r.ok for r in reports)


@pytest.mark.parametrize("d", [1, 2])
def test_potlach_relation(d):
    rep = verify_potlach_relation(d, n_max=24)
    assert rep.ok, rep.summary()
    assert rep.name == f"potlach-coupling-d{d}"


def test_report_failure_summary():
    bad = IdentityReport("demo", 1, 4, RationalSeries((0, 0, 0, F(1, 3)), 4))
    assert not bad.ok
    assert bad.first_defect == (3, F(1, 3))
    assert "FAILS" in bad.summary() and "z^3" in bad.summary()
