import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import ive
from scipy.stats import poisson

from avgproc.kernels import avg_difference_kernel, potlach_kernels, srw_kernel
from avgproc.lattice import Box, origin, unit_vectors
from avgproc.walks import (
    PoissonizedValue,
    SequenceTable,
    SequenceTooShortError,
    dp_distribution,
    first_passage_sequences,
    first_return_sequence,
    heat_kernel,
    poissonized_return,
    required_poisson_order,
    return_sequence,
    sphere_first_return_sequence,
    sphere_taboo_sequence,
    srw_return_sequence_float,
)

F = Fraction


# ---------------------------------------------------------------------------
# Reference implementation: a plain dict-based DP over all of Z^d, driven
# only by kernel.row(). Slow but independent of the production engine (no
# sign-symmetry folding, no windows), used to cross-check small cases.
# ---------------------------------------------------------------------------


def dict_step(kernel, dist):
    out = {}
    for x, mass in dist.items():
        for off, pr in kernel.row(x).items():
            y = tuple(a + b for a, b in zip(x, off))
            out[y] = out.get(y, F(0)) + mass * pr
    return out


def reference_tables(kernel, n_max):
    d = kernel.dimension
    zero = origin(d)
    units = unit_vectors(d)

    p, q = [F(1)], []
    free = {zero: F(1)}
    taboo = {zero: F(1)}
    for _ in range(n_max):
        free = dict_step(kernel, free)
        p.append(free.get(zero, F(0)))
        taboo = dict_step(kernel, taboo)
        q.append(taboo.pop(zero, F(0)))

    start = {e: F(1, 2 * d) for e in units}
    r_dist, s_dist = dict(start), dict(start)
    r, s = [F(1)], []
    for _ in range(n_max):
        r_dist = dict_step(kernel, r_dist)
        r_dist.pop(zero, None)
        r.append(sum(r_dist.get(e, F(0)) for e in units))
        s_dist = dict_step(kernel, s_dist)
        s_dist.pop(zero, None)
        s.append(sum(s_dist.get(e, F(0)) for e in units))
        for e in units:
            s_dist.pop(e, None)
    return p, q, r, s


@pytest.mark.parametrize(
    "kernel,n_max",
    [
        (srw_kernel(1), 8),
        (srw_kernel(2), 6),
        (avg_difference_kernel(1), 8),
        (avg_difference_kernel(2), 6),
        (potlach_kernels(1)[1], 8),
    ],
    ids=lambda k: k.name if hasattr(k, "name") else str(k),
)
def test_sequences_match_reference_dp(kernel, n_max):
    p_ref, q_ref, r_ref, s_ref = reference_tables(kernel, n_max)
    assert return_sequence(kernel, n_max).entries == p_ref
    assert first_return_sequence(kernel, n_max).entries == q_ref
    assert sphere_taboo_sequence(kernel, n_max).entries == r_ref
    assert sphere_first_return_sequence(kernel, n_max).entries == s_ref


# ---------------------------------------------------------------------------
# Frozen values
# ---------------------------------------------------------------------------


def test_srw_d1_is_central_binomial():
    seq = return_sequence(srw_kernel(1), 20)
    for m in range(11):
        assert seq[2 * m] == F(math.comb(2 * m, m), 4**m)
    assert all(seq[n] == 0 for n in range(1, 21, 2))


def test_perturbed_return_d1_frozen():
    seq = return_sequence(avg_difference_kernel(1), 4)
    assert seq.entries == [F(1), F(1, 2), F(3, 8), F(9, 32), F(31, 128)]
    assert seq.name == "p_tilde"
    assert seq.exact


@pytest.mark.parametrize("d,p2", [(1, F(3, 8)), (2, F(5, 16)), (3, F(7, 24))])
def test_perturbed_return_small_n(d, p2):
    seq = return_sequence(avg_difference_kernel(d), 2)
    assert seq[1] == F(1, 2)  # lazy origin row, dimension independent
    assert seq[2] == p2  # 1/4 + 1/(8d)


def test_perturbed_first_return_d1_frozen():
    q = first_return_sequence(avg_difference_kernel(1), 3)
    assert q.first_index == 1
    assert q.entries == [F(1, 2), F(1, 8), F(1, 32)]


def test_sphere_sequences_d1_frozen():
    kernel = avg_difference_kernel(1)
    r = sphere_taboo_sequence(kernel, 2)
    s = sphere_first_return_sequence(kernel, 2)
    assert r.entries[:2] == [F(1), F(1, 4)]
    assert s.entries == [F(1, 4), F(1, 4)]


def test_potlach_coupled_return_frozen():
    _, coup = potlach_kernels(1)
    seq = return_sequence(coup, 4)
    assert seq.entries == [F(1), F(3, 4), F(9, 16), F(31, 64), F(105, 256)]


# ---------------------------------------------------------------------------
# Structural relations between independently computed tables
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("d", [1, 2, 3])
def test_first_passage_structure(d):
    n_max = 10 if d < 3 else 8
    fp = first_passage_sequences(avg_difference_kernel(d), n_max)
    fp_srw = first_passage_sequences(srw_kernel(d), n_max)

    # one-step skeleton: leaving the origin lands on the sphere, so the
    # first-return law factors through the taboo sequence
    assert fp.q[1] == F(1, 2)
    for n in range(2, n_max + 1):
        assert fp.q[n] == F(1, 8 * d) * fp.r[n - 2]
    assert fp_srw.q[1] == 0
    for n in range(2, n_max + 1):
        assert fp_srw.q[n] == F(1, 2 * d) * fp_srw.r[n - 2]

    # away from the origin both walks agree, so the sphere return laws
    # differ only through the extra lazy step at n = 1
    assert fp.s[1] == fp_srw.s[1] + F(1, 4 * d)
    for n in range(2, n_max + 1):
        assert fp.s[n] == fp_srw.s[n]


def test_renewal_identity_on_tables():
    p = return_sequence(avg_difference_kernel(2), 12)
    q = first_return_sequence(avg_difference_kernel(2), 12)
    for n in range(1, 13):
        assert p[n] == sum(q[k] * p[n - k] for k in range(1, n + 1))


def test_even_subsequence_decreasing():
    srw = return_sequence(srw_kernel(2), 30)
    assert all(srw[2 * m] > srw[2 * m + 2] for m in range(15))
    pert = return_sequence(avg_difference_kernel(1), 30)
    assert all(pert[n] > pert[n + 1] for n in range(30))


# ---------------------------------------------------------------------------
# Float mode
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("d,n_max", [(1, 40), (2, 40), (3, 30)])
def test_srw_float_closed_form_matches_dp(d, n_max):
    closed = srw_return_sequence_float(d, n_max)
    exact = return_sequence(srw_kernel(d), n_max)
    np.testing.assert_allclose(closed.floats(), exact.floats(), rtol=1e-12, atol=0)
    assert not closed.exact


def test_float_mode_matches_exact():
    kernel = avg_difference_kernel(1)
    ex = return_sequence(kernel, 60)
    fl = return_sequence(kernel, 60, mode="float")
    np.testing.assert_allclose(fl.floats(), ex.floats(), rtol=0, atol=1e-13)
    assert fl.escape_bound < 1e-12


def test_small_window_gives_certified_lower_bounds():
    kernel = srw_kernel(1)
    ex = return_sequence(kernel, 16)
    fl = return_sequence(kernel, 16, mode="float", window_radius=3)
    assert fl.escape_bound > 0
    defect = ex.floats() - fl.floats()
    assert defect.min() >= -1e-14
    assert defect.max() <= fl.escape_bound + 1e-12


def test_bad_mode_rejected():
    with pytest.raises(ValueError):
        return_sequence(srw_kernel(1), 4, mode="rational")


# ---------------------------------------------------------------------------
# SequenceTable plumbing
# ---------------------------------------------------------------------------


def test_sequence_table_indexing():
    q = first_return_sequence(srw_kernel(1), 6)
    assert q.first_index == 1 and q.last_index == 6
    assert len(q) == 6
    with pytest.raises(IndexError):
        q[0]
    with pytest.raises(IndexError):
        q[7]


def test_sequence_table_csv_rows():
    seq = return_sequence(avg_difference_kernel(1), 2)
    rows = list(seq.csv_rows())
    assert rows[2] == ("p_tilde", 2, 3, 8, 0.375)
    flo = return_sequence(avg_difference_kernel(1), 2, mode="float")
    rows = list(flo.csv_rows())
    assert rows[2][:4] == ("p_tilde", 2, "", "")
    assert float(rows[2][4]) == pytest.approx(0.375)


# ---------------------------------------------------------------------------
# Box DP
# ---------------------------------------------------------------------------


def test_box_dp_matches_reference_distribution():
    kernel = avg_difference_kernel(2)
    n = 5
    ref = {(0, 0): F(1)}
    for _ in range(n):
        ref = dict_step(kernel, ref)
    dist = dp_distribution(kernel, (0, 0), n, Box(2, 8, "absorbing"))
    assert dist.escaped_mass() == 0
    for pt, mass in ref.items():
        assert dist.prob(pt) == mass
    assert dist.total_mass() == 1


def test_box_dp_torus_conserves_mass():
    _, coup = potlach_kernels(1)
    dist = dp_distribution(coup, (0,), 5, Box(1, 4))
    assert dist.total_mass() == 1
    assert dist.denominator == 8**5
    # torus indexing wraps
    assert dist.prob((9,)) == dist.prob((0,))


def test_box_dp_absorbing_escape():
    dist = dp_distribution(srw_kernel(1), (0,), 6, Box(1, 2, "absorbing"))
    esc = dist.escaped_mass()
    assert 0 < esc < 1
    assert dist.total_mass() == 1


def test_box_dp_small_box_rejected():
    with pytest.raises(ValueError):
        dp_distribution(avg_difference_kernel(1), (0,), 2, Box(1, 3, "absorbing"))


def test_box_dp_float_matches_exact():
    kernel = avg_difference_kernel(1)
    box = Box(1, 6)
    ex = dp_distribution(kernel, (1,), 8, box)
    fl = dp_distribution(kernel, (1,), 8, box, mode="float")
    np.testing.assert_allclose(fl.values_float(), ex.values_float(), atol=1e-14)


# ---------------------------------------------------------------------------
# Poissonization and the heat kernel
# ---------------------------------------------------------------------------


def test_poissonized_constant_sequence():
    ones = SequenceTable("ones", 1, 0, [1.0] * 201, exact=False)
    out = poissonized_return(ones, 1.0, 50.0)
    assert isinstance(out, PoissonizedValue)
    assert out.value == pytest.approx(1.0, abs=1e-11)
    assert 0 <= out.error < 1e-11


def test_poissonized_at_zero_time():
    seq = return_sequence(srw_kernel(1), 4)
    assert poissonized_return(seq, 1.0, 0.0) == (1.0, 0.0)
    with pytest.raises(ValueError):
        poissonized_return(seq, 1.0, -1.0)


def test_poissonized_short_sequence_raises():
    seq = return_sequence(srw_kernel(1), 50)
    with pytest.raises(SequenceTooShortError) as err:
        poissonized_return(seq, 1.0, 100.0)
    assert err.value.have == 50
    assert err.value.required > 100
    assert err.value.tail > 1e-12


def test_required_poisson_order():
    for mu, tol in [(10.0, 1e-12), (250.0, 1e-9)]:
        n = required_poisson_order(mu, tol)
        assert poisson.sf(n, mu) <= tol
        assert poisson.sf(n - 2, mu) > tol


def test_heat_kernel_matches_bessel_d1():
    # rate-1/2 continuous walk on Z: h_t(0, x) = e^{-t/2} I_x(t/2)
    t = 7.5
    hk = heat_kernel(1, t, Box(1, 40))
    for x in range(-6, 7):
        assert hk.prob((x,)) == pytest.approx(float(ive(abs(x), t / 2)), rel=1e-10)
    assert hk.time == t
    assert hk.tail_bound <= 1e-12
    assert np.sum(hk.values_float()) == pytest.approx(1.0, abs=1e-11)


def test_heat_kernel_zero_time():
    hk = heat_kernel(2, 0.0, Box(2, 3), start=(1, -1))
    assert hk.prob((1, -1)) == 1.0
    assert hk.prob((0, 0)) == 0.0
