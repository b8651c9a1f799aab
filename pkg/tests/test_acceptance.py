"""Full acceptance gate: every criterion at its production size and tolerance.

Each test prints the PASS/FAIL line for its criterion (visible under
``pytest -s``) and fails if the gate does not hold at the default tolerances.
"""
from avgproc import acceptance


def _check(fn):
    res = fn(quick=False)
    print(res.line())
    assert res.passed, res.line()
    return res


def test_criterion_1_exact_identity_suite():
    res = _check(acceptance.criterion_1_identities)
    assert "identically zero" in res.detail


def test_criterion_2_closed_form():
    _check(acceptance.criterion_2_closed_form)


def test_criterion_3_first_passage_structure():
    _check(acceptance.criterion_3_first_passage)


def test_criterion_4_large_n_asymptotics():
    _check(acceptance.criterion_4_asymptotics)


def test_criterion_5_poissonized_local_limit():
    _check(acceptance.criterion_5_poissonized)


def test_criterion_6_simulation_vs_duality():
    _check(acceptance.criterion_6_simulation)


def test_criterion_7_gaussian_statistic():
    _check(acceptance.criterion_7_clt)


def test_criterion_8_vertex_redistribution_contrast():
    _check(acceptance.criterion_8_potlach)


def test_suite_runner_collects_all():
    lines = []
    results = acceptance.run_acceptance(quick=True, echo=lines.append)
    assert [r.number for r in results] == list(range(1, 9))
    assert len(lines) == 8
    assert all(line.startswith(("PASS", "FAIL")) for line in lines)
