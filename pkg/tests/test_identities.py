"""The identity suites, plus checks that each suite can actually fail."""

from fractions import Fraction

import pytest

from smtinv import identities
from smtinv.identities import (
    abel_aigner_checks,
    d2k_theorem_checks,
    exact_suite,
    gegenbauer_checks,
    inner_sum_checks,
    lemma_gmr_checks,
    numeric_suite,
    p0l_checks,
    relation_checks,
    summarize,
)


def test_exact_suite_passes():
    checks = exact_suite(8, 2)
    summary = summarize(checks)
    assert summary["passed"]
    ids = summary["identities"]
    assert ids["abel-aigner"]["count"] == sum(n for l in range(1, 9) for n in range(1, l + 1))
    assert ids["inner-sum"]["count"] == sum(k + 1 for k in range(9))
    assert all(c.tolerance == 0 and c.error == 0 for c in checks)


def test_inner_sum_zero_convention_fails_only_at_k0():
    checks = inner_sum_checks(8, min_k=0, convention="zero")
    failed = [c.index for c in checks if not c.passed]
    assert failed == [{"k": 0, "l": 0}]


def test_p0l_and_gegenbauer():
    assert all(c.passed for c in p0l_checks(6))
    assert all(c.passed for c in gegenbauer_checks(3))


def test_relations_on_gaussian():
    checks = relation_checks(3)
    assert checks and all(c.passed for c in checks)
    assert max(c.error for c in checks) < 1e-5


def test_lemma_and_theorem_on_gaussian():
    checks = lemma_gmr_checks(3, 2) + d2k_theorem_checks(2)
    assert all(c.passed for c in checks)
    assert max(c.error for c in checks) <= 1e-4


def test_numeric_suite_vacuous_for_k0():
    assert numeric_suite(0, 0) == []
    assert summarize([])["passed"]


# -- sensitivity: a wrong identity must be reported as failing -------------------


def test_abel_aigner_detects_wrong_coefficient(monkeypatch):
    real = identities.coeff_E_sum
    monkeypatch.setattr(identities, "coeff_E_sum",
                        lambda n, m, l: real(n, m, l) + (Fraction(1) if (n, m, l) == (3, 2, 5) else 0))
    failed = [c for c in abel_aigner_checks(6) if not c.passed]
    assert [c.index for c in failed] == [{"n": 3, "m": 2, "l": 5}]


def test_relations_detect_perturbed_moment(monkeypatch):
    real = identities.g_moments
    monkeypatch.setattr(identities, "g_moments",
                        lambda i, j, f, t, *a: real(i, j, f, t, *a) * (1.001 if j == 2 else 1.0))
    assert not all(c.passed for c in relation_checks(2))


def test_lemma_detects_wrong_D_weights(monkeypatch):
    real = identities.d_weights

    def wrong(r):
        w = list(real(r))
        w[0] += 1
        return w

    monkeypatch.setattr(identities, "d_weights", wrong)
    assert not all(c.passed for c in d2k_theorem_checks(1, t_values=(0.5,)))
    assert not all(c.passed for c in lemma_gmr_checks(2, 0, t_values=(0.5,)))


def test_check_record_serialises():
    c = exact_suite(2, 0)[0].to_dict()
    assert {"suite", "identity", "index", "lhs", "rhs", "error", "tolerance", "passed"} <= set(c)
