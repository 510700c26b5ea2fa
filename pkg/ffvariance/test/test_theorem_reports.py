#!/usr/bin/env python3
"""
Test Theorem Reports - 定理レポートと q 走査のテスト
"""

import random
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from errors import PreconditionError
from finite_field import construct_field
from poly_ring import Poly
from theorem_reports import (CONDITIONAL_LABEL, conjecture_scan, draw_moduli, katz_reference,
                             resolve_threads, theorem_i_main_term, theorem_i_report, theorem_ii_report,
                             theorem_iii_report, theorem_scan, trace_average, variance_report)


def test_golden_variance_report(T3):
    report = variance_report(2, 0, T3 + 1)
    assert report.mean_value == Fraction(7, 6)
    assert report.V_direct == Fraction(11, 6)
    assert report.V_tilde_direct == Fraction(29, 18)
    assert report.V_spectral == pytest.approx(29 / 18, abs=1e-9)
    assert report.census["primitive_even"] == 2
    assert report.details["identity_gap"] < 1e-9
    data = report.to_dict()
    assert data["V_direct"]["exact"] == "11/6"
    assert data["phi"] == 2


def test_spectral_route_rejects_t_dividing_modulus(T3):
    with pytest.raises(PreconditionError, match="Q\\(0\\)"):
        variance_report(2, 0, T3)
    report = variance_report(2, 0, T3, routes=("direct", "tilde"))
    assert report.V_spectral is None
    assert report.mean_value == Fraction(8, 6)


def test_unknown_route_rejected(T3):
    with pytest.raises(PreconditionError, match="unknown variance routes"):
        variance_report(2, 0, T3 + 1, routes=("direct", "fourier"))


def test_theorem_i_report(F3, T3):
    report = theorem_i_report(3, 0, T3 + 1)
    details = report.details
    assert details["lambda_sum"]["closed_form"] == details["lambda_sum"]["enumerated"]
    assert details["lambda_square_sum"]["closed_form"] == details["lambda_square_sum"]["enumerated"]
    assert Fraction(details["variance_from_sums"]["exact"]) == report.V_direct
    assert report.theorem_main_term == pytest.approx(float(theorem_i_main_term(3, 0, 3, 2)))
    assert report.theorem_residual == pytest.approx(float(report.V_direct) - report.theorem_main_term)


def test_theorem_i_main_term():
    assert theorem_i_main_term(2, 0, 3, 2) == Fraction(3, 2)
    assert theorem_i_main_term(4, 1, 5, 24) == 4 * 25 - Fraction(625, 24)


def test_theorem_i_preconditions(T3):
    with pytest.raises(PreconditionError, match="deg Q > h"):
        theorem_i_report(3, 1, T3 + 1)
    with pytest.raises(PreconditionError, match="Q\\(0\\)"):
        theorem_i_report(3, 0, T3 ** 2 + T3)


def test_theorem_ii_report(T3):
    report = theorem_ii_report(3, 0, T3 ** 2 + 1)
    details = report.details
    assert report.theorem_main_term == details["spectral"]["primitive_even_main"]
    assert details["bound"] == 3 * (3 - 0 - 1 + 2) ** 2
    assert details["envelope"] == (3 - 0 - 1 + 2) ** 2
    assert report.V_spectral == pytest.approx(float(report.V_tilde_direct), abs=1e-9)


def test_theorem_ii_preconditions(T3):
    with pytest.raises(PreconditionError, match="1 <= deg Q <= n"):
        theorem_ii_report(1, 0, T3 ** 2 + 1)


def test_theorem_iii_report(F3, T3):
    report = theorem_iii_report(5, 1, T3 ** 3 + 2 * T3 + 1)
    assert report.theorem_main_term == 45
    assert report.details["status"] == CONDITIONAL_LABEL
    assert report.details["overlap"] == {"case": "deg Q = h+2", "prediction": 45}
    assert report.details["ratio"] == pytest.approx(float(report.V_direct) / 45)


@pytest.mark.parametrize("n, h, coeffs, message", [
    (4, 1, (1, 2, 0, 1), "n >= 5"),
    (5, 1, (1, 0, 0, 1), "square-free"),
    (5, 1, (1, 0, 1), "3 <= deg Q"),
])
def test_theorem_iii_preconditions(F3, n, h, coeffs, message):
    with pytest.raises(PreconditionError, match=message):
        theorem_iii_report(n, h, Poly(F3, coeffs))


def test_draw_moduli(F3):
    rng = random.Random(0)
    moduli = draw_moduli(F3, 1, 5, rng)
    assert sorted(m.coeffs for m in moduli) == [(1, 1), (2, 1)]
    moduli = draw_moduli(construct_field(5, 1), 3, 4, random.Random(1), squarefree=True)
    assert len(moduli) == 4
    assert len(set(moduli)) == 4
    assert all(Q.constant_term != 0 and Q.is_monic() for Q in moduli)
    with pytest.raises(PreconditionError):
        draw_moduli(F3, 0, 1, rng)


def test_resolve_threads(monkeypatch):
    assert resolve_threads(3) == 3
    monkeypatch.setenv("FFVARIANCE_THREADS", "2")
    assert resolve_threads(0) == 2
    monkeypatch.setenv("FFVARIANCE_THREADS", "many")
    assert resolve_threads(0) >= 1


def test_theorem_scan_is_independent_of_threads():
    kwargs = dict(kind="theorem1", qs=[3, 5], n=2, h=0, deg_q=1, moduli_per_field=2, seed=4)
    single = theorem_scan(threads=1, **kwargs)
    parallel = theorem_scan(threads=2, **kwargs)
    pd.testing.assert_frame_equal(single, parallel)
    assert list(single["q"]) == [3, 3, 5, 5]
    assert single["V_spectral"].isna().all()


def test_theorem_scan_spectral_column():
    frame = theorem_scan("theorem2", [3], n=2, h=0, deg_q=1, moduli_per_field=2)
    assert len(frame) == 2
    assert np.allclose(frame["V_spectral"], frame["V_tilde_direct"], atol=1e-9)
    with pytest.raises(PreconditionError, match="unknown theorem kind"):
        theorem_scan("theorem4", [3], n=2, h=0, deg_q=1)


def test_katz_reference():
    assert katz_reference("hybrid", 3, l=4, m=3) == 3
    assert katz_reference("hybrid", 9, l=4, m=3) == 5
    assert katz_reference("even_power", 5, l=4) == 2
    assert katz_reference("odd_squarefree", 1, m=3) == 1
    with pytest.raises(PreconditionError):
        katz_reference("mixed", 3)


def test_trace_average_on_irreducible_modulus(T3):
    # 奇指標の d は 1 なので |tr Θ|² = 1
    result = trace_average(T3 ** 2 + 1, 3, "odd")
    assert result["characters"] == 4
    assert result["average"] == pytest.approx(1.0)


def test_conjecture_scan_rows():
    frame = conjecture_scan(4, 3, 2, [3], moduli_per_field=1, seed=0)
    assert list(frame["family"]) == ["even_power", "hybrid", "odd_squarefree"]
    assert list(frame["reference"]) == [2, 2, 2]
    assert (frame["characters"] > 0).all()
    assert np.allclose(frame["deviation"], frame["average"] - frame["reference"])
    with pytest.raises(PreconditionError, match="l >= 4"):
        conjecture_scan(3, 3, 2, [3])


@pytest.mark.slow
@pytest.mark.parametrize("p, n", [(p, n) for p in (3, 5) for n in (2, 3, 4)])
def test_theorem_i_sums_and_envelope_on_grid(p, n):
    F = construct_field(p, 1)
    rng = random.Random(10 * p + n)
    for h in range(n):
        for degree in range(h + 1, n + 2):
            for Q in draw_moduli(F, degree, 2, rng):
                report = theorem_i_report(n, h, Q)
                details = report.details
                assert details["lambda_sum"]["closed_form"] == details["lambda_sum"]["enumerated"]
                assert details["lambda_square_sum"]["closed_form"] == details["lambda_square_sum"]["enumerated"]
                assert Fraction(details["variance_from_sums"]["exact"]) == report.V_direct
                assert details["observed_constant"] <= 10
                assert details["envelope_holds"]


@pytest.mark.slow
def test_even_power_trace_average_approaches_two():
    rows = []
    for q in (3, 5, 7, 11, 13):
        F = construct_field(q, 1)
        stats = trace_average(Poly.monomial(F, 4), 6, "even")
        assert stats["characters"] == q ** 3 - q ** 2
        rows.append(stats["average"])
    assert katz_reference("even_power", 6, l=4) == 2
    assert abs(rows[-1] - 2) <= 0.25 * 2


@pytest.mark.slow
def test_odd_squarefree_trace_average_approaches_degree_minus_one():
    rows = []
    for q in (3, 5, 7, 11, 13):
        F = construct_field(q, 1)
        Q = draw_moduli(F, 3, 1, random.Random(q), squarefree=True)[0]
        stats = trace_average(Q, 6, "odd")
        assert stats["characters"] > 0
        rows.append(stats["average"])
    reference = katz_reference("odd_squarefree", 6, m=3)
    assert reference == 2
    assert abs(rows[-1] - reference) <= 0.25 * reference
