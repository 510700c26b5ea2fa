#!/usr/bin/env python3
"""
Test Variance Engine - 分散の直接計算・双対変換・スペクトル側の一致のテスト

q=3, n=2, h=0, Q=T+1 の値は手計算で確認したものです。
"""

import random
from fractions import Fraction

import pytest

import variance_engine
from errors import BudgetExceededError, PreconditionError, VerificationError
from finite_field import construct_field
from poly_ring import Poly, enumerate_monic, euler_phi, poly_gcd, random_monic, random_poly
from unit_group import build_unit_group
from variance_engine import (block_moments, dual_representative, dual_transfer, fraction_entry,
                             mean_shift_bound, mean_value, mean_value_closed_form, mean_value_unfolded, nu,
                             orthogonality_expansion, p_decomposition_check, psi_hybrid,
                             psi_progression, tilde_modulus, variance_direct, variance_direct_exact,
                             variance_spectral, variance_tilde_direct_exact, variance_unfolded)


def _random_unit(Q: Poly, rng: random.Random) -> Poly:
    F = Q.field
    while True:
        A = Poly(F, tuple(rng.randrange(F.q) for _ in range(Q.degree)))
        if not A.is_zero() and poly_gcd(A, Q).is_one():
            return A


def _moduli_with_nonzero_constant(F, max_degree):
    for d in range(1, max_degree + 1):
        for Q in enumerate_monic(F, d):
            if Q.constant_term != 0:
                yield Q


# ---- 基準値 ----

@pytest.mark.parametrize("constant", [1, 2])
def test_golden_values(F3, T3, constant):
    Q = T3 + constant
    assert mean_value(2, 0, Q) == Fraction(7, 6)
    assert variance_direct_exact(2, 0, Q) == Fraction(11, 6)
    assert variance_tilde_direct_exact(2, 0, Q) == Fraction(29, 18)
    assert variance_direct(2, 0, Q) == pytest.approx(11 / 6)


def test_golden_block_moments(T3):
    moments = block_moments(2, 0, T3 + 1)
    assert moments.blocks == 3
    assert sorted(moments.s1) == [2, 2, 3]
    assert moments.total == 7


def test_golden_spectral_variance(F3, T3):
    result = variance_spectral(2, 0, T3 + 1)
    assert result.full == pytest.approx(29 / 18, abs=1e-9)
    assert result.trivial_term == pytest.approx(7 / 6, abs=1e-9)
    assert result.odd_mass == pytest.approx(0, abs=1e-9)
    assert result.census["primitive_even"] == 2
    assert result.modulus_tilde == "T^3+T^2"
    assert tilde_modulus(2, 0, T3 + 1) == T3 ** 2 * (T3 + 1)


def test_golden_mean_shift(T3):
    result = mean_shift_bound(2, 0, T3 + 1)
    assert result["difference"] == fraction_entry(Fraction(2, 9))
    assert result["holds"]


def test_fraction_entry():
    assert fraction_entry(Fraction(29, 18)) == {"value": 29 / 18, "exact": "29/18"}
    assert fraction_entry(Fraction(4, 2))["exact"] == "2/1"


# ---- 数え上げ ----

def test_nu_examples(F3, T3):
    assert nu(T3 ** 2, 0) == 2
    assert sum(nu(C, 0) for C in enumerate_monic(F3, 2)) == 24
    with pytest.raises(PreconditionError, match="monic"):
        nu(2 * T3 ** 2, 0)
    with pytest.raises(PreconditionError, match="short interval parameter"):
        nu(T3 ** 2, 2)


def test_psi_progression_sums_to_coprime_mass(F3, T3):
    Q = T3 + 1
    residues = list(build_unit_group(Q).units())
    assert sum(psi_progression(2, Q, A) for A in residues) == 8
    with pytest.raises(PreconditionError, match="not coprime"):
        psi_progression(2, Q, T3 + 1)


def test_psi_hybrid_full_interval_is_prime_number_theorem(F3, T3):
    # h = n-1 の区間は M_n 全体、法 1 なら条件なし
    one = Poly.one(F3)
    assert psi_hybrid(T3 ** 3, 2, one, one) == 27 - 1


# ---- 直接計算の一致 ----

@pytest.mark.parametrize("n, h, coeffs", [
    (2, 0, (1, 1)),
    (2, 1, (1, 0, 1)),
    (3, 0, (2, 1)),
    (3, 1, (0, 1, 1)),
    (3, 2, (1, 0, 1)),
    (3, 1, (0, 0, 1)),
])
def test_unfolded_matches_block_computation(F3, n, h, coeffs):
    Q = Poly(F3, coeffs)
    assert variance_unfolded(n, h, Q) == variance_direct_exact(n, h, Q)
    mean = mean_value(n, h, Q)
    assert variance_unfolded(n, h, Q, center=mean) == variance_tilde_direct_exact(n, h, Q)


def test_unfolded_budget(T3):
    with pytest.raises(BudgetExceededError):
        variance_unfolded(4, 1, T3 + 1, budget=1000)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_mean_value_closed_form_grid(p):
    F = construct_field(p, 1)
    for n in (1, 2, 3):
        for h in range(n):
            for Q in enumerate_monic(F, 1 if p == 5 else 2):
                assert mean_value(n, h, Q) == mean_value_closed_form(n, h, Q)


def test_mean_value_with_t_dividing_modulus(T3):
    # T | Q なら T^n は既に除かれている
    assert mean_value_closed_form(2, 0, T3) == Fraction(9 - 1, 2 * 3)


def test_mean_value_summed_over_intervals(F3, T3):
    assert mean_value_unfolded(2, 0, T3 + 1) == Fraction(7, 6)
    for n in (2, 3):
        for h in range(n):
            for Q in list(enumerate_monic(F3, 1)) + [T3 ** 2 + 1, T3 ** 2]:
                assert mean_value_unfolded(n, h, Q) == mean_value_closed_form(n, h, Q)
    with pytest.raises(BudgetExceededError):
        mean_value_unfolded(4, 1, T3 + 1, budget=1000)


def test_mean_value_checks_interval_sum(monkeypatch, T3):
    monkeypatch.setattr(variance_engine, "mean_value_unfolded", lambda *args: Fraction(0))
    with pytest.raises(VerificationError, match="mean value routes disagree"):
        mean_value(2, 0, T3 + 1)
    # 区間和の費用が上限を超えるときは畳んだ和と閉じた式だけで決める
    assert mean_value(2, 0, T3 + 1, unfolded_budget=0) == Fraction(7, 6)


@pytest.mark.parametrize("n, h, coeffs", [(2, 0, (1, 1)), (3, 1, (2, 0, 1)), (3, 0, (0, 1))])
def test_decomposition_over_scalars(F3, n, h, coeffs):
    assert p_decomposition_check(n, h, Poly(F3, coeffs))["holds"]


def test_mean_shift_identity_on_grid(F3):
    for n in (2, 3):
        for h in range(n):
            for Q in enumerate_monic(F3, 2):
                result = mean_shift_bound(n, h, Q)
                assert result["holds"]
                assert result["observed_constant"] >= 0


# ---- 双対合同式 ----

def test_dual_representative_has_exact_degree(F3, T3):
    Q = 2 * T3 ** 2 + 1
    A = T3 + 2
    rep = dual_representative(A, Q, 4)
    assert rep.degree == 4 and rep.is_monic()
    assert ((rep - A) % Q).is_zero()
    with pytest.raises(PreconditionError):
        dual_representative(A, Q, 1)


@pytest.mark.parametrize("p", [3, 5])
def test_dual_transfer_matches_interval_count(p):
    F = construct_field(p, 1)
    rng = random.Random(p)
    checked = 0
    while checked < 200:
        h = rng.randint(0, 2 if p == 3 else 1)
        B = random_poly(F, rng.randint(0, 2), rng)
        n = h + 1 + B.degree
        Q = random_poly(F, rng.randint(1, min(n, 2)), rng)
        if Q.constant_term == 0:
            continue
        A = _random_unit(Q, rng)
        C = B * Poly.monomial(F, h + 1)
        assert dual_transfer(B, h, Q, A) == psi_hybrid(C, h, Q, A)
        checked += 1


def test_orthogonality_expansion_matches_interval_count(F3):
    rng = random.Random(11)
    for _ in range(10):
        h = rng.randint(0, 1)
        B = random_poly(F3, rng.randint(0, 1), rng)
        n = h + 1 + B.degree
        Q = random_monic(F3, rng.randint(1, min(n, 2)), rng)
        if Q.constant_term == 0:
            continue
        A = _random_unit(Q, rng)
        expected = psi_hybrid(B * Poly.monomial(F3, h + 1), h, Q, A)
        value = orthogonality_expansion(B, h, Q, A)
        assert abs(value - expected) < 1e-6


def test_dual_transfer_rejects_t_dividing_modulus(F3, T3):
    with pytest.raises(PreconditionError, match="Q\\(0\\)"):
        dual_transfer(T3 + 1, 0, T3 * (T3 + 1), Poly.one(F3))


# ---- スペクトル側 ----

def test_spectral_identity_over_f3():
    F = construct_field(3, 1)
    for n in (1, 2, 3):
        for h in range(n):
            for Q in _moduli_with_nonzero_constant(F, n):
                result = variance_spectral(n, h, Q)
                exact = float(variance_tilde_direct_exact(n, h, Q))
                assert result.full == pytest.approx(exact, rel=1e-9, abs=1e-9)
                assert result.full_all_nontrivial == pytest.approx(result.full, abs=1e-9)
                assert result.phi_tilde == 2 * 3 ** (n - h - 1) * build_unit_group(Q).order


def test_spectral_identity_over_f5():
    F = construct_field(5, 1)
    for h in (0, 1):
        for Q in _moduli_with_nonzero_constant(F, 2):
            result = variance_spectral(2, h, Q)
            assert result.full == pytest.approx(float(variance_tilde_direct_exact(2, h, Q)), rel=1e-9, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("p, n", [(p, n) for p in (3, 5) for n in (3, 4, 5)])
def test_spectral_identity_grid(p, n):
    F = construct_field(p, 1)
    checked = 0
    for h in range(n - 1):
        for Q in _moduli_with_nonzero_constant(F, 3):
            if (p - 1) * p ** (n - h - 1) * euler_phi(Q) > 10 ** 5:
                continue
            result = variance_spectral(n, h, Q)
            exact = variance_tilde_direct_exact(n, h, Q)
            assert result.full == pytest.approx(float(exact), rel=1e-6, abs=1e-9)
            assert result.odd_mass == pytest.approx(0, abs=1e-6)
            checked += 1
    assert checked > 0


@pytest.mark.parametrize("n, h, coeffs", [(3, 0, (1, 1)), (3, 1, (1, 0, 1)), (4, 1, (2, 1)), (4, 2, (1, 2, 0, 1))])
def test_spectral_identity_with_unfolded_direct_sum(F3, n, h, coeffs):
    Q = Poly(F3, coeffs)
    mean = mean_value(n, h, Q)
    unfolded = variance_unfolded(n, h, Q, center=mean, budget=10 ** 6)
    assert unfolded == variance_tilde_direct_exact(n, h, Q)
    assert variance_spectral(n, h, Q).full == pytest.approx(float(unfolded), rel=1e-6, abs=1e-9)


def test_spectral_with_spectrum_verification(T3):
    result = variance_spectral(3, 1, T3 ** 2 + 1, verify_spectrum=True)
    check = result.spectrum_check
    assert check["characters"] > 0
    assert check["max_trace_deviation"] < 1e-6
    assert "spectrum_check" in result.to_dict()


def test_spectral_preconditions(F3, T3):
    with pytest.raises(PreconditionError, match="Q\\(0\\)"):
        variance_spectral(2, 0, T3)
    with pytest.raises(PreconditionError, match="deg Q"):
        variance_spectral(1, 0, T3 ** 2 + 1)
    with pytest.raises(BudgetExceededError):
        variance_spectral(3, 0, T3 + 1, spectral_budget=10)
