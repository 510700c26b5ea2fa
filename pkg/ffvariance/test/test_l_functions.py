#!/usr/bin/env python3
"""
Test L Functions - L 多項式・Frobenius 位相・明示公式のテスト
"""

import math
import random

import numpy as np
import pytest

from dirichlet_characters import character_at, character_flags, enumerate_characters
from errors import BudgetExceededError, PreconditionError
from finite_field import construct_field
from l_functions import (completed_l, explicit_trace, family_spectra, family_traces, frobenius_spectrum,
                         l_polynomial, l_polynomials, nonprimitive_bound_check, psi_chi, trace_theta)
from poly_ring import Poly, enumerate_monic, random_monic
from unit_group import build_unit_group

SPECTRAL_MODULI = [
    (3, 1, (1, 0, 1)),        # T^2+1
    (3, 1, (1, 2, 0, 1)),     # T^3+2T+1
    (3, 1, (0, 0, 1, 1)),     # T^2(T+1)
    (3, 1, (0, 0, 0, 1)),     # T^3
    (5, 1, (2, 0, 1)),        # T^2+2
    (2, 1, (1, 1, 0, 1)),     # T^3+T+1
    (2, 1, (0, 0, 0, 0, 1)),  # T^4
    (2, 2, (0, 0, 1)),        # T^2 over F4
]


def _group(p, r, coeffs):
    return build_unit_group(Poly(construct_field(p, r), coeffs))


def _primitive_characters(G):
    return [chi for chi in enumerate_characters(G) if chi.is_primitive and not chi.is_trivial]


def test_l_polynomial_mod_t_is_constant(T3):
    chi = enumerate_characters(build_unit_group(T3))[1]
    L = l_polynomial(chi)
    assert L.coeffs == (1,)
    assert L.degree == 0
    assert L(0.5) == 1


def test_trivial_character_has_no_l_polynomial(T3):
    trivial = enumerate_characters(build_unit_group(T3 ** 2))[0]
    with pytest.raises(PreconditionError, match="no finite L-polynomial"):
        l_polynomial(trivial)


def test_odd_and_even_spectra_mod_irreducible_quadratic(T3):
    G = build_unit_group(T3 ** 2 + 1)
    for chi in _primitive_characters(G):
        spectrum = frobenius_spectrum(chi)
        if chi.is_even:
            assert spectrum.d == 0
            assert spectrum.trace(3) == 0
        else:
            assert spectrum.d == 1
            assert abs(abs(spectrum.trace(1)) - 1) < 1e-9
        assert spectrum.trace(0) == spectrum.d


def test_even_primitive_completion_drops_one_degree(F5):
    G = build_unit_group(Poly.T(F5) ** 4)
    flags = character_flags(G)
    index = int(np.flatnonzero(flags.primitive & flags.even & ~flags.trivial)[0])
    chi = character_at(G, index)
    L = l_polynomial(chi)
    completed = completed_l(L)
    assert L.degree == 3
    assert completed.degree == 2
    assert completed.completed
    assert abs(L(1.0)) < 1e-9
    spectrum = frobenius_spectrum(chi, L)
    assert spectrum.d == 2


def test_completion_requires_primitive(T3):
    G = build_unit_group(T3 ** 2 * (T3 + 1))
    chi = next(c for c in enumerate_characters(G) if not c.is_primitive and not c.is_trivial)
    with pytest.raises(PreconditionError, match="completion defined for primitive characters only"):
        completed_l(l_polynomial(chi))


@pytest.mark.parametrize("p, r, coeffs", SPECTRAL_MODULI)
def test_explicit_formula_and_riemann_hypothesis(p, r, coeffs):
    G = _group(p, r, coeffs)
    sqrt_q = math.sqrt(G.field.q)
    for chi in _primitive_characters(G):
        spectrum = frobenius_spectrum(chi)
        assert spectrum.d == G.modulus.degree - 1 - chi.lambda_chi
        assert all(abs(abs(a) - sqrt_q) < 1e-4 * sqrt_q for a in spectrum.inverse_roots)
        assert all(0 <= t < 2 * math.pi for t in spectrum.phases)
        for n in range(1, 5):
            value = trace_theta(chi, n, spectrum)
            assert abs(value) <= spectrum.d + 1e-9


@pytest.mark.parametrize("p, r, coeffs", SPECTRAL_MODULI[:4])
def test_conjugate_character_conjugates_traces(p, r, coeffs):
    G = _group(p, r, coeffs)
    for chi in _primitive_characters(G):
        for n in (1, 2, 3):
            assert abs(explicit_trace(chi.conjugate(), n) - explicit_trace(chi, n).conjugate()) < 1e-9


def test_psi_chi_examples(F3, T3):
    G = build_unit_group(T3 + 1)
    trivial, odd = enumerate_characters(G)
    assert psi_chi(trivial, 2) == 8
    assert abs(psi_chi(odd, 2, monic_only=False)) < 1e-9
    with pytest.raises(PreconditionError):
        psi_chi(trivial, 0)


def test_even_character_sum_over_all_scalars(T3):
    G = build_unit_group(T3 ** 2 + 1)
    for chi in enumerate_characters(G):
        if chi.is_even:
            for n in (1, 2, 3):
                assert abs(psi_chi(chi, n, monic_only=False) - 2 * psi_chi(chi, n)) < 1e-9


def test_psi_chi_budget(T3):
    chi = enumerate_characters(build_unit_group(T3))[1]
    with pytest.raises(BudgetExceededError):
        psi_chi(chi, 6, budget=100)


def test_nonprimitive_bound(T3):
    G = build_unit_group(T3 ** 2 * (T3 + 1))
    for n in range(1, 5):
        result = nonprimitive_bound_check(G, n)
        assert result["count"] > 0
        assert result["holds"]


def test_nonprimitive_bound_without_nonprimitive_characters(T3):
    result = nonprimitive_bound_check(build_unit_group(T3 ** 2 + 1), 2)
    assert result == {"count": 0, "max_ratio": 0.0, "holds": True}


def test_l_polynomials_match_single_computation(T3):
    G = build_unit_group(T3 ** 3)
    table = l_polynomials(G)
    assert table.shape == (G.order, 3)
    for index, chi in enumerate(enumerate_characters(G)):
        if chi.is_trivial:
            continue
        single = np.asarray(l_polynomial(chi).coeffs)
        assert np.allclose(table[index], single, atol=1e-9)


def test_family_traces_match_explicit_traces(T3):
    G = build_unit_group(T3 ** 2 * (T3 + 1))
    flags = character_flags(G)
    for n in (1, 2, 3):
        traces = family_traces(G, n, flags)
        for index in np.flatnonzero(flags.primitive):
            assert abs(traces[index] - explicit_trace(character_at(G, int(index)), n)) < 1e-9


def test_family_spectra_cover_primitive_characters(T3):
    G = build_unit_group(T3 ** 3 + 2 * T3 + 1)
    spectra = family_spectra(G)
    assert len(spectra) == len(_primitive_characters(G))
    for spectrum in spectra:
        direct = frobenius_spectrum(spectrum.character)
        assert spectrum.d == direct.d
        for n in (1, 2, 3):
            assert abs(spectrum.trace(n) - direct.trace(n)) < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("p", [3, 5])
def test_explicit_formula_for_every_modulus_up_to_degree_four(p):
    F = construct_field(p, 1)
    sqrt_q = math.sqrt(p)
    for degree in range(1, 5):
        for Q in enumerate_monic(F, degree):
            G = build_unit_group(Q)
            flags = character_flags(G)
            spectra = family_spectra(G, flags)
            primitive = np.flatnonzero(flags.primitive & ~flags.trivial)
            assert len(spectra) == len(primitive)
            for spectrum in spectra:
                assert spectrum.rh_max_deviation <= 1e-6
                assert all(abs(abs(a) - sqrt_q) <= 1e-6 * sqrt_q for a in spectrum.inverse_roots)
            for n in range(1, 9):
                traces = family_traces(G, n, flags)
                for index, spectrum in zip(primitive, spectra):
                    assert abs(spectrum.trace(n) - traces[index]) <= 1e-6 * max(1, spectrum.d)


@pytest.mark.parametrize("p", [3, 5])
def test_riemann_hypothesis_on_random_characters(p):
    F = construct_field(p, 1)
    rng = random.Random(100 + p)
    sqrt_q = math.sqrt(p)
    checked = 0
    while checked < 200:
        G = build_unit_group(random_monic(F, rng.randint(2, 4), rng))
        chi = character_at(G, rng.randrange(G.order))
        if chi.is_trivial or not chi.is_primitive:
            continue
        spectrum = frobenius_spectrum(chi)
        assert spectrum.d == G.modulus.degree - 1 - chi.lambda_chi
        assert all(abs(abs(a) - sqrt_q) <= 1e-6 * sqrt_q for a in spectrum.inverse_roots)
        for n in (1, 2, 3):
            trace_theta(chi, n, spectrum)
        checked += 1
