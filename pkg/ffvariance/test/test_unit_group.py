#!/usr/bin/env python3
"""
Test Unit Group - 単数群の構造と離散対数のテスト
"""

import random

import hypothesis.strategies as st
import pytest
from hypothesis import given

from errors import BudgetExceededError, PreconditionError
from finite_field import construct_field
from poly_ring import Poly, enumerate_monic, euler_phi, random_monic
from unit_group import build_unit_group

SMALL_MODULI = [
    (3, (0, 1)),           # T
    (3, (0, 0, 1)),        # T^2
    (3, (0, 1, 1)),        # T(T+1)
    (3, (1, 0, 1)),        # T^2+1
    (3, (0, 0, 0, 1)),     # T^3
    (3, (0, 0, 1, 1)),     # T^2(T+1)
    (2, (0, 0, 0, 1)),     # T^3 over F2
    (5, (1, 0, 1)),        # (T+2)(T+3)
]


def _modulus(p, coeffs):
    return Poly(construct_field(p, 1), coeffs)


@pytest.mark.parametrize("coeffs, orders", [
    ((0, 1), [2]),
    ((0, 0, 1), [2, 3]),
    ((0, 1, 1), [2, 2]),
    ((1, 0, 1), [8]),
    ((0, 0, 0, 1), [2, 3, 3]),
])
def test_group_shapes_over_f3(coeffs, orders):
    G = build_unit_group(_modulus(3, coeffs))
    assert G.orders == orders
    assert G.order == euler_phi(G.modulus)


def test_mod_t_squared_is_cyclic_of_order_six(T3):
    G = build_unit_group(T3 ** 2)
    g = G.element((1, 1))
    powers = {((g ** k) % G.modulus).coeffs for k in range(1, 7)}
    assert len(powers) == 6
    assert ((g ** 6) % G.modulus).is_one()


def test_extension_field_modulus(F4):
    G = build_unit_group(Poly.T(F4))
    assert G.orders == [3]
    assert len(list(G.units())) == 3


def test_higher_power_over_f5(F5):
    G = build_unit_group(Poly.T(F5) ** 4)
    assert G.order == 500
    assert G.orders[0] == 4


@pytest.mark.parametrize("p, coeffs", SMALL_MODULI)
def test_discrete_log_round_trip(p, coeffs):
    G = build_unit_group(_modulus(p, coeffs))
    units = list(G.units())
    assert len(units) == G.order
    seen = set()
    for u in units:
        exps = G.discrete_log(u)
        assert all(0 <= e < m for e, m in zip(exps, G.orders))
        assert G.element(exps) == u
        seen.add(exps)
    assert len(seen) == G.order


def test_non_unit_rejected(T3):
    G = build_unit_group(T3 ** 2)
    assert G.try_discrete_log(T3 * (T3 + 1)) is None
    with pytest.raises(PreconditionError, match="not a unit"):
        G.discrete_log(T3)


@st.composite
def unit_pairs(draw):
    p, coeffs = draw(st.sampled_from(SMALL_MODULI))
    G = build_unit_group(_modulus(p, coeffs))
    a = G.element([draw(st.integers(0, m - 1)) for m in G.orders])
    b = G.element([draw(st.integers(0, m - 1)) for m in G.orders])
    return G, a, b


@given(unit_pairs())
def test_discrete_log_is_homomorphism(case):
    G, a, b = case
    left = G.discrete_log(a * b)
    right = tuple((x + y) % m for x, y, m in zip(G.discrete_log(a), G.discrete_log(b), G.orders))
    assert left == right


def test_discrete_log_ignores_representative(T3):
    G = build_unit_group(T3 ** 2 + 1)
    u = T3 + 2
    assert G.discrete_log(u) == G.discrete_log(u + (T3 ** 2 + 1) * (T3 + 1))
    assert G.discrete_log(2 * (T3 ** 2 + 1) + u) == G.discrete_log(u)


def test_every_monic_modulus_of_small_degree(F3):
    for n in (1, 2, 3):
        for Q in enumerate_monic(F3, n):
            G = build_unit_group(Q)
            assert G.order == euler_phi(Q)


def test_kernel_generators_are_trivial_off_the_prime(T3):
    Q = T3 ** 2 * (T3 + 1)
    G = build_unit_group(Q)
    index = next(i for i, c in enumerate(G.components) if c.prime == T3)
    kernel = G.kernel_generators(index)
    assert kernel
    rest = Q // T3
    for u in kernel:
        assert ((u - 1) % rest).is_zero()
        assert G.try_discrete_log(u) is not None


def test_seed_changes_generators_only(T3):
    Q = T3 ** 3 + 2 * T3 + 1
    first = build_unit_group(Q, seed=0)
    second = build_unit_group(Q, seed=7)
    assert first.orders == second.orders
    assert first.order == 26


def test_constant_modulus_rejected(F3):
    with pytest.raises(PreconditionError, match="degree zero"):
        build_unit_group(Poly.one(F3))


def test_unit_group_budget(T3):
    with pytest.raises(BudgetExceededError):
        build_unit_group(T3 ** 7, budget=100)


def test_to_dict(T3):
    data = build_unit_group(T3 ** 2).to_dict()
    assert data["order"] == 6
    assert data["orders"] == [2, 3]
    assert data["components"] == [{"prime": "T", "exponent": 2, "orders": [2, 3]}]


@pytest.mark.parametrize("p", [3, 5])
def test_discrete_log_on_random_moduli(p):
    F = construct_field(p, 1)
    rng = random.Random(p)
    for _ in range(200):
        G = build_unit_group(random_monic(F, rng.randint(1, 4), rng))
        x = [rng.randrange(m) for m in G.orders]
        y = [rng.randrange(m) for m in G.orders]
        a, b = G.element(x), G.element(y)
        assert G.discrete_log(a) == tuple(x)
        assert G.discrete_log(a * b) == tuple((s + t) % m for s, t, m in zip(x, y, G.orders))
