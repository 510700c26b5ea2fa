#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
UnitGroup - 単数群 (F_q[T]/Q)^* の構造と離散対数表

Q を因数分解し、CRT で素元冪 P^e ごとの局所群に分けます。局所群は
巡回部分 F_{q^d}^*（seed 付き探索と位数検証で生成元を決定）と
1 単数群 1 + P·R（p 群、最大位数元の逐次選択で基底を構成）の直積です。
各局所群の全元について離散対数表を持ち、大域ベクトルは連結です。
"""

import logging
import random
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import prod
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from errors import PreconditionError, VerificationError, check_budget
from finite_field import FiniteField, prime_divisors
from poly_ring import (Coeffs, Poly, euler_phi, factor, format_poly, mulmod_coeffs,
                       poly_inverse_mod, poly_pow_mod, reduce_coeffs)

DEFAULT_UNIT_GROUP_BUDGET = 10 ** 6


@dataclass
class LocalComponent:
    """
    素元冪 P^e を法とする局所単数群

    Attributes:
        prime: モニック既約多項式 P
        exponent: e
        modulus: P^e
        generators: 局所生成元（P^e を法とする剰余）
        orders: 各生成元の位数
        table: 剰余の係数タプル -> 指数ベクトル
        idempotent: CRT 冪等元（P^e で 1、他の成分で 0）
    """

    prime: Poly
    exponent: int
    modulus: Poly
    generators: List[Poly]
    orders: List[int]
    table: Dict[Coeffs, Tuple[int, ...]]
    idempotent: Optional[Poly] = None

    @property
    def size(self) -> int:
        return len(self.table)


@dataclass(eq=False)
class UnitGroup:
    """
    (F_q[T]/Q)^* の基底表示

    Attributes:
        modulus: モニック化した Q
        generators: 大域生成元 g_1..g_k（Q を法とする剰余）
        orders: 位数 m_1..m_k
        components: CRT 成分（(次数, 辞書式) 順）
        seed: 生成元探索に使った seed
    """

    modulus: Poly
    generators: List[Poly]
    orders: List[int]
    components: List[LocalComponent]
    seed: int = 0

    def __post_init__(self):
        self.logger = logging.getLogger(__name__)
        self.offsets: List[int] = []
        offset = 0
        for comp in self.components:
            self.offsets.append(offset)
            offset += len(comp.generators)

    @property
    def field(self) -> FiniteField:
        return self.modulus.field

    @property
    def order(self) -> int:
        return prod(self.orders)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.orders)

    @property
    def rank(self) -> int:
        return len(self.orders)

    def try_discrete_log(self, N: Poly) -> Optional[Tuple[int, ...]]:
        """単数でなければ None"""
        return self.dlog_coeffs(N.coeffs)

    def dlog_coeffs(self, coeffs: Coeffs) -> Optional[Tuple[int, ...]]:
        F = self.field
        exps: Tuple[int, ...] = ()
        for comp in self.components:
            local = comp.table.get(reduce_coeffs(F, coeffs, comp.modulus.coeffs))
            if local is None:
                return None
            exps += local
        return exps

    def discrete_log(self, N: Poly) -> Tuple[int, ...]:
        """
        N ≡ Π g_i^{e_i} (mod Q) となる指数ベクトル

        Args:
            N: Q と互いに素な多項式

        Returns:
            (e_1, ..., e_k)
        """
        exps = self.try_discrete_log(N)
        if exps is None:
            raise PreconditionError(f"not a unit: {format_poly(N)} modulo {format_poly(self.modulus)}")
        return exps

    def element(self, exps: Sequence[int]) -> Poly:
        """Π g_i^{e_i} mod Q"""
        F = self.field
        result = Poly.one(F) % self.modulus
        for g, e, m in zip(self.generators, exps, self.orders):
            if e % m:
                result = (result * poly_pow_mod(g, e % m, self.modulus)) % self.modulus
        return result

    def units(self) -> Iterator[Poly]:
        """Q を法とする単数の代表（次数 < deg Q）を辞書式順に列挙"""
        F = self.field
        for coeffs in product(F.lex_order, repeat=self.modulus.degree):
            if self.dlog_coeffs(tuple(coeffs)) is not None:
                yield Poly(F, coeffs)

    def lift(self, index: int, local: Poly) -> Poly:
        """成分 index の局所剰余を、他成分で 1 となる大域剰余に持ち上げる"""
        comp = self.components[index]
        one = Poly.one(self.field)
        return (one + comp.idempotent * (local - one)) % self.modulus

    def component_generator_slice(self, index: int) -> range:
        start = self.offsets[index]
        return range(start, start + len(self.components[index].generators))

    def kernel_generators(self, index: int) -> List[Poly]:
        """
        成分 index の素元 P について {u : u ≡ 1 mod Q/P} の生成元

        e = 1 なら局所群全体、e ≥ 2 なら 1 + P^{e-1}·T^j·c（c は F_q の F_p 基底）。
        """
        comp = self.components[index]
        F = self.field
        if comp.exponent == 1:
            return [self.generators[i] for i in self.component_generator_slice(index)]
        scale = comp.prime ** (comp.exponent - 1)
        result = []
        for j in range(comp.prime.degree):
            for k in range(F.r):
                local = (Poly.one(F) + scale * Poly.monomial(F, j, F.p ** k)) % comp.modulus
                result.append(self.lift(index, local))
        return result

    def to_dict(self) -> Dict:
        return {
            "modulus": format_poly(self.modulus),
            "order": self.order,
            "orders": list(self.orders),
            "generators": [format_poly(g) for g in self.generators],
            "components": [
                {"prime": format_poly(c.prime), "exponent": c.exponent, "orders": list(c.orders)}
                for c in self.components
            ],
            "seed": self.seed,
        }


# ---- 局所群の構築 ----

def _extend_table(F: FiniteField, table: Dict[Coeffs, Tuple[int, ...]], g: Coeffs, m: int,
                  mod: Coeffs) -> Dict[Coeffs, Tuple[int, ...]]:
    """部分群 H の表を ⟨H, g⟩（g の位数 m、H ∩ ⟨g⟩ = 1）の表に拡張"""
    result: Dict[Coeffs, Tuple[int, ...]] = {}
    power: Coeffs = (1,)
    for j in range(m):
        for key, exps in table.items():
            result[mulmod_coeffs(F, key, power, mod)] = exps + (j,)
        power = mulmod_coeffs(F, power, g, mod)
    return result


def _pow_coeffs(F: FiniteField, a: Coeffs, e: int, mod: Coeffs) -> Coeffs:
    result: Coeffs = (1,)
    while e:
        if e & 1:
            result = mulmod_coeffs(F, result, a, mod)
        e >>= 1
        if e:
            a = mulmod_coeffs(F, a, a, mod)
    return result


def _cyclic_generator(P: Poly, e: int, Pe: Poly, rng: random.Random) -> Optional[Coeffs]:
    """F_{q^d}^* に対応する位数 q^d - 1 の元（Teichmüller 部分）"""
    F = P.field
    d = P.degree
    order = F.q ** d - 1
    if order == 1:
        return None
    primes = prime_divisors(order)
    kill = F.q ** (d * (e - 1))
    mod = Pe.coeffs
    width = Pe.degree
    for _ in range(10000):
        u = tuple(rng.randrange(F.q) for _ in range(width))
        if not reduce_coeffs(F, u, P.coeffs):
            continue
        w = _pow_coeffs(F, u, kill, mod)
        if all(_pow_coeffs(F, w, order // ell, mod) != (1,) for ell in primes):
            return w
    raise VerificationError(f"no generator of order {order} found modulo {format_poly(Pe)}")


def _one_unit_basis(P: Poly, e: int, Pe: Poly) -> Tuple[List[Coeffs], List[int]]:
    """
    1 単数群 1 + P·R (mod P^e) の基底

    商群 A/H で位数最大の元 x を選び、x^{p^k} = Π g_i^{t_i} から
    x' = x·Π g_i^{-t_i/p^k} と補正して H に加えることを繰り返します。
    """
    if e == 1:
        return [], []
    F = P.field
    p = F.p
    d = P.degree
    mod = Pe.coeffs
    size = F.q ** (d * (e - 1))
    elements = []
    for low in product(F.lex_order, repeat=d * (e - 1)):
        elements.append((Poly.one(F) + P * Poly(F, low)).coeffs)
    basis: List[Coeffs] = []
    orders: List[int] = []
    table: Dict[Coeffs, Tuple[int, ...]] = {(1,): ()}
    while len(table) < size:
        best, best_k, best_power = None, 0, None
        cap = None if not orders else orders[-1]
        for x in elements:
            if x in table:
                continue
            y, k = x, 0
            while y not in table:
                y = _pow_coeffs(F, y, p, mod)
                k += 1
            if k > best_k:
                best, best_k, best_power = x, k, y
                if cap is not None and p ** k == cap:
                    break
        pk = p ** best_k
        x = best
        for g, t, m in zip(basis, table[best_power], orders):
            if t % pk:
                raise VerificationError(f"one-unit basis reduction failed modulo {format_poly(Pe)}")
            shift = (-(t // pk)) % m
            if shift:
                x = mulmod_coeffs(F, x, _pow_coeffs(F, g, shift, mod), mod)
        basis.append(x)
        orders.append(pk)
        table = _extend_table(F, table, x, pk, mod)
    return basis, orders


def _local_component(P: Poly, e: int, rng: random.Random) -> LocalComponent:
    F = P.field
    Pe = P ** e
    mod = Pe.coeffs
    gens: List[Coeffs] = []
    orders: List[int] = []
    cyclic = _cyclic_generator(P, e, Pe, rng)
    if cyclic is not None:
        gens.append(cyclic)
        orders.append(F.q ** P.degree - 1)
    one_units, one_orders = _one_unit_basis(P, e, Pe)
    gens.extend(one_units)
    orders.extend(one_orders)
    table: Dict[Coeffs, Tuple[int, ...]] = {(1,): ()}
    for g, m in zip(gens, orders):
        table = _extend_table(F, table, g, m, mod)
    expected = F.q ** (P.degree * e) - F.q ** (P.degree * (e - 1))
    if len(table) != expected:
        raise VerificationError(
            f"local unit table modulo {format_poly(Pe)} has {len(table)} entries, expected {expected}")
    return LocalComponent(P, e, Pe, [Poly(F, g) for g in gens], orders, table)


@lru_cache(maxsize=128)
def build_unit_group(Q: Poly, seed: int = 0, budget: float = DEFAULT_UNIT_GROUP_BUDGET) -> UnitGroup:
    """
    (F_q[T]/Q)^* を構築

    Args:
        Q: 次数 1 以上の法
        seed: 巡回部分の生成元探索の seed
        budget: φ(Q) の上限

    Returns:
        UnitGroup
    """
    logger = logging.getLogger(__name__)
    if Q.degree < 1:
        raise PreconditionError(f"degree zero: unit group needs deg Q >= 1, got {format_poly(Q)}")
    phi = euler_phi(Q)
    check_budget(f"unit group modulo {format_poly(Q)} with phi(Q)={phi}", phi, budget)
    modulus = Q.monic()
    rng = random.Random(seed)
    components = [_local_component(P, e, rng) for P, e in factor(modulus).factors]

    for comp in components:
        rest = modulus // comp.modulus
        if rest.is_one():
            comp.idempotent = Poly.one(modulus.field)
        else:
            comp.idempotent = (rest * poly_inverse_mod(rest, comp.modulus)) % modulus

    group = UnitGroup(modulus, [], [], components, seed)
    for index, comp in enumerate(components):
        for g, m in zip(comp.generators, comp.orders):
            group.generators.append(group.lift(index, g))
            group.orders.append(m)

    if group.order != phi:
        raise VerificationError(f"unit group order {group.order} differs from phi(Q)={phi}")
    logger.info(f"Built unit group modulo {format_poly(modulus)}: orders {group.orders}")
    return group

