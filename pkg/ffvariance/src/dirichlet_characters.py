#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
DirichletCharacters - Q を法とする Dirichlet 指標

指標は単数群の生成元上の指数ベクトル (a_1..a_k) で表し、
χ(u) = Π ζ_{m_i}^{a_i e_i}（(e_i) = dlog(u)）と評価します。
偶奇・原始性の判定は整数の指数演算で厳密に行い、複素数への変換は
和を取るときだけにしています。全指標についての和は多次元 FFT で一括計算します。
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache, reduce
from itertools import chain, islice, product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import VerificationError
from finite_field import units
from poly_ring import Coeffs, Poly, divisors, euler_phi, format_poly, mobius
from unit_group import UnitGroup

TWO_PI = 2 * math.pi

logger = logging.getLogger(__name__)


def root_of_unity(phase: Fraction) -> complex:
    """exp(2πi·phase)（分母 1, 2, 4 は厳密値）"""
    phase = phase % 1
    if phase == 0:
        return complex(1, 0)
    if phase == Fraction(1, 2):
        return complex(-1, 0)
    if phase == Fraction(1, 4):
        return complex(0, 1)
    if phase == Fraction(3, 4):
        return complex(0, -1)
    return cmath.exp(2j * math.pi * float(phase))


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    """
    Dirichlet 指標

    Attributes:
        group: 法 Q の単数群
        exps: 指数ベクトル (a_1..a_k)、a_i ∈ [0, m_i)
    """

    group: UnitGroup
    exps: Tuple[int, ...]

    def __post_init__(self):
        if len(self.exps) != self.group.rank:
            raise ValueError(f"character needs {self.group.rank} exponents, got {len(self.exps)}")
        object.__setattr__(self, "exps", tuple(a % m for a, m in zip(self.exps, self.group.orders)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirichletCharacter):
            return NotImplemented
        return self.group is other.group and self.exps == other.exps

    def __hash__(self) -> int:
        return hash((id(self.group), self.exps))

    @property
    def modulus(self) -> Poly:
        return self.group.modulus

    @property
    def is_trivial(self) -> bool:
        return not any(self.exps)

    @cached_property
    def period(self) -> int:
        """値がすべて ζ_L の冪になる L（位数の最小公倍数）"""
        return reduce(math.lcm, self.group.orders, 1)

    def phase_of_exps(self, e: Sequence[int]) -> Fraction:
        return sum((Fraction(a * x, m) for a, x, m in zip(self.exps, e, self.group.orders)), Fraction(0)) % 1

    def phase(self, N: Poly) -> Optional[Fraction]:
        """χ(N) = exp(2πi·phase)。N が単数でなければ None"""
        e = self.group.try_discrete_log(N)
        return None if e is None else self.phase_of_exps(e)

    def phase_index(self, coeffs: Coeffs) -> Optional[int]:
        """χ(N) = ζ_L^j となる j（N が単数でなければ None）"""
        e = self.group.dlog_coeffs(coeffs)
        if e is None:
            return None
        L = self.period
        return sum(a * x * (L // m) for a, x, m in zip(self.exps, e, self.group.orders)) % L

    def __call__(self, N: Poly) -> complex:
        ph = self.phase(N)
        return complex(0, 0) if ph is None else root_of_unity(ph)

    @cached_property
    def is_even(self) -> bool:
        """F_q^* 上で自明なら偶"""
        F = self.group.field
        return all(self.phase(Poly.constant(F, c)) == 0 for c in units(F))

    @cached_property
    def is_primitive(self) -> bool:
        """Q の各素因子 P について {u ≡ 1 mod Q/P} 上で非自明なら原始的"""
        for index in range(len(self.group.components)):
            if all(self.phase(g) == 0 for g in self.group.kernel_generators(index)):
                return False
        return True

    @property
    def lambda_chi(self) -> int:
        return 1 if self.is_even else 0

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(self.group, tuple((-a) % m for a, m in zip(self.exps, self.group.orders)))

    def to_dict(self) -> Dict:
        return {
            "exps": list(self.exps),
            "even": self.is_even,
            "primitive": self.is_primitive,
            "lambda": self.lambda_chi,
        }


def enumerate_characters(G: UnitGroup) -> List[DirichletCharacter]:
    """全指標（指数タプルの辞書式順、先頭が自明指標）"""
    return [DirichletCharacter(G, exps) for exps in product(*(range(m) for m in G.orders))]


def character_at(G: UnitGroup, index: int) -> DirichletCharacter:
    """辞書式順で index 番目の指標"""
    if not G.orders:
        return DirichletCharacter(G, ())
    return DirichletCharacter(G, tuple(int(x) for x in np.unravel_index(index, G.shape)))


def evaluate(chi: DirichletCharacter, N: Poly) -> complex:
    return chi(N)


def is_even(chi: DirichletCharacter) -> bool:
    return chi.is_even


def is_primitive(chi: DirichletCharacter) -> bool:
    return chi.is_primitive


def accumulate_phases(period: int, weights: np.ndarray) -> complex:
    """Σ_j weights[j]·ζ_period^j を補償和で計算"""
    angles = TWO_PI * np.arange(period) / period
    nonzero = np.flatnonzero(weights)
    re = math.fsum(float(weights[j]) * math.cos(angles[j]) for j in nonzero)
    im = math.fsum(float(weights[j]) * math.sin(angles[j]) for j in nonzero)
    return complex(re, im)


def character_moment(chi: DirichletCharacter, items: Iterable[Tuple[Coeffs, float]]) -> complex:
    """Σ χ(N)·w(N)（非単数は寄与 0）"""
    counts = np.zeros(chi.period, dtype=np.float64)
    for coeffs, w in items:
        j = chi.phase_index(coeffs)
        if j is not None:
            counts[j] += w
    return accumulate_phases(chi.period, counts)


# ---- 指標群全体のベクトル化計算 ----

@dataclass
class CharacterFlags:
    """全指標の判定結果（C 順の平坦インデックス）"""

    trivial: np.ndarray
    even: np.ndarray
    primitive: np.ndarray

    @property
    def odd(self) -> np.ndarray:
        return ~self.even


def _exponent_grid(G: UnitGroup) -> np.ndarray:
    if not G.orders:
        return np.zeros((0, 1), dtype=np.int64)
    return np.indices(G.shape, dtype=np.int64).reshape(G.rank, -1)


def _phase_numerators(G: UnitGroup, grid: np.ndarray, e: Sequence[int], L: int) -> np.ndarray:
    acc = np.zeros(grid.shape[1], dtype=np.int64)
    for i, (x, m) in enumerate(zip(e, G.orders)):
        w = (x * (L // m)) % L
        if w:
            acc = (acc + grid[i] * w) % L
    return acc


def character_flags(G: UnitGroup) -> CharacterFlags:
    """全指標の自明・偶・原始フラグを整数演算で一括判定"""
    F = G.field
    grid = _exponent_grid(G)
    L = reduce(math.lcm, G.orders, 1)
    size = grid.shape[1]
    trivial = ~np.any(grid != 0, axis=0) if G.orders else np.ones(size, dtype=bool)

    if F.q == 2:
        even = np.ones(size, dtype=bool)
    else:
        gamma = G.discrete_log(Poly.constant(F, F.primitive_element))
        even = _phase_numerators(G, grid, gamma, L) == 0

    primitive = np.ones(size, dtype=bool)
    for index in range(len(G.components)):
        nontrivial_here = np.zeros(size, dtype=bool)
        for g in G.kernel_generators(index):
            nontrivial_here |= _phase_numerators(G, grid, G.discrete_log(g), L) != 0
        primitive &= nontrivial_here
    return CharacterFlags(trivial, even, primitive)


def character_sum_table(G: UnitGroup, weights: np.ndarray) -> np.ndarray:
    """
    全指標について S[a] = Σ_e w[e]·χ_a(g^e) を計算

    Args:
        G: 単数群
        weights: 形状 G.shape（または長さ φ）の重み

    Returns:
        長さ φ の複素配列（指標の辞書式順）
    """
    if not G.orders:
        return np.asarray(weights, dtype=np.complex128).reshape(1)
    w = np.asarray(weights).reshape(G.shape)
    return (np.fft.ifftn(w) * w.size).reshape(-1)


HISTOGRAM_CHUNK = 1 << 16


@lru_cache(maxsize=256)
def residue_index(G: UnitGroup) -> np.ndarray:
    """
    剰余のコード Σ c_i q^i（次数 < deg Q）から指数格子の平坦な添字への表

    Returns:
        長さ q^{deg Q} の整数配列。非単数は -1
    """
    q = G.field.q
    D = G.modulus.degree
    index = np.full(q ** D, -1, dtype=np.int64)
    for code, coeffs in enumerate(product(range(q), repeat=D)):
        e = G.dlog_coeffs(tuple(reversed(coeffs)))
        if e is not None:
            index[code] = int(np.ravel_multi_index(e, G.shape)) if G.orders else 0
    return index


def _prime_field_histogram(G: UnitGroup, items: List[Tuple[Coeffs, float]]) -> np.ndarray:
    """素体上で Q による剰余を numpy で一括計算して集計"""
    p = G.field.p
    m = np.asarray(G.modulus.coeffs, dtype=np.int64)
    D = len(m) - 1
    width = max(D, max(len(c) for c, _ in items))
    rows = np.zeros((len(items), width), dtype=np.int64)
    for i, (coeffs, _) in enumerate(items):
        rows[i, :len(coeffs)] = coeffs
    # Q はモニックなので、上の次数から先頭係数 × Q を引いていけば剰余が残る
    for k in range(width - 1, D - 1, -1):
        lead = rows[:, k].copy()
        rows[:, k - D:k + 1] = (rows[:, k - D:k + 1] - lead[:, None] * m) % p
    codes = rows[:, :D] @ (p ** np.arange(D, dtype=np.int64))
    flat = residue_index(G)[codes]
    keep = flat >= 0
    weights = np.asarray([w for _, w in items], dtype=np.float64)
    return np.bincount(flat[keep], weights=weights[keep], minlength=max(G.order, 1))


def weight_histogram(G: UnitGroup, items: Iterable[Tuple[Coeffs, float]]) -> np.ndarray:
    """
    (係数, 重み) 列を指数格子上のヒストグラムに集計（非単数は無視）

    素体上で項目数が剰余の個数 q^{deg Q} 以上あるときは、剰余表を作って numpy で一括集計します。
    """
    iterator = iter(items)
    chunk = list(islice(iterator, HISTOGRAM_CHUNK))
    if G.field.is_prime_field and chunk and G.field.q ** G.modulus.degree <= len(chunk):
        flat = np.zeros(max(G.order, 1), dtype=np.float64)
        while chunk:
            flat += _prime_field_histogram(G, chunk)
            chunk = list(islice(iterator, HISTOGRAM_CHUNK))
        return flat.reshape(G.shape if G.orders else (1,))
    hist = np.zeros(G.shape if G.orders else (1,), dtype=np.float64)
    for coeffs, w in chain(chunk, iterator):
        e = G.dlog_coeffs(coeffs)
        if e is None:
            continue
        hist[e if G.orders else 0] += w
    return hist


# ---- 個数公式 ----

def primitive_count_formula(Q: Poly) -> int:
    """Σ_{D|Q} μ(D)·φ(Q/D)（原始指標の総数、φ(1) = 1）"""
    total = 0
    for D in divisors(Q):
        rest = Q.monic() // D
        total += mobius(D) * (euler_phi(rest) if rest.degree > 0 else 1)
    return total


@dataclass
class CharacterCensus:
    """指標の個数とその公式値"""

    modulus: str
    q: int
    total: int
    even: int
    primitive: int
    primitive_even: int
    nonprimitive_even: int
    primitive_odd: int
    even_formula: Fraction
    primitive_even_formula: Fraction
    primitive_even_exact: Fraction
    formula_applies: bool = field(default=True)

    def to_dict(self) -> Dict:
        return {
            "modulus": self.modulus,
            "q": self.q,
            "total": self.total,
            "even": self.even,
            "primitive": self.primitive,
            "primitive_even": self.primitive_even,
            "nonprimitive_even": self.nonprimitive_even,
            "primitive_odd": self.primitive_odd,
            "even_formula": str(self.even_formula),
            "primitive_even_formula": str(self.primitive_even_formula),
            "primitive_even_exact_formula": str(self.primitive_even_exact),
            "primitive_even_formula_applies": self.formula_applies,
        }


def character_census(G: UnitGroup, flags: Optional[CharacterFlags] = None) -> CharacterCensus:
    """
    指標の個数調査

    偶指標数 φ(Q)/(q-1) と原始偶指標数の公式をフラグの全数走査と照合します。
    Σ_{D|Q} μ(D)φ(Q/D)/(q-1) は μ(Q) = 0 のとき厳密で、一般には
    (Σ_{D|Q} μ(D)φ(Q/D) + (q-2)μ(Q))/(q-1) が厳密な値です。
    """
    flags = flags or character_flags(G)
    Q = G.modulus
    q = G.field.q
    phi = G.order
    prim_sum = primitive_count_formula(Q)
    mu = mobius(Q)
    census = CharacterCensus(
        modulus=format_poly(Q),
        q=q,
        total=phi,
        even=int(flags.even.sum()),
        primitive=int(flags.primitive.sum()),
        primitive_even=int((flags.primitive & flags.even).sum()),
        nonprimitive_even=int((~flags.primitive & flags.even).sum()),
        primitive_odd=int((flags.primitive & ~flags.even).sum()),
        even_formula=Fraction(phi, q - 1),
        primitive_even_formula=Fraction(prim_sum, q - 1),
        primitive_even_exact=Fraction(prim_sum + (q - 2) * mu, q - 1),
        formula_applies=(mu == 0),
    )
    if census.even != census.even_formula:
        logger.error(f"Even character count {census.even} differs from {census.even_formula}")
        raise VerificationError(f"even character count mismatch modulo {census.modulus}")
    if census.primitive != prim_sum:
        logger.error(f"Primitive character count {census.primitive} differs from {prim_sum}")
        raise VerificationError(f"primitive character count mismatch modulo {census.modulus}")
    if census.primitive_even != census.primitive_even_exact:
        logger.error(f"Primitive even count {census.primitive_even} differs from {census.primitive_even_exact}")
        raise VerificationError(f"primitive even character count mismatch modulo {census.modulus}")
    logger.debug(f"Census modulo {census.modulus}: {census.to_dict()}")
    return census
