#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
VarianceEngine - 短区間と等差数列の交わりにおける素元の分散

Ψ・ν の数え上げ、平均値（定義どおりの和と閉じた式の二通り）、
分散 V / 修正分散 Ṽ の直接計算、対合による双対合同式への変換、
指標の直交関係による展開、Q̃ = T^{n-h}·Q* を法とする偶指標を使った
スペクトル側の計算を提供します。直接計算は分数で厳密に行います。
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np

from dirichlet_characters import character_census, character_flags, character_sum_table, weight_histogram
from errors import PreconditionError, VerificationError, check_budget
from finite_field import FiniteField, units
from l_functions import DEFAULT_TOLERANCES, family_spectra
from poly_ring import (DEFAULT_MONIC_BUDGET, Coeffs, Poly, euler_phi, factor, format_poly, involution,
                       poly_gcd, reduce_coeffs, von_mangoldt_table)
from unit_group import DEFAULT_UNIT_GROUP_BUDGET, UnitGroup, build_unit_group

UNFOLDED_MEAN_BUDGET = 2 * 10 ** 4

logger = logging.getLogger(__name__)


def fraction_entry(x: Fraction) -> Dict:
    """レポート用の {value, exact} 表現"""
    x = Fraction(x)
    return {"value": float(x), "exact": f"{x.numerator}/{x.denominator}"}


def phi_or_one(Q: Poly) -> int:
    """φ(Q)（次数 0 の Q では 1）"""
    if Q.is_zero():
        raise PreconditionError("modulus must be nonzero")
    return 1 if Q.degree < 1 else euler_phi(Q)


def _check_range(n: int, h: int) -> None:
    if n < 1:
        raise PreconditionError(f"interval degree must be positive, got n={n}")
    if not 0 <= h <= n - 1:
        raise PreconditionError(f"short interval parameter out of range: h={h} with n={n}")


def _check_coprime(A: Poly, Q: Poly) -> None:
    if Q.degree >= 1 and not poly_gcd(A, Q).is_one():
        raise PreconditionError(f"not coprime: {format_poly(A)} and {format_poly(Q)}")


def _monic_key(F: FiniteField, coeffs: Coeffs) -> Coeffs:
    lead = coeffs[-1]
    if lead == 1:
        return coeffs
    inv = F.inv(lead)
    return tuple(F.mul(c, inv) for c in coeffs)


def _interval_members(C: Poly, h: int):
    """I(C;h) の元の係数タプル（低次 h+1 個の係数を辞書式順に動かす）"""
    F = C.field
    top = C.coeffs[h + 1:]
    base = C.coeffs[:h + 1] + (0,) * (h + 1 - len(C.coeffs[:h + 1]))
    for low in product(F.lex_order, repeat=h + 1):
        yield tuple(F.add(a, b) for a, b in zip(base, low)) + top


# ---- Ψ と ν ----

def nu(C: Poly, h: int, budget: float = DEFAULT_MONIC_BUDGET) -> int:
    """
    ν(C;h) = Σ Λ(f)（f ∈ I(C;h), f(0) ≠ 0）

    Args:
        C: モニック n 次多項式
        h: 0 ≤ h < n
    """
    if not C.is_monic():
        raise PreconditionError(f"interval center must be monic: {format_poly(C)}")
    _check_range(C.degree, h)
    F = C.field
    check_budget(f"short interval of size q^{h + 1}", F.q ** (h + 1), budget)
    table = von_mangoldt_table(F, C.degree)
    return sum(table.get(coeffs, 0) for coeffs in _interval_members(C, h) if coeffs[0] != 0)


def psi_progression(n: int, Q: Poly, A: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> int:
    """Ψ(n;Q,A) = Σ Λ(N)（N ∈ M_n, N ≡ A mod Q）"""
    if n < 1:
        raise PreconditionError(f"degree must be positive, got n={n}")
    _check_coprime(A, Q)
    F = Q.field
    check_budget(f"monic polynomials of degree {n} over F_{F.q}", F.q ** n, budget)
    mod = Q.monic().coeffs
    target = reduce_coeffs(F, A.coeffs, mod)
    return sum(lam for coeffs, lam in von_mangoldt_table(F, n).items()
               if reduce_coeffs(F, coeffs, mod) == target)


def psi_hybrid(C: Poly, h: int, Q: Poly, A: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> int:
    """
    Ψ(C,h;Q,A) = Σ Λ(N)（N ∈ I(C;h), N(0) ≠ 0, N ≡ A mod Q）

    C はモニックでなくてもよく、和もモニックに限りません。
    """
    _check_range(C.degree, h)
    _check_coprime(A, Q)
    F = C.field
    check_budget(f"short interval of size q^{h + 1}", F.q ** (h + 1), budget)
    table = von_mangoldt_table(F, C.degree)
    mod = Q.monic().coeffs
    target = reduce_coeffs(F, A.coeffs, mod)
    total = 0
    for coeffs in _interval_members(C, h):
        if coeffs[0] == 0:
            continue
        lam = table.get(_monic_key(F, coeffs), 0)
        if lam and reduce_coeffs(F, coeffs, mod) == target:
            total += lam
    return total


# ---- 区間ブロックの集計 ----

@dataclass(frozen=True)
class BlockMoments:
    """
    上位係数 (次数 h+1..n) が等しい区間ごとの Σ_A Ψ と Σ_A Ψ²

    Attributes:
        blocks: 区間の総数（モニックなら q^{n-h-1}）
        s1: ブロックごとの Σ_A Ψ（空でないものだけ）
        s2: ブロックごとの Σ_A Ψ²
        lambda_square: Σ Λ(N)²（条件を満たす N 全体）
    """

    blocks: int
    s1: Tuple[int, ...]
    s2: Tuple[int, ...]
    lambda_square: int

    @property
    def total(self) -> int:
        return sum(self.s1)

    def centered(self, c: Fraction, phi: int) -> Fraction:
        """Σ_blocks Σ_A (Ψ - c)²"""
        return Fraction(sum(self.s2)) - 2 * c * self.total + self.blocks * phi * c * c


@lru_cache(maxsize=256)
def block_moments(n: int, h: int, Q: Poly, all_scalars: bool = False,
                  budget: float = DEFAULT_MONIC_BUDGET) -> BlockMoments:
    """
    deg N = n, N(0) ≠ 0, (N, Q) = 1 の N を上位係数でブロックに分け、剰余類ごとに Λ を集計

    Args:
        all_scalars: True なら c·N（c ∈ F_q^*）も含め、区間中心を非モニックにも広げる
    """
    _check_range(n, h)
    F = Q.field
    phi = phi_or_one(Q)
    scalars = [c.value for c in units(F)] if all_scalars else [1]
    check_budget(f"direct variance over F_{F.q} with q^n*phi(Q)", F.q ** n * phi * len(scalars), budget)
    mod = Q.monic().coeffs
    unit_cache: Dict[Coeffs, bool] = {}
    buckets: Dict[Coeffs, Dict[Coeffs, int]] = {}
    lambda_square = 0
    for coeffs, lam in von_mangoldt_table(F, n).items():
        if coeffs[0] == 0:
            continue
        for c in scalars:
            scaled = coeffs if c == 1 else tuple(F.mul(x, c) for x in coeffs)
            r = reduce_coeffs(F, scaled, mod)
            ok = unit_cache.get(r)
            if ok is None:
                ok = Q.degree < 1 or poly_gcd(Poly(F, r), Q).is_one()
                unit_cache[r] = ok
            if not ok:
                continue
            residues = buckets.setdefault(scaled[h + 1:], {})
            residues[r] = residues.get(r, 0) + lam
            lambda_square += lam * lam
    s1 = tuple(sum(res.values()) for res in buckets.values())
    s2 = tuple(sum(v * v for v in res.values()) for res in buckets.values())
    blocks = len(scalars) * F.q ** (n - h - 1)
    logger.debug(f"Block moments n={n} h={h} Q={format_poly(Q)}: {len(buckets)} nonempty of {blocks}")
    return BlockMoments(blocks, s1, s2, lambda_square)


# ---- 平均値と分散 ----

def mean_value_closed_form(n: int, h: int, Q: Poly) -> Fraction:
    """(q^n - Σ_{P|Q, deg P|n} deg P - [T∤Q]Λ(T^n)) / (φ(Q) q^{n-h-1})"""
    _check_range(n, h)
    q = Q.field.q
    prime_mass = 0
    t_divides = False
    if Q.degree >= 1:
        for P, _ in factor(Q).factors:
            if n % P.degree == 0:
                prime_mass += P.degree
            if P.coeffs == (0, 1):
                t_divides = True
    excluded = prime_mass + (0 if t_divides else 1)
    return Fraction(q ** n - excluded, phi_or_one(Q) * q ** (n - h - 1))


def _unit_residues(Q: Poly) -> List[Poly]:
    if Q.degree < 1:
        return [Poly.one(Q.field)]
    return list(build_unit_group(Q.monic()).units())


def mean_value_unfolded(n: int, h: int, Q: Poly, budget: float = 10 ** 6) -> Fraction:
    """平均値を Σ_{C ∈ M_n} Σ_A Ψ(C,h;Q,A) / (q^n φ(Q)) として psi_hybrid から直接求める（検算用）"""
    _check_range(n, h)
    F = Q.field
    phi = phi_or_one(Q)
    check_budget("unfolded mean value", F.q ** n * phi * F.q ** (h + 1), budget)
    residues = _unit_residues(Q)
    total = 0
    for low in product(F.lex_order, repeat=n):
        C = Poly(F, low + (1,))
        total += sum(psi_hybrid(C, h, Q, A) for A in residues)
    return Fraction(total, F.q ** n * phi)


def mean_value(n: int, h: int, Q: Poly, budget: float = DEFAULT_MONIC_BUDGET,
               unfolded_budget: float = UNFOLDED_MEAN_BUDGET) -> Fraction:
    """
    平均値 (1/(q^n φ(Q))) Σ_C Σ_A Ψ(C,h;Q,A)

    区間 I(C;h) は C の上位 n-h-1 係数だけで決まり、M_n のうち q^{h+1} 個の C が
    同じ区間を与えるので、定義どおりの和はブロック和の q^{h+1} 倍に畳めます。
    畳んだ和を閉じた式と比較し、q^n φ(Q) q^{h+1} が unfolded_budget 以下なら
    psi_hybrid を C と A について直接回した和とも照合してから返します。
    """
    q = Q.field.q
    moments = block_moments(n, h, Q, budget=budget)
    by_definition = Fraction(q ** (h + 1) * moments.total, q ** n * phi_or_one(Q))
    closed = mean_value_closed_form(n, h, Q)
    if by_definition != closed:
        logger.error(f"Mean value by definition {by_definition} differs from closed form {closed}")
        raise VerificationError(f"mean value routes disagree: {by_definition} != {closed}")
    if q ** n * phi_or_one(Q) * q ** (h + 1) <= unfolded_budget:
        unfolded = mean_value_unfolded(n, h, Q, unfolded_budget)
        if unfolded != closed:
            logger.error(f"Mean value summed over intervals {unfolded} differs from closed form {closed}")
            raise VerificationError(f"mean value routes disagree: {unfolded} != {closed}")
    return closed


def variance_about(n: int, h: int, Q: Poly, center: Fraction,
                   budget: float = DEFAULT_MONIC_BUDGET) -> Fraction:
    """(1/q^n) Σ_{C ∈ M_n} Σ_A |Ψ(C,h;Q,A) - center|²（区間は上位係数ブロックごとに q^{h+1} 回現れる）"""
    q = Q.field.q
    moments = block_moments(n, h, Q, budget=budget)
    return moments.centered(Fraction(center), phi_or_one(Q)) * Fraction(q ** (h + 1), q ** n)


def variance_direct_exact(n: int, h: int, Q: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> Fraction:
    """V(n,h;Q)（中心 q^{h+1}/φ(Q)）"""
    return variance_about(n, h, Q, Fraction(Q.field.q ** (h + 1), phi_or_one(Q)), budget)


def variance_direct(n: int, h: int, Q: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> float:
    return float(variance_direct_exact(n, h, Q, budget))


def variance_tilde_direct_exact(n: int, h: int, Q: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> Fraction:
    """Ṽ(n,h;Q)（中心は平均値）"""
    return variance_about(n, h, Q, mean_value(n, h, Q, budget), budget)


def variance_tilde_direct(n: int, h: int, Q: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> float:
    return float(variance_tilde_direct_exact(n, h, Q, budget))


def variance_unfolded(n: int, h: int, Q: Poly, center: Optional[Fraction] = None,
                      budget: float = 10 ** 6) -> Fraction:
    """全 C ∈ M_n と全単数剰余 A について psi_hybrid を直接呼ぶ総当たり版（検算用）"""
    _check_range(n, h)
    F = Q.field
    phi = phi_or_one(Q)
    check_budget("unfolded variance", F.q ** n * phi * F.q ** (h + 1), budget)
    if center is None:
        center = Fraction(F.q ** (h + 1), phi)
    residues = _unit_residues(Q)
    total = Fraction(0)
    for low in product(F.lex_order, repeat=n):
        C = Poly(F, low + (1,))
        for A in residues:
            total += (psi_hybrid(C, h, Q, A) - center) ** 2
    return total / F.q ** n


def mean_shift_bound(n: int, h: int, Q: Poly, constant: float = 10.0,
                     budget: float = DEFAULT_MONIC_BUDGET) -> Dict:
    """
    |V - Ṽ| ≤ constant·q^{2(h+1)} deg Q / (φ(Q) q^n) の確認

    V - Ṽ = φ(Q)(平均値 - q^{h+1}/φ(Q))² は厳密に成り立つので、それも照合します。
    """
    q = Q.field.q
    phi = phi_or_one(Q)
    V = variance_direct_exact(n, h, Q, budget)
    Vt = variance_tilde_direct_exact(n, h, Q, budget)
    mean = mean_value(n, h, Q, budget)
    shift = phi * (mean - Fraction(q ** (h + 1), phi)) ** 2
    if V - Vt != shift:
        raise VerificationError(f"variance shift identity failed: {V - Vt} != {shift}")
    scale = Fraction(q ** (2 * (h + 1)) * max(Q.degree, 1), phi * q ** n)
    observed = float(abs(V - Vt) / scale)
    return {
        "difference": fraction_entry(V - Vt),
        "scale": fraction_entry(scale),
        "observed_constant": observed,
        "envelope_constant": constant,
        "holds": observed <= constant,
    }


def p_decomposition_check(n: int, h: int, Q: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> Dict:
    """
    deg B = n-h-1 の全 B（非モニック含む）にわたる和を (q-1) で割るとモニック B の和に一致することの確認
    """
    q = Q.field.q
    phi = phi_or_one(Q)
    mean = mean_value(n, h, Q, budget)
    monic_sum = block_moments(n, h, Q, False, budget).centered(mean, phi)
    all_sum = block_moments(n, h, Q, True, budget).centered(mean, phi)
    if all_sum != (q - 1) * monic_sum:
        logger.error(f"Decomposition over scalars failed: {all_sum} vs (q-1)*{monic_sum}")
        raise VerificationError("sum over all B does not split into q-1 monic copies")
    return {"monic_sum": fraction_entry(monic_sum), "all_sum": fraction_entry(all_sum), "holds": True}


# ---- 対合による双対合同式 ----

def dual_representative(A: Poly, Q: Poly, n: int) -> Poly:
    """
    A mod Q の次数ちょうど n のモニック代表 Ã = A₀ + Q·T^{n-deg Q}/lead(Q)

    Args:
        A: 剰余類の代表
        Q: 法（次数 ≤ n）
        n: 次数
    """
    if Q.degree < 1 or Q.degree > n:
        raise PreconditionError(f"representative of degree {n} needs 1 <= deg Q <= n, got {format_poly(Q)}")
    F = Q.field
    A0 = A % Q
    return A0 + Q * Poly.monomial(F, n - Q.degree, F.inv(Q.leading))


def dual_transfer(B: Poly, h: int, Q: Poly, A: Poly, budget: float = DEFAULT_MONIC_BUDGET) -> int:
    """
    Σ Λ(N)（deg N = n, N ≡ B* mod T^{n-h}, N ≡ Ã* mod Q*）、n = h + 1 + deg B

    psi_hybrid(T^{h+1}B, h, Q, A) と一致します。
    """
    if Q.constant_term == 0:
        raise PreconditionError("involution transfer requires Q(0) ≠ 0")
    if B.is_zero():
        raise PreconditionError("dual transfer needs a nonzero B")
    n = h + 1 + B.degree
    _check_range(n, h)
    _check_coprime(A, Q)
    if Q.degree > n:
        raise PreconditionError(f"dual transfer needs deg Q <= n, got deg Q={Q.degree} and n={n}")
    F = Q.field
    check_budget(f"dual transfer enumeration q^{h + 1}", F.q ** (h + 1), budget)
    table = von_mangoldt_table(F, n)
    low = involution(B).coeffs
    low = low + (0,) * (n - h - len(low))
    q_star = involution(Q).monic().coeffs
    target = reduce_coeffs(F, involution(dual_representative(A, Q, n)).coeffs, q_star)
    total = 0
    for lead in (c.value for c in units(F)):
        for mid in product(F.lex_order, repeat=h):
            coeffs = low + tuple(mid) + (lead,)
            lam = table.get(_monic_key(F, coeffs), 0)
            if lam and reduce_coeffs(F, coeffs, q_star) == target:
                total += lam
    return total


def _joint_index(groups: List[UnitGroup], coeffs: Coeffs) -> Optional[Tuple[int, ...]]:
    exps: Tuple[int, ...] = ()
    for G in groups:
        e = G.dlog_coeffs(coeffs)
        if e is None:
            return None
        exps += e
    return exps


def all_scalar_histogram(G: UnitGroup, monic_hist: np.ndarray,
                         groups: Optional[List[UnitGroup]] = None) -> np.ndarray:
    """モニック N のヒストグラムから c·N（c ∈ F_q^*）全体のヒストグラムを作る（指数の平行移動）"""
    F = G.field
    groups = groups or [G]
    total = np.zeros_like(monic_hist)
    for c in units(F):
        shift = _joint_index(groups, (c.value,))
        if not shift:
            total += monic_hist
            continue
        total += np.roll(monic_hist, shift, axis=tuple(range(len(shift))))
    return total


def orthogonality_expansion(B: Poly, h: int, Q: Poly, A: Poly, seed: int = 0,
                            budget: float = DEFAULT_MONIC_BUDGET) -> complex:
    """
    T^{n-h} と Q* を法とする指標の二重和による Ψ(T^{h+1}B,h;Q,A)

    (1/(φ(T^{n-h})φ(Q*))) Σ_{χ1,χ2} χ̄1(B*)χ̄2(Ã*) Σ_{deg N = n} χ1(N)χ2(N)Λ(N)
    """
    if Q.constant_term == 0:
        raise PreconditionError("involution transfer requires Q(0) ≠ 0")
    n = h + 1 + B.degree
    _check_range(n, h)
    _check_coprime(A, Q)
    F = Q.field
    G1 = build_unit_group(Poly.monomial(F, n - h), seed)
    G2 = build_unit_group(involution(Q).monic(), seed)
    groups = [G1, G2]
    orders = tuple(G1.orders) + tuple(G2.orders)
    shape = orders or (1,)
    hist = np.zeros(shape, dtype=np.float64)
    for coeffs, lam in von_mangoldt_table(F, n, budget).items():
        e = _joint_index(groups, coeffs)
        if e is not None:
            hist[e or (0,)] += lam
    hist = all_scalar_histogram(G1, hist, groups)
    sums = np.fft.ifftn(hist) * hist.size

    target_t = G1.dlog_coeffs(involution(B).coeffs)
    target_q = G2.dlog_coeffs(involution(dual_representative(A, Q, n)).coeffs)
    if target_t is None or target_q is None:
        raise PreconditionError("dual residues are not units")
    point = target_t + target_q
    grid = np.indices(shape, dtype=np.float64)
    phase = np.zeros(shape, dtype=np.float64)
    for i, (x, m) in enumerate(zip(point, orders)):
        phase += grid[i] * x / m
    value = np.sum(np.exp(-2j * np.pi * phase) * sums) / (G1.order * G2.order)
    return complex(value)


# ---- スペクトル側 ----

@dataclass
class SpectralVariance:
    """
    偶指標によるスペクトル側の分散

    Attributes:
        full: Σ_{偶 χ̃ ≠ χ̃_0} |Ψ(n,χ̃)|² / ((q-1) q^{n-h-1} φ(Q̃))
        full_all_nontrivial: 偶奇を問わない同じ和（奇指標は 0 を与える）
        primitive_even_main: q^{h+1}(q-1)/φ(Q̃) Σ_{原始偶} |tr Θ^n|²
    """

    q: int
    n: int
    h: int
    modulus: str
    modulus_tilde: str
    phi_tilde: int
    full: float
    full_all_nontrivial: float
    odd_mass: float
    trivial_term: float
    primitive_even_main: float
    primitive_even_count: int
    primitive_even_trace_mean: float
    census: Dict = field(default_factory=dict)
    spectrum_check: Optional[Dict] = None

    def to_dict(self) -> Dict:
        result = {
            "q": self.q,
            "n": self.n,
            "h": self.h,
            "modulus": self.modulus,
            "modulus_tilde": self.modulus_tilde,
            "phi_tilde": self.phi_tilde,
            "full": self.full,
            "full_all_nontrivial": self.full_all_nontrivial,
            "odd_mass": self.odd_mass,
            "trivial_term": self.trivial_term,
            "primitive_even_main": self.primitive_even_main,
            "primitive_even_count": self.primitive_even_count,
            "primitive_even_trace_mean": self.primitive_even_trace_mean,
            "census": self.census,
        }
        if self.spectrum_check is not None:
            result["spectrum_check"] = self.spectrum_check
        return result


def tilde_modulus(n: int, h: int, Q: Poly) -> Poly:
    """Q̃ = T^{n-h}·Q*（モニック化）"""
    F = Q.field
    return Poly.monomial(F, n - h) * involution(Q).monic()


def variance_spectral(n: int, h: int, Q: Poly, seed: int = 0,
                      tolerances: Optional[Dict[str, float]] = None,
                      spectral_budget: float = DEFAULT_UNIT_GROUP_BUDGET,
                      budget: float = DEFAULT_MONIC_BUDGET,
                      verify_spectrum: bool = False) -> SpectralVariance:
    """
    Q̃ = T^{n-h}Q* を法とする偶指標の |Ψ(n,χ̃)|² の和から Ṽ を計算

    Args:
        n, h: 区間の次数とパラメータ
        Q: Q(0) ≠ 0, 1 ≤ deg Q ≤ n
        seed: 単数群の生成元探索 seed
        tolerances: identity / rh / rh_fatal / explicit_formula
        spectral_budget: φ(Q̃) の上限
        verify_spectrum: True なら原始指標の L* の逆根からもトレースを求めて照合

    Returns:
        SpectralVariance
    """
    tols = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    _check_range(n, h)
    if Q.constant_term == 0:
        raise PreconditionError("involution transfer requires Q(0) ≠ 0")
    if not 1 <= Q.degree <= n:
        raise PreconditionError(f"spectral route needs 1 <= deg Q <= n, got deg Q={Q.degree} and n={n}")
    F = Q.field
    q = F.q
    Qt = tilde_modulus(n, h, Q)
    expected_phi = (q - 1) * q ** (n - h - 1) * euler_phi(Q)
    check_budget(f"unit group modulo {format_poly(Qt)} with phi={expected_phi}", expected_phi, spectral_budget)
    G = build_unit_group(Qt, seed, spectral_budget)
    if G.order != expected_phi:
        raise VerificationError(f"phi(Q~) = {G.order} differs from (q-1)q^(n-h-1)phi(Q) = {expected_phi}")

    flags = character_flags(G)
    census = character_census(G, flags)
    check_budget(f"prime powers of degree {n} over F_{q}", q ** n, budget)
    monic_hist = weight_histogram(G, von_mangoldt_table(F, n, budget).items())
    all_hist = all_scalar_histogram(G, monic_hist)
    sums_all = character_sum_table(G, all_hist)
    sums_monic = character_sum_table(G, monic_hist)

    norm = (q - 1) * q ** (n - h - 1) * G.order
    squares = np.abs(sums_all) ** 2
    nontrivial = ~flags.trivial
    full = float(np.sum(squares[flags.even & nontrivial])) / norm
    full_all = float(np.sum(squares[nontrivial])) / norm
    odd_mass = float(np.sum(squares[flags.odd])) / norm
    if odd_mass > tols["identity"] * (1 + full):
        logger.error(f"Odd characters carry mass {odd_mass} modulo {format_poly(Qt)}")
        raise VerificationError(f"odd characters do not vanish on the all-polynomial sum: {odd_mass:.3e}")

    trivial_term = float(sums_all[0].real) / G.order
    mean = float(mean_value_closed_form(n, h, Q))
    if abs(trivial_term - mean) > tols["identity"] * (1 + mean):
        raise VerificationError(f"trivial character term {trivial_term} differs from the mean value {mean}")

    traces = -(sums_monic + flags.even.astype(np.float64)) / q ** (n / 2)
    mask = flags.primitive & flags.even & nontrivial
    trace_squares = np.abs(traces[mask]) ** 2
    main = q ** (h + 1) * (q - 1) / G.order * float(np.sum(trace_squares))
    result = SpectralVariance(
        q=q, n=n, h=h,
        modulus=format_poly(Q),
        modulus_tilde=format_poly(Qt),
        phi_tilde=G.order,
        full=full,
        full_all_nontrivial=full_all,
        odd_mass=odd_mass,
        trivial_term=trivial_term,
        primitive_even_main=main,
        primitive_even_count=int(mask.sum()),
        primitive_even_trace_mean=float(np.mean(trace_squares)) if trace_squares.size else float("nan"),
        census=census.to_dict(),
    )
    if verify_spectrum:
        result.spectrum_check = _spectrum_check(G, flags, traces, n, tols, budget)
    logger.info(f"Spectral variance modulo {result.modulus_tilde}: full={full:.6g}, main={main:.6g}")
    return result


def _spectrum_check(G: UnitGroup, flags, traces: np.ndarray, n: int, tols: Dict[str, float],
                    budget: float) -> Dict:
    """原始指標について L* の逆根から求めたトレースと明示公式のトレースを比較"""
    spectra = family_spectra(G, flags, tols, budget)
    indices = np.flatnonzero(flags.primitive & ~flags.trivial)
    worst = 0.0
    rh_worst = 0.0
    for index, spec in zip(indices, spectra):
        diff = abs(spec.trace(n) - traces[index])
        worst = max(worst, diff / max(1, spec.d))
        rh_worst = max(rh_worst, spec.rh_max_deviation)
    if worst > tols["explicit_formula"]:
        raise VerificationError(f"explicit formula mismatch: max deviation {worst:.3e}")
    return {"characters": len(spectra), "max_trace_deviation": worst, "rh_max_deviation": rh_worst}


# ---- レポート ----

@dataclass
class VarianceReport:
    """分散計算の結果一式"""

    q: int
    n: int
    h: int
    modulus: str
    factorization: Dict
    phi: int
    mean_value: Fraction
    V_direct: Fraction
    V_tilde_direct: Fraction
    V_spectral: Optional[float] = None
    theorem_main_term: Optional[float] = None
    theorem_residual: Optional[float] = None
    census: Optional[Dict] = None
    seed: int = 0
    details: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "q": self.q,
            "n": self.n,
            "h": self.h,
            "modulus": self.modulus,
            "factorization": self.factorization,
            "phi": self.phi,
            "mean_value": fraction_entry(self.mean_value),
            "V_direct": fraction_entry(self.V_direct),
            "V_tilde_direct": fraction_entry(self.V_tilde_direct),
            "V_spectral": self.V_spectral,
            "theorem_main_term": self.theorem_main_term,
            "theorem_residual": self.theorem_residual,
            "census": self.census,
            "seed": self.seed,
            "details": self.details,
        }
