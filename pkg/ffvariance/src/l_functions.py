#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LFunctions - Dirichlet L 多項式と Frobenius 固有位相

L(u,χ) = Σ_n (Σ_{N ∈ M_n} χ(N)) u^n を直接和で求め、原始偶指標では
自明零点 (1 - u) を割って L*(u,χ) を得ます。L* の逆根をコンパニオン行列の
固有値（numpy.roots）で求めて q^{1/2} で正規化し、Θ_χ の位相とします。
トレースは明示公式 −q^{-n/2}(Σ_{M_n} χ(N)Λ(N) + λ_χ) と照合します。
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from dirichlet_characters import (CharacterFlags, DirichletCharacter, TWO_PI, accumulate_phases,
                                  character_at, character_flags, character_moment, character_sum_table,
                                  weight_histogram)
from errors import PreconditionError, VerificationError, check_budget
from finite_field import units
from poly_ring import DEFAULT_MONIC_BUDGET, enumerate_monic, format_poly, von_mangoldt_table
from unit_group import UnitGroup

DEFAULT_TOLERANCES = {
    "identity": 1e-6,
    "rh": 1e-6,
    "rh_fatal": 1e-4,
    "explicit_formula": 1e-6,
    "root_residual": 1e-9,
}

logger = logging.getLogger(__name__)


def accumulation_tolerance(tol: float, terms: int) -> float:
    """項数に応じて広げた絶対許容誤差"""
    return tol * max(1.0, math.sqrt(terms))


@dataclass(frozen=True)
class LPolynomial:
    """
    L 多項式（u の昇冪の係数）

    Attributes:
        character: 指標
        coeffs: c_0..c_D
        completed: 自明零点を除いた L* なら True
    """

    character: DirichletCharacter
    coeffs: Tuple[complex, ...]
    completed: bool = False

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, u: complex) -> complex:
        acc = complex(0, 0)
        for c in reversed(self.coeffs):
            acc = acc * u + c
        return acc

    def to_dict(self) -> Dict:
        return {
            "exps": list(self.character.exps),
            "completed": self.completed,
            "coeffs": [[c.real, c.imag] for c in self.coeffs],
        }


@dataclass(frozen=True)
class FrobeniusSpectrum:
    """
    Θ_χ の固有位相

    Attributes:
        character: 指標
        d: deg Q - 1 - λ_χ
        phases: θ_1..θ_d（[0, 2π) で昇順）
        inverse_roots: L* の逆根 α_j
        rh_max_deviation: max |(|α_j| - q^{1/2})| / q^{1/2}
        residual: 逆根での L* の相対残差の最大値
    """

    character: DirichletCharacter
    d: int
    phases: Tuple[float, ...]
    inverse_roots: Tuple[complex, ...]
    rh_max_deviation: float
    residual: float

    def trace(self, n: int) -> complex:
        """tr Θ^n = Σ_j e^{i n θ_j}"""
        if n == 0:
            return complex(self.d, 0)
        re = math.fsum(math.cos(n * t) for t in self.phases)
        im = math.fsum(math.sin(n * t) for t in self.phases)
        return complex(re, im)

    def to_dict(self) -> Dict:
        return {
            "exps": list(self.character.exps),
            "even": self.character.is_even,
            "primitive": self.character.is_primitive,
            "d": self.d,
            "phases": list(self.phases),
            "rh_max_deviation": self.rh_max_deviation,
            "root_residual": self.residual,
        }


# ---- L 多項式 ----

def l_polynomial(chi: DirichletCharacter, budget: float = DEFAULT_MONIC_BUDGET,
                 tol: float = DEFAULT_TOLERANCES["identity"]) -> LPolynomial:
    """
    L(u,χ) の係数を M_k 上の直接和で計算（k ≤ deg Q - 1）

    次数 deg Q の係数も 1 つ余分に計算し、0 になることを確認します。

    Args:
        chi: 非自明指標
        budget: 列挙件数の上限
        tol: 余分な係数の許容誤差

    Returns:
        LPolynomial
    """
    if chi.is_trivial:
        raise PreconditionError(f"no finite L-polynomial for the trivial character modulo {format_poly(chi.modulus)}")
    F = chi.group.field
    D = chi.modulus.degree - 1
    check_budget(f"L-polynomial modulo {format_poly(chi.modulus)}", F.q ** (D + 1), budget)
    coeffs: List[complex] = []
    for k in range(D + 2):
        coeffs.append(character_moment(chi, ((N.coeffs, 1.0) for N in enumerate_monic(F, k, budget))))
    extra = coeffs.pop()
    if abs(extra) > accumulation_tolerance(tol, F.q ** (D + 1)):
        logger.error(f"Coefficient of degree {D + 1} is {extra} for character {chi.exps}")
        raise VerificationError(f"L-polynomial coefficient beyond degree {D} does not vanish: {abs(extra):.3e}")
    return LPolynomial(chi, tuple(coeffs))


def l_polynomials(G: UnitGroup, budget: float = DEFAULT_MONIC_BUDGET) -> np.ndarray:
    """
    全指標の L 係数を一括計算

    Returns:
        形状 (φ(Q), deg Q) の複素配列。行は指標の辞書式順、列は c_0..c_{deg Q - 1}
    """
    F = G.field
    D = G.modulus.degree - 1
    check_budget(f"L-polynomial family modulo {format_poly(G.modulus)}", F.q ** D, budget)
    columns = []
    for k in range(D + 1):
        hist = weight_histogram(G, ((N.coeffs, 1.0) for N in enumerate_monic(F, k, budget)))
        columns.append(character_sum_table(G, hist))
    return np.stack(columns, axis=1)


def completed_l(L: LPolynomial, tol: float = DEFAULT_TOLERANCES["identity"]) -> LPolynomial:
    """
    原始指標の L*(u,χ)

    偶指標では L(u,χ) = (1 - u)·L*(u,χ) として (1 - u) で割り、剰余 L(1,χ) が
    許容誤差内であることを確認します。奇指標ではそのまま返します。
    """
    chi = L.character
    if chi.is_trivial or not chi.is_primitive:
        raise PreconditionError(
            f"completion defined for primitive characters only: {chi.exps} modulo {format_poly(chi.modulus)}")
    if L.completed:
        return L
    coeffs = list(L.coeffs)
    if chi.is_even:
        quotient = []
        acc = complex(0, 0)
        for c in coeffs[:-1]:
            acc += c
            quotient.append(acc)
        remainder = acc + coeffs[-1]
        scale = max(1.0, sum(abs(c) for c in coeffs))
        if abs(remainder) > tol * scale:
            logger.error(f"L(1) = {remainder} for even primitive character {chi.exps}")
            raise VerificationError(f"unexpected trivial-zero structure: |L(1)| = {abs(remainder):.3e}")
        coeffs = quotient
    d = chi.modulus.degree - 1 - chi.lambda_chi
    if len(coeffs) - 1 != d:
        raise VerificationError(f"unexpected trivial-zero structure: completed degree {len(coeffs) - 1} != d = {d}")
    return LPolynomial(chi, tuple(coeffs), completed=True)


def frobenius_spectrum(chi: DirichletCharacter, L: Optional[LPolynomial] = None,
                       tolerances: Optional[Dict[str, float]] = None,
                       budget: float = DEFAULT_MONIC_BUDGET) -> FrobeniusSpectrum:
    """
    L* の逆根から Θ_χ の固有位相を求める

    Args:
        chi: 原始非自明指標
        L: 計算済みの L 多項式（省略時は計算）
        tolerances: rh / rh_fatal / root_residual の許容誤差

    Returns:
        FrobeniusSpectrum
    """
    tols = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    completed = completed_l(L or l_polynomial(chi, budget), tols["identity"])
    q = chi.group.field.q
    sqrt_q = math.sqrt(q)
    b = np.asarray(completed.coeffs, dtype=np.complex128)
    d = len(b) - 1
    if d == 0:
        return FrobeniusSpectrum(chi, 0, (), (), 0.0, 0.0)

    # np.roots は降冪係数をとるので、昇冪の b をそのまま渡すと u^d L*(1/u) の根 = 逆根
    alphas = np.roots(b)
    moduli = np.abs(alphas)
    deviation = float(np.max(np.abs(moduli - sqrt_q)) / sqrt_q)
    if deviation > tols["rh_fatal"]:
        logger.error(f"Inverse root moduli {moduli} deviate from sqrt(q) for character {chi.exps}")
        raise VerificationError(f"RH violation: relative deviation {deviation:.3e} for character {chi.exps}")
    if deviation > tols["rh"]:
        logger.warning(f"RH deviation {deviation:.3e} above reporting tolerance for character {chi.exps}")

    powers = np.vander(alphas, d + 1)
    values = np.abs(powers @ b)
    scale = np.abs(powers) @ np.abs(b)
    residual = float(np.max(values / scale))
    if residual > tols["root_residual"]:
        logger.warning(f"Root residual {residual:.3e} for character {chi.exps}")

    phases = np.sort(np.mod(np.angle(alphas / sqrt_q), TWO_PI))
    phases = tuple(float(t) if t < TWO_PI else 0.0 for t in phases)
    return FrobeniusSpectrum(chi, d, tuple(sorted(phases)), tuple(complex(a) for a in alphas), deviation, residual)


# ---- Ψ と明示公式 ----

def psi_chi(chi: DirichletCharacter, n: int, monic_only: bool = True,
            budget: float = DEFAULT_MONIC_BUDGET) -> complex:
    """
    Σ χ(N)Λ(N)（deg N = n、monic_only なら M_n のみ、そうでなければ全多項式）
    """
    if n < 1:
        raise PreconditionError(f"psi_chi needs n >= 1, got {n}")
    F = chi.group.field
    check_budget(f"psi_chi over degree {n}", F.q ** n, budget)
    table = von_mangoldt_table(F, n)
    scalars = [1] if monic_only else [c.value for c in units(F)]
    counts = np.zeros(chi.period, dtype=np.float64)
    for c in scalars:
        for coeffs, lam in table.items():
            scaled = coeffs if c == 1 else tuple(F.mul(x, c) for x in coeffs)
            j = chi.phase_index(scaled)
            if j is not None:
                counts[j] += lam
    return accumulate_phases(chi.period, counts)


def explicit_trace(chi: DirichletCharacter, n: int, budget: float = DEFAULT_MONIC_BUDGET) -> complex:
    """明示公式による tr Θ^n = −q^{-n/2}(Σ_{M_n} χ(N)Λ(N) + λ_χ)"""
    q = chi.group.field.q
    return -(psi_chi(chi, n, True, budget) + chi.lambda_chi) / q ** (n / 2)


def trace_theta(chi: DirichletCharacter, n: int, spectrum: Optional[FrobeniusSpectrum] = None,
                tol: float = DEFAULT_TOLERANCES["explicit_formula"], check: bool = True,
                budget: float = DEFAULT_MONIC_BUDGET) -> complex:
    """
    tr Θ^n_χ をスペクトルから計算し、明示公式と照合

    Args:
        chi: 原始非自明指標
        n: 冪（0 なら d）
        spectrum: 計算済みスペクトル
        tol: 照合の許容誤差（d 倍して使う）
        check: 明示公式との照合を行うか
    """
    if n < 0:
        raise PreconditionError(f"trace power must be nonnegative, got {n}")
    spec = spectrum or frobenius_spectrum(chi, budget=budget)
    value = spec.trace(n)
    if n == 0 or not check:
        return value
    explicit = explicit_trace(chi, n, budget)
    if abs(value - explicit) > tol * max(1, spec.d):
        logger.error(f"Trace {value} vs explicit {explicit} for character {chi.exps}, n={n}")
        raise VerificationError(f"explicit formula mismatch: |difference| = {abs(value - explicit):.3e}")
    return value


# ---- 指標族の一括計算 ----

def family_monic_sums(G: UnitGroup, n: int, budget: float = DEFAULT_MONIC_BUDGET) -> np.ndarray:
    """全指標について Σ_{N ∈ M_n} χ(N)Λ(N)"""
    F = G.field
    check_budget(f"prime powers of degree {n} over F_{F.q}", F.q ** n, budget)
    hist = weight_histogram(G, von_mangoldt_table(F, n).items())
    return character_sum_table(G, hist)


def family_traces(G: UnitGroup, n: int, flags: Optional[CharacterFlags] = None,
                  budget: float = DEFAULT_MONIC_BUDGET) -> np.ndarray:
    """全指標について明示公式のトレース −q^{-n/2}(Σ χΛ + λ_χ)（原始指標でのみ意味を持つ）"""
    flags = flags or character_flags(G)
    sums = family_monic_sums(G, n, budget)
    return -(sums + flags.even.astype(np.float64)) / G.field.q ** (n / 2)


def family_spectra(G: UnitGroup, flags: Optional[CharacterFlags] = None,
                   tolerances: Optional[Dict[str, float]] = None,
                   budget: float = DEFAULT_MONIC_BUDGET) -> List[FrobeniusSpectrum]:
    """原始非自明指標すべてのスペクトル（L 係数は一括計算）"""
    flags = flags or character_flags(G)
    table = l_polynomials(G, budget)
    spectra = []
    for index in np.flatnonzero(flags.primitive & ~flags.trivial):
        chi = character_at(G, int(index))
        L = LPolynomial(chi, tuple(complex(c) for c in table[index]))
        spectra.append(frobenius_spectrum(chi, L, tolerances, budget))
    return spectra


def nonprimitive_bound_check(G: UnitGroup, n: int, flags: Optional[CharacterFlags] = None,
                             budget: float = DEFAULT_MONIC_BUDGET) -> Dict:
    """
    非原始・非自明指標について |Σ_{M_n} χ(N)Λ(N)| ≤ q^{n/2}(deg Q - 1) を確認

    Returns:
        {count, max_ratio, holds}
    """
    flags = flags or character_flags(G)
    mask = ~flags.primitive & ~flags.trivial
    count = int(mask.sum())
    bound = G.field.q ** (n / 2) * (G.modulus.degree - 1)
    if count == 0:
        return {"count": 0, "max_ratio": 0.0, "holds": True}
    values = np.abs(family_monic_sums(G, n, budget)[mask])
    if bound == 0:
        max_ratio = 0.0 if float(values.max()) < 1e-9 else float("inf")
    else:
        max_ratio = float(values.max() / bound)
    return {"count": count, "max_ratio": max_ratio, "holds": max_ratio <= 1 + 1e-9}
