#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
GeneralizedL - 二つの指標を組み合わせた L 級数の探索的計算

F(N) = χ(N)·χ*(N*)（χ* は T^m を法とする指標）は T と互いに素なモニック多項式上で
完全乗法的です。係数列 c_n = Σ_{N ∈ M_n, N(0) ≠ 0} F(N) を列挙で求め、
Euler 積の打ち切り展開と照合し、線形漸化式（有理関数性）を最小二乗で探します。
結果は観察データとして報告するだけで、有理性を主張するものではありません。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from dirichlet_characters import DirichletCharacter, accumulate_phases
from errors import PreconditionError, VerificationError, check_budget
from poly_ring import (DEFAULT_MONIC_BUDGET, Coeffs, Poly, enumerate_monic, format_poly, monic_irreducibles,
                       von_mangoldt_table)

DEFAULT_EULER_TOLERANCE = 1e-6
DEFAULT_RECURRENCE_TOLERANCE = 1e-8

logger = logging.getLogger(__name__)


def _require_power_of_t(chi_star: DirichletCharacter) -> int:
    """χ* の法が T^m であることを確認して m を返す"""
    coeffs = chi_star.modulus.coeffs
    m = len(coeffs) - 1
    if m < 1 or coeffs != (0,) * m + (1,):
        raise PreconditionError(f"second character must have modulus T^m, got {format_poly(chi_star.modulus)}")
    return m


def _check_same_field(chi: DirichletCharacter, chi_star: DirichletCharacter) -> None:
    if chi.group.field != chi_star.group.field:
        raise PreconditionError("characters are defined over different fields")


class HybridWeight:
    """F(N) = χ(N)χ*(N*) を共通周期 L の位相番号で評価する"""

    def __init__(self, chi: DirichletCharacter, chi_star: DirichletCharacter):
        _check_same_field(chi, chi_star)
        _require_power_of_t(chi_star)
        self.chi = chi
        self.chi_star = chi_star
        self.period = math.lcm(chi.period, chi_star.period)

    def phase_index(self, coeffs: Coeffs) -> Optional[int]:
        """N(0) = 0 または N が Q₁ と互いに素でなければ None"""
        if not coeffs or coeffs[0] == 0:
            return None
        j1 = self.chi.phase_index(coeffs)
        if j1 is None:
            return None
        j2 = self.chi_star.phase_index(tuple(reversed(coeffs)))
        if j2 is None:
            return None
        L = self.period
        return (j1 * (L // self.chi.period) + j2 * (L // self.chi_star.period)) % L

    def __call__(self, N: Poly) -> complex:
        j = self.phase_index(N.coeffs)
        if j is None:
            return complex(0, 0)
        return complex(np.exp(2j * np.pi * j / self.period))

    def moment(self, items) -> complex:
        counts = np.zeros(self.period, dtype=np.float64)
        for coeffs, w in items:
            j = self.phase_index(coeffs)
            if j is not None:
                counts[j] += w
        return accumulate_phases(self.period, counts)


@dataclass
class GenLSeries:
    """
    一般化 L 級数の係数列（u = q^{-s} の冪）

    Attributes:
        chi: 法 Q₁ の指標
        chi_star: 法 T^m の指標
        coeffs: c_0..c_nmax
        nmax: 最大次数
    """

    chi: DirichletCharacter
    chi_star: DirichletCharacter
    coeffs: Tuple[complex, ...]
    nmax: int

    @property
    def q(self) -> int:
        return self.chi.group.field.q

    def to_dict(self) -> Dict:
        return {
            "Q1": format_poly(self.chi.modulus),
            "chi": list(self.chi.exps),
            "m": self.chi_star.modulus.degree,
            "chi_star": list(self.chi_star.exps),
            "nmax": self.nmax,
            "coeffs": [[c.real, c.imag] for c in self.coeffs],
        }


def genl_coefficients(chi: DirichletCharacter, chi_star: DirichletCharacter, nmax: int,
                      budget: float = DEFAULT_MONIC_BUDGET) -> GenLSeries:
    """
    c_n = Σ_{N ∈ M_n, N(0) ≠ 0} χ(N)χ*(N*) を n = 0..nmax について列挙で計算

    Args:
        chi: 任意の法 Q₁ の指標
        chi_star: 法 T^m の指標
        nmax: 最大次数
        budget: 総列挙件数の上限
    """
    if nmax < 0:
        raise PreconditionError(f"nmax must be nonnegative, got {nmax}")
    weight = HybridWeight(chi, chi_star)
    F = chi.group.field
    check_budget(f"generalized L coefficients up to degree {nmax} over F_{F.q}",
                 sum(F.q ** k for k in range(nmax + 1)), budget)
    coeffs = []
    for n in range(nmax + 1):
        c = weight.moment((N.coeffs, 1.0) for N in enumerate_monic(F, n, budget))
        if abs(c) > F.q ** n + 1e-9:
            raise VerificationError(f"coefficient {n} exceeds the trivial bound q^n: {abs(c)}")
        coeffs.append(c)
    logger.debug(f"Generalized L series for chi={chi.exps}, chi*={chi_star.exps}: {nmax + 1} coefficients")
    return GenLSeries(chi, chi_star, tuple(coeffs), nmax)


def hybrid_psi(chi: DirichletCharacter, chi_star: DirichletCharacter, n: int,
               budget: float = DEFAULT_MONIC_BUDGET) -> complex:
    """Σ_{N ∈ M_n, N(0) ≠ 0} χ(N)χ*(N*)Λ(N)"""
    if n < 1:
        raise PreconditionError(f"degree must be positive, got n={n}")
    weight = HybridWeight(chi, chi_star)
    F = chi.group.field
    check_budget(f"prime powers of degree {n} over F_{F.q}", F.q ** n, budget)
    return weight.moment((coeffs, float(lam)) for coeffs, lam in von_mangoldt_table(F, n, budget).items())


def euler_product_check(series: GenLSeries, degree_cut: int,
                        tol: float = DEFAULT_EULER_TOLERANCE) -> float:
    """
    Π_{P ≠ T, deg P ≤ degree_cut} (1 - F(P)u^{deg P})^{-1} を degree_cut 次まで展開して係数と比較

    Returns:
        係数の最大偏差
    """
    if not 0 <= degree_cut <= series.nmax:
        raise PreconditionError(f"degree cut must lie in [0, {series.nmax}], got {degree_cut}")
    weight = HybridWeight(series.chi, series.chi_star)
    F = series.chi.group.field
    product = np.zeros(degree_cut + 1, dtype=np.complex128)
    product[0] = 1
    for d in range(1, degree_cut + 1):
        for P in monic_irreducibles(F, d):
            value = weight(P)
            if value == 0:
                continue
            factor = np.zeros(degree_cut + 1, dtype=np.complex128)
            for k in range(degree_cut // d + 1):
                factor[k * d] = value ** k
            product = np.convolve(product, factor)[:degree_cut + 1]
    expected = np.asarray(series.coeffs[:degree_cut + 1], dtype=np.complex128)
    deviation = float(np.max(np.abs(product - expected)))
    if deviation > tol * max(1.0, float(np.max(np.abs(expected)))):
        logger.error(f"Euler product {product} vs series {expected}")
        raise VerificationError(f"Euler product mismatch: max deviation {deviation:.3e}")
    return deviation


# ---- 漸化式の検出 ----

@dataclass
class RecurrenceFit:
    """
    c_n = Σ_{j=1}^{order} a_j c_{n-j}（n ≥ start）の当てはめ結果

    order = 0 は c_n = 0（n ≥ start）、すなわち級数が多項式であることを表します。
    分母 D(u) = 1 - Σ a_j u^j、分子は D·Σ c_n u^n の start 未満の部分です。
    """

    found: bool
    order: int = 0
    start: int = 0
    coefficients: Tuple[complex, ...] = ()
    numerator: Tuple[complex, ...] = ()
    residual: float = float("nan")
    zeros: Tuple[complex, ...] = ()
    singular_values: Tuple[float, ...] = ()
    tolerance: float = DEFAULT_RECURRENCE_TOLERANCE
    q: int = 0
    message: str = ""
    attempts: List[Dict] = field(default_factory=list)

    def zero_table(self) -> List[Dict]:
        sqrt_q = math.sqrt(self.q) if self.q else float("nan")
        return [
            {
                "re": z.real,
                "im": z.imag,
                "abs": abs(z),
                "abs_times_sqrt_q": abs(z) * sqrt_q,
                "abs_times_q": abs(z) * self.q,
            }
            for z in self.zeros
        ]

    def to_dict(self) -> Dict:
        zeros = self.zero_table()
        return {
            "found": self.found,
            "message": self.message,
            "order": self.order,
            "start": self.start,
            "coefficients": [[a.real, a.imag] for a in self.coefficients],
            "numerator": [[b.real, b.imag] for b in self.numerator],
            "residual": self.residual,
            "tolerance": self.tolerance,
            "singular_values": list(self.singular_values),
            "zeros": zeros,
            "zeros_on_half_circle": sum(1 for z in zeros if abs(z["abs_times_sqrt_q"] - 1) < 1e-6),
            "zeros_on_unit_q_circle": sum(1 for z in zeros if abs(z["abs_times_q"] - 1) < 1e-6),
        }


def _fit(c: np.ndarray, r: int, s: int, tol: float) -> Tuple[np.ndarray, float, np.ndarray]:
    """行 n = s..nmax の Hankel 系を最小二乗で解く"""
    y = c[s:]
    scale = max(float(np.linalg.norm(c)), 1e-300)
    if r == 0:
        return np.zeros(0, dtype=np.complex128), float(np.linalg.norm(y)) / scale, np.zeros(0)
    H = np.array([[c[n - j] for j in range(1, r + 1)] for n in range(s, len(c))], dtype=np.complex128)
    a, _, _, sv = np.linalg.lstsq(H, y, rcond=tol)
    residual = float(np.linalg.norm(H @ a - y)) / scale
    return a, residual, sv


def detect_recurrence(series: GenLSeries, max_order: int,
                      tol: float = DEFAULT_RECURRENCE_TOLERANCE) -> RecurrenceFit:
    """
    次数最小の線形漸化式を探す（次に開始位置最小）

    Args:
        series: 係数列（nmax ≥ 2·max_order + 4）
        max_order: 漸化式の最大次数
        tol: 相対残差と特異値の閾値

    Returns:
        RecurrenceFit（見つからなければ found = False）
    """
    if max_order < 0:
        raise PreconditionError(f"max_order must be nonnegative, got {max_order}")
    if series.nmax < 2 * max_order + 4:
        raise PreconditionError(
            f"insufficient coefficients: nmax={series.nmax} < 2*max_order+4={2 * max_order + 4}")
    c = np.asarray(series.coeffs, dtype=np.complex128)
    nmax = series.nmax
    attempts = []
    for r in range(max_order + 1):
        last_start = min(r + max_order, nmax - 2 * r - 1)
        for s in range(r, last_start + 1):
            a, residual, sv = _fit(c, r, s, tol)
            attempts.append({"order": r, "start": s, "residual": residual})
            if residual >= tol:
                continue
            denominator = np.concatenate(([1.0], -a))
            numerator = np.convolve(denominator, c[:s])[:s] if s else np.zeros(0, dtype=np.complex128)
            zeros = np.roots(denominator[::-1]) if r else np.zeros(0, dtype=np.complex128)
            logger.info(f"Recurrence of order {r} from index {s} found (residual {residual:.3e})")
            return RecurrenceFit(
                found=True, order=r, start=s,
                coefficients=tuple(complex(x) for x in a),
                numerator=tuple(complex(x) for x in numerator),
                residual=residual,
                zeros=tuple(complex(z) for z in zeros),
                singular_values=tuple(float(x) for x in sv),
                tolerance=tol, q=series.q,
                message=f"recurrence of order {r} valid from index {s}",
                attempts=attempts,
            )
    logger.info(f"No recurrence up to order {max_order} for chi={series.chi.exps}, chi*={series.chi_star.exps}")
    return RecurrenceFit(found=False, tolerance=tol, q=series.q,
                         message=f"no recurrence up to max_order {max_order}", attempts=attempts)
