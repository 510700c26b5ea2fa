#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
TheoremReports - 分散の漸近式との比較レポートと q 走査

deg Q > h の場合の主要項 n q^{h+1} - q^{2(h+1)}/φ(Q)、
deg Q ≤ n の場合の原始偶指標による主要項、
条件付きの予想 V ~ q^{h+1}(n-h-2+deg Q) を、直接計算した V と比べます。
q の列についての走査結果と、T^l·Q を法とする指標のトレース平均の走査結果は
pandas の DataFrame で返します。
"""

import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from dirichlet_characters import character_flags
from errors import PreconditionError, VerificationError
from finite_field import FiniteField, field_for_q
from l_functions import DEFAULT_TOLERANCES, family_traces
from poly_ring import (DEFAULT_MONIC_BUDGET, Poly, count_irreducibles, factor, format_coeffs, format_poly,
                       is_squarefree, random_monic, random_squarefree)
from unit_group import DEFAULT_UNIT_GROUP_BUDGET, build_unit_group
from variance_engine import (VarianceReport, block_moments, fraction_entry, mean_shift_bound, mean_value,
                             phi_or_one, variance_direct_exact, variance_spectral,
                             variance_tilde_direct_exact)

ROUTES = ("direct", "tilde", "spectral")
CONDITIONAL_LABEL = "conditional on the hybrid trace-equidistribution conjecture for moduli T^l*Q"
DEFAULT_ENVELOPE_CONSTANT = 10.0

logger = logging.getLogger(__name__)


def _tolerances(tolerances: Optional[Dict[str, float]]) -> Dict[str, float]:
    return {**DEFAULT_TOLERANCES, "envelope_constant": DEFAULT_ENVELOPE_CONSTANT, **(tolerances or {})}


def spectral_applicable(n: int, Q: Poly) -> bool:
    return Q.constant_term != 0 and 1 <= Q.degree <= n


def variance_report(n: int, h: int, Q: Poly, routes: Sequence[str] = ROUTES, seed: int = 0,
                    tolerances: Optional[Dict[str, float]] = None,
                    budget: float = DEFAULT_MONIC_BUDGET,
                    spectral_budget: float = DEFAULT_UNIT_GROUP_BUDGET,
                    verify_spectrum: bool = False) -> VarianceReport:
    """
    指定した経路で分散を計算し、経路間の一致を確認したレポート

    Args:
        n, h, Q: 分散のパラメータ
        routes: "direct" / "tilde" / "spectral" の部分集合
        seed: 単数群構築の seed
        tolerances: identity などの許容誤差
        verify_spectrum: スペクトル経路で L* の逆根からのトレースも照合する

    Returns:
        VarianceReport
    """
    unknown = set(routes) - set(ROUTES)
    if unknown:
        raise PreconditionError(f"unknown variance routes: {sorted(unknown)}")
    tols = _tolerances(tolerances)
    if "spectral" in routes and not spectral_applicable(n, Q):
        if Q.constant_term == 0:
            raise PreconditionError("involution transfer requires Q(0) ≠ 0")
        raise PreconditionError(f"spectral route needs 1 <= deg Q <= n, got deg Q={Q.degree} and n={n}")
    F = Q.field
    report = VarianceReport(
        q=F.q, n=n, h=h,
        modulus=format_poly(Q),
        factorization=factor(Q).to_dict() if Q.degree >= 1 else {"unit": Q.leading, "factors": []},
        phi=phi_or_one(Q),
        mean_value=mean_value(n, h, Q, budget),
        V_direct=variance_direct_exact(n, h, Q, budget),
        V_tilde_direct=variance_tilde_direct_exact(n, h, Q, budget),
        seed=seed,
    )
    report.details["routes"] = list(routes)
    report.details["mean_shift"] = mean_shift_bound(n, h, Q, tols["envelope_constant"], budget)
    if not report.details["mean_shift"]["holds"]:
        logger.warning(f"Mean shift constant {report.details['mean_shift']['observed_constant']:.3g} "
                       f"exceeds envelope for Q={report.modulus}")

    if "spectral" in routes:
        spectral = variance_spectral(n, h, Q, seed, tols, spectral_budget, budget, verify_spectrum)
        report.V_spectral = spectral.full
        report.census = spectral.census
        report.details["spectral"] = spectral.to_dict()
        Vt = float(report.V_tilde_direct)
        gap = abs(Vt - spectral.full)
        report.details["identity_gap"] = gap
        if gap > tols["identity"] * (1 + abs(spectral.full)):
            logger.error(f"Modified variance {Vt} vs spectral {spectral.full} for Q={report.modulus}")
            raise VerificationError(f"spectral identity mismatch: |V~ - V_spectral| = {gap:.3e}")
    logger.info(f"Variance report q={F.q} n={n} h={h} Q={report.modulus}: V={float(report.V_direct):.6g}")
    return report


# ---- 定理ごとのレポート ----

def _require_nonzero_constant(Q: Poly) -> None:
    if Q.constant_term == 0:
        raise PreconditionError(f"theorem report requires Q(0) != 0, got {format_poly(Q)}")


def theorem_i_main_term(n: int, h: int, q: int, phi: int) -> Fraction:
    """n q^{h+1} - q^{2(h+1)}/φ(Q)"""
    return n * q ** (h + 1) - Fraction(q ** (2 * (h + 1)), phi)


def theorem_i_envelope(n: int, h: int, q: int, deg_q: int, phi: int) -> float:
    """n²q^{h+1}/q^{n/2} + q^{h+1}(deg Q)²/q^n + q^{2(h+1)} deg Q/(φ(Q) q^n)"""
    return (n * n * q ** (h + 1) / q ** (n / 2)
            + q ** (h + 1) * deg_q ** 2 / q ** n
            + q ** (2 * (h + 1)) * deg_q / (phi * q ** n))


def theorem_i_report(n: int, h: int, Q: Poly, seed: int = 0,
                     tolerances: Optional[Dict[str, float]] = None,
                     budget: float = DEFAULT_MONIC_BUDGET) -> VarianceReport:
    """
    deg Q > h の場合の主要項との比較

    区間と剰余類の組ごとに解は高々一つなので、V は Σ Λ と Σ Λ² だけで決まります。
    両者の閉じた式を総当たりと整数で照合し、そこから組み立てた V が直接計算と
    一致することも確認します。
    """
    _require_nonzero_constant(Q)
    if Q.degree <= h:
        raise PreconditionError(f"theorem report needs deg Q > h, got deg Q={Q.degree} and h={h}")
    tols = _tolerances(tolerances)
    report = variance_report(n, h, Q, ("direct", "tilde"), seed, tols, budget)
    q = Q.field.q
    phi = report.phi
    moments = block_moments(n, h, Q, budget=budget)

    prime_degrees = [P.degree for P, _ in factor(Q).factors if n % P.degree == 0]
    lambda_closed = q ** (h + 1) * (q ** n - sum(prime_degrees) - 1)
    lambda_brute = q ** (h + 1) * moments.total
    square_mass = sum(d * d * count_irreducibles(q, d) for d in range(1, n + 1) if n % d == 0)
    square_closed = q ** (h + 1) * (square_mass - sum(d * d for d in prime_degrees) - 1)
    square_brute = q ** (h + 1) * moments.lambda_square
    if lambda_closed != lambda_brute:
        raise VerificationError(f"Lambda sum mismatch: closed {lambda_closed} vs enumerated {lambda_brute}")
    if square_closed != square_brute:
        raise VerificationError(f"Lambda^2 sum mismatch: closed {square_closed} vs enumerated {square_brute}")

    c = Fraction(q ** (h + 1), phi)
    from_sums = (square_closed - 2 * c * lambda_closed + q ** n * phi * c * c) / q ** n
    if from_sums != report.V_direct:
        raise VerificationError(f"variance from Lambda sums {from_sums} differs from direct {report.V_direct}")

    main = theorem_i_main_term(n, h, q, phi)
    residual = report.V_direct - main
    envelope = theorem_i_envelope(n, h, q, Q.degree, phi)
    observed = abs(float(residual)) / envelope
    if observed > tols["envelope_constant"]:
        logger.warning(f"Theorem (i) residual constant {observed:.3g} exceeds {tols['envelope_constant']}")
    report.theorem_main_term = float(main)
    report.theorem_residual = float(residual)
    report.details.update({
        "theorem": "deg Q > h",
        "lambda_sum": {"closed_form": lambda_closed, "enumerated": lambda_brute},
        "lambda_square_sum": {"closed_form": square_closed, "enumerated": square_brute},
        "variance_from_sums": fraction_entry(from_sums),
        "main_term": fraction_entry(main),
        "normalized_residual": float(residual) / q ** (h + 1),
        "envelope": envelope,
        "observed_constant": observed,
        "envelope_holds": observed <= tols["envelope_constant"],
    })
    return report


def theorem_ii_report(n: int, h: int, Q: Poly, seed: int = 0,
                      tolerances: Optional[Dict[str, float]] = None,
                      budget: float = DEFAULT_MONIC_BUDGET,
                      spectral_budget: float = DEFAULT_UNIT_GROUP_BUDGET,
                      verify_spectrum: bool = False) -> VarianceReport:
    """
    1 ≤ deg Q ≤ n の場合の原始偶指標トレースによる主要項との比較

    誤差の目安 q^h (n-h-1+deg Q)² と上界 q^{h+1}(n-h-1+deg Q)² も報告します。
    """
    _require_nonzero_constant(Q)
    if not 1 <= Q.degree <= n:
        raise PreconditionError(f"theorem report needs 1 <= deg Q <= n, got deg Q={Q.degree} and n={n}")
    tols = _tolerances(tolerances)
    report = variance_report(n, h, Q, ROUTES, seed, tols, budget, spectral_budget, verify_spectrum)
    q = Q.field.q
    main = report.details["spectral"]["primitive_even_main"]
    V = float(report.V_direct)
    width = n - h - 1 + Q.degree
    envelope = q ** h * width ** 2
    bound = q ** (h + 1) * width ** 2
    residual = V - main
    observed = abs(residual) / envelope
    if observed > tols["envelope_constant"]:
        logger.warning(f"Theorem (ii) residual constant {observed:.3g} exceeds {tols['envelope_constant']}")
    report.theorem_main_term = main
    report.theorem_residual = residual
    report.details.update({
        "theorem": "1 <= deg Q <= n",
        "envelope": envelope,
        "observed_constant": observed,
        "envelope_holds": observed <= tols["envelope_constant"],
        "bound": bound,
        "bound_ratio": V / bound,
        "normalized_residual": residual / q ** (h + 1),
    })
    return report


def theorem_iii_report(n: int, h: int, Q: Poly, seed: int = 0,
                       tolerances: Optional[Dict[str, float]] = None,
                       budget: float = DEFAULT_MONIC_BUDGET) -> VarianceReport:
    """予測 V ~ q^{h+1}(n-h-2+deg Q) との比較（予想を仮定した条件付きの結果）"""
    _require_nonzero_constant(Q)
    if n < 5 or not 1 <= h <= n - 4:
        raise PreconditionError(f"conditional prediction needs n >= 5 and 1 <= h <= n-4, got n={n}, h={h}")
    if not is_squarefree(Q):
        raise PreconditionError(f"conditional prediction needs square-free Q, got {format_poly(Q)}")
    if not 3 <= Q.degree <= h + 2:
        raise PreconditionError(f"conditional prediction needs 3 <= deg Q <= h+2, got deg Q={Q.degree}")
    tols = _tolerances(tolerances)
    report = variance_report(n, h, Q, ("direct", "tilde"), seed, tols, budget)
    q = Q.field.q
    predicted = q ** (h + 1) * (n - h - 2 + Q.degree)
    V = float(report.V_direct)
    report.theorem_main_term = float(predicted)
    report.theorem_residual = V - predicted
    report.details.update({
        "theorem": "conditional prediction",
        "status": CONDITIONAL_LABEL,
        "ratio": V / predicted,
    })
    if Q.degree == h + 1:
        report.details["overlap"] = {
            "case": "deg Q = h+1",
            "prediction": q ** (h + 1) * (n - 1),
            "theorem_i_main_term": float(theorem_i_main_term(n, h, q, report.phi)),
        }
    elif Q.degree == h + 2:
        report.details["overlap"] = {"case": "deg Q = h+2", "prediction": q ** (h + 1) * n}
    return report


THEOREM_REPORTS: Dict[str, Callable[..., VarianceReport]] = {
    "theorem1": theorem_i_report,
    "theorem2": theorem_ii_report,
    "theorem3": theorem_iii_report,
}


# ---- 走査 ----

def _rng_for(seed: int, q: int) -> random.Random:
    return random.Random(f"{seed}:{q}")


def draw_moduli(F: FiniteField, degree: int, count: int, rng: random.Random,
                squarefree: bool = False, max_tries: int = 1000) -> List[Poly]:
    """Q(0) ≠ 0 の次数 degree のモニック多項式を重複なく最大 count 個"""
    if degree < 1:
        raise PreconditionError(f"modulus degree must be positive, got {degree}")
    found: List[Poly] = []
    for _ in range(max_tries):
        if len(found) == count:
            break
        if squarefree:
            Q = random_squarefree(F, degree, rng, nonzero_constant=True)
        else:
            Q = random_monic(F, degree, rng)
            if Q.constant_term == 0:
                continue
        if Q not in found:
            found.append(Q)
    if not found:
        raise PreconditionError(f"no modulus of degree {degree} with Q(0) != 0 over F_{F.q}")
    return found


def resolve_threads(threads: int = 0) -> int:
    """0 なら環境変数 FFVARIANCE_THREADS、なければ CPU 数"""
    if threads and threads > 0:
        return threads
    env = os.environ.get("FFVARIANCE_THREADS")
    if env and env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1


def _ordered_map(func: Callable, items: Iterable, threads: int) -> List:
    """結果の順序は入力順（スレッド数によらない）"""
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def theorem_scan(kind: str, qs: Sequence[int], n: int, h: int, deg_q: int, moduli_per_field: int = 1,
                 seed: int = 0, tolerances: Optional[Dict[str, float]] = None,
                 budget: float = DEFAULT_MONIC_BUDGET,
                 spectral_budget: float = DEFAULT_UNIT_GROUP_BUDGET, threads: int = 1) -> pd.DataFrame:
    """
    q の列について定理レポートを作り、1 行 1 (q, Q) の表にまとめる

    Args:
        kind: "theorem1" / "theorem2" / "theorem3"
        qs: 体の位数の列
        deg_q: 法の次数
        moduli_per_field: 体ごとの法の個数
    """
    if kind not in THEOREM_REPORTS:
        raise PreconditionError(f"unknown theorem kind: {kind}")
    report_fn = THEOREM_REPORTS[kind]

    def run_field(q: int) -> List[Dict]:
        F = field_for_q(q)
        moduli = draw_moduli(F, deg_q, moduli_per_field, _rng_for(seed, q), squarefree=(kind == "theorem3"))
        rows = []
        for Q in moduli:
            kwargs = {"seed": seed, "tolerances": tolerances, "budget": budget}
            if kind == "theorem2":
                kwargs["spectral_budget"] = spectral_budget
            report = report_fn(n, h, Q, **kwargs)
            main = report.theorem_main_term
            rows.append({
                "kind": kind,
                "q": q,
                "n": n,
                "h": h,
                "Q": format_coeffs(Q),
                "deg_Q": Q.degree,
                "phi": report.phi,
                "V_direct": float(report.V_direct),
                "V_tilde_direct": float(report.V_tilde_direct),
                "V_spectral": report.V_spectral if report.V_spectral is not None else np.nan,
                "main_term": main,
                "residual": report.theorem_residual,
                "normalized_residual": report.theorem_residual / q ** (h + 1),
                "ratio": float(report.V_direct) / main if main else np.nan,
                "observed_constant": report.details.get("observed_constant", np.nan),
            })
        logger.info(f"{kind} scan finished q={q}: {len(rows)} moduli")
        return rows

    rows = [row for chunk in _ordered_map(run_field, qs, threads) for row in chunk]
    return pd.DataFrame(rows)


# ---- トレース平均の走査 ----

def katz_reference(family: str, n: int, l: int = 0, m: int = 0) -> int:
    """行列積分の値 min{n, N}（N は族ごとの次元）"""
    if family == "hybrid":
        return min(n, l + m - 2)
    if family == "even_power":
        return min(n, l - 2)
    if family == "odd_squarefree":
        return min(n, m - 1)
    raise PreconditionError(f"unknown character family: {family}")


def trace_average(modulus: Poly, n: int, parity: str, seed: int = 0,
                  budget: float = DEFAULT_MONIC_BUDGET,
                  spectral_budget: float = DEFAULT_UNIT_GROUP_BUDGET) -> Dict:
    """
    原始かつ指定の偶奇の指標についての |tr Θ^n|² の平均

    Args:
        parity: "even" / "odd"
    """
    G = build_unit_group(modulus, seed, spectral_budget)
    flags = character_flags(G)
    parity_mask = flags.even if parity == "even" else flags.odd
    mask = flags.primitive & parity_mask & ~flags.trivial
    count = int(mask.sum())
    if count == 0:
        return {"characters": 0, "average": float("nan")}
    traces = family_traces(G, n, flags, budget)
    return {"characters": count, "average": float(np.mean(np.abs(traces[mask]) ** 2))}


def conjecture_scan(l: int, m: int, n: int, qs: Sequence[int], moduli_per_field: int = 1, seed: int = 0,
                    budget: float = DEFAULT_MONIC_BUDGET,
                    spectral_budget: float = DEFAULT_UNIT_GROUP_BUDGET, threads: int = 1) -> pd.DataFrame:
    """
    T^l·Q を法とする原始偶指標のトレース平均と min{n, l+m-2} の比較

    比較のため、T^l を法とする原始偶指標（min{n, l-2}）と、平方因子なし Q を法とする
    原始奇指標（min{n, deg Q - 1}）の平均も同じ表に出力します。
    """
    if l < 4 or m < 3:
        raise PreconditionError(f"trace scan needs l >= 4 and m >= 3, got l={l}, m={m}")
    if n < 1:
        raise PreconditionError(f"trace power must be positive, got n={n}")

    def row(family: str, q: int, modulus: Poly, parity: str, reference: int) -> Dict:
        stats = trace_average(modulus, n, parity, seed, budget, spectral_budget)
        return {
            "family": family,
            "q": q,
            "l": l,
            "m": m,
            "n": n,
            "modulus": format_coeffs(modulus),
            "characters": stats["characters"],
            "average": stats["average"],
            "reference": reference,
            "deviation": stats["average"] - reference,
        }

    def run_field(q: int) -> List[Dict]:
        F = field_for_q(q)
        T_l = Poly.monomial(F, l)
        rows = [row("even_power", q, T_l, "even", katz_reference("even_power", n, l=l))]
        for Q in draw_moduli(F, m, moduli_per_field, _rng_for(seed, q), squarefree=True):
            rows.append(row("hybrid", q, T_l * Q, "even", katz_reference("hybrid", n, l=l, m=m)))
            rows.append(row("odd_squarefree", q, Q, "odd", katz_reference("odd_squarefree", n, m=Q.degree)))
        logger.info(f"Trace scan finished q={q}: {len(rows)} rows")
        return rows

    rows = [r for chunk in _ordered_map(run_field, qs, threads) for r in chunk]
    return pd.DataFrame(rows)
