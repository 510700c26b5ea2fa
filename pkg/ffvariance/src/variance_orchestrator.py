#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Variance Orchestrator - 分散実験のバッチ実行ドライバー

体・多項式の指定を解釈し、サブコマンドごとに各モジュールを呼び出して、
再現可能な JSON / CSV レポート（seed・設定・バージョン付き）を出力します。
ログは stderr とログファイルにのみ出力し、レポートには含めません。
"""

import argparse
import io
import json
import logging
import math
import os
import random
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

# ローカルモジュールのインポート
from dirichlet_characters import character_at, character_census, character_flags
from errors import BudgetExceededError, FFVarianceError, PreconditionError, VerificationError
from finite_field import FiniteField, field_for_q, parse_field_spec
from generalized_l import detect_recurrence, euler_product_check, genl_coefficients, hybrid_psi
from l_functions import (completed_l, frobenius_spectrum, l_polynomial, nonprimitive_bound_check,
                         trace_theta)
from poly_ring import Poly, involution, parse_poly, psi_total, random_monic, random_poly
from theorem_reports import (THEOREM_REPORTS, conjecture_scan, theorem_i_report, theorem_scan,
                             variance_report)
from unit_group import build_unit_group
from variance_engine import dual_transfer, fraction_entry, psi_hybrid

__version__ = "1.0.0"

TOOL_NAME = "ffvariance"
SUBCOMMANDS = ("characters", "lfunc", "variance", "theorem1", "theorem2", "theorem3",
               "conjecture", "genl", "selftest")
SCAN_SUBCOMMANDS = ("theorem1", "theorem2", "theorem3", "conjecture")
CHARACTER_LIST_LIMIT = 1000

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_PRECONDITION = 2
EXIT_BUDGET = 3
EXIT_UNKNOWN_SUBCOMMAND = 64


@dataclass
class ExperimentConfig:
    """
    1 回の実験の設定（レポートにそのまま埋め込まれる）

    Attributes:
        subcommand: サブコマンド名
        field_spec: 体の指定（"p=3" / "p=2,r=2"）
        polys: 多項式引数（"Q", "Q1" など -> "c0,c1,..." 形式）
        params: 整数パラメータ（n, h, l, m, nmax, max_order, ...）
        qs: 走査する体の位数
        routes: 分散の計算経路
        seed: 乱数 seed
        output: 出力先（"-" は標準出力）
        format: "json" / "csv"
        verify_spectrum: スペクトル経路で逆根からのトレースも照合するか
    """

    subcommand: str
    field_spec: Optional[str] = None
    polys: Dict[str, str] = field(default_factory=dict)
    params: Dict[str, int] = field(default_factory=dict)
    qs: List[int] = field(default_factory=list)
    routes: List[str] = field(default_factory=list)
    seed: int = 0
    output: Optional[str] = None
    format: Optional[str] = None
    verify_spectrum: bool = False

    def resolved_format(self) -> str:
        if self.format:
            return self.format
        return "csv" if self.subcommand in SCAN_SUBCOMMANDS and "Q" not in self.polys else "json"

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["format"] = self.resolved_format()
        data.pop("output")
        return data


def to_jsonable(obj: Any) -> Any:
    """レポート用に numpy 型・分数・複素数・NaN を JSON で表せる形へ"""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return fraction_entry(obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dump_json(data: Dict) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class VarianceOrchestrator:
    """分散実験全体のオーケストレーター"""

    def __init__(self, config_file: Optional[str] = None, **kwargs):
        """
        VarianceOrchestratorの初期化

        Args:
            config_file: 設定ファイルパス（JSON）
            **kwargs: セクションごとの設定上書き（例: budgets={"enumeration": 1e6}）
        """
        self.config = self._load_config(config_file, **kwargs)
        self.logger = self._setup_logging()
        self.results = {
            "execution_summary": {
                "subcommand": None,
                "duration_seconds": None,
                "status": "not_started",
            },
            "report": None,
            "checks": [],
            "error_log": [],
            "warnings": [],
        }

    def _load_config(self, config_file: Optional[str], **kwargs) -> Dict:
        """設定ファイルの読み込みとデフォルト値の設定"""
        default_config = {
            "output": {
                "base_dir": "data/reports",
                "format": None,
            },
            "budgets": {
                "enumeration": 1e8,
                "unit_group": 1e6,
                "spectral_group": 1e6,
                "monic_stream": 1e8,
            },
            "tolerances": {
                "identity": 1e-6,
                "rh": 1e-6,
                "rh_fatal": 1e-4,
                "explicit_formula": 1e-6,
                "euler_product": 1e-6,
                "envelope_constant": 10.0,
            },
            "logging": {
                "level": "INFO",
                "file": "logs/ffvariance.log",
                "console": True,
            },
            "seed": 0,
            "threads": 0,
        }

        # 設定ファイルから読み込み
        if config_file:
            path = Path(config_file)
            if not path.exists():
                raise PreconditionError(f"config file not found: {config_file}")
            try:
                with open(path, "r", encoding="utf-8") as f:
                    file_config = json.load(f)
            except json.JSONDecodeError as e:
                raise PreconditionError(f"config file {config_file} is not valid JSON: {e}")
            self._merge(default_config, file_config)

        env_threads = os.environ.get("FFVARIANCE_THREADS")
        if env_threads and env_threads.isdigit():
            default_config["threads"] = int(env_threads)

        # コマンドライン引数で上書き
        self._merge(default_config, kwargs)
        return default_config

    @staticmethod
    def _merge(base: Dict, overrides: Dict) -> None:
        for key, value in overrides.items():
            if isinstance(value, dict) and isinstance(base.get(key), dict):
                base[key].update(value)
            elif key in base:
                base[key] = value

    def _setup_logging(self) -> logging.Logger:
        """ログ設定（ハンドラーはルートロガーに付け、ライブラリのログも集める）"""
        root = logging.getLogger()
        for handler in list(root.handlers):
            if getattr(handler, "_ffvariance", False):
                root.removeHandler(handler)
                handler.close()
        root.setLevel(getattr(logging, self.config["logging"]["level"]))

        # フォーマッター
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

        # ファイルハンドラー
        if self.config["logging"]["file"]:
            log_file = Path(self.config["logging"]["file"])
            log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_file, encoding="utf-8")
            file_handler.setFormatter(formatter)
            file_handler._ffvariance = True
            root.addHandler(file_handler)

        # コンソールハンドラー（stderr）
        if self.config["logging"]["console"]:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(formatter)
            console_handler._ffvariance = True
            root.addHandler(console_handler)

        return logging.getLogger(__name__)

    # ---- 入力の解釈 ----

    def _field(self, config: ExperimentConfig) -> FiniteField:
        if not config.field_spec:
            raise PreconditionError("a field is required (--q or --field)")
        return parse_field_spec(config.field_spec)

    def _poly(self, F: FiniteField, config: ExperimentConfig, name: str) -> Poly:
        text = config.polys.get(name)
        if text is None:
            raise PreconditionError(f"polynomial argument --{name} is required")
        return parse_poly(F, text)

    def _param(self, config: ExperimentConfig, name: str, default: Optional[int] = None) -> int:
        value = config.params.get(name, default)
        if value is None:
            raise PreconditionError(f"integer argument --{name.replace('_', '-')} is required")
        return int(value)

    @property
    def _budgets(self) -> Dict[str, float]:
        return self.config["budgets"]

    @property
    def _tolerances(self) -> Dict[str, float]:
        return self.config["tolerances"]

    # ---- サブコマンド ----

    def run(self, config: ExperimentConfig) -> Dict:
        """
        サブコマンドを実行して結果（レポート本体）を返す

        Args:
            config: 実験設定

        Returns:
            レポート（JSON 用の辞書、または走査表の DataFrame を含む辞書）
        """
        handlers: Dict[str, Callable[[ExperimentConfig], Any]] = {
            "characters": self._run_characters,
            "lfunc": self._run_lfunc,
            "variance": self._run_variance,
            "theorem1": self._run_theorem,
            "theorem2": self._run_theorem,
            "theorem3": self._run_theorem,
            "conjecture": self._run_conjecture,
            "genl": self._run_genl,
            "selftest": self._run_selftest,
        }
        if config.subcommand not in handlers:
            raise PreconditionError(f"unknown subcommand: {config.subcommand}")
        if config.subcommand not in SCAN_SUBCOMMANDS and config.resolved_format() == "csv":
            raise PreconditionError("csv format is available for scan tables only")

        start = time.perf_counter()
        self.results["execution_summary"].update({"subcommand": config.subcommand, "status": "running"})
        self.logger.info(f"Starting {config.subcommand} (seed={config.seed})")
        try:
            body = handlers[config.subcommand](config)
        except FFVarianceError as e:
            self.logger.error(f"{config.subcommand} failed: {e}")
            self.results["execution_summary"]["status"] = "failed"
            self.results["error_log"].append(str(e))
            raise
        finally:
            self.results["execution_summary"]["duration_seconds"] = round(time.perf_counter() - start, 3)

        self.results["execution_summary"]["status"] = "completed"
        self.results["report"] = body
        self.logger.info(f"{config.subcommand} completed")
        return body

    def _run_characters(self, config: ExperimentConfig) -> Dict:
        F = self._field(config)
        Q = self._poly(F, config, "Q")
        G = build_unit_group(Q, config.seed, self._budgets["unit_group"])
        flags = character_flags(G)
        census = character_census(G, flags)
        body = {"group": G.to_dict(), "census": census.to_dict()}
        if G.order <= CHARACTER_LIST_LIMIT:
            body["characters"] = [
                {
                    "index": index,
                    "exps": list(character_at(G, index).exps),
                    "trivial": bool(flags.trivial[index]),
                    "even": bool(flags.even[index]),
                    "primitive": bool(flags.primitive[index]),
                }
                for index in range(G.order)
            ]
        else:
            self.results["warnings"].append(f"character list omitted: phi(Q)={G.order} > {CHARACTER_LIST_LIMIT}")
        return body

    def _run_lfunc(self, config: ExperimentConfig) -> Dict:
        F = self._field(config)
        Q = self._poly(F, config, "Q")
        n_max = self._param(config, "n_max", 4)
        budget = self._budgets["monic_stream"]
        G = build_unit_group(Q, config.seed, self._budgets["unit_group"])
        flags = character_flags(G)
        if "chi_index" in config.params:
            indices = [self._param(config, "chi_index")]
            if not 0 <= indices[0] < G.order:
                raise PreconditionError(f"character index out of range: {indices[0]} not in [0, {G.order})")
        else:
            indices = [int(i) for i in np.flatnonzero(flags.primitive & ~flags.trivial)][:CHARACTER_LIST_LIMIT]

        entries = []
        for index in indices:
            chi = character_at(G, index)
            L = l_polynomial(chi, budget, self._tolerances["identity"])
            entry = {"index": index, "character": chi.to_dict(), "l_polynomial": L.to_dict()}
            if chi.is_primitive:
                completed = completed_l(L, self._tolerances["identity"])
                spectrum = frobenius_spectrum(chi, L, self._tolerances, budget)
                entry["completed"] = completed.to_dict()
                entry["spectrum"] = spectrum.to_dict()
                entry["traces"] = {
                    str(n): trace_theta(chi, n, spectrum, self._tolerances["explicit_formula"], True, budget)
                    for n in range(1, n_max + 1)
                }
            entries.append(entry)
        bounds = {str(n): nonprimitive_bound_check(G, n, flags, budget) for n in range(1, n_max + 1)}
        return {"group": G.to_dict(), "characters": entries, "nonprimitive_bounds": bounds}

    def _run_variance(self, config: ExperimentConfig) -> Dict:
        F = self._field(config)
        Q = self._poly(F, config, "Q")
        n = self._param(config, "n")
        h = self._param(config, "h")
        routes = config.routes or ["direct", "tilde", "spectral"]
        report = variance_report(n, h, Q, routes, config.seed, self._tolerances,
                                 self._budgets["enumeration"], self._budgets["spectral_group"],
                                 config.verify_spectrum)
        return report.to_dict()

    def _run_theorem(self, config: ExperimentConfig):
        n = self._param(config, "n")
        h = self._param(config, "h")
        kind = config.subcommand
        if "Q" in config.polys:
            F = self._field(config)
            Q = self._poly(F, config, "Q")
            kwargs = {"seed": config.seed, "tolerances": self._tolerances, "budget": self._budgets["enumeration"]}
            if kind == "theorem2":
                kwargs["spectral_budget"] = self._budgets["spectral_group"]
            return THEOREM_REPORTS[kind](n, h, Q, **kwargs).to_dict()
        if not config.qs:
            raise PreconditionError("a q-scan (--qs) or a single modulus (--Q) is required")
        return theorem_scan(kind, config.qs, n, h, self._param(config, "deg_q"),
                            self._param(config, "moduli_per_field", 1), config.seed, self._tolerances,
                            self._budgets["enumeration"], self._budgets["spectral_group"],
                            self.config["threads"])

    def _run_conjecture(self, config: ExperimentConfig) -> pd.DataFrame:
        if not config.qs:
            raise PreconditionError("a q-scan (--qs) is required")
        return conjecture_scan(self._param(config, "l"), self._param(config, "m"), self._param(config, "n"),
                               config.qs, self._param(config, "moduli_per_field", 1), config.seed,
                               self._budgets["enumeration"], self._budgets["spectral_group"],
                               self.config["threads"])

    def _run_genl(self, config: ExperimentConfig) -> Dict:
        F = self._field(config)
        Q1 = self._poly(F, config, "Q1")
        m = self._param(config, "m")
        nmax = self._param(config, "nmax")
        max_order = self._param(config, "max_order", 4)
        budget = self._budgets["monic_stream"]
        G1 = build_unit_group(Q1, config.seed, self._budgets["unit_group"])
        G2 = build_unit_group(Poly.monomial(F, m), config.seed, self._budgets["unit_group"])
        chi_index = self._param(config, "chi_index", 0)
        star_index = self._param(config, "chistar_index", 0)
        for name, index, G in (("chi-index", chi_index, G1), ("chistar-index", star_index, G2)):
            if not 0 <= index < G.order:
                raise PreconditionError(f"{name} out of range: {index} not in [0, {G.order})")
        chi = character_at(G1, chi_index)
        chi_star = character_at(G2, star_index)
        series = genl_coefficients(chi, chi_star, nmax, budget)
        cut = self._param(config, "degree_cut", min(6, nmax))
        deviation = euler_product_check(series, cut, self._tolerances["euler_product"])
        fit = detect_recurrence(series, max_order)
        return {
            "series": series.to_dict(),
            "euler_product": {"degree_cut": cut, "max_deviation": deviation},
            "hybrid_psi": {str(n): hybrid_psi(chi, chi_star, n, budget) for n in range(1, nmax + 1)},
            "fit": fit.to_dict(),
        }

    # ---- 自己診断 ----

    def _check(self, name: str, func: Callable[[], bool]) -> bool:
        """個別チェックの実行（✓/✗ をログに出す）"""
        self.logger.info(f"Testing {name}")
        try:
            passed = bool(func())
            message = ""
        except FFVarianceError as e:
            passed, message = False, str(e)
        if passed:
            self.logger.info(f"✓ {name} passed")
        else:
            self.logger.error(f"✗ {name} failed{': ' + message if message else ''}")
        self.results["checks"].append({"name": name, "passed": passed, "message": message})
        return passed

    def _run_selftest(self, config: ExperimentConfig) -> Dict:
        rng = random.Random(config.seed)
        F3 = field_for_q(3)
        T = Poly.T(F3)

        def prime_number_theorem() -> bool:
            return all(psi_total(field_for_q(q), n) == q ** n for q in (2, 3, 4, 5) for n in range(1, 6))

        def involution_laws() -> bool:
            for _ in range(100):
                X = random_poly(F3, rng.randrange(1, 5), rng)
                Y = random_poly(F3, rng.randrange(1, 5), rng)
                if involution(X * Y) != involution(X) * involution(Y):
                    return False
                if X.constant_term != 0 and involution(involution(X)) != X:
                    return False
            return True

        def golden_variance() -> bool:
            report = variance_report(2, 0, T + 1, seed=config.seed)
            return (report.mean_value == Fraction(7, 6) and report.V_direct == Fraction(11, 6)
                    and report.V_tilde_direct == Fraction(29, 18)
                    and abs(report.V_spectral - 29 / 18) < 1e-9)

        def explicit_formula() -> bool:
            Q = T ** 3 + 2 * T + 1
            G = build_unit_group(Q, config.seed)
            flags = character_flags(G)
            for index in np.flatnonzero(flags.primitive & ~flags.trivial):
                chi = character_at(G, int(index))
                spectrum = frobenius_spectrum(chi)
                for n in range(1, 5):
                    trace_theta(chi, n, spectrum)
            return True

        def theorem_i_sums() -> bool:
            theorem_i_report(3, 0, T ** 2 + 1, seed=config.seed)
            return True

        def dual_transfer_matches() -> bool:
            for _ in range(20):
                h = rng.randrange(0, 2)
                B = random_poly(F3, rng.randrange(1, 3), rng)
                n = h + 1 + B.degree
                Q = random_monic(F3, rng.randrange(1, n + 1), rng)
                if Q.constant_term == 0:
                    Q = Q + 1
                    if Q.constant_term == 0:
                        continue
                A = next(iter(build_unit_group(Q, config.seed).units()))
                C = Poly.monomial(F3, h + 1) * B
                if dual_transfer(B, h, Q, A) != psi_hybrid(C, h, Q, A):
                    return False
            return True

        def census() -> bool:
            return character_census(build_unit_group(T ** 2 * (T + 1), config.seed)).primitive_even == 2

        def euler_product() -> bool:
            G1 = build_unit_group(T ** 2 + 1, config.seed)
            G2 = build_unit_group(T ** 3, config.seed)
            series = genl_coefficients(character_at(G1, 1), character_at(G2, 1), 6)
            euler_product_check(series, 6)
            return True

        def trivial_recurrence() -> bool:
            G1 = build_unit_group(T + 1, config.seed)
            G2 = build_unit_group(T, config.seed)
            fit = detect_recurrence(genl_coefficients(character_at(G1, 0), character_at(G2, 0), 10), 2)
            return fit.found and fit.order == 1 and abs(fit.coefficients[0] - 3) < 1e-6

        checks = [
            ("prime number theorem", prime_number_theorem),
            ("involution laws", involution_laws),
            ("golden variance", golden_variance),
            ("explicit formula", explicit_formula),
            ("Lambda sum identities", theorem_i_sums),
            ("dual transfer", dual_transfer_matches),
            ("character census", census),
            ("Euler product", euler_product),
            ("recurrence detection", trivial_recurrence),
        ]
        passed = [self._check(name, func) for name, func in checks]
        if not all(passed):
            raise VerificationError(f"selftest failed: {passed.count(False)} of {len(passed)} checks")
        return {"checks": self.results["checks"], "passed": sum(passed), "total": len(passed)}

    # ---- 出力 ----

    def render(self, config: ExperimentConfig, body: Any) -> str:
        """レポート本体を出力テキストへ（タイムスタンプなし、同一設定なら同一バイト列）"""
        provenance = {
            "tool": TOOL_NAME,
            "version": __version__,
            "config": config.to_dict(),
            "seed": config.seed,
            "settings": {"budgets": self._budgets, "tolerances": self._tolerances},
        }
        fmt = config.resolved_format()
        if isinstance(body, pd.DataFrame):
            if fmt == "csv":
                buffer = io.StringIO()
                buffer.write(f"# {json.dumps(to_jsonable(provenance), sort_keys=True, ensure_ascii=False)}\n")
                body.to_csv(buffer, index=False, float_format="%.12g", lineterminator="\n")
                return buffer.getvalue()
            body = {"rows": body.to_dict(orient="records")}
        return dump_json({**provenance, "result": body})

    def _default_filename(self, config: ExperimentConfig) -> str:
        """サブコマンドとパラメータから決まるファイル名"""
        parts = [config.subcommand]
        if config.field_spec:
            parts.append(config.field_spec.replace("=", "").replace(",", ""))
        parts += [f"{k}{v}" for k, v in sorted(config.params.items())]
        parts += [f"{k}-{v.replace(',', '-').replace('.', '_')}" for k, v in sorted(config.polys.items())]
        if config.qs:
            parts.append("qs" + "-".join(str(q) for q in config.qs))
        parts.append(f"seed{config.seed}")
        return "_".join(parts) + f".{config.resolved_format()}"

    def save_results(self, config: ExperimentConfig, text: str) -> str:
        """レポートを保存（出力先 "-" は標準出力）"""
        if config.output == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
            return "-"
        if config.output:
            output_path = Path(config.output)
        else:
            output_path = Path(self.config["output"]["base_dir"]) / self._default_filename(config)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        self.logger.info(f"Results saved to: {output_path}")
        return str(output_path)

    def display_summary(self):
        """結果サマリーの表示（stderr）"""
        summary = self.results["execution_summary"]
        out = sys.stderr
        print("\n" + "=" * 50, file=out)
        print("ffvariance Results", file=out)
        print("=" * 50, file=out)
        print(f"Subcommand: {summary['subcommand']}", file=out)
        print(f"Status: {summary['status']}", file=out)
        print(f"Duration: {summary.get('duration_seconds', 'N/A')} s", file=out)

        report = self.results.get("report")
        if isinstance(report, pd.DataFrame):
            print(f"\nRows: {len(report)}", file=out)
        elif isinstance(report, dict):
            for key in ("mean_value", "V_direct", "V_tilde_direct"):
                if key in report:
                    print(f"{key}: {report[key]['value']:.12g} ({report[key]['exact']})", file=out)
            for key in ("V_spectral", "theorem_main_term", "theorem_residual"):
                if report.get(key) is not None:
                    print(f"{key}: {report[key]:.12g}", file=out)
        for check in self.results["checks"]:
            print(f"{'✓' if check['passed'] else '✗'} {check['name']}", file=out)

        if self.results["warnings"]:
            print(f"\nWarnings: {len(self.results['warnings'])}", file=out)
            for warning in self.results["warnings"][:5]:
                print(f"  - {warning}", file=out)
        if self.results["error_log"]:
            print(f"\nErrors: {len(self.results['error_log'])}", file=out)
            for error in self.results["error_log"][:5]:
                print(f"  - {error}", file=out)


# ---- コマンドライン ----

def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    """引数パーサー（サブコマンドごとの引数を含む）"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Configuration file path (JSON)")
    common.add_argument("--output", "-o", help="Output file path ('-' for stdout)")
    common.add_argument("--format", choices=["json", "csv"], help="Report format")
    common.add_argument("--seed", type=int, help="Random seed (default from config, 0)")
    common.add_argument("--threads", type=int, help="Worker threads for scans (0 = auto)")
    common.add_argument("--verbose", "-v", action="store_true", help="Verbose output")
    common.add_argument("--quiet", action="store_true", help="Suppress the console summary")

    field_args = argparse.ArgumentParser(add_help=False)
    field_args.add_argument("--q", type=int, help="Field size (prime power)")
    field_args.add_argument("--field", help="Field spec such as p=2,r=2")

    parser = argparse.ArgumentParser(prog="ffvariance",
                                     description="Variance of primes in progressions and short intervals over F_q[T]")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("characters", parents=[common, field_args], help="Unit group and character census")
    p.add_argument("--Q", required=True, help="Modulus (c0,c1,... or T^2+1)")

    p = sub.add_parser("lfunc", parents=[common, field_args], help="L-polynomials and Frobenius spectra")
    p.add_argument("--Q", required=True)
    p.add_argument("--chi-index", type=int)
    p.add_argument("--n-max", type=int, default=4)

    p = sub.add_parser("variance", parents=[common, field_args], help="Variance by the selected routes")
    p.add_argument("--Q", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--routes", default="direct,tilde,spectral")
    p.add_argument("--verify-spectrum", action="store_true")

    for name in ("theorem1", "theorem2", "theorem3"):
        p = sub.add_parser(name, parents=[common, field_args], help=f"{name} report or q-scan")
        p.add_argument("--Q", help="Single modulus (JSON report); omit for a q-scan")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--h", type=int, required=True)
        p.add_argument("--qs", type=_int_list)
        p.add_argument("--deg-q", type=int)
        p.add_argument("--moduli-per-field", type=int, default=1)

    p = sub.add_parser("conjecture", parents=[common], help="Trace averages for T^l*Q and baselines")
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--qs", type=_int_list, required=True)
    p.add_argument("--moduli-per-field", type=int, default=1)

    p = sub.add_parser("genl", parents=[common, field_args], help="Generalized L series and recurrence fit")
    p.add_argument("--Q1", required=True)
    p.add_argument("--chi-index", type=int, default=0)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--chistar-index", type=int, default=0)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--max-order", type=int, default=4)
    p.add_argument("--degree-cut", type=int)

    sub.add_parser("selftest", parents=[common], help="Run the invariant checks at desk scale")
    return parser


INT_PARAMS = ("n", "h", "l", "m", "nmax", "max_order", "deg_q", "chi_index", "chistar_index",
              "moduli_per_field", "degree_cut", "n_max")


def config_from_args(args: argparse.Namespace, seed_default: int = 0) -> ExperimentConfig:
    """argparse の結果から ExperimentConfig を作る"""
    field_spec = None
    if getattr(args, "field", None):
        field_spec = parse_field_spec(args.field).spec()
    elif getattr(args, "q", None) is not None:
        field_spec = field_for_q(args.q).spec()
    polys = {name: getattr(args, name) for name in ("Q", "Q1") if getattr(args, name, None) is not None}
    params = {name: getattr(args, name) for name in INT_PARAMS if getattr(args, name, None) is not None}
    routes = [r.strip() for r in args.routes.split(",") if r.strip()] if getattr(args, "routes", None) else []
    return ExperimentConfig(
        subcommand=args.subcommand,
        field_spec=field_spec,
        polys=polys,
        params=params,
        qs=list(getattr(args, "qs", None) or []),
        routes=routes,
        seed=args.seed if args.seed is not None else seed_default,
        output=args.output,
        format=args.format,
        verify_spectrum=bool(getattr(args, "verify_spectrum", False)),
    )


def error_object(error: Exception, config: Optional[ExperimentConfig]) -> str:
    return dump_json({
        "error": {"type": type(error).__name__, "message": str(error)},
        "config": config.to_dict() if config else None,
    })


def exit_code_for(error: Exception) -> int:
    if isinstance(error, BudgetExceededError):
        return EXIT_BUDGET
    if isinstance(error, PreconditionError):
        return EXIT_PRECONDITION
    return EXIT_VERIFICATION


def main(argv: Optional[Sequence[str]] = None) -> int:
    """コマンドライン実行用のメイン関数"""
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-") and argv[0] not in SUBCOMMANDS:
        sys.stdout.write(error_object(PreconditionError(f"unknown subcommand: {argv[0]}"), None))
        return EXIT_UNKNOWN_SUBCOMMAND

    args = build_parser().parse_args(argv)

    # 設定の準備
    config_overrides: Dict[str, Any] = {}
    if args.verbose:
        config_overrides["logging"] = {"level": "DEBUG"}
    if args.threads is not None:
        config_overrides["threads"] = args.threads

    config: Optional[ExperimentConfig] = None
    try:
        orchestrator = VarianceOrchestrator(args.config, **config_overrides)
        config = config_from_args(args, orchestrator.config["seed"])
        body = orchestrator.run(config)
        orchestrator.save_results(config, orchestrator.render(config, body))
        if not args.quiet:
            orchestrator.display_summary()
        return EXIT_OK
    except FFVarianceError as e:
        sys.stdout.write(error_object(e, config))
        return exit_code_for(e)
    except KeyboardInterrupt:
        print("\nRun interrupted by user", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())
