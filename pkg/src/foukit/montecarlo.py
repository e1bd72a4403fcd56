"""Replicated simulate → fit studies of the λ estimators.

Replication ``r`` of an experiment is seeded with the first 64-bit word of
``numpy.random.SeedSequence([master_seed, r])``, so every replication has its
own stream and results do not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import jsonschema
import numpy as np
from scipy import stats

from .errors import ExperimentUnstable, FouError, TooFewSamples, ValidationError
from .estimate import FitConfig, WhittleConfig, estimate_lambda_whittle, fit
from .filters import Filter, binomial_filter, parse_filter
from .fbm import make_rng
from .model import FouSpec
from .simulate import SimulationPlan, simulate_fou

__all__ = [
    "McConfig",
    "EstimatorSummary",
    "McReport",
    "replication_seed",
    "run_experiment",
    "cvm_statistic",
    "cvm_normality_pvalue",
    "table_emit",
    "load_grid_config",
]

ESTIMATORS = ("plugin", "whittle")
MAX_FAILURE_RATE = 0.05


def replication_seed(master_seed: int, r: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(r)]).generate_state(1, np.uint64)[0])


def default_workers() -> int:
    env = os.environ.get("FOUKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class McConfig:
    spec: FouSpec
    T: float
    n: int
    replications: int = 100
    filter: Filter = field(default_factory=lambda: binomial_filter(2))
    estimators: tuple[str, ...] = ("plugin",)
    master_seed: int = 0
    whittle: WhittleConfig = field(default_factory=WhittleConfig)
    bootstrap_B: int = 999
    burn_in: float | None = None

    def __post_init__(self):
        if self.spec.q != 1:
            raise ValidationError("Monte Carlo studies need a single-lambda spec", pointer="/spec")
        if self.replications < 2:
            raise ValidationError("replications must be >= 2", pointer="/replications")
        if not (self.T > 0 and self.n >= 2):
            raise ValidationError("need T > 0 and n >= 2", pointer="/T")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ValidationError(f"unknown estimators {bad}", pointer="/estimators")

    @property
    def delta(self) -> float:
        return self.T / self.n

    @property
    def lambda0(self) -> float:
        return self.spec.lambdas[0]


@dataclass
class EstimatorSummary:
    mean: float
    mean_abs_error: float
    sd: float
    normality_pvalue: float
    raw_estimates: list
    failures: int = 0

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "mean_abs_error": self.mean_abs_error,
            "sd": self.sd,
            "normality_pvalue": self.normality_pvalue,
            "failures": self.failures,
            "raw_estimates": list(self.raw_estimates),
        }


@dataclass
class McReport:
    estimators: dict
    h_out_of_range: int = 0

    def __getitem__(self, name: str) -> EstimatorSummary:
        return self.estimators[name]

    def to_json(self) -> dict:
        return {
            "h_out_of_range": self.h_out_of_range,
            "estimators": {k: v.to_json() for k, v in self.estimators.items()},
        }


def _replicate(cfg: McConfig, r: int) -> dict:
    plan = SimulationPlan(cfg.spec, cfg.n, cfg.delta, seed=replication_seed(cfg.master_seed, r), burn_in=cfg.burn_in)
    out = {"r": r}
    try:
        path = simulate_fou(plan)
        report = fit(path, FitConfig(filter=cfg.filter, p=cfg.spec.p))
    except FouError as exc:
        out["error"] = f"{exc.stage}: {exc}"
        return out
    out["h_out_of_range"] = "h_out_of_range" in report.flags
    out["plugin"] = report.lambda_plugin
    if "whittle" in cfg.estimators:
        try:
            fixed = (report.h_hat, report.sigma_hat, cfg.spec.p)
            out["whittle"] = estimate_lambda_whittle(path, fixed, cfg.whittle)[0]
        except (FouError, ValueError) as exc:
            out["whittle_error"] = str(exc)
    return out


def _summary(values: list, lambda0: float, failures: int, bootstrap_B: int, seed: int) -> EstimatorSummary:
    ordered = sorted(values)
    m = len(ordered)
    mean = math.fsum(ordered) / m if m else math.nan
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in ordered) / (m - 1)) if m > 1 else math.nan
    try:
        pval = cvm_normality_pvalue(ordered, bootstrap_B, seed)
    except TooFewSamples:
        pval = math.nan
    return EstimatorSummary(mean, abs(mean - lambda0), sd, pval, list(values), failures)


def run_experiment(cfg: McConfig, workers: int | None = None) -> McReport:
    """Replicate simulate → fit ``cfg.replications`` times and aggregate per estimator.

    Hard numerical failures are dropped and counted; more than 5% failures
    for any estimator raises :class:`ExperimentUnstable`.
    """
    workers = default_workers() if workers is None else workers
    reps = range(cfg.replications)
    if workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, [cfg] * cfg.replications, reps))
    else:
        results = [_replicate(cfg, r) for r in reps]
    results.sort(key=lambda item: item["r"])
    summaries = {}
    for name in cfg.estimators:
        values = [res[name] for res in results if name in res]
        failures = cfg.replications - len(values)
        if failures > MAX_FAILURE_RATE * cfg.replications:
            reasons = sorted({res.get("error") or res.get("whittle_error") or "" for res in results if name not in res})
            raise ExperimentUnstable(
                f"{failures}/{cfg.replications} replications failed for {name}: {reasons[:3]}"
            )
        summaries[name] = _summary(values, cfg.lambda0, failures, cfg.bootstrap_B, cfg.master_seed)
    h_out = sum(1 for res in results if res.get("h_out_of_range"))
    return McReport(summaries, h_out)


# -- normality ----------------------------------------------------------------


def cvm_statistic(samples) -> float:
    """Cramér–von Mises ``W²`` of the standardized sample against N(0, 1)."""
    x = np.sort(np.asarray(samples, dtype=float), axis=-1)
    return _cvm_rows(x[None, :])[0]


def _cvm_rows(x: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    mean = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, ddof=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.sort((x - mean) / sd, axis=1)
    u = stats.norm.cdf(z)
    i = np.arange(1, n + 1)
    w2 = 1.0 / (12 * n) + np.sum((u - (2 * i - 1) / (2.0 * n)) ** 2, axis=1)
    # zero spread means maximal departure from normality
    return np.where(sd[:, 0] > 0, w2, np.inf)


def cvm_normality_pvalue(samples, bootstrap_B: int = 999, seed: int = 0) -> float:
    """Parametric-bootstrap p-value of the CvM normality test with estimated mean and variance.

    Standardization makes the null distribution parameter-free, so the
    bootstrap draws standard normal samples of the same size.  Returns
    ``(1 + #{W*_b >= W}) / (B + 1)``.
    """
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    if n < 20:
        raise TooFewSamples(f"need at least 20 samples, got {n}")
    if bootstrap_B < 999:
        raise ValidationError(f"bootstrap_B must be >= 999, got {bootstrap_B}")
    observed = cvm_statistic(x)
    rng = make_rng(seed)
    null = _cvm_rows(rng.standard_normal((bootstrap_B, n)))
    return float((1 + np.count_nonzero(null >= observed)) / (bootstrap_B + 1))


# -- tables -------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.6f}"


def _ordered(reports):
    return sorted(reports, key=lambda item: (-item[0].T, item[0].n))


def table_emit(reports) -> dict:
    """Render ``(McConfig, McReport)`` pairs as estimate and p-value tables.

    Rows are ordered by ``T`` descending then ``n`` ascending.  Returns a dict
    with ``estimates_csv``, ``pvalues_csv``, ``estimates_text`` and ``pvalues_text``.
    """
    if not reports:
        raise ValidationError("no reports to tabulate")
    rows = _ordered(reports)
    names = [e for e in ("whittle", "plugin") if any(e in rep.estimators for _, rep in rows)]
    est_header = ["T", "n"]
    for stat in ("mean", "abs_err", "sd"):
        est_header += [f"{stat}_{e}" for e in names]
    pv_header = ["T", "n", "H"] + [f"pvalue_{e}" for e in names]
    est_rows, pv_rows = [], []
    for cfg, rep in rows:
        est = [f"{cfg.T:g}", str(cfg.n)]
        for attr in ("mean", "mean_abs_error", "sd"):
            est += [_fmt(getattr(rep.estimators[e], attr)) if e in rep.estimators else "" for e in names]
        est_rows.append(est)
        pv_rows.append(
            [f"{cfg.T:g}", str(cfg.n), f"{cfg.spec.hurst:g}"]
            + [_fmt(rep.estimators[e].normality_pvalue) if e in rep.estimators else "" for e in names]
        )
    return {
        "estimates_csv": _csv(est_header, est_rows),
        "pvalues_csv": _csv(pv_header, pv_rows),
        "estimates_text": _aligned(est_header, est_rows),
        "pvalues_text": _aligned(pv_header, pv_rows),
    }


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _aligned(header, rows) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(c).rjust(w) for c, w in zip(line, widths)) for line in [header, *rows]]
    return "\n".join(lines) + "\n"


# -- grid configuration files -------------------------------------------------

_SPEC_SCHEMA = {
    "type": "object",
    "required": ["lambdas", "sigma", "hurst"],
    "properties": {
        "lambdas": {
            "type": "array",
            "minItems": 1,
            "maxItems": 1,
            "items": {
                "type": "object",
                "required": ["value"],
                "properties": {
                    "value": {"type": "number", "exclusiveMinimum": 0},
                    "multiplicity": {"type": "integer", "minimum": 1},
                },
            },
        },
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "hurst": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}

GRID_SCHEMA = {
    "type": "object",
    "required": ["tables"],
    "properties": {
        "schema_version": {"const": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "replications": {"type": "integer", "minimum": 2},
        "filter": {"type": "string"},
        "estimators": {"type": "array", "minItems": 1, "items": {"enum": list(ESTIMATORS)}},
        "bootstrap_B": {"type": "integer", "minimum": 999},
        "burn_in": {"type": "number", "exclusiveMinimum": 0},
        "whittle": {
            "type": "object",
            "properties": {
                "lambda_bounds": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "freq_min": {"type": "number", "exclusiveMinimum": 0},
                "freq_max": {"type": "number", "exclusiveMinimum": 0},
                "n_freq": {"type": "integer", "minimum": 64},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "tables": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "spec", "T", "n"],
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    "spec": _SPEC_SCHEMA,
                    "T": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
                    "n": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 2}},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def _pointer(path) -> str:
    return "".join(f"/{part}" for part in path)


def load_grid_config(obj: dict) -> list[tuple[str, list[McConfig]]]:
    """Validate a grid JSON document and expand it into per-table lists of :class:`McConfig`.

    Every cell of a table (each ``T`` × ``n`` pair) shares the document's
    ``master_seed``.  Validation errors carry a JSON-pointer to the field.
    """
    validator = jsonschema.Draft202012Validator(GRID_SCHEMA)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ValidationError(err.message, pointer=_pointer(err.absolute_path))
    try:
        filt = parse_filter(obj.get("filter", "binomial:2"))
    except ValidationError as exc:
        raise ValidationError(str(exc), pointer="/filter") from None
    wcfg = obj.get("whittle", {})
    try:
        whittle = WhittleConfig(
            lambda_bounds=tuple(wcfg.get("lambda_bounds", (0.05, 5.0))),
            freq_min=wcfg.get("freq_min"),
            freq_max=wcfg.get("freq_max"),
            n_freq=wcfg.get("n_freq"),
            tol=wcfg.get("tol", 1e-5),
        )
    except ValidationError as exc:
        raise ValidationError(str(exc), pointer="/whittle" + exc.pointer) from None
    tables = []
    names = set()
    for idx, table in enumerate(obj["tables"]):
        if table["name"] in names:
            raise ValidationError("duplicate table name", pointer=f"/tables/{idx}/name")
        names.add(table["name"])
        try:
            spec = FouSpec.from_json(table["spec"])
        except ValidationError as exc:
            raise ValidationError(str(exc), pointer=f"/tables/{idx}/spec{exc.pointer}") from None
        cells = [
            McConfig(
                spec=spec,
                T=float(T),
                n=int(n),
                replications=obj.get("replications", 100),
                filter=filt,
                estimators=tuple(obj.get("estimators", ["plugin"])),
                master_seed=obj.get("master_seed", 0),
                whittle=whittle,
                bootstrap_B=obj.get("bootstrap_B", 999),
                burn_in=obj.get("burn_in"),
            )
            for T in table["T"]
            for n in table["n"]
        ]
        tables.append((table["name"], cells))
    return tables
