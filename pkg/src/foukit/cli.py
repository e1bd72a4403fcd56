"""``foukit`` command line: simulate, fit, forecast, spectrum, acf and mc.

Exit codes: 0 ok, 2 input or validation error, 3 numerical or estimation
failure, 4 unstable Monte Carlo experiment.  Failures print a single JSON
object on standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from .errors import ExperimentUnstable, FouError, NumericalError, ValidationError
from .estimate import FitConfig, WhittleConfig, fit
from .filters import parse_filter
from .forecast import ForecastTask, mae, naive_predictions, one_step_predictions
from .model import FouSpec, autocovariance_grid, spectral_density
from .montecarlo import load_grid_config, run_experiment, table_emit
from .series import Path
from .simulate import SimulationPlan, path_standardize, simulate_fou

SCHEMA_VERSION = 1
TIME_TOL = 1e-9


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(2, "UsageError", message)


# -- io helpers ---------------------------------------------------------------


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(value: float) -> str:
    return repr(float(value))


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def load_spec(arg: str) -> FouSpec:
    """A spec from inline JSON (starting with ``{``) or from a JSON file."""
    text = arg
    if not arg.lstrip().startswith("{"):
        try:
            with open(arg) as fh:
                text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read spec file: {exc.strerror}", pointer="") from None
    return FouSpec.from_json(text)


def read_series(path: str) -> tuple[np.ndarray, float | None]:
    """Values and, if a ``time`` column is present, its constant spacing."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ValidationError(f"cannot read series file: {exc.strerror}") from None
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError("series file is empty")
    header = [c.strip().lower() for c in rows[0]]
    if header == ["value"]:
        cols = None
    elif header == ["time", "value"]:
        cols = 2
    else:
        raise ValidationError("series header must be 'value' or 'time,value'")
    body = rows[1:]
    if len(body) < 2:
        raise ValidationError("series needs at least two rows")
    try:
        data = np.array([[float(c) for c in r] for r in body])
    except ValueError:
        raise ValidationError("series contains a non-numeric entry") from None
    width = 2 if cols else 1
    if data.ndim != 2 or data.shape[1] != width:
        raise ValidationError("ragged series rows")
    if not np.all(np.isfinite(data)):
        raise ValidationError("series contains non-finite values")
    if width == 1:
        return data[:, 0], None
    steps = np.diff(data[:, 0])
    delta = float(steps.mean())
    if not delta > 0 or np.max(np.abs(steps - delta)) > TIME_TOL * abs(delta):
        raise ValidationError(f"time column is not equispaced to {TIME_TOL:g} relative")
    return data[:, 1], delta


def _resolve_delta(n: int, from_time: float | None, delta: float | None, horizon: float | None) -> float:
    if delta is not None and horizon is not None:
        raise ValidationError("give at most one of --delta and --horizon")
    given = delta if delta is not None else (horizon / n if horizon is not None else None)
    if given is not None and not given > 0:
        raise ValidationError("sampling step must be positive")
    if from_time is not None:
        if given is not None and abs(given - from_time) > TIME_TOL * from_time:
            raise ValidationError("sampling step disagrees with the time column")
        return from_time
    if given is None:
        raise ValidationError("single-column series need --delta or --horizon")
    return given


# -- commands -----------------------------------------------------------------


def cmd_simulate(args) -> None:
    spec = load_spec(args.spec)
    plan = SimulationPlan(spec, args.n, args.delta, seed=args.seed, burn_in=args.burn_in)
    path = simulate_fou(plan)
    times = plan.delta * np.arange(1, plan.n + 1)
    text = _csv_text(["time", "value"], [(_num(t), _num(v)) for t, v in zip(times, path.values)])
    print(json.dumps({"plan": plan.describe()}, sort_keys=True), file=sys.stderr)
    _emit(text, args.out)


def _whittle_config(args) -> WhittleConfig | None:
    if not args.whittle:
        return None
    return WhittleConfig(
        lambda_bounds=(args.lambda_min, args.lambda_max),
        freq_min=args.freq_min,
        freq_max=args.freq_max,
        n_freq=args.n_freq,
    )


def fit_report_json(report, path: Path, filt_text: str, standardized: bool) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "h_hat": report.h_hat,
        "sigma_hat": report.sigma_hat,
        "sigma_fixed": report.sigma_fixed,
        "sigma_used": report.sigma_used,
        "mu2_hat": report.mu2_hat,
        "lambda_plugin": report.lambda_plugin,
        "lambda_whittle": report.lambda_whittle,
        "p": report.p,
        "filter": filt_text,
        "n": path.n,
        "delta": path.delta,
        "standardized": standardized,
        "spec": report.spec_hat.to_json() if report.spec_hat is not None else None,
        "flags": list(report.flags),
        "diagnostics": dict(report.diagnostics),
    }


def cmd_fit(args) -> None:
    values, step = read_series(args.series)
    delta = _resolve_delta(values.shape[0], step, args.delta, args.horizon)
    filt = parse_filter(args.filter)
    config = FitConfig(
        filter=filt,
        p=args.p,
        standardize=args.standardize,
        assume_unit_sigma=args.standardize and not args.estimate_sigma,
        whittle=_whittle_config(args),
    )
    path = Path(values, delta)
    report = fit(path, config)
    _emit(_json_dumps(fit_report_json(report, path, args.filter, args.standardize)), args.out_json)


def _spec_from_fit(doc: dict, estimator: str) -> FouSpec:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError("unsupported fit report schema_version", pointer="/schema_version")
    if doc.get("spec") is None:
        raise ValidationError("fit report has no usable spec (H estimate outside (0, 1))", pointer="/spec")
    spec = FouSpec.from_json(doc["spec"])
    if estimator == "whittle":
        lam = doc.get("lambda_whittle")
        if lam is None:
            raise ValidationError("fit report has no Whittle estimate", pointer="/lambda_whittle")
        spec = FouSpec.single(lam, spec.p, spec.sigma, spec.hurst)
    return spec


def cmd_forecast(args) -> None:
    try:
        with open(args.fit_json) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read fit report: {exc}") from None
    spec = _spec_from_fit(doc, args.estimator)
    values, step = read_series(args.series)
    delta = _resolve_delta(values.shape[0], step, doc.get("delta"), None)
    path = Path(values, delta)
    if doc.get("standardized"):
        path = path_standardize(path)
    raw = path.raw()
    outputs = {}
    summary = {"schema_version": SCHEMA_VERSION, "estimator": args.estimator, "n": path.n, "results": []}
    for m in sorted(set(args.m)):
        preds = one_step_predictions(ForecastTask(spec, path, m))
        actual = raw[-m:]
        naive = naive_predictions(path, m)
        rows = [
            (str(path.n - m + i), _num(a), _num(b), _num(abs(a - b)))
            for i, (a, b) in enumerate(zip(actual, preds))
        ]
        outputs[f"forecast_m{m}.csv"] = _csv_text(["index", "actual", "predicted", "abs_error"], rows)
        err, naive_err = mae(actual, preds), mae(actual, naive)
        summary[f"mae_{m}"] = err
        summary[f"naive_mae_{m}"] = naive_err
        summary["results"].append({"m": m, "mae": err, "naive_mae": naive_err})
    outputs["forecast_summary.json"] = _json_dumps(summary)
    for name, text in outputs.items():
        atomic_write(os.path.join(args.out_dir, name), text)


def _grid(args) -> np.ndarray:
    if not args.num >= 2:
        raise ValidationError("--num must be >= 2")
    if not args.x_max > args.x_min:
        raise ValidationError("--x-max must exceed --x-min")
    return np.linspace(args.x_min, args.x_max, args.num)


def cmd_spectrum(args) -> None:
    spec = load_spec(args.spec)
    xs = _grid(args)
    if spec.exponent < 0 and args.x_min <= 0 <= args.x_max:
        raise ValidationError(f"grid touches x = 0 where the density is singular (exponent {spec.exponent:.3g})")
    dens = spectral_density(spec, xs)
    _emit(_csv_text(["x", "density"], [(_num(x), _num(f)) for x, f in zip(xs, dens)]), args.out)


def sample_autocorrelation(values: np.ndarray, nlags: int) -> np.ndarray:
    """Biased sample autocorrelation of the centered series at lags ``0..nlags``."""
    x = values - values.mean()
    n = x.shape[0]
    acov = np.array([np.dot(x[: n - k], x[k:]) / n if k < n else math.nan for k in range(nlags + 1)])
    return acov / acov[0]


def cmd_acf(args) -> None:
    spec = load_spec(args.spec)
    if args.nlags < 0:
        raise ValidationError("--nlags must be >= 0")
    delta = args.delta
    overlay = None
    if args.series:
        values, step = read_series(args.series)
        delta = _resolve_delta(values.shape[0], step, delta, None)
        overlay = sample_autocorrelation(values, args.nlags)
    if delta is None or not delta > 0:
        raise ValidationError("--delta must be positive")
    gam = autocovariance_grid(spec, delta, args.nlags + 1)
    header = ["lag", "tau", "autocovariance", "autocorrelation"]
    if overlay is not None:
        header.append("sample_autocorrelation")
    rows = []
    for k in range(args.nlags + 1):
        row = [str(k), _num(k * delta), _num(gam[k]), _num(gam[k] / gam[0])]
        if overlay is not None:
            row.append(_num(overlay[k]))
        rows.append(row)
    _emit(_csv_text(header, rows), args.out)


def cmd_mc(args) -> None:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc.msg}", pointer="") from None
    tables = load_grid_config(doc)
    outputs = {}
    combined = {"schema_version": SCHEMA_VERSION, "config": doc, "tables": {}}
    for name, cells in tables:
        pairs = []
        for cfg in cells:
            rep = run_experiment(cfg, workers=args.workers)
            pairs.append((cfg, rep))
            print(json.dumps({"table": name, "T": cfg.T, "n": cfg.n, "done": True}), file=sys.stderr)
        rendered = table_emit(pairs)
        outputs[f"{name}.csv"] = rendered["estimates_csv"]
        outputs[f"{name}_pvalues.csv"] = rendered["pvalues_csv"]
        outputs[f"{name}.txt"] = rendered["estimates_text"] + "\n" + rendered["pvalues_text"]
        combined["tables"][name] = [
            {"T": cfg.T, "n": cfg.n, "lambda0": cfg.lambda0, "hurst": cfg.spec.hurst, **rep.to_json()}
            for cfg, rep in pairs
        ]
    outputs["results.json"] = _json_dumps(combined)
    for fname, text in outputs.items():
        atomic_write(os.path.join(args.out_dir, fname), text)


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="foukit", description="Iterated fractional Ornstein-Uhlenbeck toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a stationary path")
    p.add_argument("spec", help="spec JSON file or inline JSON object")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--burn-in", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="estimate H, sigma and lambda")
    p.add_argument("series")
    p.add_argument("--filter", default="binomial:2")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--standardize", action="store_true", help="standardize and fix sigma to 1")
    p.add_argument("--estimate-sigma", action="store_true", help="keep the sigma estimate after standardizing")
    p.add_argument("--whittle", action="store_true")
    p.add_argument("--lambda-min", type=float, default=0.05)
    p.add_argument("--lambda-max", type=float, default=5.0)
    p.add_argument("--freq-min", type=float, default=None)
    p.add_argument("--freq-max", type=float, default=None)
    p.add_argument("--n-freq", type=int, default=None)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="one-step predictions of the last m points")
    p.add_argument("series")
    p.add_argument("fit_json")
    p.add_argument("--m", type=int, action="append", required=True)
    p.add_argument("--estimator", choices=["plugin", "whittle"], default="plugin")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("spectrum", help="spectral density on a grid")
    p.add_argument("spec")
    p.add_argument("--x-min", type=float, default=0.01)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--num", type=int, default=200)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("acf", help="model autocovariance, optionally with a sample overlay")
    p.add_argument("spec")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--nlags", type=int, default=50)
    p.add_argument("--series", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_acf)

    p = sub.add_parser("mc", help="run a Monte Carlo grid")
    p.add_argument("config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_mc)
    return parser


def _classify(exc: BaseException) -> CliError:
    if isinstance(exc, CliError):
        return exc
    extra = {}
    if isinstance(exc, FouError) and exc.stage:
        extra["stage"] = exc.stage
    if isinstance(exc, ValidationError):
        extra["pointer"] = exc.pointer
    if isinstance(exc, ExperimentUnstable):
        code = 4
    elif isinstance(exc, (NumericalError, ArithmeticError)):
        code = 3
    else:
        code = 2
    return CliError(code, type(exc).__name__, str(exc), **extra)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except (FouError, ValueError, ArithmeticError, CliError) as exc:
        err = _classify(exc)
        payload = {"error": err.kind, "message": str(err), "exit_code": err.code, **err.extra}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return err.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
