"""Command-line pipeline: gen, fit-copula, train, forecast, evaluate, structure-search, normality-report.

Settings come from built-in defaults, then an optional flat ``key = value``
config file, then command-line flags. Exit status is 0 on success, 1 when a
computation fails and 2 for usage or file problems.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dbn, evaluation, persist, transform
from .copula import peak_indicators, table_rows
from .ingest import (
    EXOG_COLUMNS,
    HORIZONS,
    LAGS,
    SEASONS,
    SplitSpec,
    build_features,
    clean,
    parse_csv,
    season_of,
    split_seasonal,
    write_csv,
)
from .seeding import child_seed
from .synthgen import ScenarioConfig, gen_scenario

log = logging.getLogger("copula_dbn")

EXIT_OK, EXIT_COMPUTE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class PipelineConfig:
    data: str = ""
    out: str = "artifacts"
    seed: int = 0
    p: float = 0.95
    hr_tol: float = 0.07
    beta: float = 0.01
    architecture: str = ""
    eta_pretrain: float = 0.05
    eta_finetune: float = 0.01
    pretrain_epochs: int = 100
    max_finetune_epochs: int = 1000
    batch_size: int = 10
    season: str = ""
    horizon: str = "day_ahead"
    anchor: list = field(default_factory=lambda: ["2016-07-11T00"])
    indicators: bool = True
    model: str = "dbn"
    kinds: list = field(default_factory=list)
    hours: int = 0
    days: int = 365
    alpha_temp: float = 3.52
    alpha_price: float = 1.19
    start: str = "2016-01-01"
    neurons: str = "2:40"
    layers: str = "1:6"
    search_fraction: float = 0.1
    mc_reps: int = transform.DEFAULT_LILLIEFORS_REPS

    @property
    def data_path(self) -> Path:
        return Path(self.data) if self.data else Path(self.out) / "data.csv"

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def train_config(self, label: str = "") -> dbn.TrainConfig:
        seed = child_seed(self.seed, label) if label else self.seed
        return dbn.TrainConfig(self.eta_pretrain, self.eta_finetune, self.pretrain_epochs,
                               self.max_finetune_epochs, self.batch_size, self.beta, seed)

    def split(self, anchor: str) -> SplitSpec:
        stamp = np.datetime64(anchor, "h")
        return SplitSpec(self.season or season_of(stamp), self.horizon, stamp)


def _coerce(name: str, raw):
    kind = {f.name: f for f in dataclasses.fields(PipelineConfig)}[name]
    default = kind.default if kind.default is not dataclasses.MISSING else kind.default_factory()
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text not in ("true", "false", "1", "0", "yes", "no"):
            raise UsageError(f"{name}: expected a boolean, got {raw!r}")
        return text in ("true", "1", "yes")
    if isinstance(default, list):
        items = raw if isinstance(raw, list) else str(raw).split(",")
        return [s.strip() for s in items if s.strip()]
    try:
        return type(default)(raw)
    except ValueError:
        raise UsageError(f"{name}: cannot read {raw!r} as {type(default).__name__}") from None


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string("[pipeline]\n" + path.read_text(encoding="utf-8"))
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    values = {}
    for key, raw in parser["pipeline"].items():
        key = key.replace("-", "_")
        if key not in known:
            raise UsageError(f"{path}: unknown setting {key!r}")
        values[key] = _coerce(key, raw)
    return values


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in dataclasses.fields(PipelineConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = _coerce(f.name, flag)
    cfg = PipelineConfig(**values)
    if cfg.season and cfg.season not in SEASONS:
        raise UsageError(f"unknown season {cfg.season!r}")
    if cfg.horizon not in HORIZONS:
        raise UsageError(f"unknown horizon {cfg.horizon!r}")
    if not 0.5 < cfg.p < 1:
        raise UsageError("p must lie in (0.5, 1)")
    return cfg


def _range(text: str) -> range:
    lo, _, hi = text.partition(":")
    try:
        return range(int(lo), int(hi or lo) + 1)
    except ValueError:
        raise UsageError(f"bad range {text!r}; use LO:HI") from None


def _architecture(cfg: PipelineConfig, width: int):
    if not cfg.architecture:
        return dbn.default_architecture(width == 14)
    try:
        arch = tuple(int(x) for x in cfg.architecture.split("-"))
    except ValueError:
        raise UsageError(f"bad architecture {cfg.architecture!r}; use e.g. 14-30-30-30-1") from None
    # the input width always follows the indicator setting
    return (width,) + arch[1:]


def load_series(cfg: PipelineConfig):
    path = cfg.data_path
    if not path.is_file():
        raise FileNotFoundError(f"data file not found: {path}")
    series, errors = parse_csv(path)
    for err in errors:
        log.warning("%s line %d: %s", path, err.line, err.message)
    return clean(series)


def _require(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"missing artifact: {path}")
    return path


def _write_table(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# --- commands -----------------------------------------------------------------

def cmd_gen(cfg: PipelineConfig) -> Path:
    scenario = ScenarioConfig(alpha_temp=cfg.alpha_temp, alpha_price=cfg.alpha_price, days=cfg.days,
                              seed=cfg.seed, start=cfg.start)
    series = gen_scenario(scenario)
    path = cfg.data_path
    if not cfg.data:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(series, path)
    log.info("wrote %d rows to %s", len(series), path)
    return path


def cmd_fit_copula(cfg: PipelineConfig) -> list:
    series = load_series(cfg)
    models = evaluation.fit_copulas(series, cfg.p, cfg.season)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    persist.save_copulas(models, cfg.out_dir / "copulas.json")
    rows = table_rows(models)
    _write_table(cfg.out_dir / "copula_table.csv",
                 ["variable", "alpha", "tail_upper", "p", "var_raw", "n", "season"],
                 [[r["variable"], repr(r["alpha"]), repr(r["tail_upper"]), r["p"], repr(r["var_raw"]),
                   r["n"], r["season"]] for r in rows])
    for r in rows:
        print(f"{r['variable']:<12} alpha={r['alpha']:.4f} tail_upper={r['tail_upper']:.5f} "
              f"VaR_{r['p']}={r['var_raw']:.3f}")
    return rows


def _kind(cfg: PipelineConfig) -> str:
    if cfg.model not in ("dbn", "nn", "elm"):
        raise UsageError(f"unknown model {cfg.model!r}; choose dbn, nn or elm")
    return "copula_dbn" if cfg.model == "dbn" and cfg.indicators else cfg.model


def cmd_train(cfg: PipelineConfig):
    series = load_series(cfg)
    spec = cfg.split(cfg.anchor[0])
    train_part, _ = split_seasonal(series, spec)
    width = 14 if cfg.indicators else 12
    indicators = None
    copulas = None
    if cfg.indicators:
        history = series.window(series.timestamps[0], spec.anchor)
        copulas = evaluation.fit_copulas(history, cfg.p, spec.season)
        indicators = peak_indicators(series.temperature, series.price, copulas)
    rows = build_features(series, indicators).window(train_part.timestamps[0], spec.anchor)
    kind = _kind(cfg)
    model = evaluation.train_model(kind, rows, cfg.train_config(f"model/{kind}"), _architecture(cfg, width))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    persist.save_model(model, cfg.out_dir / "model.json")
    if copulas is not None:
        persist.save_copulas(copulas, cfg.out_dir / "model_copulas.json")
    log.info("trained %s (%d inputs) on %d rows", kind, width, len(rows))
    return model


def cmd_forecast(cfg: PipelineConfig):
    model = persist.load_model(_require(cfg.out_dir / "model.json"))
    copulas = None
    if model.with_indicators:
        copulas = persist.load_copulas(_require(cfg.out_dir / "model_copulas.json"))
    series = load_series(cfg)
    spec = cfg.split(cfg.anchor[0])
    hours = cfg.hours or spec.validation_hours
    trace = evaluation.forecast_horizon(model, series, copulas, spec.anchor, hours)
    evaluation.write_trace_csv(trace, cfg.out_dir / "trace.csv")
    return trace


def cmd_evaluate(cfg: PipelineConfig) -> list:
    """Score ``trace.csv``; with ``--kinds`` run the full comparison per anchor instead."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.kinds:
        unknown = set(cfg.kinds) - set(evaluation.MODEL_KINDS)
        if unknown:
            raise UsageError(f"unknown model kinds {sorted(unknown)}")
        series = load_series(cfg)
        rows = []
        for anchor in cfg.anchor:
            spec = cfg.split(anchor)
            result = evaluation.run_experiment(series, spec, cfg.kinds, cfg.train_config(), cfg.p, cfg.hr_tol,
                                               _architecture(cfg, 14)[1:-1])
            rows.extend(result.rows)
    else:
        trace = evaluation.read_trace_csv(_require(cfg.out_dir / "trace.csv"))
        spec = cfg.split(str(trace.timestamps[0]))
        algorithm, indicators = _kind(cfg), cfg.indicators
        if (cfg.out_dir / "model.json").is_file():
            model = persist.load_model(cfg.out_dir / "model.json")
            indicators = model.with_indicators
            algorithm = {"mlp": "nn", "elm": "elm"}.get(model.kind, "copula_dbn" if indicators else "dbn")
        reports = [evaluation.compute_metrics(trace.predicted, trace.actual, cfg.hr_tol, spec.horizon, "all")]
        if len(trace) >= 24:
            reports.append(evaluation.peak_window_eval(trace, spec.season, cfg.hr_tol, spec.horizon))
        rows = [evaluation.ResultRow(spec.season, algorithm, spec.horizon, spec.anchor, r, cfg.seed,
                                     indicators) for r in reports]
    evaluation.write_results_csv(rows, cfg.out_dir / "results.csv")
    for row in rows:
        m = row.metrics
        print(f"{row.season:<7} {row.algorithm:<11} {row.horizon:<10} {m.window:<4} "
              f"MAPE={100 * m.mape:6.3f}% RMSE={m.rmse:10.2f} HR={100 * m.hr:6.2f}% n={m.n}")
    return rows


def cmd_structure_search(cfg: PipelineConfig):
    series = load_series(cfg)
    indicators = None
    if cfg.indicators:
        copulas = evaluation.fit_copulas(series, cfg.p, cfg.season)
        indicators = peak_indicators(series.temperature, series.price, copulas)
    features = build_features(series, indicators)
    result = dbn.structure_search(features, _range(cfg.neurons), _range(cfg.layers),
                                  cfg.train_config("structure"), fraction=cfg.search_fraction)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "architecture": list(result.architecture),
        "width_mape": [[w, s] for w, s in result.width_scores],
        "depth_mape": [[d, s] for d, s in result.depth_scores],
    }
    (cfg.out_dir / "structure.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print("-".join(str(x) for x in result.architecture))
    return result


def cmd_normality_report(cfg: PipelineConfig):
    series = load_series(cfg)
    features = build_features(series, None)
    columns = {name: features.inputs[:, j] for j, name in enumerate(EXOG_COLUMNS)}
    for j, k in enumerate(LAGS):
        columns[f"load_t-{k}h"] = features.inputs[:, len(EXOG_COLUMNS) + j]
    rows = transform.normality_report(columns, seed=child_seed(cfg.seed, "normality"), mc_reps=cfg.mc_reps)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    transform.write_normality_csv(rows, cfg.out_dir / "normality.csv")
    for r in rows:
        print(f"{r.variable:<14} lambda={r.lam:5.2f} p_AD={r.p_ad:.3f} p_JB={r.p_jb:.3f} "
              f"p_Lilliefors={r.p_lilliefors:.3f}")
    return rows


COMMANDS = {
    "gen": cmd_gen,
    "fit-copula": cmd_fit_copula,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "structure-search": cmd_structure_search,
    "normality-report": cmd_normality_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copula-dbn", description="Copula-DBN load forecasting pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value settings file")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--data", help="records CSV (default: OUT/data.csv)")
    shared.add_argument("--out", help="artifact directory")
    shared.add_argument("--season", choices=SEASONS)
    shared.add_argument("--horizon", choices=HORIZONS)
    shared.add_argument("--anchor", help="forecast start, ISO hour; comma-separated list for evaluate")
    shared.add_argument("--no-indicators", dest="indicators", action="store_const", const=False)
    shared.add_argument("--model", choices=("dbn", "nn", "elm"))
    shared.add_argument("--architecture", help="layer widths, e.g. 14-30-30-30-1")
    shared.add_argument("--p", type=float, help="VaR percentile")
    shared.add_argument("--hr-tol", dest="hr_tol", type=float)
    shared.add_argument("--beta", type=float)
    shared.add_argument("--eta-pretrain", dest="eta_pretrain", type=float)
    shared.add_argument("--eta-finetune", dest="eta_finetune", type=float)
    shared.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int)
    shared.add_argument("--max-finetune-epochs", dest="max_finetune_epochs", type=int)
    shared.add_argument("--batch-size", dest="batch_size", type=int)
    shared.add_argument("-v", "--verbose", action="store_true")
    extra = {
        "gen": [("--days", int), ("--alpha-temp", float), ("--alpha-price", float), ("--start", str)],
        "forecast": [("--hours", int)],
        "evaluate": [("--kinds", str)],
        "structure-search": [("--neurons", str), ("--layers", str), ("--search-fraction", float)],
        "normality-report": [("--mc-reps", int)],
    }
    for name in COMMANDS:
        cmd = sub.add_parser(name, parents=[shared])
        for flag, typ in extra.get(name, []):
            cmd.add_argument(flag, dest=flag[2:].replace("-", "_"), type=typ)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except (UsageError, OSError, persist.ModelLoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
