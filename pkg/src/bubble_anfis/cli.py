"""Command-line interface: ``gen``, ``train``, ``eval``, ``predict`` and ``sweep``.

Exit codes: 0 on success, 1 on data/model/runtime errors, 2 on usage errors.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dataset import (
    Column,
    Dataset,
    GridSpec,
    SurrogateParams,
    generate_surrogate,
    load_csv,
    midpoint_queries,
    select_regression,
    split_indices,
    write_csv,
)
from .errors import AnfisError, ParseError, SelectionError, UsageError
from .fis import build_model, default_max_rules, load_model, predict, save_model
from .membership import MfFamily
from .metrics import metric_report
from .sweep import (
    DEFAULT_INPUT_SETS,
    PAPER_COUNTS_BY_SIZE,
    SweepSpec,
    report_to_csv,
    run_sweep,
    trend_summary,
)
from .trainer import TrainConfig, train

log = logging.getLogger("bubble_anfis")

SUBCOMMANDS = ("gen", "train", "eval", "predict", "sweep")
REQUIRED = {
    "gen": ("out",),
    "train": ("data", "model"),
    "eval": ("data", "model"),
    "predict": ("model", "points", "out"),
    "sweep": ("data", "out"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class Command:
    subcommand: str
    args: argparse.Namespace


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _families(text: str) -> list[str]:
    if text.strip().lower() == "all":
        return [f.value for f in MfFamily]
    names = _csv_list(text)
    for n in names:
        try:
            MfFamily.parse(n)
        except ParseError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return names


def _family(text: str) -> str:
    try:
        return MfFamily.parse(text).value
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _input_sets(text: str) -> list[list[str]]:
    return [_csv_list(group) for group in text.split(";") if group.strip()]


def _add_train_flags(p: argparse.ArgumentParser, epochs: int) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--epochs", type=int, default=epochs, help="hybrid-learning epochs (default: %(default)s)")
    g.add_argument("--train-frac", type=float, default=0.7, help="training fraction (default: %(default)s)")
    g.add_argument("--seed", type=int, default=0, help="split/training seed (default: %(default)s)")
    g.add_argument("--initial-step", type=float, default=0.01, help="premise step length (default: %(default)s)")
    g.add_argument("--step-increase", type=float, default=1.1, help="step growth factor (default: %(default)s)")
    g.add_argument("--step-decrease", type=float, default=0.9, help="step shrink factor (default: %(default)s)")
    g.add_argument("--ridge", type=float, default=1e-8, help="ridge term of the LSE solve (default: %(default)s)")
    g.add_argument("--no-normalize", action="store_true", help="train on raw input units")
    g.add_argument(
        "--max-rules", type=int, default=None,
        help="rule-count limit (default: $ANFIS_MAX_RULES or 10000)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bubble-anfis", description="ANFIS surrogate modelling of bubble-column pressure gradients.")
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys override flag defaults")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)

    p = sub.add_parser(
        "gen", parents=[common], help="generate the surrogate dataset (6000 rows by default)",
        description="Generate the surrogate dataset. The default grid has 10 x 12 x 10 nodes and 5 velocities, 6000 rows.",
    )
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--n-r", type=int, default=10, help="radial nodes (default: %(default)s)")
    p.add_argument("--n-theta", type=int, default=12, help="angular nodes (default: %(default)s)")
    p.add_argument("--n-z", type=int, default=10, help="axial nodes (default: %(default)s)")
    p.add_argument(
        "--velocities", type=_float_list, default=list(GridSpec().velocities),
        help="superficial gas velocities in m/s (default: 0.0025,0.005,0.0075,0.01,0.0125)",
    )
    p.add_argument("--noise-sd", type=float, default=0.0, help="gaussian noise on dpdz, Pa/m (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: %(default)s)")
    p.add_argument("--midpoints", action="store_true", help="emit spatial midpoints between grid nodes (at the grid velocities) with noiseless truth")

    p = sub.add_parser("train", parents=[common], help="train a model with hybrid learning")
    p.add_argument("--data", help="training data CSV")
    p.add_argument("--model", help="output model JSON path")
    p.add_argument("--inputs", type=_csv_list, default=["x", "y", "z", "v_as"], help="input columns (default: x,y,z,v_as)")
    p.add_argument("--output-col", default="dpdz", help="target column (default: %(default)s)")
    p.add_argument("--mf-count", type=int, default=4, help="membership functions per input (default: %(default)s)")
    p.add_argument("--mf-type", type=_family, default="gbell", help="membership family (default: %(default)s)")
    p.add_argument("--trace", help="optional per-epoch trace CSV")
    _add_train_flags(p, epochs=700)

    p = sub.add_parser("eval", parents=[common], help="score a model on the train/test split it was trained with")
    p.add_argument("--data", help="data CSV (same file as used for training)")
    p.add_argument("--model", help="model JSON")
    p.add_argument("--train-frac", type=float, default=None, help="override the recorded training fraction")
    p.add_argument("--seed", type=int, default=None, help="override the recorded split seed")
    p.add_argument("--out", help="also write the metrics CSV here")

    p = sub.add_parser("predict", parents=[common], help="evaluate a model at arbitrary points")
    p.add_argument("--model", help="model JSON")
    p.add_argument("--points", help="CSV holding the model's input columns")
    p.add_argument("--out", help="output CSV: input columns plus prediction")

    p = sub.add_parser("sweep", parents=[common], help="sensitivity sweep over inputs, MF count and MF family")
    p.add_argument("--data", help="data CSV")
    p.add_argument("--out", help="report CSV path")
    p.add_argument(
        "--input-sets", type=_input_sets, default=[list(s) for s in DEFAULT_INPUT_SETS],
        help="';'-separated comma lists (default: x;x,y;x,y,z;x,y,z,v_as)",
    )
    p.add_argument("--mf-counts", type=_int_list, default=[2, 4, 6], help="MF counts (default: 2,4,6)")
    p.add_argument("--families", type=_families, default=[f.value for f in MfFamily], help="families or 'all' (default: all)")
    p.add_argument("--output-col", default="dpdz", help="target column (default: %(default)s)")
    p.add_argument("--paper-matrix", action="store_true", help="six MFs only for one and two inputs (60 cells)")
    p.add_argument("--paper-epochs", action="store_true", help="train 700 epochs per cell instead of --epochs")
    p.add_argument("--jobs", type=int, default=1, help="parallel cells (default: %(default)s, sequential)")
    p.add_argument("--timing", action="store_true", help="record wall times (makes the report non-reproducible)")
    _add_train_flags(p, epochs=100)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser: argparse.ArgumentParser, sub: str, path: str) -> None:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read --config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"--config {path}: expected a JSON object")
    sp = _subparser(parser, sub)
    dests = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in dests or dest in ("help", "config"):
            raise UsageError(f"--config {path}: unknown key {key!r} for {sub}")
        action = dests[dest]
        if isinstance(value, str) and action.type is not None:
            try:
                value = action.type(value)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"--config {path}: key {key!r}: {exc}") from None
        defaults[dest] = value
    sp.set_defaults(**defaults)


def parse_args(argv: Sequence[str]) -> Command:
    argv = list(argv)
    parser = build_parser()
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] in ("-h", "--help", "--version"):
            parser.parse_args(argv)
        raise UsageError(
            f"bubble-anfis: expected a subcommand ({', '.join(SUBCOMMANDS)}), got {argv[0] if argv else 'nothing'!r}"
        )
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if known.config:
        _apply_config(parser, argv[0], known.config)
    args = parser.parse_args(argv)
    for name in REQUIRED[args.subcommand]:
        if getattr(args, name, None) in (None, ""):
            raise UsageError(f"bubble-anfis {args.subcommand}: missing --{name.replace('_', '-')}")
    return Command(args.subcommand, args)


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _train_config(a) -> TrainConfig:
    return TrainConfig(
        epochs=a.epochs,
        initial_step=a.initial_step,
        step_increase=a.step_increase,
        step_decrease=a.step_decrease,
        ridge_lambda=a.ridge,
        seed=a.seed,
        normalize_inputs=not a.no_normalize,
    )


def _cmd_gen(a) -> int:
    grid = GridSpec(a.n_r, a.n_theta, a.n_z, tuple(a.velocities))
    params = SurrogateParams(noise_sd=a.noise_sd, seed=a.seed)
    ds = midpoint_queries(grid, params) if a.midpoints else generate_surrogate(grid, params)
    write_csv(ds, a.out)
    log.info("wrote %d rows to %s", len(ds), a.out)
    return 0


def _cmd_train(a) -> int:
    ds = load_csv(a.data)
    config = _train_config(a)
    tr_idx, te_idx = split_indices(len(ds), a.train_frac, a.seed)
    train_ds = ds.take(tr_idx)
    X, y, specs = select_regression(train_ds, a.inputs, a.output_col)
    limit = default_max_rules() if a.max_rules is None else a.max_rules
    model = build_model(specs, a.mf_count, a.mf_type, a.output_col, normalize=config.normalize_inputs, max_rules=limit)
    model = model.replace(
        provenance={
            "data_rows": len(ds),
            "train_frac": a.train_frac,
            "split_seed": a.seed,
            "n_train": len(tr_idx),
            "n_test": len(te_idx),
            "mf_count": a.mf_count,
            "output_unit": ds.columns[ds.index(a.output_col)].unit,
        }
    )
    log.info("training %d rules on %d rows", model.n_rules, len(y))
    model, trace = train(model, X, y, config)
    save_model(model, a.model)
    if a.trace:
        trace.to_csv(a.trace)
    log.info("best epoch %d, train rmse %.6g", trace.best_epoch, trace.best_rmse)
    return 0


def _cmd_eval(a) -> int:
    model = load_model(a.model)
    ds = load_csv(a.data)
    prov = model.provenance
    frac = a.train_frac if a.train_frac is not None else prov.get("train_frac", 0.7)
    seed = a.seed if a.seed is not None else prov.get("split_seed", 0)
    if "data_rows" in prov and prov["data_rows"] != len(ds):
        log.warning("data has %d rows, model was trained on a %d-row file", len(ds), prov["data_rows"])
    tr_idx, te_idx = split_indices(len(ds), frac, seed)
    X, y, _ = select_regression(ds, model.input_names, model.output_name)
    pred = predict(model, X)
    reports = {
        "train": metric_report(pred[tr_idx], y[tr_idx]),
        "test": metric_report(pred[te_idx], y[te_idx]),
        "combined": metric_report(pred, y),
    }
    lines = ["metric,value"]
    for part, rep in reports.items():
        lines.append(f"r2_{part},{rep.r2_determination:.17g}")
    for part, rep in reports.items():
        lines.append(f"r2_pearson_{part},{rep.r2_pearson:.17g}")
        lines.append(f"rmse_{part},{rep.rmse:.17g}")
        lines.append(f"mae_{part},{rep.mae:.17g}")
        lines.append(f"n_{part},{rep.n}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if a.out:
        Path(a.out).write_text(text, encoding="utf-8")
    return 0


def _cmd_predict(a) -> int:
    model = load_model(a.model)
    pts = load_csv(a.points)
    missing = [n for n in model.input_names if n not in pts.names]
    if missing:
        raise SelectionError(f"{a.points}: missing input column(s) {missing}")
    idx = [pts.index(n) for n in model.input_names]
    X = pts.rows[:, idx]
    yhat = predict(model, X) if len(X) else np.empty(0)
    unit = model.provenance.get("output_unit", "")
    columns = tuple(pts.columns[i] for i in idx) + (Column(model.output_name, unit),)
    write_csv(Dataset(columns, np.column_stack([X, yhat]) if len(X) else np.empty((0, len(columns)))), a.out)
    log.info("predicted %d points", len(X))
    return 0


def _cmd_sweep(a) -> int:
    ds = load_csv(a.data)
    config = _train_config(a)
    if a.paper_epochs:
        config = TrainConfig(**{**config.__dict__, "epochs": 700})
    spec = SweepSpec(
        input_sets=tuple(tuple(s) for s in a.input_sets),
        mf_counts=tuple(a.mf_counts),
        families=tuple(a.families),
        output_name=a.output_col,
        train=config,
        train_frac=a.train_frac,
        split_seed=a.seed,
        max_rules=a.max_rules,
        counts_by_size=PAPER_COUNTS_BY_SIZE if a.paper_matrix else None,
    )
    report = run_sweep(ds, spec, jobs=max(1, a.jobs))
    report_to_csv(report, a.out, timing=a.timing)
    try:
        summary = trend_summary(report)
    except AnfisError as exc:
        log.warning("%s", exc)
        return 0
    lines = ["input_count,mf_count,best_r2_test"]
    for (size, count), r2 in summary.by_size_count.items():
        lines.append(f"{size},{count},{r2:.6f}")
    for size, r2 in summary.by_size.items():
        lines.append(f"{size},all,{r2:.6f}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


_HANDLERS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "sweep": _cmd_sweep,
}


def execute(cmd: Command) -> int:
    if getattr(cmd.args, "verbose", False):
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _HANDLERS[cmd.subcommand](cmd.args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AnfisError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    return execute(cmd)


if __name__ == "__main__":
    sys.exit(main())
