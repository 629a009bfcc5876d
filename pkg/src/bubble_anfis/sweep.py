"""Sensitivity sweep over input set, membership count and membership family.

Every cell of a sweep trains on the same train/test partition, so cells can be
compared directly.  Reports are always ordered by the spec axes (input set,
then count, then family), whatever order cells finish in.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import Dataset, select_regression, split_indices
from .errors import AnfisError, ConfigError, RuleExplosionError, SummaryError
from .fis import build_model, default_max_rules, predict
from .membership import MfFamily
from .metrics import MetricReport, metric_report
from .trainer import TrainConfig, train

logger = logging.getLogger(__name__)

DEFAULT_INPUT_SETS: tuple[tuple[str, ...], ...] = (
    ("x",),
    ("x", "y"),
    ("x", "y", "z"),
    ("x", "y", "z", "v_as"),
)

PAPER_COUNTS_BY_SIZE = {1: (2, 4, 6), 2: (2, 4, 6), 3: (2, 4), 4: (2, 4)}

REPORT_COLUMNS = (
    "input_set",
    "mf_count",
    "family",
    "status",
    "rule_count",
    "r2_train",
    "r2_test",
    "r2_combined",
    "rmse_test",
    "wall_time_s",
)

OK = "ok"
SKIPPED = "skipped_rule_explosion"
FAILED = "failed"


@dataclass(frozen=True)
class SweepSpec:
    input_sets: tuple[tuple[str, ...], ...] = DEFAULT_INPUT_SETS
    mf_counts: tuple[int, ...] = (2, 4, 6)
    families: tuple[MfFamily, ...] = tuple(MfFamily)
    output_name: str = "dpdz"
    train: TrainConfig = TrainConfig(epochs=100)
    train_frac: float = 0.7
    split_seed: int = 0
    max_rules: int | None = None
    # optional per-size restriction of mf_counts, e.g. the paper's matrix
    counts_by_size: Mapping[int, tuple[int, ...]] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "input_sets", tuple(tuple(s) for s in self.input_sets))
        object.__setattr__(self, "mf_counts", tuple(int(m) for m in self.mf_counts))
        object.__setattr__(self, "families", tuple(MfFamily.parse(f) for f in self.families))
        if not self.input_sets or not self.mf_counts or not self.families:
            raise ConfigError("sweep needs nonempty input sets, counts and families")
        if any(not s for s in self.input_sets):
            raise ConfigError("every input set needs at least one column")

    def cells(self) -> list[tuple[tuple[str, ...], int, MfFamily]]:
        out = []
        for inputs in self.input_sets:
            counts = self.mf_counts
            if self.counts_by_size is not None:
                allowed = self.counts_by_size.get(len(inputs), ())
                counts = tuple(m for m in counts if m in allowed)
            for m in counts:
                for fam in self.families:
                    out.append((inputs, m, fam))
        return out


def paper_matrix(**overrides) -> SweepSpec:
    """Six-MF cells only for one and two inputs: 60 cells with all families."""
    overrides.setdefault("counts_by_size", PAPER_COUNTS_BY_SIZE)
    return SweepSpec(**overrides)


@dataclass(frozen=True)
class SweepCell:
    input_set: tuple[str, ...]
    mf_count: int
    family: MfFamily
    status: str
    rule_count: int
    train: MetricReport | None = None
    test: MetricReport | None = None
    combined: MetricReport | None = None
    wall_time: float = 0.0
    message: str = ""


@dataclass(frozen=True)
class SweepReport:
    cells: tuple[SweepCell, ...]
    split_seed: int
    n_train: int
    n_test: int

    def __len__(self) -> int:
        return len(self.cells)

    def find(self, input_set: Sequence[str], mf_count: int, family) -> SweepCell:
        family = MfFamily.parse(family)
        key = tuple(input_set)
        for cell in self.cells:
            if cell.input_set == key and cell.mf_count == mf_count and cell.family is family:
                return cell
        raise KeyError((key, mf_count, family.value))


def run_cell(
    train_ds: Dataset,
    test_ds: Dataset,
    input_set: Sequence[str],
    mf_count: int,
    family,
    spec: SweepSpec,
) -> SweepCell:
    """Train and score one (input set, count, family) configuration."""
    family = MfFamily.parse(family)
    input_set = tuple(input_set)
    rule_count = mf_count ** len(input_set)
    limit = default_max_rules() if spec.max_rules is None else spec.max_rules
    t0 = time.perf_counter()
    try:
        X, y, specs = select_regression(train_ds, input_set, spec.output_name)
        Xt, yt, _ = select_regression(test_ds, input_set, spec.output_name)
        model = build_model(
            specs, mf_count, family, spec.output_name,
            normalize=spec.train.normalize_inputs, max_rules=limit,
        )
        model, _ = train(model, X, y, spec.train)
        p_train = predict(model, X)
        p_test = predict(model, Xt)
    except RuleExplosionError as exc:
        return SweepCell(input_set, mf_count, family, SKIPPED, exc.rule_count, message=str(exc))
    except (AnfisError, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.warning("cell %s/%d/%s failed: %s", "+".join(input_set), mf_count, family.value, exc)
        return SweepCell(input_set, mf_count, family, FAILED, rule_count, message=str(exc))
    return SweepCell(
        input_set,
        mf_count,
        family,
        OK,
        rule_count,
        train=metric_report(p_train, y),
        test=metric_report(p_test, yt),
        combined=metric_report(np.concatenate([p_train, p_test]), np.concatenate([y, yt])),
        wall_time=time.perf_counter() - t0,
    )


def run_sweep(dataset: Dataset, spec: SweepSpec = SweepSpec(), jobs: int = 1) -> SweepReport:
    cells = spec.cells()
    if not cells:
        raise ConfigError("sweep grid is empty")
    for inputs in spec.input_sets:
        for name in (*inputs, spec.output_name):
            dataset.index(name)
    tr_idx, te_idx = split_indices(len(dataset), spec.train_frac, spec.split_seed)
    train_ds, test_ds = dataset.take(tr_idx), dataset.take(te_idx)

    def job(cell):
        result = run_cell(train_ds, test_ds, *cell, spec)
        logger.info(
            "%-14s m=%d %-6s %s",
            "+".join(result.input_set), result.mf_count, result.family.value, result.status,
        )
        return result

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(job, cells))
    else:
        results = [job(c) for c in cells]
    return SweepReport(tuple(results), spec.split_seed, len(tr_idx), len(te_idx))


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return f"{value:.17g}"


def report_rows(report: SweepReport, timing: bool = False) -> list[list[str]]:
    rows = []
    for c in report.cells:
        ok = c.status == OK
        rows.append(
            [
                "+".join(c.input_set),
                str(c.mf_count),
                c.family.value,
                c.status,
                str(c.rule_count),
                _fmt(c.train.r2_determination) if ok else "",
                _fmt(c.test.r2_determination) if ok else "",
                _fmt(c.combined.r2_determination) if ok else "",
                _fmt(c.test.rmse) if ok else "",
                f"{c.wall_time:.3f}" if ok and timing else "",
            ]
        )
    return rows


def report_to_csv(report: SweepReport, path, timing: bool = False) -> None:
    """One row per cell.  Wall times are left blank unless ``timing`` so that
    repeated sweeps produce byte-identical files."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(report_rows(report, timing))


def load_report(path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class TrendSummary:
    by_size: dict[int, float]
    by_size_count: dict[tuple[int, int], float]


def trend_summary(report: SweepReport) -> TrendSummary:
    """Best held-out R² per input-set size and per (size, count)."""
    ok = [c for c in report.cells if c.status == OK]
    if not ok:
        raise SummaryError("no successful cells in the sweep report")
    by_size: dict[int, float] = {}
    by_size_count: dict[tuple[int, int], float] = {}
    for c in ok:
        r2 = c.test.r2_determination
        size = len(c.input_set)
        by_size[size] = max(by_size.get(size, -math.inf), r2)
        key = (size, c.mf_count)
        by_size_count[key] = max(by_size_count.get(key, -math.inf), r2)
    return TrendSummary(dict(sorted(by_size.items())), dict(sorted(by_size_count.items())))
