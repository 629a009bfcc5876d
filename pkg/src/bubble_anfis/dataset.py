"""Data plane: analytic bubble-column surrogate, CSV I/O, selection and splitting.

The surrogate replaces a CFD solve with a hydrostatic two-phase pressure
gradient.  Local gas holdup follows

    eps = eps0 * (v / v_ref) ** exponent * (1 - (r / R) ** 2) ** 2 * (0.6 + 0.4 z / H)

clamped to ``[0, 0.5]``, and ``dp/dz = -g (rho_L (1 - eps) + rho_G eps)``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, DomainError, ParseError, SelectionError
from .fis import InputSpec


@dataclass(frozen=True)
class Column:
    name: str
    unit: str = ""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-labelled numeric table."""

    columns: tuple[Column, ...]
    rows: np.ndarray

    def __post_init__(self):
        cols = tuple(c if isinstance(c, Column) else Column(*c) for c in self.columns)
        object.__setattr__(self, "columns", cols)
        rows = np.array(self.rows, dtype=float).reshape(-1, len(cols)) if len(cols) else np.empty((0, 0))
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        names = [c.name for c in cols]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise SelectionError(f"duplicate column names: {dup}")
        if not np.all(np.isfinite(rows)):
            raise DataError("dataset values must be finite")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SelectionError(f"unknown column {name!r}; available: {self.names}") from None

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.index(name)]

    def take(self, indices) -> "Dataset":
        return Dataset(self.columns, self.rows[np.asarray(indices, dtype=np.intp)])


# ---------------------------------------------------------------------------
# surrogate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurrogateParams:
    R: float = 0.144
    H: float = 2.6
    v_ref: float = 0.005
    eps0: float = 0.1
    exponent: float = 0.8
    rho_L: float = 998.0
    rho_G: float = 1.2
    g: float = 9.81
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("R", "H", "v_ref", "rho_L", "rho_G", "g"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"surrogate parameter {name} must be positive, got {getattr(self, name)}")
        if not 0 < self.eps0 < 0.5:
            raise ConfigError(f"eps0 must lie in (0, 0.5), got {self.eps0}")
        if not self.noise_sd >= 0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")


@dataclass(frozen=True)
class GridSpec:
    n_r: int = 10
    n_theta: int = 12
    n_z: int = 10
    velocities: tuple[float, ...] = (0.0025, 0.005, 0.0075, 0.01, 0.0125)

    def __post_init__(self):
        object.__setattr__(self, "velocities", tuple(float(v) for v in self.velocities))
        if min(self.n_r, self.n_theta, self.n_z) < 1:
            raise ConfigError("grid counts must be >= 1")
        v = np.asarray(self.velocities)
        if v.size == 0 or np.any(v <= 0) or np.any(np.diff(v) <= 0):
            raise ConfigError(f"velocities must be positive and strictly increasing, got {self.velocities}")

    @property
    def n_rows(self) -> int:
        return self.n_r * self.n_theta * self.n_z * len(self.velocities)


SURROGATE_COLUMNS = (
    Column("x", "m"),
    Column("y", "m"),
    Column("z", "m"),
    Column("v_as", "m/s"),
    Column("dpdz", "Pa/m"),
)


def gas_holdup(x, y, z, v, p: SurrogateParams = SurrogateParams()):
    x, y, z, v = (np.asarray(a, dtype=float) for a in (x, y, z, v))
    r2 = (x * x + y * y) / (p.R * p.R)
    tol = 1e-12
    if np.any(r2 > 1 + tol):
        raise DomainError(f"point outside the column radius R={p.R}")
    if np.any(z < -tol * p.H) or np.any(z > p.H * (1 + tol)):
        raise DomainError(f"height outside [0, {p.H}]")
    if np.any(v <= 0):
        raise DomainError("superficial velocity must be positive")
    radial = np.square(1.0 - np.minimum(r2, 1.0))
    eps = p.eps0 * (v / p.v_ref) ** p.exponent * radial * (0.6 + 0.4 * z / p.H)
    return np.clip(eps, 0.0, 0.5)


def surrogate_dpdz(x, y, z, v, p: SurrogateParams = SurrogateParams(), rng: np.random.Generator | None = None):
    """Axial pressure gradient in Pa/m; scalar in, float out.

    Gaussian noise with ``p.noise_sd`` is drawn from ``rng`` (seeded from
    ``p.seed`` when omitted).
    """
    eps = gas_holdup(x, y, z, v, p)
    dpdz = -p.g * (p.rho_L * (1.0 - eps) + p.rho_G * eps)
    if p.noise_sd > 0:
        rng = np.random.default_rng(p.seed) if rng is None else rng
        dpdz = dpdz + rng.normal(0.0, p.noise_sd, size=np.shape(dpdz))
    return float(dpdz) if np.ndim(dpdz) == 0 else dpdz


def grid_axes(grid: GridSpec, p: SurrogateParams) -> dict[str, np.ndarray]:
    """Node coordinates: cell-centred in r and z, uniform in angle."""
    return {
        "r": p.R * (np.arange(grid.n_r) + 0.5) / grid.n_r,
        "theta": 2.0 * np.pi * np.arange(grid.n_theta) / grid.n_theta,
        "z": p.H * (np.arange(grid.n_z) + 0.5) / grid.n_z,
        "v": np.asarray(grid.velocities),
    }


def _cylinder_rows(r, theta, z, v, p: SurrogateParams, noise: bool) -> Dataset:
    pts = np.array(list(itertools.product(r, theta, z, v)), dtype=float).reshape(-1, 4)
    x = pts[:, 0] * np.cos(pts[:, 1])
    y = pts[:, 0] * np.sin(pts[:, 1])
    params = p if noise else SurrogateParams(**{**p.__dict__, "noise_sd": 0.0})
    dpdz = np.asarray(surrogate_dpdz(x, y, pts[:, 2], pts[:, 3], params))
    return Dataset(SURROGATE_COLUMNS, np.column_stack([x, y, pts[:, 2], pts[:, 3], dpdz]))


def generate_surrogate(grid: GridSpec = GridSpec(), params: SurrogateParams = SurrogateParams()) -> Dataset:
    """One row per (r, theta, z, v) node, velocity varying fastest."""
    ax = grid_axes(grid, params)
    return _cylinder_rows(ax["r"], ax["theta"], ax["z"], ax["v"], params, noise=True)


def midpoint_queries(grid: GridSpec = GridSpec(), params: SurrogateParams = SurrogateParams()) -> Dataset:
    """Spatial points midway between neighbouring grid nodes.

    Radius and height take the midpoints of consecutive nodes and the angle is
    offset by half a step, so no point coincides with a node of
    :func:`generate_surrogate`.  The velocities are the sampled operating
    conditions themselves.  The ``dpdz`` column holds the noiseless
    surrogate value.
    """
    ax = grid_axes(grid, params)

    def mids(a):
        return 0.5 * (a[1:] + a[:-1]) if a.size > 1 else a

    theta = ax["theta"] + np.pi / grid.n_theta
    return _cylinder_rows(mids(ax["r"]), theta, mids(ax["z"]), ax["v"], params, noise=False)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _header_cell(col: Column) -> str:
    return f"{col.name}[{col.unit}]"


def _parse_header_cell(cell: str, position: int) -> Column:
    cell = cell.strip()
    if cell.endswith("]") and "[" in cell:
        name, unit = cell[:-1].split("[", 1)
    else:
        name, unit = cell, ""
    name = name.strip()
    if not name:
        raise ParseError(f"header column {position}: empty column name")
    return Column(name, unit.strip())


def write_csv(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(_header_cell(c) for c in dataset.columns) + "\n")
        for row in dataset.rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_csv(path) -> Dataset:
    """Read a numeric CSV with a ``name[unit]`` header.

    Errors cite the 1-based data row (the header is not counted).
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: missing header") from None
        if not any(cell.strip() for cell in header):
            raise ParseError(f"{path}: missing header")
        columns = [_parse_header_cell(c, i + 1) for i, c in enumerate(header)]
        names = [c.name for c in columns]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ParseError(f"{path}: duplicate column names {dup}")
        rows = []
        for lineno, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(columns):
                raise ParseError(
                    f"{path}: row {lineno} has {len(record)} cells, header has {len(columns)}"
                )
            values = []
            for cell, col in zip(record, columns):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {lineno}, column {col.name!r}: non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise ParseError(f"{path}: row {lineno}, column {col.name!r}: non-finite value")
                values.append(value)
            rows.append(values)
    return Dataset(tuple(columns), np.array(rows, dtype=float).reshape(len(rows), len(columns)))


# ---------------------------------------------------------------------------
# selection and splitting
# ---------------------------------------------------------------------------


def select_regression(dataset: Dataset, input_names: Sequence[str], output_name: str):
    """Pick input columns and a target column.

    Returns ``(X, y, inputs)`` with :class:`InputSpec` ranges set to the
    observed column min/max.
    """
    input_names = list(input_names)
    if not input_names:
        raise SelectionError("select at least one input column")
    if len(set(input_names)) != len(input_names):
        raise SelectionError(f"duplicated input columns in {input_names}")
    if output_name in input_names:
        raise SelectionError(f"output column {output_name!r} is also listed as an input")
    idx = [dataset.index(n) for n in input_names]
    y = dataset.column(output_name).copy()
    X = dataset.rows[:, idx].copy()
    if X.shape[0] == 0:
        raise SelectionError("dataset has no rows")
    specs = []
    for name, col in zip(input_names, X.T):
        lo, hi = float(col.min()), float(col.max())
        if not lo < hi:
            raise SelectionError(f"input column {name!r} is constant ({lo}); it carries no information")
        specs.append(InputSpec(name, lo, hi))
    return X, y, specs


def split_indices(n: int, train_frac: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < train_frac < 1:
        raise ConfigError(f"train_frac must lie in (0, 1), got {train_frac}")
    n_train = int(math.floor(n * train_frac + 0.5))
    if n_train < 1 or n_train >= n:
        raise ConfigError(f"split of {n} rows at {train_frac} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:n_train], perm[n_train:]


def split(dataset: Dataset, train_frac: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first ``round(n * train_frac)`` rows train."""
    tr, te = split_indices(len(dataset), train_frac, seed)
    return dataset.take(tr), dataset.take(te)
