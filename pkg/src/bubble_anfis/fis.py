"""First-order Sugeno ANFIS with a grid-partitioned rule base.

Layers: fuzzification by per-input membership banks, product firing
strengths, normalization, linear rule consequents, and summation.  A model
optionally works on min-max scaled inputs (``normalized=True``); the raw
ranges live in :class:`InputSpec` so callers always pass data in its own
units.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, InvariantError, ParseError, RuleExplosionError, ShapeError, VersionError
from .membership import MfBank, MfFamily, MfSpec, eval_bank, make_mf_bank

FORMAT_VERSION = 1
DEFAULT_MAX_RULES = 10000


def default_max_rules() -> int:
    """``ANFIS_MAX_RULES`` from the environment, else 10000."""
    raw = os.environ.get("ANFIS_MAX_RULES")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_RULES
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"ANFIS_MAX_RULES must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"ANFIS_MAX_RULES must be positive, got {value}")
    return value


@dataclass(frozen=True)
class InputSpec:
    column_name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"input {self.column_name!r} needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def range(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Rule:
    mf_index_per_input: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AnfisModel:
    """A trained or freshly built ANFIS.

    Attributes:
        inputs: Input columns with their raw data ranges.
        family: Membership family shared by every bank.
        banks: One membership bank per input, in model coordinates.
        rules: Antecedent MF index per input for every rule.
        consequents: ``(n_rules, n_inputs + 1)`` matrix, rows ``[p, q, ..., t]``.
        output_name: Name of the predicted column.
        normalized: Whether banks and consequents act on ``[0, 1]``-scaled inputs.
        provenance: Free-form metadata (seed, config digest, split sizes).
    """

    inputs: tuple[InputSpec, ...]
    family: MfFamily
    banks: tuple[MfBank, ...]
    rules: tuple[Rule, ...]
    consequents: np.ndarray
    output_name: str
    normalized: bool = False
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "banks", tuple(self.banks))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "family", MfFamily.parse(self.family))
        c = np.array(self.consequents, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "consequents", c)
        self._validate()

    def _validate(self):
        n = len(self.inputs)
        if n < 1:
            raise InvariantError("model needs at least one input")
        if len(self.banks) != n:
            raise InvariantError(f"expected {n} membership banks, got {len(self.banks)}")
        for k, bank in enumerate(self.banks):
            if bank.family is not self.family:
                raise InvariantError(f"bank {k} is {bank.family.value}, model family is {self.family.value}")
        expected = int(np.prod([len(b) for b in self.banks]))
        if len(self.rules) != expected:
            raise InvariantError(f"grid partition needs {expected} rules, got {len(self.rules)}")
        for rule in self.rules:
            idx = rule.mf_index_per_input
            if len(idx) != n or any(not 0 <= j < len(b) for j, b in zip(idx, self.banks)):
                raise InvariantError(f"rule {list(idx)} does not index the membership banks")
        if self.consequents.shape != (len(self.rules), n + 1):
            raise InvariantError(
                f"consequents must be {len(self.rules)}x{n + 1}, got "
                f"{'x'.join(map(str, self.consequents.shape))}"
            )

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @property
    def input_names(self) -> list[str]:
        return [s.column_name for s in self.inputs]

    @cached_property
    def rule_matrix(self) -> np.ndarray:
        return np.array([r.mf_index_per_input for r in self.rules], dtype=np.intp).reshape(
            self.n_rules, self.n_inputs
        )

    def premise_params(self) -> list[np.ndarray]:
        return [bank.params for bank in self.banks]

    def replace(self, *, premise: Sequence[np.ndarray] | None = None, consequents=None, provenance=None):
        """Copy of the model with new premise parameters and/or consequents."""
        banks = self.banks
        if premise is not None:
            banks = tuple(b.with_params(p) for b, p in zip(self.banks, premise))
        return AnfisModel(
            inputs=self.inputs,
            family=self.family,
            banks=banks,
            rules=self.rules,
            consequents=self.consequents if consequents is None else consequents,
            output_name=self.output_name,
            normalized=self.normalized,
            provenance=dict(self.provenance if provenance is None else provenance),
        )


def build_model(
    inputs: Sequence[InputSpec],
    mf_count: int,
    family,
    output_name: str,
    *,
    normalize: bool = True,
    max_rules: int | None = None,
) -> AnfisModel:
    """Grid-partition model with ``mf_count`` functions on every input.

    Consequents start at zero.  With ``normalize`` the banks cover ``[0, 1]``
    and inputs are min-max scaled with the :class:`InputSpec` ranges.
    """
    inputs = tuple(inputs)
    family = MfFamily.parse(family)
    if len(inputs) < 1:
        raise ConfigError("model needs at least one input")
    if mf_count < 2:
        raise ConfigError(f"mf_count must be at least 2, got {mf_count}")
    limit = default_max_rules() if max_rules is None else max_rules
    n_rules = mf_count ** len(inputs)
    if n_rules > limit:
        raise RuleExplosionError(n_rules, limit)
    banks = tuple(
        make_mf_bank(k, (0.0, 1.0) if normalize else spec.range, mf_count, family)
        for k, spec in enumerate(inputs)
    )
    rules = tuple(Rule(idx) for idx in itertools.product(range(mf_count), repeat=len(inputs)))
    return AnfisModel(
        inputs=inputs,
        family=family,
        banks=banks,
        rules=rules,
        consequents=np.zeros((n_rules, len(inputs) + 1)),
        output_name=output_name,
        normalized=normalize,
    )


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------


def _as_batch(model: AnfisModel, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.n_inputs:
        raise ShapeError(f"model takes {model.n_inputs} inputs, got array of shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("inputs must be finite")
    return arr, single


def scale_inputs(model: AnfisModel, X: np.ndarray) -> np.ndarray:
    """Raw inputs to model coordinates (identity unless ``normalized``)."""
    if not model.normalized:
        return X
    lo = np.array([s.lo for s in model.inputs])
    hi = np.array([s.hi for s in model.inputs])
    return (X - lo) / (hi - lo)


def _strengths(model: AnfisModel, Xs: np.ndarray) -> np.ndarray:
    rm = model.rule_matrix
    w = None
    for k, bank in enumerate(model.banks):
        mu = eval_bank(bank.family, bank.params, Xs[:, k])
        part = mu[:, rm[:, k]]
        w = part if w is None else w * part
    return w


def firing_strengths(model: AnfisModel, x) -> np.ndarray:
    """Product firing strength of every rule; ``(R,)`` or ``(n, R)``."""
    X, single = _as_batch(model, x)
    w = _strengths(model, scale_inputs(model, X))
    return w[0] if single else w


def _rule_sum(a: np.ndarray) -> np.ndarray:
    # fixed left-to-right order: numpy's reductions regroup differently for batches
    total = a[..., 0].copy()
    for i in range(1, a.shape[-1]):
        total += a[..., i]
    return total


def normalize_strengths(w) -> np.ndarray:
    """Divide strengths by their sum along the last axis."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 0 or w.shape[-1] == 0:
        raise ShapeError("cannot normalize an empty strength vector")
    return w / _rule_sum(w)[..., None]


def _rule_outputs(consequents: np.ndarray, Xs: np.ndarray) -> np.ndarray:
    # elementwise accumulation keeps single-row and batch evaluation bit-identical
    f = np.broadcast_to(consequents[:, -1], (Xs.shape[0], consequents.shape[0])).copy()
    for k in range(Xs.shape[1]):
        f += Xs[:, k : k + 1] * consequents[:, k]
    return f


def predict(model: AnfisModel, X) -> np.ndarray:
    """Model output for every row of ``X``."""
    X, _ = _as_batch(model, X)
    Xs = scale_inputs(model, X)
    wbar = normalize_strengths(_strengths(model, Xs))
    return _rule_sum(wbar * _rule_outputs(model.consequents, Xs))


def forward(model: AnfisModel, x):
    """Output for one point (float) or a batch (array)."""
    arr = np.asarray(x, dtype=float)
    out = predict(model, arr)
    return float(out[0]) if arr.ndim == 1 else out


def design_row(model: AnfisModel, x) -> np.ndarray:
    """Row(s) ``D`` with ``D @ consequents.ravel() == forward(x)``.

    Block ``i`` of a row is ``wbar_i * [x, 1]`` in model coordinates.
    """
    X, single = _as_batch(model, x)
    Xs = scale_inputs(model, X)
    D = design_matrix(normalize_strengths(_strengths(model, Xs)), Xs)
    return D[0] if single else D


def design_matrix(wbar: np.ndarray, Xs: np.ndarray) -> np.ndarray:
    n, r = wbar.shape
    aug = np.hstack([Xs, np.ones((n, 1))])
    return (wbar[:, :, None] * aug[:, None, :]).reshape(n, r * aug.shape[1])


# ---------------------------------------------------------------------------
# model file
# ---------------------------------------------------------------------------


def model_to_dict(model: AnfisModel) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "output_name": model.output_name,
        "family": model.family.value,
        "normalized": model.normalized,
        "inputs": [{"name": s.column_name, "lo": s.lo, "hi": s.hi} for s in model.inputs],
        "banks": [[list(mf.params) for mf in bank.mfs] for bank in model.banks],
        "rules": [list(r.mf_index_per_input) for r in model.rules],
        "consequents": model.consequents.tolist(),
        "provenance": model.provenance,
    }


def save_model(model: AnfisModel, path) -> None:
    """Write the model as JSON; floats are written in shortest round-trip form."""
    text = json.dumps(model_to_dict(model), indent=1, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _field(doc: dict, name: str, kind):
    if name not in doc:
        raise ParseError(f"model file: missing field {name!r}")
    value = doc[name]
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ParseError(f"model file: field {name!r} has wrong type {type(value).__name__}")
    return value


def model_from_dict(doc: dict[str, Any]) -> AnfisModel:
    if not isinstance(doc, dict):
        raise ParseError("model file: top level must be an object")
    version = _field(doc, "format_version", int)
    if version != FORMAT_VERSION:
        raise VersionError(f"model file: format_version {version} unsupported (expected {FORMAT_VERSION})")
    family = MfFamily.parse(_field(doc, "family", str))
    try:
        inputs = tuple(
            InputSpec(str(spec["name"]), float(spec["lo"]), float(spec["hi"]))
            for spec in _field(doc, "inputs", list)
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"model file: field 'inputs' is malformed ({exc})") from None
    raw_banks = _field(doc, "banks", list)
    if len(raw_banks) != len(inputs):
        raise InvariantError(f"model file: {len(raw_banks)} banks for {len(inputs)} inputs")
    normalized = _field(doc, "normalized", bool)
    banks = []
    try:
        for k, (spec, rows) in enumerate(zip(inputs, raw_banks)):
            lo, hi = (0.0, 1.0) if normalized else spec.range
            banks.append(MfBank(k, lo, hi, tuple(MfSpec(family, tuple(map(float, p))) for p in rows)))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"model file: field 'banks' is malformed ({exc})") from None
    try:
        rules = tuple(Rule(tuple(int(j) for j in r)) for r in _field(doc, "rules", list))
        consequents = np.array(_field(doc, "consequents", list), dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"model file: rules/consequents malformed ({exc})") from None
    if consequents.ndim != 2 or consequents.shape[0] != len(rules):
        raise InvariantError(
            f"model file: consequent rows ({consequents.shape[0] if consequents.ndim else 0}) "
            f"must equal rule count ({len(rules)})"
        )
    return AnfisModel(
        inputs=inputs,
        family=family,
        banks=tuple(banks),
        rules=rules,
        consequents=consequents,
        output_name=_field(doc, "output_name", str),
        normalized=normalized,
        provenance=dict(doc.get("provenance") or {}),
    )


def load_model(path) -> AnfisModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file {path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


def models_equal(a: AnfisModel, b: AnfisModel) -> bool:
    """Exact structural equality, comparing every float bit for bit."""
    return model_to_dict(a) == model_to_dict(b) and all(
        np.array_equal(x.params, y.params) for x, y in zip(a.banks, b.banks)
    )
