"""Hybrid learning: batch least squares for consequents, gradient descent for premises.

Every epoch solves the ridge-regularized normal equations for the consequent
matrix with the premise parameters frozen, records the training RMSE, then
takes one normalized gradient step on all membership parameters with the
consequents frozen.  The step length adapts with the classical rule: grow by
``step_increase`` after four straight error reductions, shrink by
``step_decrease`` after two consecutive increase/decrease swings.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigError, DataError, ShapeError
from .fis import AnfisModel, design_matrix, normalize_strengths, scale_inputs
from .membership import eval_bank, project_params

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 700
    initial_step: float = 0.01
    step_increase: float = 1.1
    step_decrease: float = 0.9
    ridge_lambda: float = 1e-8
    seed: int = 0
    normalize_inputs: bool = True

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs}")
        if not self.initial_step > 0:
            raise ConfigError(f"initial_step must be positive, got {self.initial_step}")
        if not 0 < self.step_decrease < 1 < self.step_increase:
            raise ConfigError(
                "need 0 < step_decrease < 1 < step_increase, got "
                f"{self.step_decrease} and {self.step_increase}"
            )
        if not self.ridge_lambda >= 0:
            raise ConfigError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    rmse: float
    step: float


@dataclass
class TrainTrace:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def best_rmse(self) -> float:
        return self.records[self.best_epoch - 1].rmse

    def __len__(self) -> int:
        return len(self.records)

    def to_csv(self, path) -> None:
        lines = ["epoch,rmse,step"]
        lines += [f"{r.epoch},{r.rmse:.17g},{r.step:.17g}" for r in self.records]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")


def _check_data(model: AnfisModel, X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[1] != model.n_inputs:
        raise ShapeError(f"X must be (n, {model.n_inputs}), got shape {X.shape}")
    if X.shape[0] < 1:
        raise ShapeError("need at least one sample")
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"y has {y.shape[0]} entries for {X.shape[0]} samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("X and y must be finite")
    return X, y


class _Pass:
    """Membership values, firing strengths and design matrix for one premise state."""

    def __init__(self, model: AnfisModel, Xs: np.ndarray, premise: list[np.ndarray], grad: bool):
        self.Xs = Xs
        rm = model.rule_matrix
        self.mu, self.dmu = [], []
        w = None
        for k, (bank, params) in enumerate(zip(model.banks, premise)):
            if grad:
                mu, dmu = eval_bank(bank.family, params, Xs[:, k], grad=True)
                self.dmu.append(dmu)
            else:
                mu = eval_bank(bank.family, params, Xs[:, k])
            self.mu.append(mu)
            part = mu[:, rm[:, k]]
            w = part if w is None else w * part
        self.w = w
        self.wbar = normalize_strengths(w)
        self.D = design_matrix(self.wbar, Xs)


def _solve_ridge(D: np.ndarray, y: np.ndarray, ridge_lambda: float) -> np.ndarray:
    G = D.T @ D
    G[np.diag_indices_from(G)] += ridge_lambda
    rhs = D.T @ y
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(G, check_finite=False), rhs, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        logger.debug("normal equations not positive definite; falling back to lstsq")
        return scipy.linalg.lstsq(G, rhs, check_finite=False)[0]


def _lse(model: AnfisModel, p: _Pass, y: np.ndarray, ridge_lambda: float):
    theta = _solve_ridge(p.D, y, ridge_lambda)
    resid = y - p.D @ theta
    return theta.reshape(model.n_rules, model.n_inputs + 1), float(resid @ resid)


def fit_consequents_lse(model: AnfisModel, X, y, ridge_lambda: float = 1e-8):
    """Least-squares consequents for fixed premises.

    Minimizes ``||y - D c||^2 + ridge_lambda ||c||^2`` over the flattened
    consequent matrix ``c``.  Returns ``(consequents, sse)`` where ``sse`` is
    the unregularized residual sum of squares.
    """
    X, y = _check_data(model, X, y)
    if ridge_lambda < 0:
        raise ConfigError(f"ridge_lambda must be >= 0, got {ridge_lambda}")
    p = _Pass(model, scale_inputs(model, X), model.premise_params(), grad=False)
    return _lse(model, p, y, ridge_lambda)


def _premise_grad(model: AnfisModel, p: _Pass, consequents: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    aug_f = p.Xs @ consequents[:, :-1].T + consequents[:, -1]
    yhat = np.sum(p.wbar * aug_f, axis=1)
    err = yhat - y
    # d yhat / d w_i = (f_i - yhat) / sum(w); w_i / mu_kj recovers the other factors
    g_rule = p.wbar * (aug_f - yhat[:, None])
    rm = model.rule_matrix
    grads = []
    for k, (mu, dmu) in enumerate(zip(p.mu, p.dmu)):
        m = mu.shape[1]
        onehot = np.zeros((model.n_rules, m))
        onehot[np.arange(model.n_rules), rm[:, k]] = 1.0
        dE_dmu = 2.0 * err[:, None] * (g_rule @ onehot) / mu
        grads.append(np.einsum("nm,nmp->mp", dE_dmu, dmu))
    return grads


def premise_gradient(model: AnfisModel, X, y) -> list[np.ndarray]:
    """Gradient of the training SSE with respect to every membership parameter.

    Consequents are held at their current values.  One ``(m, n_params)``
    array per input bank.
    """
    X, y = _check_data(model, X, y)
    p = _Pass(model, scale_inputs(model, X), model.premise_params(), grad=True)
    return _premise_grad(model, p, model.consequents, y)


class _StepSchedule:
    def __init__(self, config: TrainConfig):
        self.step = config.initial_step
        self.up = config.step_increase
        self.down = config.step_decrease
        self._window: list[float] = []

    def update(self, error: float) -> None:
        self._window.append(error)
        if len(self._window) < 5:
            return
        signs = np.sign(np.diff(self._window[-5:]))
        if np.all(signs < 0):
            self.step *= self.up
            self._window = self._window[-1:]
        elif np.all(signs[:-1] * signs[1:] < 0):
            self.step *= self.down
            self._window = self._window[-1:]


def train(model: AnfisModel, X, y, config: TrainConfig = TrainConfig()) -> tuple[AnfisModel, TrainTrace]:
    """Hybrid training; returns the best-RMSE snapshot and the per-epoch trace."""
    X, y = _check_data(model, X, y)
    if config.normalize_inputs != model.normalized:
        raise ConfigError(
            f"config.normalize_inputs={config.normalize_inputs} but model.normalized={model.normalized}; "
            "build the model with the matching normalize flag"
        )
    Xs = scale_inputs(model, X)
    n = X.shape[0]
    premise = model.premise_params()
    bounds = [(b.lo, b.hi) for b in model.banks]
    schedule = _StepSchedule(config)
    trace = TrainTrace()
    best_rmse, best_premise = np.inf, premise

    for epoch in range(1, config.epochs + 1):
        p = _Pass(model, Xs, premise, grad=True)
        consequents, sse = _lse(model, p, y, config.ridge_lambda)
        rmse = float(np.sqrt(sse / n))
        trace.records.append(EpochRecord(epoch, rmse, schedule.step))
        if rmse < best_rmse:
            best_rmse, best_premise, trace.best_epoch = rmse, premise, epoch
        if epoch == config.epochs:
            break
        grads = _premise_grad(model, p, consequents, y)
        norm = float(np.sqrt(sum(np.sum(g * g) for g in grads)))
        if norm > 0 and np.isfinite(norm):
            scale = schedule.step / norm
            premise = [
                project_params(model.family, q - scale * g, lo, hi)
                for q, g, (lo, hi) in zip(premise, grads, bounds)
            ]
        schedule.update(rmse)
        logger.debug("epoch %d rmse %.6g step %.4g", epoch, rmse, schedule.step)

    best = model.replace(premise=best_premise)
    consequents, _ = fit_consequents_lse(best, X, y, config.ridge_lambda)
    provenance = dict(model.provenance)
    provenance.update(
        {
            "seed": config.seed,
            "epochs": config.epochs,
            "train_config": asdict(config),
            "train_config_digest": config.digest(),
            "best_epoch": trace.best_epoch,
            "train_rmse": best_rmse,
        }
    )
    return best.replace(consequents=consequents, provenance=provenance), trace
