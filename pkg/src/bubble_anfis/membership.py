"""Parametric membership functions, their parameter gradients and grid banks.

Six families are supported:

==========  ==============================  =========================================
family      parameters                      definition
==========  ==============================  =========================================
gbell       ``[a, b, c]``                   ``1 / (1 + |(x - c) / a| ** (2 b))``
gauss       ``[sigma, c]``                  ``exp(-(x - c)**2 / (2 sigma**2))``
gauss2      ``[sigma1, c1, sigma2, c2]``    left gauss branch times right gauss branch
dsig        ``[a1, c1, a2, c2]``            ``sig(x; a1, c1) - sig(x; a2, c2)``
psig        ``[a1, c1, a2, c2]``            ``sig(x; a1, c1) * sig(x; a2, c2)``
tri         ``[a, b, c]``                   piecewise linear hat with peak at ``b``
==========  ==============================  =========================================

where ``sig(x; a, c) = 1 / (1 + exp(-a (x - c)))``.

All values are clamped to ``[MU_FLOOR, 1]`` so that rule firing strengths
stay strictly positive.  Where the clamp is active the gradient is zero.

The evaluation kernels are vectorized: ``x`` and each parameter may be any
mutually broadcastable arrays.  Banks use this to evaluate ``m`` functions on
``n`` samples at once (``x`` shaped ``(n, 1)``, parameters shaped ``(m,)``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .errors import ConfigError, ParameterDomainError, ParseError

MU_FLOOR = 1e-12

# Half-maximum distance of a unit-sigma gaussian: sqrt(2 ln 2).
_HALF_MAX = 1.1774100225154747


class MfFamily(str, enum.Enum):
    GBELL = "gbell"
    GAUSS = "gauss"
    GAUSS2 = "gauss2"
    DSIG = "dsig"
    PSIG = "psig"
    TRI = "tri"

    @classmethod
    def parse(cls, name: "str | MfFamily") -> "MfFamily":
        if isinstance(name, MfFamily):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise ParseError(f"unknown membership family {name!r} (expected one of {valid})") from None

    def __str__(self) -> str:
        return self.value


PARAM_NAMES: dict[MfFamily, tuple[str, ...]] = {
    MfFamily.GBELL: ("a", "b", "c"),
    MfFamily.GAUSS: ("sigma", "c"),
    MfFamily.GAUSS2: ("sigma1", "c1", "sigma2", "c2"),
    MfFamily.DSIG: ("a1", "c1", "a2", "c2"),
    MfFamily.PSIG: ("a1", "c1", "a2", "c2"),
    MfFamily.TRI: ("a", "b", "c"),
}


def n_params(family: MfFamily | str) -> int:
    return len(PARAM_NAMES[MfFamily.parse(family)])


def check_params(family: MfFamily, params: Sequence[float]) -> None:
    """Raise :class:`ParameterDomainError` unless ``params`` is admissible."""
    family = MfFamily.parse(family)
    p = np.asarray(params, dtype=float)
    expected = n_params(family)
    if p.shape != (expected,):
        raise ParameterDomainError(
            f"{family.value} needs {expected} parameters {PARAM_NAMES[family]}, got shape {p.shape}"
        )
    if not np.all(np.isfinite(p)):
        raise ParameterDomainError(f"{family.value} parameters must be finite, got {p.tolist()}")
    if family is MfFamily.GBELL and not (p[0] > 0 and p[1] > 0):
        raise ParameterDomainError(f"gbell needs a > 0 and b > 0, got a={p[0]}, b={p[1]}")
    if family is MfFamily.GAUSS and not p[0] > 0:
        raise ParameterDomainError(f"gauss needs sigma > 0, got {p[0]}")
    if family is MfFamily.GAUSS2 and not (p[0] > 0 and p[2] > 0):
        raise ParameterDomainError(f"gauss2 needs sigma1, sigma2 > 0, got {p[0]}, {p[2]}")
    if family is MfFamily.TRI and not (p[0] <= p[1] <= p[2] and p[0] < p[2]):
        raise ParameterDomainError(f"tri needs a <= b <= c and a < c, got {p.tolist()}")


@dataclass(frozen=True)
class MfSpec:
    """One membership function: a family tag and its parameter vector."""

    family: MfFamily
    params: tuple[float, ...]

    def __post_init__(self):
        family = MfFamily.parse(self.family)
        object.__setattr__(self, "family", family)
        check_params(family, self.params)
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))

    @property
    def center(self) -> float:
        return _centers(self.family, np.asarray(self.params)[None, :])[0]


@dataclass(frozen=True)
class MfBank:
    """The membership functions covering one input over ``[lo, hi]``."""

    input_index: int
    lo: float
    hi: float
    mfs: tuple[MfSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "mfs", tuple(self.mfs))
        if not self.lo < self.hi:
            raise ConfigError(f"bank range needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.mfs:
            raise ConfigError("membership bank must hold at least one function")
        families = {mf.family for mf in self.mfs}
        if len(families) != 1:
            raise ConfigError(f"a bank holds one family, got {sorted(f.value for f in families)}")
        centers = _centers(self.family, self.params)
        tol = 1e-12 * (self.hi - self.lo)
        if np.any(centers < self.lo - tol) or np.any(centers > self.hi + tol):
            raise ParameterDomainError(
                f"membership centers {centers.tolist()} leave the range [{self.lo}, {self.hi}]"
            )

    @property
    def family(self) -> MfFamily:
        return self.mfs[0].family

    @property
    def params(self) -> np.ndarray:
        """Parameters stacked as an ``(m, n_params)`` array."""
        return np.array([mf.params for mf in self.mfs], dtype=float)

    def __len__(self) -> int:
        return len(self.mfs)

    def with_params(self, params: np.ndarray) -> "MfBank":
        mfs = tuple(MfSpec(self.family, tuple(row)) for row in np.asarray(params, dtype=float))
        return MfBank(self.input_index, self.lo, self.hi, mfs)


def _centers(family: MfFamily, params: np.ndarray) -> np.ndarray:
    if family in (MfFamily.GBELL,):
        return params[:, 2]
    if family is MfFamily.GAUSS:
        return params[:, 1]
    if family is MfFamily.TRI:
        return params[:, 1]
    # two-sided families: midway between the two edge locations
    return 0.5 * (params[:, 1] + params[:, 3])


# ---------------------------------------------------------------------------
# vectorized kernels: raw (unclamped) values and gradients
# ---------------------------------------------------------------------------


def _sig_slope(z):
    # sig(z) * (1 - sig(z)) without cancellation
    return expit(z) * expit(-z)


def _gbell(x, a, b, c, grad):
    d = x - c
    u = np.abs(d) / a
    with np.errstate(divide="ignore", invalid="ignore"):
        logu = np.log(u)
        t = 2.0 * b * logu
        f = expit(-t)
        if not grad:
            return f
        s = _sig_slope(t)
        at_center = u == 0
        da = 2.0 * b * s / a
        db = np.where(at_center, 0.0, -2.0 * logu * s)
        dc = np.where(at_center, 0.0, 2.0 * b * s / np.where(at_center, 1.0, d))
    return f, (da, db, dc)


def _gauss(x, sigma, c, grad):
    d = x - c
    f = np.exp(-(d * d) / (2.0 * sigma * sigma))
    if not grad:
        return f
    return f, (f * d * d / sigma**3, f * d / sigma**2)


def _gauss2(x, s1, c1, s2, c2, grad):
    d1 = x - c1
    d2 = x - c2
    left = d1 < 0
    right = d2 > 0
    g1 = np.where(left, np.exp(-(d1 * d1) / (2.0 * s1 * s1)), 1.0)
    g2 = np.where(right, np.exp(-(d2 * d2) / (2.0 * s2 * s2)), 1.0)
    f = g1 * g2
    if not grad:
        return f
    ds1 = np.where(left, f * d1 * d1 / s1**3, 0.0)
    dc1 = np.where(left, f * d1 / s1**2, 0.0)
    ds2 = np.where(right, f * d2 * d2 / s2**3, 0.0)
    dc2 = np.where(right, f * d2 / s2**2, 0.0)
    return f, (ds1, dc1, ds2, dc2)


def _dsig(x, a1, c1, a2, c2, grad):
    z1 = a1 * (x - c1)
    z2 = a2 * (x - c2)
    f = expit(z1) - expit(z2)
    if not grad:
        return f
    s1 = _sig_slope(z1)
    s2 = _sig_slope(z2)
    return f, (s1 * (x - c1), -s1 * a1, -s2 * (x - c2), s2 * a2)


def _psig(x, a1, c1, a2, c2, grad):
    z1 = a1 * (x - c1)
    z2 = a2 * (x - c2)
    g1 = expit(z1)
    g2 = expit(z2)
    f = g1 * g2
    if not grad:
        return f
    s1 = _sig_slope(z1)
    s2 = _sig_slope(z2)
    return f, (g2 * s1 * (x - c1), -g2 * s1 * a1, g1 * s2 * (x - c2), -g1 * s2 * a2)


def _tri(x, a, b, c, grad):
    x, a, b, c = np.broadcast_arrays(x, a, b, c)
    rising = (x > a) & (x < b)
    falling = (x > b) & (x < c)
    left_w = np.where(rising, b - a, 1.0)
    right_w = np.where(falling, c - b, 1.0)
    f = np.where(rising, (x - a) / left_w, 0.0)
    f = np.where(falling, (c - x) / right_w, f)
    f = np.where(x == b, 1.0, f)
    if not grad:
        return f
    # vertices are kinks: the subgradient there is taken as zero
    da = np.where(rising, (x - b) / left_w**2, 0.0)
    db = np.where(rising, -(x - a) / left_w**2, 0.0)
    db = np.where(falling, (c - x) / right_w**2, db)
    dc = np.where(falling, (x - b) / right_w**2, 0.0)
    return f, (da, db, dc)


_KERNELS = {
    MfFamily.GBELL: _gbell,
    MfFamily.GAUSS: _gauss,
    MfFamily.GAUSS2: _gauss2,
    MfFamily.DSIG: _dsig,
    MfFamily.PSIG: _psig,
    MfFamily.TRI: _tri,
}


def evaluate(family: MfFamily, x, params, *, grad: bool = False):
    """Clamped membership values (and gradients) for broadcastable inputs.

    ``params`` is a sequence of ``n_params(family)`` arrays or scalars.  With
    ``grad=True`` returns ``(values, grads)`` where ``grads`` has the
    parameter axis last.
    """
    kernel = _KERNELS[family]
    if not grad:
        return np.clip(kernel(x, *params, grad=False), MU_FLOOR, 1.0)
    raw, parts = kernel(x, *params, grad=True)
    value = np.clip(raw, MU_FLOOR, 1.0)
    active = (raw > MU_FLOOR) & (raw <= 1.0)
    shape = value.shape
    g = np.stack([np.where(active, np.broadcast_to(p, shape), 0.0) for p in parts], axis=-1)
    return value, g


def eval_mf(mf: MfSpec, x):
    """Membership degree of ``x`` (scalar or array) under ``mf``."""
    out = evaluate(mf.family, np.asarray(x, dtype=float), mf.params)
    return float(out) if np.ndim(out) == 0 else out


def grad_mf(mf: MfSpec, x) -> np.ndarray:
    """Gradient of :func:`eval_mf` with respect to ``mf.params``.

    For scalar ``x`` the result has shape ``(n_params,)``; for an array the
    parameter axis is appended.
    """
    _, g = evaluate(mf.family, np.asarray(x, dtype=float), mf.params, grad=True)
    return g


def eval_bank(family: MfFamily, params: np.ndarray, x: np.ndarray, *, grad: bool = False):
    """Evaluate ``m`` functions of one family on ``n`` samples.

    Returns values shaped ``(n, m)`` and, with ``grad``, gradients shaped
    ``(n, m, n_params)``.
    """
    params = np.asarray(params, dtype=float)
    cols = [params[:, k] for k in range(params.shape[1])]
    return evaluate(family, np.asarray(x, dtype=float)[:, None], cols, grad=grad)


def make_mf_bank(input_index: int, value_range: tuple[float, float], count: int, family) -> MfBank:
    """Grid-partition ``count`` evenly spaced functions over ``value_range``.

    Neighbouring functions cross close to 0.5, midway between centers.
    """
    family = MfFamily.parse(family)
    if count < 2:
        raise ConfigError(f"grid partition needs at least 2 membership functions, got {count}")
    lo, hi = (float(v) for v in value_range)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ConfigError(f"degenerate input range [{lo}, {hi}]")
    spacing = (hi - lo) / (count - 1)
    mfs = []
    for j in range(count):
        center = lo + j * spacing if j < count - 1 else hi
        mfs.append(MfSpec(family, _initial_params(family, center, spacing)))
    return MfBank(input_index, lo, hi, tuple(mfs))


def _initial_params(family: MfFamily, center: float, spacing: float) -> tuple[float, ...]:
    if family is MfFamily.GBELL:
        return (spacing / 2.0, 2.0, center)
    if family is MfFamily.GAUSS:
        return (spacing / 2.354, center)
    if family is MfFamily.TRI:
        return (center - spacing, center, center + spacing)
    if family is MfFamily.GAUSS2:
        sigma = (spacing / 4.0) / _HALF_MAX
        return (sigma, center - spacing / 4.0, sigma, center + spacing / 4.0)
    # Sigmoid edges sit on the midpoints so neighbours cross at 0.5; the slope
    # brings each sigmoid to 0.95 at the plateau edge, a quarter spacing from center.
    slope = np.log(19.0) / (spacing / 4.0)
    if family is MfFamily.DSIG:
        return (slope, center - spacing / 2.0, slope, center + spacing / 2.0)
    return (slope, center - spacing / 2.0, -slope, center + spacing / 2.0)


def project_params(family: MfFamily, params: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Map a bank parameter array back into the admissible domain.

    Widths are floored at ``1e-6 * (hi - lo)``, triangle vertices are sorted
    and centers are shifted back into ``[lo, hi]``.
    """
    p = np.array(params, dtype=float, copy=True)
    floor = 1e-6 * (hi - lo)
    if family is MfFamily.GBELL:
        p[:, 0] = np.maximum(p[:, 0], floor)
        p[:, 1] = np.maximum(p[:, 1], 1e-6)
        p[:, 2] = np.clip(p[:, 2], lo, hi)
    elif family is MfFamily.GAUSS:
        p[:, 0] = np.maximum(p[:, 0], floor)
        p[:, 1] = np.clip(p[:, 1], lo, hi)
    elif family is MfFamily.TRI:
        p.sort(axis=1)
        shift = np.clip(p[:, 1], lo, hi) - p[:, 1]
        p += shift[:, None]
        p[:, 0] = np.minimum(p[:, 0], p[:, 2] - floor)
    else:
        if family is MfFamily.GAUSS2:
            p[:, 0] = np.maximum(p[:, 0], floor)
            p[:, 2] = np.maximum(p[:, 2], floor)
        mid = 0.5 * (p[:, 1] + p[:, 3])
        shift = np.clip(mid, lo, hi) - mid
        p[:, 1] += shift
        p[:, 3] += shift
    return p
