"""Strength kernels for the six relation types between two value sequences.

All strengths are normalized into fixed domains:
correlation [-1, 1], similarity [0, 1], causality [0, 1], meta {0, 1},
arithmetic {0, 1}. Lag is not a standalone kernel; it constrains the pairing
of fragments and is attached to every pairwise evaluation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from .datamodel import MetaLabels
from .errors import LengthMismatch, TooShort, UnknownKey

DEFAULT_GRANGER_MAX_LAG = 4
DEFAULT_EQ_TOLERANCE = 1e-6


class RelationKind(str, enum.Enum):
    CORRELATION = "correlation"
    SIMILARITY = "similarity"
    CAUSALITY = "causality"
    LAG = "lag"
    META = "meta"
    ARITHMETIC = "arithmetic"


# (min, max) strength domain per kind; lag has none.
DOMAINS: dict[RelationKind, tuple[float, float]] = {
    RelationKind.CORRELATION: (-1.0, 1.0),
    RelationKind.SIMILARITY: (0.0, 1.0),
    RelationKind.CAUSALITY: (0.0, 1.0),
    RelationKind.META: (0.0, 1.0),
    RelationKind.ARITHMETIC: (0.0, 1.0),
}

# Kinds with a whole-series relation index (used for default-box seeding
# and recommendations).
INDEXED_KINDS = (
    RelationKind.CORRELATION,
    RelationKind.SIMILARITY,
    RelationKind.CAUSALITY,
)

ARITHMETIC_OPERATORS = ("sum", "avg", "var", "min", "max")
ARITHMETIC_COMPARATORS = (">=", "<=", "=")


@dataclass(frozen=True)
class ArithmeticSpec:
    operator: str
    comparator: str

    def __post_init__(self):
        if self.operator not in ARITHMETIC_OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if self.comparator not in ARITHMETIC_COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")


@dataclass(frozen=True)
class GrangerResult:
    f_stat: float
    p_value: float
    singular: bool = False

    @property
    def strength(self) -> float:
        if self.singular:
            return 0.0
        return min(max(1.0 - self.p_value, 0.0), 1.0)


def _check_lengths(a, b, minimum: int = 1):
    if len(a) != len(b):
        raise LengthMismatch(f"length {len(a)} != {len(b)}")
    if len(a) < minimum:
        raise TooShort(f"need at least {minimum} points, got {len(a)}")


def pearson_strength(a, b) -> float:
    """Sample Pearson correlation; defined as 0 when either input is constant."""
    _check_lengths(a, b, minimum=2)
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc)) * math.sqrt(float(yc @ yc))
    if denom == 0.0:
        return 0.0
    r = float(xc @ yc) / denom
    return min(max(r, -1.0), 1.0)


def similarity_strength(a, b) -> float:
    """1 - ED(a, b)/sqrt(L) for inputs min-max-normalized to [0, 1]."""
    _check_lengths(a, b, minimum=1)
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    ed = float(np.linalg.norm(x - y))
    s = 1.0 - ed / math.sqrt(len(x))
    return min(max(s, 0.0), 1.0)


def granger_test(cause, effect, max_lag: int = DEFAULT_GRANGER_MAX_LAG) -> GrangerResult:
    """F-test of whether lags of ``cause`` improve an AR model of ``effect``.

    Fits effect_t ~ effect_{t-1..t-m} (restricted) against the same model
    plus cause_{t-1..t-m} (unrestricted) on the common trimmed sample, both
    with an intercept.
    """
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    _check_lengths(cause, effect)
    x = np.asarray(cause, dtype=float)
    y = np.asarray(effect, dtype=float)
    n = len(y)
    m = max_lag
    # n - 3m - 1 residual degrees of freedom; at least 1 needed for the F-test.
    if n < 3 * m + 2:
        raise TooShort(f"need at least {3 * m + 2} points for max_lag={m}, got {n}")

    ycol = y[m:]
    eff_lags = np.column_stack([y[m - k : n - k] for k in range(1, m + 1)])
    cse_lags = np.column_stack([x[m - k : n - k] for k in range(1, m + 1)])
    ones = np.ones((n - m, 1))
    design_r = np.hstack([eff_lags, ones])
    design_u = np.hstack([eff_lags, cse_lags, ones])

    if np.linalg.matrix_rank(design_u) < design_u.shape[1]:
        return GrangerResult(f_stat=0.0, p_value=1.0, singular=True)

    beta_r = np.linalg.lstsq(design_r, ycol, rcond=None)[0]
    beta_u = np.linalg.lstsq(design_u, ycol, rcond=None)[0]
    rss_r = float(np.sum((ycol - design_r @ beta_r) ** 2))
    rss_u = float(np.sum((ycol - design_u @ beta_u) ** 2))

    df_denom = (n - m) - (2 * m + 1)
    if rss_u <= 0.0:
        # Perfect unrestricted fit: causality is total unless the restricted
        # model is also perfect.
        p = 1.0 if rss_r <= 0.0 else 0.0
        return GrangerResult(f_stat=math.inf if p == 0.0 else 0.0, p_value=p)
    f_stat = (rss_r - rss_u) / m / (rss_u / df_denom)
    p = float(_scipy_stats.f.sf(f_stat, m, df_denom))
    return GrangerResult(f_stat=f_stat, p_value=p)


def granger_strength(cause, effect, max_lag: int = DEFAULT_GRANGER_MAX_LAG) -> float:
    """1 - p of the causality F-test, clamped to [0, 1]; 0 when singular."""
    return granger_test(cause, effect, max_lag).strength


def meta_strength(labels: MetaLabels, series_a: str, series_b: str, key: str) -> float:
    """1 iff both series carry ``key`` with equal values, else 0."""
    if key not in labels.keys:
        raise UnknownKey(f"label key {key!r} is not in the config schema")
    va = labels.get(series_a, key)
    vb = labels.get(series_b, key)
    return 1.0 if va is not None and va == vb else 0.0


def _apply_operator(values: np.ndarray, operator: str) -> float:
    if operator == "sum":
        return float(values.sum())
    if operator == "avg":
        return float(values.mean())
    if operator == "var":
        return float(values.var())  # population variance
    if operator == "min":
        return float(values.min())
    return float(values.max())


def arithmetic_strength(
    a, b, spec: ArithmeticSpec, tol: float = DEFAULT_EQ_TOLERANCE
) -> float:
    """1 iff op(a) cmp op(b) holds on original-unit values, else 0.

    Equality uses relative tolerance ``tol``.
    """
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if len(x) == 0 or len(y) == 0:
        raise TooShort("arithmetic relation needs non-empty fragments")
    va = _apply_operator(x, spec.operator)
    vb = _apply_operator(y, spec.operator)
    if spec.comparator == ">=":
        ok = va >= vb
    elif spec.comparator == "<=":
        ok = va <= vb
    else:
        ok = math.isclose(va, vb, rel_tol=tol, abs_tol=tol)
    return 1.0 if ok else 0.0


@dataclass(frozen=True)
class StrengthContext:
    """Carries the extra inputs some kernels need at dispatch time."""

    labels: MetaLabels | None = None
    series_a: str | None = None
    series_b: str | None = None
    meta_key: str | None = None
    arithmetic: ArithmeticSpec | None = None
    max_lag: int = DEFAULT_GRANGER_MAX_LAG
    eq_tolerance: float = DEFAULT_EQ_TOLERANCE


def strength(kind: RelationKind, a, b, context: StrengthContext | None = None) -> float:
    """Dispatch to the kernel for ``kind``; ``a``/``b`` orientation is
    cause -> effect for causality.
    """
    ctx = context or StrengthContext()
    if kind == RelationKind.CORRELATION:
        return pearson_strength(a, b)
    if kind == RelationKind.SIMILARITY:
        return similarity_strength(a, b)
    if kind == RelationKind.CAUSALITY:
        return granger_strength(a, b, ctx.max_lag)
    if kind == RelationKind.META:
        if ctx.labels is None or ctx.series_a is None or ctx.series_b is None:
            raise ValueError("meta relation needs labels and series names")
        if ctx.meta_key is None:
            raise UnknownKey("meta relation needs a label key")
        return meta_strength(ctx.labels, ctx.series_a, ctx.series_b, ctx.meta_key)
    if kind == RelationKind.ARITHMETIC:
        if ctx.arithmetic is None:
            raise ValueError("arithmetic relation needs an ArithmeticSpec")
        return arithmetic_strength(a, b, ctx.arithmetic, ctx.eq_tolerance)
    raise ValueError(f"kind {kind} has no standalone strength")
