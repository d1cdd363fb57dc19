"""Five-phase classification and dust-dimension analytics.

The phase of a model depends only on the alphabet size and the declared
tail behaviour of the rates:

* lower subcritical  iff  sum |S|^n r_n < inf
* upper subcritical  iff  that sum diverges but sum r_n < inf
* semicritical       iff  sum r_n = inf and the Cesaro limsup is 0
* critical           iff  the Cesaro limsup lies in (0, inf); the dust then
  vanishes at the deterministic time t0 = log|S| / limsup
* supercritical      iff  the Cesaro limsup is infinite

On the Cantor geometry the dust's Hausdorff dimension is
``max(0, (log|S| - t*limsup) / log(2|S| - 1))``; the per-level contraction
is constant, so the geometric exponent is exact, not estimated.  The
empirical estimator regresses log survivor counts against depth and
conditions on survival (unconditioned estimates are meaningless once
extinction dominates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .flow import SurvivorTree
from .rates import TailMeta
from .space import Geometry, GeometryKind


class PhaseLabel(Enum):
    LOWER_SUBCRITICAL = "LowerSubcritical"
    UPPER_SUBCRITICAL = "UpperSubcritical"
    SEMICRITICAL = "Semicritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"


@dataclass(frozen=True)
class Phase:
    """Classification outcome; ``critical_time`` is set exactly when Critical."""

    label: PhaseLabel
    critical_time: float | None = None

    def __post_init__(self) -> None:
        if (self.label is PhaseLabel.CRITICAL) != (self.critical_time is not None):
            raise ValueError("critical_time is present iff the phase is Critical")


class NoSurvivorsError(RuntimeError):
    """Every replicate went extinct; the conditional estimator is undefined."""


@dataclass(frozen=True)
class DimensionReport:
    """Empirical dust dimension, conditioned on survival to the full depth."""

    t: float
    analytic_dim: float | None
    empirical_dim: float
    half_width: float
    conditioned_on_survival: bool
    replicates_used: int

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "analytic_dim": self.analytic_dim,
            "empirical_dim": self.empirical_dim,
            "half_width": self.half_width,
            "conditioned_on_survival": self.conditioned_on_survival,
            "replicates_used": self.replicates_used,
        }


def classify(alphabet_size: int, tail: TailMeta) -> Phase:
    """Assign the unique phase determined by the tail metadata."""
    if alphabet_size < 2:
        raise ValueError("alphabet size must be >= 2")
    if tail.sum_weighted_finite:
        return Phase(PhaseLabel.LOWER_SUBCRITICAL)
    if not math.isinf(tail.rate_sum):
        return Phase(PhaseLabel.UPPER_SUBCRITICAL)
    limsup = tail.cesaro_limsup
    if limsup == 0:
        return Phase(PhaseLabel.SEMICRITICAL)
    if math.isinf(limsup):
        return Phase(PhaseLabel.SUPERCRITICAL)
    return Phase(PhaseLabel.CRITICAL, critical_time=critical_time(alphabet_size, limsup))


def critical_time(alphabet_size: int, cesaro_limsup: float) -> float:
    """t0 = log|S| / limsup, defined only for limsup in (0, inf)."""
    if not 0 < cesaro_limsup < math.inf:
        raise ValueError(f"critical time needs a limsup in (0, inf), got {cesaro_limsup}")
    return math.log(alphabet_size) / cesaro_limsup


def _check_cantor(geometry: Geometry) -> None:
    if geometry.kind is not GeometryKind.CANTOR_SET:
        raise ValueError(
            "dimension formulas need compact similar cells; the half-open "
            "interval geometry does not qualify"
        )


def geometric_exponent(alphabet_size: int) -> float:
    """Per-level log contraction of the Cantor cells: log(2|S| - 1)."""
    return math.log(2 * alphabet_size - 1)


def space_dimension(alphabet_size: int, geometry: Geometry = Geometry(GeometryKind.CANTOR_SET)) -> float:
    """Hausdorff dimension of the whole Cantor space: log|S| / log(2|S|-1)."""
    _check_cantor(geometry)
    return math.log(alphabet_size) / geometric_exponent(alphabet_size)


def dust_dimension_analytic(
    alphabet_size: int,
    cesaro_limsup: float,
    t: float,
    geometry: Geometry = Geometry(GeometryKind.CANTOR_SET),
) -> float:
    """max(0, (log|S| - t*limsup) / log(2|S|-1)).

    Meaningful where the dust survives with positive probability; at a
    limsup of 0 the dimension equals the space's for every t.
    """
    _check_cantor(geometry)
    if t < 0:
        raise ValueError("t must be >= 0")
    if cesaro_limsup < 0 or math.isinf(cesaro_limsup):
        raise ValueError("need a finite nonnegative Cesaro limsup")
    value = (math.log(alphabet_size) - t * cesaro_limsup) / geometric_exponent(alphabet_size)
    return max(0.0, value)


def dust_dimension_empirical(
    trees: list[SurvivorTree],
    geometry: Geometry = Geometry(GeometryKind.CANTOR_SET),
    analytic_dim: float | None = None,
) -> DimensionReport:
    """Box-count style slope estimate from replicate survivor counts.

    Keeps only replicates surviving to the full depth, regresses
    ``log B_n`` on ``n * log(2|S|-1)`` over the upper half of the levels,
    and reports the across-replicate mean slope with a 1.96-standard-error
    half width.
    """
    _check_cantor(geometry)
    if not trees:
        raise ValueError("need at least one replicate")
    depth = trees[0].depth
    t = trees[0].t
    size = trees[0].alphabet_size
    if depth < 2:
        raise ValueError("depth too small for a slope estimate")
    for tree in trees:
        if tree.depth != depth or tree.t != t or tree.alphabet_size != size:
            raise ValueError("replicates must share (t, depth, alphabet)")

    surviving = [tree for tree in trees if tree.counts[depth] >= 1]
    if not surviving:
        raise NoSurvivorsError(
            f"no replicate survived to depth {depth}; cannot condition on survival"
        )

    levels = np.arange(depth // 2 + 1, depth + 1)
    x = levels * geometric_exponent(size)
    slopes = []
    for tree in surviving:
        y = np.log(np.asarray(tree.counts, dtype=float)[levels])
        slopes.append(float(np.polyfit(x, y, 1)[0]))
    slopes_arr = np.asarray(slopes)
    mean = float(slopes_arr.mean())
    stderr = float(slopes_arr.std(ddof=1) / math.sqrt(len(slopes))) if len(slopes) > 1 else math.inf
    return DimensionReport(
        t=t,
        analytic_dim=analytic_dim,
        empirical_dim=mean,
        half_width=1.96 * stderr,
        conditioned_on_survival=True,
        replicates_used=len(surviving),
    )
