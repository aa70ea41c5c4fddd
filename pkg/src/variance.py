"""Variance decomposition over review cycles and the batching formulas built on it.

Every variance here uses the population divisor (T, R or M). Only with
population divisors does total = within + between hold as an identity.
"""

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np

from src.demand import SequenceLike, as_array
from src.errors import DomainError, InputError
from src.ordering import BatchedSeries, ReviewConfig, moving_sum

DEFAULT_TOLERANCE = 1e-9

SCENARIO_MEANING = {
    "A": "batching preserves demand variance",
    "B": "batching dampens demand variance",
    "C": "batching amplifies demand variance (bullwhip)",
}


@dataclass(frozen=True)
class CycleDecomposition:
    """Law-of-total-variance split of one sequence over review cycles of length R."""

    sigma2_total: float
    sigma2_within: float
    sigma2_between: float
    R: int
    M: int

    @property
    def sigma2_between_sample(self) -> float:
        """Between-cycle variance under the M-1 divisor (nan when M = 1)."""
        if self.M < 2:
            return math.nan
        return self.sigma2_between * self.M / (self.M - 1)

    @property
    def identity_residual(self) -> float:
        return self.sigma2_total - (self.sigma2_within + self.sigma2_between)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ScenarioLabel:
    """Whether batching preserves (A), dampens (B) or amplifies (C) variance."""

    label: str
    lhs: float
    threshold: float
    tolerance: float
    degenerate: bool = False

    @property
    def difference(self) -> float:
        """threshold - lhs; positive means the batched variance exceeds the demand variance."""
        return self.threshold - self.lhs

    @property
    def meaning(self) -> str:
        return SCENARIO_MEANING[self.label]

    def to_dict(self) -> dict:
        record = asdict(self)
        record["difference"] = self.difference
        return record


# =============================================================================
# Decomposition
# =============================================================================

def decompose(seq: SequenceLike, R: int) -> CycleDecomposition:
    """Split the population variance of seq into within- and between-cycle parts."""
    values = as_array(seq)
    if values.size == 0:
        raise InputError("cannot decompose an empty sequence")
    cfg = ReviewConfig.for_length(values.size, R)
    if values.min() == values.max():
        return CycleDecomposition(0.0, 0.0, 0.0, R=R, M=cfg.M)
    cycles = values.reshape(cfg.M, R)
    return CycleDecomposition(
        sigma2_total=float(values.var()),
        sigma2_within=float(cycles.var(axis=1).mean()),
        sigma2_between=float(cycles.mean(axis=1).var()),
        R=R,
        M=cfg.M,
    )


def batched_variance_direct(batched: BatchedSeries) -> float:
    """Population variance (divisor M) of the cycle aggregates."""
    aggregates = batched.aggregates
    if aggregates.size == 0:
        raise InputError("no cycle aggregates")
    if aggregates.min() == aggregates.max():
        return 0.0
    return float(aggregates.var())


def batched_variance_decomp(d: CycleDecomposition) -> float:
    """R^2 * (total - within), the batched variance recovered from the decomposition."""
    return d.R ** 2 * (d.sigma2_total - d.sigma2_within)


def moving_sum_variance(seq: SequenceLike, R: int) -> float:
    """Population variance of the overlapping R-period moving sums."""
    sums = moving_sum(seq, R)
    if sums.min() == sums.max():
        return 0.0
    return float(sums.var())


def _shared_R(decomps: Sequence[CycleDecomposition]) -> int:
    if not decomps:
        raise InputError("need at least one retailer decomposition")
    Rs = sorted({d.R for d in decomps})
    if len(Rs) != 1:
        raise InputError(f"retailer decompositions use different review cycles R={Rs}")
    return Rs[0]


def multi_retailer_variance(decomps: Sequence[CycleDecomposition]) -> float:
    """Sum over retailers of R^2 * (total_j - within_j).

    Predicts the across-cycle variance of Z_i when retailer demands are
    independent.
    """
    _shared_R(decomps)
    return float(sum(batched_variance_decomp(d) for d in decomps))


def asymptotic_variance(sigma2: float, R: int, N: int, within_list: Sequence[float]) -> float:
    """R^2 * N * sigma2 - R^2 * sum(within_j), the long-run form with total_j -> sigma2.

    A negative result is returned as is: it means some within-cycle variance
    exceeds sigma2, which no real decomposition produces.
    """
    within = np.asarray(within_list, dtype=float)
    if within.size != N:
        raise InputError(f"within_list has {within.size} entries, expected N={N}")
    if not (math.isfinite(sigma2) and np.all(np.isfinite(within))):
        raise InputError("sigma2 and within-cycle variances must be finite")
    if not sigma2 > 0:
        raise InputError(f"sigma2 must be > 0 (got {sigma2})")
    return float(R ** 2 * N * sigma2 - R ** 2 * within.sum())


def lpw_correlated_variance(N: int, R: int, m: float, sigma2: float) -> float:
    """N*sigma2 + m^2 * N^2 * (R - 1): the classical correlated-ordering formula.

    Not shift-invariant in m; the m^2 term is what inflates the classical ratio.
    """
    if N < 1 or R < 1:
        raise InputError(f"N and R must be >= 1 (got N={N}, R={R})")
    return N * sigma2 + m ** 2 * N ** 2 * (R - 1)


def bullwhip_ratio(var_orders: float, var_demand: float) -> float:
    if not var_demand > 0:
        raise DomainError(f"bullwhip ratio needs a positive demand variance (got {var_demand})")
    return var_orders / var_demand


# =============================================================================
# Scenario classification
# =============================================================================

def scenario_threshold(R: int) -> float:
    return (R ** 2 - 1) / R ** 2


def _label(within: float, total: float, R: int, tolerance: float) -> ScenarioLabel:
    threshold = scenario_threshold(R)
    if total <= 0:
        # constant input: batching yields a constant order stream
        return ScenarioLabel("A", threshold, threshold, tolerance, degenerate=True)
    lhs = within / total
    if abs(lhs - threshold) <= tolerance:
        label = "A"
    elif lhs > threshold:
        label = "B"
    else:
        label = "C"
    return ScenarioLabel(label, lhs, threshold, tolerance)


def classify_scenario(d: CycleDecomposition, tolerance: float = DEFAULT_TOLERANCE) -> ScenarioLabel:
    """Compare within/total against (R^2 - 1)/R^2 for one retailer."""
    return _label(d.sigma2_within, d.sigma2_total, d.R, tolerance)


def classify_scenario_multi(
    decomps: Sequence[CycleDecomposition],
    tolerance: float = DEFAULT_TOLERANCE,
) -> ScenarioLabel:
    """Pooled comparison sum(within_j)/sum(total_j) against (R^2 - 1)/R^2.

    Realized per-retailer totals stand in for a common sigma2; when every
    total equals sigma2 this is the N * sigma2 form.
    """
    R = _shared_R(decomps)
    within = sum(d.sigma2_within for d in decomps)
    total = sum(d.sigma2_total for d in decomps)
    return _label(within, total, R, tolerance)


def scenario_tally(labels: Sequence[Union[ScenarioLabel, str]], keys: Optional[Sequence[str]] = None) -> dict:
    """Count labels per scenario; accepts ScenarioLabel objects or bare letters."""
    keys = keys or ("A", "B", "C")
    tally = {k: 0 for k in keys}
    for label in labels:
        tally[getattr(label, "label", label)] += 1
    return tally
