"""Per-phase behaviour of Z_t and the distribution of the order counts n_t."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from src.demand import SequenceLike, as_array
from src.errors import DomainError, InputError
from src.ordering import OrderSchedule, SupplierSeries, cycle_totals, moving_sum, periodic_batch
from src.variance import moving_sum_variance

# phases are flagged as different beyond this many standard errors
FLAG_STANDARD_ERRORS = 5.0


# =============================================================================
# Domain Types
# =============================================================================

@dataclass(frozen=True)
class PhaseStats:
    """Mean and population variance of Z_t at each phase 1..R, plus pooled values."""

    phase_means: np.ndarray
    phase_variances: np.ndarray
    pooled_mean: float
    pooled_variance: float
    M: int

    @property
    def R(self) -> int:
        return self.phase_means.size

    def mixture_variance(self) -> float:
        """Mean of phase variances plus variance of phase means."""
        return float(self.phase_variances.mean() + self.phase_means.var())

    def to_dict(self) -> dict:
        return {
            "phase_means": self.phase_means.tolist(),
            "phase_variances": self.phase_variances.tolist(),
            "pooled_mean": self.pooled_mean,
            "pooled_variance": self.pooled_variance,
            "M": self.M,
        }


@dataclass(frozen=True)
class CountStats:
    """Empirical law of n_t with the binomial and multinomial references beside it."""

    kind: str
    N: int
    R: int
    M: int
    phase_pmf: np.ndarray  # R x (N+1): P(n at phase p = k)
    total_pmf: np.ndarray  # P(sum of n over a cycle = k), k = 0..N*R
    total_mean: float
    total_variance: float
    covariance: np.ndarray  # R x R population covariance of (n_1..n_R)
    binomial_pmf: np.ndarray  # Binomial(N, 1/R) pmf over 0..N
    multinomial_covariance: np.ndarray  # N/R(1-1/R) on the diagonal, -N/R^2 off it
    joint_pmf: Dict[Tuple[int, ...], float] = field(default_factory=dict)
    joint_reference: Dict[Tuple[int, ...], float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "N": self.N,
            "R": self.R,
            "M": self.M,
            "phase_pmf": self.phase_pmf.tolist(),
            "total_pmf": self.total_pmf.tolist(),
            "total_mean": self.total_mean,
            "total_variance": self.total_variance,
            "covariance": self.covariance.tolist(),
            "binomial_pmf": self.binomial_pmf.tolist(),
            "multinomial_covariance": self.multinomial_covariance.tolist(),
            "joint_pmf": [
                {"counts": list(key), "probability": p, "multinomial": self.joint_reference.get(key, 0.0)}
                for key, p in sorted(self.joint_pmf.items())
            ],
        }


@dataclass(frozen=True)
class ErgodicityReport:
    """Pooled, per-phase and per-cycle views of the supplier's order stream."""

    pooled_variance: float
    phase_variances: List[float]
    phase_means: List[float]
    cycle_variance: float
    cycle_variance_per_period: float
    max_variance_gap_se: float
    max_mean_gap_se: float
    threshold_se: float
    non_ergodic: bool

    def to_dict(self) -> dict:
        return {
            "pooled_variance": self.pooled_variance,
            "phase_variances": list(self.phase_variances),
            "phase_means": list(self.phase_means),
            "cycle_variance": self.cycle_variance,
            "cycle_variance_per_period": self.cycle_variance_per_period,
            "max_variance_gap_se": self.max_variance_gap_se,
            "max_mean_gap_se": self.max_mean_gap_se,
            "threshold_se": self.threshold_se,
            "non_ergodic": self.non_ergodic,
        }


@dataclass(frozen=True)
class OverlapReport:
    """Serial correlation and variance of moving sums against periodic batches."""

    R: int
    moving_lag1: float
    periodic_lag1: float
    moving_variance: float
    periodic_variance: float
    expected_moving_lag1: float

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "moving_lag1": self.moving_lag1,
            "periodic_lag1": self.periodic_lag1,
            "moving_variance": self.moving_variance,
            "periodic_variance": self.periodic_variance,
            "expected_moving_lag1": self.expected_moving_lag1,
        }


# =============================================================================
# Phase statistics
# =============================================================================

def phase_stats(supplier: SupplierSeries) -> PhaseStats:
    """Statistics of Z_t grouped by phase (t - 1) mod R."""
    grid = supplier.by_cycle
    return PhaseStats(
        phase_means=grid.mean(axis=0),
        phase_variances=grid.var(axis=0),
        pooled_mean=float(grid.mean()),
        pooled_variance=float(grid.var()),
        M=supplier.config.M,
    )


def _variance_standard_error(grid: np.ndarray) -> np.ndarray:
    """Plug-in standard error of each column's population variance."""
    M = grid.shape[0]
    centered = grid - grid.mean(axis=0)
    m2 = (centered ** 2).mean(axis=0)
    m4 = (centered ** 4).mean(axis=0)
    return np.sqrt(np.maximum(m4 - m2 ** 2, 0.0) / M)


def _max_gap_in_se(values: np.ndarray, errors: np.ndarray) -> float:
    """Largest pairwise |a - b| / sqrt(se_a^2 + se_b^2) over phases."""
    worst = 0.0
    for a in range(values.size):
        for b in range(a + 1, values.size):
            gap = abs(values[a] - values[b])
            if gap == 0:
                continue
            scale = math.hypot(errors[a], errors[b])
            worst = max(worst, math.inf if scale == 0 else gap / scale)
    return worst


def ergodicity_report(supplier: SupplierSeries, threshold_se: float = FLAG_STANDARD_ERRORS) -> ErgodicityReport:
    """Set pooled time-average variance against per-phase and per-cycle variances.

    Flags non-ergodicity when any two phases differ in mean or variance by
    more than `threshold_se` standard errors. The standard errors are
    plug-in estimates from this same run rather than from a separate pilot
    run. This is a diagnostic convention, not a hypothesis test.
    """
    grid = supplier.by_cycle
    M, R = grid.shape
    ps = phase_stats(supplier)
    var_gap = _max_gap_in_se(ps.phase_variances, _variance_standard_error(grid))
    mean_gap = _max_gap_in_se(ps.phase_means, np.sqrt(ps.phase_variances / M))
    totals = cycle_totals(supplier)
    cycle_var = 0.0 if totals.min() == totals.max() else float(totals.var())
    return ErgodicityReport(
        pooled_variance=ps.pooled_variance,
        phase_variances=ps.phase_variances.tolist(),
        phase_means=ps.phase_means.tolist(),
        cycle_variance=cycle_var,
        cycle_variance_per_period=cycle_var / R,
        max_variance_gap_se=var_gap,
        max_mean_gap_se=mean_gap,
        threshold_se=threshold_se,
        non_ergodic=bool(R > 1 and max(var_gap, mean_gap) > threshold_se),
    )


# =============================================================================
# Order-count statistics
# =============================================================================

def count_stats(schedule: OrderSchedule) -> CountStats:
    """Empirical distribution of n_t per phase, per cycle and jointly."""
    cfg = schedule.config
    N, R, M = cfg.N, cfg.R, cfg.M
    counts = schedule.counts()

    phase_pmf = np.stack([np.bincount(counts[:, p], minlength=N + 1) / M for p in range(R)])
    totals = counts.sum(axis=1)
    total_pmf = np.bincount(totals, minlength=N * R + 1) / M

    centered = counts - counts.mean(axis=0)
    covariance = centered.T @ centered / M
    covariance = (covariance + covariance.T) / 2

    p = 1.0 / R
    multinomial_cov = np.full((R, R), -N * p * p)
    np.fill_diagonal(multinomial_cov, N * p * (1 - p))

    joint = Counter(map(tuple, counts.tolist()))
    joint_pmf = {key: n / M for key, n in joint.items()}
    joint_reference = {
        key: float(stats.multinomial.pmf(list(key), n=N, p=[p] * R)) if sum(key) == N else 0.0
        for key in joint_pmf
    }

    return CountStats(
        kind=schedule.kind.value,
        N=N,
        R=R,
        M=M,
        phase_pmf=phase_pmf,
        total_pmf=total_pmf,
        total_mean=float(totals.mean()),
        total_variance=float(totals.var()),
        covariance=covariance,
        binomial_pmf=stats.binom.pmf(np.arange(N + 1), N, p),
        multinomial_covariance=multinomial_cov,
        joint_pmf=joint_pmf,
        joint_reference=joint_reference,
    )


def pmf_table(cs: CountStats) -> List[dict]:
    """Rows (phase, value, probability, binomial) for CSV export."""
    rows = []
    for p in range(cs.R):
        for k in range(cs.N + 1):
            rows.append({
                "phase": p + 1,
                "value": k,
                "probability": float(cs.phase_pmf[p, k]),
                "binomial": float(cs.binomial_pmf[k]),
            })
    return rows


# =============================================================================
# Serial correlation
# =============================================================================

def autocorrelation(series: SequenceLike, lag: int) -> float:
    """Sample autocorrelation at `lag` with population normalization.

    sum_t d_t * d_{t+lag} / sum_t d_t^2, with d the deviations from the mean.
    """
    values = as_array(series)
    if lag < 0:
        raise InputError(f"lag must be >= 0 (got {lag})")
    if values.size <= lag + 1:
        raise InputError(f"series of length {values.size} is too short for lag {lag}")
    if values.min() == values.max():
        raise DomainError("autocorrelation is undefined for a constant (zero-variance) series")
    d = values - values.mean()
    denominator = float(d @ d)
    if lag == 0:
        return 1.0
    return float(d[:-lag] @ d[lag:]) / denominator


def _lag1_or_zero(values: np.ndarray) -> float:
    if values.size <= 2 or values.min() == values.max():
        return 0.0
    return autocorrelation(values, 1)


def overlap_report(seq: SequenceLike, R: int) -> OverlapReport:
    """Lag-1 autocorrelation and variance of moving sums vs periodic batches."""
    sums = moving_sum(seq, R)
    batches = periodic_batch(seq, R).aggregates
    return OverlapReport(
        R=R,
        moving_lag1=_lag1_or_zero(sums),
        periodic_lag1=_lag1_or_zero(batches),
        moving_variance=moving_sum_variance(seq, R),
        periodic_variance=float(batches.var()),
        expected_moving_lag1=(R - 1) / R,
    )

