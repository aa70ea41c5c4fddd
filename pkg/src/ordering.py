"""Order schedules, batching operators and the supplier's order stream.

Timeline conventions:
- periods t = 1..T are grouped into M review cycles of R periods;
  period t belongs to cycle (t-1)//R + 1 at phase (t-1) % R + 1.
- a retailer ordering in cycle i orders its own cycle-i demand batch.
  This is a one-cycle shift against "the previous R periods" and leaves
  every variance unchanged.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.demand import SequenceLike, as_array, make_rng
from src.errors import ConfigurationError, InputError


class ScheduleKind(str, Enum):
    CORRELATED = "correlated"
    BALANCED = "balanced"
    RANDOM = "random"
    LPW_BINOMIAL = "lpw_binomial"

    @property
    def once_per_cycle(self) -> bool:
        """Whether every retailer orders exactly once per review cycle."""
        return self is not ScheduleKind.LPW_BINOMIAL


SCHEDULE_KINDS = tuple(kind.value for kind in ScheduleKind)


# =============================================================================
# Domain Types
# =============================================================================

@dataclass(frozen=True)
class ReviewConfig:
    """Batching geometry: R periods per cycle, N retailers, M cycles."""

    R: int
    N: int
    M: int

    def __post_init__(self):
        bad = [name for name in ("R", "N", "M") if not _is_positive_int(getattr(self, name))]
        if bad:
            raise ConfigurationError(
                f"{', '.join(bad)} must be integers >= 1 "
                f"(got R={self.R}, N={self.N}, M={self.M})",
                fields=tuple(bad),
            )

    @property
    def T(self) -> int:
        return self.R * self.M

    @classmethod
    def for_length(cls, T: int, R: int, N: int = 1) -> "ReviewConfig":
        """Geometry for a sequence of length T; T must be a multiple of R."""
        if not _is_positive_int(R):
            raise ConfigurationError(f"R must be an integer >= 1 (got {R})", fields=("R",))
        if T % R:
            raise ConfigurationError(
                f"T={T} is not divisible by R={R}; sequences are never truncated",
                fields=("T", "R"),
            )
        return cls(R=R, N=N, M=T // R)


@dataclass(frozen=True, eq=False)
class OrderSchedule:
    """Which retailer orders in which period.

    correlated/balanced/random: `phases` is an M x N table of phases in 1..R.
    lpw_binomial: `triggers` is an M x R x N boolean table.
    """

    kind: ScheduleKind
    config: ReviewConfig
    phases: Optional[np.ndarray] = None
    triggers: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        cfg = self.config
        if self.kind.once_per_cycle:
            if self.phases is None or self.phases.shape != (cfg.M, cfg.N):
                raise InputError(f"{self.kind.value} schedule needs an M x N phase table")
            if self.phases.min() < 1 or self.phases.max() > cfg.R:
                raise InputError(f"phases must lie in 1..{cfg.R}")
            self.phases.setflags(write=False)
        else:
            if self.triggers is None or self.triggers.shape != (cfg.M, cfg.R, cfg.N):
                raise InputError("lpw_binomial schedule needs an M x R x N trigger table")
            self.triggers.setflags(write=False)

    def order_mask(self) -> np.ndarray:
        """M x R x N boolean table: retailer j orders at (cycle i, phase p)."""
        if self.triggers is not None:
            return self.triggers
        cfg = self.config
        mask = np.zeros((cfg.M, cfg.R, cfg.N), dtype=bool)
        cycles, retailers = np.indices((cfg.M, cfg.N))
        mask[cycles, self.phases - 1, retailers] = True
        return mask

    def counts(self) -> np.ndarray:
        """M x R matrix of n_t, the number of retailers ordering in each period."""
        cfg = self.config
        if self.triggers is not None:
            return self.triggers.sum(axis=2)
        counts = np.zeros((cfg.M, cfg.R), dtype=np.int64)
        cycles = np.repeat(np.arange(cfg.M), cfg.N)
        np.add.at(counts, (cycles, self.phases.ravel() - 1), 1)
        return counts

    def orders_per_cycle(self) -> np.ndarray:
        """M x N matrix: how many times retailer j ordered in cycle i."""
        if self.triggers is not None:
            return self.triggers.sum(axis=1)
        return np.ones((self.config.M, self.config.N), dtype=np.int64)

    def to_rows(self) -> List[dict]:
        """Rows for CSV export (1-based cycle, retailer, phase)."""
        cfg = self.config
        rows = []
        if self.triggers is None:
            for i in range(cfg.M):
                for j in range(cfg.N):
                    rows.append({"cycle": i + 1, "retailer": j + 1, "phase": int(self.phases[i, j])})
        else:
            for i in range(cfg.M):
                for p in range(cfg.R):
                    for j in range(cfg.N):
                        rows.append({
                            "cycle": i + 1,
                            "phase": p + 1,
                            "retailer": j + 1,
                            "ordered": int(self.triggers[i, p, j]),
                        })
        return rows


@dataclass(frozen=True, eq=False)
class BatchedSeries:
    """Per-cycle demand aggregates xi_agg^(i) of one retailer."""

    aggregates: np.ndarray
    R: int

    @property
    def M(self) -> int:
        return self.aggregates.size


@dataclass(frozen=True, eq=False)
class SupplierSeries:
    """Z_t, the total quantity the supplier receives in each period."""

    Z: np.ndarray
    config: ReviewConfig
    kind: ScheduleKind
    demand_batches: np.ndarray = field(repr=False)

    @property
    def by_cycle(self) -> np.ndarray:
        """Z reshaped to M x R (row = cycle, column = phase)."""
        return self.Z.reshape(self.config.M, self.config.R)

    @property
    def cycle_gaps(self) -> np.ndarray:
        """Per-cycle received minus demanded quantity (0 when demand is conserved)."""
        return self.by_cycle.sum(axis=1) - self.demand_batches.sum(axis=0)

    @property
    def conservation_gap(self) -> float:
        return float(self.cycle_gaps.sum())

    def to_rows(self) -> List[dict]:
        return [{"t": t + 1, "Z": float(z)} for t, z in enumerate(self.Z)]


def _is_positive_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool) and value >= 1


# =============================================================================
# Batching operators
# =============================================================================

def periodic_batch(seq: SequenceLike, R: int) -> BatchedSeries:
    """Non-overlapping sums of R consecutive demands, one per review cycle."""
    values = as_array(seq)
    cfg = ReviewConfig.for_length(values.size, R)
    aggregates = values.reshape(cfg.M, R).sum(axis=1)
    aggregates.setflags(write=False)
    return BatchedSeries(aggregates=aggregates, R=R)


def moving_sum(seq: SequenceLike, R: int) -> np.ndarray:
    """Rolling sums over every window of R consecutive periods.

    Element k sums seq[k..k+R-1]; neighbours share R-1 terms.
    """
    values = as_array(seq)
    if not _is_positive_int(R):
        raise InputError(f"R must be an integer >= 1 (got {R})")
    if values.size < R:
        raise InputError(f"moving_sum needs T >= R (got T={values.size}, R={R})")
    return sliding_window_view(values, R).sum(axis=1)


# =============================================================================
# Schedules
# =============================================================================

def schedule_correlated(cfg: ReviewConfig) -> OrderSchedule:
    """All retailers order together at phase 1 of every cycle."""
    phases = np.ones((cfg.M, cfg.N), dtype=np.int64)
    return OrderSchedule(ScheduleKind.CORRELATED, cfg, phases=phases)


def schedule_balanced(cfg: ReviewConfig, seed: int) -> OrderSchedule:
    """Retailers spread as evenly as possible over the R phases.

    Phase loads differ by at most one. Which phases get the extra retailer,
    and which retailer sits in which phase, is drawn once from the seed and
    kept for every cycle.
    """
    rng = make_rng(seed)
    loads = np.full(cfg.R, cfg.N // cfg.R, dtype=np.int64)
    loads[rng.choice(cfg.R, size=cfg.N % cfg.R, replace=False)] += 1
    slots = np.repeat(np.arange(1, cfg.R + 1), loads)
    assignment = rng.permutation(slots)
    phases = np.tile(assignment, (cfg.M, 1))
    return OrderSchedule(ScheduleKind.BALANCED, cfg, phases=phases, seed=seed)


def schedule_random(cfg: ReviewConfig, seed: int) -> OrderSchedule:
    """Each retailer picks one phase per cycle, uniformly and independently.

    Per-cycle phase counts are multinomial(N; 1/R, ..., 1/R) and always sum to N.
    """
    rng = make_rng(seed)
    phases = rng.integers(1, cfg.R + 1, size=(cfg.M, cfg.N))
    return OrderSchedule(ScheduleKind.RANDOM, cfg, phases=phases, seed=seed)


def schedule_lpw_binomial(cfg: ReviewConfig, seed: int) -> OrderSchedule:
    """Every (cycle, phase, retailer) cell orders independently with probability 1/R.

    A retailer may order zero or several times in one cycle; n_t is
    Binomial(N, 1/R) independently across periods.
    """
    rng = make_rng(seed)
    triggers = rng.random((cfg.M, cfg.R, cfg.N)) < 1.0 / cfg.R
    return OrderSchedule(ScheduleKind.LPW_BINOMIAL, cfg, triggers=triggers, seed=seed)


def build_schedule(kind: ScheduleKind, cfg: ReviewConfig, seed: int) -> OrderSchedule:
    kind = ScheduleKind(kind)
    if kind is ScheduleKind.CORRELATED:
        return schedule_correlated(cfg)
    if kind is ScheduleKind.BALANCED:
        return schedule_balanced(cfg, seed)
    if kind is ScheduleKind.RANDOM:
        return schedule_random(cfg, seed)
    return schedule_lpw_binomial(cfg, seed)


# =============================================================================
# Supplier order stream
# =============================================================================

def supplier_orders(schedule: OrderSchedule, demands: Sequence[SequenceLike]) -> SupplierSeries:
    """Z_t: sum of the cycle batches of all retailers ordering in period t.

    Under lpw_binomial every trigger carries the full cycle batch, so
    several triggers duplicate it and no trigger drops it.
    """
    cfg = schedule.config
    if len(demands) != cfg.N:
        raise InputError(f"schedule has N={cfg.N} retailers but {len(demands)} demand sequences were given")
    arrays = [as_array(d) for d in demands]
    lengths = sorted({a.size for a in arrays})
    if lengths != [cfg.T]:
        raise InputError(f"every demand sequence must have T=R*M={cfg.T} periods (got lengths {lengths})")

    # N x M cycle batches
    batches = np.stack(arrays).reshape(cfg.N, cfg.M, cfg.R).sum(axis=2)
    Z = np.einsum("ipj,ji->ip", schedule.order_mask().astype(float), batches).ravel()
    Z.setflags(write=False)
    batches.setflags(write=False)
    return SupplierSeries(Z=Z, config=cfg, kind=schedule.kind, demand_batches=batches)


def cycle_totals(supplier: SupplierSeries) -> np.ndarray:
    """Z_i, the supplier's received total per review cycle."""
    return supplier.by_cycle.sum(axis=1)
