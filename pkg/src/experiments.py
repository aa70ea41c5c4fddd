"""Replicated Monte Carlo experiments comparing empirical and predicted batched-order variance."""

import math
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src import __version__
from src.config import ExperimentConfig
from src.demand import RNG_ALGORITHM, DemandSequence, derive_seed, generate
from src.diagnostics import (
    CountStats,
    ErgodicityReport,
    OverlapReport,
    PhaseStats,
    autocorrelation,
    count_stats,
    ergodicity_report,
    overlap_report,
    phase_stats,
)
from src.errors import ConfigurationError
from src.ordering import OrderSchedule, SupplierSeries, build_schedule, cycle_totals, supplier_orders
from src.variance import (
    asymptotic_variance,
    bullwhip_ratio,
    classify_scenario_multi,
    decompose,
    lpw_correlated_variance,
    multi_retailer_variance,
    scenario_tally,
)

SWEEP_PARAMETERS = ("R", "N", "m", "sigma2", "phi")

# spawn_key slot of the schedule stream; retailer j uses slot j + 1
SCHEDULE_STREAM = 0


def _log(cfg: ExperimentConfig, message: str) -> None:
    if cfg.verbose:
        print(message, file=sys.stderr)


def _population_variance(values: np.ndarray) -> float:
    if values.min() == values.max():
        return 0.0
    return float(values.var())


# =============================================================================
# Data Classes
# =============================================================================

@dataclass(frozen=True)
class ReplicationResult:
    """Everything measured in one replication."""

    index: int
    schedule_seed: int
    demand_seeds: List[int]
    cycle_variance: float  # Var(Z_i), divisor M
    cycle_variance_sample: float  # Var(Z_i), divisor M - 1
    realized_prediction: float  # realized per-retailer decompositions
    corrected_prediction: float  # long-run form with total_j -> sigma2
    realized_demand_variance: float  # sum_j total_j
    label: str
    lhs: float
    conservation_gap: float
    off_once_fraction: float  # retailer-cycles with an order count != 1
    phase_variances: List[float]
    pooled_variance: float
    non_ergodic: bool

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated replications with predictions, ratios and provenance."""

    config: Dict[str, Any]
    config_hash: str
    version: str
    rng: str
    master_seed: int
    replications: List[ReplicationResult]
    empirical_variance: float
    empirical_variance_se: float
    empirical_variance_sample: float
    realized_prediction: float
    corrected_prediction: float
    lpw_prediction: float
    demand_variance: float  # N * sigma2
    realized_demand_variance: float
    ratios: Dict[str, float]
    scenario_tally: Dict[str, int]
    diagnostics: Dict[str, Any]
    warnings: List[str] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.replications)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "version": self.version,
            "rng": self.rng,
            "master_seed": self.master_seed,
            "K": self.K,
            "empirical_variance": self.empirical_variance,
            "empirical_variance_se": self.empirical_variance_se,
            "empirical_variance_sample": self.empirical_variance_sample,
            "realized_prediction": self.realized_prediction,
            "corrected_prediction": self.corrected_prediction,
            "lpw_prediction": self.lpw_prediction,
            "demand_variance": self.demand_variance,
            "realized_demand_variance": self.realized_demand_variance,
            "ratios": self.ratios,
            "scenario_tally": self.scenario_tally,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings,
            "replications": [r.to_dict() for r in self.replications],
        }


@dataclass(frozen=True)
class ComparisonTable:
    """Empirical, corrected and classical variance side by side."""

    report: ExperimentReport
    rows: List[Dict[str, Any]]
    labels: List[str]

    def to_dict(self) -> dict:
        return {
            "config": self.report.config,
            "config_hash": self.report.config_hash,
            "master_seed": self.report.master_seed,
            "rows": self.rows,
            "labels": self.labels,
        }


@dataclass(frozen=True)
class SweepResult:
    """One report per swept value, flattened into a table."""

    parameter: str
    values: List[Any]
    reports: List[ExperimentReport]
    rows: List[Dict[str, Any]]

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "values": self.values,
            "rows": self.rows,
            "reports": [r.to_dict() for r in self.reports],
        }


# =============================================================================
# Replications
# =============================================================================

def replication_seeds(master: int, index: int, N: int) -> tuple[int, List[int]]:
    """(schedule seed, per-retailer demand seeds) for replication `index`."""
    schedule_seed = derive_seed(master, index, SCHEDULE_STREAM)
    demand_seeds = [derive_seed(master, index, j + 1) for j in range(N)]
    return schedule_seed, demand_seeds


def simulate(cfg: ExperimentConfig, index: int = 0) -> tuple[List[DemandSequence], OrderSchedule, SupplierSeries]:
    """Demand paths, order schedule and supplier stream of replication `index`."""
    review = cfg.review
    schedule_seed, demand_seeds = replication_seeds(cfg.seed, index, review.N)
    demands = [generate(cfg.demand_params, review.T, s) for s in demand_seeds]
    schedule = build_schedule(cfg.schedule_kind, review, schedule_seed)
    return demands, schedule, supplier_orders(schedule, demands)


def run_replication(cfg: ExperimentConfig, index: int) -> ReplicationResult:
    """Generate N demand paths, schedule orders, and measure Var(Z_i) against the predictions."""
    review = cfg.review
    params = cfg.demand_params
    schedule_seed, demand_seeds = replication_seeds(cfg.seed, index, review.N)

    demands, schedule, supplier = simulate(cfg, index)
    totals = cycle_totals(supplier)

    decomps = [decompose(d, review.R) for d in demands]
    scenario = classify_scenario_multi(decomps, cfg.tolerance)
    ergodicity = ergodicity_report(supplier)

    cycle_var = _population_variance(totals)
    M = review.M
    return ReplicationResult(
        index=index,
        schedule_seed=schedule_seed,
        demand_seeds=demand_seeds,
        cycle_variance=cycle_var,
        cycle_variance_sample=cycle_var * M / (M - 1) if M > 1 else math.nan,
        realized_prediction=multi_retailer_variance(decomps),
        corrected_prediction=asymptotic_variance(
            params.sigma2, review.R, review.N, [d.sigma2_within for d in decomps]
        ),
        realized_demand_variance=float(sum(d.sigma2_total for d in decomps)),
        label=scenario.label,
        lhs=scenario.lhs,
        conservation_gap=supplier.conservation_gap,
        off_once_fraction=float(np.mean(schedule.orders_per_cycle() != 1)),
        phase_variances=ergodicity.phase_variances,
        pooled_variance=ergodicity.pooled_variance,
        non_ergodic=ergodicity.non_ergodic,
    )


def _execute(cfg: ExperimentConfig) -> List[ReplicationResult]:
    """Run all replications, serially or in a process pool, ordered by index."""
    K = cfg.replications
    if cfg.workers <= 1 or K == 1:
        results = []
        for index in range(K):
            results.append(run_replication(cfg, index))
            _log(cfg, f"   Replication {index + 1}/{K} done")
        return results

    results = []
    with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
        futures = [executor.submit(run_replication, cfg, index) for index in range(K)]
        for future in as_completed(futures):
            result = future.result()
            results.append(result)
            _log(cfg, f"   Replication {result.index + 1}/{K} done ({len(results)}/{K})")
    return sorted(results, key=lambda r: r.index)


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """K independent replications aggregated into means, standard errors and ratios."""
    cfg.validate()
    review = cfg.review
    K = cfg.replications

    _log(cfg, f"🚀 Running {K} replication(s): N={review.N}, R={review.R}, M={review.M}, "
              f"schedule={cfg.schedule}, demand={cfg.distribution}(m={cfg.m}, sigma2={cfg.sigma2}, phi={cfg.phi})")

    results = _execute(cfg)

    variances = np.array([r.cycle_variance for r in results])
    se = float(variances.std(ddof=1) / math.sqrt(K)) if K > 1 else 0.0
    empirical = _mean(variances)
    corrected = _mean([r.corrected_prediction for r in results])
    lpw = lpw_correlated_variance(review.N, review.R, cfg.m, cfg.sigma2)
    demand_variance = review.N * cfg.sigma2

    warnings = []
    if review.M == 1:
        warnings.append("single review cycle (M=1): across-cycle variance is 0 by construction")
    if K == 1:
        warnings.append("single replication (K=1): standard error is not available and reported as 0")
    for message in warnings:
        _log(cfg, f"⚠️  {message}")

    tally = scenario_tally([r.label for r in results])

    report = ExperimentReport(
        config=cfg.to_dict(),
        config_hash=cfg.config_hash(),
        version=__version__,
        rng=RNG_ALGORITHM,
        master_seed=cfg.seed,
        replications=results,
        empirical_variance=empirical,
        empirical_variance_se=se,
        empirical_variance_sample=_mean([r.cycle_variance_sample for r in results]) if review.M > 1 else math.nan,
        realized_prediction=_mean([r.realized_prediction for r in results]),
        corrected_prediction=corrected,
        lpw_prediction=lpw,
        demand_variance=demand_variance,
        realized_demand_variance=_mean([r.realized_demand_variance for r in results]),
        ratios={
            "empirical": bullwhip_ratio(empirical, demand_variance),
            "corrected": bullwhip_ratio(corrected, demand_variance),
            "lpw": bullwhip_ratio(lpw, demand_variance),
        },
        scenario_tally=tally,
        diagnostics={
            "mean_phase_variances": np.mean([r.phase_variances for r in results], axis=0).tolist(),
            "mean_pooled_variance": _mean([r.pooled_variance for r in results]),
            "non_ergodic_flags": int(sum(r.non_ergodic for r in results)),
            "mean_conservation_gap": _mean([r.conservation_gap for r in results]),
            "mean_off_once_fraction": _mean([r.off_once_fraction for r in results]),
        },
        warnings=warnings,
    )
    _log(cfg, f"✅ Var(Z_i) = {empirical:.6g} ± {se:.2g} | corrected {corrected:.6g} | lpw {lpw:.6g}")
    return report


# =============================================================================
# Comparison and sweeps
# =============================================================================

def _comparison_rows(report: ExperimentReport) -> List[Dict[str, Any]]:
    empirical = report.empirical_variance
    rows = []
    for model, variance, ratio_key in (
        ("empirical", empirical, "empirical"),
        ("corrected", report.corrected_prediction, "corrected"),
        ("lpw", report.lpw_prediction, "lpw"),
    ):
        gap = variance - empirical
        rows.append({
            "model": model,
            "variance": variance,
            "bullwhip_ratio": report.ratios[ratio_key],
            "abs_discrepancy": abs(gap),
            "rel_discrepancy": abs(gap) / empirical if empirical > 0 else math.nan,
        })
    return rows


def compare_models(cfg: ExperimentConfig) -> ComparisonTable:
    """Empirical Var(Z_i), the corrected long-run formula and the classical formula side by side."""
    report = run_experiment(cfg)
    return ComparisonTable(
        report=report,
        rows=_comparison_rows(report),
        labels=[r.label for r in report.replications],
    )


def sweep(template: ExperimentConfig, parameter: str, values: Sequence[Any]) -> SweepResult:
    """One experiment per value of `parameter`, all under the template's master seed.

    Every point is validated before any replication runs.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigurationError(
            f"cannot sweep {parameter!r}; choose one of {', '.join(SWEEP_PARAMETERS)}",
            fields=("sweep",),
        )
    if not values:
        raise ConfigurationError("sweep needs at least one value", fields=(parameter,))

    configs = []
    for value in values:
        try:
            point = template.updated({parameter: value}, source=f"sweep {parameter}")
            point.validate()
        except ConfigurationError as e:
            raise ConfigurationError(f"sweep {parameter}={value} is invalid: {e}", fields=(parameter,)) from e
        configs.append(point)

    reports = []
    rows = []
    for point in configs:
        value = getattr(point, parameter)
        _log(template, f"📊 {parameter} = {value}")
        report = run_experiment(point)
        reports.append(report)
        rows.append({
            parameter: value,
            "empirical_variance": report.empirical_variance,
            "empirical_variance_se": report.empirical_variance_se,
            "corrected_variance": report.corrected_prediction,
            "lpw_variance": report.lpw_prediction,
            "empirical_ratio": report.ratios["empirical"],
            "corrected_ratio": report.ratios["corrected"],
            "lpw_ratio": report.ratios["lpw"],
        })
    return SweepResult(
        parameter=parameter,
        values=[getattr(point, parameter) for point in configs],
        reports=reports,
        rows=rows,
    )


# =============================================================================
# Diagnostics
# =============================================================================

@dataclass(frozen=True)
class DiagnosticsReport:
    """Phase, count, ergodicity and overlap diagnostics of one simulated replication."""

    config: Dict[str, Any]
    config_hash: str
    master_seed: int
    phases: PhaseStats
    counts: CountStats
    ergodicity: ErgodicityReport
    overlap: OverlapReport
    supplier_lag1: float  # nan when Z_t is constant
    schedule: Optional[OrderSchedule] = field(default=None, repr=False, compare=False)
    supplier: Optional[SupplierSeries] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "phases": self.phases.to_dict(),
            "counts": self.counts.to_dict(),
            "ergodicity": self.ergodicity.to_dict(),
            "overlap": self.overlap.to_dict(),
            "supplier_lag1": self.supplier_lag1,
        }


def run_diagnostics(cfg: ExperimentConfig) -> DiagnosticsReport:
    """Diagnose replication 0: phase statistics of Z_t, order counts, and overlap in retailer 1's demand."""
    cfg.validate()
    _log(cfg, f"🔍 Diagnosing schedule={cfg.schedule}, N={cfg.N}, R={cfg.R}, M={cfg.cycles}")
    demands, schedule, supplier = simulate(cfg, 0)

    Z = supplier.Z
    if Z.size > 2 and Z.min() != Z.max():
        supplier_lag1 = autocorrelation(Z, 1)
    else:
        supplier_lag1 = math.nan

    report = DiagnosticsReport(
        config=cfg.to_dict(),
        config_hash=cfg.config_hash(),
        master_seed=cfg.seed,
        phases=phase_stats(supplier),
        counts=count_stats(schedule),
        ergodicity=ergodicity_report(supplier),
        overlap=overlap_report(demands[0], cfg.R),
        supplier_lag1=supplier_lag1,
        schedule=schedule,
        supplier=supplier,
    )
    if report.ergodicity.non_ergodic:
        _log(cfg, "⚠️  Phase statistics of Z_t differ: the order stream is not ergodic at the period scale")
    return report
