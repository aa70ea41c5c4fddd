"""Tests for schedules, batching operators and the supplier order stream."""

import numpy as np
import pytest

from src.demand import DemandParams, gen_iid
from src.errors import ConfigurationError, InputError
from src.ordering import (
    OrderSchedule,
    ReviewConfig,
    ScheduleKind,
    build_schedule,
    cycle_totals,
    moving_sum,
    periodic_batch,
    schedule_balanced,
    schedule_correlated,
    schedule_lpw_binomial,
    schedule_random,
    supplier_orders,
)


class TestReviewConfig:
    def test_T_is_R_times_M(self):
        assert ReviewConfig(R=3, N=2, M=100).T == 300

    @pytest.mark.parametrize("field,kwargs", [
        ("R", {"R": 0, "N": 1, "M": 1}),
        ("N", {"R": 1, "N": -2, "M": 1}),
        ("M", {"R": 1, "N": 1, "M": 0}),
    ])
    def test_rejects_non_positive(self, field, kwargs):
        with pytest.raises(ConfigurationError) as excinfo:
            ReviewConfig(**kwargs)
        assert field in excinfo.value.fields

    def test_for_length_needs_divisibility(self):
        with pytest.raises(ConfigurationError, match="T=4.*R=3"):
            ReviewConfig.for_length(4, 3)
        assert ReviewConfig.for_length(6, 3).M == 2


class TestPeriodicBatch:
    def test_hand_sequence(self, hand_sequence):
        batched = periodic_batch(hand_sequence, 2)
        assert batched.aggregates.tolist() == [4.0, 6.0]
        assert batched.M == 2

    def test_R_equal_one_is_identity(self, hand_sequence):
        assert periodic_batch(hand_sequence, 1).aggregates.tolist() == hand_sequence

    def test_R_equal_T_is_single_cycle(self, hand_sequence):
        assert periodic_batch(hand_sequence, 4).aggregates.tolist() == [10.0]

    def test_never_truncates(self):
        with pytest.raises(ConfigurationError):
            periodic_batch([1.0, 2.0, 3.0], 2)

    def test_sum_is_conserved(self):
        seq = gen_iid(DemandParams(mean=5.0, sigma2=1.0), 120, seed=1)
        assert periodic_batch(seq, 4).aggregates.sum() == pytest.approx(seq.values.sum(), rel=1e-12)


class TestMovingSum:
    def test_windows(self):
        assert moving_sum([1.0, 2.0, 3.0, 4.0], 2).tolist() == [3.0, 5.0, 7.0]

    def test_length(self):
        assert moving_sum(np.arange(10.0), 3).size == 8

    def test_too_short(self):
        with pytest.raises(InputError):
            moving_sum([1.0], 2)

    def test_every_second_window_is_a_periodic_batch(self, hand_sequence):
        sums = moving_sum(hand_sequence, 2)
        assert sums[::2].tolist() == periodic_batch(hand_sequence, 2).aggregates.tolist()


class TestSchedules:
    def test_correlated_orders_at_phase_one(self):
        schedule = schedule_correlated(ReviewConfig(R=3, N=4, M=5))
        counts = schedule.counts()
        assert (counts[:, 0] == 4).all()
        assert (counts[:, 1:] == 0).all()

    def test_balanced_loads_differ_by_at_most_one(self):
        cfg = ReviewConfig(R=3, N=7, M=50)
        schedule = schedule_balanced(cfg, seed=5)
        counts = schedule.counts()
        assert sorted(counts[0].tolist()) == [2, 2, 3]
        assert (counts == counts[0]).all()

    def test_balanced_assignment_fixed_across_cycles(self):
        schedule = schedule_balanced(ReviewConfig(R=2, N=2, M=10), seed=9)
        assert (schedule.phases == schedule.phases[0]).all()
        assert sorted(schedule.phases[0].tolist()) == [1, 2]

    def test_balanced_is_seeded(self):
        cfg = ReviewConfig(R=4, N=6, M=3)
        assert np.array_equal(schedule_balanced(cfg, 1).phases, schedule_balanced(cfg, 1).phases)

    def test_random_orders_exactly_once(self):
        cfg = ReviewConfig(R=2, N=2, M=100_000)
        schedule = schedule_random(cfg, seed=42)
        counts = schedule.counts()
        assert (counts.sum(axis=1) == 2).all()
        assert np.mean(counts[:, 0] == 1) == pytest.approx(0.5, abs=0.01)
        assert (schedule.orders_per_cycle() == 1).all()

    def test_lpw_binomial_counts(self):
        cfg = ReviewConfig(R=2, N=2, M=100_000)
        schedule = schedule_lpw_binomial(cfg, seed=42)
        per_cycle = schedule.orders_per_cycle()
        assert np.mean(per_cycle != 1) == pytest.approx(0.5, abs=0.01)
        assert schedule.counts().sum(axis=1).var() > 0

    def test_lpw_binomial_without_batching_orders_every_period(self):
        schedule = schedule_lpw_binomial(ReviewConfig(R=1, N=3, M=500), seed=7)
        assert (schedule.orders_per_cycle() == 1).all()

    def test_build_schedule_dispatch(self):
        cfg = ReviewConfig(R=2, N=3, M=4)
        for kind in ScheduleKind:
            assert build_schedule(kind, cfg, seed=1).kind is kind
        assert build_schedule("random", cfg, seed=1).kind is ScheduleKind.RANDOM

    def test_phase_table_shape_checked(self):
        with pytest.raises(InputError):
            OrderSchedule(ScheduleKind.RANDOM, ReviewConfig(R=2, N=2, M=2), phases=np.ones((2, 3), dtype=int))

    def test_phase_out_of_range(self):
        with pytest.raises(InputError):
            OrderSchedule(ScheduleKind.RANDOM, ReviewConfig(R=2, N=1, M=1), phases=np.array([[3]]))

    def test_to_rows(self):
        rows = schedule_correlated(ReviewConfig(R=2, N=2, M=1)).to_rows()
        assert rows == [
            {"cycle": 1, "retailer": 1, "phase": 1},
            {"cycle": 1, "retailer": 2, "phase": 1},
        ]


class TestSupplierOrders:
    def test_correlated_hand_example(self, hand_sequence):
        cfg = ReviewConfig(R=2, N=2, M=2)
        supplier = supplier_orders(schedule_correlated(cfg), [hand_sequence, [2.0, 2.0, 2.0, 2.0]])
        assert supplier.Z.tolist() == [8.0, 0.0, 10.0, 0.0]
        assert cycle_totals(supplier).tolist() == [8.0, 10.0]
        assert supplier.conservation_gap == 0.0

    @pytest.mark.parametrize("kind", ["correlated", "balanced", "random"])
    def test_once_per_cycle_conserves_demand(self, kind):
        cfg = ReviewConfig(R=3, N=4, M=200)
        params = DemandParams(mean=10.0, sigma2=1.0)
        demands = [gen_iid(params, cfg.T, seed=j) for j in range(cfg.N)]
        supplier = supplier_orders(build_schedule(kind, cfg, seed=3), demands)
        np.testing.assert_allclose(supplier.cycle_gaps, 0.0, atol=1e-9)
        assert cycle_totals(supplier).sum() == pytest.approx(sum(d.values.sum() for d in demands), rel=1e-12)

    def test_correlated_phase_does_not_change_cycle_variance(self):
        cfg = ReviewConfig(R=3, N=2, M=500)
        params = DemandParams(mean=10.0, sigma2=1.0)
        demands = [gen_iid(params, cfg.T, seed=j) for j in range(cfg.N)]
        variances = []
        for p in range(1, cfg.R + 1):
            schedule = OrderSchedule(ScheduleKind.CORRELATED, cfg, phases=np.full((cfg.M, cfg.N), p))
            variances.append(cycle_totals(supplier_orders(schedule, demands)).var())
        assert variances[0] > 0
        assert variances == [variances[0]] * cfg.R

    def test_lpw_binomial_does_not_conserve(self):
        cfg = ReviewConfig(R=2, N=2, M=1000)
        params = DemandParams(mean=10.0, sigma2=1.0)
        demands = [gen_iid(params, cfg.T, seed=j) for j in range(cfg.N)]
        supplier = supplier_orders(schedule_lpw_binomial(cfg, seed=1), demands)
        assert np.abs(supplier.cycle_gaps).max() > 1.0

    def test_retailer_count_mismatch(self, hand_sequence):
        cfg = ReviewConfig(R=2, N=2, M=2)
        with pytest.raises(InputError):
            supplier_orders(schedule_correlated(cfg), [hand_sequence])

    def test_length_mismatch(self, hand_sequence):
        cfg = ReviewConfig(R=2, N=2, M=2)
        with pytest.raises(InputError):
            supplier_orders(schedule_correlated(cfg), [hand_sequence, [1.0, 2.0]])

    def test_balanced_one_retailer_per_phase(self):
        cfg = ReviewConfig(R=2, N=2, M=3)
        schedule = schedule_balanced(cfg, seed=0)
        demands = [[1.0] * 6, [10.0] * 6]
        supplier = supplier_orders(schedule, demands)
        grid = supplier.by_cycle
        assert sorted(grid[0].tolist()) == [2.0, 20.0]
        assert supplier.to_rows()[0]["t"] == 1
