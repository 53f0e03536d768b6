"""
串联队列仿真测试
Tandem-queue simulation, tail-exponent regression and rate validation
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from errors import ConfigError, InsufficientTail
from relay_config import EPS_EST
from lmgf import DuplexMode
from effcap import effective_capacity
from solver import solve_source_exponent
from queuesim import (
    SimConfig, ValidationReport, ValidationSummary, _count_exceed, _grid_from_samples, _lindley,
    auto_qmax_grids, estimate_tail_exponent, run_validation_seeds, simulate_tandem,
    validate_rate,
)


def lindley_loop(start, increments):
    q, out = start, []
    for x in increments:
        q = max(0.0, q + x)
        out.append(q)
    return np.array(out)


# ============================================================================
# 基本构件
# ============================================================================

@pytest.mark.parametrize("start", [0.0, 3.5])
def test_lindley_matches_loop(start):
    rng = np.random.default_rng(3)
    increments = rng.normal(-0.2, 1.0, 500)
    np.testing.assert_allclose(_lindley(start, increments), lindley_loop(start, increments), atol=1e-9)


def test_count_exceed():
    queue = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
    np.testing.assert_array_equal(_count_exceed(queue, [0.25, 1.0, 5.0]), [4, 2, 0])
    np.testing.assert_array_equal(_count_exceed(np.zeros(0), [1.0]), [0])


def test_sim_config_validation(point_200_300):
    with pytest.raises(ConfigError):
        SimConfig(point_200_300, 100.0, 1_000)
    with pytest.raises(ConfigError):
        SimConfig(point_200_300, 100.0, 20_000, qmax_grid=(2.0, 1.0))
    with pytest.raises(ConfigError):
        SimConfig(point_200_300, -1.0, 20_000)
    hd = replace(point_200_300, mode=DuplexMode.HALF_DUPLEX)
    with pytest.raises(ConfigError):
        SimConfig(hd, 100.0, 20_000)
    sim = SimConfig(point_200_300, 100.0, 200_000)
    assert sim.warmup_blocks == 10_000
    assert sim.relay_grid == sim.qmax_grid


# ============================================================================
# 仿真
# ============================================================================

def test_point_mass_queues_stay_empty(point_200_300):
    trace = simulate_tandem(SimConfig(point_200_300, 150.0, 20_000, qmax_grid=(1e-6, 1.0)))
    assert trace.final_source == 0.0
    assert trace.final_relay == 0.0
    np.testing.assert_array_equal(trace.source_counts, [0, 0])
    np.testing.assert_array_equal(trace.relay_counts, [0, 0])
    assert trace.total_served2 == pytest.approx(150.0 * 20_000)


def test_overloaded_source_grows_linearly(point_200_300):
    trace = simulate_tandem(SimConfig(point_200_300, 210.0, 20_000))
    assert trace.final_source == pytest.approx(10.0 * 20_000, rel=1e-9)
    assert trace.final_relay == pytest.approx(0.0, abs=1e-6)


def test_relay_bottleneck(make_point_link, block):
    from lmgf import SystemConfig
    cfg = SystemConfig(make_point_link(300.0), make_point_link(200.0), block, 0.01, 0.02)
    trace = simulate_tandem(SimConfig(cfg, 250.0, 20_000))
    assert trace.final_source == pytest.approx(0.0, abs=1e-6)
    assert trace.final_relay == pytest.approx(50.0 * 20_000, rel=1e-9)


def test_flow_conservation_and_causality(default_cfg):
    rate = 0.9 * effective_capacity(default_cfg).rate
    trace = simulate_tandem(SimConfig(default_cfg, rate, 50_000, seed=11, chunk_blocks=7_000))
    scale = trace.total_arrivals
    assert trace.total_arrivals - trace.total_served1 == pytest.approx(trace.final_source, abs=1e-9 * scale)
    assert trace.total_served1 - trace.total_served2 == pytest.approx(trace.final_relay, abs=1e-9 * scale)
    assert trace.min_cum_gap >= -1e-9 * scale


def test_seed_determinism(default_cfg):
    rate = 0.9 * effective_capacity(default_cfg).rate
    grid = (10.0, 100.0, 1000.0)
    first = simulate_tandem(SimConfig(default_cfg, rate, 30_000, seed=5, qmax_grid=grid))
    second = simulate_tandem(SimConfig(default_cfg, rate, 30_000, seed=5, qmax_grid=grid))
    other = simulate_tandem(SimConfig(default_cfg, rate, 30_000, seed=6, qmax_grid=grid))
    np.testing.assert_array_equal(first.source_counts, second.source_counts)
    np.testing.assert_array_equal(first.relay_counts, second.relay_counts)
    assert first.final_source == second.final_source
    assert (first.final_source, first.final_relay) != (other.final_source, other.final_relay)


def test_keep_trace_drops_warmup(default_cfg):
    trace = simulate_tandem(SimConfig(default_cfg, 100.0, 20_000), keep_trace=True)
    assert len(trace.source_queue) == trace.effective_blocks == 20_000 - 1_000
    assert np.all(trace.source_queue >= 0)


def test_half_duplex_scales_service(point_200_300):
    hd = replace(point_200_300, mode=DuplexMode.HALF_DUPLEX)
    trace = simulate_tandem(SimConfig(hd, 100.0, 20_000, tau=0.5))
    # 源服务 100, 中继服务 150
    assert trace.final_source == pytest.approx(0.0, abs=1e-9)
    assert trace.total_served2 == pytest.approx(100.0 * 20_000)


def test_auto_grids(default_cfg, point_200_300):
    rate = 0.9 * effective_capacity(default_cfg).rate
    grid_s, _ = auto_qmax_grids(SimConfig(default_cfg, rate, 50_000, seed=2), pilot_blocks=50_000)
    assert grid_s is not None and len(grid_s) == 8
    assert np.all(np.diff(grid_s) > 0)
    empty = auto_qmax_grids(SimConfig(point_200_300, 150.0, 20_000))
    assert empty == (None, None)


def test_tail_grid_skips_zero_atom():
    # 97% 的块队列为空, 非零部分为 θ = 0.05 的指数尾
    rng = np.random.default_rng(11)
    n = 2_000_000
    queue = np.where(rng.random(n) < 0.03, rng.exponential(20.0, n), 0.0)
    grid = _grid_from_samples(queue)
    assert len(grid) == 8
    assert np.all(np.diff(grid) > 0)
    assert grid[0] > np.quantile(queue, 0.99) > 0
    counts = _count_exceed(queue, grid)
    assert counts[0] / n == pytest.approx(0.003, rel=0.05)
    assert counts[-1] / n == pytest.approx(1e-4, rel=0.1)
    tail = estimate_tail_exponent(counts, grid, n)
    assert tail.usable
    assert tail.theta == pytest.approx(0.05, rel=0.1)


def test_tail_grid_rare_nonzero_is_empty():
    queue = np.zeros(1_000_000)
    queue[:50] = 5.0
    assert _grid_from_samples(queue) is None
    assert _grid_from_samples(np.zeros(0)) is None


@pytest.mark.slow
def test_default_relay_grid_gives_usable_fit(default_cfg):
    rate = 0.9 * effective_capacity(default_cfg).rate
    sim = SimConfig(default_cfg, rate, 2_000_000, seed=4)
    grid_s, grid_r = auto_qmax_grids(sim)
    assert grid_r is not None and grid_r[0] > 0
    trace = simulate_tandem(replace(sim, qmax_grid=grid_s, relay_qmax_grid=grid_r))
    tail = estimate_tail_exponent(trace.relay_counts, grid_r, trace.effective_blocks)
    assert tail.usable, tail
    assert tail.theta >= default_cfg.theta2 * (1.0 - EPS_EST)


# ============================================================================
# 尾部指数
# ============================================================================

def test_tail_fit_recovers_exponent():
    grid = np.linspace(100.0, 800.0, 8)
    n = 10_000_000
    counts = np.round(n * 0.2 * np.exp(-0.01 * grid))
    tail = estimate_tail_exponent(counts, grid, n)
    assert tail.theta == pytest.approx(0.01, rel=1e-3)
    assert tail.r_squared > 0.999
    assert tail.usable


def test_tail_fit_flags_out_of_range_probabilities():
    grid = np.array([1.0, 2.0, 3.0])
    counts = np.array([999_000, 998_000, 997_000])
    tail = estimate_tail_exponent(counts, grid, 1_000_000)
    assert not tail.usable


def test_tail_fit_needs_three_points():
    with pytest.raises(InsufficientTail):
        estimate_tail_exponent([10, 5, 0, 0], [1.0, 2.0, 3.0, 4.0], 1_000)


def test_simulated_source_tail_matches_prediction(default_cfg):
    rate = 0.9 * effective_capacity(default_cfg).rate
    predicted = solve_source_exponent(default_cfg, rate)
    sim = SimConfig(default_cfg, rate, 400_000, seed=3)
    grid_s, _ = auto_qmax_grids(sim, pilot_blocks=200_000)
    trace = simulate_tandem(replace(sim, qmax_grid=grid_s))
    tail = estimate_tail_exponent(trace.source_counts, grid_s, trace.effective_blocks)
    assert tail.theta == pytest.approx(predicted, rel=0.3)


# ============================================================================
# 验证
# ============================================================================

def test_point_mass_validation_passes(point_200_300):
    capacity = effective_capacity(point_200_300)
    report = validate_rate(point_200_300, capacity, margin=0.1, num_blocks=20_000)
    assert report.passed
    assert report.lower.source.status == "empty"
    assert report.lower.relay.status == "empty"
    assert report.upper.source.status == "unstable"
    assert len(report.to_rows()) == 4


def test_overstated_rate_fails(point_200_300):
    capacity = effective_capacity(point_200_300)
    wrong = replace(capacity, rate=1.5 * capacity.rate)
    report = validate_rate(point_200_300, wrong, margin=0.1, num_blocks=20_000)
    assert not report.passed
    assert report.lower.source.status == "unstable"


def test_half_duplex_point_mass_backs_off_tau(point_200_300):
    hd = replace(point_200_300, mode=DuplexMode.HALF_DUPLEX)
    capacity = replace(effective_capacity(hd), rate_is_supremum=True)
    report = validate_rate(hd, capacity, num_blocks=20_000)
    assert report.tau == pytest.approx(capacity.tau_sol - 1e-6)
    assert report.passed


def test_summary_verdict(point_200_300):
    summary = run_validation_seeds(point_200_300, effective_capacity(point_200_300),
                                   num_blocks=20_000, seeds=range(5), workers=1)
    assert summary.passed_count == 5
    assert summary.verdict == "PASS"
    assert ValidationSummary().verdict == "FAIL"


def test_summary_threshold(point_200_300):
    good = validate_rate(point_200_300, effective_capacity(point_200_300), num_blocks=20_000)
    bad = replace(good, upper=good.lower)
    assert not bad.passed
    assert ValidationSummary((good,) * 4 + (bad,)).verdict == "PASS"
    assert ValidationSummary((good,) * 3 + (bad,) * 2).verdict == "FAIL"


def test_validation_rejects_bad_margin(point_200_300):
    with pytest.raises(ConfigError):
        validate_rate(point_200_300, effective_capacity(point_200_300), margin=1.5, num_blocks=20_000)


@pytest.mark.slow
def test_default_full_duplex_validation(default_cfg):
    capacity = effective_capacity(default_cfg)
    summary = run_validation_seeds(default_cfg, capacity, margin=0.1, num_blocks=10_000_000,
                                   seeds=range(5), workers=5)
    assert summary.verdict == "PASS", [r.to_rows() for r in summary.reports]


@pytest.mark.slow
def test_default_half_duplex_validation(half_duplex_cfg):
    capacity = effective_capacity(half_duplex_cfg)
    summary = run_validation_seeds(half_duplex_cfg, capacity, margin=0.1, num_blocks=10_000_000,
                                   seeds=range(5), workers=5)
    assert summary.verdict == "PASS", [r.to_rows() for r in summary.reports]
    assert isinstance(summary.reports[0], ValidationReport)
    assert math.isfinite(summary.reports[0].tau)
