#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
串联队列蒙特卡洛仿真
Discrete-time tandem-queue simulation of the two-hop relay

功能:
1. 流体 (实数比特) 源队列 + 中继队列仿真, 每块独立衰落
2. 各阈值的超越计数 (丢弃预热段)
3. 尾部指数回归: log P{Q > q} 对 q 的最小二乘 (statsmodels OLS)
4. 预运行自动选取阈值网格
5. 在 (1 ± margin)·R_E 处验证分析结果, 多种子并行汇总

日期: 2026-10-19
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Optional, Tuple

import numpy as np
import statsmodels.api as sm

from errors import ConfigError, InsufficientTail
from relay_config import (
    MIN_BLOCKS, WARMUP_FRACTION, WARMUP_MIN_BLOCKS, CHUNK_BLOCKS, PILOT_BLOCKS,
    GRID_POINTS, GRID_TAIL_START, EPS_EST, DEFAULT_MARGIN,
    PASS_FRACTION, TAIL_MIN_R2, TAIL_MIN_POINTS, TAIL_P_RANGE, TAU0_BACKOFF,
)
from channel import capacities_of_gains, capacity_support, make_link_streams, sample_gains
from lmgf import time_share_factors, scaled_ergodic_rates

logger = logging.getLogger(__name__)


# ============================================================================
# 配置与结果类型
# ============================================================================

def _check_grid(grid, name):
    if grid is None:
        return None
    grid = tuple(float(q) for q in grid)
    if len(grid) == 0 or any(q <= 0 for q in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{name} 必须非空, 为正且严格递增: {grid}")
    return grid


@dataclass(frozen=True)
class SimConfig:
    """
    qmax_grid 作用于源队列; relay_qmax_grid 未给出时与 qmax_grid 相同
    """
    system: object
    arrival_rate: float
    num_blocks: int
    seed: int = 0
    qmax_grid: Tuple[float, ...] = (1.0,)
    relay_qmax_grid: Optional[Tuple[float, ...]] = None
    tau: Optional[float] = None
    chunk_blocks: int = CHUNK_BLOCKS
    stream: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.arrival_rate) and self.arrival_rate >= 0):
            raise ConfigError(f"arrival_rate 必须为有限非负数: {self.arrival_rate}")
        if int(self.num_blocks) < MIN_BLOCKS:
            raise ConfigError(f"num_blocks 至少为 {MIN_BLOCKS}: {self.num_blocks}")
        object.__setattr__(self, "num_blocks", int(self.num_blocks))
        object.__setattr__(self, "qmax_grid", _check_grid(self.qmax_grid, "qmax_grid"))
        object.__setattr__(self, "relay_qmax_grid", _check_grid(self.relay_qmax_grid, "relay_qmax_grid"))
        if self.chunk_blocks < 1:
            raise ConfigError("chunk_blocks 必须为正")
        time_share_factors(self.system, self.tau)

    @property
    def relay_grid(self):
        return self.relay_qmax_grid if self.relay_qmax_grid is not None else self.qmax_grid

    @property
    def warmup_blocks(self):
        return max(WARMUP_MIN_BLOCKS, int(WARMUP_FRACTION * self.num_blocks))


@dataclass
class TandemTrace:
    """一次仿真的计数与守恒量; keep_trace 时附带预热后的队列序列"""
    num_blocks: int
    warmup_blocks: int
    source_counts: np.ndarray
    relay_counts: np.ndarray
    final_source: float
    final_relay: float
    total_arrivals: float
    total_served1: float
    total_served2: float
    min_cum_gap: float
    source_queue: Optional[np.ndarray] = None
    relay_queue: Optional[np.ndarray] = None

    @property
    def effective_blocks(self):
        return self.num_blocks - self.warmup_blocks


@dataclass(frozen=True)
class TailEstimate:
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float
    exceed_counts: Tuple[int, ...]
    qmax_grid: Tuple[float, ...]
    usable: bool

    @property
    def theta(self):
        return -self.slope


# ============================================================================
# 仿真
# ============================================================================

def _lindley(start, increments):
    """
    Q_n = max(0, Q_{n-1} + X_n) 的向量化形式

    Q_n = S_n − min(−Q_0, min_{k≤n} S_k), S 为增量前缀和
    """
    partial_sums = np.cumsum(increments)
    floor = np.minimum(np.minimum.accumulate(partial_sums), -start)
    return partial_sums - floor


def _count_exceed(queue, grid):
    if len(queue) == 0:
        return np.zeros(len(grid), dtype=np.int64)
    ordered = np.sort(queue)
    return len(ordered) - np.searchsorted(ordered, np.asarray(grid), side="right")


def simulate_tandem(sim, keep_trace=False):
    """
    串联队列仿真

    每块: 抽取 z1, z2; 源队列服务 min(Qs + R, c1), 服务出的比特当块进入中继;
    中继服务 min(Qr + served1, c2). 半双工时 c1, c2 分别乘 τ, 1 − τ.
    """
    system = sim.system
    share1, share2 = time_share_factors(system, sim.tau)
    rng1, rng2 = make_link_streams(sim.seed, sim.stream)
    R = float(sim.arrival_rate)
    warmup = sim.warmup_blocks
    grid_s = np.asarray(sim.qmax_grid)
    grid_r = np.asarray(sim.relay_grid)

    counts_s = np.zeros(len(grid_s), dtype=np.int64)
    counts_r = np.zeros(len(grid_r), dtype=np.int64)
    q_s = q_r = 0.0
    total_in = total_1 = total_2 = 0.0
    min_gap = 0.0
    kept_s, kept_r = [], []

    done = 0
    while done < sim.num_blocks:
        n = min(sim.chunk_blocks, sim.num_blocks - done)
        c1 = capacities_of_gains(system.link1, system.block,
                                 sample_gains(system.link1.fading, rng1, n), share1)
        c2 = capacities_of_gains(system.link2, system.block,
                                 sample_gains(system.link2.fading, rng2, n), share2)

        source = _lindley(q_s, R - c1)
        prev_s = np.concatenate(([q_s], source[:-1]))
        served1 = np.minimum(prev_s + R, c1)

        relay = _lindley(q_r, served1 - c2)
        prev_r = np.concatenate(([q_r], relay[:-1]))
        served2 = np.minimum(prev_r + served1, c2)

        # 译码转发因果性: 累计转发量不超过累计接收量
        gap = (total_1 - total_2) + np.cumsum(served1 - served2)
        min_gap = min(min_gap, float(gap.min()))

        total_in += R * n
        total_1 += float(served1.sum())
        total_2 += float(served2.sum())
        q_s, q_r = float(source[-1]), float(relay[-1])

        skip = max(0, warmup - done)
        if skip < n:
            counts_s += _count_exceed(source[skip:], grid_s)
            counts_r += _count_exceed(relay[skip:], grid_r)
            if keep_trace:
                kept_s.append(source[skip:])
                kept_r.append(relay[skip:])
        done += n

    trace = TandemTrace(sim.num_blocks, warmup, counts_s, counts_r, q_s, q_r,
                        total_in, total_1, total_2, min_gap)
    if keep_trace:
        trace.source_queue = np.concatenate(kept_s) if kept_s else np.zeros(0)
        trace.relay_queue = np.concatenate(kept_r) if kept_r else np.zeros(0)
    logger.debug("仿真完成: R=%.6g, %d 块, Qs=%.6g, Qr=%.6g", R, sim.num_blocks, q_s, q_r)
    return trace


# ============================================================================
# 尾部指数
# ============================================================================

def estimate_tail_exponent(counts, qmax_grid, num_effective_blocks):
    """
    log(count/n) 对阈值 q 的最小二乘拟合, 斜率即 −θ 的估计

    参数:
        counts: 各阈值的超越计数
        qmax_grid: 阈值 (bits)
        num_effective_blocks: 预热后的块数
    返回:
        TailEstimate
    """
    counts = np.asarray(counts, dtype=float)
    grid = np.asarray(qmax_grid, dtype=float)
    if counts.shape != grid.shape:
        raise ConfigError("counts 与 qmax_grid 长度不同")
    mask = counts > 0
    if np.count_nonzero(mask) < TAIL_MIN_POINTS:
        raise InsufficientTail(
            f"仅 {np.count_nonzero(mask)} 个阈值有非零超越计数 (至少需要 {TAIL_MIN_POINTS}); "
            f"请增大仿真块数")
    probs = counts[mask] / float(num_effective_blocks)
    X = sm.add_constant(grid[mask], has_constant="add")
    fit = sm.OLS(np.log(probs), X).fit()
    intercept, slope = float(fit.params[0]), float(fit.params[1])
    r_squared = float(fit.rsquared) if np.isfinite(fit.rsquared) else 1.0
    stderr = float(fit.bse[1]) if np.isfinite(fit.bse[1]) else 0.0
    lo, hi = TAIL_P_RANGE
    in_range = int(np.count_nonzero((probs >= lo) & (probs <= hi)))
    usable = r_squared >= TAIL_MIN_R2 and in_range >= TAIL_MIN_POINTS
    return TailEstimate(slope, intercept, r_squared, stderr,
                        tuple(int(c) for c in counts), tuple(grid), usable)


def _grid_from_samples(queue):
    """
    由预运行样本的经验超越曲线选取阈值

    起点取总体超越概率 GRID_TAIL_START·min(非零比例, TAIL_P_RANGE[1]) 处 (避开 0 处的原子
    与非指数的主体), 终点取总体超越概率 TAIL_P_RANGE[0] 处,
    其间线性等距 (指数尾部下即超越概率对数等距).
    非零样本比例不超过 TAIL_P_RANGE[0] 时视为空队列, 返回 None
    """
    if len(queue) == 0:
        return None
    p_lo, p_hi = TAIL_P_RANGE
    nonzero = float(np.count_nonzero(queue > 0)) / len(queue)
    if nonzero <= p_lo:
        return None
    p_top = min(p_hi, nonzero)
    p_start = max(GRID_TAIL_START * p_top, min(p_top, 10.0 * p_lo))
    q_start, q_end = np.quantile(queue, [1.0 - p_start, 1.0 - p_lo])
    if not q_start > 0:
        q_start = float(np.min(queue[queue > 0]))
    if not q_end > q_start:
        return (float(q_start),)
    return tuple(np.linspace(q_start, q_end, GRID_POINTS))


def auto_qmax_grids(sim, pilot_blocks=PILOT_BLOCKS):
    """
    预运行 (独立随机流) 选取两个队列的阈值网格

    返回 (源网格, 中继网格); 队列基本为空时对应项为 None
    """
    pilot = replace(sim, num_blocks=max(MIN_BLOCKS, min(int(pilot_blocks), sim.num_blocks)),
                    qmax_grid=(1.0,), relay_qmax_grid=None, stream=sim.stream + 1)
    trace = simulate_tandem(pilot, keep_trace=True)
    return _grid_from_samples(trace.source_queue), _grid_from_samples(trace.relay_queue)


# ============================================================================
# 验证
# ============================================================================

@dataclass(frozen=True)
class QueueVerdict:
    """status: empty / unstable / fit"""
    status: str
    target: float
    meets: bool
    tail: Optional[TailEstimate] = None


@dataclass(frozen=True)
class RateCheck:
    rate: float
    source: QueueVerdict
    relay: QueueVerdict

    @property
    def both_meet(self):
        return self.source.meets and self.relay.meets


@dataclass(frozen=True)
class ValidationReport:
    seed: int
    analytic_rate: float
    margin: float
    tau: Optional[float]
    lower: RateCheck
    upper: RateCheck

    @property
    def passed(self):
        return self.lower.both_meet and not self.upper.both_meet

    def to_rows(self):
        rows = []
        for label, check in (("lower", self.lower), ("upper", self.upper)):
            for queue, verdict in (("source", check.source), ("relay", check.relay)):
                tail = verdict.tail
                rows.append({
                    "seed": self.seed,
                    "point": label,
                    "arrival_rate": check.rate,
                    "queue": queue,
                    "status": verdict.status,
                    "target_theta": verdict.target,
                    "theta_est": tail.theta if tail else None,
                    "slope_stderr": tail.slope_stderr if tail else None,
                    "r_squared": tail.r_squared if tail else None,
                    "usable": tail.usable if tail else None,
                    "meets_target": verdict.meets,
                    "seed_passed": self.passed,
                })
        return rows


@dataclass(frozen=True)
class ValidationSummary:
    reports: Tuple[ValidationReport, ...] = field(default_factory=tuple)

    @property
    def passed_count(self):
        return sum(1 for r in self.reports if r.passed)

    @property
    def verdict(self):
        if not self.reports:
            return "FAIL"
        return "PASS" if self.passed_count >= PASS_FRACTION * len(self.reports) else "FAIL"


def _queue_states(system, rate, tau):
    """
    解析判断两个队列: 'unstable' (漂移非负), 'empty' (到达不超过最小服务) 或 None
    """
    share1, share2 = time_share_factors(system, tau)
    mean1, mean2 = scaled_ergodic_rates(system, tau)
    c1_min, c1_max = capacity_support(system.link1, system.block)
    c2_min, _ = capacity_support(system.link2, system.block)
    if rate >= mean1:
        source = "unstable"
    elif rate <= share1 * c1_min:
        source = "empty"
    else:
        source = None
    relay_in = min(rate, mean1)
    if relay_in >= mean2:
        relay = "unstable"
    elif min(rate, share1 * c1_max) <= share2 * c2_min:
        relay = "empty"
    else:
        relay = None
    return source, relay


def _check_rate(system, rate, tau, num_blocks, seed, eps_est, lower):
    theta1, theta2 = system.theta1, system.theta2
    state_s, state_r = _queue_states(system, rate, tau)
    sim = SimConfig(system, rate, num_blocks, seed, tau=tau)

    need_fit = state_s is None or state_r is None
    grid_s = grid_r = None
    if need_fit:
        grid_s, grid_r = auto_qmax_grids(sim)
        if state_s is None and grid_s is None:
            state_s = "empty"
        if state_r is None and grid_r is None:
            state_r = "empty"

    trace = None
    if state_s is None or state_r is None:
        sim = replace(sim, qmax_grid=grid_s or grid_r, relay_qmax_grid=grid_r or grid_s)
        trace = simulate_tandem(sim)

    def verdict(state, counts, grid, target):
        if state == "empty":
            return QueueVerdict("empty", target, True)
        if state == "unstable":
            return QueueVerdict("unstable", target, False)
        tail = estimate_tail_exponent(counts, grid, trace.effective_blocks)
        if lower:
            meets = tail.usable and tail.theta >= target * (1.0 - eps_est)
        else:
            meets = tail.theta >= target
        return QueueVerdict("fit", target, meets, tail)

    source = verdict(state_s, trace.source_counts if trace else None, sim.qmax_grid, theta1)
    relay = verdict(state_r, trace.relay_counts if trace else None, sim.relay_grid, theta2)
    return RateCheck(rate, source, relay)


def validate_rate(cfg, capacity, margin=DEFAULT_MARGIN, num_blocks=10_000_000, seed=0,
                  eps_est=EPS_EST):
    """
    在 (1 − margin)·R_E 与 (1 + margin)·R_E 处仿真

    通过条件: 低速率处两队列估计指数均不低于 θ·(1 − eps_est);
    高速率处至少一个队列未达到目标指数或不稳定
    """
    if not (0.0 < margin < 1.0):
        raise ConfigError(f"margin 必须在 (0, 1) 内: {margin}")
    tau = None
    if cfg.half_duplex:
        tau = capacity.tau_sol
        if capacity.rate_is_supremum:
            tau = tau - TAU0_BACKOFF
    rate = capacity.rate
    lower = _check_rate(cfg, (1.0 - margin) * rate, tau, num_blocks, seed, eps_est, lower=True)
    upper = _check_rate(cfg, (1.0 + margin) * rate, tau, num_blocks, seed, eps_est, lower=False)
    report = ValidationReport(seed, rate, margin, tau, lower, upper)
    logger.info("种子 %d: %s", seed, "通过" if report.passed else "未通过")
    return report


def run_validation_seeds(cfg, capacity, margin=DEFAULT_MARGIN, num_blocks=10_000_000,
                         seeds=(0,), workers=1, eps_est=EPS_EST):
    """多种子验证; workers > 1 时使用进程池, 结果按种子顺序汇总"""
    seeds = tuple(int(s) for s in seeds)
    job = partial(_seed_job, cfg, capacity, margin, num_blocks, eps_est)
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
            reports = tuple(pool.map(job, seeds))
    else:
        reports = tuple(job(s) for s in seeds)
    return ValidationSummary(reports)


def _seed_job(cfg, capacity, margin, num_blocks, eps_est, seed):
    return validate_rate(cfg, capacity, margin, num_blocks, seed, eps_est)
