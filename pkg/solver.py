#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
求根模块
Bracketed scalar root finding and the exponent / time-share searches

功能:
1. 区间求根 (Brent 法, scipy.optimize.brentq), 支持 "最小根" 扫描
2. θ̄: f(θ) = f(0) 的唯一正根
3. θ̃*: 情形 III.a (最小根) 与 III.b 的源指数
4. τ0, τ*, τ′: 半双工时隙参数
5. 给定恒定到达速率 R 时源/中继队列的衰减指数

日期: 2026-10-19
"""

import math
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from errors import ConfigError, NoRootInBracket, NumericalFailure
from relay_config import (
    ROOT_XTOL_EXPONENT, ROOT_XTOL_FRACTION, ROOT_FTOL, SCAN_POINTS,
    MONOTONE_GRID_POINTS, BRACKET_CAP, CASE_BAND,
)
from channel import capacity_support, ergodic_rate
from lmgf import (
    DuplexMode, lambda_sr, lambda_rd, lambda_relay_arrival, g_rate, h_rate,
    f_func, ec1, ec2, time_share_factors, scaled_ergodic_rates,
)

logger = logging.getLogger(__name__)

_MAX_HALVINGS = 60
# θ̄ 右侧检查点的相对步长
THETA_BAR_STEP = 1e-6


# ============================================================================
# 通用区间求根
# ============================================================================

class RootWant(str, Enum):
    ANY = "any"
    SMALLEST = "smallest"


@dataclass(frozen=True)
class RootSpec:
    func: Callable[[float], float]
    lo: float
    hi: float
    xtol: float = ROOT_XTOL_EXPONENT
    ftol: float = ROOT_FTOL
    want: RootWant = RootWant.ANY
    scan_points: int = SCAN_POINTS

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"区间必须满足 lo < hi: [{self.lo}, {self.hi}]")
        if not (self.xtol > 0 and self.ftol > 0):
            raise ConfigError("容差必须为正")
        if self.scan_points < 2:
            raise ConfigError("扫描点数至少为 2")


@dataclass(frozen=True)
class RootResult:
    value: float
    sign_changes: int = 1


def scan_sign_changes(func, lo, hi, points):
    """
    均匀网格扫描

    返回:
        (xs, values, 最左变号区间的下标或 None, 变号次数)
        区间下标 i 表示根在 [xs[i], xs[i+1]] 内; values[i] == 0 时根就是 xs[i]
    """
    xs = np.linspace(lo, hi, points)
    values = np.array([func(float(x)) for x in xs])
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"扫描中出现非有限函数值, 区间 [{lo}, {hi}]")
    exact = values == 0.0
    crossing = values[:-1] * values[1:] < 0
    count = int(np.count_nonzero(exact) + np.count_nonzero(crossing))
    candidates = [i for i in range(points - 1) if exact[i] or crossing[i]]
    if exact[-1]:
        candidates.append(points - 1)
    first = candidates[0] if candidates else None
    return xs, values, first, count


def _brent(func, lo, hi, xtol, f_lo=None, f_hi=None):
    f_lo = func(lo) if f_lo is None else f_lo
    f_hi = func(hi) if f_hi is None else f_hi
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise NoRootInBracket(f"[{lo:.6g}, {hi:.6g}] 两端同号: f={f_lo:.6g}, {f_hi:.6g}")
    try:
        return optimize.brentq(func, lo, hi, xtol=xtol, maxiter=500)
    except RuntimeError as e:
        raise NumericalFailure(f"brentq 未收敛: {e}") from e


def find_root(spec):
    """按 RootSpec 求根, 返回 RootResult (含扫描到的变号次数)"""
    if spec.want is RootWant.ANY:
        return RootResult(_brent(spec.func, spec.lo, spec.hi, spec.xtol))

    xs, values, first, count = scan_sign_changes(spec.func, spec.lo, spec.hi, spec.scan_points)
    if first is None:
        raise NoRootInBracket(f"[{spec.lo:.6g}, {spec.hi:.6g}] 内 {spec.scan_points} 点扫描未发现变号")
    if values[first] == 0.0:
        return RootResult(float(xs[first]), count)
    root = _brent(spec.func, float(xs[first]), float(xs[first + 1]), spec.xtol,
                  values[first], values[first + 1])
    return RootResult(root, count)


def bracketed_root(spec):
    return find_root(spec).value


# ============================================================================
# θ̄
# ============================================================================

@dataclass(frozen=True)
class ThetaBarResult:
    """
    value 为 None 表示支撑集退化 (S-R 最大容量不超过 R-D 最小容量)
    """
    value: Optional[float]
    f0: float
    peak: Optional[float] = None
    support_degenerate: bool = False


def support_degenerate(cfg):
    """S-R 本质最大容量 ≤ R-D 本质最小容量"""
    _, c1_max = capacity_support(cfg.link1, cfg.block)
    c2_min, _ = capacity_support(cfg.link2, cfg.block)
    return not c1_max > c2_min


def solve_theta_bar(cfg):
    """
    θ̄: f(θ) − f(0) = 0 的唯一正根 (全双工)

    先判断 f(θ1) 与 f(0) 的大小以确定根在 θ1 的哪一侧, 再在确认的区间内用 Brent 法求根;
    最后检查 f 的峰值严格大于 f(0)
    """
    f0 = f_func(cfg, 0.0)
    if support_degenerate(cfg):
        logger.debug("θ̄: 支撑集退化, 中继可立即服务任意到达")
        return ThetaBarResult(None, f0, support_degenerate=True)

    def residual(theta):
        return f_func(cfg, theta) - f0

    theta1 = cfg.theta1
    r1 = residual(theta1)
    if r1 == 0.0:
        root = theta1
    elif r1 > 0:
        lo, hi = theta1, max(1.0, 2.0 * theta1)
        r_hi = residual(hi)
        while r_hi >= 0:
            lo, hi = hi, 2.0 * hi
            if hi > BRACKET_CAP:
                raise NumericalFailure(f"θ̄: f 在 θ ≤ {BRACKET_CAP:g} 内未回落到 f(0)")
            r_hi = residual(hi)
        logger.debug("θ̄ 区间 [%g, %g]", lo, hi)
        root = _brent(residual, lo, hi, ROOT_XTOL_EXPONENT, f_hi=r_hi)
    else:
        x = theta1
        for _ in range(_MAX_HALVINGS):
            x *= 0.5
            r_x = residual(x)
            if r_x > 0:
                break
        else:
            raise NumericalFailure("θ̄: 在 (0, θ1] 内未找到 f > f(0) 的点 (f'(0) 非正?)")
        logger.debug("θ̄ 区间 [%g, %g]", x, theta1)
        root = _brent(residual, x, theta1, ROOT_XTOL_EXPONENT, f_lo=r_x, f_hi=r1)

    # θ̄ 右侧 f 必须已回落到 f(0) 以下
    beyond = root + max(THETA_BAR_STEP * root, 1e3 * ROOT_XTOL_EXPONENT)
    if not residual(beyond) < 0:
        raise NumericalFailure(f"θ̄ = {root:.6g}: f({beyond:.6g}) 未低于 f(0) = {f0:.6g}")

    peak = optimize.minimize_scalar(lambda t: -f_func(cfg, t), bounds=(0.0, root),
                                    method="bounded", options={"xatol": root * 1e-8})
    peak_theta = float(peak.x)
    if not f_func(cfg, peak_theta) > f0:
        raise NumericalFailure(f"θ̄ = {root:.6g}: f 的峰值未超过 f(0), 根不唯一或不存在")
    return ThetaBarResult(root, f0, peak=peak_theta)


# ============================================================================
# θ̃*
# ============================================================================

@dataclass(frozen=True)
class ExponentSolution:
    value: float
    sign_changes: int = 1
    degenerate: bool = False


def solve_theta_tilde_star_a(cfg, tau=None):
    """情形 III.a: [θ1, θ2] 内 g(θ̃) = h(θ̃, θ2) 的最小解"""
    theta1, theta2 = cfg.theta1, cfg.theta2
    if not theta1 < theta2:
        raise NoRootInBracket(f"III.a 需要 θ1 < θ2 (θ1={theta1}, θ2={theta2})")

    def residual(theta_tilde):
        return g_rate(cfg, theta_tilde, tau) - h_rate(cfg, theta_tilde, theta2, tau)

    spec = RootSpec(residual, theta1, theta2, want=RootWant.SMALLEST)
    try:
        result = find_root(spec)
    except NoRootInBracket:
        # 分支判定容差带内 g(θ2) 与 h(θ2, θ2) 视为相等
        end = residual(theta2)
        if abs(end) <= CASE_BAND * max(1.0, abs(g_rate(cfg, theta2, tau))):
            return ExponentSolution(theta2, 0)
        raise
    if result.sign_changes > 1:
        logger.warning("III.a: 扫描发现 %d 次变号, 取最小解 θ̃* = %.6g",
                       result.sign_changes, result.value)
    return ExponentSolution(result.value, result.sign_changes)


def solve_theta_tilde_star_b(cfg, tau=None):
    """情形 III.b: θ̃ ≥ θ2 上 g(θ̃) = EC2(θ2) 的解 (g 单调递减)"""
    theta1, theta2 = cfg.theta1, cfg.theta2
    target = ec2(cfg, theta2, tau)
    share1, _ = time_share_factors(cfg, tau)
    c1_min, c1_max = capacity_support(cfg.link1, cfg.block)
    band = CASE_BAND * max(1.0, abs(target))

    if c1_min == c1_max:
        # g 为常数: 任意 θ̃ 都满足方程, 速率不受影响
        if abs(share1 * c1_min - target) <= band:
            return ExponentSolution(max(theta2, theta1), 0, degenerate=True)
        raise NoRootInBracket(f"III.b: g 恒为 {share1 * c1_min:.6g}, 无法等于 {target:.6g}")

    def residual(theta_tilde):
        return g_rate(cfg, theta_tilde, tau) - target

    r_lo = residual(theta2)
    if r_lo <= band:
        return ExponentSolution(theta2)
    lo, hi = theta2, 2.0 * theta2
    r_hi = residual(hi)
    while r_hi > 0:
        lo, r_lo = hi, r_hi
        hi *= 2.0
        if hi > BRACKET_CAP:
            if target <= share1 * c1_min + band:
                # 目标等于最小容量, 解在无穷远处
                return ExponentSolution(math.inf, 0, degenerate=True)
            raise NoRootInBracket(f"III.b: g 在 θ̃ ≤ {BRACKET_CAP:g} 内未降到 {target:.6g}")
        r_hi = residual(hi)
    return ExponentSolution(_brent(residual, lo, hi, ROOT_XTOL_EXPONENT, r_lo, r_hi))


# ============================================================================
# 半双工时隙参数
# ============================================================================

def _as_half_duplex(cfg):
    if cfg.half_duplex:
        return cfg
    return replace(cfg, mode=DuplexMode.HALF_DUPLEX)


def solve_tau0(cfg):
    """τ0 = Ē2 / (Ē1 + Ē2), 稳定性给出的时隙上界"""
    rate1 = ergodic_rate(cfg.link1, cfg.block)
    rate2 = ergodic_rate(cfg.link2, cfg.block)
    if not (rate1 > 0 and rate2 > 0 and math.isfinite(rate1) and math.isfinite(rate2)):
        raise ConfigError(f"τ0 需要两条链路遍历速率为有限正数: {rate1}, {rate2}")
    return rate2 / (rate1 + rate2)


def _solve_monotone_tau(residual, label):
    grid = np.linspace(0.0, 1.0, MONOTONE_GRID_POINTS)
    values = np.array([residual(float(t)) for t in grid])
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"{label}: 残差出现非有限值")
    steps = np.diff(values)
    slack = ROOT_FTOL * max(1.0, float(np.max(np.abs(values))))
    if np.any(steps < -slack):
        raise NumericalFailure(f"{label}: 残差在 τ 网格上不单调递增")
    if values[0] > 0 or values[-1] < 0:
        raise NumericalFailure(f"{label}: 残差在 [0, 1] 两端未变号 ({values[0]:.6g}, {values[-1]:.6g})")
    return _brent(residual, 0.0, 1.0, ROOT_XTOL_FRACTION, values[0], values[-1])


def solve_tau_star(cfg):
    """τ*: EC1(θ1; τ) = EC2(θ2; 1 − τ)"""
    hd = _as_half_duplex(cfg)

    def residual(tau):
        return ec1(hd, hd.theta1, tau) - ec2(hd, hd.theta2, tau)

    return _solve_monotone_tau(residual, "τ*")


def solve_tau_prime(cfg):
    """τ′: g(θ1; τ) = h(θ1, θ2; τ), 第二分支形式"""
    hd = _as_half_duplex(cfg)
    theta1, theta2 = hd.theta1, hd.theta2

    def residual(tau):
        relay = lambda_rd(hd, -theta2, tau) + lambda_sr(hd, theta2 - theta1, tau)
        return ec1(hd, theta1, tau) + relay / theta1

    return _solve_monotone_tau(residual, "τ′")


# ============================================================================
# 给定速率下的队列衰减指数
# ============================================================================

def _convex_positive_root(func, start):
    """
    凸函数 func (func(0) = 0, 初始斜率为负) 的正根; 一直不回升时返回 math.inf,
    向 0 减半始终取不到负值 (初始斜率非负) 时抛出 NumericalFailure
    """
    x = start
    value = func(x)
    if value <= 0:
        lo, f_lo = x, value
        hi = 2.0 * x
        f_hi = func(hi)
        while f_hi <= 0:
            lo, f_lo = hi, f_hi
            hi *= 2.0
            if hi > BRACKET_CAP:
                return math.inf
            f_hi = func(hi)
        return _brent(func, lo, hi, ROOT_XTOL_EXPONENT, f_lo, f_hi)
    hi, f_hi = x, value
    for _ in range(_MAX_HALVINGS):
        x *= 0.5
        value = func(x)
        if value < 0:
            return _brent(func, x, hi, ROOT_XTOL_EXPONENT, value, f_hi)
        hi, f_hi = x, value
    raise NumericalFailure(
        f"减半 {_MAX_HALVINGS} 次后 func 在 (0, {start:.6g}] 内仍未取负值 (x = {x:.3g}, func = {value:.3g}), "
        f"初始斜率非负")


def solve_source_exponent(cfg, R, tau=None):
    """
    源队列衰减指数: g(θ̃) = R 的解

    R 不超过 S-R 最小容量时队列恒空, 返回 math.inf;
    R 不低于 S-R 遍历速率时无正指数 (ConfigError)
    """
    share1, _ = time_share_factors(cfg, tau)
    c1_min, _ = capacity_support(cfg.link1, cfg.block)
    if R <= share1 * c1_min:
        return math.inf
    rate1, _ = scaled_ergodic_rates(cfg, tau)
    if R >= rate1:
        raise ConfigError(f"R = {R:.6g} 不低于 S-R 遍历速率 {rate1:.6g}, 源队列不稳定")

    def lhs(theta):
        return R * theta + lambda_sr(cfg, -theta, tau)

    return _convex_positive_root(lhs, cfg.theta1)


def solve_relay_exponent(cfg, R, theta_tilde, tau=None):
    """
    中继队列衰减指数: h(θ̃, θ̂) = R 的解 θ̂

    即 Λ_r(θ̂) + Λ_rd(−θ̂) = 0 的正根, Λ_r 为源离开过程的 LMGF
    """
    _, share2 = time_share_factors(cfg, tau)
    c2_min, _ = capacity_support(cfg.link2, cfg.block)
    if R <= share2 * c2_min:
        return math.inf
    _, rate2 = scaled_ergodic_rates(cfg, tau)
    if R >= rate2:
        raise ConfigError(f"R = {R:.6g} 不低于 R-D 遍历速率 {rate2:.6g}, 中继队列不稳定")

    def lhs(theta):
        return lambda_relay_arrival(cfg, theta, R, theta_tilde, tau) + lambda_rd(cfg, -theta, tau)

    return _convex_positive_root(lhs, cfg.theta2)
