#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
有效容量模块 - 两跳译码转发中继在 QoS 约束下的有效容量
Effective capacity of the two-hop decode-and-forward link

功能:
1. 线性几何 (源-中继距离 d, 路径损耗 α) 到系统配置的转换
2. 稳定性检查 (遍历速率严格不等式)
3. 有效容量上界 (全双工 / 半双工)
4. 全双工分情形计算 (I / II / III.a / III.b / III.c / 支撑集退化)
5. 半双工计算 (τ = min(τ0, τ*) 或 min(τ0, τ′))
6. 稳定区间的最小 d

日期: 2026-10-19
"""

import math
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from scipy import optimize

from errors import (
    ConfigError, NoRootInBracket, NumericalFailure, StabilityBoundary, StabilityViolation,
)
from relay_config import CASE_BAND, STABILITY_BAND, DEFAULT_PATH_LOSS_ALPHA, ROOT_XTOL_FRACTION
from channel import BlockConfig, LinkConfig, Rayleigh, capacity_support, ergodic_rate
from lmgf import DuplexMode, SystemConfig, ec1, ec2, g_rate, scaled_ergodic_rates
from solver import (
    solve_theta_bar, solve_theta_tilde_star_a, solve_theta_tilde_star_b,
    solve_tau0, solve_tau_star, solve_tau_prime,
    solve_source_exponent, solve_relay_exponent,
)

logger = logging.getLogger(__name__)


# ============================================================================
# 结果类型
# ============================================================================

class CaseTag(str, Enum):
    FD_I = "FD-I"
    FD_II = "FD-II"
    FD_IIIA = "FD-IIIa"
    FD_IIIB = "FD-IIIb"
    FD_IIIC = "FD-IIIc"
    FD_SUPPORT_DEGENERATE = "FD-SupportDegenerate"
    HD_I = "HD-I"
    HD_II = "HD-II"


@dataclass(frozen=True)
class CapacityResult:
    """
    有效容量及所取分支

    theta_tilde_sol / theta_hat_sol 为该速率下源/中继队列的预测衰减指数,
    math.inf 表示队列恒空; None 表示未能求出
    """
    rate: float
    case_tag: CaseTag
    upper_bound: float
    ec1: float
    ec2: float
    theta_bar: Optional[float] = None
    theta_tilde_sol: Optional[float] = None
    theta_hat_sol: Optional[float] = None
    tau_sol: Optional[float] = None
    tau0: Optional[float] = None
    sign_changes: Optional[int] = None
    degenerate: bool = False
    rate_is_supremum: bool = False

    def to_row(self):
        return {
            "rate_bits_per_block": self.rate,
            "case_tag": self.case_tag.value,
            "theta_bar": self.theta_bar,
            "theta_tilde_sol": self.theta_tilde_sol,
            "theta_hat_sol": self.theta_hat_sol,
            "tau_sol": self.tau_sol,
            "tau0": self.tau0,
            "upper_bound": self.upper_bound,
        }


# ============================================================================
# 几何
# ============================================================================

@dataclass(frozen=True)
class RelayGeometry:
    """源在 0, 目的在 1, 中继在 d; 平均增益 1/d^α 与 1/(1−d)^α"""
    d: float
    snr1: float
    snr2: float
    path_loss_alpha: float = DEFAULT_PATH_LOSS_ALPHA

    def __post_init__(self):
        if not (0.0 < self.d < 1.0):
            raise ConfigError(f"d 必须在 (0, 1) 内: {self.d}")
        if not (math.isfinite(self.path_loss_alpha) and self.path_loss_alpha > 0):
            raise ConfigError(f"path_loss_alpha 必须为正: {self.path_loss_alpha}")
        for name in ("snr1", "snr2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} 必须为有限正数: {value}")

    def mean_powers(self):
        alpha = self.path_loss_alpha
        return self.d ** -alpha, (1.0 - self.d) ** -alpha


def geometry_to_config(geom, block, theta1, theta2, mode=DuplexMode.FULL_DUPLEX):
    """线性几何 -> 两条 Rayleigh 链路的系统配置"""
    mean1, mean2 = geom.mean_powers()
    return SystemConfig(
        link1=LinkConfig(Rayleigh(mean1), geom.snr1),
        link2=LinkConfig(Rayleigh(mean2), geom.snr2),
        block=block,
        theta1=theta1,
        theta2=theta2,
        mode=mode,
    )


def min_stable_distance(snr1, snr2, block=None, alpha=DEFAULT_PATH_LOSS_ALPHA):
    """
    全双工稳定区间的下端: 两条链路遍历速率相等的 d

    d 大于该值时 S-R 遍历速率严格小于 R-D 遍历速率
    """
    block = block or BlockConfig()

    def gap(d):
        geom = RelayGeometry(d, snr1, snr2, alpha)
        mean1, mean2 = geom.mean_powers()
        return (ergodic_rate(LinkConfig(Rayleigh(mean1), snr1), block)
                - ergodic_rate(LinkConfig(Rayleigh(mean2), snr2), block))

    lo, hi = 1e-6, 1.0 - 1e-6
    g_lo, g_hi = gap(lo), gap(hi)
    if g_hi >= 0:
        raise ConfigError("d ∈ (0, 1) 内没有满足稳定条件的位置")
    if g_lo < 0:
        return lo
    return optimize.brentq(gap, lo, hi, xtol=ROOT_XTOL_FRACTION)


# ============================================================================
# 稳定性与上界
# ============================================================================

class StabilityStatus(str, Enum):
    OK = "ok"
    VIOLATION = "violation"
    BOUNDARY = "boundary"


def stability_check(cfg, tau=None):
    """
    比较 (按时隙缩放的) 两条链路遍历速率

    严格小于 -> OK; 相对误差 1e-9 内相等 -> BOUNDARY; 反之 -> VIOLATION
    """
    rate1, rate2 = scaled_ergodic_rates(cfg, tau)
    scale = max(abs(rate1), abs(rate2))
    if abs(rate1 - rate2) <= STABILITY_BAND * scale:
        return StabilityStatus.BOUNDARY
    return StabilityStatus.OK if rate1 < rate2 else StabilityStatus.VIOLATION


def require_stable(cfg, tau=None):
    status = stability_check(cfg, tau)
    if status is StabilityStatus.OK:
        return
    rate1, rate2 = scaled_ergodic_rates(cfg, tau)
    if status is StabilityStatus.BOUNDARY:
        raise StabilityBoundary(
            f"稳定性边界: S-R 遍历速率 {rate1:.6g} 等于 R-D 遍历速率 {rate2:.6g} bits/block",
            rate1, rate2)
    raise StabilityViolation(
        f"不稳定: S-R 遍历速率 {rate1:.6g} 不小于 R-D 遍历速率 {rate2:.6g} bits/block",
        rate1, rate2)


def _hd_time_share(cfg):
    """(τ̃, τ0, τ*) 其中 τ̃ = min(τ0, τ*)"""
    tau0 = solve_tau0(cfg)
    tau_star = solve_tau_star(cfg)
    return min(tau0, tau_star), tau0, tau_star


def upper_bound(cfg):
    """
    有效容量上界

    全双工: min(EC1(θ1), EC2(θ2))
    半双工: EC1(θ1; τ̃), τ̃ = min(τ0, τ*)
    """
    if cfg.half_duplex:
        tau, _, _ = _hd_time_share(cfg)
        return ec1(cfg, cfg.theta1, tau)
    return min(ec1(cfg, cfg.theta1), ec2(cfg, cfg.theta2))


def _predicted_exponents(cfg, rate, tau=None):
    """速率 rate 下两队列的衰减指数; 求解失败时记为 None"""
    try:
        theta_tilde = solve_source_exponent(cfg, rate, tau)
    except (ConfigError, NumericalFailure, NoRootInBracket) as e:
        logger.warning("源队列指数求解失败 (R=%.6g): %s", rate, e)
        return None, None
    return theta_tilde, _predicted_relay_exponent(cfg, rate, theta_tilde, tau)


def _predicted_relay_exponent(cfg, rate, theta_tilde, tau=None):
    try:
        return solve_relay_exponent(cfg, rate, theta_tilde, tau)
    except (ConfigError, NumericalFailure, NoRootInBracket) as e:
        logger.warning("中继队列指数求解失败 (R=%.6g): %s", rate, e)
        return None


# ============================================================================
# 全双工
# ============================================================================

def effective_capacity_full_duplex(cfg):
    """
    全双工有效容量 (bits/block)

    θ1 ≥ θ2 -> I; 否则求 θ̄: θ2 ≤ θ̄ -> II, 否则比较 g(θ2) 与 EC2(θ2) 进入 III.a / III.b / III.c
    """
    if cfg.half_duplex:
        raise ConfigError("effective_capacity_full_duplex 需要全双工配置")
    require_stable(cfg)

    theta1, theta2 = cfg.theta1, cfg.theta2
    ec1_value = ec1(cfg, theta1)
    ec2_value = ec2(cfg, theta2)
    bound = min(ec1_value, ec2_value)
    common = dict(upper_bound=bound, ec1=ec1_value, ec2=ec2_value)

    if theta1 >= theta2:
        theta_tilde, theta_hat = _predicted_exponents(cfg, bound)
        logger.debug("情形 I: R_E = %.6g", bound)
        return CapacityResult(bound, CaseTag.FD_I, theta_tilde_sol=theta_tilde,
                              theta_hat_sol=theta_hat, **common)

    bar = solve_theta_bar(cfg)
    if bar.support_degenerate:
        return CapacityResult(ec1_value, CaseTag.FD_SUPPORT_DEGENERATE,
                              theta_tilde_sol=theta1, theta_hat_sol=math.inf,
                              degenerate=True, **common)

    theta_bar = bar.value
    if theta2 <= theta_bar * (1.0 + CASE_BAND):
        logger.debug("情形 II: θ2 = %.6g ≤ θ̄ = %.6g", theta2, theta_bar)
        return CapacityResult(ec1_value, CaseTag.FD_II, theta_bar=theta_bar,
                              theta_tilde_sol=theta1, theta_hat_sol=theta_bar, **common)

    g2 = g_rate(cfg, theta2)
    if g2 <= ec2_value * (1.0 + CASE_BAND):
        sol = solve_theta_tilde_star_a(cfg)
        rate = g_rate(cfg, sol.value)
        logger.debug("情形 III.a: θ̃* = %.6g, R_E = %.6g", sol.value, rate)
        return CapacityResult(rate, CaseTag.FD_IIIA, theta_bar=theta_bar,
                              theta_tilde_sol=sol.value, theta_hat_sol=theta2,
                              sign_changes=sol.sign_changes, degenerate=sol.degenerate, **common)

    c1_min, _ = capacity_support(cfg.link1, cfg.block)
    if ec2_value >= c1_min * (1.0 - CASE_BAND):
        sol = solve_theta_tilde_star_b(cfg)
        logger.debug("情形 III.b: θ̃* = %.6g, R_E = EC2(θ2) = %.6g", sol.value, ec2_value)
        return CapacityResult(ec2_value, CaseTag.FD_IIIB, theta_bar=theta_bar,
                              theta_tilde_sol=sol.value, theta_hat_sol=theta2,
                              degenerate=sol.degenerate, **common)

    logger.debug("情形 III.c: R-D 链路为瓶颈, R_E = %.6g", ec2_value)
    return CapacityResult(ec2_value, CaseTag.FD_IIIC, theta_bar=theta_bar,
                          theta_tilde_sol=math.inf, theta_hat_sol=theta2, **common)


# ============================================================================
# 半双工
# ============================================================================

def effective_capacity_half_duplex(cfg):
    """
    半双工有效容量

    θ1 ≥ θ2: τ = min(τ0, τ*); θ1 < θ2: τ = min(τ0, τ′); 速率为 EC1(θ1; τ).
    取到 τ0 时速率是上确界 (τ < τ0 才严格稳定), rate_is_supremum 置位
    """
    if not cfg.half_duplex:
        raise ConfigError("effective_capacity_half_duplex 需要半双工配置")
    theta1, theta2 = cfg.theta1, cfg.theta2
    tau_tilde, tau0, _ = _hd_time_share(cfg)
    bound = ec1(cfg, theta1, tau_tilde)

    if theta1 >= theta2:
        tag, tau_candidate = CaseTag.HD_I, tau_tilde
    else:
        tag, tau_candidate = CaseTag.HD_II, min(tau0, solve_tau_prime(cfg))

    supremum = tau_candidate >= tau0
    tau = tau0 if supremum else tau_candidate
    rate = ec1(cfg, theta1, tau)
    ec2_value = ec2(cfg, theta2, tau)
    if supremum:
        logger.info("半双工: τ 取到稳定上界 τ0 = %.6g, 速率为上确界", tau0)
        theta_hat = _predicted_relay_exponent(cfg, rate, theta1, tau)
    else:
        theta_hat = theta2
    if rate > bound * (1.0 + 1e-9):
        logger.warning("半双工速率 %.9g 超过上界 %.9g", rate, bound)
    return CapacityResult(rate, tag, upper_bound=bound, ec1=rate, ec2=ec2_value,
                          theta_tilde_sol=theta1, theta_hat_sol=theta_hat,
                          tau_sol=tau, tau0=tau0, rate_is_supremum=supremum)


def effective_capacity(cfg):
    """按双工模式分派"""
    if cfg.half_duplex:
        return effective_capacity_half_duplex(cfg)
    return effective_capacity_full_duplex(cfg)


def capacity_row(cfg):
    """
    单个扫描点: 计算有效容量并返回结果行, 失败时在 status 列记录原因
    """
    try:
        row = effective_capacity(cfg).to_row()
        row["status"] = "ok"
    except StabilityBoundary:
        row = {"status": "stability_boundary"}
    except StabilityViolation:
        row = {"status": "stability_violation"}
    except (NumericalFailure, NoRootInBracket, ArithmeticError) as e:
        logger.warning("数值计算失败 (θ2=%g): %s", cfg.theta2, e)
        row = {"status": "numerical_failure"}
    except ConfigError as e:
        logger.warning("参数无效: %s", e)
        row = {"status": "config_error"}
    return row
