#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
速率函数模块 - 服务过程的对数矩母函数与源/中继速率方程
Rate functions: LMGFs of the service processes, source/relay rate equations,
the case-analysis function f and its diagnostics

功能:
1. 系统配置 SystemConfig (两条链路, 块参数, QoS 指数对, 双工模式)
2. Λ_sr, Λ_rd 与中继到达过程的 LMGF (分段)
3. 源速率方程 g(θ̃) 与中继速率方程 h(θ̃, θ̂)
4. f(θ), 虚拟有效容量 E_C 与虚拟有效带宽 E_B
5. 斜率诊断量 α (f 在 0 处), β (h 对 θ̃)

半双工时 τ 作为显式参数传入, 不保存在 SystemConfig 中.

日期: 2026-10-19
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

from errors import ConfigError
from channel import LinkConfig, BlockConfig, log_exp_moment, tilted_mean, ergodic_rate


# ============================================================================
# 配置类型
# ============================================================================

class DuplexMode(str, Enum):
    FULL_DUPLEX = "full_duplex"
    HALF_DUPLEX = "half_duplex"


@dataclass(frozen=True)
class TimeShare:
    """半双工时隙划分: 源占 τ, 中继占 1 − τ"""
    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and 0.0 <= self.tau <= 1.0):
            raise ConfigError(f"τ 必须在 [0, 1] 内: {self.tau}")


@dataclass(frozen=True)
class SystemConfig:
    link1: LinkConfig
    link2: LinkConfig
    block: BlockConfig
    theta1: float
    theta2: float
    mode: DuplexMode = DuplexMode.FULL_DUPLEX

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} 必须为有限正数: {value}")
        object.__setattr__(self, "mode", DuplexMode(self.mode))

    @property
    def half_duplex(self):
        return self.mode is DuplexMode.HALF_DUPLEX

    def with_thetas(self, theta1=None, theta2=None):
        return replace(self,
                       theta1=self.theta1 if theta1 is None else float(theta1),
                       theta2=self.theta2 if theta2 is None else float(theta2))


def time_share_factors(cfg, tau=None):
    """
    两条链路的时隙比例 (τ1, τ2)

    全双工: (1, 1); 半双工: (τ, 1 − τ), 缺少 τ 时报错
    """
    if not cfg.half_duplex:
        return 1.0, 1.0
    if tau is None:
        raise ConfigError("半双工模式必须提供 τ")
    share = tau if isinstance(tau, TimeShare) else TimeShare(float(tau))
    return share.tau, 1.0 - share.tau


# ============================================================================
# LMGF
# ============================================================================

def lambda_sr(cfg, theta, tau=None):
    """Λ_sr(θ) = log E{e^{θ·τ1·C1}}"""
    share, _ = time_share_factors(cfg, tau)
    if share == 0.0:
        return 0.0
    return log_exp_moment(cfg.link1, cfg.block, theta * share)


def lambda_rd(cfg, theta, tau=None):
    """Λ_rd(θ) = log E{e^{θ·τ2·C2}}"""
    _, share = time_share_factors(cfg, tau)
    if share == 0.0:
        return 0.0
    return log_exp_moment(cfg.link2, cfg.block, theta * share)


def lambda_relay_arrival(cfg, theta, R, theta_tilde, tau=None):
    """
    源节点离开过程 (即中继到达过程) 的 LMGF

    参数:
        theta: ≥ 0
        R: 恒定到达速率 (bits/block)
        theta_tilde: 源队列衰减指数 (> 0, 可为 math.inf)
    返回:
        0 ≤ θ ≤ θ̃ 时为 Rθ; θ > θ̃ 时为 Rθ̃ + Λ_sr(θ − θ̃)
    """
    if R < 0 or theta < 0 or not theta_tilde > 0:
        raise ConfigError(f"需要 R ≥ 0, θ ≥ 0, θ̃ > 0 (R={R}, θ={theta}, θ̃={theta_tilde})")
    if theta <= theta_tilde:
        return R * theta
    return R * theta_tilde + lambda_sr(cfg, theta - theta_tilde, tau)


def link_effective_capacity(link, block, theta, scale=1.0):
    """
    单链路有效容量 −log E{e^{−θ·scale·C}} / θ (bits/block)

    scale 为时隙比例 (半双工中的 τ 或 1 − τ)
    """
    if not theta > 0:
        raise ConfigError(f"θ 必须为正: {theta}")
    if scale == 0.0:
        return 0.0
    return -log_exp_moment(link, block, -theta * scale) / theta


def ec1(cfg, theta, tau=None):
    """S-R 链路在 θ 下的有效容量 (半双工按 τ 缩放)"""
    share, _ = time_share_factors(cfg, tau)
    return link_effective_capacity(cfg.link1, cfg.block, theta, share)


def ec2(cfg, theta, tau=None):
    """R-D 链路在 θ 下的有效容量 (半双工按 1 − τ 缩放)"""
    _, share = time_share_factors(cfg, tau)
    return link_effective_capacity(cfg.link2, cfg.block, theta, share)


def scaled_ergodic_rates(cfg, tau=None):
    """按时隙比例缩放后的两条链路遍历速率 (bits/block)"""
    share1, share2 = time_share_factors(cfg, tau)
    return (share1 * ergodic_rate(cfg.link1, cfg.block),
            share2 * ergodic_rate(cfg.link2, cfg.block))


# ============================================================================
# 速率方程
# ============================================================================

def g_rate(cfg, theta_tilde, tau=None):
    """源速率方程 g(θ̃) = −Λ_sr(−θ̃)/θ̃"""
    if not theta_tilde > 0:
        raise ConfigError(f"θ̃ 必须为正: {theta_tilde}")
    return -lambda_sr(cfg, -theta_tilde, tau) / theta_tilde


def h_rate(cfg, theta_tilde, theta_hat, tau=None):
    """
    中继速率方程 h(θ̃, θ̂)

    θ̂ ≤ θ̃: −Λ_rd(−θ̂)/θ̂
    θ̂ > θ̃: −(Λ_rd(−θ̂) + Λ_sr(θ̂ − θ̃))/θ̃, 即 Rθ̃ + Λ_sr(θ̂ − θ̃) + Λ_rd(−θ̂) = 0 的解 R
    """
    if not (theta_tilde > 0 and theta_hat > 0):
        raise ConfigError(f"θ̃, θ̂ 必须为正: θ̃={theta_tilde}, θ̂={theta_hat}")
    if theta_hat <= theta_tilde:
        return -lambda_rd(cfg, -theta_hat, tau) / theta_hat
    return -(lambda_rd(cfg, -theta_hat, tau) + lambda_sr(cfg, theta_hat - theta_tilde, tau)) / theta_tilde


def f_func(cfg, theta, tau=None):
    """
    f(θ) = −(Λ_rd(−θ) + Λ_sr(θ − θ1)) / θ1

    f(0) = g(θ1), f(θ1) = EC2(θ1); θ̄ 是 f(θ) = f(0) 的正根
    """
    if theta < 0:
        raise ConfigError(f"θ 必须非负: {theta}")
    theta1 = cfg.theta1
    return -(lambda_rd(cfg, -theta, tau) + lambda_sr(cfg, theta - theta1, tau)) / theta1


def virtual_ec(cfg, theta, tau=None):
    """虚拟有效容量 E_C(θ) = −Λ_rd(−θ)/θ"""
    if not theta > 0:
        raise ConfigError(f"θ 必须为正: {theta}")
    return -lambda_rd(cfg, -theta, tau) / theta


def virtual_eb(cfg, theta, tau=None):
    """
    虚拟有效带宽 E_B (关于偏移 θ − θ1) = Λ_sr(θ − θ1)/θ

    θ = θ1 处定义为 0; 满足 f(θ) = (θ/θ1)(E_C(θ) − E_B)
    """
    if not theta > 0:
        raise ConfigError(f"θ 必须为正: {theta}")
    offset = theta - cfg.theta1
    if offset == 0.0:
        return 0.0
    return lambda_sr(cfg, offset, tau) / theta


# ============================================================================
# 斜率诊断量
# ============================================================================

def f_slope_alpha(cfg, theta1_arg, tau=None):
    """
    α(x) = E{log2(1+SNR2 z2)} − E_x{log2(1+SNR1 z1)}, 后者为在 −x 处倾斜的均值

    每符号尺度; α(0) 为两条链路遍历速率之差, f'(0) = TB·α(θ1)/θ1
    """
    if theta1_arg < 0:
        raise ConfigError(f"α 的参数必须非负: {theta1_arg}")
    share1, share2 = time_share_factors(cfg, tau)
    tb = cfg.block.tb_bits_scale
    mean2 = share2 * ergodic_rate(cfg.link2, cfg.block) / tb
    mean1 = share1 * tilted_mean(cfg.link1, cfg.block, -theta1_arg * share1) / tb
    return mean2 - mean1


def h_slope_beta(cfg, theta_tilde, tau=None):
    """
    β(θ̃) = θ̃·m1(θ2 − θ̃) + Λ_sr(θ2 − θ̃) + Λ_rd(−θ2)

    m1 为 S-R 容量在 θ2 − θ̃ 处的倾斜均值; ∂h(θ̃, θ2)/∂θ̃ = β/θ̃²
    """
    theta2 = cfg.theta2
    if not (0 < theta_tilde <= theta2):
        raise ConfigError(f"β 的参数必须在 (0, θ2] 内: {theta_tilde}")
    share1, _ = time_share_factors(cfg, tau)
    offset = theta2 - theta_tilde
    slope = share1 * tilted_mean(cfg.link1, cfg.block, offset * share1)
    return theta_tilde * slope + lambda_sr(cfg, offset, tau) + lambda_rd(cfg, -theta2, tau)
