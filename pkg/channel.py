#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
信道模块 - 衰落分布与每块容量的指数矩
Channel module: fading-gain distributions and exponential moments of the per-block capacity

功能:
1. 衰落模型: Rayleigh (指数功率增益), 点质量, 经验离散分布
2. 每块容量 C = TB·log2(1 + SNR·z)  (bits/block)
3. 指数矩 E{e^{sC}} 及其对数 (对数域计算, 避免溢出)
4. 倾斜均值 E{C e^{sC}} / E{e^{sC}} 与遍历速率
5. 容量的本质下确界/上确界
6. 可复现的随机数流 (Philox, 每条链路一条独立流)

日期: 2026-10-19
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import ClassVar, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from errors import ConfigError, DivergentMoment, NumericalFailure
from relay_config import (
    DEFAULT_T_SECONDS, DEFAULT_B_HZ, QUAD_EPSABS, QUAD_EPSREL, QUAD_FAILURE_REL,
)


LN2 = math.log(2.0)

# 超过该值 e^t 溢出, 被积函数视为 0
_T_OVERFLOW = 700.0


# ============================================================================
# 衰落模型
# ============================================================================

@dataclass(frozen=True)
class Rayleigh:
    """Rayleigh 衰落: 功率增益 z ~ Exp(mean_power)"""
    mean_power: float
    kind: ClassVar[str] = "rayleigh"

    def __post_init__(self):
        if not (math.isfinite(self.mean_power) and self.mean_power > 0):
            raise ConfigError(f"Rayleigh mean_power 必须为有限正数: {self.mean_power}")

    def gain_bounds(self):
        return 0.0, math.inf


@dataclass(frozen=True)
class PointMass:
    """确定性增益 (无衰落)"""
    gain: float
    kind: ClassVar[str] = "point"

    def __post_init__(self):
        if not (math.isfinite(self.gain) and self.gain >= 0):
            raise ConfigError(f"PointMass gain 必须为有限非负数: {self.gain}")

    def gain_bounds(self):
        return self.gain, self.gain


@dataclass(frozen=True)
class EmpiricalDiscrete:
    """有限离散分布, gains[i] 以概率 probs[i] 出现"""
    gains: Tuple[float, ...]
    probs: Tuple[float, ...]
    kind: ClassVar[str] = "discrete"

    def __post_init__(self):
        gains = tuple(float(g) for g in self.gains)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "probs", probs)
        if len(gains) == 0 or len(gains) != len(probs):
            raise ConfigError("EmpiricalDiscrete 的 gains 与 probs 长度必须相同且非空")
        if any(not math.isfinite(g) or g < 0 for g in gains):
            raise ConfigError(f"EmpiricalDiscrete gains 必须为有限非负数: {gains}")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise ConfigError(f"EmpiricalDiscrete probs 必须非负: {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ConfigError(f"EmpiricalDiscrete probs 之和必须为 1 (误差 1e-12): {math.fsum(probs)}")

    def gain_bounds(self):
        support = [g for g, p in zip(self.gains, self.probs) if p > 0]
        return min(support), max(support)


FadingModel = Union[Rayleigh, PointMass, EmpiricalDiscrete]


def fading_to_dict(model):
    """衰落模型 -> 带 kind 标签的字典"""
    if isinstance(model, Rayleigh):
        return {"kind": "rayleigh", "mean_power": model.mean_power}
    if isinstance(model, PointMass):
        return {"kind": "point", "gain": model.gain}
    if isinstance(model, EmpiricalDiscrete):
        return {"kind": "discrete", "gains": list(model.gains), "probs": list(model.probs)}
    raise ConfigError(f"未知衰落模型: {model!r}")


def fading_from_dict(data):
    """带 kind 标签的字典 -> 衰落模型"""
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError(f"fading 必须是带 kind 字段的对象: {data!r}")
    kind = data["kind"]
    try:
        if kind == "rayleigh":
            return Rayleigh(float(data["mean_power"]))
        if kind == "point":
            return PointMass(float(data["gain"]))
        if kind == "discrete":
            return EmpiricalDiscrete(tuple(data["gains"]), tuple(data["probs"]))
    except KeyError as e:
        raise ConfigError(f"fading ({kind}) 缺少字段 {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"fading ({kind}) 字段无效: {e}") from e
    raise ConfigError(f"未知 fading kind: {kind!r} (可选: rayleigh, point, discrete)")


# ============================================================================
# 链路与块参数
# ============================================================================

@dataclass(frozen=True)
class LinkConfig:
    fading: FadingModel
    snr: float

    def __post_init__(self):
        if not (math.isfinite(self.snr) and self.snr > 0):
            raise ConfigError(f"snr 必须为有限正数 (线性值): {self.snr}")


@dataclass(frozen=True)
class BlockConfig:
    t_seconds: float = DEFAULT_T_SECONDS
    b_hz: float = DEFAULT_B_HZ

    def __post_init__(self):
        for name in ("t_seconds", "b_hz"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} 必须为有限正数: {value}")
        if not math.isfinite(self.tb_bits_scale):
            raise ConfigError("T·B 必须有限")

    @property
    def tb_bits_scale(self):
        """TB, 每块符号数"""
        return self.t_seconds * self.b_hz


def per_block_capacity(link, block, gain):
    """
    每块可传输比特数 TB·log2(1 + snr·gain)

    参数:
        link: LinkConfig
        block: BlockConfig
        gain: 功率增益 (≥ 0)
    """
    if gain < 0:
        raise ConfigError(f"gain 必须非负: {gain}")
    return block.tb_bits_scale * math.log1p(link.snr * gain) / LN2


def capacities_of_gains(link, block, gains, share=1.0):
    """向量化的每块容量, share 为半双工时隙比例"""
    return (share * block.tb_bits_scale / LN2) * np.log1p(link.snr * np.asarray(gains, dtype=float))


def capacity_support(link, block):
    """容量的 (本质下确界, 本质上确界); Rayleigh 上确界为 math.inf"""
    z_min, z_max = link.fading.gain_bounds()
    c_min = per_block_capacity(link, block, z_min)
    c_max = math.inf if math.isinf(z_max) else per_block_capacity(link, block, z_max)
    return c_min, c_max


# ============================================================================
# Rayleigh 积分核
# ============================================================================
# 变量 t = ln(1 + a·u), u ~ Exp(1), a = snr·mean_power, 即每符号容量 (nats)。
# E{e^{sC}} = ∫_0^∞ exp(φ(t)) dt,  φ(t) = (k+1)t − (e^t − 1)/a − ln a,  k = s·TB/ln2

def _rayleigh_peak(a, k):
    """对数被积函数的峰值位置与宽度尺度"""
    kp1 = k + 1.0
    if kp1 > 0 and a * kp1 > 1.0:
        return math.log(a * kp1), 1.0 / math.sqrt(kp1)
    slope = abs(kp1 - 1.0 / a)
    return 0.0, 1.0 / max(math.sqrt(1.0 / a), slope)


def _rayleigh_breakpoints(a, k):
    t_peak, width = _rayleigh_peak(a, k)
    points = {0.0, t_peak, math.log1p(a)}
    for mult in (5.0, 20.0):
        points.add(max(0.0, t_peak - mult * width))
        points.add(t_peak + mult * width)
    return sorted(points), t_peak


def _rayleigh_integrals(a, k, weight_t):
    """
    返回 (log 归一化常数, ∫ e^{φ-φmax}, ∫ t·e^{φ-φmax})

    weight_t 为 False 时第三项为 None
    """
    log_a = math.log(a)
    points, t_peak = _rayleigh_breakpoints(a, k)

    def phi(t):
        return (k + 1.0) * t - math.expm1(t) / a - log_a

    phi_max = phi(t_peak)

    def density(t):
        if t > _T_OVERFLOW:
            return 0.0
        return math.exp(phi(t) - phi_max)

    def weighted(t):
        if t > _T_OVERFLOW:
            return 0.0
        return t * math.exp(phi(t) - phi_max)

    segments = list(zip(points[:-1], points[1:])) + [(points[-1], math.inf)]
    integrands = [density] + ([weighted] if weight_t else [])
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for func in integrands:
            total, error = 0.0, 0.0
            for lo, hi in segments:
                value, err = integrate.quad(func, lo, hi, epsabs=QUAD_EPSABS,
                                            epsrel=QUAD_EPSREL, limit=200)
                total += value
                error += err
            if not math.isfinite(total) or total <= 0:
                raise NumericalFailure(
                    f"Rayleigh 积分非有限或非正 (a={a:.6g}, k={k:.6g}): {total}")
            if error > QUAD_FAILURE_REL * total + QUAD_EPSABS:
                raise NumericalFailure(
                    f"Rayleigh 积分未达到容差 (a={a:.6g}, k={k:.6g}): "
                    f"估计误差 {error:.3g}, 积分值 {total:.6g}")
            results.append(total)
    return phi_max, results[0], (results[1] if weight_t else None)


# ============================================================================
# 指数矩
# ============================================================================

@lru_cache(maxsize=65536)
def log_exp_moment(link, block, s):
    """
    log E{e^{s·C}}, C 为每块容量 (bits/block)

    参数:
        s: 每比特指数 (可正可负)
    返回:
        对数矩 (s = 0 时精确为 0)
    """
    s = float(s)
    if s == 0.0:
        return 0.0
    fading = link.fading
    tb = block.tb_bits_scale
    if isinstance(fading, PointMass):
        value = s * per_block_capacity(link, block, fading.gain)
    elif isinstance(fading, EmpiricalDiscrete):
        caps = capacities_of_gains(link, block, fading.gains)
        value = float(logsumexp(s * caps, b=np.asarray(fading.probs)))
    elif isinstance(fading, Rayleigh):
        a = link.snr * fading.mean_power
        k = s * tb / LN2
        phi_max, mass, _ = _rayleigh_integrals(a, k, weight_t=False)
        value = phi_max + math.log(mass)
    else:
        raise ConfigError(f"未知衰落模型: {fading!r}")
    if not math.isfinite(value):
        raise DivergentMoment(f"指数矩发散: s={s}, link={link}")
    return value


def exp_moment(link, block, s):
    """E{e^{s·C}}"""
    value = math.exp(log_exp_moment(link, block, s))
    if not math.isfinite(value) or value <= 0:
        raise DivergentMoment(f"E{{e^(sC)}} 超出浮点范围: s={s}")
    return value


@lru_cache(maxsize=65536)
def tilted_mean(link, block, s):
    """
    指数倾斜后的容量均值 E{C e^{sC}} / E{e^{sC}} (bits/block)

    即 d/ds log E{e^{sC}}; s = 0 时为遍历速率
    """
    s = float(s)
    fading = link.fading
    tb = block.tb_bits_scale
    if isinstance(fading, PointMass):
        return per_block_capacity(link, block, fading.gain)
    if isinstance(fading, EmpiricalDiscrete):
        caps = capacities_of_gains(link, block, fading.gains)
        probs = np.asarray(fading.probs)
        log_w = np.where(probs > 0, s * caps + np.log(np.where(probs > 0, probs, 1.0)), -np.inf)
        weights = np.exp(log_w - logsumexp(log_w))
        return float(np.dot(weights, caps))
    if isinstance(fading, Rayleigh):
        a = link.snr * fading.mean_power
        k = s * tb / LN2
        _, mass, first = _rayleigh_integrals(a, k, weight_t=True)
        return (first / mass) * tb / LN2
    raise ConfigError(f"未知衰落模型: {fading!r}")


def ergodic_rate(link, block):
    """遍历速率 TB·E{log2(1 + snr·z)} (bits/block)"""
    return tilted_mean(link, block, 0.0)


# ============================================================================
# 采样
# ============================================================================

def make_link_streams(seed, stream=0):
    """
    由一个 64 位种子派生两条独立的 Philox 随机流 (S-R, R-D)

    stream 区分同一种子下的不同用途 (例如预运行)
    """
    root = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    child1, child2 = root.spawn(2)
    return np.random.Generator(np.random.Philox(child1)), np.random.Generator(np.random.Philox(child2))


def sample_gains(model, rng, n):
    """n 个独立同分布的增益样本"""
    if isinstance(model, Rayleigh):
        return rng.exponential(model.mean_power, size=n)
    if isinstance(model, PointMass):
        return np.full(n, model.gain, dtype=float)
    if isinstance(model, EmpiricalDiscrete):
        return rng.choice(np.asarray(model.gains), size=n, p=np.asarray(model.probs))
    raise ConfigError(f"未知衰落模型: {model!r}")


def sample_gain(model, rng):
    return float(sample_gains(model, rng, 1)[0])
