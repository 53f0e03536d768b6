#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
场景配置解析
Scenario files: JSON config <-> SystemConfig, and sweep specifications

功能:
1. 解析单点配置 (几何形式或显式链路形式, SNR 可用 _db 后缀)
2. 序列化回字典 (线性 snr, 解析->序列化->解析 为恒等)
3. 扫描配置 SweepSpec (θ2 / d / snr2_db 一维或二维网格)
4. 按网格点生成系统配置

日期: 2026-10-19
"""

import math
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from errors import ConfigError
from relay_config import (
    DEFAULT_T_SECONDS, DEFAULT_B_HZ, DEFAULT_PATH_LOSS_ALPHA, DEFAULT_MARGIN,
    DEFAULT_SIM_BLOCKS, DEFAULT_SEEDS, MIN_BLOCKS, db_to_linear, load_json,
)
from channel import BlockConfig, LinkConfig, fading_from_dict, fading_to_dict
from lmgf import DuplexMode, SystemConfig
from effcap import RelayGeometry, geometry_to_config, min_stable_distance

logger = logging.getLogger(__name__)

AXIS_NAMES = ("theta2", "d", "snr2_db")
OUTPUT_NAMES = ("capacity", "case_tag", "theta_bar", "tau", "upper_bound")
MAX_AXIS_POINTS = 10_000


# ============================================================================
# 数据类型
# ============================================================================

@dataclass(frozen=True)
class SimulationSettings:
    margin: float = DEFAULT_MARGIN
    blocks: int = DEFAULT_SIM_BLOCKS
    seeds: int = DEFAULT_SEEDS
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.margin < 1.0):
            raise ConfigError(f"margin 必须在 (0, 1) 内: {self.margin}")
        if self.blocks < MIN_BLOCKS:
            raise ConfigError(f"blocks 至少为 {MIN_BLOCKS}: {self.blocks}")
        if self.seeds < 1:
            raise ConfigError(f"seeds 至少为 1: {self.seeds}")


@dataclass(frozen=True)
class Scenario:
    system: SystemConfig
    geometry: Optional[RelayGeometry] = None
    simulation: SimulationSettings = field(default_factory=SimulationSettings)


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: Tuple[float, ...]

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ConfigError(f"扫描轴必须是 {AXIS_NAMES} 之一: {self.name!r}")
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not (2 <= len(values) <= MAX_AXIS_POINTS):
            raise ConfigError(f"扫描轴 {self.name} 点数必须在 [2, {MAX_AXIS_POINTS}] 内: {len(values)}")
        diffs = np.diff(values)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError(f"扫描轴 {self.name} 必须严格单调")


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axis1: SweepAxis
    axis2: Optional[SweepAxis] = None
    outputs: Tuple[str, ...] = OUTPUT_NAMES

    def __post_init__(self):
        unknown = [o for o in self.outputs if o not in OUTPUT_NAMES]
        if unknown:
            raise ConfigError(f"未知输出 {unknown}, 可选 {OUTPUT_NAMES}")
        if self.axis2 is not None and self.axis2.name == self.axis1.name:
            raise ConfigError("两个扫描轴不能相同")
        if "d" in self.axis_names and self.base.geometry is None:
            raise ConfigError("d 轴扫描需要 geometry 形式的基础配置")

    @property
    def axis_names(self):
        return tuple(a.name for a in (self.axis1, self.axis2) if a is not None)

    def grid(self):
        """按网格顺序 (axis1 外层, axis2 内层) 给出每个点的轴取值字典"""
        if self.axis2 is None:
            return [{self.axis1.name: v} for v in self.axis1.values]
        return [{self.axis1.name: v1, self.axis2.name: v2}
                for v1 in self.axis1.values for v2 in self.axis2.values]


# ============================================================================
# 解析
# ============================================================================

def _number(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"缺少字段 {key!r}")
        return float(default)
    try:
        value = float(section[key])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"字段 {key!r} 必须是数值: {section[key]!r}") from e
    if not math.isfinite(value):
        raise ConfigError(f"字段 {key!r} 必须有限: {value}")
    return value


def _snr(section, prefix):
    """读取 prefix 或 prefix_db, 返回线性值"""
    linear_key, db_key = prefix, prefix + "_db"
    if linear_key in section and db_key in section:
        raise ConfigError(f"{linear_key} 与 {db_key} 不能同时给出")
    if db_key in section:
        return db_to_linear(_number(section, db_key))
    return _number(section, linear_key)


def _section(data, key, required=True):
    value = data.get(key)
    if value is None:
        if required:
            raise ConfigError(f"缺少配置节 {key!r}")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"配置节 {key!r} 必须是对象")
    return value


def parse_scenario(data):
    """配置字典 -> Scenario"""
    if not isinstance(data, dict):
        raise ConfigError("配置根节点必须是对象")
    block_data = _section(data, "block", required=False)
    block = BlockConfig(_number(block_data, "t_seconds", DEFAULT_T_SECONDS),
                        _number(block_data, "b_hz", DEFAULT_B_HZ))
    qos = _section(data, "qos")
    theta1, theta2 = _number(qos, "theta1"), _number(qos, "theta2")
    try:
        mode = DuplexMode(data.get("mode", DuplexMode.FULL_DUPLEX.value))
    except ValueError as e:
        raise ConfigError(f"mode 必须是 full_duplex 或 half_duplex: {data.get('mode')!r}") from e

    has_geometry, has_links = "geometry" in data, "links" in data
    if has_geometry == has_links:
        raise ConfigError("必须且只能给出 geometry 或 links 之一")

    geometry = None
    if has_geometry:
        geo = _section(data, "geometry")
        geometry = RelayGeometry(_number(geo, "d"), _snr(geo, "snr1"), _snr(geo, "snr2"),
                                 _number(geo, "path_loss_alpha", DEFAULT_PATH_LOSS_ALPHA))
        system = geometry_to_config(geometry, block, theta1, theta2, mode)
    else:
        links = _section(data, "links")
        parsed = []
        for name in ("link1", "link2"):
            link = _section(links, name)
            parsed.append(LinkConfig(fading_from_dict(link.get("fading")), _snr(link, "snr")))
        system = SystemConfig(parsed[0], parsed[1], block, theta1, theta2, mode)

    sim = _section(data, "simulation", required=False)
    simulation = SimulationSettings(
        margin=_number(sim, "margin", DEFAULT_MARGIN),
        blocks=int(_number(sim, "blocks", DEFAULT_SIM_BLOCKS)),
        seeds=int(_number(sim, "seeds", DEFAULT_SEEDS)),
        seed=int(sim.get("seed", 0)),
    )
    return Scenario(system, geometry, simulation)


def scenario_to_dict(scenario):
    """Scenario -> 配置字典 (snr 以线性值写出)"""
    system = scenario.system
    data = {
        "block": {"t_seconds": system.block.t_seconds, "b_hz": system.block.b_hz},
        "qos": {"theta1": system.theta1, "theta2": system.theta2},
        "mode": system.mode.value,
    }
    if scenario.geometry is not None:
        geo = scenario.geometry
        data["geometry"] = {"d": geo.d, "path_loss_alpha": geo.path_loss_alpha,
                            "snr1": geo.snr1, "snr2": geo.snr2}
    else:
        data["links"] = {
            name: {"fading": fading_to_dict(link.fading), "snr": link.snr}
            for name, link in (("link1", system.link1), ("link2", system.link2))
        }
    sim = scenario.simulation
    data["simulation"] = {"margin": sim.margin, "blocks": sim.blocks,
                          "seeds": sim.seeds, "seed": sim.seed}
    return data


def load_scenario(path):
    scenario = parse_scenario(load_json(path))
    logger.info("载入场景 %s (%s)", path, scenario.system.mode.value)
    return scenario


# ============================================================================
# 扫描配置
# ============================================================================

def _axis_values(axis, base):
    if "values" in axis:
        return list(axis["values"])
    if "logspace" in axis:
        lo, hi, n = axis["logspace"]
        return list(np.logspace(float(lo), float(hi), int(n)))
    if "linspace" in axis:
        lo, hi, n = axis["linspace"]
        return list(np.linspace(float(lo), float(hi), int(n)))
    if "stable_range" in axis:
        # 从稳定区下端 (不含) 到给定上端
        hi, n = axis["stable_range"]
        if base.geometry is None:
            raise ConfigError("stable_range 需要 geometry 形式的基础配置")
        geo = base.geometry
        lo = min_stable_distance(geo.snr1, geo.snr2, base.system.block, geo.path_loss_alpha)
        return list(np.linspace(lo, float(hi), int(n) + 1)[1:])
    raise ConfigError(f"扫描轴需要 values / logspace / linspace / stable_range 之一: {axis!r}")


def parse_axis(axis, base):
    if not isinstance(axis, dict) or "name" not in axis:
        raise ConfigError(f"扫描轴必须是带 name 字段的对象: {axis!r}")
    try:
        values = _axis_values(axis, base)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"扫描轴 {axis.get('name')!r} 网格无效: {e}") from e
    return SweepAxis(axis["name"], tuple(values))


def parse_sweep(data):
    """扫描配置字典 -> SweepSpec"""
    base = parse_scenario(data)
    sweep = _section(data, "sweep")
    axis1 = parse_axis(sweep.get("axis1"), base)
    axis2 = parse_axis(sweep["axis2"], base) if sweep.get("axis2") is not None else None
    # stable_range 按基础配置的 snr2 求稳定下端, 不随另一轴的 snr2_db 变化
    raw = [a for a in (sweep.get("axis1"), sweep.get("axis2")) if isinstance(a, dict)]
    if any("stable_range" in a for a in raw) and any(a.get("name") == "snr2_db" for a in raw):
        raise ConfigError("stable_range 的 d 轴不能与 snr2_db 轴组合; 请改用 linspace 给出 d 网格")
    outputs = tuple(sweep.get("outputs", OUTPUT_NAMES))
    return SweepSpec(base, axis1, axis2, outputs)


def load_sweep(path):
    sweep = parse_sweep(load_json(path))
    logger.info("载入扫描 %s: 轴 %s, 共 %d 点", path, sweep.axis_names, len(sweep.grid()))
    return sweep


def apply_point(base, point):
    """把一个网格点的轴取值套到基础场景上, 返回 SystemConfig"""
    system, geometry = base.system, base.geometry
    if "d" in point or ("snr2_db" in point and geometry is not None):
        geometry = replace(
            geometry,
            d=point.get("d", geometry.d),
            snr2=db_to_linear(point["snr2_db"]) if "snr2_db" in point else geometry.snr2,
        )
        system = geometry_to_config(geometry, system.block, system.theta1, system.theta2, system.mode)
    elif "snr2_db" in point:
        system = replace(system, link2=replace(system.link2, snr=db_to_linear(point["snr2_db"])))
    if "theta2" in point:
        system = system.with_thetas(theta2=point["theta2"])
    return system
