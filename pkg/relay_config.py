#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
全局配置模块
Global settings for the two-hop relay effective-capacity toolkit

功能:
1. 默认块参数 (T = 2 ms, B = 100 kHz) 与路径损耗指数
2. 数值容差 (积分 / 求根 / 分支判定)
3. 仿真默认值 (预热, 估计余量, 阈值数量)
4. dB 与线性值换算
5. JSON 配置文件读写
6. 日志初始化与并行线程数 (EFFCAP_THREADS)

单位约定: θ 以 1/bit 计, 速率以 bits/block 计, 队列长度以 bit 计.

日期: 2026-10-19
"""

import os
import json
import math
import logging

from errors import ConfigError

# ============================================================================
# 块参数
# ============================================================================

DEFAULT_T_SECONDS = 2e-3
DEFAULT_B_HZ = 1e5
DEFAULT_PATH_LOSS_ALPHA = 4.0

# ============================================================================
# 数值容差
# ============================================================================

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
# 积分误差估计超过该相对值视为失败
QUAD_FAILURE_REL = 1e-6

ROOT_XTOL_EXPONENT = 1e-10
ROOT_XTOL_FRACTION = 1e-12
ROOT_FTOL = 1e-9
SCAN_POINTS = 256
MONOTONE_GRID_POINTS = 64
BRACKET_CAP = 2.0 ** 40

CASE_BAND = 1e-9
STABILITY_BAND = 1e-9
TAU0_BACKOFF = 1e-6

# ============================================================================
# 仿真默认值
# ============================================================================

MIN_BLOCKS = 10_000
WARMUP_FRACTION = 0.05
WARMUP_MIN_BLOCKS = 1_000
CHUNK_BLOCKS = 1_000_000
PILOT_BLOCKS = 1_000_000
GRID_POINTS = 8
# 阈值网格起点: 非零样本的超越概率 0.1 (即正样本的 90% 分位)
GRID_TAIL_START = 0.1
EPS_EST = 0.15
DEFAULT_MARGIN = 0.1
DEFAULT_SIM_BLOCKS = 10_000_000
DEFAULT_SEEDS = 5
PASS_FRACTION = 0.8

TAIL_MIN_R2 = 0.98
TAIL_MIN_POINTS = 3
TAIL_P_RANGE = (1e-4, 1e-1)

OUTPUT_DIR = "output"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def db_to_linear(value_db):
    """dB -> 线性功率比"""
    return 10.0 ** (float(value_db) / 10.0)


def linear_to_db(value):
    if value <= 0:
        raise ConfigError(f"线性值必须为正才能换算为 dB: {value}")
    return 10.0 * math.log10(value)


def load_json(path):
    """读取 JSON 配置文件"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"配置文件不存在: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"配置文件 JSON 解析失败: {path}: {e}") from e


def save_json(data, path):
    """保存 JSON 配置文件"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")


def setup_logging(verbose=False):
    """初始化日志; verbose 时输出 DEBUG"""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    return logging.getLogger("effcap")


def worker_count():
    """
    并行进程数上限

    读取环境变量 EFFCAP_THREADS; 未设置时使用 CPU 核数
    """
    raw = os.environ.get("EFFCAP_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as e:
        raise ConfigError(f"EFFCAP_THREADS 必须是正整数, 得到 {raw!r}") from e
    if n < 1:
        raise ConfigError(f"EFFCAP_THREADS 必须是正整数, 得到 {raw!r}")
    return n
