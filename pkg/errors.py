#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
异常定义模块
Error types for the relay effective-capacity toolkit

功能:
1. 配置与参数校验错误 (ConfigError)
2. 数值计算错误 (DivergentMoment / NumericalFailure / NoRootInBracket)
3. 队列稳定性错误 (StabilityViolation / StabilityBoundary)
4. 仿真尾部拟合错误 (InsufficientTail)

日期: 2026-10-19
"""


class ConfigError(ValueError):
    """配置文件或参数不满足约束"""


class DivergentMoment(ArithmeticError):
    """指数矩 E{e^{sC}} 发散或非有限"""


class NumericalFailure(RuntimeError):
    """积分未达到容差, 或单调/凹性前置检查失败"""


class NoRootInBracket(ValueError):
    """区间内没有找到变号"""


class StabilityError(ValueError):
    """
    遍历速率不满足严格稳定条件

    参数:
        message: 说明
        rate1: 链路1 (S-R) 的遍历速率, bits/block (半双工时已按 τ 缩放)
        rate2: 链路2 (R-D) 的遍历速率, bits/block
    """

    status = "unstable"

    def __init__(self, message, rate1=None, rate2=None):
        super().__init__(message)
        self.rate1 = rate1
        self.rate2 = rate2


class StabilityViolation(StabilityError):
    status = "violation"


class StabilityBoundary(StabilityError):
    status = "boundary"


class InsufficientTail(ValueError):
    """超越阈值的非零计数不足 3 个, 无法回归尾部指数"""
