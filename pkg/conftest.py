"""
共享测试夹具
Shared fixtures: point-mass, discrete and Rayleigh system configs
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from channel import BlockConfig, EmpiricalDiscrete, LinkConfig, PointMass, Rayleigh
from lmgf import DuplexMode, SystemConfig
from effcap import RelayGeometry, geometry_to_config

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")


def point_link(capacity, tb=200.0):
    """capacity bits/block 的确定性链路 (snr = 1)"""
    return LinkConfig(PointMass(2.0 ** (capacity / tb) - 1.0), 1.0)


@pytest.fixture
def block():
    return BlockConfig()


@pytest.fixture
def point_200_300(block):
    """c1 = 200, c2 = 300, θ1 < θ2"""
    return SystemConfig(point_link(200.0), point_link(300.0), block, 0.01, 0.02)


@pytest.fixture
def point_200_200(block):
    return SystemConfig(point_link(200.0), point_link(200.0), block, 0.01, 0.02)


@pytest.fixture
def bimodal_relay_cfg(block):
    """
    S-R 恒为 200; R-D 以各 1/2 概率为 0 或 800 bits/block

    g ≡ 200 > h(θ2, θ2) = EC2(θ2) ≈ 69.28, h(θ̃, θ2) = 200 − 1.30719/θ̃
    """
    link1 = LinkConfig(PointMass(1.0), 1.0)
    link2 = LinkConfig(EmpiricalDiscrete((0.0, 15.0), (0.5, 0.5)), 1.0)
    return SystemConfig(link1, link2, block, 0.001, 0.01)


@pytest.fixture
def case_b_cfg(block):
    """S-R: 200/400 各 1/2; R-D: 200 (0.9) 或 2000 (0.1); θ2 落在 III.b"""
    link1 = LinkConfig(EmpiricalDiscrete((1.0, 3.0), (0.5, 0.5)), 1.0)
    link2 = LinkConfig(EmpiricalDiscrete((1.0, 1023.0), (0.9, 0.1)), 1.0)
    return SystemConfig(link1, link2, block, 0.001, 0.01)


@pytest.fixture
def unit_rayleigh_cfg(block):
    """Rayleigh 均值 1, SNR1 = 0 dB, SNR2 = 10 dB, θ1 = 0.01"""
    return SystemConfig(LinkConfig(Rayleigh(1.0), 1.0), LinkConfig(Rayleigh(1.0), 10.0),
                        block, 0.01, 0.05)


@pytest.fixture
def default_geometry():
    return RelayGeometry(0.5, 1.0, 10.0)


@pytest.fixture
def default_cfg(default_geometry, block):
    """d = 0.5, SNR1 = 0 dB, SNR2 = 10 dB, θ1 = 0.01, θ2 = 0.001"""
    return geometry_to_config(default_geometry, block, 0.01, 0.001)


@pytest.fixture
def half_duplex_cfg(block):
    """d = 0.5, SNR2 = 3 dB, θ1 = 0.01, θ2 = 0.05"""
    geom = RelayGeometry(0.5, 1.0, 10.0 ** 0.3)
    return geometry_to_config(geom, block, 0.01, 0.05, DuplexMode.HALF_DUPLEX)


@pytest.fixture
def config_path():
    def _path(name):
        return os.path.join(CONFIG_DIR, name)
    return _path


@pytest.fixture
def bimodal_theta_bar():
    """bimodal_relay_cfg 的 θ̄: x = e^{−200θ} 为 x³ + x² + x = 1 的实根"""
    roots = np.roots([1.0, 1.0, 1.0, -1.0])
    x = float(next(r.real for r in roots if abs(r.imag) < 1e-12))
    return -math.log(x) / 200.0


@pytest.fixture
def make_point_link():
    return point_link
