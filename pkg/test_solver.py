"""
求根模块测试
Root finding, θ̄, θ̃*, time-share fractions and predicted decay exponents
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from errors import ConfigError, NoRootInBracket, NumericalFailure
from channel import LinkConfig, Rayleigh
from lmgf import DuplexMode, SystemConfig, ec1, ec2, f_func, g_rate, h_rate
from effcap import RelayGeometry, geometry_to_config
from solver import (
    RootSpec, RootWant, _convex_positive_root, bracketed_root, find_root, scan_sign_changes,
    solve_relay_exponent, solve_source_exponent, solve_tau0, solve_tau_prime,
    solve_tau_star, solve_theta_bar, solve_theta_tilde_star_a,
    solve_theta_tilde_star_b, support_degenerate,
)


# ============================================================================
# 通用求根
# ============================================================================

def test_scan_counts_sign_changes():
    _, _, first, count = scan_sign_changes(math.sin, 0.5, 10.0, 200)
    assert count == 3
    assert first is not None


def test_smallest_root():
    result = find_root(RootSpec(math.sin, 0.5, 10.0, want=RootWant.SMALLEST))
    assert result.value == pytest.approx(math.pi, abs=1e-9)
    assert result.sign_changes == 3


def test_any_root():
    assert bracketed_root(RootSpec(lambda x: x * x - 2.0, 0.0, 2.0)) == pytest.approx(math.sqrt(2.0), abs=1e-9)


def test_no_root_in_bracket():
    with pytest.raises(NoRootInBracket):
        bracketed_root(RootSpec(lambda x: x * x + 1.0, -1.0, 1.0))
    with pytest.raises(NoRootInBracket):
        find_root(RootSpec(lambda x: x * x + 1.0, -1.0, 1.0, want=RootWant.SMALLEST))


@pytest.mark.parametrize("kwargs", [
    dict(lo=1.0, hi=1.0),
    dict(lo=0.0, hi=1.0, xtol=0.0),
    dict(lo=0.0, hi=1.0, scan_points=1),
])
def test_root_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        RootSpec(math.sin, **kwargs)


def test_smallest_root_stable_under_grid_refinement(default_cfg):
    theta_bar = solve_theta_bar(default_cfg.with_thetas(theta2=0.05)).value
    cfg = default_cfg.with_thetas(theta2=3.0 * theta_bar)

    def residual(theta_tilde):
        return g_rate(cfg, theta_tilde) - h_rate(cfg, theta_tilde, cfg.theta2)

    coarse = find_root(RootSpec(residual, cfg.theta1, cfg.theta2, want=RootWant.SMALLEST, scan_points=256))
    fine = find_root(RootSpec(residual, cfg.theta1, cfg.theta2, want=RootWant.SMALLEST, scan_points=512))
    assert fine.value == pytest.approx(coarse.value, abs=1e-9)
    sine = [find_root(RootSpec(math.sin, 0.5, 10.0, want=RootWant.SMALLEST, scan_points=n)).value
            for n in (256, 512)]
    assert sine[0] == pytest.approx(sine[1], abs=1e-9)


def test_convex_root_doubling_and_halving():
    def func(x):
        return x * x - x

    assert _convex_positive_root(func, 0.25) == pytest.approx(1.0, abs=1e-9)
    assert _convex_positive_root(func, 4.0) == pytest.approx(1.0, abs=1e-9)
    assert _convex_positive_root(lambda x: -x, 1.0) == math.inf


def test_convex_root_nonnegative_slope_raises():
    with pytest.raises(NumericalFailure):
        _convex_positive_root(lambda x: x * x, 1.0)


# ============================================================================
# θ̄
# ============================================================================

def test_theta_bar_closed_form(bimodal_relay_cfg, bimodal_theta_bar):
    result = solve_theta_bar(bimodal_relay_cfg)
    assert not result.support_degenerate
    assert result.value == pytest.approx(bimodal_theta_bar, rel=1e-7)
    assert result.f0 == pytest.approx(200.0, rel=1e-12)


def test_theta_bar_rayleigh(unit_rayleigh_cfg):
    result = solve_theta_bar(unit_rayleigh_cfg)
    theta_bar = result.value
    assert theta_bar > unit_rayleigh_cfg.theta1
    assert f_func(unit_rayleigh_cfg, theta_bar) == pytest.approx(result.f0, rel=1e-8)
    assert 0.0 < result.peak < theta_bar
    assert f_func(unit_rayleigh_cfg, result.peak) > result.f0
    # θ̄ 在 f 的零点左侧
    assert f_func(unit_rayleigh_cfg, theta_bar) > 0


def test_theta_bar_left_of_theta1(case_b_cfg):
    result = solve_theta_bar(case_b_cfg)
    assert 0.0 < result.value < case_b_cfg.theta1
    assert f_func(case_b_cfg, result.value) == pytest.approx(result.f0, rel=1e-8)


def test_theta_bar_support_degenerate(point_200_300):
    assert support_degenerate(point_200_300)
    result = solve_theta_bar(point_200_300)
    assert result.support_degenerate
    assert result.value is None


def test_theta_bar_increases_with_snr2(block):
    values = []
    for snr2_db in (3.0, 10.0, 20.0):
        cfg = geometry_to_config(RelayGeometry(0.5, 1.0, 10.0 ** (snr2_db / 10.0)), block, 0.01, 0.05)
        values.append(solve_theta_bar(cfg).value)
    assert values[0] < values[1] < values[2]


@pytest.mark.parametrize("fixture, theta2", [
    ("unit_rayleigh_cfg", None),
    ("default_cfg", 0.05),
    ("bimodal_relay_cfg", None),
    ("case_b_cfg", None),
])
def test_theta_bar_brackets_crossing(request, fixture, theta2):
    cfg = request.getfixturevalue(fixture)
    if theta2 is not None:
        cfg = cfg.with_thetas(theta2=theta2)
    result = solve_theta_bar(cfg)
    eps = 1e-4 * result.value
    assert f_func(cfg, result.value + eps) < result.f0
    assert f_func(cfg, result.value - eps) > result.f0


# ============================================================================
# θ̃*
# ============================================================================

def test_theta_tilde_star_a(default_cfg):
    theta_bar = solve_theta_bar(default_cfg.with_thetas(theta2=0.05)).value
    cfg = default_cfg.with_thetas(theta2=3.0 * theta_bar)
    sol = solve_theta_tilde_star_a(cfg)
    assert cfg.theta1 <= sol.value <= cfg.theta2
    assert g_rate(cfg, sol.value) == pytest.approx(h_rate(cfg, sol.value, cfg.theta2), rel=1e-8)
    assert sol.sign_changes >= 1


def test_theta_tilde_star_a_needs_ordered_exponents(default_cfg):
    with pytest.raises(NoRootInBracket):
        solve_theta_tilde_star_a(default_cfg)


def test_theta_tilde_star_b(case_b_cfg):
    sol = solve_theta_tilde_star_b(case_b_cfg)
    target = ec2(case_b_cfg, case_b_cfg.theta2)
    assert sol.value >= case_b_cfg.theta2
    assert g_rate(case_b_cfg, sol.value) == pytest.approx(target, rel=1e-8)
    assert not sol.degenerate


def test_theta_tilde_star_b_constant_source(point_200_200, point_200_300):
    sol = solve_theta_tilde_star_b(point_200_200)
    assert sol.degenerate
    with pytest.raises(NoRootInBracket):
        solve_theta_tilde_star_b(point_200_300)


# ============================================================================
# 半双工时隙参数
# ============================================================================

def test_point_mass_time_shares(point_200_300):
    assert solve_tau0(point_200_300) == pytest.approx(0.6, abs=1e-12)
    assert solve_tau_star(point_200_300) == pytest.approx(0.6, abs=1e-10)
    assert solve_tau_prime(point_200_300) == pytest.approx(0.6, abs=1e-10)


def test_tau_star_balances_links(half_duplex_cfg):
    cfg = half_duplex_cfg
    tau = solve_tau_star(cfg)
    assert 0.0 < tau < 1.0
    assert ec1(cfg, cfg.theta1, tau) == pytest.approx(ec2(cfg, cfg.theta2, tau), rel=1e-8)


def test_tau_prime_solves_relay_equation(half_duplex_cfg):
    cfg = half_duplex_cfg
    tau = solve_tau_prime(cfg)
    assert 0.0 < tau < 1.0
    assert ec1(cfg, cfg.theta1, tau) == pytest.approx(h_rate(cfg, cfg.theta1, cfg.theta2, tau), rel=1e-8)
    assert tau <= solve_tau_star(cfg) + 1e-12


def test_tau_solvers_accept_full_duplex_config(half_duplex_cfg):
    fd = replace(half_duplex_cfg, mode=DuplexMode.FULL_DUPLEX)
    assert solve_tau_star(fd) == pytest.approx(solve_tau_star(half_duplex_cfg), abs=1e-12)


# ============================================================================
# 给定速率下的衰减指数
# ============================================================================

def test_source_exponent_point_mass(point_200_300):
    assert solve_source_exponent(point_200_300, 150.0) == math.inf
    with pytest.raises(ConfigError):
        solve_source_exponent(point_200_300, 200.5)


def test_source_exponent_discrete(case_b_cfg):
    theta = solve_source_exponent(case_b_cfg, 250.0)
    assert 0 < theta < math.inf
    assert g_rate(case_b_cfg, theta) == pytest.approx(250.0, rel=1e-8)
    assert solve_source_exponent(case_b_cfg, 150.0) == math.inf


def test_source_exponent_inverts_g(default_cfg):
    rate = ec1(default_cfg, default_cfg.theta1)
    assert solve_source_exponent(default_cfg, rate) == pytest.approx(default_cfg.theta1, rel=1e-6)


def test_relay_exponent_constant_arrivals(default_cfg):
    cfg = default_cfg.with_thetas(theta2=0.02)
    rate = ec2(cfg, cfg.theta2)
    assert solve_relay_exponent(cfg, rate, math.inf) == pytest.approx(cfg.theta2, rel=1e-6)


def test_relay_exponent_bursty_arrivals_decay_slower(default_cfg):
    cfg = default_cfg.with_thetas(theta2=0.02)
    rate = 0.8 * ec1(cfg, cfg.theta1)
    theta_tilde = solve_source_exponent(cfg, rate)
    bursty = solve_relay_exponent(cfg, rate, theta_tilde)
    smooth = solve_relay_exponent(cfg, rate, math.inf)
    assert bursty <= smooth * (1 + 1e-9)


def test_relay_exponent_empty_queue(point_200_300):
    assert solve_relay_exponent(point_200_300, 150.0, math.inf) == math.inf
    with pytest.raises(ConfigError):
        solve_relay_exponent(point_200_300, 301.0, math.inf)


def test_exponent_solvers_scale_with_time_share(block):
    link = LinkConfig(Rayleigh(16.0), 1.0)
    hd = SystemConfig(link, link, block, 0.01, 0.01, DuplexMode.HALF_DUPLEX)
    rate = 0.5 * ec1(hd, 0.01, 0.5)
    theta = solve_source_exponent(hd, rate, 0.5)
    assert g_rate(hd, theta, 0.5) == pytest.approx(rate, rel=1e-8)
    assert np.isfinite(theta)
