"""
结果报告生成器 (Result Report Generator)
========================================
把有效容量计算、参数扫描与仿真验证的结果整理为 CSV 表格与文本摘要

日期: 2026-10-19
"""

import os
import math
from datetime import datetime

import pandas as pd

from relay_config import CASE_BAND

# CSV 固定列顺序 (轴列在前)
RESULT_COLUMNS = [
    "rate_bits_per_block", "case_tag", "theta_bar", "theta_tilde_sol",
    "theta_hat_sol", "tau_sol", "tau0", "upper_bound", "status",
]

# 请求的输出 -> 对应列
OUTPUT_COLUMNS = {
    "capacity": ["rate_bits_per_block", "theta_tilde_sol", "theta_hat_sol"],
    "case_tag": ["case_tag"],
    "theta_bar": ["theta_bar"],
    "tau": ["tau_sol", "tau0"],
    "upper_bound": ["upper_bound"],
}


def select_columns(axis_names, outputs):
    """按固定顺序给出轴列 + 请求的结果列 + status"""
    wanted = {"status"}
    for name in outputs:
        wanted.update(OUTPUT_COLUMNS[name])
    return list(axis_names) + [c for c in RESULT_COLUMNS if c in wanted]


def results_frame(rows, axis_names=(), outputs=tuple(OUTPUT_COLUMNS)):
    """结果行 -> 固定列顺序的 DataFrame"""
    columns = select_columns(axis_names, outputs)
    df = pd.DataFrame(rows)
    for col in columns:
        if col not in df.columns:
            df[col] = None
    return df[columns]


def write_csv(df, path, deterministic=False):
    """
    写 CSV (UTF-8, 空值写为空字段)

    非 deterministic 时第一行为 "# generated <时间戳>"
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        if not deterministic:
            f.write(f"# generated {datetime.now().isoformat(timespec='seconds')}\n")
        df.to_csv(f, index=False, na_rep='', float_format='%.12g', lineterminator='\n')
    return path


def write_text(text, path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    return path


def summary_path(csv_path):
    root, _ = os.path.splitext(csv_path)
    return root + ".summary.txt"


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, float) and math.isinf(value):
        return "∞ (队列恒空)"
    return f"{value:.6g}"


# ============================================================================
# 单点计算
# ============================================================================

def capacity_summary(result, system):
    """单个 CapacityResult 的文本摘要"""
    lines = [
        "=" * 60,
        "两跳中继有效容量 (Two-hop relay effective capacity)",
        "=" * 60,
        f"模式: {system.mode.value}",
        f"QoS 指数: θ1 = {system.theta1:g}, θ2 = {system.theta2:g} (1/bit)",
        f"块参数: TB = {system.block.tb_bits_scale:g} 符号/块",
        "-" * 60,
        f"有效容量 R_E: {result.rate:.6f} bits/block",
        f"分支: {result.case_tag.value}",
        f"上界: {result.upper_bound:.6f} bits/block",
        f"EC1 = {result.ec1:.6f}, EC2 = {result.ec2:.6f} bits/block",
        f"θ̄: {_fmt(result.theta_bar)}",
        f"预测源队列指数 θ̃: {_fmt(result.theta_tilde_sol)}",
        f"预测中继队列指数 θ̂: {_fmt(result.theta_hat_sol)}",
    ]
    if result.tau0 is not None:
        lines.append(f"τ = {_fmt(result.tau_sol)} (τ0 = {_fmt(result.tau0)})")
    if result.rate_is_supremum:
        lines.append("注意: τ 取到稳定上界 τ0, 速率为上确界 (不可达)")
    if result.degenerate:
        lines.append("注意: 退化分支 (解不唯一或在无穷远处)")
    if result.sign_changes is not None and result.sign_changes > 1:
        lines.append(f"注意: III.a 扫描发现 {result.sign_changes} 次变号, 取最小解")
    lines.append("=" * 60)
    return "\n".join(lines) + "\n"


# ============================================================================
# 扫描
# ============================================================================

def _series(df, axis, axis_names):
    """按另一条轴分组; 一维扫描只有一组"""
    others = [a for a in axis_names if a != axis]
    if not others:
        return [(None, df)]
    return list(df.groupby(others[0], sort=False))


def optimal_d(df, axis_names):
    """每个序列中使有效容量最大的 d"""
    rows = []
    ok = df[df["status"] == "ok"]
    for key, group in _series(ok, "d", axis_names):
        if group.empty:
            continue
        best = group.loc[group["rate_bits_per_block"].idxmax()]
        rows.append({"series": key, "optimal_d": best["d"],
                     "rate_bits_per_block": best["rate_bits_per_block"]})
    return pd.DataFrame(rows)


def flat_region_edge(df, axis_names):
    """
    每个序列中 R_E 保持为最小 θ2 处取值的最大 θ2 (平坦区右端)
    """
    rows = []
    ok = df[df["status"] == "ok"]
    for key, group in _series(ok, "theta2", axis_names):
        group = group.sort_values("theta2")
        if group.empty:
            continue
        rates = group["rate_bits_per_block"].to_numpy()
        thetas = group["theta2"].to_numpy()
        base = rates[0]
        edge = thetas[0]
        for theta2, rate in zip(thetas, rates):
            if abs(rate - base) > CASE_BAND * max(1.0, abs(base)):
                break
            edge = theta2
        rows.append({"series": key, "flat_theta2_max": edge, "flat_rate": base})
    return pd.DataFrame(rows)


def sweep_summary(df, axis_names):
    """
    扫描结果摘要

    返回:
        (文本, {名称: DataFrame})
    """
    tables = {}
    lines = ["=" * 60, "参数扫描摘要 (Sweep summary)", "=" * 60,
             f"扫描轴: {', '.join(axis_names)}",
             f"网格点数: {len(df)}"]
    failed = df[df["status"] != "ok"]
    lines.append(f"成功: {len(df) - len(failed)}  失败: {len(failed)}")
    if len(failed):
        for status, count in failed["status"].value_counts().items():
            lines.append(f"  {status}: {count}")

    if "rate_bits_per_block" in df.columns:
        if "d" in axis_names:
            table = optimal_d(df, axis_names)
            tables["optimal_d"] = table
            lines.append("-" * 60)
            lines.append("最优中继位置 (每个序列):")
            lines.append(table.to_string(index=False) if not table.empty else "  (无)")
        if "theta2" in axis_names:
            table = flat_region_edge(df, axis_names)
            tables["flat_region"] = table
            lines.append("-" * 60)
            lines.append("θ2 平坦区右端 (每个序列):")
            lines.append(table.to_string(index=False) if not table.empty else "  (无)")
    if "theta_bar" in df.columns and "snr2_db" in axis_names:
        lines.append("-" * 60)
        lines.append("θ̄ 随 SNR2 的变化:")
        lines.append(df[["snr2_db", "theta_bar"]].to_string(index=False))
    lines.append("=" * 60)
    return "\n".join(lines) + "\n", tables


# ============================================================================
# 仿真验证
# ============================================================================

def validation_frame(summary):
    rows = []
    for report in summary.reports:
        rows.extend(report.to_rows())
    return pd.DataFrame(rows)


def validation_summary(summary, result):
    """多种子仿真验证的文本摘要"""
    lines = ["=" * 60, "仿真验证 (Simulation cross-validation)", "=" * 60,
             f"分析有效容量 R_E = {result.rate:.6f} bits/block ({result.case_tag.value})"]
    for report in summary.reports:
        mark = "✓" if report.passed else "✗"
        lines.append(f"{mark} 种子 {report.seed}")
        for label, check in (("低速率", report.lower), ("高速率", report.upper)):
            parts = []
            for queue, verdict in (("源", check.source), ("中继", check.relay)):
                if verdict.tail is not None:
                    parts.append(f"{queue}: θ_est={verdict.tail.theta:.4g} "
                                 f"(目标 {verdict.target:g}, r²={verdict.tail.r_squared:.3f})")
                elif verdict.status == "empty":
                    parts.append(f"{queue}: 队列为空")
                else:
                    parts.append(f"{queue}: 不稳定")
            lines.append(f"    {label} R={check.rate:.4f}: " + "; ".join(parts))
    lines.append("-" * 60)
    lines.append(f"通过种子数: {summary.passed_count}/{len(summary.reports)}")
    lines.append(f"结论: {summary.verdict}")
    lines.append("=" * 60)
    return "\n".join(lines) + "\n"
