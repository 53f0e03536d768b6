#!/usr/bin/env python3
"""
两跳中继有效容量 统一命令行界面
Two-hop Relay Effective Capacity - Unified CLI

用法:
    python cli.py --help
    python cli.py compute --config configs/default_full_duplex.json
    python cli.py sweep --config configs/fd_theta2_sweep.json --out output/fd_theta2.csv
    python cli.py simulate --config configs/default_full_duplex.json --seeds 5

退出码:
    0 成功  1 其他错误 (或仿真验证未通过)  2 配置错误  3 不稳定
    4 稳定性边界  5 数值失败  6 尾部样本不足

日期: 2026-10-19
"""

import argparse
import logging
import sys
import os
from concurrent.futures import ProcessPoolExecutor

# 添加当前目录到 Python 路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import (
    ConfigError, DivergentMoment, InsufficientTail, NoRootInBracket, NumericalFailure,
    StabilityBoundary, StabilityViolation,
)
from relay_config import OUTPUT_DIR, setup_logging, worker_count

logger = logging.getLogger("effcap")

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
EXIT_BOUNDARY = 4
EXIT_NUMERICAL = 5
EXIT_TAIL = 6


def exit_code_for(exc):
    """异常 -> 退出码"""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, StabilityBoundary):
        return EXIT_BOUNDARY
    if isinstance(exc, StabilityViolation):
        return EXIT_VIOLATION
    if isinstance(exc, InsufficientTail):
        return EXIT_TAIL
    if isinstance(exc, (NumericalFailure, NoRootInBracket, DivergentMoment)):
        return EXIT_NUMERICAL
    return EXIT_OTHER


def build_parser():
    parser = argparse.ArgumentParser(
        description='两跳中继有效容量 - Two-hop Relay Effective Capacity CLI',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
    python cli.py compute  --config configs/default_full_duplex.json     单点计算
    python cli.py sweep    --config configs/fd_d_sweep.json            参数扫描
    python cli.py simulate --config configs/default_full_duplex.json     仿真验证
        """
    )
    parser.add_argument('--verbose', '-v', action='store_true',
                        help='输出详细信息 (DEBUG 日志)')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', '-c', required=True, help='JSON 配置文件路径')
    common.add_argument('--out', '-o', default=None, help='输出 CSV 路径 (默认: output/<命令>.csv)')
    common.add_argument('--deterministic', action='store_true',
                        help='不写时间戳行, 相同输入得到逐字节相同的输出')

    # 子命令
    subparsers = parser.add_subparsers(dest='command', help='可用子命令')
    subparsers.add_parser('compute', parents=[common], help='计算单个配置的有效容量')
    subparsers.add_parser('sweep', parents=[common], help='一维/二维参数扫描')

    parser_sim = subparsers.add_parser('simulate', parents=[common], help='串联队列仿真验证')
    parser_sim.add_argument('--seeds', type=int, default=None, help='种子数 (默认: 配置或 5)')
    parser_sim.add_argument('--blocks', type=int, default=None, help='每次仿真块数 (≥ 10^4)')
    parser_sim.add_argument('--margin', type=float, default=None, help='速率余量 (默认: 0.1)')
    return parser


def main(argv=None):
    """主入口函数"""
    parser = build_parser()
    args = parser.parse_args(argv)

    # 如果没有子命令，显示帮助
    if args.command is None:
        parser.print_help()
        return EXIT_OK

    setup_logging(args.verbose)
    if args.out is None:
        args.out = os.path.join(OUTPUT_DIR, f"{args.command}.csv")

    commands = {
        'compute': run_compute,
        'sweep': run_sweep,
        'simulate': run_simulate,
    }
    try:
        return commands[args.command](args)
    except Exception as e:
        code = exit_code_for(e)
        print(f"\n✗ {type(e).__name__}: {e}")
        if code == EXIT_OTHER:
            logger.exception("未预期的错误")
        return code


def run_compute(args):
    """单点有效容量"""
    print("\n" + "="*60)
    print("计算有效容量...")
    print("="*60)

    from scenario import load_scenario
    from effcap import effective_capacity
    from generate_report import (
        capacity_summary, results_frame, summary_path, write_csv, write_text,
    )

    scenario = load_scenario(args.config)
    result = effective_capacity(scenario.system)
    row = result.to_row()
    row["status"] = "ok"
    write_csv(results_frame([row]), args.out, args.deterministic)
    text = capacity_summary(result, scenario.system)
    write_text(text, summary_path(args.out))
    print(text)
    print(f"✓ 结果保存至: {args.out}")
    return EXIT_OK


def run_sweep(args):
    """参数扫描, 各网格点并行计算, 按网格顺序输出"""
    print("\n" + "="*60)
    print("运行参数扫描...")
    print("="*60)

    from scenario import load_sweep, apply_point
    from effcap import capacity_row
    from generate_report import (
        results_frame, summary_path, sweep_summary, write_csv, write_text,
    )

    spec = load_sweep(args.config)
    points = spec.grid()
    systems = [apply_point(spec.base, point) for point in points]
    workers = min(worker_count(), len(systems))
    print(f"网格点数: {len(systems)}, 并行进程: {workers}")

    if workers > 1:
        chunksize = max(1, len(systems) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(capacity_row, systems, chunksize=chunksize))
    else:
        results = [capacity_row(system) for system in systems]

    rows = [{**point, **result} for point, result in zip(points, results)]
    df = results_frame(rows, spec.axis_names, spec.outputs)
    write_csv(df, args.out, args.deterministic)
    text, _ = sweep_summary(df, spec.axis_names)
    write_text(text, summary_path(args.out))
    print(text)
    failed = int((df["status"] != "ok").sum())
    mark = "✓" if failed == 0 else "⚠"
    print(f"{mark} 扫描完成 ({failed} 个点失败), 结果保存至: {args.out}")
    return EXIT_OK


def run_simulate(args):
    """在 (1 ± margin)·R_E 处多种子仿真验证"""
    print("\n" + "="*60)
    print("运行仿真验证...")
    print("="*60)

    from dataclasses import replace
    from scenario import load_scenario
    from effcap import effective_capacity
    from queuesim import run_validation_seeds
    from generate_report import (
        summary_path, validation_frame, validation_summary, write_csv, write_text,
    )

    scenario = load_scenario(args.config)
    settings = scenario.simulation
    overrides = {k: v for k, v in (("seeds", args.seeds), ("blocks", args.blocks),
                                   ("margin", args.margin)) if v is not None}
    settings = replace(settings, **overrides)

    system = scenario.system
    result = effective_capacity(system)
    print(f"R_E = {result.rate:.6f} bits/block ({result.case_tag.value})")
    print(f"种子: {settings.seeds}, 块数: {settings.blocks}, 余量: {settings.margin}")

    seeds = range(settings.seed, settings.seed + settings.seeds)
    summary = run_validation_seeds(system, result, settings.margin, settings.blocks,
                                   seeds, workers=worker_count())
    write_csv(validation_frame(summary), args.out, args.deterministic)
    text = validation_summary(summary, result)
    write_text(text, summary_path(args.out))
    print(text)
    if summary.verdict == "PASS":
        print(f"✓ 验证通过, 结果保存至: {args.out}")
        return EXIT_OK
    print(f"✗ 验证未通过, 结果保存至: {args.out}")
    return EXIT_OTHER


if __name__ == '__main__':
    sys.exit(main())
