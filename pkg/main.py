#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
ampshield - 振幅阻尼纠缠保护模拟工具
程序入口文件

子命令:
    fig     写出图表数据 (CSV)
    sweep   参数扫描
    verify  对照线路模拟验证全部闭式公式
技术栈：numpy + scipy
"""

import argparse
import os
import sys

# 添加src目录到Python路径
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))


def check_dependencies():
    """检查必要依赖是否安装"""
    missing_deps = []

    try:
        import numpy
    except ImportError:
        missing_deps.append("numpy")

    try:
        import scipy
    except ImportError:
        missing_deps.append("scipy")

    if missing_deps:
        print(f"缺少依赖包: {', '.join(missing_deps)}", file=sys.stderr)
        print("请运行: pip install -r requirements.txt", file=sys.stderr)
        return False

    return True


def build_parser() -> argparse.ArgumentParser:
    """命令行参数定义"""
    from core.sweep_executor import FIGURE_ALIASES, FIGURES
    from core.config_manager import SCHEMES

    parser = argparse.ArgumentParser(prog="ampshield", description="振幅阻尼纠缠保护模拟与验证")
    parser.add_argument("--log-level", default="WARNING",
                        help="日志级别 (DEBUG/INFO/WARNING/ERROR), 默认 WARNING")
    subparsers = parser.add_subparsers(dest="command", required=True)

    fig = subparsers.add_parser("fig", help="写出图表数据 fig<id>.csv")
    fig.add_argument("--id", dest="figure_id", default="all",
                     choices=["all"] + list(FIGURES) + list(FIGURE_ALIASES),
                     help="图号 2/3a/3b/6a/6b 或其别名, 默认全部")
    fig.add_argument("--out", dest="out_dir", default=".", help="输出目录")

    sweep = subparsers.add_parser("sweep", help="参数扫描, 命令行参数覆盖配置文件")
    sweep.add_argument("--config", help="JSON 配置文件")
    sweep.add_argument("--scheme", choices=SCHEMES, help="方案")
    sweep.add_argument("--coeffs", help="a,b,c,d (复数写作 re+imi) 或 preset:<名称>")
    sweep.add_argument("--p-grid", dest="p_grid", help="start:stop:steps")
    sweep.add_argument("--x", dest="x_values", help="v1,v2,...")
    sweep.add_argument("--repeats", type=int, help="恢复轮数 N")
    sweep.add_argument("--out", dest="output_path", help="输出 CSV 路径")

    verify = subparsers.add_parser("verify", help="运行验证套件")
    verify.add_argument("--json", action="store_true", help="以JSON输出报告")
    verify.add_argument("--report", help="另存报告的路径")

    return parser


def main(argv=None) -> int:
    """主函数"""
    from core.error_handler import ExitCode

    # 检查依赖
    if not check_dependencies():
        return ExitCode.INTERNAL_ERROR

    from cli.commands import cmd_fig, cmd_sweep, cmd_verify, load_sweep_config, report_error
    from core.config_manager import BenchSettings
    from core.error_handler import ConfigError
    from core.logger import configure_logging

    args = build_parser().parse_args(argv)

    try:
        configure_logging(args.log_level)
    except ValueError as e:
        return report_error(ConfigError("log_level", str(e)))
    settings = BenchSettings(log_level=args.log_level.upper())

    if args.command == "fig":
        return cmd_fig(args.figure_id, args.out_dir, settings)

    if args.command == "sweep":
        overrides = {
            'scheme': args.scheme,
            'coeffs': args.coeffs,
            'p_grid': args.p_grid,
            'x_values': args.x_values,
            'repeats': args.repeats,
            'output_path': args.output_path,
        }
        try:
            config = load_sweep_config(args.config, overrides, settings)
        except Exception as e:
            return report_error(e, {'command': 'sweep', 'config': args.config})
        return cmd_sweep(config, settings)

    return cmd_verify(args.json, args.report)


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
