#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
子命令: fig / sweep / verify

每个命令返回进程退出码; 异常经 error_handler 转换为用户提示和退出码
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, TextIO

from core.config_manager import BenchSettings, ConfigManager, SweepConfig
from core.error_handler import ExitCode, VerificationFailure, error_handler
from core.logger import branch_logger
from core.result_recorder import ResultRecorder
from core.sweep_executor import FIGURES, SweepExecutor, resolve_figure
from core.verification_steps import VerificationSuite

logger = logging.getLogger("Commands")

# JSON 报告附带的最近分支条数; 分支只在 --log-level DEBUG 下登记
BRANCH_LOG_EXPORT = 200


def report_error(error: Exception, context: Optional[Dict[str, Any]] = None,
                 stream: Optional[TextIO] = None) -> int:
    """把异常转换为错误提示并返回退出码"""
    stream = stream or sys.stderr
    info = error_handler.handle_error(error, context)
    print(f"错误: {info.user_message}", file=stream)
    print(f"  {info.message}", file=stream)
    for suggestion in info.suggestions:
        print(f"  - {suggestion}", file=stream)
    return info.exit_code


def load_sweep_config(config_path: Optional[str] = None,
                      overrides: Optional[Mapping[str, Any]] = None,
                      settings: Optional[BenchSettings] = None) -> SweepConfig:
    """由配置文件和/或命令行参数构造扫描配置; 命令行参数覆盖文件中的同名键"""
    manager = ConfigManager(settings)
    if config_path:
        return manager.load_sweep_config(config_path, overrides)
    data = {key: value for key, value in (overrides or {}).items() if value is not None}
    return manager.build_sweep_config(data)


def cmd_fig(figure_id: str = "all", out_dir: str = ".",
            settings: Optional[BenchSettings] = None, threads: Optional[int] = None,
            stream: Optional[TextIO] = None) -> int:
    """写出图表数据 fig<id>.csv

    Args:
        figure_id: 图号 (2, 3a, 3b, 6a, 6b) 或其别名, "all" 表示全部
        out_dir: 输出目录
    """
    stream = stream or sys.stdout
    settings = settings or BenchSettings()
    try:
        figure_ids = list(FIGURES) if figure_id == "all" else [resolve_figure(figure_id).figure_id]
        executor = SweepExecutor(threads, settings)
        recorder = ResultRecorder(settings.significant_digits)
        for name in figure_ids:
            table = executor.run_figure(name)
            path = recorder.write_table(table, Path(out_dir) / FIGURES[name].file_name)
            print(f"fig{name}: {len(table.rows)} 行 -> {path}", file=stream)
        return ExitCode.OK
    except Exception as e:
        return report_error(e, {'command': 'fig', 'figure_id': figure_id, 'out_dir': out_dir})


def cmd_sweep(config: SweepConfig, settings: Optional[BenchSettings] = None,
              threads: Optional[int] = None, stream: Optional[TextIO] = None) -> int:
    """执行扫描并写出CSV; 先回显归一化后的配置"""
    stream = stream or sys.stdout
    settings = settings or BenchSettings()
    try:
        print(json.dumps(config.to_dict(), ensure_ascii=False), file=stream)
        table = SweepExecutor(threads, settings).run_sweep(config)
        path = ResultRecorder(settings.significant_digits).write_table(table, config.output_path)
        print(f"{config.scheme}: {len(table.rows)} 行 -> {path}", file=stream)
        return ExitCode.OK
    except Exception as e:
        return report_error(e, {'command': 'sweep', 'scheme': config.scheme})


def cmd_verify(as_json: bool = False, report_path: Optional[str] = None,
               suite: Optional[VerificationSuite] = None, stream: Optional[TextIO] = None) -> int:
    """运行验证套件

    Args:
        as_json: 报告输出为JSON, 附带最近的分支日志
        report_path: 另存报告的路径
        suite: 验证套件, 默认包含全部步骤

    Returns:
        全部通过为 0, 有检查失败为 1, 其它错误按错误类型取退出码
    """
    stream = stream or sys.stdout
    try:
        branch_logger.clear()
        report = (suite or VerificationSuite()).execute()
        text = report.to_text()
        data = report.to_dict()
        data['branch_log'] = branch_logger.export_branches(BRANCH_LOG_EXPORT)
        if as_json:
            stream.write(json.dumps(data, indent=2, ensure_ascii=False) + "\n")
        else:
            stream.write(text)

        if report_path:
            ResultRecorder().write_report(data, text, report_path, as_json=as_json)
        if not report.passed:
            raise VerificationFailure(report.failed_checks())
        return ExitCode.OK
    except Exception as e:
        return report_error(e, {'command': 'verify'})
