#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
结果记录器
扫描表写为CSV (表头 + 按网格顺序的数据行, 17位有效数字), 验证报告写为文本或JSON
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from .error_handler import OutputError
from .sweep_executor import Cell, SweepTable

PathLike = Union[str, Path]


class ResultRecorder:
    """结果记录器

    同一张表的输出逐字节确定: 固定列序、固定行序、'\\n' 行尾、'.' 小数点
    """

    def __init__(self, significant_digits: int = 17):
        """初始化记录器

        Args:
            significant_digits: 浮点数有效数字位数
        """
        if not 1 <= significant_digits <= 17:
            raise ValueError(f"有效数字位数必须在 1..17 内: {significant_digits}")
        self.significant_digits = significant_digits
        self.logger = logging.getLogger("ResultRecorder")

    def format_value(self, value: Cell) -> str:
        """单元格格式: None 为空, 整数原样, 浮点数按有效数字"""
        if value is None:
            return ""
        if isinstance(value, int) and not isinstance(value, bool):
            return str(value)
        return format(float(value), f".{self.significant_digits}g")

    def format_rows(self, table: SweepTable) -> List[List[str]]:
        rows = [list(table.columns)]
        for row in table.rows:
            if len(row) != len(table.columns):
                raise ValueError(f"{table.name}: 行宽 {len(row)} 与列数 {len(table.columns)} 不一致")
            rows.append([self.format_value(value) for value in row])
        return rows

    def write_table(self, table: SweepTable, output_path: PathLike) -> Path:
        """写出CSV

        Returns:
            输出文件路径

        Raises:
            OutputError: 目录无法创建或文件无法写入
        """
        path = Path(output_path)
        rows = self.format_rows(table)
        try:
            if path.parent and not path.parent.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                writer.writerows(rows)
        except OSError as e:
            raise OutputError(f"无法写入 {path}: {e}") from e

        self.logger.info(f"写出 {table.name}: {len(table.rows)} 行 -> {path}")
        return path

    def write_report(self, report: Dict[str, Any], text: str, output_path: PathLike,
                     as_json: bool = False) -> Path:
        """写出验证报告

        Args:
            report: 报告字典 (JSON 格式使用)
            text: 报告文本 (文本格式使用)
            output_path: 输出路径
            as_json: 是否写为JSON
        """
        path = Path(output_path)
        try:
            if path.parent and not path.parent.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as f:
                if as_json:
                    json.dump(report, f, indent=2, ensure_ascii=False)
                    f.write("\n")
                else:
                    f.write(text)
        except OSError as e:
            raise OutputError(f"无法写入报告 {path}: {e}") from e

        self.logger.info(f"验证报告已保存: {path}")
        return path
