#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
日志系统
根日志配置, 以及分支树日志的记录与格式化显示
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Deque, Dict, List, Optional


LOG_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "WARNING"):
    """配置根日志格式和级别, 级别名不区分大小写

    Raises:
        ValueError: 未知的级别名
    """
    numeric_level = logging.getLevelName(str(level).upper())
    if not isinstance(numeric_level, int):
        raise ValueError(f"未知日志级别: {level}")
    logging.basicConfig(level=numeric_level, format=LOG_FORMAT, force=True)


@dataclass
class BranchLogEntry:
    """分支日志条目: 一次测量的一个结果"""
    round_index: int            # 恢复轮次, 0 表示弱测量零结果或预备轮
    path: str                   # 从根到本分支的结果序列, 如 "11/01"
    outcome: str                # 本轮测量比特串
    probability: float          # 条件概率
    cumulative: float           # 从根开始的累计概率
    success: bool = False       # 是否为恢复成功的叶子

    def to_display_string(self) -> str:
        flag = " [OK]" if self.success else ""
        return (f"R{self.round_index} {self.path or '-'} -> {self.outcome} "
                f"p={self.probability:.6g} cum={self.cumulative:.6g}{flag}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'round': self.round_index,
            'path': self.path,
            'outcome': self.outcome,
            'probability': self.probability,
            'cumulative': self.cumulative,
            'success': self.success,
        }


class BranchLogger:
    """分支树日志记录器

    保留最近 max_entries 条分支并转发到标准库日志; 协议只在 DEBUG 级别下登记分支
    """

    def __init__(self, name: str = "BranchTree", max_entries: int = 1000):
        self.max_entries = max_entries
        self.branch_entries: Deque[BranchLogEntry] = deque(maxlen=max_entries)
        self._logger = logging.getLogger(name)

    def branch_logging_enabled(self) -> bool:
        return self._logger.isEnabledFor(logging.DEBUG)

    def log_branch(self, entry: BranchLogEntry):
        """记录测量分支"""
        self.branch_entries.append(entry)
        if self.branch_logging_enabled():
            self._logger.debug(entry.to_display_string())

    def clear(self):
        self.branch_entries.clear()

    def export_branches(self, count: Optional[int] = None) -> List[Dict[str, Any]]:
        """导出分支日志; count 限制导出的最近条数"""
        branches = list(self.branch_entries)
        if count is not None:
            branches = branches[-count:]
        return [entry.to_dict() for entry in branches]


# 全局分支日志实例
branch_logger = BranchLogger()
