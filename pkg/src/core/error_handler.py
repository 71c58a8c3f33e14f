#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
错误处理系统
异常层次、错误分类和退出码映射
为CLI提供用户友好的错误信息和解决建议
"""

import logging
import traceback
from dataclasses import asdict, dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple


class ErrorCategory(Enum):
    """错误类别"""
    STATE = "state"                       # 态/算符结构错误
    BRANCH = "branch"                     # 不可能的测量分支
    PARAMETER = "parameter"               # 参数错误
    CONFIGURATION = "configuration"       # 配置错误
    IO = "io"                             # 文件读写错误
    VERIFICATION = "verification"         # 验证失败
    SYSTEM = "system"                     # 系统错误


class ErrorSeverity(Enum):
    """错误严重程度"""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class ExitCode:
    """进程退出码"""
    OK = 0
    VERIFICATION_FAILED = 1
    INVALID_CONFIG = 2
    IO_ERROR = 3
    INTERNAL_ERROR = 4


class AmpShieldError(Exception):
    """所有库内异常的基类"""
    error_code = "SYS_001"


class InvalidParameterError(AmpShieldError, ValueError):
    """参数超出允许范围"""
    error_code = "PARAM_001"


class DimensionMismatchError(AmpShieldError, ValueError):
    """算符维度与目标量子比特数不匹配, 或目标索引重复/越界"""
    error_code = "STATE_001"


class InvalidStateError(AmpShieldError, ValueError):
    """态矢量或密度矩阵不满足不变量 (归一化、厄米、半正定)"""
    error_code = "STATE_002"


class ImpossibleBranchError(AmpShieldError):
    """后选择分支的概率低于零范数阈值"""
    error_code = "BRANCH_001"

    def __init__(self, message: str, probability: float = 0.0):
        super().__init__(message)
        self.probability = probability


class ConfigError(AmpShieldError):
    """配置字段无效, field_name 为出错的字段名"""
    error_code = "CFG_001"

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


class OutputError(AmpShieldError):
    """输出文件写入失败"""
    error_code = "IO_001"


class VerificationFailure(AmpShieldError):
    """验证套件存在失败项"""
    error_code = "VERIFY_001"

    def __init__(self, failed_checks: List[str]):
        super().__init__("验证失败: " + ", ".join(failed_checks))
        self.failed_checks = failed_checks


@dataclass(frozen=True)
class ErrorDefinition:
    """预定义错误: 分类、严重程度、提示与退出码"""
    category: ErrorCategory
    severity: ErrorSeverity
    title: str
    user_message: str
    suggestions: Tuple[str, ...]
    exit_code: int


@dataclass
class ErrorInfo:
    """一次错误处理的结果"""
    error_id: str
    category: ErrorCategory
    severity: ErrorSeverity
    message: str
    user_message: str
    suggestions: List[str]
    exit_code: int
    context: Dict[str, Any] = field(default_factory=dict)
    technical_details: str = ""
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['category'] = self.category.value
        data['severity'] = self.severity.value
        return data


ERROR_DEFINITIONS: Dict[str, ErrorDefinition] = {
    "PARAM_001": ErrorDefinition(
        ErrorCategory.PARAMETER, ErrorSeverity.ERROR, "参数超出范围",
        "输入的物理参数超出了允许的范围",
        ("阻尼概率 p 必须在 [0, 1] 内", "制备强度 x 必须为正数", "恢复轮数 N 必须在 1..4 内"),
        ExitCode.INVALID_CONFIG),
    "STATE_001": ErrorDefinition(
        ErrorCategory.STATE, ErrorSeverity.ERROR, "维度不匹配",
        "算符维度与目标量子比特数不一致",
        ("确认目标量子比特索引互不相同且在寄存器范围内", "确认算符维度为 2^(目标数)"),
        ExitCode.INVALID_CONFIG),
    "STATE_002": ErrorDefinition(
        ErrorCategory.STATE, ErrorSeverity.ERROR, "量子态无效",
        "态矢量或密度矩阵不满足归一化/厄米/半正定条件",
        ("检查输入振幅是否全为零", "检查密度矩阵的迹是否为1"),
        ExitCode.INVALID_CONFIG),
    "BRANCH_001": ErrorDefinition(
        ErrorCategory.BRANCH, ErrorSeverity.WARNING, "不可能的测量分支",
        "后选择的测量结果概率为零",
        ("p = 1 时系统完全衰减, 无法恢复", "检查初始系数是否在该分支上没有分量"),
        ExitCode.INVALID_CONFIG),
    "CFG_001": ErrorDefinition(
        ErrorCategory.CONFIGURATION, ErrorSeverity.ERROR, "配置无效",
        "扫描配置中存在无效字段",
        ("检查JSON键名是否与 SweepConfig 字段一致",
         "p_grid 需满足 0 <= start < stop <= 1 且 steps >= 2",
         "复数系数格式为 re+imi, 例如 0.5-0.2i"),
        ExitCode.INVALID_CONFIG),
    "IO_001": ErrorDefinition(
        ErrorCategory.IO, ErrorSeverity.ERROR, "文件读写失败",
        "无法读取配置或写入输出文件",
        ("确认输出目录存在且可写", "确认配置文件路径正确"),
        ExitCode.IO_ERROR),
    "VERIFY_001": ErrorDefinition(
        ErrorCategory.VERIFICATION, ErrorSeverity.CRITICAL, "验证失败",
        "至少一项模拟/解析一致性检查未通过",
        ("查看验证报告中标记为 FAIL 的条目", "以 --log-level DEBUG 重新运行获取分支日志"),
        ExitCode.VERIFICATION_FAILED),
    "SYS_001": ErrorDefinition(
        ErrorCategory.SYSTEM, ErrorSeverity.CRITICAL, "内部错误",
        "发生未知错误，请查看详细信息",
        ("以 --log-level DEBUG 重新运行", "检查程序日志获取更多信息"),
        ExitCode.INTERNAL_ERROR),
}

_SEVERITY_LEVELS = {
    ErrorSeverity.INFO: logging.INFO,
    ErrorSeverity.WARNING: logging.WARNING,
    ErrorSeverity.ERROR: logging.ERROR,
    ErrorSeverity.CRITICAL: logging.CRITICAL,
}


def error_code_for(error: Exception) -> str:
    """异常对应的错误码; 库外的 OSError 按IO错误、ValueError 按参数错误处理"""
    if isinstance(error, AmpShieldError):
        return error.error_code
    if isinstance(error, OSError):
        return "IO_001"
    if isinstance(error, ValueError):
        return "PARAM_001"
    return "SYS_001"


class ErrorHandler:
    """错误处理器

    把任意异常映射为预定义错误信息与退出码, 并保留有界的处理历史
    """

    def __init__(self, max_history: int = 1000):
        self.logger = logging.getLogger("ErrorHandler")
        self.max_history = max_history
        self.error_history: List[ErrorInfo] = []

    def handle_error(self, error: Exception, context: Optional[Dict[str, Any]] = None) -> ErrorInfo:
        """处理异常

        Args:
            error: 异常对象
            context: 出错时的命令与参数

        Returns:
            错误信息, exit_code 即进程退出码
        """
        error_id = error_code_for(error)
        definition = ERROR_DEFINITIONS[error_id]
        info = ErrorInfo(
            error_id=error_id,
            category=definition.category,
            severity=definition.severity,
            message=f"{definition.title}: {error}",
            user_message=definition.user_message,
            suggestions=list(definition.suggestions),
            exit_code=definition.exit_code,
            context=dict(context or {}),
            technical_details="".join(traceback.format_exception(type(error), error, error.__traceback__)),
        )

        self.error_history.append(info)
        del self.error_history[:-self.max_history]
        self.logger.log(_SEVERITY_LEVELS[info.severity], f"[{error_id}] {info.message}")
        return info


# 全局错误处理器
error_handler = ErrorHandler()
