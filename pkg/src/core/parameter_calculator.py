#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
参数计算引擎
物理参数的范围验证, 以及阻尼概率与衰减率、光学波片角度之间的换算
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from numbers import Integral, Real
from typing import Any, Dict

from .channels import DampingParams
from .error_handler import InvalidParameterError
from .protocols import MAX_ROUNDS


class ParameterType(Enum):
    """参数类型"""
    DAMPING = "damping"          # 阻尼概率 p
    STRENGTH = "strength"        # 预备强度 x
    ROUNDS = "rounds"            # 恢复轮数 N
    GRID_STEPS = "grid_steps"    # 网格点数
    THREADS = "threads"          # 线程数, 0 表示自动


class ValidationResult(Enum):
    """验证结果"""
    VALID = "valid"
    OUT_OF_RANGE = "out_of_range"
    INVALID_FORMAT = "invalid_format"
    NOT_FINITE = "not_finite"


@dataclass
class ParameterRange:
    """参数范围定义

    integer 为真时只接受整数 (bool 除外); min_exclusive 为真时下界开区间
    """
    min_value: float
    max_value: float
    integer: bool = False
    min_exclusive: bool = False
    description: str = ""

    def validate(self, value: Any) -> ValidationResult:
        """验证参数值是否在范围内"""
        if isinstance(value, bool):
            return ValidationResult.INVALID_FORMAT
        if self.integer and not isinstance(value, Integral):
            return ValidationResult.INVALID_FORMAT
        if not isinstance(value, Real):
            return ValidationResult.INVALID_FORMAT
        if not math.isfinite(value):
            return ValidationResult.NOT_FINITE

        below = value <= self.min_value if self.min_exclusive else value < self.min_value
        if below or value > self.max_value:
            return ValidationResult.OUT_OF_RANGE
        return ValidationResult.VALID

    def describe(self) -> str:
        left = "(" if self.min_exclusive else "["
        return f"{left}{self.min_value:g}, {self.max_value:g}]"


class ParameterCalculator:
    """参数计算引擎

    负责:
    - 扫描参数的范围验证
    - √q = exp(-Γt) 衰减率换算
    - 光学实现中的波片角度换算 (√p = sinθ_d, θ_r = arccot(cosθ_d))
    """

    def __init__(self):
        self.logger = logging.getLogger("ParameterCalculator")

        self.parameter_ranges: Dict[ParameterType, ParameterRange] = {
            ParameterType.DAMPING: ParameterRange(0.0, 1.0, description="阻尼概率 p"),
            ParameterType.STRENGTH: ParameterRange(0.0, math.inf, min_exclusive=True,
                                                   description="预备强度 x"),
            ParameterType.ROUNDS: ParameterRange(1, MAX_ROUNDS, integer=True,
                                                 description="恢复轮数 N"),
            ParameterType.GRID_STEPS: ParameterRange(2, 100001, integer=True,
                                                     description="网格点数"),
            ParameterType.THREADS: ParameterRange(0, 1024, integer=True,
                                                  description="线程数"),
        }

    def validate(self, param_type: ParameterType, value: Any) -> ValidationResult:
        return self.parameter_ranges[param_type].validate(value)

    def require(self, param_type: ParameterType, value: Any) -> Any:
        """验证参数, 不合法时抛出 InvalidParameterError

        Returns:
            原值, 便于直接赋值
        """
        parameter_range = self.parameter_ranges[param_type]
        result = parameter_range.validate(value)
        if result is not ValidationResult.VALID:
            self.logger.debug(f"参数验证失败: {param_type.value}={value!r} ({result.value})")
            raise InvalidParameterError(
                f"{parameter_range.description} 必须在 {parameter_range.describe()} 内"
                f"{'且为整数' if parameter_range.integer else ''}: {value!r}"
            )
        return value

    # ------------------------------------------------------------ 衰减率

    def damping_from_decay(self, gamma: float, t: float) -> float:
        """p = 1 - exp(-2Γt)"""
        return DampingParams.from_decay(gamma, t).p

    def decay_rate(self, p: float, t: float) -> float:
        """Γ = -ln(√q) / t; p = 1 时为无穷大"""
        return DampingParams(self.require(ParameterType.DAMPING, p)).decay_rate(t)

    # ------------------------------------------------------------ 波片角度

    def damping_from_plate_angle(self, theta_d: float) -> float:
        """阻尼波片角度对应的 p = sin²θ_d"""
        return math.sin(theta_d) ** 2

    def plate_angle_from_damping(self, p: float) -> float:
        """θ_d = arcsin(√p), 取 [0, π/2]"""
        self.require(ParameterType.DAMPING, p)
        return math.asin(math.sqrt(p))

    def recovery_plate_angle(self, theta_d: float) -> float:
        """恢复波片角度 θ_r = arccot(cosθ_d), 即 tanθ_r = 1/√q"""
        return math.atan2(1.0, math.cos(theta_d))

    def get_parameter_info(self) -> Dict[str, Dict[str, Any]]:
        """各参数的范围说明"""
        return {
            param_type.value: {
                'description': parameter_range.description,
                'range': parameter_range.describe(),
                'integer': parameter_range.integer,
            }
            for param_type, parameter_range in self.parameter_ranges.items()
        }


# 全局计算器实例
parameter_calculator = ParameterCalculator()
