#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置管理器
扫描配置 (单个JSON文档或命令行参数) 的解析与验证, 以及运行设置和线程数
"""

import json
import logging
import os
from dataclasses import asdict, dataclass
from numbers import Real
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from .error_handler import AmpShieldError, ConfigError, OutputError
from .parameter_calculator import ParameterCalculator, ParameterType, ValidationResult
from .parameter_presets import CoefficientPresets, coefficient_presets
from .protocols import TwoQubitCoeffs

SCHEMES = ("weak-recovery", "ad-protect", "extended")
REQUIRED_KEYS = ("scheme", "coeffs", "p_grid")
OPTIONAL_KEYS = ("x_values", "repeats", "output_path")
THREADS_ENV = "AMPSHIELD_THREADS"


@dataclass(frozen=True)
class PGrid:
    """均匀的 p 网格, 包含两个端点"""
    start: float
    stop: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)

    def to_string(self) -> str:
        return f"{self.start:g}:{self.stop:g}:{self.steps}"


@dataclass(frozen=True)
class SweepConfig:
    """扫描配置"""
    scheme: str
    coeffs: TwoQubitCoeffs
    p_grid: PGrid
    x_values: Tuple[float, ...] = (1.0,)
    repeats: int = 1
    output_path: str = "sweep.csv"

    def to_dict(self) -> Dict[str, Any]:
        """JSON形式; 系数为归一化后的 [re, im]"""
        return {
            'scheme': self.scheme,
            'coeffs': [[v.real, v.imag] for v in self.coeffs.as_array()],
            'p_grid': self.p_grid.to_string(),
            'x_values': list(self.x_values),
            'repeats': self.repeats,
            'output_path': self.output_path,
        }


@dataclass
class BenchSettings:
    """运行设置"""
    log_level: str = "WARNING"
    figure_points: int = 101
    significant_digits: int = 17
    threads: int = 0            # 0 表示自动

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _is_number(value: Any) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool)


class ConfigManager:
    """配置管理器

    特性:
    - 扫描配置的键名必须与 SweepConfig 字段完全一致
    - 错误统一抛出 ConfigError, 并指明字段名
    - 系数支持数值、[re, im]、"re+imi" 字符串与 preset:<名称>
    """

    def __init__(self, settings: Optional[BenchSettings] = None,
                 presets: Optional[CoefficientPresets] = None):
        self.logger = logging.getLogger("ConfigManager")
        self.settings = settings or BenchSettings()
        self.presets = presets or coefficient_presets
        self.calculator = ParameterCalculator()

    # ------------------------------------------------------------ 加载

    def load_sweep_config(self, config_path: str,
                          overrides: Optional[Mapping[str, Any]] = None) -> SweepConfig:
        """从JSON文件加载扫描配置

        Args:
            config_path: 配置文件路径
            overrides: 覆盖文件内容的字段 (命令行参数), 值为 None 的项忽略

        Raises:
            OutputError: 文件无法读取
            ConfigError: JSON 格式错误或字段无效
        """
        data = self.read_config_document(config_path)
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key] = value
        return self.build_sweep_config(data)

    def read_config_document(self, config_path: str) -> Dict[str, Any]:
        """读取JSON配置文档, 不做字段解析"""
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"JSON 解析失败: {e}") from e
        except OSError as e:
            raise OutputError(f"无法读取配置文件 {config_path}: {e}") from e

        if not isinstance(data, dict):
            raise ConfigError("config", "配置文档必须是JSON对象")
        self.logger.info(f"配置加载成功: {config_path}")
        return dict(data)

    def build_sweep_config(self, data: Mapping[str, Any]) -> SweepConfig:
        """由字典构造扫描配置"""
        for key in data:
            if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
                raise ConfigError(key, "未知的配置键")
        for key in REQUIRED_KEYS:
            if data.get(key) is None:
                raise ConfigError(key, "缺少必需的配置键")

        defaults = SweepConfig.__dataclass_fields__
        config = SweepConfig(
            scheme=self.parse_scheme(data['scheme']),
            coeffs=self.parse_coeffs(data['coeffs']),
            p_grid=self.parse_p_grid(data['p_grid']),
            x_values=self.parse_x_values(data.get('x_values', defaults['x_values'].default)),
            repeats=self.parse_repeats(data.get('repeats', defaults['repeats'].default)),
            output_path=self.parse_output_path(data.get('output_path', defaults['output_path'].default)),
        )
        self.logger.debug(f"扫描配置: {config.to_dict()}")
        return config

    # ------------------------------------------------------------ 字段解析

    def parse_scheme(self, value: Any) -> str:
        if value not in SCHEMES:
            raise ConfigError("scheme", f"必须是 {', '.join(SCHEMES)} 之一: {value!r}")
        return value

    def parse_complex(self, value: Any, field_name: str = "coeffs") -> complex:
        """解析一个复数: 数值、[re, im] 或 're+imi' 字符串"""
        if _is_number(value):
            result = complex(value)
        elif isinstance(value, (list, tuple)) and len(value) == 2 and all(_is_number(v) for v in value):
            result = complex(value[0], value[1])
        elif isinstance(value, str):
            text = value.strip().replace(" ", "")
            if not text or "j" in text.lower() or "(" in text:
                raise ConfigError(field_name, f"复数格式无效: {value!r}")
            try:
                result = complex(text.replace("i", "j").replace("I", "j"))
            except ValueError as e:
                raise ConfigError(field_name, f"复数格式无效: {value!r}") from e
        else:
            raise ConfigError(field_name, f"复数格式无效: {value!r}")

        if not np.isfinite(result):
            raise ConfigError(field_name, f"复数必须为有限值: {value!r}")
        return result

    def parse_coeffs(self, value: Any, field_name: str = "coeffs") -> TwoQubitCoeffs:
        """解析四个系数并归一化"""
        if self.presets.is_reference(value):
            return self.presets.resolve(value, field_name)

        if isinstance(value, str):
            value = [part for part in value.split(",")]
        if not isinstance(value, (list, tuple)) or len(value) != 4:
            raise ConfigError(field_name, f"需要4个系数: {value!r}")

        values = [self.parse_complex(v, field_name) for v in value]
        try:
            return TwoQubitCoeffs.from_sequence(values)
        except AmpShieldError as e:
            raise ConfigError(field_name, str(e)) from e

    def parse_p_grid(self, value: Any, field_name: str = "p_grid") -> PGrid:
        """解析 'start:stop:steps'、[start, stop, steps] 或 {start, stop, steps}"""
        if isinstance(value, str):
            parts = value.split(":")
            if len(parts) != 3:
                raise ConfigError(field_name, f"格式应为 start:stop:steps: {value!r}")
            try:
                start, stop = float(parts[0]), float(parts[1])
                steps = int(parts[2])
            except ValueError as e:
                raise ConfigError(field_name, f"格式应为 start:stop:steps: {value!r}") from e
        elif isinstance(value, (list, tuple)) and len(value) == 3:
            start, stop, steps = value
        elif isinstance(value, Mapping) and set(value) == {"start", "stop", "steps"}:
            start, stop, steps = value["start"], value["stop"], value["steps"]
        else:
            raise ConfigError(field_name, f"无法解析: {value!r}")

        for name, bound in (("start", start), ("stop", stop)):
            if self.calculator.validate(ParameterType.DAMPING, bound) is not ValidationResult.VALID:
                raise ConfigError(field_name, f"{name} 必须在 [0, 1] 内: {bound!r}")
        if not start < stop:
            raise ConfigError(field_name, f"需要 start < stop: {start} >= {stop}")
        if self.calculator.validate(ParameterType.GRID_STEPS, steps) is not ValidationResult.VALID:
            raise ConfigError(field_name, f"steps 必须是不小于2的整数: {steps!r}")
        return PGrid(float(start), float(stop), int(steps))

    def parse_x_values(self, value: Any, field_name: str = "x_values") -> Tuple[float, ...]:
        """解析预备强度列表, 接受列表、单个数值或逗号分隔字符串"""
        if isinstance(value, str):
            try:
                value = [float(part) for part in value.split(",")]
            except ValueError as e:
                raise ConfigError(field_name, f"无法解析: {value!r}") from e
        elif _is_number(value):
            value = [value]
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError(field_name, f"需要非空的正数列表: {value!r}")

        for x in value:
            if self.calculator.validate(ParameterType.STRENGTH, x) is not ValidationResult.VALID:
                raise ConfigError(field_name, f"x 必须为有限正数: {x!r}")
        return tuple(float(x) for x in value)

    def parse_repeats(self, value: Any, field_name: str = "repeats") -> int:
        if self.calculator.validate(ParameterType.ROUNDS, value) is not ValidationResult.VALID:
            info = self.calculator.parameter_ranges[ParameterType.ROUNDS].describe()
            raise ConfigError(field_name, f"必须是 {info} 内的整数: {value!r}")
        return int(value)

    def parse_output_path(self, value: Any, field_name: str = "output_path") -> str:
        if not isinstance(value, str) or not value.strip():
            raise ConfigError(field_name, f"输出路径无效: {value!r}")
        return value

    # ------------------------------------------------------------ 运行设置

    def resolve_thread_count(self, environ: Optional[Mapping[str, str]] = None) -> int:
        """扫描线程数: 环境变量 AMPSHIELD_THREADS 优先, 其次为设置值; 0 表示 CPU 核数

        Raises:
            ConfigError: 环境变量不是非负整数
        """
        environ = os.environ if environ is None else environ
        raw = environ.get(THREADS_ENV)

        if raw is None or not raw.strip():
            threads = self.settings.threads
        else:
            try:
                threads = int(raw.strip())
            except ValueError as e:
                raise ConfigError(THREADS_ENV, f"必须是非负整数: {raw!r}") from e

        if self.calculator.validate(ParameterType.THREADS, threads) is not ValidationResult.VALID:
            raise ConfigError(THREADS_ENV, f"必须是非负整数: {threads!r}")

        if threads == 0:
            threads = os.cpu_count() or 1
        self.logger.debug(f"扫描线程数: {threads}")
        return threads
