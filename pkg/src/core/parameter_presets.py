#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
系数预设
常用的两比特输入态系数, 供扫描配置以 preset:<名称> 引用, 也是图表数据的输入
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Tuple

from .error_handler import ConfigError
from .protocols import TwoQubitCoeffs


@dataclass(frozen=True)
class CoefficientPreset:
    """系数预设

    values 保存未归一化的原始数值, 加载时由 TwoQubitCoeffs 归一化
    """
    preset_id: str
    name: str
    description: str
    values: Tuple[complex, complex, complex, complex]

    def to_coeffs(self) -> TwoQubitCoeffs:
        return TwoQubitCoeffs.from_sequence(self.values)


class CoefficientPresets:
    """系数预设管理器"""

    PREFIX = "preset:"

    def __init__(self):
        self.logger = logging.getLogger("CoefficientPresets")
        self.presets: Dict[str, CoefficientPreset] = {}
        self._load_builtin_presets()

    def _load_builtin_presets(self):
        """加载内置预设"""
        inv_sqrt2 = 1.0 / math.sqrt(2.0)
        builtin_presets = [
            CoefficientPreset(
                preset_id="esd",
                name="突然死亡",
                description="|α| > |δ|, 阻尼共生纠缠度在 p ≈ 0.8507 处归零, 恢复后始终不低于阻尼曲线",
                values=(0.7, 0.35, 0.4, 0.48),
            ),
            CoefficientPreset(
                preset_id="crossing",
                name="曲线交叉",
                description="|α| < |δ|, 恢复曲线仅在阈值 p 之上高于阻尼曲线",
                values=(0.10, 0.55, -0.60, 0.57),
            ),
            CoefficientPreset(
                preset_id="bell",
                name="Bell态",
                description="(|00> + |11>)/√2, 最大纠缠",
                values=(inv_sqrt2, 0.0, 0.0, inv_sqrt2),
            ),
            CoefficientPreset(
                preset_id="product",
                name="基态",
                description="|00>, 不受阻尼影响",
                values=(1.0, 0.0, 0.0, 0.0),
            ),
        ]
        for preset in builtin_presets:
            self.presets[preset.preset_id] = preset
        self.logger.debug(f"加载了 {len(builtin_presets)} 个内置预设")

    def is_reference(self, text: Any) -> bool:
        """是否为 preset:<名称> 形式的引用"""
        return isinstance(text, str) and text.strip().startswith(self.PREFIX)

    def resolve(self, reference: str, field_name: str = "coeffs") -> TwoQubitCoeffs:
        """解析预设引用, 接受 'preset:esd' 或 'esd'

        Raises:
            ConfigError: 预设不存在
        """
        preset_id = reference.strip()
        if preset_id.startswith(self.PREFIX):
            preset_id = preset_id[len(self.PREFIX):].strip()

        preset = self.presets.get(preset_id)
        if preset is None:
            raise ConfigError(field_name, f"未知预设 '{preset_id}', 可用: {', '.join(sorted(self.presets))}")
        return preset.to_coeffs()


# 全局预设管理器
coefficient_presets = CoefficientPresets()
