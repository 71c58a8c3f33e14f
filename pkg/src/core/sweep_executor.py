#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
扫描执行器
按网格点计算模拟量与闭式量, 生成扫描表和图表数据表

网格点之间相互独立, 可由线程池并行计算; 结果总是按网格下标排序
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import closed_forms as cf
from .config_manager import BenchSettings, ConfigManager, PGrid, SweepConfig
from .error_handler import ImpossibleBranchError, InvalidParameterError
from .metrics import concurrence_mixed, fidelity_pure_mixed
from .parameter_presets import coefficient_presets
from .protocols import (
    TwoQubitCoeffs, damped_density, extended_protect, protect, protect_total_success,
    recover_iterative
)

Cell = Optional[float]
Row = Tuple[Cell, ...]

FIGURE_STRENGTHS = (0.8, 0.5, 0.1)

SWEEP_COLUMNS: Dict[str, Tuple[str, ...]] = {
    'weak-recovery': (
        'p', 'x', 'N', 'null_probability', 'success_sim', 'success_closed', 'success_tree', 'q2',
    ),
    'ad-protect': (
        'p', 'x', 'N',
        'C_damped_sim', 'C_damped_closed', 'C_recovered_sim', 'C_recovered_closed',
        'F_damped_sim', 'F_damped_closed', 'F_recovered_sim', 'F_recovered_closed',
        'P00_sim', 'P00_literal', 'P00_closed', 'P_total_sim',
    ),
    'extended': (
        'p', 'x', 'N',
        'C_damped_sim', 'C_recovered_sim', 'C_ext_sim', 'C_ext_literal', 'C_ext_closed',
        'F_damped_sim', 'F_recovered_sim', 'F_ext_sim', 'F_ext_literal', 'F_ext_closed',
        'P_prepare', 'P_recover', 'P_total',
    ),
}


@dataclass
class SweepTable:
    """扫描结果表: 固定的列集合和按网格顺序排列的行"""
    name: str
    columns: Tuple[str, ...]
    rows: List[Row] = field(default_factory=list)
    elapsed_ms: int = 0

    def column(self, name: str) -> List[Cell]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def to_dict(self) -> Dict[str, object]:
        return {
            'name': self.name,
            'columns': list(self.columns),
            'rows': [list(row) for row in self.rows],
            'elapsed_ms': self.elapsed_ms,
        }


# ---------------------------------------------------------------- 模拟量, 不可能分支的概率和共生纠缠度记为0

def _protect_or_none(coeffs: TwoQubitCoeffs, p: float):
    try:
        return protect(coeffs, p)
    except ImpossibleBranchError:
        return None


def _extended_result(coeffs: TwoQubitCoeffs, p: float, x: float):
    if p >= 1.0:
        return None
    try:
        return extended_protect(coeffs, p, x)
    except ImpossibleBranchError:
        return None


def _concurrence(result) -> float:
    return concurrence_mixed(result.recovered) if result is not None else 0.0


def _fidelity(coeffs: TwoQubitCoeffs, result) -> Cell:
    """不可能分支没有末态, 保真度留空"""
    return fidelity_pure_mixed(coeffs, result.recovered) if result is not None else None


# ---------------------------------------------------------------- 扫描行

def weak_recovery_row(coeffs: TwoQubitCoeffs, p: float, x: float, rounds: int) -> Row:
    """弱测量恢复方案的一行; x 不参与计算"""
    q = 1.0 - p
    result = recover_iterative(coeffs, p, rounds)
    closed = cf.success_prob_closed(rounds, q) if rounds <= 3 else cf.success_prob_tree(rounds, q)
    return (p, x, rounds, cf.null_probability(coeffs, p), result.success_probability,
            closed, cf.success_prob_tree(rounds, q), cf.double_weak_bound(q))


def ad_protect_row(coeffs: TwoQubitCoeffs, p: float, x: float, rounds: int) -> Row:
    """环境方案的一行; 总成功概率包含 N 轮后续恢复"""
    damped = damped_density(coeffs, p)
    recovered = _protect_or_none(coeffs, p)
    total = protect_total_success(coeffs, p, rounds).success_probability
    closed = cf.closed_form_suite(coeffs, p, x)
    return (
        p, x, rounds,
        concurrence_mixed(damped), closed.C_d,
        _concurrence(recovered), closed.C_r,
        fidelity_pure_mixed(coeffs, damped), closed.F_d,
        _fidelity(coeffs, recovered), closed.F_r,
        recovered.success_probability if recovered is not None else 0.0,
        closed.P_r, closed.P_r_corrected,
        total,
    )


def extended_row(coeffs: TwoQubitCoeffs, p: float, x: float, rounds: int) -> Row:
    """扩展方案的一行"""
    damped = damped_density(coeffs, p)
    recovered = _protect_or_none(coeffs, p)
    extended = _extended_result(coeffs, p, x)
    closed = cf.closed_form_suite(coeffs, p, x)
    if extended is not None:
        p_prepare = extended.stage_probabilities['prepare']
        p_recover = extended.stage_probabilities['recover']
        p_total = extended.success_probability
    else:
        p_prepare, p_recover, p_total = cf.prepare_probability(coeffs, x), 0.0, 0.0
    return (
        p, x, rounds,
        concurrence_mixed(damped), _concurrence(recovered), _concurrence(extended),
        closed.C_r_ext, closed.C_r_ext_corrected,
        fidelity_pure_mixed(coeffs, damped), _fidelity(coeffs, recovered), _fidelity(coeffs, extended),
        closed.F_r_ext, closed.F_r_ext_corrected,
        p_prepare, p_recover, p_total,
    )


ROW_BUILDERS: Dict[str, Callable[[TwoQubitCoeffs, float, float, int], Row]] = {
    'weak-recovery': weak_recovery_row,
    'ad-protect': ad_protect_row,
    'extended': extended_row,
}


# ---------------------------------------------------------------- 图表行

def success_figure_row(coeffs: TwoQubitCoeffs, p: float) -> Row:
    q = 1.0 - p
    return (p,) + tuple(recover_iterative(coeffs, p, rounds).success_probability
                        for rounds in (1, 2, 3)) + (cf.double_weak_bound(q),)


def concurrence_figure_row(coeffs: TwoQubitCoeffs, p: float) -> Row:
    extended = [_concurrence(_extended_result(coeffs, p, x)) for x in FIGURE_STRENGTHS]
    return (p, concurrence_mixed(damped_density(coeffs, p)),
            _concurrence(_protect_or_none(coeffs, p)), *extended)


def fidelity_figure_row(coeffs: TwoQubitCoeffs, p: float) -> Row:
    extended = [_fidelity(coeffs, _extended_result(coeffs, p, x)) for x in FIGURE_STRENGTHS]
    return (p, fidelity_pure_mixed(coeffs, damped_density(coeffs, p)),
            _fidelity(coeffs, _protect_or_none(coeffs, p)), *extended)


def _curve_columns(prefix: str) -> Tuple[str, ...]:
    return (('p', f'{prefix}_damped', f'{prefix}_recovered')
            + tuple(f'{prefix}_ext_x{x:g}' for x in FIGURE_STRENGTHS))


@dataclass(frozen=True)
class FigureSpec:
    """图表数据定义: 输入预设、列名与行计算函数; alias 为描述性别名"""
    figure_id: str
    alias: str
    preset_id: str
    columns: Tuple[str, ...]
    row_builder: Callable[[TwoQubitCoeffs, float], Row]
    description: str = ""

    @property
    def file_name(self) -> str:
        return f"fig{self.figure_id}.csv"


FIGURES: Dict[str, FigureSpec] = {
    spec.figure_id: spec for spec in (
        FigureSpec('2', 'success-probability', 'esd', ('p', 'P_N1', 'P_N2', 'P_N3', 'q²'),
                   success_figure_row, "迭代恢复成功概率随 p 的变化 (N = 1..3) 与 q² 上界"),
        FigureSpec('3a', 'concurrence-esd', 'esd', _curve_columns('C'),
                   concurrence_figure_row, "|α| > |δ| 时的共生纠缠度曲线"),
        FigureSpec('3b', 'concurrence-crossing', 'crossing', _curve_columns('C'),
                   concurrence_figure_row, "|α| < |δ| 时的共生纠缠度曲线"),
        FigureSpec('6a', 'fidelity-esd', 'esd', _curve_columns('F'),
                   fidelity_figure_row, "|α| > |δ| 时的保真度曲线"),
        FigureSpec('6b', 'fidelity-crossing', 'crossing', _curve_columns('F'),
                   fidelity_figure_row, "|α| < |δ| 时的保真度曲线"),
    )
}

FIGURE_ALIASES: Dict[str, str] = {spec.alias: spec.figure_id for spec in FIGURES.values()}


def resolve_figure(name: str) -> FigureSpec:
    """按图号或别名查找图表定义

    Raises:
        InvalidParameterError: 未知图号
    """
    spec = FIGURES.get(FIGURE_ALIASES.get(name, name))
    if spec is None:
        raise InvalidParameterError(f"未知图表: {name}, 可用: {', '.join(FIGURES)}")
    return spec


class SweepExecutor:
    """扫描执行器

    负责:
    - 网格点展开 (p × x)
    - 线程池并行计算, 按网格下标收集
    - 扫描表与图表数据表的构造
    """

    def __init__(self, threads: Optional[int] = None, settings: Optional[BenchSettings] = None):
        """初始化执行器

        Args:
            threads: 线程数; None 时由 ConfigManager 按环境变量解析
            settings: 运行设置
        """
        self.settings = settings or BenchSettings()
        self.threads = threads if threads is not None else ConfigManager(self.settings).resolve_thread_count()
        if self.threads < 1:
            raise InvalidParameterError(f"线程数必须为正: {self.threads}")
        self.logger = logging.getLogger("SweepExecutor")

    def grid_points(self, config: SweepConfig) -> List[Tuple[float, float]]:
        """(p, x) 网格点, p 为外层循环; 弱测量方案只取第一个 x"""
        x_values = config.x_values[:1] if config.scheme == 'weak-recovery' else config.x_values
        return [(float(p), x) for p in config.p_grid.values() for x in x_values]

    def run_sweep(self, config: SweepConfig) -> SweepTable:
        """执行扫描

        Returns:
            列集合由方案决定的扫描表
        """
        builder = ROW_BUILDERS[config.scheme]
        points = self.grid_points(config)
        self.logger.info(f"开始扫描: {config.scheme}, {len(points)} 个网格点, {self.threads} 线程")

        start_time = time.time()
        rows = self._map(lambda point: builder(config.coeffs, point[0], point[1], config.repeats), points)
        table = SweepTable(config.scheme, SWEEP_COLUMNS[config.scheme], rows,
                           int((time.time() - start_time) * 1000))
        self.logger.info(f"扫描完成: {len(rows)} 行, 耗时 {table.elapsed_ms} ms")
        return table

    def run_figure(self, figure_id: str) -> SweepTable:
        """计算一张图的数据表, p 从 0 到 1 均匀取 figure_points 个点; 接受图号或别名"""
        spec = resolve_figure(figure_id)

        coeffs = coefficient_presets.resolve(spec.preset_id)
        grid = PGrid(0.0, 1.0, self.settings.figure_points)
        self.logger.info(f"开始计算图表: {spec.figure_id} ({spec.preset_id})")

        start_time = time.time()
        rows = self._map(lambda p: spec.row_builder(coeffs, float(p)), list(grid.values()))
        return SweepTable(spec.figure_id, spec.columns, rows, int((time.time() - start_time) * 1000))

    def _map(self, function: Callable, items: Sequence) -> List[Row]:
        """按输入顺序返回结果"""
        if self.threads == 1 or len(items) <= 1:
            return [function(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return list(executor.map(function, items))
