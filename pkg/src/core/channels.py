#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
门集合与噪声过程
带角度的Hadamard门、CNOT、与环境比特耦合的振幅阻尼、弱测量零结果、测量分支枚举
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple, Union

import numpy as np

from .error_handler import DimensionMismatchError, InvalidParameterError, InvalidStateError
from .tensor_core import (
    EXACT_TOL, ZERO_NORM_THRESHOLD, Operator, StateVector, apply_operator, renormalize,
    check_targets
)

logger = logging.getLogger("Channels")


@dataclass(frozen=True)
class DampingParams:
    """振幅阻尼参数

    只存储衰减概率 p, 存活概率 q = 1 - p 总是由 p 导出
    """
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or not 0.0 <= p <= 1.0:
            raise InvalidParameterError(f"阻尼概率 p 必须在 [0, 1] 内: {self.p}")
        object.__setattr__(self, 'p', p)

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def sqrt_q(self) -> float:
        return math.sqrt(self.q)

    @property
    def sqrt_p(self) -> float:
        return math.sqrt(self.p)

    @classmethod
    def from_decay(cls, gamma: float, t: float) -> 'DampingParams':
        """由衰减率和时间构造: sqrt(q) = exp(-gamma * t)"""
        if gamma < 0 or t < 0:
            raise InvalidParameterError(f"衰减率和时间必须非负: gamma={gamma}, t={t}")
        return cls(1.0 - math.exp(-2.0 * gamma * t))

    def decay_rate(self, t: float) -> float:
        """反解衰减率 gamma = -ln(sqrt(q)) / t; p = 1 时为无穷大"""
        if t <= 0:
            raise InvalidParameterError(f"时间必须为正: {t}")
        if self.q == 0.0:
            return math.inf
        return -0.5 * math.log(self.q) / t


DampingLike = Union[DampingParams, float]


def as_damping(p: DampingLike) -> DampingParams:
    """接受 DampingParams 或 p 的数值"""
    return p if isinstance(p, DampingParams) else DampingParams(p)


class DampingCompletion(Enum):
    """阻尼耦合在环境 |1> 输入上的幺正补全方式"""
    MINIMAL = "minimal"    # 最小 Gram-Schmidt 补全
    PHASED = "phased"      # 补全列附加相位, 用于验证结果与补全无关


@dataclass
class Branch:
    """一次测量的一个结果"""
    outcome: str
    probability: float
    post_state: StateVector

    def to_dict(self) -> dict:
        return {
            'outcome': self.outcome,
            'probability': self.probability,
            'num_qubits': self.post_state.num_qubits
        }


def hadamard_theta(theta: float) -> Operator:
    """带角度的Hadamard门 [[cos, -sin], [sin, cos]]"""
    if not math.isfinite(theta):
        raise InvalidParameterError(f"角度必须为有限值: {theta}")
    c, s = math.cos(theta), math.sin(theta)
    return Operator(np.array([[c, -s], [s, c]]), unitary=True)


def cnot() -> Operator:
    """CNOT, 第一个目标索引为控制比特"""
    matrix = np.eye(4)
    matrix[[2, 3]] = matrix[[3, 2]]
    return Operator(matrix, unitary=True)


def damping_couple(p: DampingLike, completion: DampingCompletion = DampingCompletion.MINIMAL) -> Operator:
    """系统比特与新环境比特之间的阻尼耦合幺正

    作用于 (系统, 环境), 基矢下标 2s + e:
        |0>_S|0>_E -> |0>_S|0>_E
        |1>_S|0>_E -> sqrt(q)|1>_S|0>_E + sqrt(p)|0>_S|1>_E
    环境 |1> 的两列由 completion 决定

    Args:
        p: 阻尼参数
        completion: 幺正补全方式

    Returns:
        4×4 幺正算符
    """
    params = as_damping(p)
    sq, sp = params.sqrt_q, params.sqrt_p

    matrix = np.zeros((4, 4), dtype=complex)
    matrix[0, 0] = 1.0
    matrix[2, 2] = sq
    matrix[1, 2] = sp
    matrix[1, 1] = sq
    matrix[2, 1] = -sp
    matrix[3, 3] = 1.0

    if completion is DampingCompletion.PHASED:
        matrix[:, 1] *= 1j
        matrix[:, 3] *= -1.0

    return Operator(matrix, unitary=True)


def weak_null_operator(p: DampingLike) -> Operator:
    """弱测量零结果的非幺正映射 diag(1, sqrt(q))"""
    return Operator(np.diag([1.0, as_damping(p).sqrt_q]))


def weak_null(state: StateVector, p: DampingLike, target: int) -> Tuple[float, StateVector]:
    """弱测量零结果

    Returns:
        (零结果概率, 归一化后的态)

    Raises:
        ImpossibleBranchError: 零结果概率为零 (p = 1 且目标比特处于 |1>)
    """
    _require_normalized(state)
    probability, post_state = renormalize(apply_operator(state, weak_null_operator(p), [target]))
    return probability, post_state


def _require_normalized(state: StateVector):
    norm = math.sqrt(state.norm_squared())
    if abs(norm - 1.0) > EXACT_TOL:
        raise InvalidStateError(f"测量前的态未归一化: |psi| = {norm:.15g}")


def _split_register(state: StateVector, targets: Sequence[int]) -> Tuple[np.ndarray, tuple]:
    """把寄存器重排为 (被测比特, 其余比特) 的矩阵, 行下标即测量结果"""
    targets = list(targets)
    n = state.num_qubits
    if not targets:
        raise DimensionMismatchError("测量目标为空")
    check_targets(n, targets)

    rest = [i for i in range(n) if i not in targets]
    psi = state.amplitudes.reshape([2] * n).transpose(targets + rest)
    rows = psi.reshape(2 ** len(targets), 2 ** len(rest))
    return rows, tuple(state.roles[i] for i in rest)


def measure_branches(state: StateVector, targets: Sequence[int]) -> List[Branch]:
    """枚举测量的所有非零概率分支

    被测比特从寄存器中移除; 分支按结果比特串升序排列

    Args:
        state: 归一化输入态
        targets: 被测量子比特

    Returns:
        分支列表
    """
    _require_normalized(state)
    rows, rest_roles = _split_register(state, targets)

    branches = []
    for index, bits in enumerate(itertools.product("01", repeat=len(targets))):
        row = rows[index]
        probability = float(np.vdot(row, row).real)
        if probability < ZERO_NORM_THRESHOLD:
            continue
        post_state = StateVector(row / math.sqrt(probability), rest_roles, normalized=True)
        branches.append(Branch("".join(bits), probability, post_state))

    logger.debug(f"测量 {list(targets)}: " +
                 ", ".join(f"{b.outcome}={b.probability:.6g}" for b in branches))
    return branches


def postselect(state: StateVector, targets: Sequence[int], outcome: str) -> Tuple[float, StateVector]:
    """后选择指定测量结果

    被测比特从寄存器中移除

    Returns:
        (结果概率, 归一化后的剩余态)

    Raises:
        ImpossibleBranchError: 结果概率低于零范数阈值
    """
    _require_normalized(state)
    if len(outcome) != len(targets):
        raise DimensionMismatchError(f"结果 '{outcome}' 的长度与目标数 {len(targets)} 不一致")
    if set(outcome) - {"0", "1"}:
        raise InvalidParameterError(f"结果必须是比特串: '{outcome}'")

    rows, rest_roles = _split_register(state, targets)
    return renormalize(StateVector(rows[int(outcome, 2)], rest_roles))
