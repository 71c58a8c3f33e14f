#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
张量运算核心
少量子比特寄存器的稠密复线性代数: 张量积、门嵌入、偏迹、归一化

比特序约定: 大端序, 第0个量子比特是基矢下标的最高位,
即两比特基矢顺序为 |00>, |01>, |10>, |11>
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .error_handler import (
    DimensionMismatchError, ImpossibleBranchError, InvalidParameterError, InvalidStateError
)


# 数值容差
EXACT_TOL = 1e-12          # 精确恒等式
SPECTRAL_TOL = 1e-10       # 经由特征值的量
ZERO_NORM_THRESHOLD = 1e-14  # 范数平方低于此值视为不可能分支

logger = logging.getLogger("TensorCore")


class QubitRole(Enum):
    """量子比特角色"""
    SYSTEM = "S"
    ANCILLA = "A"
    ENVIRONMENT = "E"


def _num_qubits(dim: int) -> int:
    """返回 log2(dim), dim 不是2的幂时抛出维度错误"""
    if dim < 1 or dim & (dim - 1):
        raise DimensionMismatchError(f"维度 {dim} 不是2的幂")
    return dim.bit_length() - 1


def _frozen_array(values, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=complex)
    if array.ndim != ndim:
        raise DimensionMismatchError(f"期望 {ndim} 维数组, 实际为 {array.ndim} 维")
    if not np.all(np.isfinite(array)):
        raise InvalidStateError("数组包含 NaN 或 Inf")
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """稠密态矢量

    amplitudes 长度为 2^n, roles 为每个量子比特的角色标签
    normalized 为真时要求2-范数在 1e-12 内等于1
    """
    amplitudes: np.ndarray
    roles: Tuple[QubitRole, ...] = ()
    normalized: bool = False

    def __post_init__(self):
        amplitudes = _frozen_array(self.amplitudes, 1)
        n = _num_qubits(amplitudes.shape[0])
        roles = tuple(self.roles) if self.roles else (QubitRole.SYSTEM,) * n
        if len(roles) != n:
            raise DimensionMismatchError(f"角色数 {len(roles)} 与量子比特数 {n} 不一致")
        object.__setattr__(self, 'amplitudes', amplitudes)
        object.__setattr__(self, 'roles', roles)

        if self.normalized and abs(np.linalg.norm(amplitudes) - 1.0) > EXACT_TOL:
            raise InvalidStateError(f"态矢量未归一化: |psi| = {np.linalg.norm(amplitudes):.15g}")

    @classmethod
    def basis(cls, bits: str, roles: Optional[Sequence[QubitRole]] = None) -> 'StateVector':
        """计算基矢 |bits>"""
        amplitudes = np.zeros(2 ** len(bits), dtype=complex)
        amplitudes[int(bits, 2)] = 1.0
        return cls(amplitudes, tuple(roles or ()), normalized=True)

    @property
    def num_qubits(self) -> int:
        return len(self.roles)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tensor(self, other: 'StateVector') -> 'StateVector':
        """|self> ⊗ |other>"""
        return StateVector(np.kron(self.amplitudes, other.amplitudes),
                           self.roles + other.roles,
                           normalized=self.normalized and other.normalized)


@dataclass(frozen=True, eq=False)
class Operator:
    """2^k × 2^k 算符, unitary 标志要求 U†U = I (容差 1e-12)"""
    matrix: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        matrix = _frozen_array(self.matrix, 2)
        if matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"算符不是方阵: {matrix.shape}")
        _num_qubits(matrix.shape[0])
        object.__setattr__(self, 'matrix', matrix)

        if self.unitary:
            deviation = np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])))
            if deviation > EXACT_TOL:
                raise InvalidStateError(f"算符标记为幺正但 |U†U - I| = {deviation:.3g}")

    @property
    def num_qubits(self) -> int:
        return _num_qubits(self.matrix.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> 'Operator':
        return Operator(self.matrix.conj().T, self.unitary)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """稠密密度矩阵

    构造时只检查结构 (方阵、2的幂、有限值);
    物理性 (厄米、单位迹、半正定) 由 validate() 检查
    """
    matrix: np.ndarray
    roles: Tuple[QubitRole, ...] = field(default=())

    def __post_init__(self):
        matrix = _frozen_array(self.matrix, 2)
        if matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"密度矩阵不是方阵: {matrix.shape}")
        n = _num_qubits(matrix.shape[0])
        roles = tuple(self.roles) if self.roles else (QubitRole.SYSTEM,) * n
        if len(roles) != n:
            raise DimensionMismatchError(f"角色数 {len(roles)} 与量子比特数 {n} 不一致")
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'roles', roles)

    @property
    def num_qubits(self) -> int:
        return len(self.roles)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def validate(self, tol: float = EXACT_TOL, eig_tol: float = SPECTRAL_TOL) -> 'DensityMatrix':
        """检查厄米性、单位迹和半正定性

        Returns:
            self, 便于链式调用

        Raises:
            InvalidStateError: 任一条件超出容差
        """
        rho = self.matrix
        hermitian_error = np.max(np.abs(rho - rho.conj().T))
        if hermitian_error > tol:
            raise InvalidStateError(f"密度矩阵不厄米: 偏差 {hermitian_error:.3g}")

        trace = np.trace(rho)
        if abs(trace - 1.0) > tol:
            raise InvalidStateError(f"密度矩阵迹不为1: {trace.real:.15g}")

        min_eigenvalue = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)))
        if min_eigenvalue < -eig_tol:
            raise InvalidStateError(f"密度矩阵非半正定: 最小特征值 {min_eigenvalue:.3g}")
        return self


def kron(a: Operator, b: Operator) -> Operator:
    """算符张量积 A ⊗ B"""
    return Operator(np.kron(a.matrix, b.matrix), unitary=a.unitary and b.unitary)


def check_targets(num_qubits: int, targets: Sequence[int], expected: Optional[int] = None):
    if expected is not None and len(targets) != expected:
        raise DimensionMismatchError(f"算符作用于 {expected} 个量子比特, 但给出 {len(targets)} 个目标")
    if len(set(targets)) != len(targets):
        raise DimensionMismatchError(f"目标量子比特重复: {list(targets)}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise DimensionMismatchError(f"目标量子比特 {t} 超出范围 [0, {num_qubits})")


def apply_operator(state: StateVector, op: Operator, targets: Sequence[int]) -> StateVector:
    """把算符作用到指定量子比特上, 其余比特为恒等

    算符不要求幺正; 结果的 normalized 标志仅在算符幺正且输入归一时保留

    Args:
        state: 输入态
        op: 2^k × 2^k 算符
        targets: k 个有序目标索引, 第一个对应算符的最高位

    Returns:
        新的态矢量
    """
    targets = list(targets)
    n = state.num_qubits
    k = op.num_qubits
    check_targets(n, targets, expected=k)

    psi = state.amplitudes.reshape([2] * n)
    gate = op.matrix.reshape([2] * (2 * k))
    psi = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), targets))
    psi = np.moveaxis(psi, list(range(k)), targets)

    return StateVector(psi.reshape(-1), state.roles,
                       normalized=state.normalized and op.unitary)


def apply_unitary(state: StateVector, u: Operator, targets: Sequence[int]) -> StateVector:
    """作用幺正门, 保持范数"""
    if not u.unitary:
        raise InvalidParameterError("apply_unitary 需要标记为幺正的算符")
    return apply_operator(state, u, targets)


def append_qubits(state: StateVector, roles: Iterable[QubitRole]) -> StateVector:
    """在寄存器末尾附加处于 |0> 的新量子比特"""
    roles = tuple(roles)
    fresh = StateVector.basis("0" * len(roles), roles)
    return state.tensor(fresh)


def partial_trace(state: Union[StateVector, DensityMatrix], keep: Sequence[int]) -> DensityMatrix:
    """偏迹, 保留 keep 中的量子比特 (按给出的顺序)

    Args:
        state: 纯态或密度矩阵
        keep: 保留的量子比特索引, 非空、互不相同

    Returns:
        约化密度矩阵
    """
    keep = list(keep)
    n = state.num_qubits
    if not keep:
        raise DimensionMismatchError("保留的量子比特集合为空")
    check_targets(n, keep)

    rest = [i for i in range(n) if i not in keep]
    dk = 2 ** len(keep)
    dr = 2 ** len(rest)
    roles = tuple(state.roles[i] for i in keep)

    if isinstance(state, StateVector):
        psi = state.amplitudes.reshape([2] * n).transpose(keep + rest).reshape(dk, dr)
        return DensityMatrix(psi @ psi.conj().T, roles)

    rho = state.matrix.reshape([2] * (2 * n))
    order = keep + rest
    rho = rho.transpose(order + [n + i for i in order]).reshape(dk, dr, dk, dr)
    return DensityMatrix(np.einsum('ijkj->ik', rho), roles)


def renormalize(state: StateVector) -> Tuple[float, StateVector]:
    """归一化

    Returns:
        (输入范数的平方, 归一化后的态)

    Raises:
        ImpossibleBranchError: 范数平方低于零范数阈值
    """
    norm_sq = state.norm_squared()
    if norm_sq < ZERO_NORM_THRESHOLD:
        logger.debug(f"不可能分支: |psi|^2 = {norm_sq:.3g}")
        raise ImpossibleBranchError(f"零范数态, |psi|^2 = {norm_sq:.3g}", probability=norm_sq)
    return norm_sq, StateVector(state.amplitudes / np.sqrt(norm_sq), state.roles, normalized=True)


def pure_to_density(state: StateVector) -> DensityMatrix:
    """|psi><psi|"""
    norm = np.sqrt(state.norm_squared())
    if abs(norm - 1.0) > EXACT_TOL:
        raise InvalidStateError(f"纯态未归一化: |psi| = {norm:.15g}")
    psi = state.amplitudes
    return DensityMatrix(np.outer(psi, psi.conj()), state.roles)


def phase_deviation(a: Union[StateVector, np.ndarray], b: Union[StateVector, np.ndarray]) -> float:
    """两个态在模去全局相位之后的最大分量偏差"""
    a = a.amplitudes if isinstance(a, StateVector) else np.asarray(a, dtype=complex)
    b = b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"态维度不一致: {a.shape} vs {b.shape}")
    # 两侧用同一基准分量对齐, 避免模相近的分量选取不同
    pivot = np.argmax(np.abs(a))
    if abs(a[pivot]) == 0 or abs(b[pivot]) == 0:
        return float(np.max(np.abs(a - b)))
    phase = (b[pivot] / abs(b[pivot])) / (a[pivot] / abs(a[pivot]))
    return float(np.max(np.abs(a * phase - b)))
