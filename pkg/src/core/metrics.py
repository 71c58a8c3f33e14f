#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
纠缠与保真度度量
Wootters 共生纠缠度 (纯态与混态) 以及纯初态对混合末态的保真度
"""

import logging
from typing import Union

import numpy as np

from .error_handler import DimensionMismatchError, InvalidStateError
from .tensor_core import EXACT_TOL, DensityMatrix, StateVector

logger = logging.getLogger("Metrics")

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_YY = np.kron(_SIGMA_Y, _SIGMA_Y)

# 构造 sqrt(rho) 时低于此值的特征值视为零
_EIGEN_FLOOR = 1e-14


def _clamp_unit(value: float) -> float:
    """截断到 [0, 1]"""
    return min(1.0, max(0.0, value))


def _amplitude_array(state) -> np.ndarray:
    """从 StateVector、带 as_array() 的系数对象或数组取出振幅"""
    if isinstance(state, StateVector):
        return state.amplitudes
    if hasattr(state, 'as_array'):
        return state.as_array()
    return np.asarray(state, dtype=complex)


def concurrence_pure(coeffs) -> float:
    """纯态共生纠缠度 max{0, 2|αδ - βγ|}

    Args:
        coeffs: 归一化的两比特系数 (α, β, γ, δ)

    Returns:
        [0, 1] 内的共生纠缠度
    """
    a, b, c, d = _amplitude_array(coeffs)
    norm = np.sqrt(abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2)
    if abs(norm - 1.0) > EXACT_TOL:
        raise InvalidStateError(f"系数未归一化: |c| = {norm:.15g}")
    return _clamp_unit(2.0 * abs(a * d - b * c))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """厄米半正定矩阵的平方根, 微小负特征值截为零"""
    eigenvalues, eigenvectors = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    eigenvalues = np.where(eigenvalues < _EIGEN_FLOOR, 0.0, eigenvalues)
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.conj().T


def _as_two_qubit_density(rho: Union[DensityMatrix, np.ndarray]) -> DensityMatrix:
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    if rho.dim != 4:
        raise DimensionMismatchError(f"共生纠缠度需要 4×4 密度矩阵, 实际为 {rho.dim}×{rho.dim}")
    return rho.validate()


def wootters_lambdas(rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    """rho·(σy⊗σy)·rho*·(σy⊗σy) 特征值的平方根, 降序

    取 sqrt(rho)·F 的奇异值, F = (σy⊗σy)·sqrt(rho)*·(σy⊗σy);
    两者相等, 而奇异值在秩亏附近不会放大舍入误差
    """
    rho = _as_two_qubit_density(rho)
    sqrt_rho = _psd_sqrt(rho.matrix)
    flipped = SIGMA_YY @ sqrt_rho.conj() @ SIGMA_YY
    return np.linalg.svd(sqrt_rho @ flipped, compute_uv=False)


def concurrence_margin(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """未截断的 λ1 - λ2 - λ3 - λ4, 可为负 (用于求根和诊断)"""
    lambdas = wootters_lambdas(rho)
    return float(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3])


def concurrence_mixed(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """两比特混态的 Wootters 共生纠缠度 max{0, λ1 - λ2 - λ3 - λ4}

    Raises:
        DimensionMismatchError: 不是 4×4
        InvalidStateError: 非厄米、迹不为1或非半正定
    """
    return _clamp_unit(concurrence_margin(rho))


def fidelity_pure_mixed(initial, final: Union[DensityMatrix, np.ndarray]) -> float:
    """纯初态与混合末态的保真度 <ψ|ρ|ψ>

    Args:
        initial: 归一化纯态 (StateVector、系数对象或振幅数组)
        final: 末态密度矩阵

    Returns:
        [0, 1] 内的保真度
    """
    psi = _amplitude_array(initial)
    rho = final.matrix if isinstance(final, DensityMatrix) else np.asarray(final, dtype=complex)
    if rho.shape != (psi.shape[0], psi.shape[0]):
        raise DimensionMismatchError(f"维度不一致: 态 {psi.shape[0]}, 密度矩阵 {rho.shape}")
    norm = np.sqrt(np.vdot(psi, psi).real)
    if abs(norm - 1.0) > EXACT_TOL:
        raise InvalidStateError(f"初态未归一化: |psi| = {norm:.15g}")

    overlap = np.vdot(psi, rho @ psi)
    if abs(overlap.imag) > EXACT_TOL:
        logger.warning(f"保真度虚部过大: {overlap.imag:.3g}")
    return _clamp_unit(float(overlap.real))
