#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
纠缠保护协议
弱测量恢复、带环境的后选择保护、扩展 (预备+恢复) 方案的线路模拟

寄存器布局:
    弱测量方案 [S0, S1] + 每轮附加的辅助比特
    环境方案   [S0, S1, E0, E1] + 每轮附加的辅助比特
辅助比特测量后立即移出寄存器
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .channels import (
    Branch, DampingCompletion, DampingLike, as_damping, cnot, damping_couple,
    hadamard_theta, measure_branches, postselect, weak_null
)
from .error_handler import ImpossibleBranchError, InvalidParameterError, InvalidStateError
from .logger import BranchLogEntry, branch_logger
from .metrics import concurrence_margin, concurrence_mixed
from .tensor_core import (
    DensityMatrix, QubitRole, StateVector, append_qubits, apply_unitary, check_targets,
    partial_trace
)

logger = logging.getLogger("Protocols")

MAX_ROUNDS = 4
SYSTEM_QUBITS = (0, 1)


@dataclass(frozen=True)
class TwoQubitCoeffs:
    """两比特纯态系数 α|00> + β|01> + γ|10> + δ|11>

    构造时自动归一化, 原始范数平方保存在 raw_norm_squared
    """
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    raw_norm_squared: float = field(default=1.0, init=False, compare=False)

    def __post_init__(self):
        values = np.array([self.alpha, self.beta, self.gamma, self.delta], dtype=complex)
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError(f"系数必须为有限值: {values}")
        norm_sq = float(np.vdot(values, values).real)
        if norm_sq == 0.0:
            raise InvalidStateError("系数全为零")
        values = values / math.sqrt(norm_sq)
        for name, value in zip(('alpha', 'beta', 'gamma', 'delta'), values):
            object.__setattr__(self, name, complex(value))
        object.__setattr__(self, 'raw_norm_squared', norm_sq)

    @classmethod
    def from_sequence(cls, values: Sequence[complex]) -> 'TwoQubitCoeffs':
        if len(values) != 4:
            raise InvalidParameterError(f"需要4个系数, 实际为 {len(values)}")
        return cls(*values)

    @classmethod
    def from_state(cls, state: StateVector) -> 'TwoQubitCoeffs':
        if state.num_qubits != 2:
            raise InvalidParameterError(f"需要两比特态, 实际为 {state.num_qubits} 比特")
        return cls(*state.amplitudes)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.delta], dtype=complex)

    def to_state(self) -> StateVector:
        return StateVector(self.as_array(), (QubitRole.SYSTEM, QubitRole.SYSTEM), normalized=True)

    def is_real(self, tol: float = 1e-15) -> bool:
        return bool(np.all(np.abs(self.as_array().imag) <= tol))

    def to_dict(self) -> Dict[str, list]:
        return {name: [value.real, value.imag]
                for name, value in zip(('alpha', 'beta', 'gamma', 'delta'), self.as_array())}


CoeffsLike = Union[TwoQubitCoeffs, Sequence[complex]]


def as_coeffs(coeffs: CoeffsLike) -> TwoQubitCoeffs:
    """接受 TwoQubitCoeffs 或4个数的序列"""
    return coeffs if isinstance(coeffs, TwoQubitCoeffs) else TwoQubitCoeffs.from_sequence(coeffs)


@dataclass(frozen=True)
class SchemeParams:
    """扩展方案参数

    x = tan²θ1 为预备强度, y = tan²θ2 为恢复强度, 满足 x·q·y = 1
    基本方案对应 x = 1
    """
    damping: DampingLike
    x: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'damping', as_damping(self.damping))
        x = float(self.x)
        if not math.isfinite(x) or x <= 0:
            raise InvalidParameterError(f"预备强度 x 必须为正数: {self.x}")
        object.__setattr__(self, 'x', x)

    @property
    def y(self) -> float:
        xq = self.x * self.damping.q
        return math.inf if xq == 0 else 1.0 / xq

    @property
    def preparation_theta(self) -> float:
        return preparation_angle(self.x)

    @property
    def recovery_theta(self) -> float:
        return math.atan(math.sqrt(self.y))


@dataclass
class TreeLeaf:
    """分支树的叶子: 路径、从根开始的累计概率、末态"""
    path: str
    probability: float
    state: Union[StateVector, DensityMatrix]


@dataclass
class RecoveryResult:
    """协议执行结果"""
    success_probability: float
    recovered: Optional[Union[StateVector, DensityMatrix]]
    branch_log: List[BranchLogEntry] = field(default_factory=list)
    success_branches: List[TreeLeaf] = field(default_factory=list)
    residual: List[TreeLeaf] = field(default_factory=list)
    stage_probabilities: Dict[str, float] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.recovered is not None

    def logged_success_probability(self) -> float:
        """按分支日志重新累加的成功概率"""
        return float(sum(entry.cumulative for entry in self.branch_log if entry.success))

    def to_dict(self) -> dict:
        return {
            'success_probability': self.success_probability,
            'succeeded': self.succeeded,
            'stage_probabilities': dict(self.stage_probabilities),
            'branch_log': [entry.to_dict() for entry in self.branch_log],
            'success_paths': [leaf.path for leaf in self.success_branches],
            'residual_paths': [leaf.path for leaf in self.residual]
        }


def recovery_angle(x: float) -> float:
    """恢复轮的Hadamard角度, tanθ = 1/sqrt(x); x = 0 时为 π/2"""
    return math.atan2(1.0, math.sqrt(x))


def preparation_angle(x: float) -> float:
    """预备轮的Hadamard角度, tanθ = sqrt(x)"""
    return math.atan(math.sqrt(x))


def _recovery_circuit(state: StateVector, theta: float,
                      system: Sequence[int]) -> Tuple[StateVector, List[int]]:
    """为每个系统比特附加辅助比特, 作用 H_θ 和 CNOT(系统→辅助), 不测量"""
    system = list(system)
    check_targets(state.num_qubits, system)
    first = state.num_qubits
    register = append_qubits(state, [QubitRole.ANCILLA] * len(system))
    ancillas = list(range(first, first + len(system)))

    h_gate = hadamard_theta(theta)
    cx_gate = cnot()
    for s, a in zip(system, ancillas):
        register = apply_unitary(register, h_gate, [a])
        register = apply_unitary(register, cx_gate, [s, a])
    return register, ancillas


def recovery_round(state: StateVector, theta: float,
                   system: Sequence[int] = SYSTEM_QUBITS) -> List[Branch]:
    """一轮双比特恢复

    附加两个 |0> 辅助比特, 各作用 H_θ, 再由对应系统比特作 CNOT, 最后测量辅助比特

    Args:
        state: 归一化输入态 (可含环境比特)
        theta: Hadamard 角度
        system: 两个系统比特的索引

    Returns:
        按结果升序的分支, 辅助比特已移除; 结果 "01" 表示第二个系统比特读到1
    """
    if len(system) != 2:
        raise InvalidParameterError(f"恢复轮需要两个系统比特: {list(system)}")
    register, ancillas = _recovery_circuit(state, theta, system)
    return measure_branches(register, ancillas)


def single_qubit_round(state: StateVector, qubit: int, theta: float) -> List[Branch]:
    """对单个系统比特的后续恢复轮; 结果 "0" 为成功"""
    register, ancillas = _recovery_circuit(state, theta, [qubit])
    return measure_branches(register, ancillas)


def _log_entry(entries: List[BranchLogEntry], entry: BranchLogEntry):
    entries.append(entry)
    if branch_logger.branch_logging_enabled():
        branch_logger.log_branch(entry)


class BranchTreeRunner:
    """分支树执行器

    全恢复轮结果:
        00     成功
        01/10  对读到1的系统比特作单比特后续轮, 强度平方
        11     再作一轮全恢复, 强度平方
    单比特后续轮结果 0 成功, 1 则强度平方后重复
    轮数用尽仍未成功的分支记为残余
    """

    def __init__(self, system: Sequence[int] = SYSTEM_QUBITS,
                 finish: Optional[Callable[[StateVector], Union[StateVector, DensityMatrix]]] = None):
        self.system = tuple(system)
        self.finish = finish or (lambda state: state)
        self.entries: List[BranchLogEntry] = []
        self.successes: List[TreeLeaf] = []
        self.residual: List[TreeLeaf] = []

    def record(self, round_index: int, path: str, outcome: str,
               probability: float, cumulative: float, success: bool = False):
        _log_entry(self.entries, BranchLogEntry(round_index, path, outcome,
                                                probability, cumulative, success))

    def run_full(self, state: StateVector, x: float, rounds_left: int,
                 round_index: int = 1, path: str = "", cumulative: float = 1.0):
        """强度为 x 的全恢复轮 (tanθ = 1/sqrt(x))"""
        for branch in recovery_round(state, recovery_angle(x), self.system):
            branch_path = f"{path}/{branch.outcome}" if path else branch.outcome
            branch_cumulative = cumulative * branch.probability
            success = branch.outcome == "00"
            self.record(round_index, branch_path, branch.outcome,
                        branch.probability, branch_cumulative, success)

            if success:
                self._succeed(branch_path, branch_cumulative, branch.post_state)
            elif rounds_left <= 1:
                self.residual.append(TreeLeaf(branch_path, branch_cumulative, branch.post_state))
            elif branch.outcome == "11":
                self.run_full(branch.post_state, x * x, rounds_left - 1,
                              round_index + 1, branch_path, branch_cumulative)
            else:
                damped = self.system[1] if branch.outcome == "01" else self.system[0]
                self.run_single(branch.post_state, damped, x * x, rounds_left - 1,
                                round_index + 1, branch_path, branch_cumulative)

    def run_single(self, state: StateVector, qubit: int, y: float, rounds_left: int,
                   round_index: int = 1, path: str = "", cumulative: float = 1.0):
        """强度为 y 的单比特后续轮 (tanθ = 1/sqrt(y))"""
        for branch in single_qubit_round(state, qubit, recovery_angle(y)):
            branch_path = f"{path}/{branch.outcome}" if path else branch.outcome
            branch_cumulative = cumulative * branch.probability
            success = branch.outcome == "0"
            self.record(round_index, branch_path, branch.outcome,
                        branch.probability, branch_cumulative, success)

            if success:
                self._succeed(branch_path, branch_cumulative, branch.post_state)
            elif rounds_left <= 1:
                self.residual.append(TreeLeaf(branch_path, branch_cumulative, branch.post_state))
            else:
                self.run_single(branch.post_state, qubit, y * y, rounds_left - 1,
                                round_index + 1, branch_path, branch_cumulative)

    def _succeed(self, path: str, cumulative: float, state: StateVector):
        self.successes.append(TreeLeaf(path, cumulative, self.finish(state)))

    def result(self, stage_probabilities: Optional[Dict[str, float]] = None) -> RecoveryResult:
        success_probability = float(sum(leaf.probability for leaf in self.successes))
        recovered = self.successes[0].state if self.successes else None
        return RecoveryResult(success_probability, recovered, self.entries,
                              self.successes, self.residual, stage_probabilities or {})


def _check_rounds(rounds: int, name: str = "max_rounds"):
    if isinstance(rounds, bool) or not isinstance(rounds, int) or not 1 <= rounds <= MAX_ROUNDS:
        raise InvalidParameterError(f"{name} 必须在 1..{MAX_ROUNDS} 内: {rounds}")


def _trace_environment(state: StateVector) -> DensityMatrix:
    return partial_trace(state, list(SYSTEM_QUBITS))


# ---------------------------------------------------------------- 弱测量方案

def damp_null(coeffs: CoeffsLike, p: DampingLike) -> Tuple[float, StateVector]:
    """两个比特都得到弱测量零结果

    Returns:
        (零结果概率 N_d², 态 (α, β√q, γ√q, δq)/N_d)
    """
    state = as_coeffs(coeffs).to_state()
    first, state = weak_null(state, p, 0)
    second, state = weak_null(state, p, 1)
    return first * second, state


def recover_iterative(coeffs: CoeffsLike, p: DampingLike, max_rounds: int = 1) -> RecoveryResult:
    """弱测量零结果后的迭代恢复

    Args:
        coeffs: 输入系数
        p: 阻尼参数
        max_rounds: 恢复轮数上限 N (1..4)

    Returns:
        成功概率包含零结果概率; 每个成功分支的态都等于输入态
    """
    _check_rounds(max_rounds)
    params = as_damping(p)
    runner = BranchTreeRunner()

    try:
        null_probability, damped = damp_null(coeffs, params)
    except ImpossibleBranchError:
        logger.debug(f"p={params.p}: 零结果不可能发生")
        return runner.result({'null': 0.0})

    runner.record(0, "", "null", null_probability, null_probability)
    runner.run_full(damped, params.q, max_rounds, cumulative=null_probability)
    return runner.result({'null': null_probability})


# ---------------------------------------------------------------- 环境方案

def damp_env(coeffs: CoeffsLike, p: DampingLike,
             completion: DampingCompletion = DampingCompletion.MINIMAL) -> StateVector:
    """系统与环境耦合后的四比特纯态 [S0, S1, E0, E1]"""
    state = append_qubits(as_coeffs(coeffs).to_state(),
                          (QubitRole.ENVIRONMENT, QubitRole.ENVIRONMENT))
    coupling = damping_couple(p, completion)
    state = apply_unitary(state, coupling, [0, 2])
    return apply_unitary(state, coupling, [1, 3])


def damped_density(coeffs: CoeffsLike, p: DampingLike,
                   completion: DampingCompletion = DampingCompletion.MINIMAL) -> DensityMatrix:
    """阻尼后系统的约化密度矩阵"""
    return _trace_environment(damp_env(coeffs, p, completion))


def _select(branches: List[Branch], outcome: str) -> Branch:
    for branch in branches:
        if branch.outcome == outcome:
            return branch
    raise ImpossibleBranchError(f"测量结果 {outcome} 的概率为零")


def protect(coeffs: CoeffsLike, p: DampingLike,
            completion: DampingCompletion = DampingCompletion.MINIMAL) -> RecoveryResult:
    """阻尼后作一轮恢复并后选择 00, 迹掉环境

    Raises:
        ImpossibleBranchError: 00 结果概率为零 (p = 1)
    """
    params = as_damping(p)
    runner = BranchTreeRunner(finish=_trace_environment)
    runner.run_full(damp_env(coeffs, params, completion), params.q, rounds_left=1)
    if not runner.successes:
        raise ImpossibleBranchError(f"p={params.p}: 恢复结果 00 不可能发生")
    return runner.result({'recover': runner.successes[0].probability})


def protect_followup(coeffs: CoeffsLike, p: DampingLike, first_outcome: str = "01",
                     max_rounds: int = 1,
                     completion: DampingCompletion = DampingCompletion.MINIMAL) -> RecoveryResult:
    """首轮得到 01 或 10 后对读到1的系统比特作单比特后续恢复

    第k个后续轮取 tanθ = 1/q^(2^(k-1)); 成功概率从首轮测量之前算起

    Args:
        coeffs: 输入系数
        p: 阻尼参数
        first_outcome: 首轮结果, "01" 或 "10"
        max_rounds: 后续轮数上限

    Raises:
        ImpossibleBranchError: 首轮结果概率为零
    """
    if first_outcome not in ("01", "10"):
        raise InvalidParameterError(f"首轮结果必须是 01 或 10: {first_outcome}")
    _check_rounds(max_rounds)
    params = as_damping(p)

    branches = recovery_round(damp_env(coeffs, params, completion), recovery_angle(params.q))
    first = _select(branches, first_outcome)

    runner = BranchTreeRunner(finish=_trace_environment)
    runner.record(1, first_outcome, first_outcome, first.probability, first.probability)
    damped = SYSTEM_QUBITS[1] if first_outcome == "01" else SYSTEM_QUBITS[0]
    runner.run_single(first.post_state, damped, params.q ** 2, max_rounds,
                      round_index=2, path=first_outcome, cumulative=first.probability)
    return runner.result({'first': first.probability})


def protect_total_success(coeffs: CoeffsLike, p: DampingLike, rounds: int = 1,
                          completion: DampingCompletion = DampingCompletion.MINIMAL) -> RecoveryResult:
    """环境方案的完整分支树: 首轮 00 加上所有后续轮的成功分支"""
    _check_rounds(rounds, "rounds")
    params = as_damping(p)
    runner = BranchTreeRunner(finish=_trace_environment)
    runner.run_full(damp_env(coeffs, params, completion), params.q, rounds)
    return runner.result()


# ---------------------------------------------------------------- 扩展方案

def prepare_robust(coeffs: CoeffsLike, x: float) -> Tuple[float, StateVector]:
    """预备轮: tanθ1 = sqrt(x), 后选择 00

    Returns:
        (概率 N1²/(1+x)², 态 (α, β√x, γ√x, δx)/N1)
    """
    x = SchemeParams(0.0, x).x
    register, ancillas = _recovery_circuit(as_coeffs(coeffs).to_state(),
                                           preparation_angle(x), SYSTEM_QUBITS)
    return postselect(register, ancillas, "00")


def extended_protect(coeffs: CoeffsLike, p: DampingLike, x: float,
                     completion: DampingCompletion = DampingCompletion.MINIMAL) -> RecoveryResult:
    """扩展方案: 预备 → 阻尼 → 恢复 (x·q·y = 1), 后选择 00, 迹掉环境

    所得密度矩阵与 protect(coeffs, p·x) 相同

    Raises:
        InvalidParameterError: p = 1 或 x <= 0
        ImpossibleBranchError: 后选择结果概率为零
    """
    scheme = SchemeParams(p, x)
    if scheme.damping.q == 0.0:
        raise InvalidParameterError("扩展方案要求 p < 1")

    prepare_probability, prepared = prepare_robust(coeffs, scheme.x)
    env_state = damp_env(TwoQubitCoeffs.from_state(prepared), scheme.damping, completion)
    branches = recovery_round(env_state, scheme.recovery_theta)
    recovered = _select(branches, "00")

    entries: List[BranchLogEntry] = []
    _log_entry(entries, BranchLogEntry(0, "prepare", "00", prepare_probability, prepare_probability))
    for branch in branches:
        _log_entry(entries, BranchLogEntry(
            1, f"prepare/{branch.outcome}", branch.outcome, branch.probability,
            prepare_probability * branch.probability, branch.outcome == "00"))

    total = prepare_probability * recovered.probability
    rho = _trace_environment(recovered.post_state)
    return RecoveryResult(total, rho, entries, [TreeLeaf("prepare/00", total, rho)], [],
                          {'prepare': prepare_probability, 'recover': recovered.probability})


# ---------------------------------------------------------------- 模拟曲线与求根

def damped_concurrence(coeffs: CoeffsLike, p: DampingLike) -> float:
    """模拟的阻尼后共生纠缠度"""
    return concurrence_mixed(damped_density(coeffs, p))


def recovered_concurrence(coeffs: CoeffsLike, p: DampingLike) -> float:
    """模拟的恢复后共生纠缠度, 不可能分支记为0"""
    try:
        return concurrence_mixed(protect(coeffs, p).recovered)
    except ImpossibleBranchError:
        return 0.0


def find_esd_point(coeffs: CoeffsLike, upper: float = 0.999) -> Optional[float]:
    """模拟的纠缠突然死亡点: 阻尼后未截断共生量的零点; 不存在时返回 None"""
    coeffs = as_coeffs(coeffs)

    def margin(p: float) -> float:
        return concurrence_margin(damped_density(coeffs, p))

    if margin(0.0) <= 0 or margin(upper) >= 0:
        return None
    return float(brentq(margin, 0.0, upper, xtol=1e-14))


def find_crossing_point(coeffs: CoeffsLike, lower: float = 1e-3,
                        upper: float = 0.999) -> Optional[float]:
    """模拟的恢复曲线与阻尼曲线交点; 不存在时返回 None"""
    coeffs = as_coeffs(coeffs)

    def gap(p: float) -> float:
        return recovered_concurrence(coeffs, p) - damped_concurrence(coeffs, p)

    g_lower, g_upper = gap(lower), gap(upper)
    if g_lower * g_upper > 0:
        return None
    return float(brentq(gap, lower, upper, xtol=1e-14))
