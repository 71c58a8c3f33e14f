#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
验证步骤引擎
每个步骤对照线路模拟检查一组闭式公式或数值不变量, 报告最大偏差;
对字面形式与修正形式不一致的公式给出裁定
"""

import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from . import closed_forms as cf
from .channels import (
    DampingCompletion, damping_couple, measure_branches, postselect, weak_null
)
from .closed_forms import CLOSED_FORMS
from .metrics import (
    SIGMA_YY, concurrence_mixed, concurrence_pure, fidelity_pure_mixed, wootters_lambdas
)
from .parameter_presets import coefficient_presets
from .protocols import (
    TwoQubitCoeffs, damp_null, damped_density, extended_protect, find_crossing_point,
    find_esd_point, prepare_robust, protect, protect_followup, recover_iterative,
    recovery_angle, recovery_round
)
from .tensor_core import (
    EXACT_TOL, SPECTRAL_TOL, Operator, QubitRole, StateVector, append_qubits, apply_unitary,
    kron, partial_trace, phase_deviation, pure_to_density
)

P_GRID = tuple(k / 10 for k in range(1, 10))
ESD_REFERENCE = 0.8507


class StepStatus(Enum):
    """步骤执行状态"""
    PENDING = "pending"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"


@dataclass
class CheckLine:
    """报告中的一行: 一个被检查的量"""
    quantity: str
    max_deviation: float
    tolerance: float
    points: int
    passed: bool
    detail: str = ""
    equation: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'equation': self.equation,
            'quantity': self.quantity,
            'max_deviation': self.max_deviation,
            'tolerance': self.tolerance,
            'points': self.points,
            'passed': self.passed,
            'detail': self.detail,
        }


@dataclass
class Adjudication:
    """字面形式与修正形式的裁定; 恰有一个形式与模拟一致时通过"""
    quantity: str
    literal_deviation: float
    corrected_deviation: float
    tolerance: float
    points: int
    equation: str = ""

    @property
    def matching(self) -> List[str]:
        variants = (('literal', self.literal_deviation), ('corrected', self.corrected_deviation))
        return [name for name, deviation in variants if deviation <= self.tolerance]

    @property
    def passed(self) -> bool:
        return len(self.matching) == 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'equation': self.equation,
            'quantity': self.quantity,
            'literal_deviation': self.literal_deviation,
            'corrected_deviation': self.corrected_deviation,
            'tolerance': self.tolerance,
            'points': self.points,
            'matching': self.matching,
            'passed': self.passed,
        }


@dataclass
class StepResult:
    """步骤执行结果"""
    status: StepStatus
    checks: List[CheckLine] = field(default_factory=list)
    adjudications: List[Adjudication] = field(default_factory=list)
    execution_time: Optional[float] = None
    error_message: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'status': self.status.value,
            'checks': [line.to_dict() for line in self.checks],
            'adjudications': [item.to_dict() for item in self.adjudications],
            'execution_time': self.execution_time,
            'error_message': self.error_message,
        }


class DeviationTracker:
    """累计一个量的最大偏差和布尔条件违例"""

    MAX_DETAILS = 3

    def __init__(self, quantity: str, tolerance: float):
        self.quantity = quantity
        self.tolerance = tolerance
        self.max_deviation = 0.0
        self.points = 0
        self.violations = 0
        self.details: List[str] = []

    def compare(self, simulated, expected) -> float:
        deviation = float(np.max(np.abs(np.asarray(simulated, dtype=complex)
                                        - np.asarray(expected, dtype=complex))))
        if not math.isfinite(deviation):
            deviation = math.inf
        self.max_deviation = max(self.max_deviation, deviation)
        self.points += 1
        return deviation

    def require(self, condition: bool, message: str):
        self.points += 1
        if not condition:
            self.violations += 1
            if len(self.details) < self.MAX_DETAILS:
                self.details.append(message)

    def to_line(self) -> CheckLine:
        passed = self.max_deviation <= self.tolerance and self.violations == 0
        detail = "; ".join(self.details)
        if self.violations > len(self.details):
            detail += f" (共 {self.violations} 处)"
        return CheckLine(self.quantity, self.max_deviation, self.tolerance, self.points, passed, detail,
                         cf.equation_label(self.quantity))


class AdjudicationTracker:
    def __init__(self, quantity: str, tolerance: float):
        self.quantity = quantity
        self.tolerance = tolerance
        self.literal = DeviationTracker(quantity, tolerance)
        self.corrected = DeviationTracker(quantity, tolerance)

    def compare(self, simulated, literal, corrected):
        self.literal.compare(simulated, literal)
        self.corrected.compare(simulated, corrected)

    def to_adjudication(self) -> Adjudication:
        return Adjudication(self.quantity, self.literal.max_deviation, self.corrected.max_deviation,
                            self.tolerance, self.corrected.points,
                            cf.equation_label(self.quantity))


def random_coeffs(rng: np.random.Generator, count: int, real: bool = False) -> List[TwoQubitCoeffs]:
    """随机输入系数; 实系数取 [-1, 1] 均匀分布, 复系数取复高斯分布"""
    result = []
    for _ in range(count):
        if real:
            values = rng.uniform(-1.0, 1.0, size=4)
        else:
            values = rng.normal(size=4) + 1j * rng.normal(size=4)
        result.append(TwoQubitCoeffs(*values))
    return result


def random_state(rng: np.random.Generator, num_qubits: int) -> StateVector:
    values = rng.normal(size=2 ** num_qubits) + 1j * rng.normal(size=2 ** num_qubits)
    return StateVector(values / np.linalg.norm(values), normalized=True)


def random_density(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    """Ginibre 随机混态"""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def preset(name: str) -> TwoQubitCoeffs:
    return coefficient_presets.resolve(name)


class VerificationStep(ABC):
    """验证步骤基类

    子类声明 covers (所覆盖的闭式登记项), 并在 run() 中通过 tracker()/adjudicator()
    登记检查项; 每个覆盖项都必须以同名检查行出现在结果中
    """

    covers: Tuple[str, ...] = ()

    def __init__(self, step_id: str, name: str, description: str, seed: int = 0):
        """初始化验证步骤

        Args:
            step_id: 步骤ID
            name: 步骤名称
            description: 步骤描述
            seed: 随机输入的种子
        """
        self.step_id = step_id
        self.name = name
        self.description = description
        self.seed = seed
        self.status = StepStatus.PENDING
        self.result: Optional[StepResult] = None
        self._trackers: List[DeviationTracker] = []
        self._adjudicators: List[AdjudicationTracker] = []
        self.logger = logging.getLogger(f"VerificationStep.{step_id}")

    def tracker(self, quantity: str, tolerance: float) -> DeviationTracker:
        tracker = DeviationTracker(quantity, tolerance)
        self._trackers.append(tracker)
        return tracker

    def adjudicator(self, quantity: str, tolerance: float) -> AdjudicationTracker:
        adjudicator = AdjudicationTracker(quantity, tolerance)
        self._adjudicators.append(adjudicator)
        return adjudicator

    @abstractmethod
    def run(self, rng: np.random.Generator):
        """执行检查, 结果写入已登记的 tracker"""

    def execute(self) -> StepResult:
        """执行验证步骤

        Returns:
            执行结果; 检查过程中的异常记为失败
        """
        self.reset()
        self.logger.info(f"开始执行步骤: {self.name}")
        self.status = StepStatus.RUNNING
        start_time = time.time()
        error_message = None

        try:
            self.run(np.random.default_rng(self.seed))
        except Exception as e:
            error_message = f"步骤执行异常: {type(e).__name__}: {e}"
            self.logger.error(error_message)

        checks = [tracker.to_line() for tracker in self._trackers]
        adjudications = [item.to_adjudication() for item in self._adjudicators]
        passed = (error_message is None and all(line.passed for line in checks)
                  and all(item.passed for item in adjudications))

        self.status = StepStatus.SUCCESS if passed else StepStatus.FAILED
        self.result = StepResult(self.status, checks, adjudications,
                                 time.time() - start_time, error_message)
        self.logger.info(f"步骤执行完成: {self.name}, 状态: {self.status.value}")
        return self.result

    def reset(self):
        self.status = StepStatus.PENDING
        self.result = None
        self._trackers = []
        self._adjudicators = []


# ---------------------------------------------------------------- 数值基础

class TensorCoreStep(VerificationStep):
    """张量运算不变量"""

    def __init__(self):
        super().__init__("tensor", "张量运算不变量", "幺正作用保范数、偏迹保迹、张量积结合律", seed=11)

    def run(self, rng):
        norms = self.tracker("unitary norm preservation", EXACT_TOL)
        traces = self.tracker("partial trace preserves trace", EXACT_TOL)
        assoc = self.tracker("kron associativity", 1e-14)

        for _ in range(50):
            state = random_state(rng, 3)
            u = Operator(unitary_group.rvs(4, random_state=rng), unitary=True)
            targets = list(rng.permutation(3)[:2])
            out = apply_unitary(state, u, targets)
            norms.compare(math.sqrt(out.norm_squared()), math.sqrt(state.norm_squared()))

            rho = pure_to_density(state)
            traces.compare(partial_trace(rho, [0]).trace(), rho.trace())
            traces.compare(partial_trace(state, [2, 1]).trace(), 1.0)

            a, b, c = (Operator(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
                       for _ in range(3))
            assoc.compare(kron(kron(a, b), c).matrix, kron(a, kron(b, c)).matrix)


class ChannelStep(VerificationStep):
    """门与噪声过程的不变量"""

    def __init__(self):
        super().__init__("channels", "门与噪声过程", "阻尼耦合幺正性、零结果组合关系、测量分支概率和", seed=12)

    def run(self, rng):
        unitarity = self.tracker("damping coupling unitarity", EXACT_TOL)
        composition = self.tracker("null-result composition", EXACT_TOL)
        branch_sums = self.tracker("measurement branch sums", EXACT_TOL)

        for k in range(11):
            p = k / 10
            for completion in DampingCompletion:
                u = damping_couple(p, completion).matrix
                unitarity.compare(u.conj().T @ u, np.eye(4))

            for _ in range(10):
                single = random_state(rng, 1)
                coupled = apply_unitary(append_qubits(single, [QubitRole.ENVIRONMENT]),
                                        damping_couple(p), [0, 1])
                env_probability, env_state = postselect(coupled, [1], "0")
                null_probability, null_state = weak_null(single, p, 0)
                composition.compare(env_probability, null_probability)
                composition.compare(env_state.amplitudes, null_state.amplitudes)

        for _ in range(50):
            branches = measure_branches(random_state(rng, 3), [0, 2])
            branch_sums.compare(sum(branch.probability for branch in branches), 1.0)
            for branch in branches:
                branch_sums.compare(branch.post_state.norm_squared(), 1.0)


class MetricStep(VerificationStep):
    """共生纠缠度与保真度的不变量"""

    def __init__(self):
        super().__init__("metrics", "度量不变量", "纯态/混态共生纠缠度一致、局域幺正不变、特征值交叉检验、保真度线性", seed=13)

    def run(self, rng):
        pure = self.tracker("mixed vs pure concurrence", SPECTRAL_TOL)
        local = self.tracker("local unitary invariance", 1e-9)
        eigen = self.tracker("Wootters eigenvalue cross-check", SPECTRAL_TOL)
        linear = self.tracker("fidelity linearity", EXACT_TOL)

        for coeffs in random_coeffs(rng, 200):
            pure.compare(concurrence_mixed(pure_to_density(coeffs.to_state())), concurrence_pure(coeffs))

        for _ in range(50):
            rho = random_density(rng)
            local_u = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
            local.compare(concurrence_mixed(local_u @ rho @ local_u.conj().T), concurrence_mixed(rho))

            product = rho @ SIGMA_YY @ rho.conj() @ SIGMA_YY
            eigenvalues = np.sort(np.linalg.eigvals(product).real)[::-1]
            eigen.compare(wootters_lambdas(rho) ** 2, eigenvalues)

            psi = random_state(rng, 2)
            other = random_density(rng)
            a = float(rng.uniform())
            mixed = a * rho + (1 - a) * other
            linear.compare(fidelity_pure_mixed(psi, mixed),
                           a * fidelity_pure_mixed(psi, rho) + (1 - a) * fidelity_pure_mixed(psi, other))


# ---------------------------------------------------------------- 弱测量方案

class NullResultStep(VerificationStep):
    covers = ('null-result probability', 'null-damped state')

    def __init__(self):
        super().__init__("null", "弱测量零结果", "两比特零结果的概率与末态", seed=21)

    def run(self, rng):
        probability = self.tracker('null-result probability', EXACT_TOL)
        state = self.tracker('null-damped state', EXACT_TOL)
        for coeffs in random_coeffs(rng, 200):
            for p in P_GRID:
                sim_probability, sim_state = damp_null(coeffs, p)
                probability.compare(sim_probability, cf.null_probability(coeffs, p))
                state.compare(phase_deviation(sim_state, cf.null_damped_amplitudes(coeffs, p)), 0.0)


class RecoveryBranchStep(VerificationStep):
    covers = ('recovery branch probabilities',)

    def __init__(self):
        super().__init__("recovery", "精确恢复", "首轮恢复的四个分支概率; 每个成功分支精确回到输入态", seed=22)

    def run(self, rng):
        branches = self.tracker('recovery branch probabilities', EXACT_TOL)
        exact = self.tracker("exact recovery", EXACT_TOL)
        logged = self.tracker("branch log consistency", EXACT_TOL)

        for coeffs in random_coeffs(rng, 200):
            for p in P_GRID:
                _, damped = damp_null(coeffs, p)
                simulated = {b.outcome: b.probability for b in recovery_round(damped, recovery_angle(1.0 - p))}
                for outcome, expected in cf.recovery_branch_probabilities(coeffs, p).items():
                    branches.compare(simulated.get(outcome, 0.0), expected)

                result = recover_iterative(coeffs, p, max_rounds=2)
                for leaf in result.success_branches:
                    exact.compare(phase_deviation(leaf.state, coeffs.as_array()), 0.0)
                logged.compare(result.logged_success_probability(), result.success_probability)


class SuccessProbabilityStep(VerificationStep):
    covers = ('follow-up success probability', 'success probability N=1',
              'success probability N=2', 'success probability N=3')

    def __init__(self):
        super().__init__("success", "成功概率", "分支树模拟与 N = 1..3 闭式、递推一致; 单调且不超过 q²", seed=23)

    def run(self, rng):
        followup = self.tracker('follow-up success probability', EXACT_TOL)
        by_rounds = {n: self.tracker(f'success probability N={n}', EXACT_TOL) for n in (1, 2, 3)}
        tree = self.tracker("success probability recursion", EXACT_TOL)
        bounds = self.tracker("success probability ordering", 0.0)

        q_grid = [k / 20 for k in range(1, 21)]
        inputs = [preset('esd')] + random_coeffs(rng, 2)
        previous: Dict[int, float] = {}

        for q in q_grid:
            p = 1.0 - q
            closed = {n: cf.success_prob_closed(n, q) for n in (1, 2, 3)}
            for coeffs in inputs:
                for n in (1, 2, 3):
                    result = recover_iterative(coeffs, p, n)
                    by_rounds[n].compare(result.success_probability, closed[n])
                    tree.compare(result.success_probability, cf.success_prob_tree(n, q))

                    if n == 2:
                        paths = {entry.path: entry.cumulative for entry in result.branch_log}
                        expected = cf.branch_weight("01", q) * cf.followup_success(q * q)
                        followup.compare(paths.get("01/0", 0.0), expected)
                        followup.compare(paths.get("10/0", 0.0), expected)

            bounds.require(closed[1] <= closed[2] <= closed[3] <= cf.double_weak_bound(q) + 1e-15,
                           f"q={q}: P1 <= P2 <= P3 <= q² 不成立")
            for n in (1, 2, 3):
                bounds.require(closed[n] >= previous.get(n, 0.0),
                               f"q={q}: N={n} 的成功概率随 p 增大")
                previous[n] = closed[n]

        by_rounds[1].compare(recover_iterative(inputs[0], 0.0, 1).success_probability, 0.25)
        by_rounds[2].compare(recover_iterative(inputs[0], 0.0, 2).success_probability, 0.5625)


# ---------------------------------------------------------------- 环境方案

class RecoveredDensityStep(VerificationStep):
    covers = ('recovered density matrix', 'recovered branch probability')

    def __init__(self):
        super().__init__("density", "恢复密度矩阵", "后选择 00 并迹掉环境后的密度矩阵与概率; 后续恢复给出同一矩阵", seed=31)

    def run(self, rng):
        density = self.tracker('recovered density matrix', EXACT_TOL)
        probability = self.tracker('recovered branch probability', EXACT_TOL)
        followup = self.tracker("follow-up recovered state", EXACT_TOL)
        adjudication = self.adjudicator('recovered branch probability', EXACT_TOL)

        for coeffs in random_coeffs(rng, 100, real=True):
            for p in P_GRID:
                result = protect(coeffs, p)
                expected = cf.recovered_density(coeffs, p)
                density.compare(result.recovered.matrix, expected)
                probability.compare(result.success_probability, cf.recovered_probability(coeffs, p))
                adjudication.compare(result.success_probability,
                                     cf.recovered_probability_literal(coeffs, p),
                                     cf.recovered_probability(coeffs, p))

                for outcome in ("01", "10"):
                    for leaf in protect_followup(coeffs, p, outcome, max_rounds=2).success_branches:
                        followup.compare(leaf.state.matrix, expected)


class ConcurrenceStep(VerificationStep):
    covers = ('damped concurrence', 'recovered concurrence')

    def __init__(self):
        super().__init__("concurrence", "共生纠缠度", "阻尼与恢复后的 Wootters 共生纠缠度对照闭式 (实系数网格)", seed=32)

    def run(self, rng):
        damped = self.tracker('damped concurrence', SPECTRAL_TOL)
        recovered = self.tracker('recovered concurrence', SPECTRAL_TOL)
        inputs = [preset('esd'), preset('crossing'), preset('bell')] + random_coeffs(rng, 53, real=True)

        for coeffs in inputs:
            for p in P_GRID:
                damped.compare(concurrence_mixed(damped_density(coeffs, p)), cf.damped_concurrence(coeffs, p))
                recovered.compare(concurrence_mixed(protect(coeffs, p).recovered),
                                  cf.recovered_concurrence(coeffs, p))


class EsdPointStep(VerificationStep):
    covers = ('ESD point',)

    def __init__(self):
        super().__init__("esd", "纠缠突然死亡点", "模拟阻尼共生纠缠度的零点与闭式一致", seed=33)

    def run(self, rng):
        root = self.tracker('ESD point', 1e-8)
        reference = self.tracker("ESD point reference value", 1e-4)
        coeffs = preset('esd')

        simulated, expected = find_esd_point(coeffs), cf.esd_point(coeffs)
        root.require(simulated is not None and expected is not None, "未找到突然死亡点")
        if simulated is not None and expected is not None:
            root.compare(simulated, expected)
            reference.compare(simulated, ESD_REFERENCE)
            root.require(concurrence_mixed(damped_density(coeffs, min(1.0, expected + 0.05))) == 0.0,
                         "突然死亡点之后共生纠缠度不为零")

        for coeffs in random_coeffs(rng, 10, real=True):
            expected = cf.esd_point(coeffs)
            if expected is None or expected > 0.99:
                root.require(find_esd_point(coeffs, upper=0.99) is None, "闭式给出无突然死亡, 模拟却找到零点")
            else:
                simulated = find_esd_point(coeffs)
                root.require(simulated is not None, f"未找到突然死亡点 {expected:.6g}")
                if simulated is not None:
                    root.compare(simulated, expected)


class CrossingThresholdStep(VerificationStep):
    covers = ('crossing threshold',)

    def __init__(self):
        super().__init__("crossing", "交叉阈值", "恢复曲线与阻尼曲线的交点; |α| >= |δ| 时恢复曲线始终不低于阻尼曲线", seed=34)

    def run(self, rng):
        threshold = self.tracker('crossing threshold', 1e-6)
        dominance = self.tracker("partial protection when |α| >= |δ|", SPECTRAL_TOL)

        coeffs = preset('crossing')
        simulated, expected = find_crossing_point(coeffs), cf.crossing_threshold(coeffs)
        threshold.require(simulated is not None and expected is not None, "未找到交点")
        if simulated is not None and expected is not None:
            threshold.compare(simulated, expected)

        protected = preset('esd')
        threshold.require(cf.crossing_threshold(protected) is None, "|α| > |δ| 时不应存在交叉阈值")
        for k in range(1, 100):
            p = k / 100
            gap = concurrence_mixed(protect(protected, p).recovered) - concurrence_mixed(damped_density(protected, p))
            dominance.require(gap >= -SPECTRAL_TOL, f"p={p}: 恢复后共生纠缠度低于阻尼曲线")


# ---------------------------------------------------------------- 扩展方案

class ExtendedSchemeStep(VerificationStep):
    covers = ('prepared state', 'preparation probability', 'extended density matrix')

    def __init__(self):
        super().__init__("extended", "扩展方案", "预备态与概率、末态密度矩阵、p → px 约化", seed=41)

    def run(self, rng):
        prepared = self.tracker('prepared state', EXACT_TOL)
        prepared_probability = self.tracker('preparation probability', EXACT_TOL)
        density = self.tracker('extended density matrix', EXACT_TOL)
        reduction = self.tracker("extended reduction to basic scheme", EXACT_TOL)
        success = self.tracker("extended success probability", EXACT_TOL)

        for coeffs in random_coeffs(rng, 25):
            for x in (0.1, 0.5, 0.8, 1.0):
                probability, state = prepare_robust(coeffs, x)
                prepared.compare(phase_deviation(state, cf.prepared_amplitudes(coeffs, x)), 0.0)
                prepared_probability.compare(probability, cf.prepare_probability(coeffs, x))

                for p in (0.3, 0.7):
                    result = extended_protect(coeffs, p, x)
                    density.compare(result.recovered.matrix, cf.extended_density(coeffs, p, x))
                    reduction.compare(result.recovered.matrix, protect(coeffs, p * x).recovered.matrix)
                    success.compare(result.stage_probabilities['recover'],
                                    cf.extended_recover_probability(coeffs, p, x))
                    success.compare(result.success_probability, cf.extended_total_probability(coeffs, p, x))


class ExtendedConcurrenceStep(VerificationStep):
    covers = ('extended concurrence',)

    def __init__(self):
        super().__init__("extended-concurrence", "扩展方案共生纠缠度", "模拟值对照闭式, 并裁定字面形式", seed=42)

    def run(self, rng):
        concurrence = self.tracker('extended concurrence', SPECTRAL_TOL)
        adjudication = self.adjudicator('extended concurrence', SPECTRAL_TOL)
        inputs = [preset('esd'), preset('crossing')] + random_coeffs(rng, 20, real=True)

        for coeffs in inputs:
            for p in (0.2, 0.4, 0.6, 0.8):
                for x in (0.1, 0.5, 0.8):
                    simulated = concurrence_mixed(extended_protect(coeffs, p, x).recovered)
                    concurrence.compare(simulated, cf.extended_concurrence(coeffs, p, x))
                    adjudication.compare(simulated, cf.extended_concurrence_literal(coeffs, p, x),
                                         cf.extended_concurrence(coeffs, p, x))


class FidelityStep(VerificationStep):
    covers = ('damped fidelity', 'recovered fidelity', 'extended fidelity')

    def __init__(self):
        super().__init__("fidelity", "保真度", "阻尼、恢复、扩展方案的保真度闭式; p = 0 与弱预备极限", seed=43)

    def run(self, rng):
        damped = self.tracker('damped fidelity', SPECTRAL_TOL)
        recovered = self.tracker('recovered fidelity', SPECTRAL_TOL)
        extended = self.tracker('extended fidelity', SPECTRAL_TOL)
        adjudication = self.adjudicator('extended fidelity', SPECTRAL_TOL)
        general = self.tracker("complex-coefficient fidelity", SPECTRAL_TOL)
        zero_damping = self.tracker("fidelity at zero damping", EXACT_TOL)
        limit = self.tracker("weak preparation limit", 0.0)

        inputs = [preset('esd'), preset('crossing')] + random_coeffs(rng, 20, real=True)
        for coeffs in inputs:
            for p in P_GRID:
                damped.compare(fidelity_pure_mixed(coeffs, damped_density(coeffs, p)),
                               cf.damped_fidelity(coeffs, p))
                recovered.compare(fidelity_pure_mixed(coeffs, protect(coeffs, p).recovered),
                                  cf.recovered_fidelity(coeffs, p))
                for x in (0.1, 0.5, 0.8):
                    simulated = fidelity_pure_mixed(coeffs, extended_protect(coeffs, p, x).recovered)
                    extended.compare(simulated, cf.extended_fidelity(coeffs, p, x))
                    adjudication.compare(simulated, cf.extended_fidelity_literal(coeffs, p, x),
                                         cf.extended_fidelity(coeffs, p, x))

            zero_damping.compare(fidelity_pure_mixed(coeffs, damped_density(coeffs, 0.0)), 1.0)
            zero_damping.compare(fidelity_pure_mixed(coeffs, protect(coeffs, 0.0).recovered), 1.0)
            zero_damping.compare(fidelity_pure_mixed(coeffs, extended_protect(coeffs, 0.0, 0.5).recovered), 1.0)

        for coeffs in random_coeffs(rng, 20):
            for p in (0.2, 0.5, 0.8):
                general.compare(fidelity_pure_mixed(coeffs, damped_density(coeffs, p)),
                                cf.damped_fidelity_general(coeffs, p))
                general.compare(fidelity_pure_mixed(coeffs, protect(coeffs, p).recovered),
                                cf.recovered_fidelity_general(coeffs, p))

        coeffs = preset('esd')
        weak = fidelity_pure_mixed(coeffs, extended_protect(coeffs, 0.5, 1e-4).recovered)
        basic = fidelity_pure_mixed(coeffs, extended_protect(coeffs, 0.5, 1.0).recovered)
        limit.require(weak > basic, f"x=1e-4 的保真度 {weak:.6g} 不高于 x=1 的 {basic:.6g}")
        limit.require(weak > 0.999, f"x=1e-4 的保真度 {weak:.6g} 不超过 0.999")


class CompletionIndependenceStep(VerificationStep):
    """协议输出与阻尼耦合的幺正补全方式无关"""

    def __init__(self):
        super().__init__("completion", "补全无关性", "两种幺正补全下协议输出一致", seed=51)

    def run(self, rng):
        same = self.tracker("completion independence", EXACT_TOL)
        alternative = DampingCompletion.PHASED
        for coeffs in random_coeffs(rng, 20):
            for p in P_GRID:
                same.compare(damped_density(coeffs, p, alternative).matrix, damped_density(coeffs, p).matrix)
                same.compare(protect(coeffs, p, alternative).recovered.matrix, protect(coeffs, p).recovered.matrix)
                same.compare(extended_protect(coeffs, p, 0.5, alternative).recovered.matrix,
                             extended_protect(coeffs, p, 0.5).recovered.matrix)
                same.compare(protect_followup(coeffs, p, "01", completion=alternative).success_probability,
                             protect_followup(coeffs, p, "01").success_probability)


def create_all_verification_steps() -> List[VerificationStep]:
    """创建所有验证步骤实例"""
    return [
        TensorCoreStep(),
        ChannelStep(),
        MetricStep(),
        NullResultStep(),
        RecoveryBranchStep(),
        SuccessProbabilityStep(),
        RecoveredDensityStep(),
        ConcurrenceStep(),
        EsdPointStep(),
        CrossingThresholdStep(),
        ExtendedSchemeStep(),
        ExtendedConcurrenceStep(),
        FidelityStep(),
        CompletionIndependenceStep(),
    ]


# ---------------------------------------------------------------- 报告

@dataclass
class VerificationReport:
    """验证报告"""
    results: Dict[str, StepResult]
    registry: CheckLine
    total_time_ms: int = 0

    @property
    def checks(self) -> List[CheckLine]:
        return [line for result in self.results.values() for line in result.checks] + [self.registry]

    @property
    def adjudications(self) -> List[Adjudication]:
        return [item for result in self.results.values() for item in result.adjudications]

    @property
    def passed(self) -> bool:
        return (all(line.passed for line in self.checks)
                and all(item.passed for item in self.adjudications)
                and all(result.error_message is None for result in self.results.values()))

    def failed_checks(self) -> List[str]:
        failed = [line.quantity for line in self.checks if not line.passed]
        failed += [f"{item.quantity} (adjudication)" for item in self.adjudications if not item.passed]
        failed += [f"{step_id}: {result.error_message}" for step_id, result in self.results.items()
                   if result.error_message]
        return failed

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'failed_checks': self.failed_checks(),
            'checks': [line.to_dict() for line in self.checks],
            'adjudications': [item.to_dict() for item in self.adjudications],
            'steps': {step_id: result.to_dict() for step_id, result in self.results.items()},
            'total_time_ms': self.total_time_ms,
        }

    def to_text(self) -> str:
        lines = ["ampshield 验证报告", "=" * 72]
        for line in self.checks:
            mark = "PASS" if line.passed else "FAIL"
            text = (f"[{mark}] {line.equation:<15} {line.quantity:<40} max_dev={line.max_deviation:.3e} "
                    f"tol={line.tolerance:.0e} points={line.points}")
            if line.detail:
                text += f"  {line.detail}"
            lines.append(text)

        lines.append("")
        lines.append("字面形式与修正形式裁定:")
        for item in self.adjudications:
            mark = "PASS" if item.passed else "FAIL"
            verdict = ", ".join(item.matching) if item.matching else "none"
            lines.append(f"[{mark}] {item.equation:<15} {item.quantity:<40} matches={verdict} "
                         f"literal_dev={item.literal_deviation:.3e} "
                         f"corrected_dev={item.corrected_deviation:.3e}")

        for step_id, result in self.results.items():
            if result.error_message:
                lines.append(f"[FAIL] {step_id}: {result.error_message}")

        passed = sum(1 for line in self.checks if line.passed)
        lines.append("")
        lines.append(f"结果: {'通过' if self.passed else '失败'} "
                     f"({passed}/{len(self.checks)} 项检查通过, 耗时 {self.total_time_ms} ms)")
        return "\n".join(lines) + "\n"


class VerificationSuite:
    """验证套件: 执行全部步骤并检查闭式登记表的覆盖情况"""

    def __init__(self, steps: Optional[Sequence[VerificationStep]] = None):
        self.steps = list(steps) if steps is not None else create_all_verification_steps()
        self.logger = logging.getLogger("VerificationSuite")

    def covered_forms(self) -> set:
        return {key for step in self.steps for key in step.covers}

    def execute(self) -> VerificationReport:
        self.logger.info(f"开始验证: {len(self.steps)} 个步骤")
        start_time = time.time()
        results = {step.step_id: step.execute() for step in self.steps}

        registry = DeviationTracker("closed-form registry coverage", 0.0)
        reported = {line.quantity for result in results.values() for line in result.checks}
        for key in CLOSED_FORMS:
            registry.require(key in self.covered_forms(), f"未被任何步骤覆盖: {key}")
            registry.require(key in reported, f"报告中缺少检查行: {key}")
            registry.require(bool(cf.equation_label(key)), f"缺少公式标注: {key}")

        report = VerificationReport(results, registry.to_line(), int((time.time() - start_time) * 1000))
        if report.passed:
            self.logger.info("验证通过")
        else:
            self.logger.warning(f"验证失败: {report.failed_checks()}")
        return report
