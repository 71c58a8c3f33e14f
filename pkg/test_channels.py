#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
门集合与噪声过程单元测试
验证Hadamard门、CNOT、阻尼耦合、弱测量零结果与测量分支
"""

import math
import unittest
import sys
import os

import numpy as np

# 添加src路径到sys.path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from core.channels import (
    DampingCompletion, DampingParams, cnot, damping_couple, hadamard_theta,
    measure_branches, postselect, weak_null, weak_null_operator
)
from core.error_handler import (
    DimensionMismatchError, ImpossibleBranchError, InvalidParameterError, InvalidStateError
)
from core.tensor_core import EXACT_TOL, QubitRole, StateVector, append_qubits, apply_unitary

INV_SQRT2 = 1.0 / math.sqrt(2.0)


class TestGates(unittest.TestCase):
    """门"""

    def test_hadamard_theta(self):
        """测试带角度的Hadamard门"""
        print("\n=== 测试 H_θ ===")

        test_cases = [0.0, math.pi / 4, math.pi / 3, math.pi / 2]
        for theta in test_cases:
            with self.subTest(theta=theta):
                out = apply_unitary(StateVector.basis("0"), hadamard_theta(theta), [0])
                np.testing.assert_allclose(out.amplitudes, [math.cos(theta), math.sin(theta)], atol=1e-15)
                print(f"✓ H({theta:.4f})|0> = (cos, sin)")

        with self.assertRaises(InvalidParameterError):
            hadamard_theta(float('nan'))
        print("✓ 非有限角度被拒绝")

    def test_cnot(self):
        """测试CNOT真值表"""
        print("\n=== 测试 CNOT ===")

        truth_table = [("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")]
        for source, expected in truth_table:
            with self.subTest(source=source):
                out = apply_unitary(StateVector.basis(source), cnot(), [0, 1])
                np.testing.assert_allclose(out.amplitudes, StateVector.basis(expected).amplitudes)
                print(f"✓ |{source}> -> |{expected}>")

        out = apply_unitary(StateVector.basis("01"), cnot(), [1, 0])
        np.testing.assert_allclose(out.amplitudes, StateVector.basis("11").amplitudes)
        print("✓ 控制比特为第一个目标索引")


class TestDamping(unittest.TestCase):
    """振幅阻尼"""

    def test_damping_params(self):
        """测试阻尼参数范围与衰减率换算"""
        print("\n=== 测试阻尼参数 ===")

        for p in (-0.1, 1.1, float('nan')):
            with self.subTest(p=p):
                with self.assertRaises(InvalidParameterError):
                    DampingParams(p)
        print("✓ 超范围的 p 被拒绝")

        params = DampingParams.from_decay(0.3, 2.0)
        self.assertAlmostEqual(params.sqrt_q, math.exp(-0.6), places=14)
        self.assertAlmostEqual(params.decay_rate(2.0), 0.3, places=12)
        self.assertEqual(DampingParams(1.0).decay_rate(1.0), math.inf)
        print(f"✓ Γ=0.3, t=2 -> p={params.p:.6f}")

    def test_coupling_unitarity(self):
        """测试阻尼耦合在 p ∈ [0, 1] 上幺正"""
        print("\n=== 测试阻尼耦合幺正性 ===")

        for k in range(11):
            p = k / 10
            for completion in DampingCompletion:
                with self.subTest(p=p, completion=completion.value):
                    u = damping_couple(p, completion).matrix
                    deviation = np.max(np.abs(u.conj().T @ u - np.eye(4)))
                    self.assertLessEqual(deviation, EXACT_TOL)
        print("✓ 11 个 p 值 × 2 种补全")

        np.testing.assert_allclose(damping_couple(0.0).matrix, np.eye(4))
        print("✓ p=0 为恒等")

    def test_coupling_action(self):
        """测试 |1>|0> 的演化"""
        print("\n=== 测试阻尼耦合作用 ===")

        p = 0.36
        out = apply_unitary(StateVector.basis("10"), damping_couple(p), [0, 1])
        expected = np.array([0.0, math.sqrt(p), math.sqrt(1 - p), 0.0])
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-15)

        out = apply_unitary(StateVector.basis("00"), damping_couple(p), [0, 1])
        np.testing.assert_allclose(out.amplitudes, StateVector.basis("00").amplitudes)
        print("✓ |10> -> √q|10> + √p|01>, |00> 不变")

    def test_weak_null_composition(self):
        """测试耦合后环境为0的后选择等于弱测量零结果"""
        print("\n=== 测试零结果组合关系 ===")

        rng = np.random.default_rng(5)
        for p in (0.0, 0.25, 0.7, 1.0):
            with self.subTest(p=p):
                values = rng.normal(size=2) + 1j * rng.normal(size=2)
                single = StateVector(values / np.linalg.norm(values), normalized=True)
                coupled = apply_unitary(append_qubits(single, [QubitRole.ENVIRONMENT]),
                                        damping_couple(p), [0, 1])
                env_probability, env_state = postselect(coupled, [1], "0")
                null_probability, null_state = weak_null(single, p, 0)
                self.assertAlmostEqual(env_probability, null_probability, delta=EXACT_TOL)
                np.testing.assert_allclose(env_state.amplitudes, null_state.amplitudes, atol=EXACT_TOL)
                print(f"✓ p={p}: 概率 {null_probability:.6f}")

    def test_weak_null_impossible(self):
        """测试 p=1 时 |1> 的零结果不可能发生"""
        print("\n=== 测试不可能的零结果 ===")

        with self.assertRaises(ImpossibleBranchError):
            weak_null(StateVector.basis("1"), 1.0, 0)
        np.testing.assert_allclose(weak_null_operator(0.75).matrix, np.diag([1.0, 0.5]))
        print("✓ ImpossibleBranchError")


class TestMeasurement(unittest.TestCase):
    """测量分支"""

    def setUp(self):
        self.bell = StateVector(np.array([INV_SQRT2, 0, 0, INV_SQRT2]), normalized=True)

    def test_bell_branches(self):
        """测试Bell态单比特测量"""
        print("\n=== 测试Bell态测量 ===")

        branches = measure_branches(self.bell, [0])
        self.assertEqual([b.outcome for b in branches], ["0", "1"])
        for branch, expected in zip(branches, ("0", "1")):
            with self.subTest(outcome=branch.outcome):
                self.assertAlmostEqual(branch.probability, 0.5)
                np.testing.assert_allclose(branch.post_state.amplitudes,
                                           StateVector.basis(expected).amplitudes, atol=1e-15)
                print(f"✓ 结果 {branch.outcome}: 概率 0.5, 剩余 |{expected}>")

    def test_zero_branches_skipped(self):
        """测试零概率分支不出现"""
        print("\n=== 测试零概率分支 ===")

        branches = measure_branches(self.bell, [0, 1])
        self.assertEqual([b.outcome for b in branches], ["00", "11"])
        self.assertAlmostEqual(sum(b.probability for b in branches), 1.0, delta=EXACT_TOL)
        print("✓ 只有 00 与 11")

    def test_postselect_errors(self):
        """测试后选择的参数检查"""
        print("\n=== 测试后选择错误 ===")

        with self.assertRaises(ImpossibleBranchError):
            postselect(self.bell, [0, 1], "01")
        with self.assertRaises(DimensionMismatchError):
            postselect(self.bell, [0], "01")
        with self.assertRaises(InvalidParameterError):
            postselect(self.bell, [0], "x")
        with self.assertRaises(InvalidStateError):
            measure_branches(StateVector(np.array([1.0, 1.0])), [0])
        print("✓ 不可能结果、长度不符、非比特串、未归一化均被拒绝")


def run_all_tests():
    """运行所有测试"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestGates))
    suite.addTests(loader.loadTestsFromTestCase(TestDamping))
    suite.addTests(loader.loadTestsFromTestCase(TestMeasurement))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    print("\n" + "=" * 60)
    print("测试总结:")
    print(f"总测试数: {result.testsRun}")
    print(f"成功: {result.testsRun - len(result.failures) - len(result.errors)}")
    print(f"失败: {len(result.failures)}")
    print(f"错误: {len(result.errors)}")

    success_rate = (result.testsRun - len(result.failures) - len(result.errors)) / result.testsRun * 100
    print(f"\n成功率: {success_rate:.1f}%")
    return result.wasSuccessful()


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
