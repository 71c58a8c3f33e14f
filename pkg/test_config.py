#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置层单元测试
参数计算器、系数预设、扫描配置解析、线程数、错误处理与运行日志
"""

import json
import logging
import math
import os
import shutil
import sys
import tempfile
import unittest

import numpy as np

# 添加src路径到sys.path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from core.config_manager import THREADS_ENV, BenchSettings, ConfigManager, PGrid
from core.error_handler import (
    ConfigError, ErrorHandler, ExitCode, ImpossibleBranchError, InvalidParameterError,
    OutputError, VerificationFailure
)
from core.channels import DampingParams
from core.logger import BranchLogEntry, BranchLogger, configure_logging
from core.parameter_calculator import ParameterCalculator, ParameterType, ValidationResult
from core.parameter_presets import CoefficientPresets


class TestParameterCalculator(unittest.TestCase):
    """参数计算器"""

    def setUp(self):
        self.calculator = ParameterCalculator()

    def test_validation(self):
        """测试参数范围验证"""
        print("\n=== 测试参数验证 ===")

        test_cases = [
            (ParameterType.DAMPING, 0.0, ValidationResult.VALID),
            (ParameterType.DAMPING, 1.0, ValidationResult.VALID),
            (ParameterType.DAMPING, 1.01, ValidationResult.OUT_OF_RANGE),
            (ParameterType.DAMPING, float('nan'), ValidationResult.NOT_FINITE),
            (ParameterType.DAMPING, "0.5", ValidationResult.INVALID_FORMAT),
            (ParameterType.STRENGTH, 0.0, ValidationResult.OUT_OF_RANGE),
            (ParameterType.STRENGTH, 1e-4, ValidationResult.VALID),
            (ParameterType.STRENGTH, float('inf'), ValidationResult.NOT_FINITE),
            (ParameterType.ROUNDS, 4, ValidationResult.VALID),
            (ParameterType.ROUNDS, 5, ValidationResult.OUT_OF_RANGE),
            (ParameterType.ROUNDS, 2.0, ValidationResult.INVALID_FORMAT),
            (ParameterType.ROUNDS, True, ValidationResult.INVALID_FORMAT),
            (ParameterType.GRID_STEPS, 1, ValidationResult.OUT_OF_RANGE),
            (ParameterType.THREADS, 0, ValidationResult.VALID),
            (ParameterType.THREADS, -1, ValidationResult.OUT_OF_RANGE),
        ]
        for param_type, value, expected in test_cases:
            with self.subTest(param=param_type.value, value=value):
                self.assertEqual(self.calculator.validate(param_type, value), expected)
                print(f"✓ {param_type.value}={value!r} -> {expected.value}")

        self.assertEqual(self.calculator.require(ParameterType.DAMPING, 0.3), 0.3)
        with self.assertRaises(InvalidParameterError):
            self.calculator.require(ParameterType.ROUNDS, 0)

    def test_decay_conversion(self):
        """测试衰减率换算"""
        print("\n=== 测试衰减率换算 ===")

        p = self.calculator.damping_from_decay(0.25, 1.0)
        self.assertAlmostEqual(math.sqrt(1 - p), math.exp(-0.25), places=15)
        self.assertAlmostEqual(self.calculator.decay_rate(p, 1.0), 0.25, places=12)
        self.assertEqual(self.calculator.decay_rate(1.0, 1.0), math.inf)
        with self.assertRaises(InvalidParameterError):
            self.calculator.decay_rate(0.5, 0.0)
        with self.assertRaises(InvalidParameterError):
            self.calculator.decay_rate(1.5, 1.0)
        print(f"✓ Γ=0.25, t=1 -> p={p:.6f}")

        for gamma, t in ((0.1, 3.0), (2.0, 0.5), (0.0, 1.0)):
            with self.subTest(gamma=gamma, t=t):
                params = DampingParams.from_decay(gamma, t)
                self.assertEqual(self.calculator.damping_from_decay(gamma, t), params.p)
                self.assertEqual(self.calculator.decay_rate(params.p, t), params.decay_rate(t))
        print("✓ 计算器与 DampingParams 的换算一致")

    def test_plate_angles(self):
        """测试波片角度换算: tanθ_r = 1/√q"""
        print("\n=== 测试波片角度 ===")

        for p in (0.0, 0.3, 0.8, 1.0):
            with self.subTest(p=p):
                theta_d = self.calculator.plate_angle_from_damping(p)
                self.assertAlmostEqual(self.calculator.damping_from_plate_angle(theta_d), p, places=14)
                theta_r = self.calculator.recovery_plate_angle(theta_d)
                self.assertAlmostEqual(theta_r, math.atan2(1.0, math.sqrt(1 - p)), places=12)
                print(f"✓ p={p}: θ_d={theta_d:.4f}, θ_r={theta_r:.4f}")

        info = self.calculator.get_parameter_info()
        self.assertEqual(info['rounds']['range'], "[1, 4]")


class TestCoefficientPresets(unittest.TestCase):
    """系数预设"""

    def setUp(self):
        self.presets = CoefficientPresets()

    def test_builtin_presets(self):
        """测试内置预设"""
        print("\n=== 测试内置预设 ===")

        ids = sorted(self.presets.presets)
        self.assertEqual(ids, ["bell", "crossing", "esd", "product"])
        for reference in ("esd", "preset:esd", " preset: crossing "):
            with self.subTest(reference=reference):
                coeffs = self.presets.resolve(reference)
                self.assertAlmostEqual(float(np.linalg.norm(coeffs.as_array())), 1.0, places=15)
                print(f"✓ {reference!r}")

        with self.assertRaises(ConfigError) as context:
            self.presets.resolve("preset:nope", "coeffs")
        self.assertEqual(context.exception.field_name, "coeffs")
        print("✓ 未知预设指明字段")


class TestConfigManager(unittest.TestCase):
    """扫描配置"""

    def setUp(self):
        self.manager = ConfigManager()
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def _write(self, data, name="config.json"):
        path = os.path.join(self.temp_dir, name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(data if isinstance(data, str) else json.dumps(data))
        return path

    def test_complex_parsing(self):
        """测试复数格式"""
        print("\n=== 测试复数解析 ===")

        test_cases = [
            (0.5, 0.5),
            ([0.3, -0.2], 0.3 - 0.2j),
            ("0.5-0.2i", 0.5 - 0.2j),
            ("0.3i", 0.3j),
            ("1", 1.0),
            ("-i", -1j),
        ]
        for value, expected in test_cases:
            with self.subTest(value=value):
                self.assertEqual(self.manager.parse_complex(value), expected)
                print(f"✓ {value!r} -> {expected}")

        for value in ("0.5j", "(1+2i)", "abc", "", "nan", [1, 2, 3], None, True):
            with self.subTest(invalid=value):
                with self.assertRaises(ConfigError):
                    self.manager.parse_complex(value)
        print("✓ 无效格式被拒绝")

    def test_coeffs_forms(self):
        """测试系数的几种写法"""
        print("\n=== 测试系数写法 ===")

        from_string = self.manager.parse_coeffs("0.7,0.35,0.4,0.48")
        from_list = self.manager.parse_coeffs([0.7, 0.35, 0.4, 0.48])
        from_preset = self.manager.parse_coeffs("preset:esd")
        np.testing.assert_allclose(from_string.as_array(), from_preset.as_array())
        np.testing.assert_allclose(from_list.as_array(), from_preset.as_array())
        print("✓ 字符串、列表、预设一致")

        for value in ("1,0,0", [0, 0, 0, 0], "preset:unknown"):
            with self.subTest(value=value):
                with self.assertRaises(ConfigError) as context:
                    self.manager.parse_coeffs(value)
                self.assertEqual(context.exception.field_name, "coeffs")
        print("✓ 错误指明 coeffs 字段")

    def test_p_grid(self):
        """测试 p 网格"""
        print("\n=== 测试 p 网格 ===")

        for value in ("0:1:11", [0, 1, 11], {"start": 0, "stop": 1, "steps": 11}):
            with self.subTest(value=value):
                grid = self.manager.parse_p_grid(value)
                self.assertEqual(grid, PGrid(0.0, 1.0, 11))
                np.testing.assert_allclose(grid.values(), np.linspace(0, 1, 11))
        print("✓ 三种写法")

        for value in ("0.5:0.5:3", "0:1:1", "0:1.2:5", "-0.1:1:5", "0:1", "a:b:c"):
            with self.subTest(invalid=value):
                with self.assertRaises(ConfigError):
                    self.manager.parse_p_grid(value)
        print("✓ start < stop、steps >= 2、范围 [0, 1] 检查")

    def test_load_from_file(self):
        """测试从JSON文件加载"""
        print("\n=== 测试配置文件 ===")

        path = self._write({
            "scheme": "extended",
            "coeffs": ["0.7", [0.35, 0], 0.4, "0.48"],
            "p_grid": "0:0.9:10",
            "x_values": [0.8, 0.5, 0.1],
            "repeats": 2,
            "output_path": "out.csv",
        })
        config = self.manager.load_sweep_config(path)
        self.assertEqual(config.scheme, "extended")
        self.assertEqual(config.x_values, (0.8, 0.5, 0.1))
        self.assertEqual(config.repeats, 2)
        self.assertAlmostEqual(float(np.linalg.norm(config.coeffs.as_array())), 1.0, places=15)
        print(f"✓ {config.to_dict()['p_grid']}, 回显系数已归一化")

        overridden = self.manager.load_sweep_config(path, {'scheme': 'ad-protect', 'repeats': None})
        self.assertEqual(overridden.scheme, "ad-protect")
        self.assertEqual(overridden.repeats, 2)
        print("✓ 命令行参数覆盖文件")

    def test_config_errors(self):
        """测试配置错误指明字段"""
        print("\n=== 测试配置错误 ===")

        base = {"scheme": "ad-protect", "coeffs": "preset:bell", "p_grid": "0:1:11"}
        error_cases = [
            ("未知键", dict(base, colour="red"), "colour"),
            ("缺少键", {k: v for k, v in base.items() if k != "p_grid"}, "p_grid"),
            ("方案", dict(base, scheme="magic"), "scheme"),
            ("轮数", dict(base, repeats=9), "repeats"),
            ("强度", dict(base, x_values=[0.5, -1]), "x_values"),
            ("输出路径", dict(base, output_path=""), "output_path"),
        ]
        for name, data, field_name in error_cases:
            with self.subTest(case=name):
                with self.assertRaises(ConfigError) as context:
                    self.manager.build_sweep_config(data)
                self.assertEqual(context.exception.field_name, field_name)
                print(f"✓ {name} -> {field_name}")

        with self.assertRaises(ConfigError):
            self.manager.load_sweep_config(self._write("{not json", "broken.json"))
        with self.assertRaises(ConfigError):
            self.manager.load_sweep_config(self._write("[1, 2]", "list.json"))
        with self.assertRaises(OutputError):
            self.manager.load_sweep_config(os.path.join(self.temp_dir, "missing.json"))
        print("✓ JSON 错误与缺失文件")

    def test_thread_count(self):
        """测试线程数解析"""
        print("\n=== 测试线程数 ===")

        self.assertEqual(self.manager.resolve_thread_count({THREADS_ENV: "3"}), 3)
        self.assertEqual(self.manager.resolve_thread_count({THREADS_ENV: "0"}), os.cpu_count() or 1)
        self.assertEqual(ConfigManager(BenchSettings(threads=2)).resolve_thread_count({}), 2)
        for raw in ("-1", "two", "1.5"):
            with self.subTest(raw=raw):
                with self.assertRaises(ConfigError) as context:
                    self.manager.resolve_thread_count({THREADS_ENV: raw})
                self.assertEqual(context.exception.field_name, THREADS_ENV)
        print("✓ 环境变量优先, 0 为自动, 非法值被拒绝")


class TestErrorHandlingAndLogging(unittest.TestCase):
    """错误处理与运行日志"""

    def test_exit_codes(self):
        """测试异常到退出码的映射"""
        print("\n=== 测试退出码 ===")

        handler = ErrorHandler()
        test_cases = [
            (ConfigError("p_grid", "bad"), ExitCode.INVALID_CONFIG),
            (InvalidParameterError("bad p"), ExitCode.INVALID_CONFIG),
            (OutputError("disk full"), ExitCode.IO_ERROR),
            (PermissionError("denied"), ExitCode.IO_ERROR),
            (VerificationFailure(["damped concurrence"]), ExitCode.VERIFICATION_FAILED),
            (ImpossibleBranchError("p=1"), ExitCode.INVALID_CONFIG),
            (RuntimeError("boom"), ExitCode.INTERNAL_ERROR),
            (KeyError("column"), ExitCode.INTERNAL_ERROR),
        ]
        for error, expected in test_cases:
            with self.subTest(error=type(error).__name__):
                info = handler.handle_error(error)
                self.assertEqual(info.exit_code, expected)
                self.assertIn(str(error), info.message)
                print(f"✓ {type(error).__name__} -> {info.error_id} ({expected})")

        self.assertEqual(len(handler.error_history), len(test_cases))

        codes = [ExitCode.OK, ExitCode.VERIFICATION_FAILED, ExitCode.INVALID_CONFIG,
                 ExitCode.IO_ERROR, ExitCode.INTERNAL_ERROR]
        self.assertEqual(len(set(codes)), len(codes))
        print("✓ 内部错误的退出码与验证失败不同")

    def test_branch_logger(self):
        """测试有界的分支日志"""
        print("\n=== 测试分支日志 ===")

        branch_log = BranchLogger("TestBranchTree", max_entries=3)
        for i in range(5):
            branch_log.log_branch(BranchLogEntry(i, f"0{i % 2}", f"0{i % 2}", 0.5, 0.25, i % 2 == 0))
        exported = branch_log.export_branches()
        self.assertEqual([entry['round'] for entry in exported], [2, 3, 4])
        self.assertEqual(branch_log.export_branches(1)[0]['success'], True)
        self.assertIn("[OK]", BranchLogEntry(1, "", "00", 0.5, 0.5, True).to_display_string())

        branch_log.clear()
        self.assertEqual(branch_log.export_branches(), [])
        print("✓ 保留最近3条, 可清空")

    def test_configure_logging(self):
        """测试日志级别配置"""
        print("\n=== 测试日志级别 ===")

        configure_logging("debug")
        self.assertEqual(logging.getLogger().level, logging.DEBUG)
        configure_logging("WARNING")
        self.assertEqual(logging.getLogger().level, logging.WARNING)
        with self.assertRaises(ValueError):
            configure_logging("LOUD")
        print("✓ 级别名不区分大小写, 未知级别被拒绝")


def run_all_tests():
    """运行所有测试"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestParameterCalculator))
    suite.addTests(loader.loadTestsFromTestCase(TestCoefficientPresets))
    suite.addTests(loader.loadTestsFromTestCase(TestConfigManager))
    suite.addTests(loader.loadTestsFromTestCase(TestErrorHandlingAndLogging))

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
