#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
集成测试
fig / sweep / verify 三个子命令的端到端行为: CSV 输出、确定性、退出码与故障注入
"""

import csv
import io
import json
import os
import re
import shutil
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from unittest.mock import patch

# 添加src路径到sys.path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from cli.commands import cmd_fig, cmd_sweep, cmd_verify, load_sweep_config
from core.closed_forms import CLOSED_FORMS, closed_form_suite
from core.error_handler import ExitCode
from core.sweep_executor import FIGURES, SweepExecutor
from core.verification_steps import (
    ConcurrenceStep, VerificationSuite, create_all_verification_steps
)
from main import build_parser, main


def read_csv(path):
    with open(path, 'r', encoding='utf-8', newline='') as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


class IntegrationTestCase(unittest.TestCase):
    """带临时目录的测试基类"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.out = io.StringIO()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def path(self, *parts):
        return os.path.join(self.temp_dir, *parts)


class TestFigureOutput(IntegrationTestCase):
    """图表数据"""

    def test_figure_shapes(self):
        """测试每张图 101 行且列名与定义一致"""
        print("\n=== 测试图表数据形状 ===")

        code = cmd_fig("all", self.temp_dir, threads=2, stream=self.out)
        self.assertEqual(code, ExitCode.OK)
        for figure_id, spec in FIGURES.items():
            with self.subTest(figure=figure_id):
                header, rows = read_csv(self.path(f"fig{figure_id}.csv"))
                self.assertEqual(tuple(header), spec.columns)
                self.assertEqual(len(rows), 101)
                self.assertEqual(float(rows[0][0]), 0.0)
                self.assertEqual(float(rows[-1][0]), 1.0)
                print(f"✓ {figure_id}: {len(header)} 列 × {len(rows)} 行")

        header, rows = read_csv(self.path("fig2.csv"))
        self.assertEqual(header, ['p', 'P_N1', 'P_N2', 'P_N3', 'q²'])
        self.assertAlmostEqual(float(rows[0][header.index('P_N1')]), 0.25, places=12)
        print("✓ p=0 时首轮成功概率为 1/4, 末列为 q²")

        for figure_id in ("6a", "6b"):
            with self.subTest(figure=figure_id):
                _, rows = read_csv(self.path(f"fig{figure_id}.csv"))
                for value in rows[0][1:]:
                    self.assertAlmostEqual(float(value), 1.0, delta=1e-12)
        print("✓ p=0 时全部保真度列为 1")

    def test_thread_determinism(self):
        """测试单线程与多线程输出逐字节相同"""
        print("\n=== 测试输出确定性 ===")

        for figure_id in ("3a", "6b"):
            with self.subTest(figure=figure_id):
                contents = []
                for threads in (1, 4):
                    out_dir = self.path(f"t{threads}")
                    self.assertEqual(cmd_fig(figure_id, out_dir, threads=threads, stream=self.out),
                                     ExitCode.OK)
                    with open(os.path.join(out_dir, f"fig{figure_id}.csv"), 'rb') as f:
                        contents.append(f.read())
                self.assertEqual(contents[0], contents[1])
                print(f"✓ {figure_id}: threads=1 与 threads=4 一致")

    def test_esd_figure_curves(self):
        """测试突然死亡图: 阻尼曲线在 ESD 点后为零, 恢复曲线不低于阻尼曲线"""
        print("\n=== 测试 ESD 图曲线 ===")

        table = SweepExecutor(1).run_figure("3a")
        for p, damped, recovered in zip(table.column('p'), table.column('C_damped'),
                                        table.column('C_recovered')):
            if 0.86 <= p < 1.0:
                self.assertEqual(damped, 0.0)
            self.assertGreaterEqual(recovered + 1e-12, damped)
        print("✓ 恢复曲线始终不低于阻尼曲线")

    def test_impossible_branch_fidelity(self):
        """测试 p = 1 时恢复与扩展保真度留空, 共生纠缠度记为 0"""
        print("\n=== 测试 p=1 的不可能分支 ===")

        for figure_id in ("3a", "6a", "6b"):
            self.assertEqual(cmd_fig(figure_id, self.temp_dir, threads=2, stream=self.out), ExitCode.OK)
        for figure_id in ("6a", "6b"):
            with self.subTest(figure=figure_id):
                header, rows = read_csv(self.path(f"fig{figure_id}.csv"))
                last = dict(zip(header, rows[-1]))
                self.assertEqual(float(last['p']), 1.0)
                self.assertNotEqual(last['F_damped'], "")
                for column in header[2:]:
                    self.assertEqual(last[column], "", column)
                self.assertNotEqual(dict(zip(header, rows[-2]))['F_recovered'], "")
                print(f"✓ fig{figure_id}: 末行恢复保真度为空")

        header, rows = read_csv(self.path("fig3a.csv"))
        self.assertEqual(float(rows[-1][header.index('C_recovered')]), 0.0)
        print("✓ fig3a: 末行恢复共生纠缠度为 0")


class TestSweepCommand(IntegrationTestCase):
    """扫描命令"""

    def run_sweep(self, **overrides):
        overrides.setdefault('output_path', self.path("sweep.csv"))
        config = load_sweep_config(None, overrides)
        code = cmd_sweep(config, threads=2, stream=self.out)
        self.assertEqual(code, ExitCode.OK)
        header, rows = read_csv(overrides['output_path'])
        return config, header, rows

    def test_ad_protect_bell(self):
        """测试 Bell 态环境方案扫描"""
        print("\n=== 测试 ad-protect 扫描 ===")

        config, header, rows = self.run_sweep(scheme="ad-protect", coeffs="preset:bell", p_grid="0:1:11")
        self.assertEqual(len(rows), 11)
        self.assertAlmostEqual(float(rows[0][header.index('C_recovered_sim')]), 1.0, places=12)

        echoed = json.loads(self.out.getvalue().splitlines()[0])
        self.assertEqual(echoed, config.to_dict())
        print(f"✓ 11 行, p=0 时恢复共生纠缠度为 1, 回显 {echoed['p_grid']}")

        for row in rows[:-1]:
            with self.subTest(p=row[0]):
                self.assertAlmostEqual(float(row[header.index('C_recovered_sim')]),
                                       float(row[header.index('C_recovered_closed')]), delta=1e-10)
                self.assertAlmostEqual(float(row[header.index('P00_sim')]),
                                       float(row[header.index('P00_closed')]), delta=1e-12)
        print("✓ 模拟列与闭式列一致")

    def test_closed_columns_match_suite(self):
        """测试闭式列取自汇总记录, 字面形式与修正形式并列"""
        print("\n=== 测试闭式列 ===")

        config, header, rows = self.run_sweep(scheme="extended", coeffs="preset:crossing",
                                              p_grid="0:1:6", x_values="0.5")
        for row in rows:
            p = float(row[0])
            with self.subTest(scheme="extended", p=p):
                record = closed_form_suite(config.coeffs, p, 0.5)
                self.assertAlmostEqual(float(row[header.index('C_ext_literal')]), record.C_r_ext, places=15)
                self.assertAlmostEqual(float(row[header.index('C_ext_closed')]), record.C_r_ext_corrected, places=15)
                self.assertAlmostEqual(float(row[header.index('F_ext_literal')]), record.F_r_ext, places=15)
                self.assertAlmostEqual(float(row[header.index('F_ext_closed')]), record.F_r_ext_corrected, places=15)
        print("✓ extended: C_ext/F_ext 的两种形式")

        config, header, rows = self.run_sweep(scheme="ad-protect", coeffs="preset:esd", p_grid="0:1:6",
                                              output_path=self.path("ad.csv"))
        for row in rows:
            p = float(row[0])
            with self.subTest(scheme="ad-protect", p=p):
                record = closed_form_suite(config.coeffs, p)
                self.assertAlmostEqual(float(row[header.index('P00_literal')]), record.P_r, places=15)
                self.assertAlmostEqual(float(row[header.index('P00_closed')]), record.P_r_corrected, places=15)
                self.assertAlmostEqual(float(row[header.index('F_recovered_closed')]), record.F_r, places=15)
        print("✓ ad-protect: P00 的两种形式")

        last = dict(zip(header, rows[-1]))
        self.assertEqual(last['F_recovered_sim'], "")
        self.assertEqual(float(last['C_recovered_sim']), 0.0)
        self.assertEqual(float(last['P00_sim']), 0.0)
        print("✓ p=1: F_recovered_sim 为空, 概率与共生纠缠度为 0")

    def test_extended_reduces_to_basic(self):
        """测试 x = 1 时扩展方案与基本方案一致"""
        print("\n=== 测试扩展方案 x=1 ===")

        _, header, rows = self.run_sweep(scheme="extended", coeffs="preset:esd",
                                         p_grid="0:0.9:10", x_values=[1.0])
        for row in rows:
            with self.subTest(p=row[0]):
                self.assertAlmostEqual(float(row[header.index('C_ext_sim')]),
                                       float(row[header.index('C_recovered_sim')]), delta=1e-10)
                self.assertAlmostEqual(float(row[header.index('C_ext_sim')]),
                                       float(row[header.index('C_ext_closed')]), delta=1e-10)
        print("✓ C_ext = C_recovered")

    def test_extended_strength_grid(self):
        """测试多个 x 值展开为 p × x 网格"""
        print("\n=== 测试扩展方案网格 ===")

        _, header, rows = self.run_sweep(scheme="extended", coeffs="0.7,0.35,0.4,0.48",
                                         p_grid="0:0.9:10", x_values="0.8,0.5,0.1")
        self.assertEqual(len(rows), 30)
        self.assertEqual([float(row[header.index('x')]) for row in rows[:3]], [0.8, 0.5, 0.1])
        print("✓ 10 × 3 行, p 为外层循环")

    def test_weak_recovery_three_rounds(self):
        """测试三轮弱测量恢复的成功概率与闭式一致"""
        print("\n=== 测试 weak-recovery N=3 ===")

        _, header, rows = self.run_sweep(scheme="weak-recovery", coeffs="preset:crossing",
                                         p_grid="0:1:11", repeats=3)
        for row in rows:
            with self.subTest(p=row[0]):
                simulated = float(row[header.index('success_sim')])
                self.assertAlmostEqual(simulated, float(row[header.index('success_closed')]), delta=1e-12)
                self.assertLessEqual(simulated, float(row[header.index('q2')]) + 1e-12)
        print("✓ success_sim = success_closed <= q²")

    def test_complex_coefficients(self):
        """测试复系数扫描: 闭式保真度列留空"""
        print("\n=== 测试复系数扫描 ===")

        _, header, rows = self.run_sweep(scheme="ad-protect", coeffs="0.5,0.3i,0.2-0.1i,0.6",
                                         p_grid="0:0.5:3")
        self.assertEqual(rows[0][header.index('F_recovered_closed')], "")
        self.assertNotEqual(rows[0][header.index('F_recovered_sim')], "")
        print("✓ 复系数时 F_*_closed 为空")


class TestExitCodes(IntegrationTestCase):
    """退出码"""

    def test_invalid_config(self):
        """测试无效配置返回 2"""
        print("\n=== 测试无效配置 ===")

        config_path = self.path("bad.json")
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump({"scheme": "ad-protect", "coeffs": "preset:bell", "p_grid": "1:0:5"}, f)

        test_cases = [
            ("p 网格逆序", ["sweep", "--config", config_path]),
            ("未知预设", ["sweep", "--scheme", "ad-protect", "--coeffs", "preset:nope", "--p-grid", "0:1:3"]),
            ("缺少 p_grid", ["sweep", "--scheme", "ad-protect", "--coeffs", "preset:bell"]),
            ("轮数", ["sweep", "--config", config_path, "--p-grid", "0:1:3", "--repeats", "7"]),
            ("日志级别", ["--log-level", "LOUD", "verify"]),
        ]
        for name, argv in test_cases:
            with self.subTest(case=name):
                stderr = io.StringIO()
                with redirect_stdout(io.StringIO()), redirect_stderr(stderr):
                    self.assertEqual(main(argv), ExitCode.INVALID_CONFIG)
                self.assertIn("错误", stderr.getvalue())
                print(f"✓ {name} -> 2")

    def test_unwritable_output(self):
        """测试输出无法写入返回 3"""
        print("\n=== 测试输出失败 ===")

        blocker = self.path("blocker")
        with open(blocker, 'w', encoding='utf-8') as f:
            f.write("not a directory")

        stderr = io.StringIO()
        with redirect_stderr(stderr):
            config = load_sweep_config(None, {'scheme': 'ad-protect', 'coeffs': 'preset:bell',
                                              'p_grid': '0:1:3',
                                              'output_path': os.path.join(blocker, "out.csv")})
            self.assertEqual(cmd_sweep(config, threads=1, stream=self.out), ExitCode.IO_ERROR)
            self.assertEqual(cmd_fig("2", blocker, threads=1, stream=self.out),
                             ExitCode.IO_ERROR)
        print("✓ 输出目录是普通文件 -> 3")

    def test_main_sweep_and_fig(self):
        """测试 main() 的参数解析与分派"""
        print("\n=== 测试 main() ===")

        args = build_parser().parse_args(["sweep", "--scheme", "extended", "--x", "0.5,0.1",
                                          "--repeats", "2", "--p-grid", "0:0.5:6"])
        self.assertEqual((args.command, args.x_values, args.repeats), ("sweep", "0.5,0.1", 2))

        out_path = self.path("main.csv")
        with redirect_stdout(io.StringIO()):
            code = main(["sweep", "--scheme", "ad-protect", "--coeffs", "preset:esd",
                         "--p-grid", "0:0.9:4", "--out", out_path])
            self.assertEqual(code, ExitCode.OK)
            self.assertEqual(main(["fig", "--id", "fidelity-esd", "--out", self.temp_dir]), ExitCode.OK)
        self.assertEqual(len(read_csv(out_path)[1]), 4)
        self.assertTrue(os.path.exists(self.path("fig6a.csv")))
        print("✓ sweep 与 fig 子命令, 别名写出同名图号文件")

    def test_main_figure_ids(self):
        """测试 fig --id 接受每个图号并写出 fig<id>.csv"""
        print("\n=== 测试图号 ===")

        for figure_id in ("2", "3a", "3b", "6a", "6b"):
            with self.subTest(figure=figure_id):
                out_dir = self.path(figure_id)
                with redirect_stdout(io.StringIO()):
                    self.assertEqual(main(["fig", "--id", figure_id, "--out", out_dir]), ExitCode.OK)
                self.assertEqual(os.listdir(out_dir), [f"fig{figure_id}.csv"])
                print(f"✓ --id {figure_id} -> fig{figure_id}.csv")


class TestVerifyCommand(IntegrationTestCase):
    """验证套件"""

    def test_registry_coverage(self):
        """测试全部步骤覆盖闭式登记表"""
        print("\n=== 测试登记表覆盖 ===")

        covered = VerificationSuite().covered_forms()
        self.assertEqual(covered, set(CLOSED_FORMS))
        ids = [step.step_id for step in create_all_verification_steps()]
        self.assertEqual(len(ids), len(set(ids)))
        print(f"✓ {len(covered)} 个闭式均被覆盖, 步骤ID互不相同")

    def test_full_suite_passes(self):
        """测试完整验证套件通过并保存报告"""
        print("\n=== 测试完整验证 ===")

        report_path = self.path("report.json")
        code = cmd_verify(as_json=True, report_path=report_path, stream=self.out)
        self.assertEqual(code, ExitCode.OK, self.out.getvalue())

        with open(report_path, 'r', encoding='utf-8') as f:
            report = json.load(f)
        self.assertTrue(report['passed'])
        self.assertEqual(report['failed_checks'], [])
        quantities = {line['quantity'] for line in report['checks']}
        self.assertTrue(set(CLOSED_FORMS) <= quantities)
        for item in report['adjudications']:
            with self.subTest(quantity=item['quantity']):
                self.assertEqual(item['matching'], ['corrected'])
                print(f"✓ {item['equation']} {item['quantity']}: 修正形式一致")
        self.assertIn('branch_log', report)

    def test_report_equations(self):
        """测试报告逐条标注被检查的公式编号"""
        print("\n=== 测试报告公式编号 ===")

        self.assertEqual(cmd_verify(as_json=True, stream=self.out), ExitCode.OK)
        report = json.loads(self.out.getvalue())

        listed = set()
        for line in report['checks']:
            listed.update(int(number) for number in re.findall(r"\((\d+)\)", line['equation']))
        required = {12, 13, 14, 15, 18, 19, 20, 22, 23, 24, 30, 31, 32, 33, 34}
        self.assertTrue(required <= listed, sorted(required - listed))
        print(f"✓ 报告覆盖 {len(required)} 个必需公式")

        adjudicated = {item['equation']: item['matching'] for item in report['adjudications']}
        for equation in ("Eq. (20)", "Eq. (24)"):
            with self.subTest(equation=equation):
                self.assertEqual(adjudicated[equation], ['corrected'])
                print(f"✓ {equation} 裁定为修正形式")

        text_out = io.StringIO()
        cmd_verify(stream=text_out)
        self.assertRegex(text_out.getvalue(), r"\[PASS\] Eq\. \(20\)\s+extended concurrence")
        self.assertRegex(text_out.getvalue(), r"\[PASS\] Eq\. \(24\)\s+extended fidelity\s+matches=corrected")

    def test_text_report(self):
        """测试文本报告格式"""
        print("\n=== 测试文本报告 ===")

        code = cmd_verify(suite=VerificationSuite(create_all_verification_steps()[:3]), stream=self.out)
        text = self.out.getvalue()
        self.assertRegex(text, r"\[PASS\] \s+unitary norm preservation")
        self.assertIn("[FAIL] closed-form registry coverage", text)
        self.assertIn("结果: 失败", text)
        self.assertEqual(code, ExitCode.VERIFICATION_FAILED)
        print("✓ 部分套件缺少登记覆盖时失败")

    def test_fault_injection(self):
        """测试去掉共生纠缠度截断后验证失败"""
        print("\n=== 测试故障注入 ===")

        clean = ConcurrenceStep().execute()
        self.assertTrue(all(line.passed for line in clean.checks))

        with patch('core.metrics._clamp_unit', lambda v: v):
            faulty = ConcurrenceStep().execute()
            failed = {line.quantity for line in faulty.checks if not line.passed}
            self.assertIn('damped concurrence', failed)

            stderr = io.StringIO()
            with redirect_stderr(stderr):
                code = cmd_verify(suite=VerificationSuite([ConcurrenceStep()]), stream=self.out)
        self.assertEqual(code, ExitCode.VERIFICATION_FAILED)
        self.assertIn("damped concurrence", stderr.getvalue())
        print("✓ 'damped concurrence' 失败, 退出码 1")


def run_all_tests():
    """运行所有测试"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()

    suite.addTests(loader.loadTestsFromTestCase(TestFigureOutput))
    suite.addTests(loader.loadTestsFromTestCase(TestSweepCommand))
    suite.addTests(loader.loadTestsFromTestCase(TestExitCodes))
    suite.addTests(loader.loadTestsFromTestCase(TestVerifyCommand))

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
