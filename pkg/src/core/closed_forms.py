#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
解析公式
所有闭式结果: 零结果态与概率、分支概率、成功概率、恢复密度矩阵、
共生纠缠度、保真度、交叉阈值、纠缠突然死亡点

扩展方案的共生纠缠度/保真度以及环境方案 00 结果概率同时提供
"literal" 与修正形式, 由验证套件对照模拟裁定
"""

import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .error_handler import InvalidParameterError
from .protocols import MAX_ROUNDS, CoeffsLike, as_coeffs


def _moduli(coeffs: CoeffsLike):
    """返回 (|α|², |β|², |γ|², |δ|²)"""
    return tuple(float(v) for v in np.abs(as_coeffs(coeffs).as_array()) ** 2)


def _real_parts(coeffs: CoeffsLike):
    """仅接受实系数的公式使用"""
    c = as_coeffs(coeffs)
    if not c.is_real():
        raise InvalidParameterError("该闭式公式仅适用于实系数")
    return tuple(float(v) for v in c.as_array().real)


def _determinant(coeffs: CoeffsLike) -> float:
    c = as_coeffs(coeffs)
    return abs(c.alpha * c.delta - c.beta * c.gamma)


# ---------------------------------------------------------------- 弱测量方案

def null_probability(coeffs: CoeffsLike, p: float) -> float:
    """零结果概率 N_d² = |α|² + q(|β|²+|γ|²) + q²|δ|²"""
    a2, b2, g2, d2 = _moduli(coeffs)
    q = 1.0 - p
    return a2 + q * (b2 + g2) + q * q * d2


def null_damped_amplitudes(coeffs: CoeffsLike, p: float) -> np.ndarray:
    """零结果后的态 (α, β√q, γ√q, δq)/N_d"""
    c = as_coeffs(coeffs)
    sq = math.sqrt(1.0 - p)
    amplitudes = np.array([c.alpha, c.beta * sq, c.gamma * sq, c.delta * sq * sq])
    return amplitudes / math.sqrt(null_probability(c, p))


def branch_weight(outcome: str, x: float) -> float:
    """强度 x 的全恢复轮各结果的权重 (略去分支态的归一化因子)"""
    weights = {
        "00": x * x,
        "01": x,
        "10": x,
        "11": 1.0,
    }
    return weights[outcome] / (1.0 + x) ** 2


def recovery_branch_probabilities(coeffs: CoeffsLike, p: float) -> Dict[str, float]:
    """零结果后首轮恢复各结果的条件概率

    等于权重乘以该分支态的范数平方再除以 N_d²
    """
    a2, b2, g2, d2 = _moduli(coeffs)
    q = 1.0 - p
    nd2 = null_probability(coeffs, p)
    branch_norms = {
        "00": a2 + b2 + g2 + d2,
        "01": a2 + q * q * b2 + g2 + q * q * d2,
        "10": a2 + b2 + q * q * g2 + q * q * d2,
        "11": a2 + q * q * (b2 + g2) + q ** 4 * d2,
    }
    return {outcome: branch_weight(outcome, q) * norm / nd2
            for outcome, norm in branch_norms.items()}


def followup_success(y: float) -> float:
    """单比特后续轮成功概率 y/(1+y), 首次后续轮 y = q²"""
    return y / (1.0 + y)


def followup_failure(y: float) -> float:
    """单比特后续轮失败概率 1/(1+y)"""
    return 1.0 / (1.0 + y)


def success_prob_closed(rounds: int, q: float) -> float:
    """一到三轮恢复的总成功概率 (含零结果概率)"""
    if rounds not in (1, 2, 3):
        raise InvalidParameterError(f"闭式成功概率只给出 N = 1..3: {rounds}")
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"q 必须在 [0, 1] 内: {q}")

    q2, q4 = q * q, q ** 4
    w00, w01, w11 = branch_weight("00", q), branch_weight("01", q), branch_weight("11", q)

    total = w00
    if rounds >= 2:
        total += 2 * w01 * followup_success(q2) + w11 * branch_weight("00", q2)
    if rounds >= 3:
        total += (2 * w01 * followup_failure(q2) * followup_success(q4)
                  + 2 * w11 * branch_weight("01", q2) * followup_success(q4)
                  + w11 * branch_weight("11", q2) * branch_weight("00", q4))
    return total


def _single_chain(y: float, rounds: int) -> float:
    if rounds == 0:
        return 0.0
    return followup_success(y) + followup_failure(y) * _single_chain(y * y, rounds - 1)


def _full_tree(x: float, rounds: int) -> float:
    if rounds == 0:
        return 0.0
    return (branch_weight("00", x)
            + 2 * branch_weight("01", x) * _single_chain(x * x, rounds - 1)
            + branch_weight("11", x) * _full_tree(x * x, rounds - 1))


def success_prob_tree(rounds: int, q: float) -> float:
    """按分支树递推的总成功概率, N = 1..4"""
    if not 1 <= rounds <= MAX_ROUNDS:
        raise InvalidParameterError(f"轮数必须在 1..{MAX_ROUNDS} 内: {rounds}")
    return _full_tree(q, rounds)


def double_weak_bound(q: float) -> float:
    """双弱测量方案的成功概率 q², 为迭代恢复的上界"""
    return q * q


# ---------------------------------------------------------------- 环境方案

def recovered_normalizer(coeffs: CoeffsLike, p: float) -> float:
    """N2 = 1 + p(|β|²+|γ|²+2|δ|²) + p²|δ|²"""
    _, b2, g2, d2 = _moduli(coeffs)
    return 1.0 + p * (b2 + g2 + 2 * d2) + p * p * d2


def recovered_density(coeffs: CoeffsLike, p: float) -> np.ndarray:
    """恢复结果 00 后迹掉环境的系统密度矩阵"""
    c = as_coeffs(coeffs)
    a, b, g, d = c.alpha, c.beta, c.gamma, c.delta
    a2, b2, g2, d2 = _moduli(c)
    conj = np.conj
    rho = np.array([
        [a2 + p * b2 + p * g2 + p * p * d2, a * conj(b) + p * g * conj(d), a * conj(g) + p * b * conj(d), a * conj(d)],
        [conj(a) * b + p * conj(g) * d, b2 + p * d2, b * conj(g), b * conj(d)],
        [conj(a) * g + p * conj(b) * d, conj(b) * g, g2 + p * d2, g * conj(d)],
        [conj(a) * d, conj(b) * d, conj(g) * d, d2],
    ], dtype=complex)
    return rho / recovered_normalizer(c, p)


def recovered_probability_literal(coeffs: CoeffsLike, p: float) -> float:
    """00 结果概率的字面形式 [q / (N2 (1+q))]²"""
    q = 1.0 - p
    return (q / (recovered_normalizer(coeffs, p) * (1.0 + q))) ** 2


def recovered_probability(coeffs: CoeffsLike, p: float) -> float:
    """00 结果概率 q² N2 / (1+q)²"""
    q = 1.0 - p
    return q * q * recovered_normalizer(coeffs, p) / (1.0 + q) ** 2


def damped_concurrence(coeffs: CoeffsLike, p: float) -> float:
    """阻尼后共生纠缠度 max{0, 2q(|αδ-βγ| - p|δ|²)}"""
    d2 = _moduli(coeffs)[3]
    return max(0.0, 2.0 * (1.0 - p) * (_determinant(coeffs) - p * d2))


def recovered_concurrence(coeffs: CoeffsLike, p: float) -> float:
    """恢复后共生纠缠度"""
    a2, _, _, d2 = _moduli(coeffs)
    denominator = 1.0 + p * (1.0 + d2 - a2) + p * p * d2
    return max(0.0, 2.0 * (_determinant(coeffs) - p * d2) / denominator)


def esd_point(coeffs: CoeffsLike) -> Optional[float]:
    """纠缠突然死亡点 |αδ-βγ|/|δ|²; |αδ-βγ| >= |δ|² 时不存在"""
    d2 = _moduli(coeffs)[3]
    determinant = _determinant(coeffs)
    if d2 == 0.0 or determinant >= d2:
        return None
    return determinant / d2


def crossing_threshold(coeffs: CoeffsLike) -> Optional[float]:
    """恢复曲线超过阻尼曲线的阈值 p; 仅当 |α| < |δ| 时存在

    即 |δ|² p² + (1-|α|²) p - (|δ|²-|α|²) = 0 的正根
    """
    a2, _, _, d2 = _moduli(coeffs)
    if a2 >= d2:
        return None
    return (math.sqrt((1 - a2 + 2 * d2) ** 2 - 4 * d2) - (1 - a2)) / (2 * d2)


def damped_fidelity(coeffs: CoeffsLike, p: float) -> float:
    """阻尼后保真度 (实系数)"""
    a, b, g, d = _real_parts(coeffs)
    q = 1.0 - p
    sq = math.sqrt(q)
    return ((a * a + sq * b * b + sq * g * g + q * d * d) ** 2
            + 4 * p * sq * a * b * g * d
            + p * (a * a + q * d * d) * (b * b + g * g)
            + p * p * a * a * d * d)


def damped_fidelity_general(coeffs: CoeffsLike, p: float) -> float:
    """阻尼后保真度, 复系数形式"""
    c = as_coeffs(coeffs)
    a, b, g, d = c.as_array()
    a2, b2, g2, d2 = _moduli(c)
    q = 1.0 - p
    sq = math.sqrt(q)
    return ((a2 + sq * (b2 + g2) + q * d2) ** 2
            + p * abs(np.conj(a) * b + sq * np.conj(g) * d) ** 2
            + p * abs(np.conj(a) * g + sq * np.conj(b) * d) ** 2
            + p * p * a2 * d2)


def recovered_fidelity(coeffs: CoeffsLike, p: float) -> float:
    """恢复后保真度 (实系数)"""
    a, b, g, d = _real_parts(coeffs)
    numerator = (1 + 4 * p * a * b * g * d + p * (a * a + d * d) * (b * b + g * g)
                 + p * p * a * a * d * d)
    denominator = 1 + p * (1 - a * a + d * d) + p * p * d * d
    return numerator / denominator


def recovered_fidelity_general(coeffs: CoeffsLike, p: float) -> float:
    """恢复后保真度, 复系数形式"""
    c = as_coeffs(coeffs)
    a, b, g, d = c.as_array()
    a2, _, _, d2 = _moduli(c)
    numerator = (1 + p * (abs(np.conj(a) * b + np.conj(g) * d) ** 2
                          + abs(np.conj(a) * g + np.conj(b) * d) ** 2)
                 + p * p * a2 * d2)
    return numerator / recovered_normalizer(c, p)


# ---------------------------------------------------------------- 扩展方案

def prepare_normalizer(coeffs: CoeffsLike, x: float) -> float:
    """N1² = |α|² + x(|β|²+|γ|²) + x²|δ|²"""
    a2, b2, g2, d2 = _moduli(coeffs)
    return a2 + x * (b2 + g2) + x * x * d2


def prepared_amplitudes(coeffs: CoeffsLike, x: float) -> np.ndarray:
    """预备后的态 (α, β√x, γ√x, δx)/N1"""
    c = as_coeffs(coeffs)
    sx = math.sqrt(x)
    amplitudes = np.array([c.alpha, c.beta * sx, c.gamma * sx, c.delta * x])
    return amplitudes / math.sqrt(prepare_normalizer(c, x))


def prepare_probability(coeffs: CoeffsLike, x: float) -> float:
    """预备成功概率 N1² / (1+x)²"""
    return prepare_normalizer(coeffs, x) / (1.0 + x) ** 2


def extended_recover_probability(coeffs: CoeffsLike, p: float, x: float) -> float:
    """预备成功后恢复结果 00 的条件概率 (xq/(1+xq))² N2(px) / N1²"""
    xq = x * (1.0 - p)
    return (xq / (1.0 + xq)) ** 2 * recovered_normalizer(coeffs, p * x) / prepare_normalizer(coeffs, x)


def extended_total_probability(coeffs: CoeffsLike, p: float, x: float) -> float:
    """扩展方案总成功概率"""
    return prepare_probability(coeffs, x) * extended_recover_probability(coeffs, p, x)


def extended_density(coeffs: CoeffsLike, p: float, x: float) -> np.ndarray:
    """扩展方案末态密度矩阵: 恢复密度矩阵中 p 换成 px"""
    return recovered_density(coeffs, p * x)


def extended_concurrence_literal(coeffs: CoeffsLike, p: float, x: float) -> float:
    """扩展方案共生纠缠度的字面形式"""
    a2, _, _, d2 = _moduli(coeffs)
    px = p * x
    denominator = 1.0 + px * (1.0 - a2 - d2) + px * px * d2
    return max(0.0, 2.0 * (_determinant(coeffs) - px * math.sqrt(d2)) / denominator)


def extended_concurrence(coeffs: CoeffsLike, p: float, x: float) -> float:
    """扩展方案共生纠缠度: 恢复共生纠缠度中 p 换成 px"""
    return recovered_concurrence(coeffs, p * x)


def extended_fidelity_literal(coeffs: CoeffsLike, p: float, x: float) -> float:
    """扩展方案保真度的字面形式 (实系数)"""
    a, b, g, d = _real_parts(coeffs)
    numerator = (1 + 4 * p * x * a * b * g * d + p * x * x * (a * a + d * d) * (b * b + g * g)
                 + p * p * x * x * a * a * d * d)
    denominator = 1 + p * x * (1 - a * a + d * d) + p * p * x * x * d * d
    return numerator / denominator


def extended_fidelity(coeffs: CoeffsLike, p: float, x: float) -> float:
    """扩展方案保真度: 恢复保真度中 p 换成 px (实系数)"""
    return recovered_fidelity(coeffs, p * x)


# ---------------------------------------------------------------- 汇总

@dataclass
class ClosedFormRecord:
    """一组 (系数, p, x) 上的全部闭式结果; 复系数时保真度字段为 None"""
    C_d: float
    C_r: float
    C_r_ext: float
    C_r_ext_corrected: float
    P_r: float
    P_r_corrected: float
    p_threshold: Optional[float]
    p_esd: Optional[float]
    F_d: Optional[float]
    F_r: Optional[float]
    F_r_ext: Optional[float]
    F_r_ext_corrected: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def closed_form_suite(coeffs: CoeffsLike, p: float, x: float = 1.0) -> ClosedFormRecord:
    """按字面形式计算全部闭式结果, 有分歧的公式同时给出修正形式

    扫描表的闭式列都取自这里
    """
    c = as_coeffs(coeffs)
    real = c.is_real()
    return ClosedFormRecord(
        C_d=damped_concurrence(c, p),
        C_r=recovered_concurrence(c, p),
        C_r_ext=extended_concurrence_literal(c, p, x),
        C_r_ext_corrected=extended_concurrence(c, p, x),
        P_r=recovered_probability_literal(c, p),
        P_r_corrected=recovered_probability(c, p),
        p_threshold=crossing_threshold(c),
        p_esd=esd_point(c),
        F_d=damped_fidelity(c, p) if real else None,
        F_r=recovered_fidelity(c, p) if real else None,
        F_r_ext=extended_fidelity_literal(c, p, x) if real else None,
        F_r_ext_corrected=extended_fidelity(c, p, x) if real else None,
    )


# 全部闭式公式的静态登记表; 验证套件必须覆盖每一项
CLOSED_FORMS: Dict[str, Callable] = {
    'null-result probability': null_probability,
    'null-damped state': null_damped_amplitudes,
    'recovery branch probabilities': recovery_branch_probabilities,
    'follow-up success probability': followup_success,
    'success probability N=1': lambda q: success_prob_closed(1, q),
    'success probability N=2': lambda q: success_prob_closed(2, q),
    'success probability N=3': lambda q: success_prob_closed(3, q),
    'damped concurrence': damped_concurrence,
    'recovered density matrix': recovered_density,
    'recovered branch probability': recovered_probability,
    'recovered concurrence': recovered_concurrence,
    'crossing threshold': crossing_threshold,
    'ESD point': esd_point,
    'prepared state': prepared_amplitudes,
    'preparation probability': prepare_probability,
    'extended density matrix': extended_density,
    'extended concurrence': extended_concurrence,
    'damped fidelity': damped_fidelity,
    'recovered fidelity': recovered_fidelity,
    'extended fidelity': extended_fidelity,
}


# 登记项对应的公式编号, 报告中每行据此标注
CLOSED_FORM_EQUATIONS: Dict[str, Tuple[int, ...]] = {
    'null-result probability': (6,),
    'null-damped state': (6,),
    'recovery branch probabilities': (30, 31),
    'follow-up success probability': (10,),
    'success probability N=1': (32,),
    'success probability N=2': (33,),
    'success probability N=3': (34,),
    'damped concurrence': (12,),
    'recovered density matrix': (13,),
    'recovered branch probability': (13,),
    'recovered concurrence': (14,),
    'crossing threshold': (15,),
    'ESD point': (12,),
    'prepared state': (18,),
    'preparation probability': (18,),
    'extended density matrix': (19,),
    'extended concurrence': (20,),
    'damped fidelity': (22,),
    'recovered fidelity': (23,),
    'extended fidelity': (24,),
}


def equation_label(quantity: str) -> str:
    """检查量的公式标注, 如 "Eq. (12)" 或 "Eqs. (30)-(31)"; 非登记项返回空串"""
    numbers = CLOSED_FORM_EQUATIONS.get(quantity, ())
    if not numbers:
        return ""
    if len(numbers) == 1:
        return f"Eq. ({numbers[0]})"
    return f"Eqs. ({numbers[0]})-({numbers[-1]})"
