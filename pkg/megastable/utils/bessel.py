"""
第一类 Bessel 函数 J0 / J1 / J2（向量化）

分段策略：
    r <= 8          升幂级数
    8 < r < 25      Miller 反向递推 + J0 + 2ΣJ_2k = 1 归一化
    r >= 25         Hankel 渐近展开（20 项）
"""
import math

import numpy as np

from megastable.exceptions import DomainError

SERIES_MAX = 8.0
ASYMPTOTIC_MIN = 25.0
SUPPORTED_ORDERS = (0, 1, 2)
_HANKEL_TERMS = 20


def _check_order(order):
    if order not in SUPPORTED_ORDERS:
        raise DomainError(f'unsupported Bessel order {order!r}; supported: {SUPPORTED_ORDERS}')


def _series(order, r):
    half = 0.5 * r
    term = half ** order / math.factorial(order)
    total = term.copy()
    q = -half * half
    for k in range(1, 60):
        term = term * q / (k * (k + order))
        total += term
    return total


def _miller(order, r):
    start = int(r.max()) + 40
    start += start % 2
    j_next = np.zeros_like(r)
    j_curr = np.full_like(r, 1e-30)
    norm = np.zeros_like(r)
    kept = {}
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / r) * j_curr - j_next
        j_next, j_curr = j_curr, j_prev
        idx = k - 1
        if idx in (0, 1, 2):
            kept[idx] = j_curr.copy()
        if idx % 2 == 0 and idx > 0:
            norm += 2.0 * j_curr
        big = np.abs(j_curr) > 1e200
        if big.any():
            scale = np.where(big, 1e-200, 1.0)
            j_curr *= scale
            j_next *= scale
            norm *= scale
            for key in kept:
                kept[key] *= scale
    norm += kept[0]
    return kept[order] / norm


def _hankel(order, r):
    mu = 4.0 * order * order
    p = np.zeros_like(r)
    q = np.zeros_like(r)
    a = 1.0
    power = np.ones_like(r)
    for k in range(_HANKEL_TERMS):
        if k:
            a *= (mu - (2 * k - 1) ** 2) / (8.0 * k)
            power = power / r
        # a_k / r^k 依次进入 P（偶数 k）和 Q（奇数 k），符号交替
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * a * power
        else:
            q += sign * a * power
    chi = r - (0.5 * order + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * r)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j(order, r):
    """
    第一类 Bessel 函数 J_n(r)，n ∈ {0, 1, 2}，r >= 0

    Args:
        order: 阶数
        r: 标量或数组

    Returns:
        与输入形状一致；标量输入返回 float
    """
    _check_order(order)
    arr = np.asarray(r, dtype=float)
    flat = np.atleast_1d(arr).ravel()
    if np.any(flat < 0) or np.any(~np.isfinite(flat)):
        raise DomainError('bessel_j requires finite r >= 0')
    out = np.empty_like(flat)
    small = flat <= SERIES_MAX
    large = flat >= ASYMPTOTIC_MIN
    mid = ~small & ~large
    if small.any():
        out[small] = _series(order, flat[small])
    if mid.any():
        out[mid] = _miller(order, flat[mid])
    if large.any():
        out[large] = _hankel(order, flat[large])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def asymptotic_bessel(order, r):
    """
    主阶渐近式 J_n(r) ≈ √(2/(πr)) cos(r - nπ/2 - π/4)
    r < 1 时无精度保证
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise DomainError('asymptotic Bessel form is undefined at r <= 0')
    val = np.sqrt(2.0 / (math.pi * arr)) * np.cos(arr - order * math.pi / 2.0 - math.pi / 4.0)
    if arr.ndim == 0:
        return float(val)
    return val
