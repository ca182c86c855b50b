"""动力学模型服务 - 时滞方程、低记忆约化、平均化径向方程、Lyapunov 能量、脉冲驱动"""
import math
from functools import partial
from typing import Optional

from megastable.models.params import SystemParams, PulseParams
from megastable.utils import bessel


class DynamicsService:
    """右端函数与驱动律（全部为纯函数）"""

    @staticmethod
    def delay(v: float, p: SystemParams) -> float:
        """状态依赖时滞 τ(v) = τ0 cos²(λv)，取值于 [0, τ0]"""
        c = math.cos(p.lam * v)
        return p.tau0 * c * c

    @staticmethod
    def pulse_force(t: float, pulse: Optional[PulseParams]) -> float:
        """有限时长简谐脉冲，闭区间 [t0, t0+δt] 内为 F0 cos(Ωt+φ)"""
        if pulse is None or pulse.F0 == 0.0:
            return 0.0
        if pulse.t0 <= t <= pulse.t_end:
            return pulse.F0 * math.cos(pulse.Omega * t + pulse.phi)
        return 0.0

    @staticmethod
    def dde_rhs(t, state, lookup, p: SystemParams, pulse: Optional[PulseParams] = None):
        """
        ẋ = y
        ẏ = -ζy - kx - α x(t - τ(y)) + F(t)
        """
        x, y = state
        c = math.cos(p.lam * y)
        x_tau = lookup(t - p.tau0 * c * c)[0]
        force = DynamicsService.pulse_force(t, pulse)
        return (y, -p.zeta * y - p.k * x - p.alpha * x_tau + force)

    @staticmethod
    def low_memory_rhs(t, state, p: SystemParams, pulse: Optional[PulseParams] = None):
        """
        时滞一阶 Taylor 展开后的自激振子
        ẏ = -(ζ - ατ0 cos²(λy)) y - (k+α) x
        """
        x, y = state
        c = math.cos(p.lam * y)
        drag = p.zeta - p.alpha * p.tau0 * c * c
        force = DynamicsService.pulse_force(t, pulse)
        return (y, -drag * y - (p.k + p.alpha) * x + force)

    @staticmethod
    def averaged_rhs(r: float, p: SystemParams) -> float:
        """平均化径向方程 ṙ = -μr + ε(J₁(r) - rJ₂(r))"""
        return DynamicsService.averaged_field(r, p.mu, p.eps)

    @staticmethod
    def averaged_field(r, mu, eps):
        """按 (μ, ε) 直接求值的平均化径向场（支持 numpy 数组）"""
        return -mu * r + eps * (bessel.bessel_j(1, r) - r * bessel.bessel_j(2, r))

    @staticmethod
    def lyapunov_energy(state, p: SystemParams):
        """Lyapunov 能量 E = ½ m y² + ½ (k+α) x²（支持 numpy 数组）"""
        x, y = state
        return 0.5 * p.m * y * y + 0.5 * (p.k + p.alpha) * x * x

    @staticmethod
    def make_dde_rhs(p: SystemParams, pulse: Optional[PulseParams] = None):
        """绑定参数，得到积分器使用的 rhs(t, state, lookup)"""
        return partial(DynamicsService.dde_rhs, p=p, pulse=pulse)

    @staticmethod
    def make_low_memory_rhs(p: SystemParams, pulse: Optional[PulseParams] = None):
        """绑定参数，得到积分器使用的 rhs(t, state)"""
        return partial(DynamicsService.low_memory_rhs, p=p, pulse=pulse)


# 全局单例
dynamics_service = DynamicsService()
