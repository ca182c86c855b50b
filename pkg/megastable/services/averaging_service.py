"""
平均化分析服务 - Krylov-Bogoliubov 径向方程的不动点、稳定性、极限环计数与轨道半径预测
"""
import math
from typing import List, Optional

import numpy as np

from megastable.exceptions import DomainError
from megastable.extensions import logger
from megastable.models.orbit import RadialRoot, SpectrumPrediction
from megastable.models.params import AveragedState, IntegratorConfig, SystemParams
from megastable.models.trajectory import DenseTrajectory
from megastable.services.dynamics_service import DynamicsService
from megastable.services.integrator_service import IntegratorService
from megastable.utils import bessel

UNBOUNDED = math.inf


class AveragingService:
    """平均化径向方程 ṙ = -μr + ε(J₁(r) - rJ₂(r)) 的解析工具"""

    SCAN_STEP = 0.05
    BISECTION_TOL = 1e-12
    SLOPE_STEP = 1e-6
    ORDERS = ('first', 'second')

    @staticmethod
    def bessel_j(order: int, r):
        return bessel.bessel_j(order, r)

    @staticmethod
    def asymptotic_bessel(order: int, r):
        return bessel.asymptotic_bessel(order, r)

    @staticmethod
    def _bisect(mu, eps, lo, hi, f_lo):
        """对所有括区间同时二分（向量化）"""
        field = DynamicsService.averaged_field
        n_iter = int(math.ceil(math.log2(max(np.max(hi - lo), 1e-300) / AveragingService.BISECTION_TOL))) + 1
        for _ in range(max(n_iter, 1)):
            mid = 0.5 * (lo + hi)
            f_mid = field(mid, mu, eps)
            left = np.sign(f_mid) == np.sign(f_lo)
            lo = np.where(left, mid, lo)
            f_lo = np.where(left, f_mid, f_lo)
            hi = np.where(left, hi, mid)
        return 0.5 * (lo + hi)

    @staticmethod
    def _scan(mu, eps, r_max, step):
        grid = np.arange(step, r_max + 0.5 * step, step)
        grid = grid[grid <= r_max]
        if grid.size == 0 or grid[-1] < r_max:
            grid = np.append(grid, r_max)
        values = DynamicsService.averaged_field(grid, mu, eps)
        return grid, values

    @staticmethod
    def find_roots(mu: float, eps: float, r_max: float) -> List[RadialRoot]:
        """
        求 (0, r_max] 内平均化方程的全部根

        Args:
            mu: 有效阻尼 μ
            eps: 自激强度 ε
            r_max: 扫描上限

        Returns:
            按 r 递增的 RadialRoot 列表；斜率为负者稳定
        """
        if not r_max > 0:
            raise DomainError(f'r_max must be positive, got {r_max}')
        step = AveragingService.SCAN_STEP
        grid, values = AveragingService._scan(mu, eps, r_max, step)
        exact = np.flatnonzero(values == 0.0)
        change = np.flatnonzero(values[:-1] * values[1:] < 0)
        roots = list(grid[exact])
        if change.size:
            refined = AveragingService._bisect(mu, eps, grid[change], grid[change + 1], values[change])
            roots.extend(refined.tolist())
        roots = np.unique(np.asarray(roots, dtype=float))

        d = AveragingService.SLOPE_STEP
        field = DynamicsService.averaged_field
        slopes = (field(roots + d, mu, eps) - field(roots - d, mu, eps)) / (2.0 * d) if roots.size else []
        return [RadialRoot(r=float(r), stable=bool(s < 0), index=i)
                for i, (r, s) in enumerate(zip(roots, slopes))]

    @staticmethod
    def count_sign_changes(mu: float, eps: float, r_max: float, chunk: int = 1_000_000) -> int:
        """逐块扫描平均化径向场的变号次数（不做二分，用于大范围计数）"""
        step = AveragingService.SCAN_STEP
        n_total = int(math.floor(r_max / step))
        count = 0
        prev = None
        for start in range(1, n_total + 1, chunk):
            idx = np.arange(start, min(start + chunk, n_total + 1))
            values = DynamicsService.averaged_field(idx * step, mu, eps)
            signs = np.sign(values)
            if prev is not None:
                signs = np.concatenate(([prev], signs))
            count += int(np.count_nonzero(signs[:-1] * signs[1:] < 0))
            prev = signs[-1]
        return count

    @staticmethod
    def count_limit_cycles(mu: float, eps: float):
        """
        闭式极限环数 N_c = ⌊δ/(2π) - 3/8⌋，δ = (π/2)^{1/3} (ε/μ)^{2/3}
        μ = 0 时返回 UNBOUNDED (math.inf)
        """
        if mu < 0:
            raise DomainError(f'mu must be non-negative, got {mu}')
        if mu == 0:
            return UNBOUNDED
        delta = (math.pi / 2.0) ** (1.0 / 3.0) * (eps / mu) ** (2.0 / 3.0)
        return max(0, int(math.floor(delta / (2.0 * math.pi) - 3.0 / 8.0)))

    @staticmethod
    def transcendental_residual(r, mu: float, eps: float):
        """渐近不动点方程 r = cos(r-3π/4) / (√(2r/π) μ/ε + sin(r-3π/4)) 的残差（乘开分母）"""
        r = np.asarray(r, dtype=float)
        phase = r - 0.75 * math.pi
        return r * (np.sqrt(2.0 * r / math.pi) * mu / eps + np.sin(phase)) - np.cos(phase)

    @staticmethod
    def mass_correction(p: SystemParams) -> float:
        """二阶时滞展开的重整化质量 m' = m + 3ατ0²/16"""
        return p.m + 3.0 * p.alpha * p.tau0 ** 2 / 16.0

    @staticmethod
    def _check_order(order):
        if order not in AveragingService.ORDERS:
            raise DomainError(f'unknown prediction order {order!r}')

    @staticmethod
    def predict_radius(n: int, p: SystemParams, order: str = 'first') -> SpectrumPrediction:
        """
        第 n 个稳定轨道的速度幅值预测 π(3/4 + 2n)/(2λ)
        二阶按 √(m'/m) 缩放
        """
        AveragingService._check_order(order)
        if n < 0:
            raise DomainError(f'orbit index must be >= 0, got {n}')
        r = math.pi * (0.75 + 2 * n) / (2.0 * p.lam)
        if order == 'second':
            r *= math.sqrt(AveragingService.mass_correction(p) / p.m)
        return SpectrumPrediction(n=n, r_predicted=r, order=order)

    @staticmethod
    def predict_unstable_radius(n: int, p: SystemParams) -> float:
        """分隔稳定轨道 n 与 n+1 的不稳定极限环 π(7/4 + 2n)/(2λ)"""
        return math.pi * (1.75 + 2 * n) / (2.0 * p.lam)

    @staticmethod
    def predicted_frequency(p: SystemParams, order: str = 'first') -> float:
        """ω = √((k+α)/m)，二阶使用重整化质量"""
        AveragingService._check_order(order)
        mass = p.m if order == 'first' else AveragingService.mass_correction(p)
        return math.sqrt((p.k + p.alpha) / mass)

    @staticmethod
    def root_radius(root: RadialRoot, p: SystemParams) -> float:
        """平均化坐标下的根映射为物理速度幅值 r/(2λ)"""
        return root.r / (2.0 * p.lam)

    @staticmethod
    def predict_radii_from_roots(p: SystemParams, n_max: int) -> List[SpectrumPrediction]:
        """以平均化方程的精确稳定根（而非渐近式）预测前 n_max+1 个轨道"""
        r_max = math.pi * (2.0 * n_max + 3.0)
        stable = [r for r in AveragingService.find_roots(max(p.mu, 0.0), p.eps, r_max) if r.stable]
        return [SpectrumPrediction(n=i, r_predicted=AveragingService.root_radius(root, p), order='first')
                for i, root in enumerate(stable[:n_max + 1])]

    @staticmethod
    def integrate_radial(r0: float, mu: float, eps: float, t_final: float,
                         cfg: Optional[IntegratorConfig] = None, varphi0: float = 0.0) -> DenseTrajectory:
        """
        积分平均化振幅-相位流：ṙ 由径向方程给出，慢相位 φ̇ = 0
        返回轨迹的第一分量为 r，第二分量为 φ
        """
        def rhs(_t, state):
            r, _ = state
            return (float(DynamicsService.averaged_field(max(r, 0.0), mu, eps)), 0.0)

        logger.debug(f'integrate radial flow r0={r0} mu={mu} eps={eps}')
        return IntegratorService.integrate_ode(rhs, (r0, varphi0), t_final, cfg)

    @staticmethod
    def radial_state(traj: DenseTrajectory, t: float) -> AveragedState:
        """平均化流在时刻 t 的拟设状态，θ = t + φ"""
        r, varphi = IntegratorService.interpolate(traj, t)
        return AveragedState(r=max(float(r), 0.0), theta=t + float(varphi), varphi=float(varphi))


# 全局单例
averaging_service = AveragingService()
