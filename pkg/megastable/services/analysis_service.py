"""
轨迹分析服务
极限环检测、Lyapunov 能量统计、主频估计、响应幅值 Q、能谱拟合以及扫描结果的结构统计
"""
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from megastable.exceptions import FitError, InsufficientDataError, OutOfRangeError
from megastable.extensions import logger
from megastable.models.orbit import OrbitCandidate, OrbitCatalog
from megastable.models.params import SystemParams
from megastable.models.results import FitResult, ResponseSpectrum, SweepResult
from megastable.models.trajectory import DenseTrajectory
from megastable.services.averaging_service import AveragingService
from megastable.services.dynamics_service import DynamicsService

Window = Tuple[float, float]

DEFAULT_OMEGA_GRID = np.linspace(0.05, 1.2, 256)
DEFAULT_N_CYCLES = 10


class AnalysisService:
    """轨迹分析服务（纯函数，轨迹只读）"""

    N_MAXIMA = 10
    SETTLED_SPREAD = 1e-3
    MIN_CROSSINGS = 5

    # ==================== 采样辅助 ====================

    @staticmethod
    def _step(traj: DenseTrajectory) -> float:
        h = traj.metadata.get('h')
        if h:
            return float(h)
        return float(np.median(np.diff(traj.times)))

    @staticmethod
    def _window(traj: DenseTrajectory, window: Optional[Window]) -> Window:
        if window is None:
            return float(traj.times[0]), float(traj.t_final)
        t_start, t_end = float(window[0]), float(window[1])
        if t_end > traj.t_final:
            raise OutOfRangeError(f'window end {t_end:.6g} beyond t_final={traj.t_final:.6g}')
        if t_end <= t_start:
            raise InsufficientDataError(f'empty window [{t_start}, {t_end}]')
        return max(t_start, float(traj.times[0])), t_end

    @staticmethod
    def _uniform(traj: DenseTrajectory, t_start: float, t_end: float, dt: Optional[float] = None):
        """在 [t_start, t_end] 上按积分步长取等距样本（含两端点）"""
        dt = dt or AnalysisService._step(traj)
        n = max(2, int(math.ceil((t_end - t_start) / dt - 1e-9)) + 1)
        ts = np.linspace(t_start, t_end, n)
        return ts, traj.evaluate(ts)

    @staticmethod
    def upward_crossings(traj: DenseTrajectory, window: Optional[Window] = None) -> np.ndarray:
        """x 由负到非负的过零时刻（相邻节点线性插值）"""
        t_start, t_end = AnalysisService._window(traj, window)
        mask = traj.slice_mask(t_start, t_end)
        ts = traj.times[mask]
        xs = traj.states[mask, 0]
        idx = np.flatnonzero((xs[:-1] < 0.0) & (xs[1:] >= 0.0))
        x0, x1 = xs[idx], xs[idx + 1]
        return ts[idx] - x0 * (ts[idx + 1] - ts[idx]) / (x1 - x0)

    # ==================== 极限环 ====================

    @staticmethod
    def extrema(traj: DenseTrajectory, t_start: float = 0.0, t_end: Optional[float] = None) -> np.ndarray:
        """
        |x| 的极大值序列

        y 变号处取 |x| 较大的节点，用相邻三点抛物线顶点细化
        """
        mask = traj.slice_mask(t_start, t_end)
        xs = np.abs(traj.states[mask, 0])
        ys = traj.states[mask, 1]
        if xs.size < 3:
            return np.empty(0)
        idx = np.flatnonzero(ys[:-1] * ys[1:] < 0.0)
        j = np.where(xs[idx] >= xs[idx + 1], idx, idx + 1)
        j = j[(j >= 1) & (j <= xs.size - 2)]
        a, b, c = xs[j - 1], xs[j], xs[j + 1]
        curvature = a - 2.0 * b + c
        safe = np.where(curvature < 0.0, curvature, -1.0)
        vertex = b - (c - a) ** 2 / (8.0 * safe)
        return np.where(curvature < 0.0, vertex, b)

    @staticmethod
    def detect_limit_cycle(traj: DenseTrajectory, settle_time: float) -> OrbitCandidate:
        """
        检测 settle_time 之后的极限环

        Args:
            traj: 稠密轨迹
            settle_time: 暂态结束时刻

        Returns:
            OrbitCandidate：半径为最后 10 个 |x| 极大值的均值，
            相对离散度 < 1e-3 时 settled=True
        """
        maxima = AnalysisService.extrema(traj, settle_time)
        if maxima.size < AnalysisService.N_MAXIMA:
            raise InsufficientDataError(
                f'only {maxima.size} maxima after t={settle_time:.6g}, need {AnalysisService.N_MAXIMA}'
            )
        last = maxima[-AnalysisService.N_MAXIMA:]
        radius = float(np.mean(last))
        spread = float((last.max() - last.min()) / radius) if radius > 0 else math.inf
        try:
            frequency = AnalysisService.estimate_frequency(traj, (settle_time, traj.t_final))
        except InsufficientDataError:
            frequency = math.nan
        return OrbitCandidate(
            radius=radius,
            frequency=frequency,
            settled=bool(spread < AnalysisService.SETTLED_SPREAD),
            spread=spread,
            maxima=tuple(float(m) for m in last),
        )

    # ==================== 能量 / 频率 ====================

    @staticmethod
    def snap_window(traj: DenseTrajectory, window: Optional[Window] = None) -> Window:
        """将窗口两端吸附到窗口内首末两个上行过零点（整周期窗口）"""
        crossings = AnalysisService.upward_crossings(traj, window)
        if crossings.size < 2:
            raise InsufficientDataError('window shorter than one period')
        return float(crossings[0]), float(crossings[-1])

    @staticmethod
    def mean_energy(traj: DenseTrajectory, p: SystemParams, window: Optional[Window] = None):
        """
        整周期窗口内 Lyapunov 能量的时间平均与均方根偏差（梯形积分）

        Returns:
            (E_mean, E_std)
        """
        t_start, t_end = AnalysisService.snap_window(traj, window)
        ts, states = AnalysisService._uniform(traj, t_start, t_end)
        energy = DynamicsService.lyapunov_energy((states[:, 0], states[:, 1]), p)
        span = t_end - t_start
        e_mean = float(trapezoid(energy, ts) / span)
        e_var = float(trapezoid((energy - e_mean) ** 2, ts) / span)
        return e_mean, math.sqrt(max(e_var, 0.0))

    @staticmethod
    def energy_series(traj: DenseTrajectory, p: SystemParams, window: Optional[Window] = None,
                      dt: Optional[float] = None):
        """等距网格上的能量时间序列 (t, E)"""
        t_start, t_end = AnalysisService._window(traj, window)
        ts, states = AnalysisService._uniform(traj, t_start, t_end, dt)
        return ts, DynamicsService.lyapunov_energy((states[:, 0], states[:, 1]), p)

    @staticmethod
    def energy_balance(traj: DenseTrajectory, p: SystemParams, window: Optional[Window] = None) -> float:
        """整周期窗口上 dE/dt 的时间平均（等于能量差除以窗口长度）"""
        t_start, t_end = AnalysisService.snap_window(traj, window)
        ends = traj.evaluate([t_start, t_end])
        energy = DynamicsService.lyapunov_energy((ends[:, 0], ends[:, 1]), p)
        return float((energy[1] - energy[0]) / (t_end - t_start))

    @staticmethod
    def estimate_frequency(traj: DenseTrajectory, window: Optional[Window] = None) -> float:
        """ω = 2π(上行过零数 - 1) / (首末过零时间差)"""
        crossings = AnalysisService.upward_crossings(traj, window)
        if crossings.size < AnalysisService.MIN_CROSSINGS:
            raise InsufficientDataError(
                f'{crossings.size} upward zero crossings, need {AnalysisService.MIN_CROSSINGS}'
            )
        return 2.0 * math.pi * (crossings.size - 1) / float(crossings[-1] - crossings[0])

    # ==================== 响应幅值 ====================

    @staticmethod
    def response_spectrum(traj: DenseTrajectory, t_a: float, n_cycles: int = DEFAULT_N_CYCLES,
                          T: Optional[float] = None, omega_grid: Optional[Sequence[float]] = None,
                          p: Optional[SystemParams] = None) -> ResponseSpectrum:
        """
        窗口 Fourier 幅值
        Qc(ω) = (2/nT)∫x cos(ωt)dt，Qs 同理，Qt = √(Qc² + Qs²)，Q = max Qt

        Args:
            traj: 稠密轨迹
            t_a: 分析起点（须晚于脉冲结束）
            n_cycles: 窗口周期数
            T: 周期，缺省为 2π/ω_n
            omega_grid: 频率网格，缺省为 [0.05, 1.2] 上 256 点
            p: 缺省 T 时用于计算 ω_n
        """
        if T is None:
            T = 2.0 * math.pi / AveragingService.predicted_frequency(p or SystemParams())
        span = n_cycles * T
        t_end = t_a + span
        if t_end > traj.t_final:
            raise OutOfRangeError(f'Q window [{t_a:.6g}, {t_end:.6g}] exceeds t_final={traj.t_final:.6g}')
        omega = np.asarray(DEFAULT_OMEGA_GRID if omega_grid is None else omega_grid, dtype=float)
        ts, states = AnalysisService._uniform(traj, t_a, t_end)
        x = states[:, 0]
        phase = np.outer(omega, ts)
        qc = 2.0 / span * trapezoid(x * np.cos(phase), ts, axis=1)
        qs = 2.0 / span * trapezoid(x * np.sin(phase), ts, axis=1)
        qt = np.hypot(qc, qs)
        return ResponseSpectrum(omega_grid=omega, Qc=qc, Qs=qs, Qt=qt, Q=float(qt.max()),
                                t_a=float(t_a), n_cycles=int(n_cycles))

    # ==================== 能谱拟合 ====================

    @staticmethod
    def fit_quadratic(ns, energies) -> FitResult:
        """
        最小二乘拟合 E_n = a n² + b n + c

        标准误差取自回归协方差 σ²(XᵀX)⁻¹，σ² = RSS / (N - 3)
        """
        n = np.asarray(ns, dtype=float)
        e = np.asarray(energies, dtype=float)
        if n.size < 4:
            raise FitError(f'quadratic spectrum fit needs at least 4 orbits, got {n.size}')
        design = np.column_stack([n * n, n, np.ones_like(n)])
        coef, _, rank, _ = np.linalg.lstsq(design, e, rcond=None)
        if rank < 3:
            raise FitError('rank-deficient design matrix for quadratic fit')
        residual = e - design @ coef
        rss = float(residual @ residual)
        sigma2 = rss / (n.size - 3)
        cov = sigma2 * np.linalg.inv(design.T @ design)
        stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        tss = float(((e - e.mean()) ** 2).sum())
        r_squared = 1.0 - rss / tss if tss > 0 else 1.0
        return FitResult(a=float(coef[0]), b=float(coef[1]), c=float(coef[2]),
                         stderr=tuple(float(s) for s in stderr), residual_norm=math.sqrt(rss),
                         r_squared=float(r_squared), n_points=int(n.size))

    @staticmethod
    def fit_quadratic_spectrum(catalog: OrbitCatalog) -> FitResult:
        """对目录 (n, E_n) 做二次拟合"""
        result = AnalysisService.fit_quadratic([o.n for o in catalog.orbits],
                                               [o.mean_energy for o in catalog.orbits])
        logger.info(f'能谱拟合 a={result.a:.4f} b={result.b:.4f} c={result.c:.4f} R²={result.r_squared:.6f}')
        return result

    # ==================== 扫描统计 ====================

    @staticmethod
    def amplitude_trend(sweep: SweepResult, axis: str = 'F0'):
        """Q 对驱动参数的线性回归（忽略失败点）"""
        x = np.array([r.row()[axis] for r in sweep.records], dtype=float)
        q = sweep.values('Q').ravel()
        ok = np.isfinite(x) & np.isfinite(q)
        if ok.sum() < 2:
            raise InsufficientDataError('amplitude trend needs at least two finite sweep points')
        return stats.linregress(x[ok], q[ok])

    @staticmethod
    def find_plateaus(sweep: SweepResult, axis: str = 'F0'):
        """
        final_n 相等的极大连续段（锁幅平台），失败点不并入任何平台

        Returns:
            [{'final_n', 'start', 'stop', 'length', 'from', 'to', 'q_spread'}, ...]，
            start/stop 为记录下标（闭区间）
        """
        plateaus = []
        records = sweep.records
        levels = [None if r.error else r.final_n for r in records]
        i = 0
        while i < len(records):
            level = levels[i]
            j = i
            while j + 1 < len(records) and level is not None and levels[j + 1] == level:
                j += 1
            if level is not None:
                q = np.array([r.Q for r in records[i:j + 1]], dtype=float)
                q_mean = float(np.mean(q))
                plateaus.append({
                    'final_n': level,
                    'start': i,
                    'stop': j,
                    'length': j - i + 1,
                    'from': records[i].row()[axis],
                    'to': records[j].row()[axis],
                    'q_spread': float((q.max() - q.min()) / q_mean) if q_mean > 0 else 0.0,
                })
            i = j + 1
        return plateaus

    @staticmethod
    def grid_trend(sweep: SweepResult, level: int = 5):
        """
        每个 F0 列上达到 final_n >= level 的最小 N，及其与 F0 的 Spearman 秩相关

        要求扫描轴顺序为 (N, F0)
        """
        n_grid = np.asarray(sweep.grid('N'), dtype=float)
        f_grid = np.asarray(sweep.grid('F0'), dtype=float)
        final = sweep.values('final_n')
        reached = np.nan_to_num(final, nan=-1.0) >= level
        min_n = np.array([n_grid[np.argmax(col)] if col.any() else np.nan for col in reached.T])

        finite = np.isfinite(min_n)
        rho = math.nan
        if finite.sum() >= 3 and np.ptp(min_n[finite]) > 0:
            rho = float(stats.spearmanr(f_grid[finite], min_n[finite])[0])
        seq = min_n[finite]
        violations = int(np.count_nonzero(np.diff(seq) > 0)) if seq.size > 1 else 0
        return {
            'F0': f_grid.tolist(),
            'min_N': min_n.tolist(),
            'spearman': rho,
            'violations': violations,
            'violation_fraction': violations / max(1, len(f_grid)),
        }


# 全局单例
analysis_service = AnalysisService()
