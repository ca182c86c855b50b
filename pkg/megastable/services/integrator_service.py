"""
积分服务 - 定步长 RK4 + 三次 Hermite 稠密输出
支持状态依赖时滞微分方程（延迟查询 x(t-τ) 由稠密解插值提供）
"""
import math
from typing import Callable, Tuple

import numpy as np

from megastable.exceptions import DivergenceError, OutOfRangeError
from megastable.extensions import logger
from megastable.models.params import IntegratorConfig
from megastable.models.trajectory import DenseTrajectory, hermite

State = Tuple[float, float]


class _History:
    """
    积分过程中的可增长历史（纯 Python 列表，热循环内避免 numpy 标量开销）

    查询时刻落在已提交区间内时精确插值；落在当前步内时使用试探段
    （首轮为上一段三次多项式的外推，之后为本步的 Hermite 段）。
    """

    def __init__(self, x0, h):
        self.x0 = x0
        self.h = h
        self.ts = [0.0]
        self.xs = [x0]
        self.ys = [0.0]
        self.fx = []
        self.fy = []
        self.trial = None
        self.in_step = False

    def commit(self, t, x, y, fx, fy):
        self.ts.append(t)
        self.xs.append(x)
        self.ys.append(y)
        self.fx.append(fx)
        self.fy.append(fy)

    def _node(self, i, s):
        # 已提交区间 [ts[i], ts[i+1]] 上的插值
        t0 = self.ts[i]
        dt = self.ts[i + 1] - t0
        theta = (s - t0) / dt
        return (hermite(theta, dt, self.xs[i], self.xs[i + 1], self.fx[i], self.fx[i + 1]),
                hermite(theta, dt, self.ys[i], self.ys[i + 1], self.fy[i], self.fy[i + 1]))

    def __call__(self, s):
        if s < 0.0:
            return (self.x0, 0.0)
        ts = self.ts
        t_last = ts[-1]
        if s <= t_last:
            if s == t_last:
                return (self.xs[-1], self.ys[-1])
            i = min(int(s / self.h), len(ts) - 2)
            while ts[i] > s:
                i -= 1
            while ts[i + 1] < s:
                i += 1
            return self._node(i, s)
        # 时滞小于当前步内偏移：查询落入正在计算的步
        self.in_step = True
        if self.trial is not None:
            t0, x0, y0, fx0, fy0, t1, x1, y1, fx1, fy1 = self.trial
            dt = t1 - t0
            theta = (s - t0) / dt
            return (hermite(theta, dt, x0, x1, fx0, fx1), hermite(theta, dt, y0, y1, fy0, fy1))
        if len(ts) >= 2:
            return self._node(len(ts) - 2, s)
        ds = s - t_last
        return (self.xs[-1] + ds * self.fx[-1], self.ys[-1] + ds * self.fy[-1])


class IntegratorService:
    """时滞 / 常微分方程积分服务"""

    @staticmethod
    def interpolate(traj: DenseTrajectory, t: float) -> State:
        """
        在稠密解上取值

        Args:
            traj: 稠密轨迹
            t: 查询时刻（t < 0 时返回常数初始历史）

        Returns:
            (x, y)
        """
        if t > traj.t_final:
            raise OutOfRangeError(f'query t={t:.6g} beyond t_final={traj.t_final:.6g}')
        x, y = traj.evaluate(t)[0]
        return float(x), float(y)

    @staticmethod
    def _rk4(rhs, t, x, y, h, lookup):
        k1x, k1y = rhs(t, (x, y), lookup)
        k2x, k2y = rhs(t + 0.5 * h, (x + 0.5 * h * k1x, y + 0.5 * h * k1y), lookup)
        k3x, k3y = rhs(t + 0.5 * h, (x + 0.5 * h * k2x, y + 0.5 * h * k2y), lookup)
        k4x, k4y = rhs(t + h, (x + h * k3x, y + h * k3y), lookup)
        return (x + h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0,
                y + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0)

    @staticmethod
    def _step_grid(t_final, h):
        n_steps = max(1, int(math.ceil(t_final / h - 1e-9)))
        return n_steps

    @staticmethod
    def integrate_dde(rhs: Callable, x0: float, t_final: float, cfg: IntegratorConfig = None) -> DenseTrajectory:
        """
        积分状态依赖时滞方程

        Args:
            rhs: rhs(t, (x, y), lookup) -> (ẋ, ẏ)，lookup(s) 返回 s 时刻的 (x, y)
            x0: 常数初始历史 x(t) = x0 (t ≤ 0)，初速度为 0
            t_final: 终止时刻
            cfg: 积分器配置

        Returns:
            DenseTrajectory，metadata['fixed_point_warnings'] 记录未收敛步的时刻
        """
        cfg = cfg or IntegratorConfig()
        if not t_final > 0:
            raise OutOfRangeError(f't_final must be positive, got {t_final}')
        h = cfg.h
        tol = cfg.fixed_point_tol
        n_steps = IntegratorService._step_grid(t_final, h)
        rk4 = IntegratorService._rk4

        hist = _History(float(x0), h)
        fx0, fy0 = rhs(0.0, (hist.x0, 0.0), hist)
        hist.fx.append(fx0)
        hist.fy.append(fy0)
        hist.in_step = False

        warnings = []
        iterated_steps = 0
        for i in range(n_steps):
            t0 = hist.ts[-1]
            t1 = t_final if i == n_steps - 1 else (i + 1) * h
            dt = t1 - t0
            x0_, y0_ = hist.xs[-1], hist.ys[-1]
            fx0_, fy0_ = hist.fx[-1], hist.fy[-1]

            hist.trial = None
            hist.in_step = False
            try:
                x1, y1 = rk4(rhs, t0, x0_, y0_, dt, hist)
                fx1, fy1 = rhs(t1, (x1, y1), hist)
            except (OverflowError, ValueError):
                # 溢出后 cos(inf) 等抛出域错误
                raise DivergenceError(t1)

            if hist.in_step:
                # 时滞趋于零：对步映射做不动点迭代
                iterated_steps += 1
                converged = False
                for _ in range(cfg.max_fixed_point_iters):
                    hist.trial = (t0, x0_, y0_, fx0_, fy0_, t1, x1, y1, fx1, fy1)
                    try:
                        xn, yn = rk4(rhs, t0, x0_, y0_, dt, hist)
                        fxn, fyn = rhs(t1, (xn, yn), hist)
                    except (OverflowError, ValueError):
                        raise DivergenceError(t1)
                    diff = max(abs(xn - x1), abs(yn - y1))
                    x1, y1, fx1, fy1 = xn, yn, fxn, fyn
                    if diff < tol:
                        converged = True
                        break
                if not converged:
                    warnings.append(t1)
                hist.trial = None

            if not (math.isfinite(x1) and math.isfinite(y1) and math.isfinite(fx1) and math.isfinite(fy1)):
                raise DivergenceError(t1)
            hist.commit(t1, x1, y1, fx1, fy1)

        if warnings:
            logger.warning(f'⚠️ 不动点迭代未收敛 {len(warnings)} 次（首次 t={warnings[0]:.4f}）')

        return DenseTrajectory(
            times=np.asarray(hist.ts),
            states=np.column_stack([hist.xs, hist.ys]),
            derivs=np.column_stack([hist.fx, hist.fy]),
            x0=hist.x0,
            t_final=float(t_final),
            metadata={
                'h': h,
                'fixed_point_warnings': warnings,
                'fixed_point_steps': iterated_steps,
            },
        )

    @staticmethod
    def integrate_ode(rhs: Callable, initial: State, t_final: float, cfg: IntegratorConfig = None) -> DenseTrajectory:
        """
        积分二维常微分方程 rhs(t, (x, y)) -> (ẋ, ẏ)

        初始历史约定为 (initial[0], 0)，仅用于 t < 0 的查询。
        """
        cfg = cfg or IntegratorConfig()
        if not t_final > 0:
            raise OutOfRangeError(f't_final must be positive, got {t_final}')
        h = cfg.h
        n_steps = IntegratorService._step_grid(t_final, h)

        def lifted(t, state, _lookup):
            return rhs(t, state)

        x, y = float(initial[0]), float(initial[1])
        ts, xs, ys = [0.0], [x], [y]
        fx, fy = rhs(0.0, (x, y))
        fxs, fys = [fx], [fy]
        for i in range(n_steps):
            t0 = ts[-1]
            t1 = t_final if i == n_steps - 1 else (i + 1) * h
            try:
                x, y = IntegratorService._rk4(lifted, t0, x, y, t1 - t0, None)
                fx, fy = rhs(t1, (x, y))
            except (OverflowError, ValueError):
                raise DivergenceError(t1)
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DivergenceError(t1)
            ts.append(t1)
            xs.append(x)
            ys.append(y)
            fxs.append(fx)
            fys.append(fy)

        return DenseTrajectory(
            times=np.asarray(ts),
            states=np.column_stack([xs, ys]),
            derivs=np.column_stack([fxs, fys]),
            x0=float(initial[0]),
            t_final=float(t_final),
            metadata={'h': h, 'fixed_point_warnings': [], 'fixed_point_steps': 0},
        )


# 全局单例
integrator_service = IntegratorService()
