from dataclasses import dataclass, field

import numpy as np

from megastable.exceptions import OutOfRangeError
from .base import BaseModel


def hermite(theta, dt, y0, y1, m0, m1):
    """三次 Hermite 插值（θ ∈ [0,1] 时为内插，θ > 1 时为外推）"""
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + theta
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    return h00 * y0 + h10 * dt * m0 + h01 * y1 + h11 * dt * m1


@dataclass(frozen=True)
class HistorySegment(BaseModel):
    """
    稠密解的一段 [t_start, t_end]，端点状态与导数确定三次 Hermite 插值
    """

    t_start: float
    t_end: float
    state_start: tuple
    state_end: tuple
    deriv_start: tuple
    deriv_end: tuple

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise OutOfRangeError(f'segment must have t_end > t_start, got [{self.t_start}, {self.t_end}]')

    def evaluate(self, t):
        if t == self.t_start:
            return tuple(self.state_start)
        if t == self.t_end:
            return tuple(self.state_end)
        dt = self.t_end - self.t_start
        theta = (t - self.t_start) / dt
        return tuple(
            hermite(theta, dt, a, b, ma, mb)
            for a, b, ma, mb in zip(self.state_start, self.state_end, self.deriv_start, self.deriv_end)
        )


@dataclass(frozen=True, eq=False)
class DenseTrajectory(BaseModel):
    """
    连续可插值的积分结果

    节点按时间递增存储：times (n+1,), states (n+1, 2), derivs (n+1, 2)。
    相邻节点构成首尾相接的 HistorySegment；t < 0 时返回常数初始历史 (x0, 0)。
    """

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    x0: float
    t_final: float
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, times, states, derivs, x0=None, metadata=None):
        """由采样点（含导数）构造轨迹，常用于合成信号"""
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float).reshape(len(times), 2)
        derivs = np.asarray(derivs, dtype=float).reshape(len(times), 2)
        if len(times) < 2 or np.any(np.diff(times) <= 0):
            raise OutOfRangeError('trajectory samples must be strictly increasing and at least two')
        if x0 is None:
            x0 = float(states[0, 0])
        return cls(times=times, states=states, derivs=derivs, x0=float(x0),
                   t_final=float(times[-1]), metadata=dict(metadata or {}))

    @property
    def pre_history(self):
        return self.x0

    @property
    def x(self):
        return self.states[:, 0]

    @property
    def y(self):
        return self.states[:, 1]

    @property
    def n_segments(self):
        return len(self.times) - 1

    def segment(self, i):
        return HistorySegment(
            t_start=float(self.times[i]), t_end=float(self.times[i + 1]),
            state_start=tuple(self.states[i]), state_end=tuple(self.states[i + 1]),
            deriv_start=tuple(self.derivs[i]), deriv_end=tuple(self.derivs[i + 1]),
        )

    @property
    def segments(self):
        return [self.segment(i) for i in range(self.n_segments)]

    @property
    def warnings(self):
        return self.metadata.get('fixed_point_warnings', [])

    def evaluate(self, t):
        """向量化插值，返回 (len(t), 2) 数组"""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.size and t.max() > self.t_final:
            raise OutOfRangeError(f'query t={t.max():.6g} beyond t_final={self.t_final:.6g}')
        out = np.empty((t.size, 2))
        before = t < self.times[0]
        out[before, 0] = self.x0
        out[before, 1] = 0.0
        inside = ~before
        if inside.any():
            tq = t[inside]
            idx = np.searchsorted(self.times, tq, side='right') - 1
            idx = np.clip(idx, 0, self.n_segments - 1)
            t0 = self.times[idx]
            dt = self.times[idx + 1] - t0
            theta = ((tq - t0) / dt)[:, None]
            val = hermite(theta, dt[:, None], self.states[idx], self.states[idx + 1],
                          self.derivs[idx], self.derivs[idx + 1])
            exact_start = tq == t0
            val[exact_start] = self.states[idx[exact_start]]
            exact_end = tq == self.times[idx + 1]
            val[exact_end] = self.states[idx[exact_end] + 1]
            out[inside] = val
        return out

    def slice_mask(self, t_start, t_end=None):
        """返回节点落在 [t_start, t_end] 内的布尔掩码"""
        t_end = self.t_final if t_end is None else t_end
        return (self.times >= t_start) & (self.times <= t_end)
