import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from megastable.exceptions import NumericalError
from .base import BaseModel
from .params import SystemParams, PulseParams


@dataclass(frozen=True, eq=False)
class ResponseSpectrum(BaseModel):
    """窗口 Fourier 幅值 Qc / Qs / Qt 及响应幅值 Q = max(Qt)"""

    omega_grid: np.ndarray
    Qc: np.ndarray
    Qs: np.ndarray
    Qt: np.ndarray
    Q: float
    t_a: float
    n_cycles: int

    @property
    def omega_peak(self):
        return float(self.omega_grid[int(np.argmax(self.Qt))])


@dataclass(frozen=True)
class FitResult(BaseModel):
    """二次能谱拟合 E_n = a n² + b n + c"""

    a: float
    b: float
    c: float
    stderr: Tuple[float, float, float]
    residual_norm: float
    r_squared: float
    n_points: int


@dataclass(frozen=True, eq=False)
class TransitionResult(BaseModel):
    """单次脉冲驱动跃迁结果"""

    params: SystemParams
    pulse: PulseParams
    initial_n: int
    final_n: Optional[int]
    Q: float
    settled: bool
    radius: float = math.nan
    t_a: float = 500.0
    error: Optional[str] = None
    trajectory: Optional[object] = field(default=None, repr=False, compare=False)

    def row(self):
        """扁平化为扫描 CSV 的一行"""
        return {
            'F0': self.pulse.F0,
            'Omega': self.pulse.Omega,
            'N': self.pulse.N,
            'initial_n': self.initial_n,
            'final_n': '' if self.final_n is None else self.final_n,
            'Q': self.Q,
            'settled': int(bool(self.settled)),
        }


@dataclass(frozen=True, eq=False)
class SweepResult(BaseModel):
    """
    参数扫描结果
    axes 为 ((名称, 网格), ...)，records 按网格行优先顺序排列（最后一个轴变化最快）
    """

    axes: Tuple[Tuple[str, Tuple[float, ...]], ...]
    records: Tuple[TransitionResult, ...]

    def __post_init__(self):
        axes = tuple((name, tuple(grid)) for name, grid in self.axes)
        object.__setattr__(self, 'axes', axes)
        object.__setattr__(self, 'records', tuple(self.records))
        expected = int(np.prod([len(g) for _, g in axes])) if axes else 0
        if expected != len(self.records):
            raise NumericalError(f'sweep has {len(self.records)} records, grid expects {expected}')

    @property
    def shape(self):
        return tuple(len(g) for _, g in self.axes)

    def grid(self, name):
        for axis, values in self.axes:
            if axis == name:
                return values
        raise KeyError(name)

    def values(self, attr):
        """按网格形状返回记录属性数组（缺失值为 NaN）"""
        vals = [getattr(r, attr) for r in self.records]
        arr = np.array([np.nan if v is None else v for v in vals], dtype=float)
        return arr.reshape(self.shape)

    def rows(self):
        return [r.row() for r in self.records]
