import math
from dataclasses import dataclass
from typing import Tuple

from megastable.exceptions import CatalogError
from .base import BaseModel
from .params import SystemParams


@dataclass(frozen=True)
class RadialRoot(BaseModel):
    """平均化径向方程的不动点（平均化坐标）"""

    r: float
    stable: bool
    index: int


@dataclass(frozen=True)
class SpectrumPrediction(BaseModel):
    """Krylov-Bogoliubov 轨道半径预测（物理坐标下的速度幅值）"""

    n: int
    r_predicted: float
    order: str


@dataclass(frozen=True)
class OrbitCandidate(BaseModel):
    """极限环检测结果（尚未编号）"""

    radius: float
    frequency: float
    settled: bool
    spread: float
    maxima: Tuple[float, ...] = ()


@dataclass(frozen=True)
class OrbitRecord(BaseModel):
    """
    一条量子化轨道
    radius 为位置幅值 max|x|；phase_radius = √(2E/m) 为能量归一化相平面上的准圆半径
    """

    n: int
    radius: float
    mean_energy: float
    energy_std: float
    frequency: float
    phase_radius: float = 0.0
    x0: float = 0.0

    @property
    def period(self):
        return 2.0 * math.pi / self.frequency


@dataclass(frozen=True)
class OrbitCatalog(BaseModel):
    """按 n 排序的轨道目录"""

    orbits: Tuple[OrbitRecord, ...]
    params: SystemParams

    def __post_init__(self):
        orbits = tuple(self.orbits)
        object.__setattr__(self, 'orbits', orbits)
        for i, orbit in enumerate(orbits):
            if orbit.n != i:
                raise CatalogError(orbit.n, f'catalog indices must be contiguous from 0, found n={orbit.n} at {i}')
            if i and orbit.radius <= orbits[i - 1].radius:
                raise CatalogError(orbit.n, f'catalog radii must increase strictly, orbit n={orbit.n}')

    def __len__(self):
        return len(self.orbits)

    def __getitem__(self, n):
        return self.orbits[n]

    @property
    def radii(self):
        return [o.radius for o in self.orbits]

    @property
    def largest_radius(self):
        return self.orbits[-1].radius if self.orbits else 0.0
