import math
from dataclasses import dataclass, replace

from megastable.exceptions import ConfigurationError
from megastable.utils.validators import (
    validate_finite, validate_positive_number, validate_non_negative, validate_min_int
)
from .base import BaseModel


@dataclass(frozen=True)
class SystemParams(BaseModel):
    """
    延迟振子物理参数 ẍ + ζẋ + kx + α x(t-τ(ẋ)) = F(t)，τ(ẋ) = τ0 cos²(λẋ)
    默认参数组满足 ε = 1/10, μ = 0（无净阻尼，极限环无穷多）
    """
    __aliases__ = {'lam': 'lambda'}

    m: float = 1.0
    zeta: float = 0.1
    k: float = 0.1
    alpha: float = 0.25
    lam: float = 0.5
    tau0: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, 'm', validate_positive_number('m', self.m))
        object.__setattr__(self, 'zeta', validate_finite('zeta', self.zeta))
        object.__setattr__(self, 'k', validate_finite('k', self.k))
        object.__setattr__(self, 'alpha', validate_finite('alpha', self.alpha))
        object.__setattr__(self, 'lam', validate_positive_number('lambda', self.lam))
        object.__setattr__(self, 'tau0', validate_non_negative('tau0', self.tau0))
        if (self.k + self.alpha) / self.m < 0:
            raise ConfigurationError('k + alpha 不能为负', payload={'field': 'alpha'})

    @property
    def eps(self):
        """ε = ατ0/2"""
        return self.alpha * self.tau0 / 2.0

    @property
    def mu(self):
        """μ = ζ - ατ0/2"""
        return self.zeta - self.alpha * self.tau0 / 2.0

    @property
    def omega_n(self):
        """ω = √((k+α)/m)"""
        return math.sqrt((self.k + self.alpha) / self.m)

    @property
    def stiffness(self):
        """外势刚度 k + α"""
        return self.k + self.alpha

    def evolve(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class PulseParams(BaseModel):
    """
    有限时长简谐脉冲 F(t) = F0 cos(Ωt + φ)，t ∈ [t0, t0 + δt]，δt = 2πN/Ω
    """

    F0: float = 0.0
    Omega: float = 0.59
    phi: float = 0.0
    t0: float = 300.0
    N: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'F0', validate_non_negative('F0', self.F0))
        object.__setattr__(self, 'Omega', validate_positive_number('Omega', self.Omega))
        object.__setattr__(self, 'phi', validate_finite('phi', self.phi))
        object.__setattr__(self, 't0', validate_finite('t0', self.t0))
        object.__setattr__(self, 'N', validate_min_int('N', self.N, 1))

    @property
    def delta_t(self):
        return 2.0 * math.pi * self.N / self.Omega

    @property
    def t_end(self):
        return self.t0 + self.delta_t

    def evolve(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class IntegratorConfig(BaseModel):
    """定步长积分器配置"""

    h: float = 0.01
    max_fixed_point_iters: int = 8
    fixed_point_tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, 'h', validate_positive_number('h', self.h))
        object.__setattr__(self, 'max_fixed_point_iters',
                           validate_min_int('max_fixed_point_iters', self.max_fixed_point_iters, 1))
        object.__setattr__(self, 'fixed_point_tol',
                           validate_positive_number('fixed_point_tol', self.fixed_point_tol))


@dataclass(frozen=True)
class AveragedState(BaseModel):
    """平均化相空间拟设 (x, y) = (r sin θ, r cos θ)，θ = t + φ"""

    r: float
    theta: float = 0.0
    varphi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'r', validate_non_negative('r', self.r))

    @property
    def state(self):
        return (self.r * math.sin(self.theta), self.r * math.cos(self.theta))
