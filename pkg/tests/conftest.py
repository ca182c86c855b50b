import math

import numpy as np
import pytest

from megastable.models import DenseTrajectory, OrbitCatalog, OrbitRecord, SystemParams


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='运行耗时的复现实验测试')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='需要 --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def params():
    """默认参数组：ε = 1/10, μ = 0"""
    return SystemParams()


@pytest.fixture
def fig_params():
    """跃迁与扫描实验使用的 τ0 = 0.82"""
    return SystemParams(tau0=0.82)


def sine_trajectory(amplitude, omega, t_final, h=0.01, phase=0.0, x0=None):
    """x = A sin(ωt + φ) 的合成稠密轨迹（导数精确）"""
    times = np.arange(0.0, t_final + 0.5 * h, h)
    times[-1] = min(times[-1], t_final)
    arg = omega * times + phase
    x = amplitude * np.sin(arg)
    y = amplitude * omega * np.cos(arg)
    states = np.column_stack([x, y])
    derivs = np.column_stack([y, -omega * omega * x])
    return DenseTrajectory.from_samples(times, states, derivs, x0=x0, metadata={'h': h})


@pytest.fixture
def make_sine():
    return sine_trajectory


def synthetic_catalog(radii, p=None):
    """以给定半径构造目录，能量按 ½ω²r² 计"""
    p = p or SystemParams()
    w = p.omega_n
    orbits = tuple(
        OrbitRecord(n=i, radius=float(r), mean_energy=0.5 * (w * r) ** 2, energy_std=0.0,
                    frequency=w, phase_radius=w * r, x0=float(r))
        for i, r in enumerate(radii)
    )
    return OrbitCatalog(orbits=orbits, params=p)


@pytest.fixture
def small_catalog():
    return synthetic_catalog([1.0, 2.0, 3.0, 4.0, 5.0])


@pytest.fixture
def make_catalog():
    return synthetic_catalog


@pytest.fixture
def omega_n(params):
    return math.sqrt((params.k + params.alpha) / params.m)
