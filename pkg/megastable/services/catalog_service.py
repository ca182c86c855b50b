"""
轨道目录服务 - 以常数历史逐级播种，构建量子化极限环目录并做最近邻分类
"""
import math
from typing import Optional, Union

import numpy as np

from megastable.exceptions import CatalogError, DomainError, OutOfCatalogError
from megastable.extensions import logger
from megastable.models.orbit import OrbitCandidate, OrbitCatalog, OrbitRecord
from megastable.models.params import IntegratorConfig, SystemParams
from megastable.models.trajectory import DenseTrajectory
from megastable.services.analysis_service import AnalysisService
from megastable.services.averaging_service import AveragingService
from megastable.services.dynamics_service import DynamicsService
from megastable.services.integrator_service import IntegratorService
from megastable.utils.parallel import ordered_map

DEFAULT_SETTLE_TIME = 300.0


def _measure_orbit(task):
    """进程池任务：(n, x0, p, cfg, settle_time, t_final) -> (OrbitRecord, 是否稳定)"""
    n, x0, p, cfg, settle_time, t_final = task
    traj = IntegratorService.integrate_dde(DynamicsService.make_dde_rhs(p), x0, t_final, cfg)
    return CatalogService.measure(traj, p, n, settle_time, x0)


class CatalogService:
    """轨道目录服务"""

    SAME_ORBIT_TOL = 0.01
    RETRY_FACTORS = (1.05, 0.95)
    CATALOG_REACH = 1.5

    @staticmethod
    def seed(n: int, p: SystemParams) -> float:
        """第 n 个轨道的常数历史种子：预测速度幅值除以 ω_n（位置幅值）"""
        return AveragingService.predict_radius(n, p).r_predicted / p.omega_n

    @staticmethod
    def measure(traj: DenseTrajectory, p: SystemParams, n: int, settle_time: float, x0: float = 0.0):
        """
        在稳定段上测量一条轨道

        Returns:
            (OrbitRecord, settled)
        """
        candidate = AnalysisService.detect_limit_cycle(traj, settle_time)
        e_mean, e_std = AnalysisService.mean_energy(traj, p, (settle_time, traj.t_final))
        record = OrbitRecord(
            n=n,
            radius=candidate.radius,
            mean_energy=e_mean,
            energy_std=e_std,
            frequency=candidate.frequency,
            phase_radius=math.sqrt(2.0 * e_mean / p.m),
            x0=float(x0),
        )
        return record, candidate.settled

    @staticmethod
    def _same(a: OrbitRecord, b: OrbitRecord) -> bool:
        return b.radius <= a.radius * (1.0 + CatalogService.SAME_ORBIT_TOL)

    @staticmethod
    def next_seed(n: int, records, p: SystemParams) -> float:
        """
        第 n 个轨道的种子

        已测得至少三条轨道时，用最后两条的实测半径线性外推；
        否则退回预测半径 seed(n, p)
        """
        if len(records) < 3:
            return CatalogService.seed(n, p)
        last, prev = records[-1], records[-2]
        spacing = last.radius - prev.radius
        return last.radius + (n - last.n) * spacing

    @staticmethod
    def build_catalog(p: SystemParams, n_max: int, cfg: Optional[IntegratorConfig] = None,
                      settle_time: float = DEFAULT_SETTLE_TIME, t_final: Optional[float] = None,
                      jobs: int = 1) -> OrbitCatalog:
        """
        构建 n = 0..n_max 的轨道目录

        Args:
            p: 系统参数
            n_max: 最高轨道序号
            cfg: 积分器配置
            settle_time: 暂态时长
            t_final: 每次积分终止时刻，缺省 settle_time + 300
            jobs: 并行进程数

        Returns:
            OrbitCatalog

        Raises:
            CatalogError: 重试后半径仍不严格递增
        """
        if n_max < 0:
            raise DomainError(f'n_max must be >= 0, got {n_max}')
        records = CatalogService._grow([], p, n_max, cfg, settle_time, t_final, jobs)
        return OrbitCatalog(orbits=tuple(records), params=p)

    @staticmethod
    def extend_catalog(catalog: OrbitCatalog, n_max: int, cfg: Optional[IntegratorConfig] = None,
                       settle_time: float = DEFAULT_SETTLE_TIME, t_final: Optional[float] = None,
                       jobs: int = 1) -> OrbitCatalog:
        """在已有目录之上继续测量到 n_max，已测轨道保持不变"""
        if n_max < len(catalog):
            return catalog
        logger.info(f'⚡ 扩展轨道目录 n = {len(catalog)}..{n_max}')
        records = CatalogService._grow(list(catalog.orbits), catalog.params, n_max, cfg,
                                       settle_time, t_final, jobs)
        return OrbitCatalog(orbits=tuple(records), params=catalog.params)

    @staticmethod
    def _grow(records, p, n_max, cfg, settle_time, t_final, jobs):
        """
        按 jobs 个一批并行测量，每批种子由已测轨道外推

        实测间距与预测间距的偏差随 n 累积，整体按预测播种会落入相邻吸引域
        """
        cfg = cfg or IntegratorConfig()
        t_final = t_final or settle_time + 300.0
        batch = max(1, int(jobs))
        n = len(records)
        while n <= n_max:
            ns = range(n, min(n + batch, n_max + 1))
            tasks = [(k, CatalogService.next_seed(k, records, p), p, cfg, settle_time, t_final) for k in ns]
            for task, (record, settled) in zip(tasks, ordered_map(_measure_orbit, tasks, jobs)):
                k = task[0]
                if not settled:
                    logger.warning(f'⚠️ 轨道 n={k} 在 t={t_final:g} 前未完全稳定')
                if records and CatalogService._same(records[-1], record):
                    record = CatalogService._retry(k, task, records[-1])
                records.append(record)
                logger.info(f'✔ 轨道 n={k} 半径={record.radius:.4f} E={record.mean_energy:.4f} '
                            f'ω={record.frequency:.4f}')
            n += len(ns)
        return records

    @staticmethod
    def _retry(n, task, previous: OrbitRecord) -> OrbitRecord:
        """两个种子收敛到同一轨道时，以 ±5% 扰动种子重试"""
        _, x0, p, cfg, settle_time, t_final = task
        for factor in CatalogService.RETRY_FACTORS:
            logger.warning(f'⚠️ 轨道 n={n} 与 n={previous.n} 重合，种子 x0 × {factor} 重试')
            record, _ = _measure_orbit((n, x0 * factor, p, cfg, settle_time, t_final))
            if not CatalogService._same(previous, record):
                return record
        raise CatalogError(n)

    @staticmethod
    def orbit_energy_series(record: OrbitRecord, p: SystemParams, cfg: Optional[IntegratorConfig] = None,
                            periods: float = 2.0):
        """从转折点 (radius, 0) 出发沿轨道积分若干周期，返回能量时间序列 (t, E)"""
        t_final = periods * record.period
        traj = IntegratorService.integrate_dde(DynamicsService.make_dde_rhs(p), record.radius, t_final, cfg)
        return AnalysisService.energy_series(traj, p)

    @staticmethod
    def classify_orbit(source: Union[float, OrbitCandidate, DenseTrajectory], catalog: OrbitCatalog,
                       settle_time: Optional[float] = None) -> int:
        """
        最近半径分类，距离相等时取较小的 n

        Args:
            source: 半径、检测结果或轨迹（轨迹需给出 settle_time）
            catalog: 轨道目录

        Raises:
            OutOfCatalogError: 半径超过目录最大半径的 1.5 倍
        """
        if not len(catalog):
            raise OutOfCatalogError('empty orbit catalog')
        if isinstance(source, DenseTrajectory):
            source = AnalysisService.detect_limit_cycle(source, settle_time or 0.0)
        radius = source.radius if isinstance(source, OrbitCandidate) else float(source)
        if not radius >= 0:
            raise DomainError(f'orbit radius must be non-negative, got {radius}')
        limit = CatalogService.CATALOG_REACH * catalog.largest_radius
        if radius > limit:
            raise OutOfCatalogError(
                f'radius {radius:.6g} beyond catalog reach {limit:.6g}; extend the catalog',
                payload={'radius': radius, 'n_max': len(catalog) - 1},
            )
        return int(np.argmin(np.abs(np.asarray(catalog.radii) - radius)))


# 全局单例
catalog_service = CatalogService()
