"""
实验编排服务
单次脉冲跃迁、共振曲线（扫 Ω）、锁幅平台（扫 F0）以及 (F0, N) 网格图
"""
import math
from typing import Optional, Sequence

from megastable.exceptions import ConfigurationError, MegastableException, SeedError
from megastable.extensions import logger
from megastable.models.orbit import OrbitCatalog
from megastable.models.params import IntegratorConfig, PulseParams, SystemParams
from megastable.models.results import SweepResult, TransitionResult
from megastable.services.analysis_service import AnalysisService, DEFAULT_N_CYCLES
from megastable.services.averaging_service import AveragingService
from megastable.services.catalog_service import CatalogService
from megastable.services.dynamics_service import DynamicsService
from megastable.services.integrator_service import IntegratorService
from megastable.utils.parallel import ordered_map
from megastable.utils.validators import validate_increasing

T_A_FLOOR = 500.0
GRID_T0 = 200.0
GRID_T_A_FLOOR = 400.0
PRE_PULSE_PERIODS = 8
SETTLE_MARGIN = 50.0
CATALOG_MARGIN = 2


def _transition_worker(task):
    """进程池任务：单点跃迁，异常写入记录而不中断扫描"""
    p, pulse, initial_n, catalog, options = task
    try:
        return ExperimentService.run_transition(p, pulse, initial_n, catalog, **options)
    except MegastableException as e:
        logger.warning(f'⚠️ 扫描点 F0={pulse.F0:g} Ω={pulse.Omega:g} N={pulse.N} 失败: {e.message}')
        return TransitionResult(params=p, pulse=pulse, initial_n=initial_n, final_n=None,
                                Q=math.nan, settled=False, error=e.message)


class ExperimentService:
    """数值实验编排"""

    @staticmethod
    def analysis_time(pulse: PulseParams, floor: float = T_A_FLOOR) -> float:
        """Q 分析起点 t_a = max(floor, t0 + δt + 100)"""
        return max(floor, pulse.t_end + 100.0)

    @staticmethod
    def default_t_final(p: SystemParams, t_a: float, n_cycles: int = DEFAULT_N_CYCLES) -> float:
        return t_a + n_cycles * 2.0 * math.pi / AveragingService.predicted_frequency(p) + SETTLE_MARGIN

    @staticmethod
    def run_transition(p: SystemParams, pulse: PulseParams, initial_n: int, catalog: OrbitCatalog,
                       t_final: Optional[float] = None, cfg: Optional[IntegratorConfig] = None,
                       t_a: Optional[float] = None, t_a_floor: float = T_A_FLOOR,
                       n_cycles: int = DEFAULT_N_CYCLES, omega_grid: Optional[Sequence[float]] = None,
                       keep_trajectory: bool = False) -> TransitionResult:
        """
        从轨道 initial_n 出发施加脉冲，分类脉冲后的稳定轨道并计算 Q

        Args:
            p: 系统参数
            pulse: 脉冲参数
            initial_n: 初始轨道序号（以目录半径为常数历史）
            catalog: 轨道目录
            t_final: 积分终止时刻，缺省 t_a + n_cycles·T + 50
            t_a: Q 分析起点，缺省按 analysis_time 规则
            keep_trajectory: 是否在结果中保留轨迹

        Raises:
            SeedError: 脉冲前分类与 initial_n 不一致
            ConfigurationError: 显式给出的 t_a 不晚于脉冲结束
        """
        if not 0 <= initial_n < len(catalog):
            raise SeedError(f'initial orbit n={initial_n} not in catalog (size {len(catalog)})')
        if t_a is not None and not t_a > pulse.t_end:
            raise ConfigurationError(
                f't_a={t_a:g} must be later than the pulse end t0 + 2πN/Ω = {pulse.t_end:g}',
                payload={'field': 't_a', 'pulse_end': pulse.t_end},
            )
        period = 2.0 * math.pi / AveragingService.predicted_frequency(p)
        t_a = ExperimentService.analysis_time(pulse, t_a_floor) if t_a is None else float(t_a)
        t_final = t_final or ExperimentService.default_t_final(p, t_a, n_cycles)

        x0 = catalog[initial_n].radius
        rhs = DynamicsService.make_dde_rhs(p, pulse)
        traj = IntegratorService.integrate_dde(rhs, x0, t_final, cfg)

        ExperimentService._check_seed(traj, pulse, initial_n, catalog, period)

        candidate = AnalysisService.detect_limit_cycle(traj, t_a)
        final_n = CatalogService.classify_orbit(candidate, catalog)
        spectrum = AnalysisService.response_spectrum(traj, t_a, n_cycles, period, omega_grid)
        if not candidate.settled:
            logger.warning(f'⚠️ 脉冲后未稳定（离散度 {candidate.spread:.2e}）')
        logger.debug(f'transition {initial_n} -> {final_n} Q={spectrum.Q:.4f}')
        return TransitionResult(
            params=p, pulse=pulse, initial_n=initial_n, final_n=final_n, Q=spectrum.Q,
            settled=candidate.settled, radius=candidate.radius, t_a=t_a,
            trajectory=traj if keep_trajectory else None,
        )

    @staticmethod
    def _check_seed(traj, pulse, initial_n, catalog, period):
        """脉冲前 8 个周期内的轨道必须仍是 initial_n"""
        t_start = pulse.t0 - PRE_PULSE_PERIODS * period
        if t_start <= 0:
            return
        maxima = AnalysisService.extrema(traj, t_start, pulse.t0)
        if maxima.size < 2:
            return
        before = CatalogService.classify_orbit(float(maxima.mean()), catalog)
        if before != initial_n:
            raise SeedError(f'pre-pulse orbit classified as n={before}, expected n={initial_n}',
                            payload={'classified': before, 'initial_n': initial_n})

    @staticmethod
    def required_orbit(p: SystemParams, pulse: PulseParams, initial_n: int) -> int:
        """
        脉冲可能到达的最高轨道序号（保守估计）

        线性共振包络：速度幅值增量不超过 F0/(2m)·min(δt, 2/|Ω-ω_n|)，
        再按 KB 半径公式换算为轨道序号，另留两级余量
        """
        if pulse.F0 == 0.0:
            return initial_n
        detuning = abs(pulse.Omega - AveragingService.predicted_frequency(p))
        window = pulse.delta_t if detuning == 0.0 else min(pulse.delta_t, 2.0 / detuning)
        v_max = AveragingService.predict_radius(initial_n, p).r_predicted + pulse.F0 * window / (2.0 * p.m)
        n = (2.0 * p.lam * v_max / math.pi - 0.75) / 2.0
        return max(initial_n, int(math.ceil(n))) + CATALOG_MARGIN

    @staticmethod
    def _sweep(axes, tasks, jobs):
        p, _, initial_n, catalog, options = tasks[0]
        needed = max(ExperimentService.required_orbit(p, t[1], initial_n) for t in tasks)
        if 0 <= initial_n < len(catalog) <= needed:
            catalog = CatalogService.extend_catalog(catalog, needed, options.get('cfg'), jobs=jobs)
            tasks = [task[:3] + (catalog,) + task[4:] for task in tasks]
        logger.info(f'🚀 扫描 {len(tasks)} 个点（jobs={jobs}）')
        records = ordered_map(_transition_worker, tasks, jobs)
        flagged = sum(1 for r in records if r.error)
        logger.info(f'✔ 扫描完成，失败 {flagged} 个点')
        return SweepResult(axes=axes, records=records)

    @staticmethod
    def sweep_frequency(p: SystemParams, template: PulseParams, omega_grid, initial_n: int,
                        catalog: OrbitCatalog, jobs: int = 1, **options) -> SweepResult:
        """共振曲线：固定其余参数，逐个 Ω 跃迁并记录 Q(Ω)"""
        grid = validate_increasing('Omega', omega_grid)
        tasks = [(p, template.evolve(Omega=w), initial_n, catalog, options) for w in grid]
        return ExperimentService._sweep((('Omega', grid),), tasks, jobs)

    @staticmethod
    def sweep_amplitude(p: SystemParams, template: PulseParams, F0_grid, initial_n: int,
                        catalog: OrbitCatalog, jobs: int = 1, **options) -> SweepResult:
        """锁幅曲线：逐个 F0 跃迁并记录 Q(F0) 与 final_n(F0)"""
        grid = validate_increasing('F0', F0_grid)
        tasks = [(p, template.evolve(F0=f), initial_n, catalog, options) for f in grid]
        return ExperimentService._sweep((('F0', grid),), tasks, jobs)

    @staticmethod
    def sweep_grid(p: SystemParams, template: PulseParams, F0_grid, N_grid, initial_n: int,
                   catalog: OrbitCatalog, jobs: int = 1, t0: float = GRID_T0,
                   t_a_floor: float = GRID_T_A_FLOOR, **options) -> SweepResult:
        """
        (F0, N) 全因子网格，Ω 固定为 ω_n

        记录顺序为 N 在外层、F0 在内层，矩阵行对应 N、列对应 F0
        """
        f_grid = validate_increasing('F0', F0_grid)
        n_grid = [int(n) for n in validate_increasing('N', N_grid)]
        base = template.evolve(Omega=AveragingService.predicted_frequency(p), t0=t0)
        options = dict(options, t_a_floor=t_a_floor)
        tasks = [(p, base.evolve(F0=f, N=n), initial_n, catalog, options)
                 for n in n_grid for f in f_grid]
        return ExperimentService._sweep((('N', n_grid), ('F0', f_grid)), tasks, jobs)


# 全局单例
experiment_service = ExperimentService()
