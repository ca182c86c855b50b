import math
import os

import click
import numpy as np

from megastable import create_app
from megastable.exceptions import InsufficientDataError, OutOfCatalogError
from megastable.services.analysis_service import AnalysisService, DEFAULT_OMEGA_GRID
from megastable.services.averaging_service import AveragingService
from megastable.services.catalog_service import CatalogService
from megastable.services.dynamics_service import DynamicsService
from megastable.services.experiment_service import ExperimentService
from megastable.services.export_service import ExportService
from megastable.services.integrator_service import IntegratorService
from megastable.utils.config_loader import load_run_config
from megastable.utils.decorators import handle_errors

CATALOG_COLUMNS = ['n', 'radius', 'E_mean', 'E_std', 'omega']
SWEEP_COLUMNS = ['F0', 'Omega', 'N', 'initial_n', 'final_n', 'Q', 'settled']
SIMULATE_T_FINAL = 600.0
DEFAULT_F0_GRID = np.linspace(0.0, 20.0, 400).tolist()
DEFAULT_GRID_F0 = np.linspace(0.25, 4.0, 40).tolist()
DEFAULT_GRID_N = list(range(1, 21))


RUN_OPTIONS = [
    click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='JSON 运行配置文件'),
    click.option('--out', default=None, help='输出目录（默认 $MEGASTABLE_OUT/<子命令>）'),
    click.option('--jobs', type=int, default=None, help='并行进程数（默认 $MEGASTABLE_JOBS）'),
    click.option('--deterministic', is_flag=True, help='不写导出时间，输出逐字节可复现'),
    click.option('--excel', is_flag=True, help='同时导出 Excel 表格'),
    click.option('--plot', is_flag=True, help='同时写出 gnuplot 脚本'),
]


def run_options(f):
    """所有子命令共享的选项"""
    for option in reversed(RUN_OPTIONS):
        f = option(f)
    return f


class RunContext:
    """一次子命令运行：配置、输出目录与导出开关"""

    def __init__(self, app, command, config_path, out, jobs, deterministic, excel, plot, **overrides):
        overrides.update(out=out, excel=excel or None, plot=plot or None)
        self.cfg = load_run_config(config_path, overrides)
        self.out = self.cfg.ensure_out(os.path.join(app.config.OUTPUT_ROOT, command))
        self.jobs = jobs if jobs is not None else app.config.JOBS
        self.deterministic = deterministic
        self.logger = app.logger

    def path(self, name):
        return os.path.join(self.out, name)

    def table(self, name, columns, rows, title):
        """写 CSV，并按开关写 Excel"""
        ExportService.export_to_csv(self.path(f'{name}.csv'), columns, rows, self.deterministic)
        if self.cfg.excel:
            dict_rows = [r if isinstance(r, dict) else dict(zip(columns, r)) for r in rows]
            ExportService.export_to_excel(self.path(f'{name}.xlsx'), dict_rows,
                                          ExportService.excel_columns(columns),
                                          sheet_name=name[:31], title=title,
                                          deterministic=self.deterministic)

    def json(self, name, data):
        ExportService.export_json(self.path(f'{name}.json'), data, self.deterministic)

    def plot(self, name, kind, **names):
        if self.cfg.plot:
            ExportService.write_plot(self.path(f'{name}.gp'), kind, **names)

    def catalog(self, n_max=None):
        cfg = self.cfg
        n_max = cfg.n_max if n_max is None else n_max
        click.echo(click.style(f'⚡ 构建轨道目录 n = 0..{n_max} ...', fg='cyan'))
        return CatalogService.build_catalog(cfg.system, n_max, cfg.integrator, cfg.settle_time, jobs=self.jobs)


def catalog_rows(catalog):
    return [{'n': o.n, 'radius': o.radius, 'E_mean': o.mean_energy, 'E_std': o.energy_std, 'omega': o.frequency}
            for o in catalog.orbits]


def _done(run):
    click.echo(click.style(f'✔ 结果已写入 {run.out}', fg='green'))


@click.group()
@click.option('--env', default=None, help='运行环境 development / production / testing')
@click.pass_context
@handle_errors
def cli(ctx, env):
    """MEGASTABLE 状态依赖时滞振子：量子化轨道、能谱与脉冲跃迁"""
    ctx.obj = create_app(env)


@cli.command('simulate')
@run_options
@click.option('--x0', type=float, default=None, help='常数初始历史 x0')
@click.option('--t-final', 't_final', type=float, default=None, help='积分终止时刻')
@click.option('--model', type=click.Choice(['dde', 'low_memory']), default=None, help='时滞方程或低记忆约化')
@click.pass_obj
@handle_errors
def simulate(app, **options):
    """
    单次积分：写出 t,x,y 轨迹与摘要 JSON
    """
    run = RunContext(app, 'simulate', **options)
    cfg = run.cfg
    p = cfg.system
    t_final = cfg.t_final or SIMULATE_T_FINAL
    click.echo(click.style(f'⚡ 积分 {cfg.model} 模型 x0={cfg.x0} t_final={t_final:g}', fg='cyan'))

    if cfg.model == 'dde':
        traj = IntegratorService.integrate_dde(DynamicsService.make_dde_rhs(p, cfg.pulse), cfg.x0,
                                               t_final, cfg.integrator)
    else:
        traj = IntegratorService.integrate_ode(DynamicsService.make_low_memory_rhs(p, cfg.pulse),
                                               (cfg.x0, 0.0), t_final, cfg.integrator)

    summary = {'model': cfg.model, 'x0': cfg.x0, 't_final': t_final, 'settled': False,
               'radius': None, 'frequency': None, 'n': None, 'orbit': 'no orbit',
               'fixed_point_warnings': len(traj.warnings), 'parameters': cfg.manifest()}
    settle = min(cfg.settle_time, 0.5 * t_final)
    try:
        candidate = AnalysisService.detect_limit_cycle(traj, settle)
    except InsufficientDataError as e:
        candidate = None
        click.echo(click.style(f'⚠ {e.message}', fg='yellow'))

    if candidate is not None:
        summary.update(settled=candidate.settled, radius=candidate.radius, frequency=candidate.frequency)
        if candidate.settled and candidate.radius >= 0.5 * CatalogService.seed(0, p):
            n = _classify(run, candidate)
            if n is not None:
                summary.update(n=n, orbit=f'n={n}')

    ExportService.export_trajectory(run.path('trajectory.csv'), traj, run.deterministic)
    run.json('summary', summary)
    run.plot('trajectory', 'trajectory', csv='trajectory.csv')
    run.plot('phase', 'phase', csv='trajectory.csv')
    if cfg.excel:
        ExportService.export_to_excel(run.path('summary.xlsx'), [summary],
                                      ExportService.excel_columns(['model', 'x0', 'settled', 'radius', 'frequency', 'orbit']),
                                      title='simulate', deterministic=run.deterministic)

    if summary['n'] is None:
        click.echo(click.style('⚠ 未检测到量子化轨道 (no orbit)', fg='yellow'))
    else:
        click.echo(f" - 轨道: \tn={summary['n']}")
        click.echo(f" - 半径: \t{summary['radius']:.6f}")
        click.echo(f" - 频率: \t{summary['frequency']:.6f}")
    _done(run)


def _classify(run, candidate):
    """按测得半径估计所需目录规模，建目录后分类"""
    p = run.cfg.system
    velocity = candidate.radius * p.omega_n
    n_est = max(0, int(round((velocity * 2.0 * p.lam / math.pi - 0.75) / 2.0)))
    catalog = run.catalog(n_est + 1)
    try:
        return CatalogService.classify_orbit(candidate, catalog)
    except OutOfCatalogError as e:
        click.echo(click.style(f'⚠ {e.message}', fg='yellow'))
        return None


@cli.command('catalog')
@run_options
@click.option('--n-max', 'n_max', type=int, default=None, help='最高轨道序号')
@click.pass_obj
@handle_errors
def catalog(app, **options):
    """
    构建轨道目录并拟合能谱 E_n = a n² + b n + c
    """
    run = RunContext(app, 'catalog', **options)
    p = run.cfg.system
    cat = run.catalog()
    run.table('catalog', CATALOG_COLUMNS, catalog_rows(cat), 'orbit catalog')

    predictions = [AveragingService.predict_radius(o.n, p, order).to_dict()
                   for order in AveragingService.ORDERS for o in cat.orbits]
    run.table('predictions', ['n', 'r_predicted', 'order'], predictions, 'radius predictions')

    series = []
    for orbit in cat.orbits:
        ts, energy = CatalogService.orbit_energy_series(orbit, p, run.cfg.integrator)
        series.extend({'n': orbit.n, 't': t, 'E': e} for t, e in zip(ts, energy))
    ExportService.export_to_csv(run.path('energy_series.csv'), ['n', 't', 'E'], series, run.deterministic)

    run.plot('catalog', 'catalog', csv='catalog.csv', predictions='predictions.csv', m=repr(p.m))
    run.plot('energy_series', 'energy', csv='energy_series.csv')

    omegas = [o.frequency for o in cat.orbits]
    click.echo(f' - 轨道数: \t{len(cat)}')
    click.echo(f' - 频率范围: \t{min(omegas):.4f} .. {max(omegas):.4f}')

    if len(cat) < 4:
        click.echo(click.style(f'⚠ 能谱拟合需要至少 4 条轨道，当前 {len(cat)} 条，已跳过拟合', fg='yellow'))
    else:
        fit = AnalysisService.fit_quadratic_spectrum(cat)
        run.json('spectrum_fit', dict(fit.to_dict(), parameters=run.cfg.manifest()))
        run.plot('spectrum', 'spectrum', csv='catalog.csv', a=repr(fit.a), b=repr(fit.b), c=repr(fit.c))
        click.echo(f' - 拟合: \ta={fit.a:.4f} b={fit.b:.4f} c={fit.c:.4f} (R²={fit.r_squared:.6f})')
    _done(run)


@cli.command('transition')
@run_options
@click.option('--export-trajectory', is_flag=True, help='写出跃迁轨迹 t,x,y')
@click.option('--initial-n', 'initial_n', type=int, default=None, help='初始轨道序号')
@click.option('--n-max', 'n_max', type=int, default=None, help='目录最高轨道序号')
@click.pass_obj
@handle_errors
def transition(app, export_trajectory, **options):
    """
    单次脉冲驱动跃迁
    """
    run = RunContext(app, 'transition', **options)
    cfg = run.cfg
    cat = run.catalog()
    run.table('catalog', CATALOG_COLUMNS, catalog_rows(cat), 'orbit catalog')

    pulse = cfg.pulse_or_default
    click.echo(click.style(f'⚡ 脉冲 F0={pulse.F0:g} Ω={pulse.Omega:g} N={pulse.N} 自轨道 n={cfg.initial_n}', fg='cyan'))
    result = ExperimentService.run_transition(
        cfg.system, pulse, cfg.initial_n, cat, t_final=cfg.t_final, cfg=cfg.integrator,
        t_a=cfg.t_a, n_cycles=cfg.n_cycles, keep_trajectory=export_trajectory,
    )
    run.json('transition', result.to_dict())
    if export_trajectory:
        ExportService.export_trajectory(run.path('trajectory.csv'), result.trajectory, run.deterministic)
        run.plot('trajectory', 'trajectory', csv='trajectory.csv')

    click.echo(f' - 跃迁: \t{result.initial_n} -> {result.final_n}')
    click.echo(f' - Q: \t{result.Q:.6f}')
    if not result.settled:
        click.echo(click.style('⚠ 脉冲后轨道未稳定（可能处于暂态准周期或混沌）', fg='yellow'))
    _done(run)


@cli.command('sweep')
@run_options
@click.option('--mode', type=click.Choice(['omega', 'amplitude', 'grid']), default=None, help='扫描类型')
@click.option('--initial-n', 'initial_n', type=int, default=None, help='初始轨道序号')
@click.option('--n-max', 'n_max', type=int, default=None, help='目录最高轨道序号')
@click.pass_obj
@handle_errors
def sweep(app, **options):
    """
    参数扫描：共振曲线 (omega)、锁幅平台 (amplitude)、(F0, N) 网格 (grid)
    """
    run = RunContext(app, 'sweep', **options)
    cfg = run.cfg
    cat = run.catalog()
    template = cfg.pulse_or_default
    common = dict(jobs=run.jobs, cfg=cfg.integrator, n_cycles=cfg.n_cycles)

    if cfg.mode == 'omega':
        grid = cfg.omega_grid or DEFAULT_OMEGA_GRID.tolist()
        result = ExperimentService.sweep_frequency(cfg.system, template, grid, cfg.initial_n, cat, **common)
        q = result.values('Q')
        peak = int(np.nanargmax(q)) if np.isfinite(q).any() else None
        if peak is not None:
            click.echo(f' - 共振峰: \tΩ={grid[peak]:.4f} Q={q[peak]:.4f}')
        kind = 'resonance'
    elif cfg.mode == 'amplitude':
        grid = cfg.F0_grid or DEFAULT_F0_GRID
        result = ExperimentService.sweep_amplitude(cfg.system, template, grid, cfg.initial_n, cat, **common)
        plateaus = [pl for pl in AnalysisService.find_plateaus(result) if pl['length'] >= 2]
        click.echo(f' - 平台数: \t{len(plateaus)}')
        kind = 'plateau'
    else:
        f_grid = cfg.F0_grid or DEFAULT_GRID_F0
        n_grid = cfg.N_grid or DEFAULT_GRID_N
        result = ExperimentService.sweep_grid(cfg.system, template, f_grid, n_grid, cfg.initial_n, cat, **common)
        ExportService.export_matrix(run.path('grid_Q.csv'), 'N', n_grid, 'F0', f_grid,
                                    result.values('Q'), run.deterministic)
        ExportService.export_matrix(run.path('grid_final_n.csv'), 'N', n_grid, 'F0', f_grid,
                                    result.values('final_n'), run.deterministic)
        run.json('grid_manifest', {
            'F0_grid': list(f_grid), 'N_grid': list(n_grid), 'initial_n': cfg.initial_n,
            'Omega': AveragingService.predicted_frequency(cfg.system),
            'parameters': cfg.manifest(), 'trend': AnalysisService.grid_trend(result),
        })
        run.plot('grid', 'grid', csv='grid_Q.csv')
        kind = None

    run.table('sweep', SWEEP_COLUMNS, result.rows(), f'{cfg.mode} sweep')
    if kind:
        run.plot(kind, kind, csv='sweep.csv')
    flagged = sum(1 for r in result.records if r.error)
    if flagged:
        click.echo(click.style(f'⚠ {flagged} 个扫描点失败，已在记录中标记', fg='yellow'))
    _done(run)


@cli.command('roots')
@run_options
@click.option('--r-max', 'r_max', type=float, default=None, help='根扫描上限')
@click.option('--n-max', 'n_max', type=int, default=None, help='预测的最高轨道序号')
@click.pass_obj
@handle_errors
def roots(app, **options):
    """
    平均化径向方程的根、极限环计数与轨道半径预测
    """
    run = RunContext(app, 'roots', **options)
    cfg = run.cfg
    p = cfg.system
    found = AveragingService.find_roots(p.mu, p.eps, cfg.r_max)
    run.table('roots', ['n', 'r', 'stable'],
              [{'n': r.index, 'r': r.r, 'stable': r.stable} for r in found], 'averaged roots')
    predictions = [AveragingService.predict_radius(n, p, order).to_dict()
                   for order in AveragingService.ORDERS for n in range(cfg.n_max + 1)]
    run.table('predictions', ['n', 'r_predicted', 'order'], predictions, 'radius predictions')

    click.echo(f' - 根数: \t{len(found)}（稳定 {sum(r.stable for r in found)}）')
    if p.mu >= 0:
        count = AveragingService.count_limit_cycles(p.mu, p.eps)
        click.echo(f' - 极限环数 N_c: \t{"unbounded" if math.isinf(count) else count}')
    _done(run)
