"""
运行配置加载
扁平 JSON（模型参数键 + 积分器键 + 实验键），命令行参数覆盖文件值
"""
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from megastable.exceptions import ConfigurationError
from megastable.models.base import BaseModel
from megastable.models.params import IntegratorConfig, PulseParams, SystemParams
from megastable.utils.validators import (
    validate_finite, validate_increasing, validate_min_int, validate_positive_number
)

SYSTEM_KEYS = ('m', 'zeta', 'k', 'alpha', 'lambda', 'tau0')
PULSE_KEYS = ('F0', 'Omega', 'phi', 't0', 'N')
INTEGRATOR_KEYS = ('h', 'max_fixed_point_iters', 'fixed_point_tol')
EXPERIMENT_KEYS = (
    'x0', 't_final', 'model', 'n_max', 'settle_time', 'initial_n', 't_a', 'n_cycles',
    'omega_grid', 'F0_grid', 'N_grid', 'mode', 'excel', 'plot', 'r_max', 'out',
)
KNOWN_KEYS = frozenset(SYSTEM_KEYS + PULSE_KEYS + INTEGRATOR_KEYS + EXPERIMENT_KEYS)

MODELS = ('dde', 'low_memory')
SWEEP_MODES = ('omega', 'amplitude', 'grid')


@dataclass(frozen=True)
class RunConfig(BaseModel):
    """一次命令行运行的完整配置"""

    system: SystemParams = field(default_factory=SystemParams)
    pulse: Optional[PulseParams] = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    x0: float = 1.0
    t_final: Optional[float] = None
    model: str = 'dde'
    n_max: int = 10
    settle_time: float = 300.0
    initial_n: int = 0
    t_a: Optional[float] = None
    n_cycles: int = 10
    omega_grid: Optional[List[float]] = None
    F0_grid: Optional[List[float]] = None
    N_grid: Optional[List[int]] = None
    mode: str = 'omega'
    excel: bool = False
    plot: bool = False
    r_max: float = 40.0
    out: Optional[str] = None

    @property
    def pulse_or_default(self) -> PulseParams:
        return self.pulse or PulseParams()

    def ensure_out(self, default: str) -> str:
        """确认输出目录可创建"""
        out = self.out or default
        try:
            os.makedirs(out, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(f'输出目录无法创建: {out} ({e})', payload={'field': 'out'})
        return out

    def manifest(self) -> Dict[str, Any]:
        """写入结果 JSON 的扁平参数清单"""
        data = dict(self.system.to_dict())
        data.update(self.integrator.to_dict())
        if self.pulse is not None:
            data.update(self.pulse.to_dict())
        return data


def parse_grid(name, value):
    """网格可为列表或 {"start", "stop", "num"}"""
    if value is None:
        return None
    if isinstance(value, dict):
        missing = {'start', 'stop', 'num'} - set(value)
        if missing:
            raise ConfigurationError(f'{name} 缺少 {sorted(missing)}', payload={'field': name})
        num = validate_min_int(f'{name}.num', value['num'], 1)
        value = np.linspace(validate_finite(f'{name}.start', value['start']),
                            validate_finite(f'{name}.stop', value['stop']), num).tolist()
    if not isinstance(value, (list, tuple)):
        raise ConfigurationError(f'{name} 必须是列表或 start/stop/num 对象', payload={'field': name})
    return validate_increasing(name, value)


def read_config_file(path: str) -> Dict[str, Any]:
    """读取 JSON 配置文件，解析失败时给出行列位置"""
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f'配置文件不存在: {path}', payload={'path': path})
    except json.JSONDecodeError as e:
        raise ConfigurationError(f'配置文件解析失败 {path}:{e.lineno}:{e.colno}: {e.msg}',
                                 payload={'path': path, 'line': e.lineno, 'column': e.colno})
    if not isinstance(data, dict):
        raise ConfigurationError(f'配置文件必须是 JSON 对象: {path}', payload={'path': path})
    return data


def build_run_config(data: Dict[str, Any]) -> RunConfig:
    """
    由扁平字典构造 RunConfig

    Raises:
        ConfigurationError: 未知键、非数值、非递增网格或违反参数约束
    """
    unknown = sorted(set(data) - KNOWN_KEYS)
    if unknown:
        raise ConfigurationError(f'未知配置项: {", ".join(unknown)}', payload={'keys': unknown})

    def pick(keys):
        return {k: data[k] for k in keys if k in data}

    system = SystemParams.from_dict(pick(SYSTEM_KEYS))
    pulse_data = pick(PULSE_KEYS)
    pulse = PulseParams.from_dict(pulse_data) if pulse_data else None
    integrator = IntegratorConfig.from_dict(pick(INTEGRATOR_KEYS))

    model = data.get('model', 'dde')
    if model not in MODELS:
        raise ConfigurationError(f'model 必须是 {MODELS} 之一，收到 {model!r}', payload={'field': 'model'})
    mode = data.get('mode', 'omega')
    if mode not in SWEEP_MODES:
        raise ConfigurationError(f'mode 必须是 {SWEEP_MODES} 之一，收到 {mode!r}', payload={'field': 'mode'})

    def optional_positive(key):
        return validate_positive_number(key, data[key]) if data.get(key) is not None else None

    n_grid = parse_grid('N_grid', data.get('N_grid'))
    return RunConfig(
        system=system,
        pulse=pulse,
        integrator=integrator,
        x0=validate_finite('x0', data.get('x0', 1.0)),
        t_final=optional_positive('t_final'),
        model=model,
        n_max=validate_min_int('n_max', data.get('n_max', 10), 0),
        settle_time=validate_positive_number('settle_time', data.get('settle_time', 300.0)),
        initial_n=validate_min_int('initial_n', data.get('initial_n', 0), 0),
        t_a=optional_positive('t_a'),
        n_cycles=validate_min_int('n_cycles', data.get('n_cycles', 10), 1),
        omega_grid=parse_grid('omega_grid', data.get('omega_grid')),
        F0_grid=parse_grid('F0_grid', data.get('F0_grid')),
        N_grid=[validate_min_int('N_grid', n, 1) for n in n_grid] if n_grid else None,
        mode=mode,
        excel=bool(data.get('excel', False)),
        plot=bool(data.get('plot', False)),
        r_max=validate_positive_number('r_max', data.get('r_max', 40.0)),
        out=data.get('out'),
    )


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """读取配置文件并叠加命令行覆盖项（值为 None 的覆盖项忽略）"""
    data = read_config_file(path) if path else {}
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_run_config(data)
