"""
参数验证器
"""
import math

from megastable.exceptions import ConfigurationError


def validate_finite(name, value):
    """验证为有限实数"""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f'{name} 必须是数值，收到 {value!r}', payload={'field': name})
    if not math.isfinite(value):
        raise ConfigurationError(f'{name} 必须是有限数值', payload={'field': name})
    return value


def validate_positive_number(name, value):
    """验证正数"""
    value = validate_finite(name, value)
    if value <= 0:
        raise ConfigurationError(f'{name} 必须大于0，收到 {value}', payload={'field': name})
    return value


def validate_non_negative(name, value):
    """验证非负数"""
    value = validate_finite(name, value)
    if value < 0:
        raise ConfigurationError(f'{name} 不能为负，收到 {value}', payload={'field': name})
    return value


def validate_min_int(name, value, minimum):
    """验证整数且不小于下限"""
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigurationError(f'{name} 必须是整数，收到 {value!r}', payload={'field': name})
    value = int(value)
    if value < minimum:
        raise ConfigurationError(f'{name} 不能小于 {minimum}，收到 {value}', payload={'field': name})
    return value


def validate_increasing(name, grid):
    """验证网格非空且严格递增"""
    values = [validate_finite(name, v) for v in grid]
    if not values:
        raise ConfigurationError(f'{name} 网格不能为空', payload={'field': name})
    for a, b in zip(values, values[1:]):
        if b <= a:
            raise ConfigurationError(f'{name} 网格必须严格递增', payload={'field': name})
    return values
