import dataclasses
from datetime import datetime

import numpy as np


class BaseModel:
    """
    MEGASTABLE 值对象基类（配合 frozen dataclass 使用）
    包含：序列化 to_dict / from_dict，字段别名映射
    """

    # 字段名 -> 外部 JSON 键名（例如 lam -> lambda）
    __aliases__ = {}

    def to_dict(self):
        """
        通用序列化方法：转换为字典，便于写出 JSON。
        过滤掉以 '_' 开头的私有字段，numpy 数组转为列表。
        """
        data = {}
        for f in dataclasses.fields(self):
            if f.name.startswith('_') or not f.repr:
                continue
            val = getattr(self, f.name)
            key = self.__aliases__.get(f.name, f.name)
            data[key] = _plain(val)
        return data

    @classmethod
    def from_dict(cls, data):
        """从外部字典构造，忽略不认识的键"""
        reverse = {v: k for k, v in cls.__aliases__.items()}
        names = {f.name for f in dataclasses.fields(cls) if f.init}
        kwargs = {}
        for key, val in (data or {}).items():
            name = reverse.get(key, key)
            if name in names:
                kwargs[name] = val
        return cls(**kwargs)


def _plain(val):
    if isinstance(val, BaseModel):
        return val.to_dict()
    if isinstance(val, np.ndarray):
        return val.tolist()
    if isinstance(val, (np.floating, np.integer, np.bool_)):
        return val.item()
    if isinstance(val, datetime):
        return val.isoformat()
    if isinstance(val, (list, tuple)):
        return [_plain(v) for v in val]
    if isinstance(val, dict):
        return {k: _plain(v) for k, v in val.items()}
    return val
