class MegastableException(Exception):
    """MEGASTABLE 基础异常类，code 即命令行退出码"""
    def __init__(self, message, code=1, payload=None):
        super().__init__(message)
        self.message = message
        self.code = code
        self.payload = payload

    def to_dict(self):
        rv = dict(self.payload or ())
        rv['message'] = self.message
        rv['code'] = self.code
        rv['success'] = False
        return rv


class ConfigurationError(MegastableException):
    """配置错误（参数、配置文件、网格）"""
    def __init__(self, message="Invalid configuration", payload=None):
        super().__init__(message, code=2, payload=payload)


class NumericalError(MegastableException):
    """数值计算失败"""
    def __init__(self, message="Numerical failure", payload=None):
        super().__init__(message, code=1, payload=payload)


class DivergenceError(NumericalError):
    """积分发散（溢出或 NaN），携带失败时刻"""
    def __init__(self, t_fail, message=None):
        self.t_fail = t_fail
        super().__init__(message or f"integration diverged at t={t_fail:.6g}",
                         payload={'t_fail': t_fail})


class OutOfRangeError(NumericalError):
    """查询时间超出轨迹范围"""


class DomainError(NumericalError):
    """函数定义域错误"""


class InsufficientDataError(NumericalError):
    """数据不足（极值点、过零点或窗口太短）"""


class FitError(NumericalError):
    """谱拟合失败（点数不足或矩阵秩亏）"""


class CatalogError(NumericalError):
    """轨道目录构建失败，携带出错的轨道序号"""
    def __init__(self, n, message=None):
        self.n = n
        super().__init__(message or f"catalog construction failed at orbit n={n}",
                         payload={'n': n})


class OutOfCatalogError(NumericalError):
    """半径超出目录覆盖范围，需要扩展目录"""


class SeedError(NumericalError):
    """脉冲前轨道分类与初始轨道不一致"""
