import logging
import os
from dataclasses import dataclass

import colorlog

from config import config
from megastable.exceptions import ConfigurationError
from megastable.extensions import logger

__version__ = '1.0.0'


@dataclass
class AppContext:
    """命令行运行上下文：配置类 + 包 logger，经 click ctx.obj 传递"""

    config: type
    logger: logging.Logger
    config_name: str = 'default'

    @property
    def debug(self):
        return bool(self.config.DEBUG)


def create_app(config_name=None):
    """MEGASTABLE 应用工厂函数"""
    config_name = config_name or os.environ.get('MEGASTABLE_ENV', 'default')
    if config_name not in config:
        raise ConfigurationError(f'未知运行环境: {config_name}', payload={'field': 'MEGASTABLE_ENV'})

    # 1. 加载配置
    app = AppContext(config=config[config_name], logger=logger, config_name=config_name)

    # 2. 配置日志
    configure_logging(app)

    # 3. 环境初始化（生产环境追加文件日志）
    app.config.init_app(app)

    return app


def configure_logging(app):
    """配置彩色控制台日志，提升开发体验"""
    for handler in list(app.logger.handlers):
        if not isinstance(handler, logging.NullHandler):
            app.logger.removeHandler(handler)
            handler.close()
    app.logger.setLevel(getattr(logging, app.config.LOG_LEVEL, logging.INFO))
    app.logger.propagate = False

    if app.debug or app.config.TESTING:
        handler = logging.StreamHandler()
        handler.setLevel(logging.DEBUG)

        formatter = colorlog.ColoredFormatter(
            "%(log_color)s[%(asctime)s] %(levelname)-8s%(reset)s %(blue)s%(message)s",
            datefmt="%H:%M:%S",
            reset=True,
            log_colors={
                'DEBUG':    'cyan',
                'INFO':     'green',
                'WARNING':  'yellow',
                'ERROR':    'red',
                'CRITICAL': 'red,bg_white',
            },
            secondary_log_colors={},
            style='%'
        )
        handler.setFormatter(formatter)
        app.logger.addHandler(handler)
