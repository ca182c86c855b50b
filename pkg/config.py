import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from dotenv import load_dotenv

load_dotenv()
basedir = os.path.abspath(os.path.dirname(__file__))

# 进程池 worker 的日志也走同一 logger，格式里带上进程名
PLAIN_LOG_FORMAT = '%(asctime)s %(levelname)s [%(processName)s] %(message)s'


class Config:
    """运行环境基础配置"""
    DEBUG = False
    TESTING = False

    # 输出根目录（命令行 --out 优先）
    OUTPUT_ROOT = os.environ.get('MEGASTABLE_OUT') or os.path.join(basedir, 'output')

    # 默认并行进程数（命令行 --jobs 优先）
    JOBS = int(os.environ.get('MEGASTABLE_JOBS', '1'))

    LOG_LEVEL = os.environ.get('MEGASTABLE_LOG_LEVEL', 'INFO').upper()
    LOG_FILE = os.environ.get('MEGASTABLE_LOG_FILE') or os.path.join('logs', 'megastable.log')

    REPRODUCTIONS_DIR = os.path.join(basedir, 'reproductions')

    @staticmethod
    def init_app(app):
        pass


class DevelopmentConfig(Config):
    DEBUG = True


class ProductionConfig(Config):
    """
    批量计算节点：无彩色输出，stdout 与滚动文件各一份纯文本日志
    """

    @classmethod
    def init_app(cls, app):
        Config.init_app(app)
        formatter = logging.Formatter(PLAIN_LOG_FORMAT)

        log_dir = os.path.dirname(cls.LOG_FILE)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

        for handler in (logging.StreamHandler(sys.stdout),
                        RotatingFileHandler(cls.LOG_FILE, maxBytes=10240, backupCount=10)):
            handler.setFormatter(formatter)
            handler.setLevel(app.logger.level)
            app.logger.addHandler(handler)

        app.logger.info(f'megastable 启动 (jobs={cls.JOBS}, out={cls.OUTPUT_ROOT})')


class TestingConfig(Config):
    TESTING = True
    JOBS = 1
    LOG_LEVEL = 'WARNING'


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig,
}
