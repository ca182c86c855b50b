import sys
from functools import wraps

import click

from megastable.exceptions import MegastableException
from megastable.extensions import logger


def handle_errors(f):
    """
    将 MegastableException 转为命令行退出码
    (0 成功 / 1 数值失败 / 2 配置错误)
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except MegastableException as e:
            logger.error(f'{type(e).__name__}: {e.message}')
            click.echo(click.style(f'✘ {e.message}', fg='red'), err=True)
            sys.exit(e.code)
    return decorated_function
