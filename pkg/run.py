import os

from megastable.commands import cli

# 从环境变量获取运行环境，支持 dev 简写
config_name = os.getenv('MEGASTABLE_ENV') or 'default'
if config_name == 'dev':
    os.environ['MEGASTABLE_ENV'] = 'development'

if __name__ == '__main__':
    cli()
