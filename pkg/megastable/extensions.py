import logging

# 包级 logger（handler 由 create_app 中的 configure_logging 绑定）
logger = logging.getLogger('megastable')
logger.addHandler(logging.NullHandler())
