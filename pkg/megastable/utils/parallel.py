"""
有序并行映射
结果顺序与输入一致，与进程数无关
"""
from multiprocessing import Pool

from megastable.extensions import logger


def ordered_map(func, items, jobs=1):
    """
    对 items 逐项调用 func，按输入顺序返回结果

    Args:
        func: 模块级函数（需可 pickle）
        items: 参数序列，每项为可 pickle 的值对象
        jobs: 进程数，<= 1 时在当前进程顺序执行

    Returns:
        list
    """
    items = list(items)
    jobs = min(int(jobs or 1), len(items))
    if jobs <= 1:
        return [func(item) for item in items]
    logger.debug(f'dispatching {len(items)} tasks to {jobs} workers')
    with Pool(jobs) as pool:
        return pool.map(func, items, chunksize=1)
