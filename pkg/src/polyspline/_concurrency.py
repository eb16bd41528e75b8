import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "POLYSPLINE_THREADS"


def max_workers(requested=None) -> int:
    cap = os.environ.get(ENV_THREADS)
    n = requested if requested is not None else (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(1, int(n))


def thread_map(fn, items, workers=None) -> list:
    """Order-preserving map, threaded when more than one worker is allowed."""
    items = list(items)
    n = max_workers(workers)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
