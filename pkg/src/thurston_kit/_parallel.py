import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "THURSTON_KIT_THREADS"


def worker_count(requested=None) -> int:
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(ENV_THREADS)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, int(n))


def pmap(fn, items, workers=None) -> list:
    """Ordered map; results follow input order whatever the worker count."""
    items = list(items)
    n = worker_count(workers)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
