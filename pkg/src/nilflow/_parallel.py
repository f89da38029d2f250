"""Worker-count control and an order-preserving parallel map.

Results are returned in input order regardless of completion order, so output
written from mapped results is byte-identical for any worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    """Number of workers to use, capped by the NILFLOW_THREADS variable."""
    raw = os.environ.get("NILFLOW_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        n = os.cpu_count() or 1
    return max(1, n)


def ordered_map(fn, items):
    """Apply fn to each item, in parallel when more than one worker is
    configured; the result list follows the input order."""
    items = list(items)
    workers = min(worker_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
