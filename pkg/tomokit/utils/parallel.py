"""
Thread-pool helpers. Output order always follows input order.
"""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "TOMOKIT_THREADS"


def worker_count():
    """Number of worker threads from TOMOKIT_THREADS (0 or unset = auto)."""
    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        pass

    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested


def parallel_map(fn, items, workers=None):
    """Map fn over items, possibly in threads; results keep input order."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
