import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "TODA_BRANE_THREADS"


def max_workers() -> int:
    raw = os.environ.get(ENV_THREADS, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn, items):
    """Ordered map, threaded when TODA_BRANE_THREADS > 1."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
