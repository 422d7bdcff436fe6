"""Small shared utilities."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap():
    """Worker cap from FINSLERCOMP_THREADS (default 1 = sequential)."""
    raw = os.environ.get("FINSLERCOMP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def thread_map(fn, items):
    """Order-stable map, optionally fanned out across threads.

    Results are collected by index, so the output is identical for any
    worker count.
    """
    items = list(items)
    cap = thread_cap()
    if cap <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(cap, len(items))) as ex:
        return list(ex.map(fn, items))
