"""Small shared helpers.

run_deep executes a function on a worker thread with a large stack so that
recursive passes can handle very deep trees (combs) without tripping the
interpreter's conservative recursion ceiling on the main thread.
"""

from __future__ import annotations

import functools
import sys
import threading

_DEEP_STACK_BYTES = 512 * 1024 * 1024
_DEEP_RECURSION_LIMIT = 1_000_000

_lock = threading.Lock()
_local = threading.local()
_deep_users = 0
_saved_limit = None


def run_deep(fn, *args, **kwargs):
    """Call fn(*args, **kwargs) with a large stack; nested calls run inline.

    The interpreter recursion limit is process-global, so it is raised while
    any deep worker runs and restored when the last one finishes.
    """
    global _deep_users, _saved_limit
    if getattr(_local, "active", False):
        return fn(*args, **kwargs)

    box: dict = {}

    def target():
        _local.active = True
        try:
            box["value"] = fn(*args, **kwargs)
        except BaseException as exc:  # propagated to the caller below
            box["error"] = exc
        finally:
            _local.active = False

    with _lock:
        if _deep_users == 0:
            _saved_limit = sys.getrecursionlimit()
            if _saved_limit < _DEEP_RECURSION_LIMIT:
                sys.setrecursionlimit(_DEEP_RECURSION_LIMIT)
        _deep_users += 1
        old_size = threading.stack_size(_DEEP_STACK_BYTES)
        try:
            thread = threading.Thread(target=target, name="lowdepth-deep")
            thread.start()
        finally:
            threading.stack_size(old_size)
    try:
        thread.join()
    finally:
        with _lock:
            _deep_users -= 1
            if _deep_users == 0 and _saved_limit is not None:
                sys.setrecursionlimit(_saved_limit)
    if "error" in box:
        raise box["error"]
    return box["value"]


def deep(fn):
    """Decorator form of run_deep for pass entry points."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return run_deep(fn, *args, **kwargs)

    return wrapper


def ceil_log2(n: int) -> int:
    """Smallest j with 2**j >= n, for n >= 1."""
    if n < 1:
        raise ValueError(f"ceil_log2 needs n >= 1, got {n}")
    return (n - 1).bit_length()


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)
