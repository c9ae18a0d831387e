"""Small shared helpers."""

import os


def worker_count() -> int:
    """Parallelism cap: KURASYNC_THREADS when set, else a modest default."""
    env = os.environ.get("KURASYNC_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)
