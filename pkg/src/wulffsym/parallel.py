"""Thread budget control.

The environment variable ``WULFFSYM_THREADS`` caps the number of worker
threads used for data-parallel loops (level sampling). Unset, the budget
defaults to the number of available cores. Results never depend on the
thread count: work is split into independent blocks merged in index order.
"""

import os

ENV_VAR = "WULFFSYM_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"{ENV_VAR} must be >= 1, got {value}")
    return value
