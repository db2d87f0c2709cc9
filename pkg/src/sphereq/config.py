"""Small runtime knobs shared by the audit machinery and the CLI."""

from __future__ import annotations

import os

THREADS_ENV = "SPHERE_EQ_THREADS"


def worker_count():
    """Worker cap from the SPHERE_EQ_THREADS environment variable.

    0 or unset means "auto"; at desk scale the per-task work is too small
    for a pool to win, so auto resolves to single-threaded execution.
    Values > 1 force a thread pool of that size.
    """
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n <= 1:
        return 1
    return n
