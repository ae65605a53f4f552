"""Order-preserving fan-out of independent solver runs."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("GLREF_JOBS", "1")))
    except ValueError:
        return 1


def pmap(fn, tasks, jobs=1, progress=None):
    """``[fn(t) for t in tasks]``, optionally in worker processes.

    Results come back in task order regardless of completion order, so
    the output does not depend on ``jobs``.
    """
    tasks = list(tasks)
    if jobs is None:
        jobs = default_jobs()
    if jobs <= 1 or len(tasks) <= 1:
        out = []
        for i, t in enumerate(tasks):
            out.append(fn(t))
            if progress:
                progress(i + 1, len(tasks))
        return out
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        out = []
        for i, r in enumerate(ex.map(fn, tasks)):
            out.append(r)
            if progress:
                progress(i + 1, len(tasks))
        return out
