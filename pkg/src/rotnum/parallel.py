"""Replica fan-out. Results come back in task order, so merges are deterministic."""

from concurrent.futures import ProcessPoolExecutor


def map_tasks(fn, tasks, workers: int = 1):
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
