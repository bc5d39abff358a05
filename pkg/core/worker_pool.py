# core/worker_pool.py
# Bounded thread pool for independent grid cells keyed by their coordinates

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, Hashable, Mapping, TypeVar

T = TypeVar('T')


def run_keyed_jobs(jobs: Mapping[Hashable, Callable[[], T]], max_workers: int = 1) -> Dict[Hashable, T]:
    """
    Run zero-argument jobs and return their results keyed like `jobs`, in the
    insertion order of `jobs` regardless of completion order.

    If any job raises, the exception of the first failing job in insertion
    order is re-raised after all jobs have finished. max_workers=1 runs inline.
    """
    if max_workers < 1:
        raise ValueError(f"max_workers must be >= 1, got {max_workers}")

    results: Dict[Hashable, T] = {}
    errors: Dict[Hashable, BaseException] = {}

    if max_workers == 1 or len(jobs) <= 1:
        for key, job in jobs.items():
            try:
                results[key] = job()
            except Exception as e:
                errors[key] = e
    else:
        with ThreadPoolExecutor(max_workers=min(max_workers, len(jobs))) as executor:
            futures = {executor.submit(job): key for key, job in jobs.items()}
            for future in as_completed(futures):
                key = futures[future]
                try:
                    results[key] = future.result()
                except Exception as e:
                    errors[key] = e

    for key in jobs:
        if key in errors:
            raise errors[key]
    return {key: results[key] for key in jobs}
