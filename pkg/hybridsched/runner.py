import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor

from .bff import bff_schedule
from .eclipse import eclipse_schedule
from .twohop import two_hop_schedule
from .utils import ArgumentError

logger = logging.getLogger(__name__)

ALGORITHMS = ("eclipse", "twohop", "bff")


def run_algorithm(name, demand, params, strategy=None, **options):
    """
    Centralized entry point for running one scheduler.

    Wall time is measured with a monotonic clock around the scheduler call
    only, so demand generation is never included.

    Args:
        name: One of ALGORITHMS
        demand: The DemandMatrix to schedule
        params: SystemParams
        strategy: SearchStrategy for the Eclipse family (ignored by BFF)
        options: Extra keyword arguments for the scheduler

    Returns:
        (result, wall_time_seconds)
    """
    if name == "eclipse":
        call = lambda: eclipse_schedule(demand, params, strategy, **options)
    elif name == "twohop":
        call = lambda: two_hop_schedule(demand, params, strategy, **options)
    elif name == "bff":
        call = lambda: bff_schedule(demand, params, **options)
    else:
        raise ArgumentError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")

    started = time.perf_counter()
    result = call()
    return result, time.perf_counter() - started


async def gather_bounded(func, jobs, workers):
    """
    Run func(job) for every job, at most `workers` at a time.

    With one worker everything runs inline in this process; otherwise
    jobs go to a process pool. Results come back in job order.
    """
    if workers <= 1:
        return [func(job) for job in jobs]

    # Semaphore to limit jobs in flight
    semaphore = asyncio.Semaphore(workers)
    loop = asyncio.get_running_loop()

    with ProcessPoolExecutor(max_workers=workers) as pool:

        async def submit(job):
            async with semaphore:
                return await loop.run_in_executor(pool, func, job)

        logger.debug("[RUN] dispatching %d jobs on %d workers", len(jobs), workers)
        return await asyncio.gather(*map(submit, jobs))


def run_jobs(func, jobs, workers=1):
    """Synchronous wrapper around gather_bounded."""
    return asyncio.run(gather_bounded(func, list(jobs), workers))
