"""
chaostat - Worker pool
Runs independent jobs (one trajectory, one training run) in batches on a thread pool and
hands results back in submission order, failures included.
"""

import asyncio
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Generic, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


def default_workers() -> int:
    raw = os.getenv("CHAOSTAT_WORKERS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning(f"⚠️ ignoring CHAOSTAT_WORKERS={raw!r}")
    return 1


@dataclass
class JobResult(Generic[T]):
    """Outcome of one job: `value` on success, `error` otherwise"""

    index: int
    label: str
    value: Optional[T] = None
    error: Optional[BaseException] = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None


class WorkerPool:
    """Executes jobs batch by batch; a failing job never cancels its neighbours"""

    def __init__(self, max_workers: Optional[int] = None, batch_size: Optional[int] = None):
        self.max_workers = max_workers or default_workers()
        self.batch_size = batch_size or self.max_workers
        self.completed = 0
        self.failed = 0
        self.busy_seconds = 0.0

    def _timed(self, job: Callable[[], T]):
        start = time.perf_counter()
        value = job()
        return value, time.perf_counter() - start

    async def _run_batch(self, executor: ThreadPoolExecutor, batch: List[tuple]) -> List[JobResult]:
        loop = asyncio.get_running_loop()
        tasks = [loop.run_in_executor(executor, self._timed, job) for _, _, job in batch]
        outcomes = await asyncio.gather(*tasks, return_exceptions=True)

        results = []
        for (index, label, _), outcome in zip(batch, outcomes):
            if isinstance(outcome, BaseException):
                logger.error(f"❌ job {label} failed: {outcome}")
                self.failed += 1
                results.append(JobResult(index, label, error=outcome))
            else:
                value, seconds = outcome
                self.completed += 1
                self.busy_seconds += seconds
                results.append(JobResult(index, label, value=value, seconds=seconds))
        return results

    async def run(self, jobs: Sequence[Callable[[], T]], labels: Optional[Sequence[str]] = None) -> List[JobResult]:
        labels = list(labels) if labels is not None else [str(i) for i in range(len(jobs))]
        queue = [(i, labels[i], job) for i, job in enumerate(jobs)]
        results: List[JobResult] = []
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            while queue:
                batch, queue = queue[:self.batch_size], queue[self.batch_size:]
                results.extend(await self._run_batch(executor, batch))
        return sorted(results, key=lambda r: r.index)

    def map(self, jobs: Sequence[Callable[[], T]], labels: Optional[Sequence[str]] = None) -> List[JobResult]:
        """Blocking wrapper for callers outside an event loop"""
        return asyncio.run(self.run(jobs, labels))

    def get_stats(self) -> Dict[str, Any]:
        return {
            "max_workers": self.max_workers,
            "batch_size": self.batch_size,
            "completed": self.completed,
            "failed": self.failed,
            "busy_seconds": self.busy_seconds,
        }


def values_or_raise(results: Sequence[JobResult]) -> List[Any]:
    """Values of all jobs, re-raising the first failure"""
    for r in results:
        if not r.ok:
            raise r.error
    return [r.value for r in results]
