import os
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

from CGM_Engine.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_WORKERS = 4


def worker_count(value: Optional[int] = None) -> int:
    """Worker count from the argument, then CGM_WORKERS, then the default."""
    if value is None:
        raw = os.environ.get("CGM_WORKERS")
        try:
            value = int(raw) if raw else DEFAULT_WORKERS
        except ValueError:
            logger.warning(f"Ignoring CGM_WORKERS={raw!r}; using {DEFAULT_WORKERS}")
            value = DEFAULT_WORKERS
    return max(1, int(value))


class SafeThreadExecutor:
    """Thread executor with safe cleanup"""

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = worker_count(max_workers)
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers)
        self._shutdown = False

    def submit(self, fn: Callable, *args, **kwargs) -> Optional[Future]:
        """Submit task to executor"""
        if self._shutdown:
            return None
        try:
            return self.executor.submit(fn, *args, **kwargs)
        except RuntimeError as e:
            logger.error(f"Error submitting task: {e}")
            return None

    def map_ordered(self, fn: Callable[[Any], Any], items: Iterable[Any]) -> List[Any]:
        """Run fn over items concurrently; results come back in submission order.

        The first exception raised by a task is re-raised here after the
        remaining tasks are cancelled.
        """
        items = list(items)
        if self._shutdown:
            raise RuntimeError("Executor has been shut down")
        if self.max_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        futures = [self.executor.submit(fn, item) for item in items]
        results = []
        try:
            for future in futures:
                results.append(future.result())
        except BaseException:
            for future in futures:
                future.cancel()
            raise
        return results

    def shutdown(self, wait: bool = False) -> None:
        """Shutdown executor"""
        if self._shutdown:
            return
        self._shutdown = True
        self.executor.shutdown(wait=wait)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.shutdown(wait=True)
        return False

    def __del__(self):
        """Cleanup on destruction"""
        try:
            self.shutdown(wait=False)
        except Exception:
            pass
