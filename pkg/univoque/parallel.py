# univoque/parallel.py
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import psutil

from .config import get_settings
from .utils import setup_logger

logger = setup_logger('univoque.parallel')


def memory_usage_mb() -> float:
    return round(psutil.Process().memory_info().rss / 1024 / 1024, 2)


class SmartParallelRunner:
    """
    Runs independent work items serially or on a process pool depending on how
    many there are. Results always come back in input order.

    func must be a module-level function so worker processes can unpickle it.
    """

    def __init__(self, parallel_threshold: Optional[int] = None, max_workers: Optional[int] = None):
        settings = get_settings()
        self.parallel_threshold = parallel_threshold or settings.parallel_threshold
        self.max_workers = max_workers or settings.max_workers
        self.performance_metrics: Dict[str, Any] = {}

    def map(self, func: Callable[[Any], Any], items: Sequence[Any]) -> List[Any]:
        start_time = time.time()
        item_count = len(items)

        if item_count >= self.parallel_threshold and self.max_workers > 1:
            logger.info(f'Using PARALLEL processing for {item_count} items on {self.max_workers} workers')
            results = self._process_parallel(func, items)
            method = 'parallel'
        else:
            logger.info(f'Using SERIAL processing for {item_count} items')
            results = [func(item) for item in items]
            method = 'serial'

        total_time = time.time() - start_time
        self.performance_metrics = {
            'processing_method': method,
            'item_count': item_count,
            'processing_time': round(total_time, 3),
            'items_per_second': round(item_count / total_time, 2) if total_time > 0 else 0,
            'workers_used': self.max_workers if method == 'parallel' else 1,
            'memory_usage_mb': memory_usage_mb(),
        }
        return results

    def _process_parallel(self, func: Callable[[Any], Any], items: Sequence[Any]) -> List[Any]:
        # Split items into chunks for workers
        chunk_size = max(1, len(items) // self.max_workers)
        chunks = [(start, list(items[start:start + chunk_size])) for start in range(0, len(items), chunk_size)]
        slots: List[Any] = [None] * len(items)
        failure: Optional[BaseException] = None

        with ProcessPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_chunk = {
                executor.submit(process_chunk, func, chunk): (worker_id, start)
                for worker_id, (start, chunk) in enumerate(chunks)
            }
            for future in as_completed(future_to_chunk):
                worker_id, start = future_to_chunk[future]
                try:
                    chunk_results = future.result()
                except Exception as exc:
                    logger.error(f'Worker {worker_id} generated an exception: {exc}')
                    failure = failure or exc
                    continue
                slots[start:start + len(chunk_results)] = chunk_results
                logger.info(f'Worker {worker_id} finished {len(chunk_results)} items')

        if failure is not None:
            raise failure
        return slots


def process_chunk(func: Callable[[Any], Any], chunk: List[Any]) -> List[Any]:
    """Worker function for parallel processing"""
    return [func(item) for item in chunk]


def run_items(func: Callable[[Any], Any], items: Sequence[Any], runner: Optional[SmartParallelRunner] = None) -> Tuple[List[Any], Dict[str, Any]]:
    runner = runner or SmartParallelRunner()
    results = runner.map(func, items)
    return results, runner.performance_metrics
