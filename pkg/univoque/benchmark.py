# univoque/benchmark.py
import threading
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import psutil

from .dimension import sweep
from .parallel import SmartParallelRunner
from .utils import setup_logger

logger = setup_logger('univoque.benchmark')


@dataclass
class BenchmarkResult:
    method: str
    workers: int
    points: int
    processing_time: float
    memory_usage: float
    cpu_utilization: float
    throughput: float  # grid points per second


class PerformanceBenchmarker:
    """
    Times the same entropy sweep serially and on process pools of several sizes,
    sampling CPU and memory from a background thread while each run is active.
    """

    def __init__(self, sample_interval: float = 0.25):
        self.sample_interval = sample_interval
        self.monitoring_active = False
        self.system_metrics: Dict[str, List[float]] = {'cpu_usage': [], 'memory_usage': []}

    def benchmark_sweep(self, q_from: Union[Fraction, str], q_to: Union[Fraction, str], steps: int,
                        worker_counts: Sequence[int], tol: Union[Fraction, str] = '1e-3',
                        n_max: Optional[int] = 8, M: int = 1) -> Dict[str, BenchmarkResult]:
        results = {}
        for workers in worker_counts:
            method = f'parallel_{workers}_workers' if workers > 1 else 'serial'
            logger.info(f'Benchmarking {method} on {steps} points')
            # threshold 1 forces the pool whenever more than one worker is requested
            runner = SmartParallelRunner(parallel_threshold=1 if workers > 1 else steps + 1, max_workers=workers)

            self._start_monitoring()
            start_memory = psutil.Process().memory_info().rss / 1024 / 1024
            start_time = time.time()
            sweep(q_from, q_to, steps, tol, M=M, n_max=n_max, runner=runner)
            processing_time = time.time() - start_time
            memory_usage = psutil.Process().memory_info().rss / 1024 / 1024 - start_memory
            self._stop_monitoring()

            cpu = self.system_metrics['cpu_usage']
            results[method] = BenchmarkResult(
                method=method,
                workers=workers,
                points=steps,
                processing_time=round(processing_time, 3),
                memory_usage=round(memory_usage, 2),
                cpu_utilization=round(float(np.mean(cpu)), 1) if cpu else 0.0,
                throughput=round(steps / processing_time, 2) if processing_time > 0 else 0.0,
            )
            self.system_metrics = {'cpu_usage': [], 'memory_usage': []}
        return results

    def _start_monitoring(self):
        self.monitoring_active = True
        self.monitor_thread = threading.Thread(target=self._monitor_resources, daemon=True)
        self.monitor_thread.start()

    def _stop_monitoring(self):
        self.monitoring_active = False
        if hasattr(self, 'monitor_thread'):
            self.monitor_thread.join()

    def _monitor_resources(self):
        while self.monitoring_active:
            self.system_metrics['cpu_usage'].append(psutil.cpu_percent(interval=self.sample_interval))
            self.system_metrics['memory_usage'].append(psutil.virtual_memory().percent)


def amdahl_fit(speedups: List[Dict[str, float]]) -> Dict[str, Any]:
    """
    Least-squares parallel fraction f in 1/S = (1 - f) + f/p over the measured
    (workers p, speedup S) pairs, then the speedups f predicts.
    """
    points = [(item['workers'], item['speedup']) for item in speedups if item['workers'] > 1 and item['speedup'] > 0]
    if not points:
        return {}
    x = np.array([1 / p - 1 for p, _ in points])
    y = np.array([1 / s - 1 for _, s in points])
    fraction = float(np.clip(np.dot(x, y) / np.dot(x, x), 0.0, 1.0))
    predicted = []
    for p, s in points:
        theoretical = 1 / ((1 - fraction) + fraction / p)
        predicted.append({
            'workers': p,
            'theoretical_speedup': round(theoretical, 3),
            'actual_speedup': round(s, 3),
            'efficiency_loss': round((theoretical - s) / theoretical * 100, 1),
        })
    return {'estimated_parallel_fraction': round(fraction, 4), 'theoretical_vs_actual': predicted}


def generate_performance_report(results: Dict[str, BenchmarkResult]) -> Dict[str, Any]:
    baseline = results.get('serial') or min(results.values(), key=lambda r: r.workers)
    speedups = []
    for result in results.values():
        if result.workers == 1:
            continue
        speedup = baseline.processing_time / result.processing_time if result.processing_time > 0 else 0.0
        speedups.append({
            'workers': result.workers,
            'speedup': round(speedup, 3),
            'efficiency': round(speedup / result.workers * 100, 1),
            'throughput': result.throughput,
        })

    recommendations = []
    if speedups:
        best_efficiency = max(speedups, key=lambda item: item['efficiency'])
        best_throughput = max(speedups, key=lambda item: item['throughput'])
        recommendations.append(
            f"Best efficiency at {best_efficiency['workers']} workers ({best_efficiency['efficiency']:.1f}%)"
        )
        recommendations.append(
            f"Best throughput at {best_throughput['workers']} workers ({best_throughput['throughput']:.2f} points/sec)"
        )
        ordered = sorted(speedups, key=lambda item: item['workers'])
        for previous, current in zip(ordered, ordered[1:]):
            if current['efficiency'] < 0.8 * previous['efficiency']:
                recommendations.append(f"Diminishing returns beyond {previous['workers']} workers")
                break
    elif baseline.points < 16:
        recommendations.append('Grid too small for a process pool; serial evaluation is used below the parallel threshold')

    return {
        'benchmark_results': {name: asdict(result) for name, result in results.items()},
        'speedup_analysis': speedups,
        'amdahl_analysis': amdahl_fit(speedups),
        'recommendations': recommendations,
    }
