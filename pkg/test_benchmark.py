# test_benchmark.py
import pytest

from univoque.benchmark import BenchmarkResult, PerformanceBenchmarker, amdahl_fit, generate_performance_report


def _result(workers, seconds, points=32):
    method = 'serial' if workers == 1 else f'parallel_{workers}_workers'
    return BenchmarkResult(method, workers, points, seconds, 1.0, 50.0, points / seconds)


def test_amdahl_fit_recovers_parallel_fraction():
    f = 0.5
    speedups = [{'workers': p, 'speedup': 1 / ((1 - f) + f / p)} for p in (2, 4, 8)]
    fit = amdahl_fit(speedups)
    assert fit['estimated_parallel_fraction'] == pytest.approx(0.5, abs=1e-3)
    assert len(fit['theoretical_vs_actual']) == 3


def test_amdahl_fit_without_parallel_runs():
    assert amdahl_fit([{'workers': 1, 'speedup': 1.0}]) == {}


def test_performance_report():
    results = {r.method: r for r in (_result(1, 8.0), _result(2, 4.4), _result(4, 3.0))}
    report = generate_performance_report(results)
    assert set(report) == {'benchmark_results', 'speedup_analysis', 'amdahl_analysis', 'recommendations'}
    speedups = {item['workers']: item['speedup'] for item in report['speedup_analysis']}
    assert speedups[2] == pytest.approx(8.0 / 4.4, abs=1e-3)
    assert any('Best efficiency at 2 workers' in line for line in report['recommendations'])
    assert report['benchmark_results']['serial']['processing_time'] == 8.0


def test_benchmark_small_sweep():
    results = PerformanceBenchmarker(sample_interval=0.05).benchmark_sweep('1.5', '1.7', 2, [1], n_max=4)
    serial = results['serial']
    assert serial.points == 2
    assert serial.processing_time >= 0
    assert 'recommendations' in generate_performance_report(results)
