# conftest.py
from fractions import Fraction
from typing import Callable

import pytest

from univoque.config import reload_settings
from univoque.parallel import SmartParallelRunner


@pytest.fixture
def serial_runner():
    return SmartParallelRunner(parallel_threshold=10 ** 9, max_workers=1)


@pytest.fixture
def settings_env(monkeypatch):
    """Set UNIVOQUE_* variables and reload the cached settings"""
    def apply(**values):
        for name, value in values.items():
            monkeypatch.setenv(f'UNIVOQUE_{name.upper()}', str(value))
        return reload_settings()

    yield apply
    monkeypatch.undo()
    reload_settings()


@pytest.fixture
def bisect_root() -> Callable:
    """Root of an increasing-sign polynomial on [lo, hi] by plain bisection"""
    def root(coefficients, lo, hi, width=Fraction(1, 10 ** 12)):
        def f(x):
            return sum(c * x ** i for i, c in enumerate(coefficients))

        lo, hi = Fraction(lo), Fraction(hi)
        assert f(lo) < 0 < f(hi)
        while hi - lo > width:
            mid = (lo + hi) / 2
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2

    return root
