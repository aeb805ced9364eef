# univoque/intervals.py
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Union

from mpmath.libmp import from_rational, mpf_log, round_ceiling, round_floor, to_rational

from .config import get_settings
from .errors import DomainError
from .utils import format_rational

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class Interval:
    """
    Closed interval [lo, hi] with exact rational endpoints.
    Transcendental values enter only through the outward-rounded log helpers below.
    """
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'lo', Fraction(self.lo))
        object.__setattr__(self, 'hi', Fraction(self.hi))
        if self.lo > self.hi:
            raise DomainError(f'empty interval [{self.lo}, {self.hi}]')

    @classmethod
    def point(cls, value: Rational) -> 'Interval':
        return cls(Fraction(value), Fraction(value))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value: Rational) -> bool:
        return self.lo <= value <= self.hi

    def intersects(self, other: 'Interval') -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def gap_to(self, other: 'Interval') -> Fraction:
        """Distance between the two intervals, 0 when they overlap"""
        if self.intersects(other):
            return Fraction(0)
        return max(other.lo - self.hi, self.lo - other.hi)

    def widened(self, slack: Rational) -> 'Interval':
        return Interval(self.lo - slack, self.hi + slack)

    def __add__(self, other: Union['Interval', Rational]) -> 'Interval':
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    def scale(self, factor: Rational) -> 'Interval':
        factor = Fraction(factor)
        if factor >= 0:
            return Interval(self.lo * factor, self.hi * factor)
        return Interval(self.hi * factor, self.lo * factor)

    def __truediv__(self, other: 'Interval') -> 'Interval':
        # only nonnegative over positive is needed (entropy / log q)
        if other.lo <= 0 or self.lo < 0:
            raise DomainError('interval division needs a nonnegative numerator and a positive denominator')
        return Interval(self.lo / other.hi, self.hi / other.lo)

    def to_json(self) -> Dict[str, str]:
        return {'lo': format_rational(self.lo), 'hi': format_rational(self.hi)}

    def __str__(self) -> str:
        return f'[{float(self.lo):.10g}, {float(self.hi):.10g}]'


def _log_rounded(x: Fraction, rounding: str) -> Fraction:
    x = Fraction(x)
    if x <= 0:
        raise DomainError(f'log of non-positive value {x}')
    if x == 1:
        return Fraction(0)
    prec = get_settings().log_precision
    # the argument is rounded in the same direction as the result, log is increasing
    arg = from_rational(x.numerator, x.denominator, prec + 10, rounding)
    p, q = to_rational(mpf_log(arg, prec, rounding))
    return Fraction(p, q)


def log_lower(x: Rational) -> Fraction:
    return _log_rounded(Fraction(x), round_floor)


def log_upper(x: Rational) -> Fraction:
    return _log_rounded(Fraction(x), round_ceiling)


def log_interval(x: Interval) -> Interval:
    return Interval(log_lower(x.lo), log_upper(x.hi))
