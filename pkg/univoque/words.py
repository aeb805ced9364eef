# univoque/words.py
import re
from dataclasses import dataclass
from enum import Enum
from math import lcm
from typing import Iterable, Iterator, Tuple, Union, overload

from .errors import DomainError, InputError


@dataclass(frozen=True)
class Alphabet:
    """Digits {0, ..., M}"""
    M: int

    def __post_init__(self):
        if not isinstance(self.M, int) or self.M < 1:
            raise InputError(f'alphabet needs an integer M >= 1, got {self.M!r}')

    @property
    def size(self) -> int:
        return self.M + 1

    def word(self, digits: Iterable[int]) -> 'Word':
        return Word(tuple(digits), self)


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1

    def __str__(self) -> str:
        return self.name.capitalize()


class WordOp(Enum):
    REFLECT = 'reflect'
    PLUS_LAST = 'plus'
    MINUS_LAST = 'minus'


@dataclass(frozen=True)
class Word:
    """
    Finite digit string. Immutable; the empty word is allowed and acts as the
    identity for concatenation.
    """
    digits: Tuple[int, ...]
    alphabet: Alphabet

    def __post_init__(self):
        digits = tuple(self.digits)
        for d in digits:
            if not isinstance(d, int) or d < 0 or d > self.alphabet.M:
                raise InputError(f'digit {d!r} outside {{0,...,{self.alphabet.M}}}')
        object.__setattr__(self, 'digits', digits)

    @classmethod
    def of(cls, digits: Union[str, Iterable[int]], M: int = 1) -> 'Word':
        if isinstance(digits, str):
            return parse_word(digits, M)
        return cls(tuple(digits), Alphabet(M))

    @property
    def M(self) -> int:
        return self.alphabet.M

    def __len__(self) -> int:
        return len(self.digits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.digits)

    @overload
    def __getitem__(self, index: int) -> int: ...

    @overload
    def __getitem__(self, index: slice) -> 'Word': ...

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Word(self.digits[index], self.alphabet)
        return self.digits[index]

    def __add__(self, other: 'Word') -> 'Word':
        _same_alphabet(self, other)
        return Word(self.digits + other.digits, self.alphabet)

    def __mul__(self, power: int) -> 'Word':
        if power < 0:
            raise InputError('word power must be nonnegative')
        return Word(self.digits * power, self.alphabet)

    def __str__(self) -> str:
        return format_word(self)

    def reflect(self) -> 'Word':
        M = self.alphabet.M
        return Word(tuple(M - d for d in self.digits), self.alphabet)

    def plus(self) -> 'Word':
        if not self.digits:
            raise DomainError('plus of the empty word')
        if self.digits[-1] == self.alphabet.M:
            raise DomainError(f'plus undefined: {self} ends with the largest digit')
        return Word(self.digits[:-1] + (self.digits[-1] + 1,), self.alphabet)

    def minus(self) -> 'Word':
        if not self.digits:
            raise DomainError('minus of the empty word')
        if self.digits[-1] == 0:
            raise DomainError(f'minus undefined: {self} ends with 0')
        return Word(self.digits[:-1] + (self.digits[-1] - 1,), self.alphabet)

    def startswith(self, prefix: 'Word') -> bool:
        return self.digits[:len(prefix)] == prefix.digits

    def find(self, pattern: 'Word', start: int = 0) -> int:
        """Index of the first occurrence of pattern at or after start, -1 if absent"""
        n = len(pattern)
        for i in range(start, len(self) - n + 1):
            if self.digits[i:i + n] == pattern.digits:
                return i
        return -1


@dataclass(frozen=True)
class EventuallyPeriodicSeq:
    """
    preperiod followed by period repeated forever, kept in canonical form
    (shortest period, then shortest preperiod) so equality is structural.
    """
    preperiod: Word
    period: Word

    def __post_init__(self):
        _same_alphabet(self.preperiod, self.period)
        if len(self.period) == 0:
            raise InputError('period of an eventually periodic sequence must be nonempty')
        pre, per = _canonical(self.preperiod.digits, self.period.digits)
        object.__setattr__(self, 'preperiod', Word(pre, self.period.alphabet))
        object.__setattr__(self, 'period', Word(per, self.period.alphabet))

    @classmethod
    def periodic(cls, period: Word) -> 'EventuallyPeriodicSeq':
        return cls(Word((), period.alphabet), period)

    @property
    def alphabet(self) -> Alphabet:
        return self.period.alphabet

    @property
    def M(self) -> int:
        return self.period.alphabet.M

    def digit(self, i: int) -> int:
        """0-based digit"""
        p = len(self.preperiod)
        if i < p:
            return self.preperiod.digits[i]
        return self.period.digits[(i - p) % len(self.period)]

    def prefix(self, length: int) -> Word:
        return Word(tuple(self.digit(i) for i in range(length)), self.alphabet)

    def shift(self, n: int) -> 'EventuallyPeriodicSeq':
        """sigma^n"""
        p, t = len(self.preperiod), len(self.period)
        if n <= p:
            return EventuallyPeriodicSeq(self.preperiod[n:], self.period)
        k = (n - p) % t
        return EventuallyPeriodicSeq(Word((), self.alphabet), self.period[k:] + self.period[:k])

    def reflect(self) -> 'EventuallyPeriodicSeq':
        return EventuallyPeriodicSeq(self.preperiod.reflect(), self.period.reflect())

    def ends_in_zeros(self) -> bool:
        return set(self.period.digits) == {0}

    def __str__(self) -> str:
        return format_sequence(self)


Sequence = Union[Word, EventuallyPeriodicSeq]


def _same_alphabet(a, b):
    if a.alphabet != b.alphabet:
        raise InputError(f'alphabet mismatch: M={a.alphabet.M} vs M={b.alphabet.M}')


def _canonical(pre: Tuple[int, ...], per: Tuple[int, ...]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    t = len(per)
    for d in range(1, t + 1):
        if t % d == 0 and per[:d] * (t // d) == per:
            per = per[:d]
            break
    # absorb the end of the preperiod into a rotated period
    while pre and pre[-1] == per[-1]:
        pre = pre[:-1]
        per = per[-1:] + per[:-1]
    return pre, per


def _as_sequence(x: Sequence) -> EventuallyPeriodicSeq:
    if isinstance(x, EventuallyPeriodicSeq):
        return x
    # a finite word is read as x 0^inf
    return EventuallyPeriodicSeq(x, Word((0,), x.alphabet))


def lex_compare(a: Sequence, b: Sequence) -> Ordering:
    _same_alphabet(a, b)
    if isinstance(a, Word) and isinstance(b, Word):
        L = max(len(a), len(b))
        da = a.digits + (0,) * (L - len(a))
        db = b.digits + (0,) * (L - len(b))
        if da == db:
            return Ordering.EQUAL
        return Ordering.LESS if da < db else Ordering.GREATER
    sa, sb = _as_sequence(a), _as_sequence(b)
    depth = max(len(sa.preperiod), len(sb.preperiod)) + lcm(len(sa.period), len(sb.period))
    for i in range(depth):
        x, y = sa.digit(i), sb.digit(i)
        if x != y:
            return Ordering.LESS if x < y else Ordering.GREATER
    return Ordering.EQUAL


def word_algebra(w: Word, op: WordOp) -> Word:
    if op is WordOp.REFLECT:
        return w.reflect()
    if op is WordOp.PLUS_LAST:
        return w.plus()
    return w.minus()


def is_primitive(w: Word) -> bool:
    """
    True iff Reflect(a_1..a_{m-i}) < a_{i+1}..a_m <= a_1..a_{m-i} for every 0 <= i < m.
    The range includes i = 0, so the word must also exceed its own reflection.
    """
    m = len(w)
    if m == 0:
        raise InputError('primitivity is undefined for the empty word')
    for i in range(m):
        head, tail = w[:m - i], w[i:]
        if lex_compare(head.reflect(), tail) is not Ordering.LESS:
            return False
        if lex_compare(tail, head) is Ordering.GREATER:
            return False
    return True


_SEQUENCE_RE = re.compile(r'^\s*([0-9,]*)\(([0-9,]+)\)\s*$')


def parse_word(text: str, M: int = 1) -> Word:
    """'1101' for M <= 9, comma separated integers ('10,3,0') otherwise or whenever commas appear"""
    alphabet = Alphabet(M)
    text = text.strip()
    if not text:
        return Word((), alphabet)
    try:
        if ',' in text or M > 9:
            digits = tuple(int(part) for part in text.split(','))
        else:
            digits = tuple(int(ch) for ch in text)
    except ValueError as exc:
        raise InputError(f'not a digit string: {text!r}') from exc
    return Word(digits, alphabet)


def parse_sequence(text: str, M: int = 1) -> EventuallyPeriodicSeq:
    """'pre(period)', e.g. '11(01)' or '10,3(0,1)'"""
    match = _SEQUENCE_RE.match(text)
    if not match:
        raise InputError(f'not a periodic sequence literal: {text!r}')
    pre, per = match.group(1).rstrip(','), match.group(2)
    return EventuallyPeriodicSeq(parse_word(pre, M), parse_word(per, M))


def format_word(w: Word) -> str:
    if w.alphabet.M > 9:
        return ','.join(str(d) for d in w.digits)
    return ''.join(str(d) for d in w.digits)


def format_sequence(s: EventuallyPeriodicSeq) -> str:
    return f'{format_word(s.preperiod)}({format_word(s.period)})'
