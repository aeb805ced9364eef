# univoque/expansions.py
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple, Union

from sympy import Poly, Rational, symbols

from .config import get_settings
from .errors import InputError, InternalConsistencyError, NotAdmissible, PrecisionExhausted
from .intervals import Interval
from .utils import format_rational, parse_rational, setup_logger
from .words import Alphabet, EventuallyPeriodicSeq, Ordering, Sequence, Word, lex_compare, parse_sequence, parse_word

logger = setup_logger('univoque.expansions')

_Q = symbols('q')


@dataclass(frozen=True)
class Base:
    """
    A base q in (1, M+1] held as an exact rational bracket [lo, hi].

    Optional extras:
    1. polynomial: integer coefficients (lowest degree first) of a polynomial whose
       only root in (1, inf) is q; used to decide digit ties exactly
    2. alpha_sequence: the quasi-greedy expansion of 1 when it is known exactly
    3. refiner: callable(width) -> narrower Base around the same q
    """
    lo: Fraction
    hi: Fraction
    M: int = 1
    polynomial: Optional[Tuple[int, ...]] = None
    alpha_sequence: Optional[EventuallyPeriodicSeq] = None
    refiner: Optional[Callable[[Fraction], 'Base']] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'lo', Fraction(self.lo))
        object.__setattr__(self, 'hi', Fraction(self.hi))
        Alphabet(self.M)
        if not (1 < self.lo <= self.hi <= self.M + 1):
            raise InputError(f'base bracket [{self.lo}, {self.hi}] outside (1, {self.M + 1}]')

    @classmethod
    def exact(cls, q: Union[int, Fraction], M: int = 1) -> 'Base':
        q = Fraction(q)
        alpha = None
        if q.denominator == 1 and 1 < q <= M + 1:
            digit = int(q) - 1
            alpha = EventuallyPeriodicSeq.periodic(Word((digit,), Alphabet(M)))
        return cls(q, q, M, polynomial=(-q.numerator, q.denominator), alpha_sequence=alpha)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def interval(self) -> Interval:
        return Interval(self.lo, self.hi)

    def refined(self, width: Fraction) -> 'Base':
        if self.width <= width:
            return self
        if self.refiner is None:
            raise PrecisionExhausted(
                f'bracket of width {float(self.width):.3g} cannot be refined',
                details={'lo': format_rational(self.lo), 'hi': format_rational(self.hi)},
            )
        return self.refiner(Fraction(width))

    def to_json(self) -> Dict[str, Any]:
        result = {'lo': format_rational(self.lo), 'hi': format_rational(self.hi), 'M': self.M}
        if self.alpha_sequence is not None:
            result['alpha'] = str(self.alpha_sequence)
        return result

    def __str__(self) -> str:
        if self.is_exact:
            return format_rational(self.lo)
        return f'[{float(self.lo):.12g}, {float(self.hi):.12g}]'


@dataclass(frozen=True)
class AlphaPrefix:
    """
    Certified initial segment a_1..a_L of the quasi-greedy expansion of 1.
    base is None for prefixes supplied directly (harness inputs, tests).
    """
    digits: Word
    base: Optional[Base] = None
    certified_len: int = -1
    sequence: Optional[EventuallyPeriodicSeq] = None

    def __post_init__(self):
        if self.certified_len < 0:
            object.__setattr__(self, 'certified_len', len(self.digits))
        if not satisfies_parry(self.digits):
            raise NotAdmissible(f'{self.digits} violates the quasi-greedy shift condition')

    @classmethod
    def from_word(cls, digits: Union[str, Word], M: int = 1) -> 'AlphaPrefix':
        word = digits if isinstance(digits, Word) else parse_word(digits, M)
        return cls(word)

    @classmethod
    def from_sequence(cls, seq: EventuallyPeriodicSeq, length: int) -> 'AlphaPrefix':
        return cls(seq.prefix(length), sequence=seq)

    @property
    def M(self) -> int:
        return self.digits.M

    def __len__(self) -> int:
        return len(self.digits)

    def head(self, n: int) -> Word:
        if n > self.certified_len:
            raise InputError(f'need {n} certified digits, prefix has {self.certified_len}')
        return self.digits[:n]

    def extended(self, length: int) -> 'AlphaPrefix':
        if length <= len(self):
            return self
        if self.sequence is not None:
            return AlphaPrefix(self.sequence.prefix(length), self.base, length, self.sequence)
        if self.base is None:
            raise InputError(f'prefix {self.digits} cannot be extended without a base')
        return quasi_greedy_alpha(self.base, length)


@dataclass(frozen=True)
class GreedyExpansion:
    digits: Word
    finite: bool

    def __str__(self) -> str:
        return f'{self.digits}(0)' if self.finite else str(self.digits)


class UnivoqueKind(Enum):
    IN_U = 'InU'
    IN_CLOSURE_ONLY = 'InClosureOnly'
    OUTSIDE = 'Outside'
    UNKNOWN_AT_DEPTH = 'UnknownAtDepth'


@dataclass(frozen=True)
class UnivoqueStatus:
    kind: UnivoqueKind
    depth: int
    exact: bool = False
    witness: Optional[int] = None

    def to_json(self) -> Dict[str, Any]:
        return {'status': self.kind.value, 'depth': self.depth, 'exact': self.exact, 'witness': self.witness}


def satisfies_parry(word: Word) -> bool:
    """a_{n+1}..a_L <= a_1..a_{L-n} for every n"""
    digits = word.digits
    L = len(digits)
    return all(digits[n:] <= digits[:L - n] for n in range(1, L))


def thue_morse_bit(i: int) -> int:
    if i < 0:
        raise InputError('Thue-Morse index must be nonnegative')
    return bin(i).count('1') & 1


def kl_alpha_digits(M: int, L: int) -> Word:
    """lambda_1..lambda_L, the expansion of 1 in the Komornik-Loreti base"""
    if L < 1:
        raise InputError('need at least one digit')
    k = M // 2
    if M % 2 == 0:
        digits = [k + thue_morse_bit(i) - thue_morse_bit(i - 1) for i in range(1, L + 1)]
    else:
        digits = [k + thue_morse_bit(i) for i in range(1, L + 1)]
    return Word(tuple(digits), Alphabet(M))


# --- exact digit streams at a rational base -------------------------------------

def _alpha_stream(q: Fraction, M: int) -> Iterator[int]:
    p, s = q.numerator, q.denominator
    num, den = 1, 1
    while True:
        x_num, x_den = p * num, s * den
        digit = min(M, -(-x_num // x_den) - 1)
        num, den = x_num - digit * x_den, x_den
        if not 0 < num <= den:
            raise InternalConsistencyError(f'quasi-greedy remainder {num}/{den} left (0, 1] at q={q}')
        yield digit


def _beta_stream(q: Fraction, M: int) -> Iterator[int]:
    """Greedy digits; stops after the last nonzero digit of a finite expansion"""
    p, s = q.numerator, q.denominator
    num, den = 1, 1
    while True:
        x_num, x_den = p * num, s * den
        digit = min(M, x_num // x_den)
        num, den = x_num - digit * x_den, x_den
        yield digit
        if num == 0:
            return


def _take(stream: Iterator[int], L: int) -> List[int]:
    digits = []
    for digit in stream:
        digits.append(digit)
        if len(digits) == L:
            break
    return digits


def _common_length(a: List[int], b: List[int]) -> int:
    c = 0
    for x, y in zip(a, b):
        if x != y:
            break
        c += 1
    return c


def _poly(coefficients: Tuple[int, ...]) -> Poly:
    return Poly(list(reversed(coefficients)), _Q)


def _tie_at(q: Base, common: List[int], digit: int) -> bool:
    """
    True when q itself satisfies q * r_c(q) == digit, r_c being the remainder after
    the common digits, so the disputed digit sits exactly on an integer.
    """
    if q.polynomial is None:
        return False
    x = Poly(_Q, _Q)
    remainder = Poly(1, _Q)
    for d in common:
        remainder = remainder * x - d
    g = _poly(q.polynomial).gcd(remainder * x - digit)
    if g.degree() < 1:
        return False
    at_lo = g.eval(Rational(q.lo.numerator, q.lo.denominator))
    at_hi = g.eval(Rational(q.hi.numerator, q.hi.denominator))
    return bool(at_lo * at_hi <= 0)


def _refine_step(q: Base, disputed: int) -> Base:
    floor = Fraction(1, 2 ** get_settings().min_width_bits)
    if q.refiner is None or q.width <= floor:
        raise PrecisionExhausted(
            f'digit {disputed + 1} is ambiguous on {q}',
            details={'lo': format_rational(q.lo), 'hi': format_rational(q.hi), 'digit': disputed + 1},
        )
    target = max(q.width / 2 ** 32, floor)
    logger.debug(f'Refining bracket of width {float(q.width):.3g} for digit {disputed + 1}')
    return q.refined(target)


def quasi_greedy_alpha(q: Base, L: int) -> AlphaPrefix:
    if L < 1:
        raise InputError('need at least one digit')
    alphabet = Alphabet(q.M)
    if q.alpha_sequence is not None:
        return AlphaPrefix(q.alpha_sequence.prefix(L), q, L, q.alpha_sequence)
    while True:
        lo_digits = _take(_alpha_stream(q.lo, q.M), L)
        if q.is_exact:
            digits = lo_digits
            break
        hi_digits = _take(_alpha_stream(q.hi, q.M), L)
        c = _common_length(lo_digits, hi_digits)
        if c >= L:
            digits = lo_digits
            break
        if _tie_at(q, lo_digits[:c], hi_digits[c]):
            block = Word(tuple(lo_digits[:c]) + (hi_digits[c] - 1,), alphabet)
            sequence = EventuallyPeriodicSeq.periodic(block)
            logger.debug(f'Tie at digit {c + 1} resolved exactly, alpha = {sequence}')
            return AlphaPrefix(sequence.prefix(L), q, L, sequence)
        q = _refine_step(q, c)
    word = Word(tuple(digits), alphabet)
    if not satisfies_parry(word):
        raise InternalConsistencyError(f'computed prefix {word} violates the quasi-greedy shift condition')
    return AlphaPrefix(word, q, L)


def greedy_beta(q: Base, L: int) -> GreedyExpansion:
    if L < 1:
        raise InputError('need at least one digit')
    alphabet = Alphabet(q.M)
    while True:
        lo_digits = _take(_beta_stream(q.lo, q.M), L)
        if q.is_exact:
            finite = len(lo_digits) < L or _beta_terminates(q.lo, q.M, L)
            return GreedyExpansion(Word(tuple(lo_digits), alphabet), finite)
        hi_digits = _take(_beta_stream(q.hi, q.M), L)
        lo_digits += [0] * (L - len(lo_digits))
        hi_digits += [0] * (L - len(hi_digits))
        c = _common_length(lo_digits, hi_digits)
        if c >= L:
            return GreedyExpansion(Word(tuple(lo_digits), alphabet), False)
        if _tie_at(q, lo_digits[:c], hi_digits[c]):
            return GreedyExpansion(Word(tuple(lo_digits[:c]) + (hi_digits[c],), alphabet), True)
        q = _refine_step(q, c)


def _beta_terminates(q: Fraction, M: int, L: int) -> bool:
    return len(_take(_beta_stream(q, M), L + 1)) <= L


# --- projection ------------------------------------------------------------------

def _finite_sum(digits: Tuple[int, ...], q: Fraction) -> Fraction:
    total = Fraction(0)
    for d in reversed(digits):
        total = (total + d) / q
    return total


def pi_exact(x: Sequence, q: Fraction) -> Fraction:
    """pi_q of a finite word (read as x 0^inf) or an eventually periodic sequence at a rational q"""
    q = Fraction(q)
    if isinstance(x, Word):
        return _finite_sum(x.digits, q)
    p, t = len(x.preperiod), len(x.period)
    block = _finite_sum(x.period.digits, q) / (1 - q ** -t)
    return _finite_sum(x.preperiod.digits, q) + block / q ** p


def eval_pi_q(x: Sequence, q: Base) -> Interval:
    """
    Enclosure of pi_q(x). A finite word is treated as the known prefix of an unknown
    sequence, so its tail contributes at most M/(lo-1) * lo^-L.
    """
    if isinstance(x, Word):
        tail = Fraction(q.M) / (q.lo - 1) / q.lo ** len(x)
        return Interval(pi_exact(x, q.hi), pi_exact(x, q.lo) + tail)
    # nonnegative digits, so pi_q decreases in q
    return Interval(pi_exact(x, q.hi), pi_exact(x, q.lo))


# --- from expansions back to bases -----------------------------------------------

def defining_polynomial(seq: EventuallyPeriodicSeq) -> Tuple[int, ...]:
    """
    Integer coefficients (lowest degree first) of q^(p+t) - q^p - (q^t - 1) * sum pre_j q^(p-j)
    - sum per_j q^(t-j); its root in (1, inf) is where pi_q(seq) = 1.
    """
    pre, per = seq.preperiod.digits, seq.period.digits
    p, t = len(pre), len(per)
    coefficients = [0] * (p + t + 1)
    coefficients[p + t] += 1
    coefficients[p] -= 1
    for j, d in enumerate(pre, start=1):
        coefficients[p - j + t] -= d
        coefficients[p - j] += d
    for j, d in enumerate(per, start=1):
        coefficients[t - j] -= d
    return tuple(coefficients)


def check_admissible(target: Union[Word, EventuallyPeriodicSeq]) -> None:
    if isinstance(target, Word):
        if not target.digits or target.digits[0] == 0:
            raise NotAdmissible(f'{target} cannot start a quasi-greedy expansion')
        if not satisfies_parry(target):
            raise NotAdmissible(f'{target} violates the quasi-greedy shift condition')
        return
    if target.ends_in_zeros():
        raise NotAdmissible(f'{target} ends in 0^inf')
    for n in range(1, len(target.preperiod) + len(target.period) + 1):
        if lex_compare(target.shift(n), target) is Ordering.GREATER:
            raise NotAdmissible(f'shift {n} of {target} exceeds the sequence', details={'shift': n})


def _alpha_order_against(q: Fraction, M: int, target: Union[Word, EventuallyPeriodicSeq], depth: int) -> Optional[Ordering]:
    """Compares alpha(q) with target on depth digits; None when they agree that far"""
    for i, digit in enumerate(_alpha_stream(q, M)):
        if i >= depth:
            return None
        expected = target.digit(i) if isinstance(target, EventuallyPeriodicSeq) else target.digits[i]
        if digit != expected:
            return Ordering.LESS if digit < expected else Ordering.GREATER
    return None


def _bisect_periodic(target: EventuallyPeriodicSeq, lo: Fraction, hi: Fraction, width: Fraction) -> Tuple[Fraction, Fraction]:
    depth = get_settings().compare_depth
    M = target.M
    while hi - lo > width or lo == 1:
        mid = (lo + hi) / 2
        order = _alpha_order_against(mid, M, target, depth)
        if order is None:
            # alpha(mid) agrees with target to the compare depth; decide by pi_mid(target) against 1
            value = pi_exact(target, mid)
            order = Ordering.LESS if value > 1 else Ordering.GREATER if value < 1 else Ordering.EQUAL
        if order is Ordering.EQUAL:
            return mid, mid
        if order is Ordering.LESS:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _refine_periodic(target: EventuallyPeriodicSeq, lo: Fraction, hi: Fraction, width: Fraction) -> Base:
    lo, hi = _bisect_periodic(target, lo, hi, width)
    return Base(
        lo, hi, target.M,
        polynomial=defining_polynomial(target),
        alpha_sequence=target,
        refiner=partial(_refine_periodic, target, lo, hi),
    )


def _prefix_order(q: Fraction, prefix: Word) -> Ordering:
    order = _alpha_order_against(q, prefix.M, prefix, len(prefix))
    return Ordering.EQUAL if order is None else order


def _bisect_prefix(prefix: Word, width: Fraction, lo: Fraction = Fraction(1),
                   hi: Optional[Fraction] = None) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
    """
    Brackets the interval of bases whose quasi-greedy expansion begins with prefix.
    Returns (left_out, left_in, right_in, right_out): every base in [left_in, right_in]
    shares the prefix, the whole interval lies inside [left_out, right_out], each
    in/out pair is within width, and left_in < right_in.
    lo and hi, when given, must not lie strictly inside the interval.
    """
    floor = Fraction(1, 2 ** get_settings().min_width_bits)
    hi = Fraction(prefix.M + 1) if hi is None else hi
    if _prefix_order(hi, prefix) is Ordering.EQUAL:
        inside = hi
    else:
        while True:
            if hi - lo <= floor:
                raise NotAdmissible(f'no base has a quasi-greedy expansion beginning with {prefix}')
            mid = (lo + hi) / 2
            order = _prefix_order(mid, prefix)
            if order is Ordering.EQUAL:
                inside = mid
                break
            if order is Ordering.LESS:
                lo = mid
            else:
                hi = mid
    left_out, left_in = lo, inside
    right_in, right_out = inside, hi
    while True:
        left_gap, right_gap = left_in - left_out, right_out - right_in
        if left_gap <= width and right_gap <= width and left_in < right_in:
            return left_out, left_in, right_in, right_out
        if max(left_gap, right_gap) <= floor:
            raise PrecisionExhausted(
                f'bases beginning with {prefix} not separated at 2^-{get_settings().min_width_bits}',
                details={'prefix': str(prefix)},
            )
        if left_gap > width or (right_gap <= width and left_gap >= right_gap):
            mid = (left_out + left_in) / 2
            if _prefix_order(mid, prefix) is Ordering.EQUAL:
                left_in = mid
            else:
                left_out = mid
        else:
            mid = (right_in + right_out) / 2
            if _prefix_order(mid, prefix) is Ordering.EQUAL:
                right_in = mid
            else:
                right_out = mid


def base_from_alpha(target: Union[Word, EventuallyPeriodicSeq], M: Union[int, Alphabet], width: Union[Fraction, str]) -> Base:
    """
    Bracket of the base whose quasi-greedy expansion is target (periodic case), or a
    bracket lo < hi of bases whose expansions all begin with target (word case).
    A word bracket is never exact, so digits past the word are reported only where
    every base in it agrees.
    """
    M = M.M if isinstance(M, Alphabet) else M
    if target.M != M:
        raise InputError(f'target uses M={target.M}, expected M={M}')
    width = parse_rational(width)
    if width <= 0:
        raise InputError('width must be positive')
    check_admissible(target)
    if isinstance(target, Word):
        _, lo, hi, _ = _bisect_prefix(target, width)
        logger.info(f'Bracketed bases with prefix {target}: [{float(lo):.12g}, {float(hi):.12g}]')
        return Base(lo, hi, M)
    if not len(target.preperiod) and len(target.period) == 1:
        return Base.exact(target.period.digits[0] + 1, M)
    base = _refine_periodic(target, Fraction(1), Fraction(M + 1), width)
    logger.info(f'Bracketed base of alpha = {target}: {base}')
    return base


def _refine_kl(M: int, L: int, width: Fraction, lo: Fraction = Fraction(1), hi: Optional[Fraction] = None) -> Base:
    """Outer bracket of q_KL; the digit prefix doubles until the bracket fits in width"""
    while True:
        left_out, left_in, _, right_out = _bisect_prefix(kl_alpha_digits(M, L), width / 4, lo, hi)
        if right_out - left_out <= width:
            break
        lo, hi, L = left_out, right_out, 2 * L
    # 1 itself is never a base; left_in still bounds q_KL from below
    lower = left_in if left_out == 1 else left_out
    return Base(lower, right_out, M, refiner=partial(_refine_kl, M, L, lo=left_out, hi=right_out))


def kl_base(M: int = 1, L: int = 64, width: Union[Fraction, str] = Fraction(1, 10 ** 12)) -> Base:
    """
    Bracket containing the Komornik-Loreti constant, from its first L digits; the
    prefix is lengthened when L digits cannot reach width, and the bracket refines.
    """
    width = parse_rational(width)
    if width <= 0:
        raise InputError('width must be positive')
    if L < 2:
        raise InputError('need at least two digits')
    base = _refine_kl(M, L, width)
    logger.info(f'Bracketed q_KL for M={M}: {base}')
    return base


def known_alpha_sequence(q: Base) -> Optional[EventuallyPeriodicSeq]:
    if q.alpha_sequence is not None:
        return q.alpha_sequence
    if q.is_exact and q.lo.denominator == 1:
        return EventuallyPeriodicSeq.periodic(Word((int(q.lo) - 1,), Alphabet(q.M)))
    return None


def parse_base(text: str, M: int = 1, width: Union[Fraction, str] = Fraction(1, 10 ** 12)) -> Base:
    """Decimal, p/r, or 'alpha:' followed by a sequence literal ('alpha:11(01)') or a prefix"""
    text = text.strip()
    if text.startswith('alpha:'):
        literal = text[len('alpha:'):]
        target = parse_sequence(literal, M) if '(' in literal else parse_word(literal, M)
        return base_from_alpha(target, M, width)
    q = parse_rational(text)
    if not 1 < q <= M + 1:
        raise InputError(f'base {text} outside (1, {M + 1}]')
    return Base.exact(q, M)


# --- membership in the univoque set and its closure -----------------------------

def _classify_exact(alpha: EventuallyPeriodicSeq) -> UnivoqueStatus:
    reflected = alpha.reflect()
    span = len(alpha.preperiod) + len(alpha.period)
    closure_only = None
    for n in range(1, span + 1):
        shifted = alpha.shift(n)
        if lex_compare(reflected, shifted) is not Ordering.LESS:
            return UnivoqueStatus(UnivoqueKind.OUTSIDE, span, exact=True, witness=n)
        upper = lex_compare(shifted, alpha)
        if upper is Ordering.GREATER:
            return UnivoqueStatus(UnivoqueKind.OUTSIDE, span, exact=True, witness=n)
        if upper is Ordering.EQUAL and closure_only is None:
            closure_only = n
    if closure_only is not None:
        return UnivoqueStatus(UnivoqueKind.IN_CLOSURE_ONLY, span, exact=True, witness=closure_only)
    return UnivoqueStatus(UnivoqueKind.IN_U, span, exact=True)


def _certified_alpha_digits(q: Base, L: int) -> Tuple[int, ...]:
    """
    Up to L digits shared by every base in the bracket. alpha is nondecreasing in q,
    so the common prefix of alpha(lo) and alpha(hi) is exactly what is certified.
    """
    try:
        return quasi_greedy_alpha(q, L).digits.digits
    except PrecisionExhausted:
        lo_digits = _take(_alpha_stream(q.lo, q.M), L)
        hi_digits = _take(_alpha_stream(q.hi, q.M), L)
        return tuple(lo_digits[:_common_length(lo_digits, hi_digits)])


def classify_univoque(q: Base, depth: int) -> UnivoqueStatus:
    """
    Exact answer when alpha(q) is known to be eventually periodic.

    Otherwise the shift inequalities Reflect(a_1..a_depth) < a_{n+1}..a_{n+depth} <
    a_1..a_depth are checked for n <= depth on the digits the bracket certifies.
    Outside is then certain (exact=False only because the base is a bracket). InU
    means no violation within depth and is not a proof of membership. A window that
    ties with a bound, or runs past the certified digits before deciding, gives
    UnknownAtDepth.
    """
    if depth < 1:
        raise InputError('depth must be at least 1')
    alpha = known_alpha_sequence(q)
    if alpha is not None:
        return _classify_exact(alpha)
    digits = _certified_alpha_digits(q, 2 * depth)
    head = digits[:depth]
    reflected = tuple(q.M - d for d in head)
    undecided = None
    for n in range(1, depth + 1):
        window = digits[n:n + depth]
        known = min(len(window), len(head))
        window, upper, lower = window[:known], head[:known], reflected[:known]
        if window < lower or window > upper:
            return UnivoqueStatus(UnivoqueKind.OUTSIDE, depth, witness=n)
        # a tie on the known digits leaves the comparison open
        if (window == lower or window == upper) and undecided is None:
            undecided = n
    if undecided is not None:
        return UnivoqueStatus(UnivoqueKind.UNKNOWN_AT_DEPTH, depth, witness=undecided)
    return UnivoqueStatus(UnivoqueKind.IN_U, depth)
