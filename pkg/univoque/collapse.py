# univoque/collapse.py
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from sympy import integer_nthroot

from .config import get_settings
from .errors import (
    InputError,
    NoDeviationWithinPrefix,
    NotApplicable,
    NotPrimitive,
    NonContraction,
    PreconditionError,
    PrefixTooShort,
)
from .expansions import AlphaPrefix, kl_alpha_digits
from .intervals import Interval
from .parallel import SmartParallelRunner, run_items
from .subshifts import enumerate_window_language, windows_within
from .utils import setup_logger
from .words import Word, is_primitive

logger = setup_logger('univoque.collapse')

# words per work item handed to the process pool
_AUDIT_BATCH = 4096


@dataclass(frozen=True)
class LrDecomposition:
    """
    n = m(l+1) + r with a_1..a_{n-1} = v (Reflect(v)^+)^l Reflect(a_1..a_{r-1}), v = a_1..a_m,
    and a_n the first digit above v (Reflect(v)^+)^inf.
    """
    m: int
    l: int
    r: int
    n: int
    primitive_ok: bool = True
    tail_ok: bool = True

    def reconstruct(self, v: Word) -> Word:
        """a_1..a_{n-1} rebuilt from v alone"""
        return v + v.reflect().plus() * self.l + v[:self.r - 1].reflect()

    def to_json(self) -> Dict[str, Any]:
        return {
            'm': self.m, 'l': self.l, 'r': self.r, 'n': self.n,
            'primitive_ok': self.primitive_ok, 'tail_ok': self.tail_ok,
        }


def _first_deviation(digits: Tuple[int, ...], start: int, block: Tuple[int, ...]) -> Optional[int]:
    """Offset j >= 1 of the first digit after start that differs from block^inf, None if none"""
    size = len(block)
    for j, d in enumerate(digits[start:], start=1):
        if d != block[(j - 1) % size]:
            return j
    return None


def decompose_lr(alpha_prefix: AlphaPrefix, m: int) -> LrDecomposition:
    L = alpha_prefix.certified_len
    if not 1 <= m <= L:
        raise InputError(f'm={m} outside 1..{L}')
    v = alpha_prefix.head(m)
    if not is_primitive(v):
        raise NotPrimitive(f'{v} is not primitive', details={'m': m})
    digits = alpha_prefix.head(L).digits
    block = v.reflect().plus().digits
    j = _first_deviation(digits, m, block)
    if j is None:
        raise NoDeviationWithinPrefix(
            f'alpha agrees with {v}({v.reflect().plus()})^inf for all {L} certified digits',
            details={'m': m, 'certified_len': L},
        )
    n = m + j
    if digits[n - 1] < block[(j - 1) % m]:
        raise NotApplicable(
            f'alpha falls below {v}({v.reflect().plus()})^inf at digit {n}',
            details={'m': m, 'n': n},
        )
    l, r = (n - m - 1) // m, (n - m - 1) % m + 1
    prefix = alpha_prefix.head(n)
    tail = prefix[n - m:].minus()
    tail_ok = tail.digits > v.reflect().digits
    return LrDecomposition(m, l, r, n, primitive_ok=is_primitive(prefix), tail_ok=tail_ok)


@dataclass(frozen=True)
class CollapseContext:
    """u = v z with both u and its prefix v primitive"""
    u: Word
    v: Word
    origin: str = field(default='', compare=False)
    z: Word = field(init=False)

    def __post_init__(self):
        if len(self.v) < 1:
            raise InputError('v must be nonempty')
        if not self.u.startswith(self.v) or len(self.v) > len(self.u):
            raise InputError(f'{self.v} is not a prefix of {self.u}')
        for word in (self.u, self.v):
            if not is_primitive(word):
                raise NotPrimitive(f'{word} is not primitive')
        object.__setattr__(self, 'z', self.u[len(self.v):])

    @property
    def n(self) -> int:
        return len(self.u)

    def to_json(self) -> Dict[str, Any]:
        return {'u': str(self.u), 'v': str(self.v), 'z': str(self.z), 'n': self.n, 'origin': self.origin}


def context_from_decomposition(alpha_prefix: AlphaPrefix, decomposition: LrDecomposition) -> CollapseContext:
    return CollapseContext(
        alpha_prefix.head(decomposition.n),
        alpha_prefix.head(decomposition.m),
        origin=f'lr(m={decomposition.m}, l={decomposition.l})',
    )


def first_occurrence(x: Word, ctx: CollapseContext) -> Optional[int]:
    n = ctx.n
    u, reflected = ctx.u.digits, ctx.u.reflect().digits
    for i in range(len(x) - n + 1):
        window = x.digits[i:i + n]
        if window == u or window == reflected:
            return i
    return None


def _rewrite(ctx: CollapseContext, x: Word, i: int) -> Word:
    rest = x[i + ctx.n:]
    if x.digits[i:i + ctx.n] == ctx.u.digits:
        return x[:i] + ctx.v.minus() + (ctx.z + rest).reflect()
    return x[:i] + ctx.v.reflect().plus() + ctx.z + rest.reflect()


def apply_F(ctx: CollapseContext, x: Word) -> Word:
    if not windows_within(x, ctx.u, strict=False):
        raise PreconditionError(
            f'{x} has a length-{ctx.n} window outside [{ctx.u.reflect()}, {ctx.u}]',
            details={'x': str(x), 'u': str(ctx.u)},
        )
    i = first_occurrence(x, ctx)
    if i is None:
        return x
    return _rewrite(ctx, x, i)


def iterate_f_nk(ctx: CollapseContext, x: Word) -> Word:
    current, previous = x, None
    while True:
        i = first_occurrence(current, ctx)
        if i is None:
            return current
        if previous is not None and i <= previous:
            raise NonContraction(
                f'first occurrence moved from {previous} to {i}',
                details={'x': str(x), 'at': str(current), 'context': ctx.to_json()},
            )
        previous = i
        current = apply_F(ctx, current)


# --- v_i / w_i factorization ------------------------------------------------------

class FactorCase(Enum):
    POSITIVE_L = 'PositiveL'
    CASE_A = 'CaseA'
    CASE_B = 'CaseB'


@dataclass(frozen=True)
class WFactorization:
    """
    alpha = v_1 w_1 w_2 ... with v_{i+1} = v_i w_i and m_i = |v_i|.

    Flags:
    1. tentative: CaseB read off a finite prefix; confidence_depth is that prefix length
    2. tail_periodic: the last w_i was taken from an undeviating tail
    3. xg_route: CaseB with m_s = r_s, handled by the two-state graph instead of a collapse map
    4. m1_heuristic: m_1 came from the bounded scan, not from the caller
    """
    alpha_prefix: AlphaPrefix = field(repr=False)
    v1: Word
    ws: List[Word]
    case: FactorCase
    s: Optional[int] = None
    tentative: bool = False
    confidence_depth: int = 0
    tail_periodic: bool = False
    xg_route: bool = False
    m1_heuristic: bool = False

    @property
    def rs(self) -> List[int]:
        return [len(w) for w in self.ws]

    @property
    def ms(self) -> List[int]:
        lengths = [len(self.v1)]
        for w in self.ws:
            lengths.append(lengths[-1] + len(w))
        return lengths

    def v(self, i: int) -> Word:
        """v_i, 1-based"""
        return self.v1 + sum(self.ws[:i - 1], Word((), self.v1.alphabet))

    def to_json(self) -> Dict[str, Any]:
        return {
            'v1': str(self.v1),
            'ws': [str(w) for w in self.ws],
            'rs': self.rs,
            'case': self.case.value,
            's': self.s,
            'tentative': self.tentative,
            'confidence_depth': self.confidence_depth,
            'tail_periodic': self.tail_periodic,
            'xg_route': self.xg_route,
            'm1_heuristic': self.m1_heuristic,
        }


def exceeds_kl(v: Word) -> bool:
    """(v^-)^inf > alpha(q_KL), decided on a prefix long enough to differ"""
    depth = max(64, 4 * len(v))
    period = v.minus().digits
    candidate = tuple(period[i % len(period)] for i in range(depth))
    return candidate > kl_alpha_digits(v.M, depth).digits


def default_m1(alpha_prefix: AlphaPrefix) -> int:
    """
    Smallest scanned m in N(q) such that every larger scanned m' in N(q) has l(m') = 0.
    Membership in N(q) is judged on the available digits only.
    """
    candidates = []
    for m in range(1, alpha_prefix.certified_len // 2 + 1):
        v = alpha_prefix.head(m)
        if not is_primitive(v) or not exceeds_kl(v):
            continue
        try:
            decomposition = decompose_lr(alpha_prefix, m)
        except (NotApplicable, NoDeviationWithinPrefix):
            continue
        candidates.append(decomposition)
    if not candidates:
        raise NotApplicable(f'no admissible m found in the first {alpha_prefix.certified_len} digits')
    m1 = candidates[-1].m
    for decomposition in reversed(candidates):
        if decomposition.l > 0:
            break
        m1 = decomposition.m
    if candidates[-1].l > 0:
        raise NotApplicable('the largest scanned m still has l > 0', details={'m': candidates[-1].m})
    logger.info(f'Heuristic m_1 = {m1} from {len(candidates)} scanned candidates')
    return m1


def _periodic_after(digits: Tuple[int, ...], start: int, block: Tuple[int, ...]) -> bool:
    return all(d == block[j % len(block)] for j, d in enumerate(digits[start:]))


def factorize_w(alpha_prefix: AlphaPrefix, m1: Optional[int] = None) -> WFactorization:
    heuristic = m1 is None
    if heuristic:
        m1 = default_m1(alpha_prefix)
    L = alpha_prefix.certified_len
    if not 1 <= m1 < L:
        raise PrefixTooShort(f'm_1={m1} leaves no digits to factor in a prefix of length {L}')
    digits = alpha_prefix.head(L).digits
    alphabet = alpha_prefix.digits.alphabet
    v1 = alpha_prefix.head(m1)
    if not is_primitive(v1):
        raise NotPrimitive(f'v_1 = {v1} is not primitive')

    ws: List[Word] = []
    m, positive_l, tail_periodic = m1, False, False
    while m < L:
        v = Word(digits[:m], alphabet)
        block = v.reflect().plus().digits
        j = _first_deviation(digits, m, block)
        if j is None:
            if L - m >= m:
                ws.append(Word(block, alphabet))
                tail_periodic = True
            break
        if digits[m + j - 1] < block[(j - 1) % m]:
            raise NotApplicable(f'alpha falls below {v}({Word(block, alphabet)})^inf at digit {m + j}')
        if j > m:
            positive_l = True
            break
        w = Word(digits[m:m + j], alphabet)
        if not is_primitive(v + w):
            raise NotPrimitive(f'v_{len(ws) + 2} = {v + w} is not primitive')
        ws.append(w)
        m += j

    common = dict(alpha_prefix=alpha_prefix, v1=v1, ws=ws, tail_periodic=tail_periodic, m1_heuristic=heuristic)
    if positive_l and not ws:
        return WFactorization(case=FactorCase.POSITIVE_L, **common)

    lengths = [m1]
    for w in ws:
        lengths.append(lengths[-1] + len(w))
    for s, w in enumerate(ws, start=1):
        r, m_s = len(w), lengths[s - 1]
        if w != Word(digits[:r], alphabet).reflect().plus():
            continue
        is_tail = tail_periodic and s == len(ws)
        if is_tail or (_periodic_after(digits, m_s, w.digits) and L - m_s >= 2 * r):
            return WFactorization(
                case=FactorCase.CASE_B, s=s, tentative=True, confidence_depth=L,
                xg_route=m_s == r, **common,
            )
    for s in range(1, len(ws)):
        w, following = ws[s - 1], ws[s]
        generator = Word(digits[:len(w)], alphabet).reflect().plus()
        if len(w) < len(following) or w.digits > generator.digits:
            return WFactorization(case=FactorCase.CASE_A, s=s, confidence_depth=L, **common)
    raise PrefixTooShort(
        f'{L} digits give factors {[str(w) for w in ws]} without deciding the case',
        details={'certified_len': L, 'm1': m1},
    )


def case_a_context(fact: WFactorization) -> CollapseContext:
    """u = a_1..a_{m_{s+2}}, v = v_{s+1}"""
    if fact.case is not FactorCase.CASE_A:
        raise NotApplicable(f'factorization is {fact.case.value}, not CaseA')
    ms = fact.ms
    if len(ms) < fact.s + 2:
        raise PrefixTooShort(f'CaseA context needs m_{fact.s + 2}')
    prefix = fact.alpha_prefix
    return CollapseContext(prefix.head(ms[fact.s + 1]), prefix.head(ms[fact.s]), origin=f'caseA(s={fact.s})')


def case_b_context(fact: WFactorization) -> CollapseContext:
    """
    v = v_t w_s and u = v_t w_s^(l+1), where l >= 1 is the first repeat count with
    a_1..a_{(l+1)r} > a_1..a_r (Reflect(a_1..a_r)^+)^l and t > s is minimal with m_t > l r.
    """
    if fact.case is not FactorCase.CASE_B:
        raise NotApplicable(f'factorization is {fact.case.value}, not CaseB')
    prefix = fact.alpha_prefix
    digits = prefix.head(prefix.certified_len).digits
    r = fact.rs[fact.s - 1]
    head = Word(digits[:r], prefix.digits.alphabet)
    generator = head.reflect().plus()
    repeats = None
    for candidate in range(1, len(digits) // r):
        if digits[:(candidate + 1) * r] > (head + generator * candidate).digits:
            repeats = candidate
            break
    if repeats is None:
        raise PrefixTooShort('no repeat count found within the prefix', details={'r': r})
    ms = fact.ms
    t = next((t for t in range(fact.s + 1, len(ms) + 1) if ms[t - 1] > repeats * r), None)
    if t is None:
        raise PrefixTooShort(f'no m_t > {repeats * r} within the prefix')
    n = ms[t - 1] + (repeats + 1) * r
    if n > len(digits):
        raise PrefixTooShort(f'CaseB context needs {n} digits, prefix has {len(digits)}')
    return CollapseContext(prefix.head(n), prefix.head(ms[t - 1] + r), origin=f'caseB(s={fact.s}, t={t}, l={repeats})')


# --- audits and fiber census ------------------------------------------------------

CHECKS = ('domain', 'advance', 'equivariance', 'image')


@dataclass(frozen=True)
class WordAudit:
    """Outcome of iterating F on one word, with the lemma checks it passed or failed"""
    word: Word
    image: Optional[Word]
    steps: int
    min_advance: Optional[int]
    domain: bool = True
    advance: bool = True
    equivariance: bool = True
    image_strict: bool = True
    failure: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.domain and self.advance and self.equivariance and self.image_strict

    def outcome(self, check: str) -> bool:
        return {'domain': self.domain, 'advance': self.advance,
                'equivariance': self.equivariance, 'image': self.image_strict}[check]


def audit_word(ctx: CollapseContext, x: Word, required_advance: int) -> WordAudit:
    current, index = x, first_occurrence(x, ctx)
    steps, min_advance = 0, None
    domain = advance = equivariance = True
    failure = None
    while index is not None:
        image = _rewrite(ctx, current, index)
        steps += 1
        if _rewrite(ctx, current.reflect(), index) != image.reflect():
            equivariance = False
            failure = failure or f'F(R({current})) != R(F({current}))'
        if not windows_within(image, ctx.u, strict=False):
            domain = False
            failure = failure or f'F({current}) = {image} leaves the weak window language'
            break
        following = first_occurrence(image, ctx)
        if following is not None:
            step = following - index
            min_advance = step if min_advance is None else min(min_advance, step)
            if step < required_advance:
                advance = False
                failure = failure or f'occurrence moved {index} -> {following} in {current} -> {image}'
                if step <= 0:
                    break
        current, index = image, following
    if index is not None:
        return WordAudit(x, None, steps, min_advance, domain, advance, equivariance, False, failure)
    image_strict = windows_within(current, ctx.u, strict=True)
    if not image_strict:
        failure = failure or f'image {current} has a window equal to a bound'
    return WordAudit(x, current, steps, min_advance, domain, advance, equivariance, image_strict, failure)


def _audit_batch(item: Tuple[CollapseContext, List[Word], int]) -> List[WordAudit]:
    ctx, words, required_advance = item
    return [audit_word(ctx, x, required_advance) for x in words]


def fiber_bound(N: int, k: int) -> Interval:
    """(2N)^(k/N), exact when N divides k, otherwise bracketed to 2^-64"""
    if N < 1:
        raise InputError('N must be at least 1')
    if k % N == 0:
        return Interval.point((2 * N) ** (k // N))
    scale = 2 ** 64
    root, exact = integer_nthroot((2 * N) ** k * scale ** N, N)
    lo = Fraction(root, scale)
    return Interval(lo, lo if exact else Fraction(root + 1, scale))


@dataclass
class FiberCensus:
    n: int
    k: int
    N: int
    domain_size: int
    strict_size: int
    image_size: int
    max_fiber: int
    bound: Interval
    required_advance: int
    min_advance: Optional[int]
    checks: Dict[str, Dict[str, int]]
    failures: List[WordAudit] = field(default_factory=list, repr=False)
    performance_metrics: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def within_bound(self) -> bool:
        # max_fiber <= (2N)^(k/N) without roots
        return self.max_fiber ** self.N <= (2 * self.N) ** self.k

    @property
    def counting_ok(self) -> bool:
        """#B_k(V_{q,n}) <= (2N)^(k/N) #B_k(U_{q,n}) on the window languages"""
        return self.domain_size ** self.N <= (2 * self.N) ** self.k * self.strict_size ** self.N

    def to_json(self) -> Dict[str, Any]:
        return {
            'n': self.n, 'k': self.k, 'N': self.N,
            'domain_size': self.domain_size, 'strict_size': self.strict_size, 'image_size': self.image_size,
            'max_fiber': self.max_fiber, 'bound': self.bound.to_json(), 'within_bound': self.within_bound,
            'counting_ok': self.counting_ok,
            'required_advance': self.required_advance, 'min_advance': self.min_advance,
            'checks': self.checks,
        }


def fiber_census(ctx: CollapseContext, n: int, k: int,
                 runner: Optional[SmartParallelRunner] = None,
                 required_advance: Optional[int] = None) -> FiberCensus:
    """
    Enumerates the weak window language of length k, iterates F on every word and
    groups the words by image.
    """
    if n != ctx.n:
        raise InputError(f'n={n} does not match the context word length {ctx.n}')
    if n < 2:
        raise InputError('fiber bounds need n >= 2')
    if k < 1:
        raise InputError('k must be at least 1')
    if required_advance is None:
        required_advance = -(-n // 2)
    limit = get_settings().state_cap
    domain = enumerate_window_language(ctx.u, k, strict=False, limit=limit)
    strict_size = len(enumerate_window_language(ctx.u, k, strict=True, limit=limit))
    logger.info(f'Fiber census for u={ctx.u} v={ctx.v} k={k}: {len(domain)} words')

    batches = [(ctx, domain[i:i + _AUDIT_BATCH], required_advance) for i in range(0, len(domain), _AUDIT_BATCH)]
    results, metrics = run_items(_audit_batch, batches, runner)
    audits = [audit for batch in results for audit in batch]

    checks = {name: {'passed': 0, 'failed': 0} for name in CHECKS}
    for audit in audits:
        for name in CHECKS:
            checks[name]['passed' if audit.outcome(name) else 'failed'] += 1
    fibers = Counter(audit.image for audit in audits if audit.image is not None)
    advances = [audit.min_advance for audit in audits if audit.min_advance is not None]
    # N = n // 2 unless the context guarantees a smaller advance
    N = min(n // 2, required_advance)
    census = FiberCensus(
        n=n, k=k, N=N,
        domain_size=len(domain),
        strict_size=strict_size,
        image_size=len(fibers),
        max_fiber=max(fibers.values(), default=0),
        bound=fiber_bound(N, k),
        required_advance=required_advance,
        min_advance=min(advances, default=None),
        checks=checks,
        failures=[audit for audit in audits if not audit.passed],
        performance_metrics=metrics,
    )
    if not census.within_bound:
        logger.warning(f'Fiber of size {census.max_fiber} exceeds (2N)^(k/N) for N={N} k={k}')
    return census
