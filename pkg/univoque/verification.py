# univoque/verification.py
import random
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Set, Tuple

from .collapse import (
    CHECKS,
    CollapseContext,
    audit_word,
    case_a_context,
    case_b_context,
    context_from_decomposition,
    decompose_lr,
    factorize_w,
    fiber_census,
)
from .config import get_settings
from .dimension import xg_entropy_check
from .errors import InputError, UnivoqueError
from .expansions import AlphaPrefix
from .parallel import SmartParallelRunner
from .subshifts import SftKind, Sft, windows_within
from .utils import setup_logger
from .words import Word, parse_sequence, parse_word

logger = setup_logger('univoque.verification')

SUITES = ('collapse', 'collapse-b', 'counting', 'xg', 'all')

# prefixes a_1..a_n with a first deviation above v (Reflect(v)^+)^inf for v = 111
LR_FAMILY = ('1110011', '1110010011')
CASE_A_PREFIX = '111011'
CASE_B_SEQUENCE = '111(01)'
COUNTING_BOUNDS = ('11111', '11010', '11100', '10101')
MAX_WITNESSES = 20
SAMPLE_SIZE = 20000


class Report:
    """Pass/fail tally per named check plus the first failure witnesses"""

    def __init__(self, suite: str, M: int, seed: int):
        self.suite = suite
        self.M = M
        self.seed = seed
        self.checks: Dict[str, Dict[str, int]] = {}
        self.witnesses: List[Dict[str, Any]] = []
        self.contexts: List[Dict[str, Any]] = []
        self.min_advance: Dict[str, Optional[int]] = {}

    def record(self, check: str, passed: bool, witness: Optional[Dict[str, Any]] = None):
        tally = self.checks.setdefault(check, {'passed': 0, 'failed': 0})
        tally['passed' if passed else 'failed'] += 1
        if not passed and witness is not None:
            self.witnesses.append({'check': check, **witness})

    def add_tally(self, check: str, passed: int, failed: int):
        tally = self.checks.setdefault(check, {'passed': 0, 'failed': 0})
        tally['passed'] += passed
        tally['failed'] += failed

    @property
    def failures(self) -> int:
        return sum(tally['failed'] for tally in self.checks.values())

    def to_json(self) -> Dict[str, Any]:
        witnesses = sorted(self.witnesses, key=lambda w: (w['check'], str(w.get('input', ''))))
        return {
            'suite': self.suite,
            'M': self.M,
            'seed': self.seed,
            'checks': dict(sorted(self.checks.items())),
            'failures': self.failures,
            'witnesses': witnesses[:MAX_WITNESSES],
            'contexts': self.contexts,
            'min_advance': self.min_advance,
        }


# --- collapse-map suites ------------------------------------------------------------

def _lr_contexts(report: Report) -> List[Tuple[CollapseContext, int]]:
    contexts = []
    for text in LR_FAMILY:
        prefix = AlphaPrefix.from_word(text)
        decomposition = decompose_lr(prefix, 3)
        witness = {'input': text, 'context': decomposition.to_json()}
        m, l, r, n = decomposition.m, decomposition.l, decomposition.r, decomposition.n
        report.record('lr_identity', n == m * (l + 1) + r and l >= 0 and 1 <= r <= m,
                      {**witness, 'expected': 'n = m(l+1)+r', 'actual': f'{n} vs {m * (l + 1) + r}'})
        rebuilt = decomposition.reconstruct(prefix.head(m))
        report.record('lr_reconstruct', rebuilt == prefix.head(n - 1),
                      {**witness, 'expected': str(prefix.head(n - 1)), 'actual': str(rebuilt)})
        report.record('lr_primitive', decomposition.primitive_ok,
                      {**witness, 'expected': 'a_1..a_n primitive', 'actual': 'not primitive'})
        report.record('lr_tail', decomposition.tail_ok,
                      {**witness, 'expected': 'a_{n-m+1}..a_n^- > Reflect(a_1..a_m)', 'actual': 'violated'})
        ctx = context_from_decomposition(prefix, decomposition)
        contexts.append((ctx, -(-ctx.n // 2)))
    fact = factorize_w(AlphaPrefix.from_word(CASE_A_PREFIX), m1=2)
    ctx = case_a_context(fact)
    # the CaseA advance is m_{s+1}, which the harness also holds to ceil(n/2)
    contexts.append((ctx, max(fact.ms[fact.s], -(-ctx.n // 2))))
    return contexts


def _case_b_contexts() -> List[Tuple[CollapseContext, int]]:
    sequence = parse_sequence(CASE_B_SEQUENCE)
    fact = factorize_w(AlphaPrefix.from_sequence(sequence, 40), m1=3)
    return [(case_b_context(fact), 1)]


def _sample_window_words(bound: Word, k: int, rng: random.Random, count: int) -> List[Word]:
    alphabet = bound.alphabet
    found: Set[Tuple[int, ...]] = set()
    for _ in range(count):
        digits = tuple(rng.randrange(alphabet.size) for _ in range(k))
        if windows_within(Word(digits, alphabet), bound, strict=False):
            found.add(digits)
    return [Word(d, alphabet) for d in sorted(found)]


def _check_context(report: Report, ctx: CollapseContext, required_advance: int, k_max: int,
                   rng: random.Random, runner: Optional[SmartParallelRunner]):
    report.contexts.append({**ctx.to_json(), 'required_advance': required_advance})
    n = ctx.n
    budget = get_settings().state_cap
    observed: List[int] = []
    for k in range(n, min(n + 6, k_max) + 1):
        if ctx.u.alphabet.size ** k > budget:
            # sampled words, no fiber statistics
            for x in _sample_window_words(ctx.u, k, rng, SAMPLE_SIZE):
                audit = audit_word(ctx, x, required_advance)
                for name in CHECKS:
                    report.record(name, audit.outcome(name), _audit_witness(ctx, audit, name))
                if audit.min_advance is not None:
                    observed.append(audit.min_advance)
            continue
        census = fiber_census(ctx, n, k, runner, required_advance)
        for name in CHECKS:
            report.add_tally(name, census.checks[name]['passed'], census.checks[name]['failed'])
        for audit in census.failures:
            for name in CHECKS:
                if not audit.outcome(name):
                    report.witnesses.append({'check': name, **_audit_witness(ctx, audit, name)})
        report.record('fiber', census.within_bound, {
            'input': f'k={k}', 'context': ctx.to_json(),
            'expected': f'<= {census.bound}', 'actual': census.max_fiber,
        })
        report.record('counting', census.counting_ok, {
            'input': f'k={k}', 'context': ctx.to_json(),
            'expected': f'#V <= (2N)^(k/N) #U', 'actual': f'{census.domain_size} vs {census.strict_size}',
        })
        if census.min_advance is not None:
            observed.append(census.min_advance)
    report.min_advance[str(ctx.u)] = min(observed, default=None)


def _audit_witness(ctx: CollapseContext, audit, check: str) -> Dict[str, Any]:
    return {
        'input': str(audit.word),
        'context': ctx.to_json(),
        'expected': check,
        'actual': audit.failure or 'failed',
    }


# --- counting suite -----------------------------------------------------------------

def _extendable_words(bound: Word, strict: bool, K: int) -> Set[Tuple[int, ...]]:
    """
    Length-K words with valid windows that extend one digit at a time in both
    directions forever, found by trimming the window-valid set to a fixed point.
    """
    size = bound.alphabet.size
    alphabet = bound.alphabet
    n = len(bound)

    def valid(digits: Tuple[int, ...]) -> bool:
        return windows_within(Word(digits, alphabet), bound, strict)

    words: Set[Tuple[int, ...]] = set()
    stack: List[Tuple[int, ...]] = [()]
    while stack:
        digits = stack.pop()
        if len(digits) == K:
            words.add(digits)
            continue
        for d in range(size):
            candidate = digits + (d,)
            if len(candidate) < n or valid(candidate[-n:]):
                stack.append(candidate)
    while True:
        kept = {
            w for w in words
            if any(valid(w + (d,)) and (w + (d,))[1:] in words for d in range(size))
            and any(valid((d,) + w) and ((d,) + w)[:-1] in words for d in range(size))
        }
        if kept == words:
            return words
        words = kept


def _brute_force_counts(bound: Word, strict: bool, K: int) -> List[int]:
    words = _extendable_words(bound, strict, K)
    return [len({w[:k] for w in words}) for k in range(1, K + 1)]


def _check_counting(report: Report, k_max: int):
    K = min(14, k_max)
    for text in COUNTING_BOUNDS:
        for n in range(1, 6):
            bound = parse_word(text[:n])
            for kind in (SftKind.U_STRICT, SftKind.V_WEAK):
                expected = _brute_force_counts(bound, kind is SftKind.U_STRICT, K)
                actual = Sft(bound, kind).count_range(K)
                report.record('count_oracle', actual == expected, {
                    'input': f'{bound} {kind.value}', 'context': {'n': n, 'k_max': K},
                    'expected': expected, 'actual': actual,
                })


# --- X_G suite ----------------------------------------------------------------------

def _check_xg(report: Report, M: int):
    cases = [(r, None) for r in (1, 2, 3)] + [(2, 2), (2, 3)]
    for r, n in cases:
        label = f'r={r}' if n is None else f'r={r} n={n}'
        try:
            bounds = xg_entropy_check(r, n=n, M=M)
            passed = bounds.gap <= Fraction(1, 1000)
            actual = f'[{float(bounds.lower):.6f}, {float(bounds.upper):.6f}]'
        except UnivoqueError as exc:
            passed, actual = False, exc.message
        report.record('xg_entropy', passed, {'input': label, 'context': {'M': M}, 'expected': 'log-law bracket', 'actual': actual})


def run_suite(name: str, M: int = 1, k_max: int = 14, seed: int = 0,
              runner: Optional[SmartParallelRunner] = None) -> Dict[str, Any]:
    if name not in SUITES:
        raise InputError(f'unknown suite {name!r}, expected one of {", ".join(SUITES)}')
    if k_max < 1:
        raise InputError('k_max must be at least 1')
    if name in ('collapse', 'collapse-b', 'counting') and M != 1:
        raise InputError(f'suite {name} is defined for M=1')
    report = Report(name, M, seed)
    rng = random.Random(seed)
    steps: Dict[str, Callable[[], None]] = {
        'collapse': lambda: [_check_context(report, ctx, adv, k_max, rng, runner) for ctx, adv in _lr_contexts(report)],
        'collapse-b': lambda: [_check_context(report, ctx, adv, k_max, rng, runner) for ctx, adv in _case_b_contexts()],
        'counting': lambda: _check_counting(report, k_max),
        'xg': lambda: _check_xg(report, M),
    }
    selected = [s for s in steps if name in (s, 'all')]
    if name == 'all' and M != 1:
        selected = ['xg']
    for suite in selected:
        logger.info(f'Running suite {suite}')
        steps[suite]()
    result = report.to_json()
    logger.info(f'Suite {name} finished with {result["failures"]} failures')
    return result
