# univoque/dimension.py
import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from sympy import Poly, Rational, symbols

from .collapse import exceeds_kl
from .config import get_settings
from .errors import InputError, InternalConsistencyError, NotPrimitive, ToleranceNotReached, UnivoqueError
from .expansions import AlphaPrefix, Base, base_from_alpha, pi_exact, quasi_greedy_alpha
from .intervals import Interval, log_interval, log_lower, log_upper
from .parallel import SmartParallelRunner, run_items
from .subshifts import EntropyBounds, SftKind, build_sft, entropy_bounds, spectral_bounds
from .utils import format_rational, parse_rational, setup_logger
from .words import Alphabet, EventuallyPeriodicSeq, Word, is_primitive

logger = setup_logger('univoque.dimension')

_X = symbols('x')

CSV_FIELDS = ('q_lo', 'q_hi', 'n_used', 'entropy_lo', 'entropy_hi', 'dim_lo', 'dim_hi', 'status')


def default_n_max(M: int) -> int:
    """20 for M = 1, otherwise the largest n whose automaton fits under the state cap"""
    cap = get_settings().state_cap
    n = 2
    while n < 20 and (M + 1) ** n <= cap:
        n += 1
    return n


def _dimension(q: Base, lower: Fraction, upper: Fraction) -> Interval:
    # dim_H U_q <= 1, so the upper end is clamped
    dim = Interval(lower, upper) / log_interval(q.interval())
    return Interval(min(dim.lo, Fraction(1)), min(dim.hi, Fraction(1)))


@dataclass
class EntropyEstimate:
    """
    Certified sandwich h(U_{q,n}) <= H(q) <= h(V_{q,n}) and the dimension interval it implies.
    history holds the running best after each n of the schedule.
    """
    q: Base
    n_used: int
    lower: Fraction
    upper: Fraction
    dim_lower: Fraction
    dim_upper: Fraction
    tol: Fraction
    k_used: int = 0
    history: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def gap(self) -> Fraction:
        return self.upper - self.lower

    @property
    def tolerance_reached(self) -> bool:
        return self.gap <= self.tol

    @property
    def entropy(self) -> Interval:
        return Interval(self.lower, self.upper)

    @property
    def dimension(self) -> Interval:
        return Interval(self.dim_lower, self.dim_upper)

    @property
    def status(self) -> str:
        return 'ok' if self.tolerance_reached else 'tolerance_not_reached'

    def raise_for_status(self):
        if not self.tolerance_reached:
            raise ToleranceNotReached(
                f'entropy gap {float(self.gap):.3g} above tolerance {float(self.tol):.3g} at n={self.n_used}',
                estimate=self,
                details={'n_used': self.n_used, 'gap': format_rational(self.gap)},
            )

    def csv_row(self) -> Dict[str, Any]:
        return {
            'q_lo': format_rational(self.q.lo),
            'q_hi': format_rational(self.q.hi),
            'n_used': self.n_used,
            'entropy_lo': format_rational(self.lower),
            'entropy_hi': format_rational(self.upper),
            'dim_lo': format_rational(self.dim_lower),
            'dim_hi': format_rational(self.dim_upper),
            'status': self.status,
        }

    def to_json(self) -> Dict[str, Any]:
        return {
            'q': self.q.to_json(),
            'n_used': self.n_used,
            'k_used': self.k_used,
            'entropy': self.entropy.to_json(),
            'dimension': self.dimension.to_json(),
            'tol': format_rational(self.tol),
            'tolerance_reached': self.tolerance_reached,
            'history': [
                {
                    'n': step['n'],
                    'primitive': step['primitive'],
                    'lower': format_rational(step['lower']),
                    'upper': format_rational(step['upper']),
                }
                for step in self.history
            ],
        }


def n_schedule(prefix: AlphaPrefix, n_max: int, prefer_primitive: bool = True) -> List[Tuple[int, bool]]:
    """
    Window lengths 4, 8, 16, ... capped by n_max. Each length is replaced by the largest
    primitive prefix length in its doubling step when one exists.
    """
    targets = []
    n = 4
    while n < n_max:
        targets.append(n)
        n *= 2
    targets.append(n_max)
    schedule, previous = [], 1
    for target in targets:
        primitive = [m for m in range(previous + 1, target + 1) if is_primitive(prefix.head(m))]
        if prefer_primitive and primitive:
            schedule.append((primitive[-1], True))
        else:
            schedule.append((target, target in primitive))
        previous = target
    return schedule


def sandwich_entropy(q: Base, tol: Union[Fraction, str], n_max: Optional[int] = None,
                     k_max: int = 64, prefer_primitive: bool = True) -> EntropyEstimate:
    tol = parse_rational(tol)
    if tol <= 0:
        raise InputError('tolerance must be positive')
    n_max = n_max or default_n_max(q.M)
    if n_max < 2:
        raise InputError('n_max must be at least 2')
    prefix = quasi_greedy_alpha(q, n_max)
    q = prefix.base or q

    lower, upper = Fraction(0), log_upper(q.M + 1)
    k_used, n_used, history = 0, 0, []
    for n, primitive in n_schedule(prefix, n_max, prefer_primitive):
        inner = entropy_bounds(build_sft(prefix, n, SftKind.U_STRICT), k_max)
        outer = entropy_bounds(build_sft(prefix, n, SftKind.V_WEAK), k_max)
        lower, upper = max(lower, inner.lower), min(upper, outer.upper)
        if lower > upper:
            raise InternalConsistencyError(
                f'h(U) lower bound {float(lower)} above h(V) upper bound {float(upper)} at n={n}',
                details={'n': n, 'q': q.to_json()},
            )
        n_used, k_used = n, max(inner.k_used, outer.k_used)
        history.append({'n': n, 'primitive': primitive, 'lower': lower, 'upper': upper})
        logger.info(f'n={n}: entropy in [{float(lower):.6f}, {float(upper):.6f}]')
        if upper - lower <= tol:
            break

    dim = _dimension(q, lower, upper)
    estimate = EntropyEstimate(q, n_used, lower, upper, dim.lo, dim.hi, tol, k_used, history)
    if not estimate.tolerance_reached:
        logger.warning(f'Tolerance {float(tol):.3g} not reached by n={n_used} (gap {float(estimate.gap):.3g})')
    return estimate


def hausdorff_dimension(q: Base, tol: Union[Fraction, str], n_max: Optional[int] = None, k_max: int = 64) -> Interval:
    return sandwich_entropy(q, tol, n_max, k_max).dimension


# --- plateaus and approximants ----------------------------------------------------

@dataclass(frozen=True)
class Plateau:
    """[q_L, q_R] with alpha(q_L) = (w^-)^inf and alpha(q_R) = w (Reflect(w)^+)^inf"""
    word: Word
    q_L: Base
    q_R: Base
    above_kl: bool

    def contains(self, q: Fraction) -> bool:
        return self.q_L.hi <= q <= self.q_R.lo

    def to_json(self) -> Dict[str, Any]:
        return {'word': str(self.word), 'q_L': self.q_L.to_json(), 'q_R': self.q_R.to_json(), 'above_kl': self.above_kl}


def plateau_from_word(w: Word, width: Union[Fraction, str] = Fraction(1, 10 ** 12)) -> Plateau:
    if not is_primitive(w):
        raise NotPrimitive(f'{w} is not primitive')
    left = EventuallyPeriodicSeq.periodic(w.minus())
    right = EventuallyPeriodicSeq(w, w.reflect().plus())
    q_L = base_from_alpha(left, w.M, width)
    q_R = base_from_alpha(right, w.M, width)
    return Plateau(w, q_L, q_R, exceeds_kl(w))


def xg_approximant_base(word: Word, n: int, width: Union[Fraction, str] = Fraction(1, 10 ** 12)) -> Base:
    """q_n with alpha(q_n) = (a (Reflect(a)^+)^n Reflect(a))^inf, increasing to the base of a (Reflect(a)^+)^inf"""
    if n < 1:
        raise InputError('n must be at least 1')
    if not is_primitive(word):
        raise NotPrimitive(f'{word} is not primitive')
    period = word + word.reflect().plus() * n + word.reflect()
    return base_from_alpha(EventuallyPeriodicSeq.periodic(period), word.M, width)


def multinacci_phi(n: int, width: Union[Fraction, str] = Fraction(1, 10 ** 12)) -> Interval:
    """Bracket of the positive root of 1 + x + ... + x^(n-1) = x^n"""
    if n < 1:
        raise InputError('n must be at least 1')
    if n == 1:
        return Interval.point(1)
    width = parse_rational(width)
    poly = Poly(_X ** n - sum(_X ** i for i in range(n)), _X)
    (lo, hi), _ = poly.intervals(eps=Rational(width.numerator, width.denominator), inf=1, sup=2)[0]
    return Interval(Fraction(int(lo.p), int(lo.q)), Fraction(int(hi.p), int(hi.q)))


# --- the two-state labeled graph ---------------------------------------------------

def xg_graph(generator: Word) -> nx.MultiDiGraph:
    """
    Two states 0 and 1 with labels of length r = |generator| = |a|:
    0 -> 0 Reflect(a)^+, 0 -> 1 Reflect(a), 1 -> 1 a^-, 1 -> 0 a.
    """
    graph = nx.MultiDiGraph()
    graph.add_edge(0, 0, label=generator.reflect().plus())
    graph.add_edge(0, 1, label=generator.reflect())
    graph.add_edge(1, 1, label=generator.minus())
    graph.add_edge(1, 0, label=generator)
    return graph


def _digit_graph(graph: nx.MultiDiGraph) -> nx.MultiDiGraph:
    """Splits every word label into single-digit edges through fresh intermediate states"""
    expanded = nx.MultiDiGraph()
    fresh = max(graph.nodes) + 1
    for source, target, label in graph.edges(data='label'):
        previous = source
        for position, digit in enumerate(label.digits):
            if position == len(label) - 1:
                following = target
            else:
                following, fresh = fresh, fresh + 1
            expanded.add_edge(previous, following, label=digit)
            previous = following
    return expanded


def _word_automaton(graph: nx.MultiDiGraph, M: int, forbidden: Sequence[Tuple[int, ...]]) -> Tuple[int, np.ndarray, np.ndarray]:
    """
    Deterministic automaton of the label words of graph avoiding the forbidden blocks:
    subset construction from the full state set, paired with the last few digits read.
    State 0 is the start state.
    """
    span = max((len(f) for f in forbidden), default=1) - 1
    moves: Dict[int, List[Tuple[int, int]]] = {}
    for source, target, digit in graph.edges(data='label'):
        moves.setdefault(source, []).append((digit, target))

    start = (frozenset(graph.nodes), ())
    index = {start: 0}
    queue = [start]
    src, dst = [], []
    while queue:
        state = queue.pop(0)
        subset, window = state
        for digit in range(M + 1):
            following = frozenset(t for node in subset for d, t in moves.get(node, ()) if d == digit)
            if not following:
                continue
            extended = window + (digit,)
            if any(extended[-len(f):] == f for f in forbidden if len(extended) >= len(f)):
                continue
            target = (following, extended[len(extended) - span:] if span else ())
            if target not in index:
                index[target] = len(index)
                queue.append(target)
            src.append(index[state])
            dst.append(index[target])
    return len(index), np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)


def _count_from_start(state_count: int, src: np.ndarray, dst: np.ndarray, k_max: int) -> List[int]:
    dtype = np.int64 if k_max < 62 else object
    vector = np.zeros(state_count, dtype=dtype)
    vector[0] = 1
    counts = []
    for _ in range(k_max):
        following = np.zeros(state_count, dtype=dtype)
        np.add.at(following, dst, vector[src])
        vector = following
        counts.append(int(vector.sum()))
    return counts


def labeled_graph_entropy(graph: nx.MultiDiGraph, M: int, k_max: int,
                          forbidden: Sequence[Word] = ()) -> EntropyBounds:
    """Certified entropy bracket of the label shift of a word-labeled graph"""
    blocks = [f.digits for f in forbidden]
    state_count, src, dst = _word_automaton(_digit_graph(graph), M, blocks)
    counts = _count_from_start(state_count, src, dst, k_max)
    counting_upper = min(log_upper(c) / k for k, c in enumerate(counts, start=1) if c > 0)
    lower, spectral_upper, scc_count = spectral_bounds(state_count, src, dst)
    upper = min(counting_upper, spectral_upper)
    return EntropyBounds(lower, upper, k_max, scc_count, False, counting_upper, spectral_upper)


def xg_entropy_check(r: int, k_max: int = 64, n: Optional[int] = None,
                     generator: Optional[Word] = None, M: int = 1) -> EntropyBounds:
    """
    Entropy of the two-state graph shift for a primitive generator a of length r
    (default M^r). With n, sequences containing a (Reflect(a)^+)^n or its reflection
    are excluded. The bracket must meet log 2 / r, or log phi_n / r when restricted.
    """
    if r < 1:
        raise InputError('r must be at least 1')
    generator = generator or Word((M,) * r, Alphabet(M))
    if len(generator) != r:
        raise InputError(f'generator {generator} does not have length {r}')
    if not is_primitive(generator):
        raise NotPrimitive(f'{generator} is not primitive')
    forbidden: List[Word] = []
    if n is not None:
        block = generator + generator.reflect().plus() * n
        forbidden = [block, block.reflect()]
    bounds = labeled_graph_entropy(xg_graph(generator), generator.M, k_max, forbidden)

    if n is None:
        expected = log_interval(Interval.point(2)).scale(Fraction(1, r))
    else:
        expected = log_interval(multinacci_phi(n)).scale(Fraction(1, r))
    if not Interval(bounds.lower, bounds.upper).intersects(expected):
        raise InternalConsistencyError(
            f'graph entropy [{float(bounds.lower):.6f}, {float(bounds.upper):.6f}] misses {expected}',
            details={'r': r, 'n': n, 'generator': str(generator)},
        )
    return bounds


# --- sweeps ----------------------------------------------------------------------

@dataclass
class SweepRow:
    index: int
    q: Fraction
    estimate: Optional[EntropyEstimate] = None
    error: Optional[str] = None
    error_detail: Optional[str] = None

    def csv_row(self) -> Dict[str, Any]:
        if self.estimate is not None:
            return self.estimate.csv_row()
        text = format_rational(self.q)
        return {'q_lo': text, 'q_hi': text, 'n_used': '', 'entropy_lo': '', 'entropy_hi': '',
                'dim_lo': '', 'dim_hi': '', 'status': self.error}

    def to_json(self) -> Dict[str, Any]:
        if self.estimate is not None:
            return {'index': self.index, 'status': self.estimate.status, **self.estimate.to_json()}
        return {'index': self.index, 'q': format_rational(self.q), 'status': self.error, 'detail': self.error_detail}


@dataclass
class SweepResult:
    rows: List[SweepRow]
    consistent: bool
    performance_metrics: Dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator='\n')
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row.csv_row())
        return buffer.getvalue()

    def to_json(self) -> Dict[str, Any]:
        return {'rows': [row.to_json() for row in self.rows], 'consistent': self.consistent}


def _sweep_point(item: Tuple[int, Fraction, int, Fraction, Optional[int], int]) -> SweepRow:
    index, q, M, tol, n_max, k_max = item
    try:
        # one fixed n-schedule for every grid point keeps the lower bounds comparable
        estimate = sandwich_entropy(Base.exact(q, M), tol, n_max, k_max, prefer_primitive=False)
    except UnivoqueError as exc:
        return SweepRow(index, q, error=type(exc).__name__, error_detail=exc.message)
    return SweepRow(index, q, estimate)


def _monotone_consistent(rows: List[SweepRow], slack: Fraction) -> bool:
    """H is nondecreasing: no later upper bound may fall below an earlier lower bound"""
    best_lower = Fraction(0)
    for row in rows:
        if row.estimate is None:
            continue
        if row.estimate.upper + slack < best_lower:
            logger.warning(f'Entropy at q={float(row.q):.6f} falls below an earlier certified lower bound')
            return False
        best_lower = max(best_lower, row.estimate.lower)
    return True


def sweep(q_from: Union[Base, Fraction, str], q_to: Union[Base, Fraction, str], steps: int,
          tol: Union[Fraction, str], M: int = 1, n_max: Optional[int] = None, k_max: int = 64,
          runner: Optional[SmartParallelRunner] = None) -> SweepResult:
    lo = q_from.midpoint if isinstance(q_from, Base) else parse_rational(q_from)
    hi = q_to.midpoint if isinstance(q_to, Base) else parse_rational(q_to)
    tol = parse_rational(tol)
    if steps < 2:
        raise InputError('a sweep needs at least 2 points')
    if not 1 < lo < hi <= M + 1:
        raise InputError(f'sweep range [{lo}, {hi}] must satisfy 1 < q_from < q_to <= {M + 1}')
    grid = [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]
    items = [(i, q, M, tol, n_max, k_max) for i, q in enumerate(grid)]
    rows, metrics = run_items(_sweep_point, items, runner)
    failed = sum(1 for row in rows if row.error is not None)
    logger.info(f'Sweep over {steps} points finished, {failed} points failed')
    return SweepResult(rows, _monotone_consistent(rows, tol), metrics)


# --- box counting -------------------------------------------------------------------

def box_count_estimate(q: Base, n: int, k: int) -> Fraction:
    """
    Uncertified dimension estimate: the projections of the length-k cylinders of U_{q,n}
    are counted on a grid of mesh (M / (q - 1)) q^-k.
    """
    if k < 1:
        raise InputError('k must be at least 1')
    prefix = quasi_greedy_alpha(q, n)
    words = build_sft(prefix, n, SftKind.U_STRICT).words(k)
    if not words:
        return Fraction(0)
    point = q.lo if q.is_exact else q.midpoint
    mesh = Fraction(q.M) / (point - 1) / point ** k
    boxes = {floor(pi_exact(w, point) / mesh) for w in words}
    estimate = log_lower(len(boxes)) / (k * log_upper(point))
    logger.info(f'{len(words)} cylinders fall in {len(boxes)} boxes at k={k}')
    return estimate
