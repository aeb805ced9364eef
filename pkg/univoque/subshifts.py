# univoque/subshifts.py
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from .config import get_settings
from .errors import InputError, InternalConsistencyError, ResourceError
from .expansions import AlphaPrefix
from .intervals import log_lower, log_upper
from .utils import format_rational, setup_logger
from .words import Alphabet, Word

logger = setup_logger('univoque.subshifts')

# integer vector scale used when certifying a power-iteration eigenvector
_CERTIFY_BITS = 40


class SftKind(Enum):
    U_STRICT = 'U'
    V_WEAK = 'V'


@dataclass(frozen=True)
class WordCount:
    k: int
    count: int

    def to_json(self) -> Dict[str, Any]:
        return {'k': self.k, 'count': str(self.count)}


@dataclass(frozen=True)
class EntropyBounds:
    """
    Natural-log entropy sandwich lower <= h <= upper with outward rounding.

    upper is the smaller of two certified bounds:
    1. counting: min over k of log #B_k / k
    2. spectral: largest Collatz-Wielandt upper ratio over strongly connected components
    """
    lower: Fraction
    upper: Fraction
    k_used: int
    scc_count: int
    empty: bool = False
    counting_upper: Optional[Fraction] = None
    spectral_upper: Optional[Fraction] = None

    @property
    def gap(self) -> Fraction:
        return self.upper - self.lower

    def to_json(self) -> Dict[str, Any]:
        return {
            'lower': format_rational(self.lower),
            'upper': format_rational(self.upper),
            'k_used': self.k_used,
            'scc_count': self.scc_count,
            'empty': self.empty,
        }


def _code(digits, base: int) -> int:
    value = 0
    for d in digits:
        value = value * base + d
    return value


def _decode(code: int, length: int, alphabet: Alphabet) -> Word:
    digits = []
    for _ in range(length):
        code, d = divmod(code, alphabet.size)
        digits.append(d)
    return Word(tuple(reversed(digits)), alphabet)


def _prune(src: np.ndarray, dst: np.ndarray, states: int, two_sided: bool) -> np.ndarray:
    """States with an infinite forward continuation (and backward one when two_sided)"""
    alive = np.zeros(states, dtype=bool)
    alive[src] = True
    if two_sided:
        alive &= np.bincount(dst, minlength=states) > 0
    while True:
        keep = alive[src] & alive[dst]
        updated = alive & (np.bincount(src[keep], minlength=states) > 0)
        if two_sided:
            updated &= np.bincount(dst[keep], minlength=states) > 0
        if np.array_equal(updated, alive):
            return alive
        alive = updated


def _check_state_cap(n: int, alphabet: Alphabet):
    cap = get_settings().state_cap
    candidates = alphabet.size ** (n - 1)
    if candidates > cap:
        raise ResourceError(
            f'{candidates} candidate states exceed the cap of {cap}',
            details={'n': n, 'M': alphabet.M, 'state_cap': cap},
        )


class Sft:
    """
    Window-defined subshift of finite type on the de Bruijn graph of (n-1)-words.

    A length-n window w is allowed when Reflect(a_1..a_n) < w < a_1..a_n (U, strict)
    or with <= on both sides (V, weak). Allowed windows form a contiguous range of
    base-(M+1) codes, so edges are generated as arrays without a dense matrix.
    from_windows accepts any explicit window list (test automata such as the golden mean).
    """

    def __init__(self, bound_word: Word, kind: SftKind, two_sided: bool = True):
        self.bound_word = bound_word
        self.kind = kind
        if len(bound_word) < 1:
            raise InputError('window length must be at least 1')
        B = bound_word.alphabet.size
        _check_state_cap(len(bound_word), bound_word.alphabet)
        lo_code = _code(bound_word.reflect().digits, B)
        hi_code = _code(bound_word.digits, B)
        if kind is SftKind.U_STRICT:
            lo_code, hi_code = lo_code + 1, hi_code - 1
        windows = np.arange(lo_code, hi_code + 1, dtype=np.int64) if lo_code <= hi_code else np.zeros(0, dtype=np.int64)
        self._build(windows, len(bound_word), bound_word.alphabet, two_sided, str(bound_word))
        logger.info(
            f'Built {kind.value}-automaton n={self.n}: {self.state_count} states, '
            f'{self.edge_count} edges after pruning'
        )

    @classmethod
    def from_windows(cls, windows: List[Word], two_sided: bool = True) -> 'Sft':
        """Subshift given by an explicit list of allowed length-n windows"""
        if not windows:
            raise InputError('at least one allowed window is needed')
        n, alphabet = len(windows[0]), windows[0].alphabet
        if n < 1 or any(len(w) != n or w.alphabet != alphabet for w in windows):
            raise InputError('allowed windows must share one length and alphabet')
        _check_state_cap(n, alphabet)
        s = cls.__new__(cls)
        s.bound_word, s.kind = None, None
        codes = np.unique(np.array([_code(w.digits, alphabet.size) for w in windows], dtype=np.int64))
        s._build(codes, n, alphabet, two_sided, f'{len(codes)} windows')
        logger.info(f'Built window-list automaton n={s.n}: {s.state_count} states, {s.edge_count} edges')
        return s

    def _build(self, windows: np.ndarray, n: int, alphabet: Alphabet, two_sided: bool, label: str):
        self.alphabet = alphabet
        self.n = n
        self.two_sided = two_sided
        B = alphabet.size
        self.candidate_states = B ** (n - 1)
        src = windows // B
        dst = windows % self.candidate_states

        alive = _prune(src, dst, self.candidate_states, two_sided)
        other = _prune(src, dst, self.candidate_states, not two_sided)
        self.pruning_discrepancy = not np.array_equal(alive, other)
        if self.pruning_discrepancy:
            logger.warning(
                f'One- and two-sided cores differ for n={n} ({label}): '
                f'{int(alive.sum())} vs {int(other.sum())} states'
            )

        keep = alive[src] & alive[dst]
        self.core_codes = np.flatnonzero(alive).astype(np.int64)
        self.src = np.searchsorted(self.core_codes, src[keep]).astype(np.int64)
        self.dst = np.searchsorted(self.core_codes, dst[keep]).astype(np.int64)
        self.labels = (windows[keep] % B).astype(np.int64)
        self._window_codes = windows
        self._offsets = None

    @property
    def state_count(self) -> int:
        return len(self.core_codes)

    @property
    def edge_count(self) -> int:
        return len(self.src)

    @property
    def is_empty(self) -> bool:
        return self.state_count == 0

    def state_word(self, index: int) -> Word:
        return _decode(int(self.core_codes[index]), self.n - 1, self.alphabet)

    def _index_of(self, code: int) -> int:
        i = int(np.searchsorted(self.core_codes, code))
        if i < self.state_count and self.core_codes[i] == code:
            return i
        return -1

    def _csr(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._offsets is None:
            order = np.argsort(self.src, kind='stable')
            counts = np.bincount(self.src, minlength=self.state_count)
            self._offsets = (order, np.concatenate([[0], np.cumsum(counts)]))
        return self._offsets

    def successors(self, state: Word) -> List[Word]:
        if len(state) != self.n - 1:
            raise InputError(f'states are words of length {self.n - 1}')
        index = self._index_of(_code(state.digits, self.alphabet.size))
        if index < 0:
            return []
        order, offsets = self._csr()
        edges = order[offsets[index]:offsets[index + 1]]
        return [self.state_word(int(j)) for j in self.dst[edges]]

    def contains(self, w: Word) -> bool:
        """w in B_|w| of the automaton"""
        B = self.alphabet.size
        k, span = len(w), self.n - 1
        if self.is_empty:
            return False
        if k < span:
            low = _code(w.digits, B) * B ** (span - k)
            high = low + B ** (span - k)
            i = int(np.searchsorted(self.core_codes, low))
            return i < self.state_count and self.core_codes[i] < high
        for start in range(k - span + 1):
            if self._index_of(_code(w.digits[start:start + span], B)) < 0:
                return False
        for start in range(k - self.n + 1):
            code = _code(w.digits[start:start + self.n], B)
            i = int(np.searchsorted(self._window_codes, code))
            if i == len(self._window_codes) or self._window_codes[i] != code:
                return False
        return True

    def count_range(self, k_max: int) -> List[int]:
        """#B_k for k = 1..k_max"""
        if k_max < 1:
            raise InputError('k must be at least 1')
        if self.is_empty:
            return [0] * k_max
        B = self.alphabet.size
        span = self.n - 1
        counts = []
        # below the state length, B_k is the set of state prefixes
        for k in range(1, min(k_max, span - 1) + 1):
            counts.append(len(np.unique(self.core_codes // B ** (span - k))))
        if k_max < max(span, 1):
            return counts
        # B_span is the state set; each further letter is one edge step
        first = max(span, 1)
        steps = k_max - first
        budget = get_settings().count_budget
        if steps * self.edge_count > budget:
            raise ResourceError(
                f'counting to k={k_max} needs {steps * self.edge_count} edge steps, budget {budget}',
                details={'k': k_max, 'edges': self.edge_count, 'count_budget': budget},
            )
        dtype = np.int64 if k_max * np.log2(B) < 62 else object
        if span == 0:
            vector = np.array([self.edge_count], dtype=dtype)
        else:
            vector = np.ones(self.state_count, dtype=dtype)
        counts.append(int(vector.sum()))
        for _ in range(steps):
            following = np.zeros(self.state_count, dtype=dtype)
            np.add.at(following, self.dst, vector[self.src])
            vector = following
            counts.append(int(vector.sum()))
        return counts

    def count_words(self, k: int) -> WordCount:
        return WordCount(k, self.count_range(k)[-1])

    def counts_json(self, k_max: int) -> List[str]:
        return [str(c) for c in self.count_range(k_max)]

    def words(self, k: int, limit: int = 2 ** 22) -> List[Word]:
        """B_k in lexicographic order; small instances only"""
        total = self.count_words(k).count
        if total > limit:
            raise ResourceError(f'{total} words of length {k} exceed the enumeration limit {limit}')
        B = self.alphabet.size
        span = self.n - 1
        if k <= span:
            prefixes = np.unique(self.core_codes // B ** (span - k))
            return [_decode(int(c), k, self.alphabet) for c in prefixes]
        order, offsets = self._csr()
        found = []
        stack = [(i, self.state_word(i).digits) for i in reversed(range(self.state_count))]
        while stack:
            state, digits = stack.pop()
            if len(digits) == k:
                found.append(Word(digits, self.alphabet))
                continue
            edges = order[offsets[state]:offsets[state + 1]]
            for e in sorted(edges, key=lambda e: -int(self.labels[e])):
                stack.append((int(self.dst[e]), digits + (int(self.labels[e]),)))
        return found

    def to_adjacency_text(self) -> str:
        lines = []
        for i in range(self.state_count):
            state = self.state_word(i)
            successors = ' '.join(str(s) or '-' for s in self.successors(state))
            lines.append(f'{str(state) or "-"}: {successors}')
        return '\n'.join(lines)


def build_sft(alpha_prefix: AlphaPrefix, n: int, kind: SftKind, two_sided: bool = True) -> Sft:
    if n < 1:
        raise InputError('window length must be at least 1')
    if n > alpha_prefix.certified_len:
        raise InputError(
            f'window length {n} exceeds the certified prefix length {alpha_prefix.certified_len}',
            details={'n': n, 'certified_len': alpha_prefix.certified_len},
        )
    return Sft(alpha_prefix.head(n), kind, two_sided)


def count_words(s: Sft, k: int) -> WordCount:
    return s.count_words(k)


# --- entropy ------------------------------------------------------------------------

def _extreme_ratios(numerators: np.ndarray, denominators: np.ndarray) -> Tuple[Fraction, Fraction]:
    ratios = numerators / denominators
    bounds = []
    for pick, near in ((np.argmin, lambda r, x: r <= x * (1 + 1e-9)), (np.argmax, lambda r, x: r >= x * (1 - 1e-9))):
        extreme = ratios[pick(ratios)]
        candidates = np.flatnonzero(near(ratios, extreme))
        exact = [Fraction(int(numerators[i]), int(denominators[i])) for i in candidates]
        bounds.append(min(exact) if pick is np.argmin else max(exact))
    return bounds[0], bounds[1]


def _component_ratios(size: int, src: np.ndarray, dst: np.ndarray, iterations: int) -> Tuple[Fraction, Fraction]:
    """
    Collatz-Wielandt bracket of the spectral radius of one irreducible component:
    min (Av)_i / v_i <= rho <= max (Av)_i / v_i for the positive integer vector v.
    """
    if np.all(np.bincount(src, minlength=size) == 1):
        return Fraction(1), Fraction(1)
    v = np.ones(size)
    for _ in range(iterations):
        # A + I has the same eigenvector and is aperiodic
        w = np.bincount(src, weights=v[dst], minlength=size) + v
        w /= w.max()
        if np.max(np.abs(w - v)) < 1e-14:
            v = w
            break
        v = w
    v_int = np.floor(v / v.max() * 2 ** _CERTIFY_BITS).astype(np.int64) + 1
    av_int = np.zeros(size, dtype=np.int64)
    np.add.at(av_int, src, v_int[dst])
    return _extreme_ratios(av_int, v_int)


def spectral_bounds(state_count: int, src: np.ndarray, dst: np.ndarray) -> Tuple[Fraction, Fraction, int]:
    """
    Certified log spectral radius bracket of a graph given as edge arrays: the
    largest per-component bounds over strongly connected components with a cycle.
    Returns (lower, upper, number of such components).
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(state_count))
    graph.add_edges_from(zip(src.tolist(), dst.tolist()))
    component = np.full(state_count, -1, dtype=np.int64)
    local = np.zeros(state_count, dtype=np.int64)
    sizes = []
    for c, nodes in enumerate(nx.strongly_connected_components(graph)):
        nodes = np.fromiter(sorted(nodes), dtype=np.int64)
        component[nodes] = c
        local[nodes] = np.arange(len(nodes))
        sizes.append(len(nodes))
    inner = component[src] == component[dst]
    edge_component = component[src][inner]
    order = np.argsort(edge_component, kind='stable')
    inner_src = local[src[inner]][order]
    inner_dst = local[dst[inner]][order]
    edge_component = edge_component[order]
    starts = np.searchsorted(edge_component, np.arange(len(sizes) + 1))

    iterations = get_settings().power_iterations
    lower, upper, nontrivial = Fraction(0), Fraction(0), 0
    for c, size in enumerate(sizes):
        a, b = starts[c], starts[c + 1]
        if a == b:
            continue
        nontrivial += 1
        ratio_lo, ratio_hi = _component_ratios(size, inner_src[a:b], inner_dst[a:b], iterations)
        if ratio_lo > 1:
            lower = max(lower, log_lower(ratio_lo))
        if ratio_hi > 1:
            upper = max(upper, log_upper(ratio_hi))
    return lower, upper, nontrivial


def entropy_bounds(s: Sft, k_max: int) -> EntropyBounds:
    if k_max < 1:
        raise InputError('k_max must be at least 1')
    if s.is_empty:
        return EntropyBounds(Fraction(0), Fraction(0), k_max, 0, empty=True)

    budget = get_settings().count_budget
    affordable = s.n - 1 + budget // max(1, s.edge_count)
    k_used = max(1, min(k_max, affordable))
    if k_used < k_max:
        logger.info(f'Counting truncated at k={k_used} by the budget ({s.edge_count} edges)')
    counts = s.count_range(k_used)
    counting_upper = min(log_upper(c) / k for k, c in enumerate(counts, start=1))

    lower, spectral_upper, scc_count = spectral_bounds(s.state_count, s.src, s.dst)
    upper = min(counting_upper, spectral_upper, log_upper(s.alphabet.size))
    if lower > upper:
        raise InternalConsistencyError(
            f'entropy lower bound {float(lower)} exceeds upper bound {float(upper)}',
            details={'n': s.n, 'bound': str(s.bound_word)},
        )
    return EntropyBounds(lower, upper, k_used, scc_count, False, counting_upper, spectral_upper)


# --- window languages ---------------------------------------------------------------

def windows_within(x: Word, bound: Word, strict: bool) -> bool:
    """Every length-n window of x lies between Reflect(bound) and bound"""
    n = len(bound)
    top, bottom = bound.digits, bound.reflect().digits
    for i in range(len(x) - n + 1):
        window = x.digits[i:i + n]
        if strict and not bottom < window < top:
            return False
        if not strict and not bottom <= window <= top:
            return False
    return True


def v_language_member(w: Word, alpha_prefix: AlphaPrefix) -> bool:
    """Every suffix of w lies weakly between the equal-length prefixes of Reflect(alpha) and alpha"""
    k = len(w)
    if k > alpha_prefix.certified_len:
        raise InputError(
            f'word of length {k} needs {k} certified digits, prefix has {alpha_prefix.certified_len}',
        )
    top = alpha_prefix.digits.digits
    bottom = alpha_prefix.digits.reflect().digits
    for length in range(1, k + 1):
        suffix = w.digits[k - length:]
        if not bottom[:length] <= suffix <= top[:length]:
            return False
    return True


def enumerate_window_language(bound: Word, k: int, strict: bool = False, limit: int = 2 ** 22) -> List[Word]:
    """
    Words of length k whose length-n windows all pass the window test, in
    lexicographic order, by depth-first extension with pruning.
    """
    alphabet = bound.alphabet
    n = len(bound)
    top, bottom = bound.digits, bound.reflect().digits
    found: List[Word] = []

    def extend(prefix: Tuple[int, ...]):
        if len(prefix) == k:
            if len(found) >= limit:
                raise ResourceError(f'more than {limit} words of length {k}', details={'k': k, 'limit': limit})
            found.append(Word(prefix, alphabet))
            return
        for d in range(alphabet.size):
            candidate = prefix + (d,)
            if len(candidate) >= n:
                window = candidate[-n:]
                if strict and not bottom < window < top:
                    continue
                if not strict and not bottom <= window <= top:
                    continue
            extend(candidate)

    extend(())
    return found
