# test_words.py
from functools import cmp_to_key
from itertools import combinations, product

import pytest

from univoque.errors import DomainError, InputError
from univoque.words import (
    Alphabet,
    EventuallyPeriodicSeq,
    Ordering,
    Word,
    WordOp,
    is_primitive,
    lex_compare,
    parse_sequence,
    parse_word,
    word_algebra,
)


def test_parse_and_format_word():
    w = parse_word('1101')
    assert w.digits == (1, 1, 0, 1)
    assert str(w) == '1101'
    wide = parse_word('10,3,0', M=10)
    assert wide.digits == (10, 3, 0)
    assert str(wide) == '10,3,0'
    assert len(parse_word('')) == 0


def test_digit_outside_alphabet():
    with pytest.raises(InputError):
        parse_word('12')
    with pytest.raises(InputError):
        parse_word('1x')


def test_reflect_plus_minus():
    w = Word.of('110')
    assert w.reflect() == Word.of('001')
    assert w.plus() == Word.of('111')
    assert Word.of('111').minus() == Word.of('110')
    with pytest.raises(DomainError):
        w.minus()
    with pytest.raises(DomainError):
        Word.of('111').plus()
    assert word_algebra(w, WordOp.REFLECT) == w.reflect()
    assert word_algebra(w, WordOp.PLUS_LAST) == w.plus()


def test_concat_power_slice():
    a, b = Word.of('10'), Word.of('01')
    assert a + b == Word.of('1001')
    assert a * 3 == Word.of('101010')
    assert (a * 3)[1:4] == Word.of('010')
    assert Word.of('0011011').find(Word.of('11')) == 2
    assert Word.of('0000').find(Word.of('1')) == -1


def test_mismatched_alphabets():
    with pytest.raises(InputError):
        Word.of('1') + Word.of('2', M=2)


def test_sequence_canonical_form():
    assert str(parse_sequence('111(01)')) == '11(10)'
    assert parse_sequence('(1111)') == parse_sequence('(1)')
    assert parse_sequence('1(10)').shift(1) == parse_sequence('(10)')
    assert parse_sequence('11(01)').prefix(6) == Word.of('110101')
    with pytest.raises(InputError):
        parse_sequence('11')


def test_lex_compare():
    assert lex_compare(Word.of('101'), Word.of('110')) is Ordering.LESS
    assert lex_compare(Word.of('10'), Word.of('1')) is Ordering.EQUAL
    assert lex_compare(parse_sequence('(10)'), parse_sequence('(1)')) is Ordering.LESS
    assert lex_compare(parse_sequence('1(01)'), parse_sequence('(10)')) is Ordering.EQUAL
    assert lex_compare(parse_sequence('(110)'), parse_sequence('(101)')) is Ordering.GREATER


@pytest.mark.parametrize('text,expected', [
    ('1', True),
    ('11', True),
    ('111', True),
    ('1101', True),
    ('1110011', True),
    ('10', False),
    ('110', False),
    ('1110', False),
])
def test_is_primitive(text, expected):
    assert is_primitive(Word.of(text)) is expected


def test_primitive_empty_word():
    with pytest.raises(InputError):
        is_primitive(Word.of(''))


def test_periodic_reflect():
    seq = EventuallyPeriodicSeq.periodic(Word.of('110'))
    assert seq.reflect() == parse_sequence('(001)')
    assert not seq.ends_in_zeros()
    assert parse_sequence('1(0)').ends_in_zeros()


def _all_words(M, max_len, min_len=0):
    alphabet = Alphabet(M)
    return [Word(digits, alphabet) for n in range(min_len, max_len + 1) for digits in product(range(M + 1), repeat=n)]


def _all_sequences(M, max_len):
    alphabet = Alphabet(M)
    found = set()
    for total in range(1, max_len + 1):
        for t in range(1, total + 1):
            for pre in product(range(M + 1), repeat=total - t):
                for per in product(range(M + 1), repeat=t):
                    found.add(EventuallyPeriodicSeq(Word(pre, alphabet), Word(per, alphabet)))
    return sorted(found, key=str)


def _digits_key(x, depth=64):
    # words are read as x 0^inf
    if isinstance(x, Word):
        return x.digits + (0,) * (depth - len(x))
    return x.prefix(depth).digits


def _reverse(order):
    return {Ordering.LESS: Ordering.GREATER, Ordering.GREATER: Ordering.LESS, Ordering.EQUAL: Ordering.EQUAL}[order]


def test_lex_compare_is_a_total_order():
    items = _all_words(1, 6) + _all_sequences(1, 5)
    for a, b in combinations(items, 2):
        order = lex_compare(a, b)
        ka, kb = _digits_key(a), _digits_key(b)
        expected = Ordering.EQUAL if ka == kb else Ordering.LESS if ka < kb else Ordering.GREATER
        assert order is expected, (str(a), str(b))
        assert lex_compare(b, a) is _reverse(order)
    # transitivity: a sort by lex_compare is a chain under lex_compare
    chain = sorted(items, key=cmp_to_key(lambda a, b: lex_compare(a, b).value))
    for a, b in zip(chain, chain[1:]):
        assert lex_compare(a, b) is not Ordering.GREATER


def test_reflection_reverses_order():
    for length in range(1, 7):
        same_length = _all_words(1, length, min_len=length)
        for a, b in combinations(same_length, 2):
            assert lex_compare(a.reflect(), b.reflect()) is _reverse(lex_compare(a, b))
    for a, b in combinations(_all_sequences(2, 3), 2):
        assert lex_compare(a.reflect(), b.reflect()) is _reverse(lex_compare(a, b))


def _primitive_by_scan(digits, M):
    m = len(digits)
    for i in range(m):
        head, tail = digits[:m - i], digits[i:]
        if not tuple(M - d for d in head) < tail <= head:
            return False
    return True


@pytest.mark.parametrize('M', [1, 2])
def test_is_primitive_matches_definition_scan(M):
    for w in _all_words(M, 10, min_len=1):
        assert is_primitive(w) is _primitive_by_scan(w.digits, M), str(w)


def test_canonical_form_is_idempotent():
    alphabet = Alphabet(1)
    for pre in _all_words(1, 4):
        for per in _all_words(1, 4, min_len=1):
            seq = EventuallyPeriodicSeq(pre, per)
            again = EventuallyPeriodicSeq(seq.preperiod, seq.period)
            assert (again.preperiod, again.period) == (seq.preperiod, seq.period)
            # canonical form denotes the same sequence
            naive = pre.digits + per.digits * 12
            assert seq.prefix(len(naive)) == Word(naive, alphabet)
