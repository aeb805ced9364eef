# test_expansions.py
import random
from dataclasses import replace
from fractions import Fraction
from itertools import product

import pytest

from univoque.errors import InputError, NotAdmissible
from univoque.expansions import (
    AlphaPrefix,
    Base,
    UnivoqueKind,
    base_from_alpha,
    check_admissible,
    classify_univoque,
    defining_polynomial,
    eval_pi_q,
    greedy_beta,
    kl_alpha_digits,
    kl_base,
    parse_base,
    pi_exact,
    quasi_greedy_alpha,
    thue_morse_bit,
)
from univoque.words import Alphabet, EventuallyPeriodicSeq, Word, parse_sequence, parse_word

PRINTED_THUE_MORSE = '0110100110010110'


def test_alpha_of_integer_base():
    assert str(quasi_greedy_alpha(Base.exact(2), 5).digits) == '11111'
    assert str(quasi_greedy_alpha(Base.exact(3, M=2), 4).digits) == '2222'


def test_alpha_of_rational_base():
    # 1 = 1/q + 0/q^2 + 1/q^3 + ... at q = 3/2
    prefix = quasi_greedy_alpha(Base.exact(Fraction(3, 2)), 8)
    assert prefix.digits.digits[:3] == (1, 0, 1)
    assert prefix.certified_len == 8


def test_greedy_beta_at_two():
    beta = greedy_beta(Base.exact(2), 4)
    assert str(beta.digits) == '1111'
    assert not beta.finite


def test_thue_morse_bits_match_printed_block():
    assert ''.join(str(thue_morse_bit(i)) for i in range(16)) == PRINTED_THUE_MORSE


def test_kl_digits_binary():
    tau = PRINTED_THUE_MORSE + str(bin(16).count('1') % 2)
    expected = tau[1:17]
    assert str(kl_alpha_digits(1, 16)) == expected
    assert expected == '1101001100101101'


def test_kl_digits_ternary():
    tau = [int(c) for c in PRINTED_THUE_MORSE]
    expected = ''.join(str(1 + tau[i] - tau[i - 1]) for i in range(1, 9))
    assert expected == '21020121'
    assert str(kl_alpha_digits(2, 8)) == expected


@pytest.mark.parametrize('M,approx', [(1, 1.78723), (2, 2.53595), (3, 2.91002)])
def test_kl_constants(M, approx):
    q = kl_base(M, 64, '1e-6')
    assert q.lo <= q.hi
    assert abs(float(q.midpoint) - approx) < 1e-4


def test_golden_ratio_from_periodic_alpha():
    q = base_from_alpha(parse_sequence('(10)'), 1, '1e-12')
    assert q.width <= Fraction(1, 10 ** 12)
    assert q.lo ** 2 - q.lo - 1 <= 0 <= q.hi ** 2 - q.hi - 1
    assert q.polynomial == (-1, -1, 1)


def test_base_from_alpha_rejects_inadmissible():
    with pytest.raises(NotAdmissible):
        base_from_alpha(parse_sequence('(01)'), 1, '1e-6')
    with pytest.raises(NotAdmissible):
        check_admissible(parse_word('0'))
    with pytest.raises(NotAdmissible):
        check_admissible(parse_sequence('1(0)'))


def test_base_from_prefix_shares_prefix():
    q = base_from_alpha(parse_word('1101'), 1, '1e-6')
    assert q.lo < q.hi
    assert not q.is_exact
    for point in (q.lo, q.hi):
        assert quasi_greedy_alpha(Base.exact(point), 4).digits == Word.of('1101')


def test_defining_polynomial():
    assert defining_polynomial(parse_sequence('(10)')) == (-1, -1, 1)
    # q^3 = q^2 + q + 1
    assert defining_polynomial(parse_sequence('(110)')) == (-1, -1, -1, 1)


def test_projection():
    assert pi_exact(parse_sequence('(1)'), 2) == 1
    assert pi_exact(Word.of('1'), 2) == Fraction(1, 2)
    enclosure = eval_pi_q(Word.of('11'), Base.exact(2))
    assert enclosure.contains(1)
    assert enclosure.lo == Fraction(3, 4)


def test_parse_base():
    assert parse_base('3/2').lo == Fraction(3, 2)
    assert parse_base('1.75').lo == Fraction(7, 4)
    golden = parse_base('alpha:(10)')
    assert golden.alpha_sequence == parse_sequence('(10)')
    with pytest.raises(InputError):
        parse_base('2.5')
    with pytest.raises(InputError):
        parse_base('abc')


def test_classify_exact():
    golden = base_from_alpha(parse_sequence('(10)'), 1, '1e-9')
    status = classify_univoque(golden, 16)
    assert status.kind is UnivoqueKind.OUTSIDE
    assert status.exact
    tribonacci = base_from_alpha(parse_sequence('(110)'), 1, '1e-9')
    assert classify_univoque(tribonacci, 16).kind is UnivoqueKind.IN_CLOSURE_ONLY


def test_classify_depth_validation():
    with pytest.raises(InputError):
        classify_univoque(Base.exact(2), 0)


def test_alpha_prefix_parry_condition():
    with pytest.raises(NotAdmissible):
        AlphaPrefix.from_word('1011')
    prefix = AlphaPrefix.from_word('1101')
    assert prefix.head(3) == Word.of('110')
    with pytest.raises(InputError):
        prefix.head(5)


def _admissible_periodic(M, max_len):
    found = set()
    for length in range(1, max_len + 1):
        for digits in product(range(M + 1), repeat=length):
            if digits[0] == 0:
                continue
            seq = EventuallyPeriodicSeq.periodic(Word(digits, Alphabet(M)))
            try:
                check_admissible(seq)
            except NotAdmissible:
                continue
            found.add(seq)
    return sorted(found, key=lambda s: (s.M, str(s)))


ROUND_TRIP_CASES = random.Random(11).sample(_admissible_periodic(1, 5), 8) + \
    random.Random(12).sample(_admissible_periodic(2, 3), 6)


@pytest.mark.parametrize('seq', ROUND_TRIP_CASES, ids=str)
def test_base_from_alpha_round_trip(seq):
    q = base_from_alpha(seq, seq.M, '1e-12')
    # drop the known sequence so the digits come from the bracket and the tie test
    stripped = replace(q, alpha_sequence=None)
    L = 3 * (len(seq.preperiod) + len(seq.period))
    assert quasi_greedy_alpha(stripped, L).digits == seq.prefix(L)


def test_alpha_is_monotone_in_q():
    grid = [Fraction(k, 40) for k in range(41, 81)]
    expansions = [quasi_greedy_alpha(Base.exact(q), 24).digits.digits for q in grid]
    assert all(a <= b for a, b in zip(expansions, expansions[1:]))


@pytest.mark.parametrize('alpha,beta,M', [
    ('(10)', '11', 1),
    ('(110)', '111', 1),
    ('(1110)', '1111', 1),
    ('(20)', '21', 2),
])
def test_greedy_and_quasi_greedy_pair(alpha, beta, M):
    q = base_from_alpha(parse_sequence(alpha, M), M, '1e-12')
    greedy = greedy_beta(q, 8)
    assert greedy.finite
    assert greedy.digits == parse_word(beta, M)
    # alpha = (beta^-)^inf when beta is finite
    assert EventuallyPeriodicSeq.periodic(greedy.digits.minus()) == quasi_greedy_alpha(q, 8).sequence


@pytest.mark.parametrize('q', [
    Base.exact(Fraction(3, 2)),
    Base.exact(Fraction(7, 4)),
    Base.exact(2),
    Base.exact(Fraction(5, 2), M=2),
])
@pytest.mark.parametrize('L', [4, 16])
def test_projection_of_alpha_prefix_encloses_one(q, L):
    prefix = quasi_greedy_alpha(q, L).digits
    assert eval_pi_q(prefix, q).contains(1)


def test_projection_over_a_bracket_encloses_one():
    golden = base_from_alpha(parse_sequence('(10)'), 1, '1e-9')
    assert eval_pi_q(quasi_greedy_alpha(golden, 12).digits, golden).contains(1)
    assert eval_pi_q(parse_sequence('(10)'), golden).contains(1)


def test_kl_base_is_a_refinable_bracket():
    q = kl_base(1, 64)
    assert q.lo < q.hi
    assert not q.is_exact
    assert q.refiner is not None
    # digits past the 64 used to build the bracket still follow the Thue-Morse formula
    assert quasi_greedy_alpha(q, 128).digits == kl_alpha_digits(1, 128)


@pytest.mark.parametrize('M', [1, 2])
def test_classify_komornik_loreti_base(M):
    status = classify_univoque(kl_base(M, 64), 64)
    assert status.kind in (UnivoqueKind.IN_U, UnivoqueKind.UNKNOWN_AT_DEPTH)
    assert not status.exact


@pytest.mark.parametrize('q', [Base.exact(2), Base.exact(3, M=2)])
def test_classify_endpoint_base(q):
    status = classify_univoque(q, 8)
    assert status.kind is UnivoqueKind.IN_CLOSURE_ONLY
    assert status.exact


def test_classify_prefix_bracket_uses_certified_digits():
    # every base whose expansion starts 100 has the block 00 below Reflect(10) = 01
    below_golden = base_from_alpha(parse_word('100'), 1, '1e-6')
    status = classify_univoque(below_golden, 8)
    assert status.kind is UnivoqueKind.OUTSIDE
    assert status.witness == 1
    # digits after 1101 differ across the bracket, so the shift at 3 stays open
    open_prefix = base_from_alpha(parse_word('1101'), 1, '1e-6')
    status = classify_univoque(open_prefix, 8)
    assert status.kind is UnivoqueKind.UNKNOWN_AT_DEPTH
    assert status.witness == 3
