# test_collapse.py
from itertools import product

import pytest

from univoque.collapse import (
    CollapseContext,
    FactorCase,
    apply_F,
    audit_word,
    case_a_context,
    case_b_context,
    context_from_decomposition,
    decompose_lr,
    exceeds_kl,
    factorize_w,
    fiber_bound,
    fiber_census,
    first_occurrence,
    iterate_f_nk,
)
from univoque.errors import (
    InputError,
    NoDeviationWithinPrefix,
    NotApplicable,
    NonContraction,
    NotPrimitive,
    PreconditionError,
)
from univoque.expansions import AlphaPrefix
from univoque.subshifts import enumerate_window_language, windows_within
from univoque.words import Word, parse_sequence


@pytest.fixture
def lr_context():
    prefix = AlphaPrefix.from_word('1110011')
    return context_from_decomposition(prefix, decompose_lr(prefix, 3))


@pytest.mark.parametrize('text,l,n', [('1110011', 1, 7), ('1110010011', 2, 10)])
def test_decompose_lr_family(text, l, n):
    prefix = AlphaPrefix.from_word(text)
    d = decompose_lr(prefix, 3)
    assert (d.m, d.l, d.r, d.n) == (3, l, 1, n)
    assert d.n == d.m * (d.l + 1) + d.r
    assert d.reconstruct(prefix.head(3)) == prefix.head(n - 1)
    assert d.primitive_ok
    assert d.tail_ok


def test_decompose_lr_failures():
    with pytest.raises(NotPrimitive):
        decompose_lr(AlphaPrefix.from_word('1110011'), 4)
    with pytest.raises(NotApplicable):
        decompose_lr(AlphaPrefix.from_word('1110001'), 3)
    with pytest.raises(NoDeviationWithinPrefix):
        decompose_lr(AlphaPrefix.from_word('111001001'), 3)
    with pytest.raises(InputError):
        decompose_lr(AlphaPrefix.from_word('111'), 4)


def test_context_validation():
    with pytest.raises(InputError):
        CollapseContext(Word.of('1110011'), Word.of('110'))
    with pytest.raises(NotPrimitive):
        CollapseContext(Word.of('1110'), Word.of('111'))
    ctx = CollapseContext(Word.of('1110011'), Word.of('111'))
    assert ctx.z == Word.of('0011')
    assert ctx.n == 7


def test_apply_F_rewrites_first_occurrence(lr_context):
    u = lr_context.u
    assert first_occurrence(u, lr_context) == 0
    assert apply_F(lr_context, u) == Word.of('1101100')
    assert apply_F(lr_context, u.reflect()) == Word.of('0010011')
    assert iterate_f_nk(lr_context, u) == Word.of('1101100')


def test_apply_F_without_occurrence(lr_context):
    x = Word.of('1101100')
    assert first_occurrence(x, lr_context) is None
    assert apply_F(lr_context, x) == x


def test_apply_F_precondition(lr_context):
    with pytest.raises(PreconditionError):
        apply_F(lr_context, Word.of('1111111'))


def _lr_context(text):
    prefix = AlphaPrefix.from_word(text)
    return context_from_decomposition(prefix, decompose_lr(prefix, 3))


@pytest.mark.parametrize('make', [
    lambda: _lr_context('1110011'),
    lambda: _lr_context('1110010011'),
    lambda: case_a_context(factorize_w(AlphaPrefix.from_word('111011'), m1=2)),
], ids=['lr-7', 'lr-10', 'case-a'])
def test_iterate_f_nk_clears_every_occurrence(make):
    ctx = make()
    reflected = ctx.u.reflect()
    for k in range(ctx.n, 13):
        for x in enumerate_window_language(ctx.u, k):
            image = iterate_f_nk(ctx, x)
            assert len(image) == k
            windows = {image.digits[i:i + ctx.n] for i in range(k - ctx.n + 1)}
            assert ctx.u.digits not in windows
            assert reflected.digits not in windows
            assert windows_within(image, ctx.u, strict=True)
            assert iterate_f_nk(ctx, image) == image


def test_iterate_f_nk_reports_non_contraction():
    # rewriting 11 at position 0 yields 00 = Reflect(u) at the same position
    ctx = CollapseContext(Word.of('11'), Word.of('1'))
    assert apply_F(ctx, Word.of('11')) == Word.of('00')
    with pytest.raises(NonContraction):
        iterate_f_nk(ctx, Word.of('11'))
    with pytest.raises(NonContraction):
        iterate_f_nk(ctx, Word.of('0110'))


def test_reflection_equivariance_exhaustive(lr_context):
    for digits in product((0, 1), repeat=9):
        x = Word(digits, lr_context.u.alphabet)
        if not windows_within(x, lr_context.u, strict=False):
            continue
        assert apply_F(lr_context, x.reflect()) == apply_F(lr_context, x).reflect()


def test_audit_word(lr_context):
    audit = audit_word(lr_context, lr_context.u + Word.of('0'), 4)
    assert audit.passed
    assert audit.steps == 1
    assert audit.image is not None
    assert windows_within(audit.image, lr_context.u, strict=True)


def test_factorize_case_a():
    fact = factorize_w(AlphaPrefix.from_word('111011'), m1=2)
    assert fact.case is FactorCase.CASE_A
    assert fact.s == 1
    assert [str(w) for w in fact.ws] == ['1', '01', '1']
    assert fact.ms == [2, 3, 5, 6]
    assert fact.v(2) == Word.of('111')
    assert not fact.m1_heuristic
    ctx = case_a_context(fact)
    assert (str(ctx.u), str(ctx.v)) == ('11101', '111')
    with pytest.raises(NotApplicable):
        case_b_context(fact)


def test_factorize_case_b():
    prefix = AlphaPrefix.from_sequence(parse_sequence('111(01)'), 40)
    fact = factorize_w(prefix, m1=3)
    assert fact.case is FactorCase.CASE_B
    assert fact.s == 1
    assert fact.tentative
    assert fact.confidence_depth == 40
    assert not fact.xg_route
    assert all(str(w) == '01' for w in fact.ws)
    ctx = case_b_context(fact)
    assert (str(ctx.u), str(ctx.v)) == ('111010101', '1110101')
    with pytest.raises(NotApplicable):
        case_a_context(fact)


def test_factorize_positive_l():
    fact = factorize_w(AlphaPrefix.from_word('1110011'), m1=3)
    assert fact.case is FactorCase.POSITIVE_L
    assert fact.ws == []


def test_exceeds_kl():
    assert exceeds_kl(Word.of('111'))
    assert not exceeds_kl(Word.of('11'))


def test_fiber_bound():
    assert fiber_bound(2, 4).lo == fiber_bound(2, 4).hi == 16
    assert fiber_bound(2, 5).lo == fiber_bound(2, 5).hi == 32
    bracket = fiber_bound(3, 4)
    assert bracket.lo ** 3 <= 6 ** 4 <= bracket.hi ** 3
    assert bracket.width < 1e-15
    with pytest.raises(InputError):
        fiber_bound(0, 4)


@pytest.mark.parametrize('text', ['1110011', '1110010011'])
def test_fiber_census_lr_contexts(text, serial_runner):
    prefix = AlphaPrefix.from_word(text)
    ctx = context_from_decomposition(prefix, decompose_lr(prefix, 3))
    n = ctx.n
    for k in range(n, n + 4):
        census = fiber_census(ctx, n, k, serial_runner)
        assert census.failures == []
        assert census.within_bound
        assert census.counting_ok
        assert census.min_advance is None or census.min_advance >= -(-n // 2)
        assert census.domain_size >= census.strict_size >= census.image_size


def test_fiber_census_case_a(serial_runner):
    ctx = case_a_context(factorize_w(AlphaPrefix.from_word('111011'), m1=2))
    census = fiber_census(ctx, ctx.n, ctx.n + 6, serial_runner)
    assert census.failures == []
    assert census.within_bound


def test_fiber_census_argument_checks(lr_context):
    with pytest.raises(InputError):
        fiber_census(lr_context, 6, 8)
