# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
from fractions import Fraction

import pytest

from smtpipe.term_core import (
    NIL, T, App, ArityMismatch, BadToken, BareSymbol, Clause, Const, Dotted, EmptyClause, FuelExhausted, IntConst,
    SymConst, Sym, UnbalancedParen, UnboundVar, UnknownFunction, VAlist, VBool, VCons, VInt, VRat, VSym, Var,
    clause_eval, clause_is_tautology, clausify, eval_term, format_clause, free_vars, implication_clause, parse_clause,
    parse_sexpr, parse_term, print_sexpr, read_all, split_implication, value_to_term,
)
from smtpipe.type_registry import TypeRegistry, register_defun


@pytest.fixture
def reg():
    return TypeRegistry()


def _v(name):
    return Var(name)


def _c(n):
    return Const(IntConst(n))


@pytest.mark.precommit
def test_reader_returns_trailing_offset():
    sexpr, end = parse_sexpr("(a (b 1/2) 'c) rest")
    assert sexpr == (Sym('A'), (Sym('B'), Fraction(1, 2)), (Sym('QUOTE'), Sym('C')))
    assert end == 15
    assert print_sexpr(sexpr) == '(A (B 1/2) (QUOTE C))'


@pytest.mark.precommit
@pytest.mark.parametrize("text,expected", [
    ('42', 42),
    ('-7', -7),
    ('4/2', 2),
    ('-3/6', Fraction(-1, 2)),
    ('1.5', Fraction(3, 2)),
    ('Foo-Bar', Sym('FOO-BAR')),
    ('(a . b)', Dotted((Sym('A'),), Sym('B'))),
    ('(a . (b c))', (Sym('A'), Sym('B'), Sym('C'))),
    ('(a . nil)', (Sym('A'),)),
    ('()', ()),
])
def test_reader_atoms_and_pairs(text, expected):
    assert parse_sexpr(text)[0] == expected


@pytest.mark.precommit
@pytest.mark.parametrize("text,error,offset", [
    ('(a (b)', UnbalancedParen, 0),
    (')', UnbalancedParen, 0),
    ('#x', BadToken, 0),
    ('(a #)', BadToken, 3),
    ('1/0', BadToken, 0),
    ('( . a)', BadToken, 2),
    ('', BadToken, 0),
])
def test_reader_errors_carry_offsets(text, error, offset):
    with pytest.raises(error) as err:
        parse_sexpr(text)
    assert err.value.offset == offset


@pytest.mark.precommit
def test_read_all_skips_comments():
    forms = read_all('; c\n(a) ; x\n b')
    assert forms == [((Sym('A'),), 4), (Sym('B'), 13)]


@pytest.mark.precommit
def test_clausify(reg):
    c = clausify(parse_term('(implies (and p q) (or r s))', reg))
    assert c.disjuncts == (App('NOT', (_v('P'),)), App('NOT', (_v('Q'),)), _v('R'), _v('S'))
    c = clausify(parse_term('(not (and a b))', reg))
    assert c.disjuncts == (App('NOT', (_v('A'),)), App('NOT', (_v('B'),)))
    assert clausify(parse_term('x', reg)).disjuncts == (_v('X'),)


@pytest.mark.precommit
def test_empty_clause_is_rejected():
    with pytest.raises(EmptyClause):
        Clause(())


@pytest.mark.precommit
@pytest.mark.parametrize("text,error", [
    ('(+ x car)', BareSymbol),
    ('(+ x :key)', BareSymbol),
    ('(frob x)', UnknownFunction),
    ('(car x y)', ArityMismatch),
    ('(if a b)', ArityMismatch),
])
def test_resolution_errors(reg, text, error):
    with pytest.raises(error):
        parse_term(text, reg)


@pytest.mark.precommit
def test_restricted_variables(reg):
    assert parse_term('(+ x 1)', reg, variables=['x']) == App('+', (_v('X'), _c(1)))
    with pytest.raises(BareSymbol):
        parse_term('(+ x y)', reg, variables=['x'])


@pytest.mark.precommit
def test_let_and_quote(reg):
    assert parse_term('(let ((a 1) (b 2)) (+ a b))', reg) == App('+', (_c(1), _c(2)))
    assert parse_term('(let* ((a 1) (b (+ a 1))) b)', reg) == App('+', (_c(1), _c(1)))
    assert parse_term('(let ((a 1) (b a)) b)', reg) == _v('A')
    assert parse_term("'foo", reg) == Const(SymConst('FOO'))
    assert parse_term("'nil", reg) == NIL
    assert parse_term("'()", reg) == NIL
    assert parse_term('t', reg) == T


@pytest.mark.precommit
@pytest.mark.parametrize("text,expected", [
    ('(car (cons 1 2))', VInt(1)),
    ('(cdr (cons 1 2))', VInt(2)),
    ('(car nil)', VBool(False)),
    ('(if nil 1 2)', VInt(2)),
    ('(/ 5 0)', VInt(0)),
    ('(/ 1 2)', VRat(Fraction(1, 2))),
    ('(- 3)', VInt(-3)),
    ('(+ 1/2 1/2)', VInt(1)),
    ("(equal 'a 'A)", VBool(True)),
    ("(assoc-equal 'a (acons 'a 1 nil))", VCons(VSym('A'), VInt(1))),
    ("(cdr (assoc-equal 'b (acons 'a 1 nil)))", VBool(False)),
    ('(integerp 1/2)', VBool(False)),
    ('(rationalp 1/2)', VBool(True)),
    ('(symbolp nil)', VBool(True)),
    ('(iff 1 t)', VBool(True)),
])
def test_eval_primitives(reg, text, expected):
    assert eval_term(parse_term(text, reg), {}, reg) == expected


@pytest.mark.precommit
def test_eval_user_functions_and_fuel(reg):
    reg = register_defun(reg, 'count-down', ['n'], parse_sexpr('(if (< 0 n) (count-down (- n 1)) n)')[0])
    assert eval_term(parse_term('(count-down 5)', reg), {}, reg) == VInt(0)
    with pytest.raises(FuelExhausted):
        eval_term(parse_term('(count-down 10)', reg), {}, reg, fuel=5)
    with pytest.raises(UnboundVar):
        eval_term(parse_term('(count-down k)', reg), {}, reg)


@pytest.mark.precommit
def test_clause_eval(reg):
    c = clausify(parse_term('(implies (< 0 x) (< 0 (* x x)))', reg))
    for x in range(-3, 4):
        assert clause_eval(c, {'X': VInt(x)}, reg)
    c = clausify(parse_term('(< 0 x)', reg))
    assert not clause_eval(c, {'X': VInt(0)}, reg)


@pytest.mark.precommit
@pytest.mark.parametrize("text,expected", [
    ('(implies (consp x) (consp x))', True),
    ('(implies (and p q) q)', True),
    ('(or t p)', True),
    ('(implies p q)', False),
    ('(implies (and (consp x) p) (consp x))', True),
    ('(implies (consp x) (null x))', False),
])
def test_tautology_check(reg, text, expected):
    assert clause_is_tautology(clausify(parse_term(text, reg))) is expected


@pytest.mark.precommit
def test_free_vars_in_first_occurrence_order(reg):
    assert free_vars(parse_term('(+ y (* x y) z)', reg)) == ('Y', 'X', 'Z')
    assert free_vars(clausify(parse_term('(implies (< b a) (< c a))', reg))) == ('B', 'A', 'C')


@pytest.mark.precommit
def test_implication_clause_splits_back(reg):
    a = Clause((_v('P'), _v('Q')))
    b = Clause((_v('R'),))
    assert split_implication(implication_clause(a, b)) == (a, b)
    assert split_implication(b) is None


@pytest.mark.precommit
def test_format_clause_reads_back(reg):
    c = clausify(parse_term("(implies (and (integerp x) (equal s 'a)) (< (/ 1 3) (car l)))", reg))
    text = format_clause(c)
    assert text.startswith('(OR ')
    assert text.count('\n') == len(c) - 1
    assert parse_clause(text, reg) == c


@pytest.mark.precommit
def test_value_to_term_evaluates_back(reg):
    for v in (VInt(3), VRat(Fraction(-2, 5)), VSym('A'), VBool(True), VCons(VInt(1), VCons(VSym('B'), VBool(False))),
              VAlist(((VSym('A'), VInt(1)), (VSym('B'), VInt(2))))):
        assert eval_term(value_to_term(v, reg), {}, reg) == v
