# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""S-expression reader, the untyped term/clause IR, printing and the exact evaluator."""
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union


DEFAULT_FUEL = 64
HINT_WRAPPER = 'HINT-PLEASE'
TYPE_TAG = 'TYPE'
RETURN_TAG = 'RETURN'

PRIMITIVE_RECOGNIZERS = ('BOOLEANP', 'INTEGERP', 'RATIONALP', 'SYMBOLP')

# name -> (min arity, max arity or None for variadic)
PRIMITIVE_ARITY = {
    '+': (0, None),
    '*': (0, None),
    'BINARY-+': (2, 2),
    'BINARY-*': (2, 2),
    '-': (1, 2),
    'UNARY--': (1, 1),
    '/': (1, 2),
    'UNARY-/': (1, 1),
    '^': (2, 2),
    '<': (2, 2),
    '<=': (2, 2),
    '>': (2, 2),
    '>=': (2, 2),
    '=': (2, 2),
    'EQUAL': (2, 2),
    'NOT': (1, 1),
    'AND': (0, None),
    'OR': (0, None),
    'IMPLIES': (2, 2),
    'IFF': (2, 2),
    'IF': (3, 3),
    'BOOLEANP': (1, 1),
    'INTEGERP': (1, 1),
    'RATIONALP': (1, 1),
    'SYMBOLP': (1, 1),
    'CONSP': (1, 1),
    'NULL': (1, 1),
    'CAR': (1, 1),
    'CDR': (1, 1),
    'CONS': (2, 2),
    'LIST': (0, None),
    'ACONS': (3, 3),
    'ASSOC-EQUAL': (2, 2),
    HINT_WRAPPER: (1, 1),
}

SPECIAL_FORMS = ('QUOTE', 'LET', 'LET*', 'LAMBDA', 'AS', 'TYPE-HYP')


class SmtPipeError(RuntimeError):
    """Base class of every error raised by smtpipe."""


class UnbalancedParen(SmtPipeError):
    def __init__(self, offset):
        self.offset = offset
        super().__init__(f'== unbalanced parenthesis at offset {offset} ==')


class BadToken(SmtPipeError):
    def __init__(self, offset, lexeme):
        self.offset = offset
        self.lexeme = lexeme
        super().__init__(f'== bad token {lexeme!r} at offset {offset} ==')


class UnknownFunction(SmtPipeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f'== unknown function {name} ==')


class ArityMismatch(SmtPipeError):
    def __init__(self, name, expected, got):
        self.name = name
        self.expected = expected
        self.got = got
        super().__init__(f'== {name} expects {expected} argument(s), got {got} ==')


class BareSymbol(SmtPipeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f'== bare symbol {name} in value position (quote it or bind it) ==')


class MalformedForm(SmtPipeError):
    def __init__(self, form, reason):
        self.form = form
        self.reason = reason
        super().__init__(f'== malformed form {form}: {reason} ==')


class FuelExhausted(SmtPipeError):
    def __init__(self, fuel):
        self.fuel = fuel
        super().__init__(f'== evaluation fuel {fuel} exhausted ==')


class UnboundVar(SmtPipeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f'== unbound variable {name} ==')


class NoDefinition(SmtPipeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f'== function {name} has no executable definition ==')


class EmptyClause(SmtPipeError):
    def __init__(self):
        super().__init__('== a clause needs at least one disjunct ==')


# ---------------------------------------------------------------------------
# s-expressions

@dataclass(frozen=True)
class Sym:
    name: str

    def __post_init__(self):
        object.__setattr__(self, 'name', self.name.upper())

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Dotted:
    items: tuple
    tail: object


SExpr = Union[Sym, int, Fraction, tuple, Dotted]

_ATOM_RE = re.compile(r"[A-Za-z0-9+\-*/<>=!?^_&%$:.~@\[\]{}]+")
_INT_RE = re.compile(r'[+-]?\d+\Z')
_RAT_RE = re.compile(r'([+-]?\d+)/(\d+)\Z')
_DEC_RE = re.compile(r'[+-]?\d+(\.\d+)?([eE][+-]?\d+)?\Z')
_DELIMS = ' \t\r\n\f()\';'


def _skip_blank(text, pos):
    while pos < len(text):
        ch = text[pos]
        if ch in ' \t\r\n\f':
            pos += 1
        elif ch == ';':
            while pos < len(text) and text[pos] != '\n':
                pos += 1
        else:
            break
    return pos


def _atom(lexeme, offset):
    if _INT_RE.match(lexeme):
        return int(lexeme)
    m = _RAT_RE.match(lexeme)
    if m:
        if int(m.group(2)) == 0:
            raise BadToken(offset, lexeme)
        value = Fraction(int(m.group(1)), int(m.group(2)))
        return value.numerator if value.denominator == 1 else value
    if _DEC_RE.match(lexeme):
        value = Fraction(lexeme)
        return value.numerator if value.denominator == 1 else value
    if lexeme == '.':
        raise BadToken(offset, lexeme)
    return Sym(lexeme)


def _join_dotted(items, tail):
    if tail == Sym('NIL'):
        return tuple(items)
    if isinstance(tail, tuple):
        return tuple(items) + tail
    if isinstance(tail, Dotted):
        return Dotted(tuple(items) + tail.items, tail.tail)
    return Dotted(tuple(items), tail)


def _read(text, pos):
    ch = text[pos]
    if ch == '(':
        open_pos = pos
        items = []
        pos += 1
        while True:
            pos = _skip_blank(text, pos)
            if pos >= len(text):
                raise UnbalancedParen(open_pos)
            if text[pos] == ')':
                return tuple(items), pos + 1
            if text[pos] == '.' and (pos + 1 >= len(text) or text[pos + 1] in _DELIMS):
                if not items:
                    raise BadToken(pos, '.')
                tail, pos = _read(text, _skip_blank(text, pos + 1))
                pos = _skip_blank(text, pos)
                if pos >= len(text):
                    raise UnbalancedParen(open_pos)
                if text[pos] != ')':
                    raise BadToken(pos, text[pos])
                return _join_dotted(items, tail), pos + 1
            item, pos = _read(text, pos)
            items.append(item)
    if ch == ')':
        raise UnbalancedParen(pos)
    if ch == "'":
        inner_pos = _skip_blank(text, pos + 1)
        if inner_pos >= len(text):
            raise BadToken(pos, "'")
        quoted, end = _read(text, inner_pos)
        return (Sym('QUOTE'), quoted), end
    m = _ATOM_RE.match(text, pos)
    if not m:
        raise BadToken(pos, ch)
    return _atom(m.group(0), pos), m.end()


def parse_sexpr(text: str, start: int = 0) -> Tuple[SExpr, int]:
    """Read the first complete s-expression of ``text`` at or after ``start``.

    Returns the s-expression and the offset where trailing input begins
    (``len(text)`` when nothing but blanks and comments follow).
    """
    pos = _skip_blank(text, start)
    if pos >= len(text):
        raise BadToken(pos, '<eof>')
    sexpr, end = _read(text, pos)
    return sexpr, _skip_blank(text, end)


def read_all(text: str) -> List[Tuple[SExpr, int]]:
    """Read every top-level form with the offset where it starts."""
    forms = []
    pos = _skip_blank(text, 0)
    while pos < len(text):
        sexpr, end = _read(text, pos)
        forms.append((sexpr, pos))
        pos = _skip_blank(text, end)
    return forms


def print_sexpr(s: SExpr) -> str:
    if isinstance(s, tuple):
        return '(' + ' '.join(print_sexpr(x) for x in s) + ')'
    if isinstance(s, Dotted):
        return '(' + ' '.join(print_sexpr(x) for x in s.items) + ' . ' + print_sexpr(s.tail) + ')'
    if isinstance(s, Fraction):
        return f'{s.numerator}/{s.denominator}'
    return str(s)


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class IntConst:
    value: int


@dataclass(frozen=True)
class RatConst:
    value: Fraction

    def __post_init__(self):
        value = Fraction(self.value)
        if value.denominator == 1:
            raise ValueError(f'{value} is an integer, use IntConst')
        object.__setattr__(self, 'value', value)


@dataclass(frozen=True)
class SymConst:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError('symbol names are non-empty')
        object.__setattr__(self, 'name', self.name.upper())


Constant = Union[BoolConst, IntConst, RatConst, SymConst]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Constant


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple = ()


@dataclass(frozen=True)
class TypeHypMarker:
    terms: tuple
    tag: str = TYPE_TAG


@dataclass(frozen=True)
class FixAnnot:
    term: object
    type_name: str


Term = Union[Var, Const, App, TypeHypMarker, FixAnnot]

T = Const(BoolConst(True))
NIL = Const(BoolConst(False))


@dataclass(frozen=True)
class Clause:
    disjuncts: tuple

    def __post_init__(self):
        if not self.disjuncts:
            raise EmptyClause()
        object.__setattr__(self, 'disjuncts', tuple(self.disjuncts))

    def __len__(self):
        return len(self.disjuncts)

    def __iter__(self):
        return iter(self.disjuncts)


def make_const(value) -> Const:
    if isinstance(value, bool):
        return Const(BoolConst(value))
    if isinstance(value, int):
        return Const(IntConst(value))
    value = Fraction(value)
    if value.denominator == 1:
        return Const(IntConst(value.numerator))
    return Const(RatConst(value))


def is_nil_const(t) -> bool:
    return isinstance(t, Const) and t.value == BoolConst(False)


def negate(t: Term) -> Term:
    if isinstance(t, App) and t.fn == 'NOT':
        return t.args[0]
    return App('NOT', (t,))


def is_negation(t) -> bool:
    return isinstance(t, App) and t.fn == 'NOT'


def conjoin(terms) -> Term:
    terms = tuple(terms)
    if not terms:
        return T
    if len(terms) == 1:
        return terms[0]
    return App('AND', terms)


def clause_to_term(c: Clause) -> Term:
    if len(c.disjuncts) == 1:
        return c.disjuncts[0]
    return App('OR', c.disjuncts)


def implication_clause(antecedent: Clause, consequent: Clause) -> Clause:
    """Encode ``antecedent => consequent`` as one clause.

    The antecedent is kept whole as ``(NOT (OR ...))`` so it can be read back
    with ``split_implication``.
    """
    return Clause((App('NOT', (App('OR', antecedent.disjuncts),)),) + consequent.disjuncts)


def split_implication(c: Clause) -> Optional[Tuple[Clause, Clause]]:
    """Inverse of ``implication_clause``; None when ``c`` does not have that shape."""
    head = c.disjuncts[0]
    if not (is_negation(head) and isinstance(head.args[0], App) and head.args[0].fn == 'OR' and head.args[0].args):
        return None
    if len(c.disjuncts) < 2:
        return None
    return Clause(head.args[0].args), Clause(c.disjuncts[1:])


def _conjuncts(t):
    if isinstance(t, App) and t.fn == 'AND':
        out = []
        for a in t.args:
            out.extend(_conjuncts(a))
        return out
    return [t]


def _disjuncts(t):
    if isinstance(t, App) and t.fn == 'IMPLIES':
        return [negate(h) for h in _conjuncts(t.args[0])] + _disjuncts(t.args[1])
    if isinstance(t, App) and t.fn == 'OR' and t.args:
        out = []
        for a in t.args:
            out.extend(_disjuncts(a))
        return out
    if isinstance(t, App) and t.fn == 'NOT' and isinstance(t.args[0], App) and t.args[0].fn == 'AND' and t.args[0].args:
        return [negate(c) for c in _conjuncts(t.args[0])]
    return [t]


def clausify(t: Term) -> Clause:
    """Turn a theorem body into its clause of disjuncts."""
    return Clause(tuple(_disjuncts(t)))


def children(t: Term) -> tuple:
    if isinstance(t, App):
        return t.args
    if isinstance(t, TypeHypMarker):
        return t.terms
    if isinstance(t, FixAnnot):
        return (t.term,)
    return ()


def rebuild(t: Term, kids) -> Term:
    kids = tuple(kids)
    if isinstance(t, App):
        return App(t.fn, kids)
    if isinstance(t, TypeHypMarker):
        return TypeHypMarker(kids, t.tag)
    if isinstance(t, FixAnnot):
        return FixAnnot(kids[0], t.type_name)
    return t


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order walk."""
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def term_size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


def free_vars(t) -> tuple:
    """Variables in first-occurrence order; accepts a term or a clause."""
    seen: Dict[str, None] = {}
    roots = t.disjuncts if isinstance(t, Clause) else (t,)
    for root in roots:
        for node in subterms(root):
            if isinstance(node, Var):
                seen.setdefault(node.name, None)
    return tuple(seen)


def called_functions(t: Term) -> tuple:
    seen: Dict[str, None] = {}
    for node in subterms(t):
        if isinstance(node, App):
            seen.setdefault(node.fn, None)
    return tuple(seen)


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    kids = children(t)
    if not kids:
        return t
    return rebuild(t, (substitute(k, mapping) for k in kids))


# ---------------------------------------------------------------------------
# s-expression -> term

def _arity_text(rng):
    lo, hi = rng
    if hi is None:
        return f'>={lo}'
    if lo == hi:
        return str(lo)
    return f'{lo}..{hi}'


class _Resolver:
    def __init__(self, reg, variables):
        self.reg = reg
        self.variables = None if variables is None else {v.upper() for v in variables}

    def symbol(self, s: Sym, bindings):
        name = s.name
        if name in bindings:
            return bindings[name]
        if name == 'T':
            return T
        if name == 'NIL':
            return NIL
        if name.startswith(':'):
            raise BareSymbol(name)
        if self.variables is not None:
            if name in self.variables:
                return Var(name)
            raise BareSymbol(name)
        if self.reg.arity(name) is not None or name in SPECIAL_FORMS:
            raise BareSymbol(name)
        return Var(name)

    def resolve(self, s: SExpr, bindings) -> Term:
        if isinstance(s, (int, Fraction)):
            return make_const(s)
        if isinstance(s, Sym):
            return self.symbol(s, bindings)
        if isinstance(s, Dotted):
            raise MalformedForm(print_sexpr(s), 'improper list in term position')
        if not s:
            return NIL
        head = s[0]
        if isinstance(head, tuple):
            return self.lambda_application(s, bindings)
        if not isinstance(head, Sym):
            raise MalformedForm(print_sexpr(s), 'function position must hold a symbol')
        name = head.name
        if name == 'QUOTE':
            return self.quote(s)
        if name in ('LET', 'LET*'):
            return self.let(s, bindings, sequential=(name == 'LET*'))
        if name == 'AS':
            return self.fix_annot(s, bindings)
        if name == 'TYPE-HYP':
            return self.type_hyp(s, bindings)
        rng = self.reg.arity(name)
        if rng is None:
            raise UnknownFunction(name)
        args = tuple(self.resolve(a, bindings) for a in s[1:])
        lo, hi = rng
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ArityMismatch(name, _arity_text(rng), len(args))
        return App(name, args)

    def quote(self, s):
        if len(s) != 2:
            raise MalformedForm(print_sexpr(s), 'quote takes one argument')
        x = s[1]
        if isinstance(x, Sym):
            if x.name == 'T':
                return T
            if x.name == 'NIL':
                return NIL
            return Const(SymConst(x.name))
        if isinstance(x, (int, Fraction)):
            return make_const(x)
        if x == ():
            return NIL
        raise MalformedForm(print_sexpr(s), 'only atoms can be quoted')

    def let(self, s, bindings, sequential):
        if len(s) != 3 or not isinstance(s[1], tuple):
            raise MalformedForm(print_sexpr(s), 'expected (let ((var expr) ...) body)')
        inner = dict(bindings)
        for binding in s[1]:
            if not (isinstance(binding, tuple) and len(binding) == 2 and isinstance(binding[0], Sym)):
                raise MalformedForm(print_sexpr(s), 'bad let binding')
            value = self.resolve(binding[1], inner if sequential else bindings)
            inner[binding[0].name] = value
        return self.with_scope(s[2], inner, [b[0].name for b in s[1]])

    def lambda_application(self, s, bindings):
        fn = s[0]
        if not (len(fn) == 3 and fn[0] == Sym('LAMBDA') and isinstance(fn[1], tuple)):
            raise MalformedForm(print_sexpr(s), 'expected ((lambda (formals) body) args)')
        formals = [f.name for f in fn[1]]
        if len(formals) != len(s) - 1:
            raise ArityMismatch('LAMBDA', str(len(formals)), len(s) - 1)
        inner = dict(bindings)
        for formal, actual in zip(formals, s[1:]):
            inner[formal] = self.resolve(actual, bindings)
        return self.with_scope(fn[2], inner, formals)

    def with_scope(self, body, inner, names):
        if self.variables is None:
            return self.resolve(body, inner)
        saved = self.variables
        self.variables = saved | set(names)
        try:
            return self.resolve(body, inner)
        finally:
            self.variables = saved

    def fix_annot(self, s, bindings):
        if len(s) != 3 or not isinstance(s[2], Sym):
            raise MalformedForm(print_sexpr(s), 'expected (as term type-name)')
        type_name = s[2].name
        if self.reg.fty_type_by_name(type_name) is None:
            raise MalformedForm(print_sexpr(s), f'unknown type {type_name}')
        return FixAnnot(self.resolve(s[1], bindings), type_name)

    def type_hyp(self, s, bindings):
        if (len(s) != 3 or not isinstance(s[1], tuple) or not s[1] or s[1][0] != Sym('LIST')
                or s[2] not in (Sym(':' + TYPE_TAG), Sym(':' + RETURN_TAG))):
            raise MalformedForm(print_sexpr(s), 'expected (type-hyp (list ...) :type|:return)')
        terms = tuple(self.resolve(x, bindings) for x in s[1][1:])
        return TypeHypMarker(terms, s[2].name[1:])


def sexpr_to_term(s: SExpr, reg, variables=None) -> Term:
    """Resolve an s-expression against ``reg``.

    With ``variables`` given, only those names may appear free; otherwise any
    symbol that is not a known function name becomes a variable.
    """
    return _Resolver(reg, variables).resolve(s, {})


def parse_term(text: str, reg, variables=None) -> Term:
    sexpr, _ = parse_sexpr(text)
    return sexpr_to_term(sexpr, reg, variables)


# ---------------------------------------------------------------------------
# printing

def _print_const(c: Constant) -> str:
    if isinstance(c, BoolConst):
        return 'T' if c.value else 'NIL'
    if isinstance(c, IntConst):
        return str(c.value)
    if isinstance(c, RatConst):
        return f'{c.value.numerator}/{c.value.denominator}'
    return "'" + c.name


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return _print_const(t.value)
    if isinstance(t, App):
        if not t.args:
            return f'({t.fn})'
        return '(' + t.fn + ' ' + ' '.join(print_term(a) for a in t.args) + ')'
    if isinstance(t, TypeHypMarker):
        inner = ' '.join(['LIST'] + [print_term(x) for x in t.terms])
        return f'(TYPE-HYP ({inner}) :{t.tag})'
    if isinstance(t, FixAnnot):
        return f'(AS {print_term(t.term)} {t.type_name})'
    raise TypeError(f'not a term: {t!r}')


def print_clause(c: Clause) -> str:
    return print_term(App('OR', c.disjuncts))


def format_clause(c: Clause, indent: int = 4) -> str:
    """One disjunct per line, re-readable by ``parse_clause``."""
    pad = ' ' * indent
    lines = [print_term(d) for d in c.disjuncts]
    return '(OR ' + ('\n' + pad).join(lines) + ')'


def parse_clause(text: str, reg) -> Clause:
    term = parse_term(text, reg)
    if isinstance(term, App) and term.fn == 'OR':
        return Clause(term.args)
    return Clause((term,))


# ---------------------------------------------------------------------------
# values and the evaluator

@dataclass(frozen=True)
class VBool:
    value: bool


@dataclass(frozen=True)
class VInt:
    value: int


@dataclass(frozen=True)
class VRat:
    value: Fraction


@dataclass(frozen=True)
class VSym:
    name: str


@dataclass(frozen=True)
class VCons:
    car: object
    cdr: object


@dataclass(frozen=True)
class VNilTyped:
    type_name: str


@dataclass(frozen=True)
class VProd:
    type_name: str
    fields: tuple


@dataclass(frozen=True)
class VOption:
    type_name: str
    value: Optional[object] = None


@dataclass(frozen=True)
class VAlist:
    pairs: tuple = ()


Value = Union[VBool, VInt, VRat, VSym, VCons, VNilTyped, VProd, VOption, VAlist]

V_T = VBool(True)
V_NIL = VBool(False)


def make_number(value) -> Value:
    value = Fraction(value)
    if value.denominator == 1:
        return VInt(value.numerator)
    return VRat(value)


def truth(flag: bool) -> Value:
    return V_T if flag else V_NIL


def is_nil(v: Value) -> bool:
    if isinstance(v, VBool):
        return not v.value
    if isinstance(v, VNilTyped):
        return True
    if isinstance(v, VOption):
        return v.value is None
    if isinstance(v, VAlist):
        return not v.pairs
    return False


def value_key(v: Value):
    """Canonical form under which two values are ``equal``."""
    if is_nil(v):
        return ('nil',)
    if isinstance(v, VBool):
        return ('t',)
    if isinstance(v, (VInt, VRat)):
        return ('num', Fraction(v.value))
    if isinstance(v, VSym):
        return ('sym', v.name)
    if isinstance(v, VCons):
        return ('cons', value_key(v.car), value_key(v.cdr))
    if isinstance(v, VOption):
        return value_key(v.value)
    if isinstance(v, VAlist):
        key = ('nil',)
        for k, val in reversed(v.pairs):
            key = ('cons', ('cons', value_key(k), value_key(val)), key)
        return key
    if isinstance(v, VProd):
        return ('prod', v.type_name, tuple(value_key(f) for f in v.fields))
    raise TypeError(f'not a value: {v!r}')


def list_elements(v: Value) -> Tuple[list, bool]:
    """Elements of a cons chain and whether it ends in nil."""
    items = []
    while True:
        if isinstance(v, VAlist):
            items.extend(VCons(k, val) for k, val in v.pairs)
            return items, True
        if isinstance(v, VCons):
            items.append(v.car)
            v = v.cdr
            continue
        return items, is_nil(v)


def _num(v) -> Fraction:
    if isinstance(v, (VInt, VRat)):
        return Fraction(v.value)
    return Fraction(0)


def _reciprocal(x: Fraction) -> Fraction:
    return Fraction(0) if x == 0 else 1 / x


def _car(v):
    if isinstance(v, VCons):
        return v.car
    if isinstance(v, VAlist) and v.pairs:
        k, val = v.pairs[0]
        return VCons(k, val)
    return V_NIL


def _cdr(v):
    if isinstance(v, VCons):
        return v.cdr
    if isinstance(v, VAlist) and v.pairs:
        return VAlist(v.pairs[1:])
    return V_NIL


def _expt(base: Fraction, exponent) -> Fraction:
    if not isinstance(exponent, VInt):
        return Fraction(1)
    n = exponent.value
    if n >= 0:
        return base ** n
    return Fraction(0) if base == 0 else Fraction(1) / base ** (-n)


def _assoc(key, alist):
    wanted = value_key(key)
    items, _ = list_elements(alist)
    for item in items:
        if value_key(_car(item)) == wanted:
            return item
    return V_NIL


class _Evaluator:
    def __init__(self, reg, fuel):
        self.reg = reg
        self.fuel = fuel

    def eval(self, t, env, depth):
        if isinstance(t, Var):
            if t.name not in env:
                raise UnboundVar(t.name)
            return env[t.name]
        if isinstance(t, Const):
            return self.const(t.value)
        if isinstance(t, TypeHypMarker):
            return truth(all(not is_nil(self.eval(x, env, depth)) for x in t.terms))
        if isinstance(t, FixAnnot):
            inner = self.eval(t.term, env, depth)
            if is_nil(inner):
                return self.typed_nil(t.type_name)
            return inner
        return self.app(t, env, depth)

    @staticmethod
    def const(c):
        if isinstance(c, BoolConst):
            return truth(c.value)
        if isinstance(c, IntConst):
            return VInt(c.value)
        if isinstance(c, RatConst):
            return VRat(c.value)
        return VSym(c.name)

    def typed_nil(self, type_name):
        tdef = self.reg.fty_type_by_name(type_name)
        kind = getattr(tdef, 'kind', None)
        if kind == 'option':
            return VOption(type_name, None)
        if kind == 'alist':
            return VAlist(())
        return VNilTyped(type_name)

    def app(self, t, env, depth):
        fn = t.fn
        if fn == 'IF':
            test = self.eval(t.args[0], env, depth)
            return self.eval(t.args[2] if is_nil(test) else t.args[1], env, depth)
        if fn == 'AND':
            result = V_T
            for a in t.args:
                result = self.eval(a, env, depth)
                if is_nil(result):
                    return V_NIL
            return result
        if fn == 'OR':
            for a in t.args:
                result = self.eval(a, env, depth)
                if not is_nil(result):
                    return result
            return V_NIL
        if fn == 'IMPLIES':
            if is_nil(self.eval(t.args[0], env, depth)):
                return V_T
            return truth(not is_nil(self.eval(t.args[1], env, depth)))
        if fn == HINT_WRAPPER:
            return V_NIL
        args = [self.eval(a, env, depth) for a in t.args]
        alias = self.reg.alias_of(fn)
        if alias is not None:
            fn = alias
        if fn in PRIMITIVE_ARITY:
            return self.primitive(fn, args)
        role = self.reg.fty_role(fn)
        if role is not None:
            return self.fty(role, args)
        fdef = self.reg.function(fn)
        if fdef is None:
            raise UnknownFunction(fn)
        if fdef.body is None:
            raise NoDefinition(fn)
        if depth + 1 > self.fuel:
            raise FuelExhausted(self.fuel)
        local = dict(zip(fdef.formals, args))
        return self.eval(fdef.body, local, depth + 1)

    def primitive(self, fn, args):
        if fn in ('+', 'BINARY-+'):
            return make_number(sum((_num(a) for a in args), Fraction(0)))
        if fn in ('*', 'BINARY-*'):
            result = Fraction(1)
            for a in args:
                result *= _num(a)
            return make_number(result)
        if fn in ('-', 'UNARY--'):
            if len(args) == 1:
                return make_number(-_num(args[0]))
            return make_number(_num(args[0]) - _num(args[1]))
        if fn in ('/', 'UNARY-/'):
            if len(args) == 1:
                return make_number(_reciprocal(_num(args[0])))
            return make_number(_num(args[0]) * _reciprocal(_num(args[1])))
        if fn == '^':
            return make_number(_expt(_num(args[0]), args[1]))
        if fn == '<':
            return truth(_num(args[0]) < _num(args[1]))
        if fn == '>':
            return truth(_num(args[0]) > _num(args[1]))
        if fn == '<=':
            return truth(_num(args[0]) <= _num(args[1]))
        if fn == '>=':
            return truth(_num(args[0]) >= _num(args[1]))
        if fn in ('=', 'EQUAL'):
            return truth(value_key(args[0]) == value_key(args[1]))
        if fn == 'NOT':
            return truth(is_nil(args[0]))
        if fn == 'IFF':
            return truth(is_nil(args[0]) == is_nil(args[1]))
        if fn in PRIMITIVE_RECOGNIZERS:
            return truth(self.satisfies(args[0], fn))
        if fn == 'CONSP':
            return truth(isinstance(args[0], VCons) or (isinstance(args[0], VAlist) and bool(args[0].pairs)))
        if fn == 'NULL':
            return truth(is_nil(args[0]))
        if fn == 'CAR':
            return _car(args[0])
        if fn == 'CDR':
            return _cdr(args[0])
        if fn == 'CONS':
            return VCons(args[0], args[1])
        if fn == 'LIST':
            result = V_NIL
            for a in reversed(args):
                result = VCons(a, result)
            return result
        if fn == 'ACONS':
            key, val, alist = args
            if is_nil(alist) or isinstance(alist, VAlist):
                rest = alist.pairs if isinstance(alist, VAlist) else ()
                return VAlist(((key, val),) + rest)
            return VCons(VCons(key, val), alist)
        if fn == 'ASSOC-EQUAL':
            return _assoc(args[0], args[1])
        raise UnknownFunction(fn)

    def fty(self, role, args):
        tdef = role.typedef
        if role.kind == 'recognizer':
            return truth(self.satisfies(args[0], tdef.recognizer))
        if role.kind == 'constructor':
            return VProd(tdef.name, tuple(args))
        if role.kind == 'accessor':
            v = args[0]
            if isinstance(v, VProd) and v.type_name == tdef.name:
                return v.fields[role.index]
            return self.default_value(tdef.fields[role.index][1])
        if role.kind == 'some':
            return VOption(tdef.name, args[0])
        if role.kind == 'val':
            v = args[0]
            if isinstance(v, VOption):
                return v.value if v.value is not None else self.default_value(tdef.base_recognizer)
            if not is_nil(v) and self.satisfies(v, tdef.base_recognizer):
                return v
            return self.default_value(tdef.base_recognizer)
        raise UnknownFunction(role.kind)

    def default_value(self, recognizer):
        if recognizer in ('INTEGERP', 'RATIONALP'):
            return VInt(0)
        kind = self.reg.recognizer_kind(recognizer)
        if getattr(kind, 'kind', None) == 'prod':
            return VProd(kind.name, tuple(self.default_value(r) for _, r in kind.fields))
        if getattr(kind, 'kind', None) in ('list', 'option', 'alist'):
            return self.typed_nil(kind.name)
        return V_NIL

    def satisfies(self, v, recognizer) -> bool:
        alias = self.reg.alias_of(recognizer)
        if alias is not None:
            recognizer = alias
        if recognizer == 'BOOLEANP':
            return isinstance(v, VBool) or is_nil(v)
        if recognizer == 'INTEGERP':
            return isinstance(v, VInt)
        if recognizer == 'RATIONALP':
            return isinstance(v, (VInt, VRat))
        if recognizer == 'SYMBOLP':
            return isinstance(v, (VSym, VBool)) or is_nil(v)
        tdef = self.reg.recognizer_kind(recognizer)
        kind = getattr(tdef, 'kind', None)
        if kind == 'prod':
            return (isinstance(v, VProd) and v.type_name == tdef.name
                    and all(self.satisfies(f, r) for f, (_, r) in zip(v.fields, tdef.fields)))
        if kind == 'list':
            items, proper = list_elements(v)
            return proper and all(self.satisfies(x, tdef.elt_recognizer) for x in items)
        if kind == 'alist':
            items, proper = list_elements(v)
            return proper and all(
                isinstance(x, VCons) and self.satisfies(x.car, tdef.key_recognizer) and self.satisfies(x.cdr, tdef.val_recognizer)
                for x in items)
        if kind == 'option':
            if is_nil(v):
                return True
            inner = v.value if isinstance(v, VOption) else v
            return self.satisfies(inner, tdef.base_recognizer)
        raise UnknownFunction(recognizer)


def eval_term(t: Term, env: Mapping[str, Value], reg, fuel: int = DEFAULT_FUEL) -> Value:
    """Call-by-value interpretation of ``t``; ``fuel`` bounds nested user calls."""
    return _Evaluator(reg, fuel).eval(t, env, 0)


def clause_eval(c: Clause, env: Mapping[str, Value], reg, fuel: int = DEFAULT_FUEL) -> bool:
    ev = _Evaluator(reg, fuel)
    return any(not is_nil(ev.eval(d, env, 0)) for d in c.disjuncts)


def recognizer_holds(v: Value, recognizer: str, reg) -> bool:
    return _Evaluator(reg, DEFAULT_FUEL).satisfies(v, recognizer)


def value_to_term(v: Value, reg) -> Term:
    """A constructor expression that evaluates back to ``v``."""
    if isinstance(v, VBool):
        return T if v.value else NIL
    if isinstance(v, (VInt, VRat)):
        return make_const(v.value)
    if isinstance(v, VSym):
        return Const(SymConst(v.name))
    if isinstance(v, VCons):
        return App('CONS', (value_to_term(v.car, reg), value_to_term(v.cdr, reg)))
    if isinstance(v, VNilTyped):
        return FixAnnot(NIL, v.type_name)
    if isinstance(v, VProd):
        tdef = reg.fty_type_by_name(v.type_name)
        return App(tdef.constructor, tuple(value_to_term(f, reg) for f in v.fields))
    if isinstance(v, VOption):
        if v.value is None:
            return FixAnnot(NIL, v.type_name)
        tdef = reg.fty_type_by_name(v.type_name)
        return App(tdef.some_constructor, (value_to_term(v.value, reg),))
    if isinstance(v, VAlist):
        result = NIL
        for k, val in reversed(v.pairs):
            result = App('ACONS', (value_to_term(k, reg), value_to_term(val, reg), result))
        return result
    raise TypeError(f'not a value: {v!r}')


def term_facts(t: Term) -> set:
    """``t`` with every conjunct it asserts, markers included."""
    facts = {t}
    if isinstance(t, TypeHypMarker):
        for x in t.terms:
            facts |= term_facts(x)
    elif isinstance(t, App) and t.fn == 'AND':
        for x in t.args:
            facts |= term_facts(x)
    return facts


def implied_by(target: Term, facts) -> bool:
    """Literal check that ``target`` is among ``facts``, up to the consp/non-nil forms."""
    if target in facts:
        return True
    x = None
    if isinstance(target, App) and target.fn == 'CONSP':
        x = target.args[0]
    elif is_negation(target) and isinstance(target.args[0], App) and target.args[0].fn == 'NULL':
        x = target.args[0].args[0]
    if x is None:
        return False
    return any(f in facts for f in (App('CONSP', (x,)), App('NOT', (App('NULL', (x,)),)), x))


def clause_is_tautology(c: Clause) -> bool:
    """True literal, complementary pair, or a literal implied by a hypothesis' conjuncts."""
    facts = set()
    for d in c.disjuncts:
        if d == T:
            return True
        if is_negation(d):
            facts |= term_facts(d.args[0])
    return any(not is_negation(d) and implied_by(d, facts) for d in c.disjuncts)
