# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""Sort inference and SMT-LIB2 emission for a fully processed clause.

The clause reaching this module has one leading type marker, optional
``:return`` markers and the goal disjuncts.  Every variable gets a sort from
the type marker, user types become datatype declarations, alists become
arrays and the negated goal is asserted.  Partial operations (destructors
and division) are made total in the script; each occurrence produces a
precondition obligation instead.
"""
import logging as log
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Optional, Tuple

from smtpipe.obligation_ledger import Origin, Strategy, append_obligation
from smtpipe.term_core import (
    App, BoolConst, Clause, Const, FixAnnot, HINT_WRAPPER, IntConst, PRIMITIVE_RECOGNIZERS, RatConst, RETURN_TAG,
    SmtPipeError, SymConst, TYPE_TAG, TypeHypMarker, Var, free_vars, implied_by, is_negation, is_nil_const, make_const,
    negate, print_term, subterms, term_facts,
)
from smtpipe.type_registry import NOT_A_RECOGNIZER, PrimitiveKind, effective_uninterp


class MissingTypeHyp(SmtPipeError):
    def __init__(self, var):
        self.var = var
        super().__init__(f'== variable {var} has no type hypothesis ==')


class SortClash(SmtPipeError):
    def __init__(self, node, expected, got):
        self.node = node
        self.expected = expected
        self.got = got
        super().__init__(f'== sort clash in {node}: expected {expected}, got {got} ==')


class AmbiguousNil(SmtPipeError):
    def __init__(self, node):
        self.node = node
        super().__init__(f'== nil in {node} needs a type annotation, write (as nil <type>) ==')


class UnsupportedOp(SmtPipeError):
    def __init__(self, name, reason='not translatable to SMT'):
        self.name = name
        self.reason = reason
        super().__init__(f'== {name}: {reason} ==')


# ---------------------------------------------------------------------------
# sorts

@dataclass(frozen=True)
class PrimSort:
    name: str

    def smt(self):
        return self.name


BOOL = PrimSort('Bool')
INT = PrimSort('Int')
REAL = PrimSort('Real')
NUMERIC = (INT, REAL)


@dataclass(frozen=True)
class DatatypeSort:
    smt_name: str
    kind: str
    type_name: str = ''

    def smt(self):
        return self.smt_name


@dataclass(frozen=True)
class ArraySort:
    smt_name: str
    key: object
    pair: DatatypeSort
    type_name: str

    def smt(self):
        return self.smt_name

    def full(self):
        return f'(Array {self.key.smt()} {self.pair.smt()})'


@dataclass(frozen=True)
class UninterpFn:
    name: str
    smt_name: str
    args: tuple
    result: object

    def declaration(self):
        args = ' '.join(s.smt() for s in self.args)
        return f'(declare-fun {self.smt_name} ({args}) {self.result.smt()})'


@dataclass(frozen=True)
class Constructor:
    name: str
    fields: tuple = ()


@dataclass(frozen=True)
class DatatypeInfo:
    sort: DatatypeSort
    constructors: tuple
    consp: Optional[str] = None
    nil: Optional[str] = None
    base: Optional[object] = None

    def declarations(self):
        ctors = []
        for c in self.constructors:
            if c.fields:
                ctors.append('(' + c.name + ' ' + ' '.join(f'({a} {s.smt()})' for a, s in c.fields) + ')')
            else:
                ctors.append(f'({c.name})')
        n = self.sort.smt_name
        out = [f'(declare-datatypes (({n} 0)) (({" ".join(ctors)})))']
        if self.consp is not None:
            out.append(f'(define-fun {self.consp} ((l {n})) Bool (not (= l {self.nil})))')
        return out


# ---------------------------------------------------------------------------
# names

SMT_RESERVED = frozenset((
    'and', 'or', 'not', 'ite', 'true', 'false', 'let', 'forall', 'exists', 'match', 'lambda', 'select', 'store',
    'distinct', 'as', 'par', 'div', 'mod', 'abs', 'to_real', 'to_int', 'is_int', 'xor', 'root_obj',
))

_ESCAPES = {
    '?': '_qm_', '^': '_hat_', '/': '_sl_', '*': '_star_', '+': '_plus_', '<': '_lt_', '>': '_gt_', '=': '_eq_',
    '!': '_bang_', '.': '_dot_', ':': '_col_', '&': '_amp_', '%': '_pct_', '$': '_dol_', '~': '_til_', '@': '_at_',
    '[': '_lb_', ']': '_rb_', '{': '_lc_', '}': '_rc_',
}


def mangle_identifier(name: str) -> str:
    """Lower-case SMT-LIB simple symbol for an ACL2 style name."""
    out = []
    for ch in name.lower():
        if ch.isascii() and (ch.isalnum() or ch == '_'):
            out.append(ch)
        elif ch == '-':
            out.append('_')
        elif ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        else:
            out.append(f'_x{ord(ch):02x}_')
    text = ''.join(out)
    if not text or text[0].isdigit():
        text = 'v_' + text
    return text


class Mangler:
    """Injective naming: the first owner keeps a name, later collisions get a numeric suffix."""

    def __init__(self):
        self._by_key: Dict[tuple, str] = {}
        self._owner: Dict[str, tuple] = {}

    def name(self, key: tuple, preferred: str) -> str:
        if key in self._by_key:
            return self._by_key[key]
        base = mangle_identifier(preferred)
        candidate = base
        n = 2
        while candidate in self._owner or candidate in SMT_RESERVED:
            candidate = f'{base}_{n}'
            n += 1
        self._by_key[key] = candidate
        self._owner[candidate] = key
        return candidate

    def owner(self, smt_name) -> Optional[tuple]:
        return self._owner.get(smt_name)


@dataclass(frozen=True)
class SymbolIntern:
    """Symbol constants numbered by first use."""
    names: tuple = ()

    def index_of(self, name) -> Optional[int]:
        try:
            return self.names.index(name)
        except ValueError:
            return None

    def name_of(self, index) -> Optional[str]:
        if 0 <= index < len(self.names):
            return self.names[index]
        return None

    @property
    def counter(self):
        return len(self.names)


def intern_symbol(table: SymbolIntern, name: str) -> Tuple[SymbolIntern, int]:
    name = name.upper()
    index = table.index_of(name)
    if index is not None:
        return table, index
    return SymbolIntern(table.names + (name,)), len(table.names)


def fresh_symbol_name(table: SymbolIntern, index: int) -> str:
    """Name for a solver-invented symbol index, distinct from every interned name."""
    name = f'SYM-{index}'
    while name in table.names:
        name += '-FRESH'
    return name


# ---------------------------------------------------------------------------
# typed terms

@dataclass(frozen=True)
class TypedTerm:
    """A term with its sort and its SMT rendering.

    ``text`` fixes the rendering; ``args`` are still walked for preconditions
    unless a child has ``walk`` cleared.
    """
    term: object
    sort: object
    head: Optional[str] = None
    args: tuple = ()
    text: Optional[str] = None
    precondition: Optional[object] = None
    site: str = ''
    walk: bool = True


def render(node: TypedTerm) -> str:
    if node.text is not None:
        return node.text
    return '(' + node.head + ' ' + ' '.join(render(a) for a in node.args) + ')'


@dataclass(frozen=True, eq=False)
class TypedGoal:
    clause: Clause
    var_sorts: tuple
    var_names: tuple
    type_terms: tuple
    assumptions: tuple
    body: tuple
    units: tuple
    interns: SymbolIntern
    declared: tuple
    functions: tuple
    ints_as_reals: bool = False
    sym_sort: Optional[DatatypeSort] = None

    def sort_of(self, var):
        return dict(self.var_sorts)[var]

    def smt_name_of(self, var):
        return dict(self.var_names)[var]

    def datatypes(self):
        return tuple(d for d in self.declared if isinstance(d, DatatypeInfo))

    def constructor_table(self) -> Dict[str, Tuple[DatatypeInfo, Constructor]]:
        table = {}
        for info in self.datatypes():
            for c in info.constructors:
                table[c.name] = (info, c)
        return table

    def info_of(self, sort) -> Optional[DatatypeInfo]:
        for info in self.datatypes():
            if info.sort == sort:
                return info
        return None


def _number_text(x, real: bool) -> str:
    x = Fraction(x)
    if x < 0:
        return f'(- {_number_text(-x, real)})'
    if x.denominator == 1:
        return f'{x.numerator}.0' if real else str(x.numerator)
    return f'(/ {x.numerator}.0 {x.denominator}.0)'


_ARITH_OPS = {'+': '+', 'BINARY-+': '+', '*': '*', 'BINARY-*': '*'}
_COMPARISONS = ('<', '<=', '>', '>=')


class _Sorter:
    def __init__(self, reg, hint):
        self.reg = reg
        self.ints_as_reals = bool(getattr(hint, 'ints_as_reals', False))
        self.specs = effective_uninterp(reg, getattr(hint, 'uninterp', {}))
        self.mangler = Mangler()
        self.interns = SymbolIntern()
        self.var_sorts: Dict[str, object] = {}
        self.var_names: Dict[str, str] = {}
        self.type_sorts: Dict[str, object] = {}
        self.declared: Dict[str, object] = {}
        self.infos: Dict[str, DatatypeInfo] = {}
        self.functions: Dict[str, UninterpFn] = {}
        self.sym = None

    @property
    def int_sort(self):
        return REAL if self.ints_as_reals else INT

    # sorts of recognizers and types

    def member(self, owner, suffix):
        return self.mangler.name(('member', owner, suffix), f'{owner}_{suffix}')

    def add_info(self, info: DatatypeInfo):
        self.infos[info.sort.smt_name] = info
        self.declared[info.sort.smt_name] = info

    def sym_sort(self):
        if self.sym is None:
            n = self.mangler.name(('sym',), 'sym')
            self.sym = DatatypeSort(n, 'sym')
            self.add_info(DatatypeInfo(self.sym, (Constructor(self.member(n, 'mk'), ((self.member(n, 'index'), INT),)),)))
        return self.sym

    def recognizer_sort(self, rec):
        kind = self.reg.recognizer_kind(rec)
        if isinstance(kind, PrimitiveKind):
            if kind.name == 'BOOLEANP':
                return BOOL
            if kind.name == 'INTEGERP':
                return self.int_sort
            if kind.name == 'RATIONALP':
                return REAL
            return self.sym_sort()
        if kind is NOT_A_RECOGNIZER:
            raise UnsupportedOp(rec, 'not a recognizer')
        return self.type_sort(kind)

    def type_sort(self, tdef):
        if tdef.name in self.type_sorts:
            return self.type_sorts[tdef.name]
        n = self.mangler.name(('type', tdef.name), tdef.name)
        if tdef.kind == 'alist':
            key = self.recognizer_sort(tdef.key_recognizer)
            pair = self.pair_sort(key, self.recognizer_sort(tdef.val_recognizer))
            sort = ArraySort(n, key, pair, tdef.name)
            self.type_sorts[tdef.name] = sort
            self.declared[n] = sort
            return sort
        sort = DatatypeSort(n, tdef.kind, tdef.name)
        self.type_sorts[tdef.name] = sort
        if tdef.kind == 'prod':
            fields = tuple((self.member(n, accessor.split('->', 1)[1]), self.recognizer_sort(rec))
                           for accessor, rec in tdef.fields)
            self.add_info(DatatypeInfo(sort, (Constructor(self.member(n, 'mk'), fields),)))
        elif tdef.kind == 'list':
            elt = self.recognizer_sort(tdef.elt_recognizer)
            nil = self.member(n, 'nil')
            cons = Constructor(self.member(n, 'cons'), ((self.member(n, 'car'), elt), (self.member(n, 'cdr'), sort)))
            self.add_info(DatatypeInfo(sort, (cons, Constructor(nil)), consp=self.member(n, 'consp'), nil=nil, base=elt))
        else:
            base = self.recognizer_sort(tdef.base_recognizer)
            nil = self.member(n, 'nil')
            some = Constructor(self.member(n, 'some'), ((self.member(n, 'val'), base),))
            self.add_info(DatatypeInfo(sort, (some, Constructor(nil)), nil=nil, base=base))
        return sort

    def pair_sort(self, key, val):
        preferred = f'{key.smt().lower()}_{val.smt().lower()}'
        n = self.mangler.name(('pair', key, val), preferred)
        if n in self.infos:
            return self.infos[n].sort
        sort = DatatypeSort(n, 'pair')
        nil = self.member(n, 'nil')
        cons = Constructor(self.member(n, 'cons'), ((self.member(n, 'car'), key), (self.member(n, 'cdr'), val)))
        self.add_info(DatatypeInfo(sort, (cons, Constructor(nil)), nil=nil, base=(key, val)))
        return sort

    def declare_var(self, name, rec, origin):
        sort = self.recognizer_sort(rec)
        known = self.var_sorts.get(name)
        if known is not None and known != sort:
            if {known, sort} == {INT, REAL}:
                sort = INT
            else:
                raise SortClash(f'type hypotheses of {name} ({origin})', known.smt(), sort.smt())
        self.var_sorts[name] = sort
        if name not in self.var_names:
            self.var_names[name] = self.mangler.name(('var', name), name)

    # helpers

    def coerce(self, node, expected, parent):
        if node.sort == expected:
            return node
        if node.sort == INT and expected == REAL:
            return TypedTerm(node.term, REAL, 'to_real', (node,))
        if is_nil_const(node.term) and expected != BOOL:
            raise AmbiguousNil(print_term(parent))
        raise SortClash(print_term(parent), expected.smt(), node.sort.smt())

    def numeric(self, parent, nodes):
        for n in nodes:
            if n.sort not in NUMERIC:
                raise SortClash(print_term(parent), 'a number', n.sort.smt())
        sort = REAL if any(n.sort == REAL for n in nodes) else nodes[0].sort
        return sort, tuple(self.coerce(n, sort, parent) for n in nodes)

    def unify(self, parent, a, b):
        if a.sort == b.sort:
            return a, b
        if a.sort in NUMERIC and b.sort in NUMERIC:
            _, (a, b) = self.numeric(parent, (a, b))
            return a, b
        for x, y in ((a, b), (b, a)):
            if is_nil_const(x.term) and y.sort != BOOL:
                raise AmbiguousNil(print_term(parent))
        raise SortClash(print_term(parent), a.sort.smt(), b.sort.smt())

    def holds_array(self, sort, seen=()) -> bool:
        """Whether a value of ``sort`` can contain an alist array, whose equality differs from alist equality."""
        if isinstance(sort, ArraySort):
            return True
        if not isinstance(sort, DatatypeSort) or sort.smt_name in seen or sort.smt_name not in self.infos:
            return False
        seen = seen + (sort.smt_name,)
        return any(self.holds_array(s, seen) for c in self.infos[sort.smt_name].constructors for _, s in c.fields)

    def nil_of(self, sort):
        return self.infos[sort.smt_name].nil

    def is_nil_node(self, node, t):
        return TypedTerm(t, BOOL, '=', (node, TypedTerm(NIL_TERM, node.sort, text=self.nil_of(node.sort))))

    def not_nil_node(self, node, t):
        return TypedTerm(t, BOOL, 'not', (self.is_nil_node(node, t),))

    def truthy(self, node, t=None):
        """Boolean reading of a value used as a test."""
        t = node.term if t is None else t
        s = node.sort
        if s == BOOL:
            return node
        if s in NUMERIC or (isinstance(s, DatatypeSort) and s.kind == 'prod'):
            return TypedTerm(t, BOOL, 'rec', (node,), text='true')
        if isinstance(s, DatatypeSort) and s.kind in ('list', 'option', 'pair'):
            return self.not_nil_node(node, t)
        raise UnsupportedOp(print_term(t), f'cannot use a {s.smt()} value as a test')

    def boolean(self, t):
        return self.truthy(self.typed(t))

    def connective(self, t, op, kids):
        if not kids:
            return TypedTerm(t, BOOL, text='true' if op == 'and' else 'false')
        if len(kids) == 1:
            return kids[0]
        return TypedTerm(t, BOOL, op, tuple(kids))

    # terms

    def typed(self, t) -> TypedTerm:
        if isinstance(t, Var):
            if t.name not in self.var_sorts:
                raise MissingTypeHyp(t.name)
            return TypedTerm(t, self.var_sorts[t.name], text=self.var_names[t.name])
        if isinstance(t, Const):
            return self.constant(t)
        if isinstance(t, FixAnnot):
            return self.fix(t)
        if isinstance(t, TypeHypMarker):
            return self.connective(t, 'and', [self.boolean(x) for x in t.terms])
        return self.app(t)

    def constant(self, t):
        v = t.value
        if isinstance(v, BoolConst):
            return TypedTerm(t, BOOL, text='true' if v.value else 'false')
        if isinstance(v, IntConst):
            return TypedTerm(t, self.int_sort, text=_number_text(v.value, self.ints_as_reals))
        if isinstance(v, RatConst):
            return TypedTerm(t, REAL, text=_number_text(v.value, True))
        if isinstance(v, SymConst):
            sort = self.sym_sort()
            self.interns, index = intern_symbol(self.interns, v.name)
            ctor = self.infos[sort.smt_name].constructors[0].name
            return TypedTerm(t, sort, text=f'({ctor} {index})')
        raise UnsupportedOp(print_term(t), 'unknown constant')

    def fix(self, t):
        tdef = self.reg.fty_type_by_name(t.type_name)
        sort = self.type_sort(tdef)
        if not is_nil_const(t.term):
            return self.coerce(self.typed(t.term), sort, t)
        if isinstance(sort, ArraySort):
            return TypedTerm(t, sort, text=f'((as const {sort.full()}) {self.nil_of(sort.pair)})')
        if sort.kind in ('list', 'option'):
            return TypedTerm(t, sort, text=self.nil_of(sort))
        raise SortClash(print_term(t), sort.smt(), 'nil')

    def app(self, t):
        fn = self.reg.alias_of(t.fn) or t.fn
        args = t.args
        if fn == HINT_WRAPPER:
            return TypedTerm(t, BOOL, text='false')
        if fn == 'NOT':
            return TypedTerm(t, BOOL, 'not', (self.boolean(args[0]),))
        if fn in ('AND', 'OR'):
            op = fn.lower()
            return self.connective(t, op, [self.boolean(a) for a in args])
        if fn == 'IMPLIES':
            return TypedTerm(t, BOOL, '=>', (self.boolean(args[0]), self.boolean(args[1])))
        if fn == 'IFF':
            return TypedTerm(t, BOOL, '=', (self.boolean(args[0]), self.boolean(args[1])))
        if fn == 'IF':
            test = self.boolean(args[0])
            a, b = self.unify(t, self.typed(args[1]), self.typed(args[2]))
            return TypedTerm(t, a.sort, 'ite', (test, a, b))
        if fn in _ARITH_OPS:
            return self.arith(t, _ARITH_OPS[fn])
        if fn in ('-', 'UNARY--'):
            sort, nodes = self.numeric(t, [self.typed(a) for a in args])
            return TypedTerm(t, sort, '-', nodes)
        if fn in ('/', 'UNARY-/'):
            return self.divide(t)
        if fn == '^':
            return self.power(t)
        if fn in _COMPARISONS or fn == '=':
            _, nodes = self.numeric(t, [self.typed(a) for a in args])
            return TypedTerm(t, BOOL, fn, nodes)
        if fn == 'EQUAL':
            a, b = self.unify(t, self.typed(args[0]), self.typed(args[1]))
            if self.holds_array(a.sort):
                raise UnsupportedOp('EQUAL', f'alist values of sort {a.sort.smt()} are compared only through assoc-equal')
            return TypedTerm(t, BOOL, '=', (a, b))
        if fn in PRIMITIVE_RECOGNIZERS:
            return self.recognizer(t, PrimitiveKind(fn))
        if fn in ('CONSP', 'NULL'):
            return self.emptiness(t, fn)
        if fn in ('CAR', 'CDR'):
            return self.destructor(t, fn)
        if fn == 'CONS':
            return self.cons(t)
        if fn == 'ACONS':
            return self.acons(t)
        if fn == 'ASSOC-EQUAL':
            return self.assoc(t)
        if fn == 'LIST':
            raise UnsupportedOp('LIST', 'build typed lists with cons and (as nil <type>)')
        role = self.reg.fty_role(fn)
        if role is not None:
            return self.fty(t, role)
        if fn in self.specs:
            return self.uninterpreted(t, fn)
        if self.reg.function(fn) is not None:
            raise UnsupportedOp(fn, 'user function left after expansion without an uninterpreted spec')
        raise UnsupportedOp(fn)

    def arith(self, t, op):
        if not t.args:
            return TypedTerm(t, self.int_sort, text=_number_text(0 if op == '+' else 1, self.ints_as_reals))
        sort, nodes = self.numeric(t, [self.typed(a) for a in t.args])
        if len(nodes) == 1:
            return nodes[0]
        return TypedTerm(t, sort, op, nodes)

    def divide(self, t):
        if len(t.args) == 1:
            num = TypedTerm(make_const(1), REAL, text='1.0')
            den_term = t.args[0]
        else:
            num = self.coerce(self.numeric(t, [self.typed(t.args[0])])[1][0], REAL, t)
            den_term = t.args[1]
        den = self.coerce(self.numeric(t, [self.typed(den_term)])[1][0], REAL, t)
        if isinstance(den_term, Const):
            if den_term.value.value == 0:
                return TypedTerm(t, REAL, 'rec', (num, den), text='0.0')
            return TypedTerm(t, REAL, '/', (num, den))
        target = App('NOT', (App('EQUAL', (den_term, make_const(0))),))
        return TypedTerm(t, REAL, '/', (num, den), precondition=target, site='division')

    def power(self, t):
        base_term, exponent = t.args
        if not (isinstance(exponent, Const) and isinstance(exponent.value, IntConst) and exponent.value.value >= 0):
            raise UnsupportedOp('^', 'the exponent must be a non-negative integer literal')
        _, (base,) = self.numeric(t, [self.typed(base_term)])
        n = exponent.value.value
        if n == 0:
            return TypedTerm(t, base.sort, text=_number_text(1, base.sort == REAL))
        if n == 1:
            return base
        return TypedTerm(t, base.sort, '*', (base,) + (replace(base, walk=False),) * (n - 1))

    def _recognize(self, kind, sort):
        """How a recognizer reads on a value of ``sort``; see docs/TRANSLATION.md."""
        s = sort
        dt_kind = s.kind if isinstance(s, DatatypeSort) else ('array' if isinstance(s, ArraySort) else None)
        info = self.infos.get(s.smt_name) if isinstance(s, DatatypeSort) else None
        if s == BOOL:
            if isinstance(kind, PrimitiveKind):
                return 'true-drop' if kind.name in ('BOOLEANP', 'SYMBOLP') else 'false-drop'
            if kind.kind == 'option':
                base = self.reg.recognizer_kind(kind.base_recognizer)
                if isinstance(base, PrimitiveKind) and base.name in ('BOOLEANP', 'SYMBOLP'):
                    return 'true-drop'
                return 'not'
            if kind.kind in ('list', 'alist'):
                return 'not'
            return 'false-drop'
        if isinstance(kind, PrimitiveKind):
            name = kind.name
            if name == 'BOOLEANP':
                if s in NUMERIC or dt_kind == 'prod':
                    return 'false'
                if dt_kind in ('list', 'pair'):
                    return 'is-nil'
                if dt_kind == 'option':
                    return 'true' if info.base == BOOL else 'is-nil'
                return None
            if name in ('INTEGERP', 'RATIONALP'):
                if s == INT or (s == REAL and name == 'RATIONALP'):
                    return 'true'
                if s == REAL:
                    return 'is_int'
                if dt_kind == 'option':
                    if info.base in NUMERIC:
                        return 'not-nil' if (info.base == INT or name == 'RATIONALP') else None
                    return 'false'
                return 'false'
            # SYMBOLP
            if dt_kind == 'sym':
                return 'true'
            if s in NUMERIC or dt_kind == 'prod':
                return 'false'
            if dt_kind in ('list', 'pair'):
                return 'is-nil'
            if dt_kind == 'option':
                return 'true' if (info.base == BOOL or (isinstance(info.base, DatatypeSort) and info.base.kind == 'sym')) \
                    else 'is-nil'
            return None
        own = self.type_sort(kind)
        if s == own:
            return 'true'
        if kind.kind == 'prod':
            return 'false'
        if kind.kind == 'list' and dt_kind == 'list' and info.base == self.infos[own.smt_name].base:
            return 'true'
        if kind.kind == 'option' and s == self.infos[own.smt_name].base:
            return 'true'
        return None

    def recognizer(self, t, kind):
        arg = self.typed(t.args[0])
        how = self._recognize(kind, arg.sort)
        if how is None:
            name = kind.name if isinstance(kind, PrimitiveKind) else kind.recognizer
            raise UnsupportedOp(name, f'recognizer applied to a {arg.sort.smt()} value')
        if how == 'true-drop':
            return TypedTerm(t, BOOL, text='true')
        if how == 'false-drop':
            return TypedTerm(t, BOOL, text='false')
        if how in ('true', 'false'):
            return TypedTerm(t, BOOL, 'rec', (arg,), text=how)
        if how == 'is_int':
            return TypedTerm(t, BOOL, 'is_int', (arg,))
        if how == 'not':
            return TypedTerm(t, BOOL, 'not', (arg,))
        if how == 'is-nil':
            return self.is_nil_node(arg, t)
        return self.not_nil_node(arg, t)

    def emptiness(self, t, fn):
        arg = self.typed(t.args[0])
        s = arg.sort
        dt_kind = s.kind if isinstance(s, DatatypeSort) else None
        if s == BOOL:
            return TypedTerm(t, BOOL, 'not', (arg,)) if fn == 'NULL' else TypedTerm(t, BOOL, text='false')
        if fn == 'CONSP':
            if dt_kind == 'list':
                return TypedTerm(t, BOOL, self.infos[s.smt_name].consp, (arg,))
            if dt_kind == 'pair':
                return self.not_nil_node(arg, t)
            if s in NUMERIC or dt_kind == 'sym':
                return TypedTerm(t, BOOL, 'rec', (arg,), text='false')
        else:
            if dt_kind in ('list', 'pair', 'option'):
                return self.is_nil_node(arg, t)
            if s in NUMERIC or dt_kind == 'prod':
                return TypedTerm(t, BOOL, 'rec', (arg,), text='false')
        raise UnsupportedOp(fn, f'applied to a {s.smt()} value')

    def destructor(self, t, fn):
        arg = self.typed(t.args[0])
        s = arg.sort
        dt_kind = s.kind if isinstance(s, DatatypeSort) else None
        if dt_kind not in ('list', 'pair'):
            if is_nil_const(t.args[0]):
                raise AmbiguousNil(print_term(t))
            raise SortClash(print_term(t), 'a typed list or an assoc result', s.smt())
        info = self.infos[s.smt_name]
        (car_name, car_sort), (cdr_name, cdr_sort) = info.constructors[0].fields
        if dt_kind == 'list':
            target = App('CONSP', (t.args[0],))
            site = fn.lower()
        else:
            target = App('NOT', (App('NULL', (t.args[0],)),))
            site = 'assoc-' + fn.lower()
        if fn == 'CAR':
            return TypedTerm(t, car_sort, car_name, (arg,), precondition=target, site=site)
        return TypedTerm(t, cdr_sort, cdr_name, (arg,), precondition=target, site=site)

    def cons(self, t):
        if is_nil_const(t.args[1]):
            raise AmbiguousNil(print_term(t))
        tail = self.typed(t.args[1])
        if not (isinstance(tail.sort, DatatypeSort) and tail.sort.kind == 'list'):
            raise SortClash(print_term(t), 'a typed list', tail.sort.smt())
        info = self.infos[tail.sort.smt_name]
        head = self.coerce(self.typed(t.args[0]), info.base, t)
        return TypedTerm(t, tail.sort, info.constructors[0].name, (head, tail))

    def _alist_arg(self, t, term):
        if is_nil_const(term):
            raise AmbiguousNil(print_term(t))
        node = self.typed(term)
        if not isinstance(node.sort, ArraySort):
            raise SortClash(print_term(t), 'a typed alist', node.sort.smt())
        return node

    def acons(self, t):
        alist = self._alist_arg(t, t.args[2])
        sort = alist.sort
        info = self.infos[sort.pair.smt_name]
        key = self.coerce(self.typed(t.args[0]), sort.key, t)
        val = self.coerce(self.typed(t.args[1]), info.base[1], t)
        pair = TypedTerm(App('CONS', t.args[:2]), sort.pair, info.constructors[0].name, (replace(key, walk=False), val))
        return TypedTerm(t, sort, 'store', (alist, key, pair))

    def assoc(self, t):
        alist = self._alist_arg(t, t.args[1])
        key = self.coerce(self.typed(t.args[0]), alist.sort.key, t)
        return TypedTerm(t, alist.sort.pair, 'select', (alist, key))

    def fty(self, t, role):
        tdef = role.typedef
        if role.kind == 'recognizer':
            return self.recognizer(t, tdef)
        sort = self.type_sort(tdef)
        info = self.infos[sort.smt_name]
        ctor = info.constructors[0]
        if role.kind == 'constructor':
            args = tuple(self.coerce(self.typed(a), fsort, t) for a, (_, fsort) in zip(t.args, ctor.fields))
            return TypedTerm(t, sort, ctor.name, args)
        if role.kind == 'some':
            return TypedTerm(t, sort, ctor.name, (self.coerce(self.typed(t.args[0]), info.base, t),))
        arg = self.typed(t.args[0])
        if role.kind == 'accessor':
            if arg.sort != sort:
                raise SortClash(print_term(t), sort.smt(), arg.sort.smt())
            name, fsort = ctor.fields[role.index]
            return TypedTerm(t, fsort, name, (arg,))
        # option value accessor
        if arg.sort == info.base:
            return arg
        if arg.sort != sort:
            raise SortClash(print_term(t), sort.smt(), arg.sort.smt())
        target = App('NOT', (App('NULL', (t.args[0],)),))
        return TypedTerm(t, info.base, ctor.fields[0][0], (arg,), precondition=target, site='val')

    def uninterpreted(self, t, fn):
        spec = self.specs[fn]
        if fn not in self.functions:
            arg_sorts = tuple(self.recognizer_sort(r) for r in spec.arg_recognizers)
            result = self.recognizer_sort(spec.result_recognizer)
            self.functions[fn] = UninterpFn(fn, self.mangler.name(('fn', fn), fn), arg_sorts, result)
        uf = self.functions[fn]
        args = tuple(self.coerce(self.typed(a), s, t) for a, s in zip(t.args, uf.args))
        return TypedTerm(t, uf.result, uf.smt_name, args)


NIL_TERM = Const(BoolConst(False))


def _marker(d, tag):
    return is_negation(d) and isinstance(d.args[0], TypeHypMarker) and d.args[0].tag == tag


def infer_sorts(g: Clause, reg, hint=None) -> TypedGoal:
    """Give every variable and subterm of ``g`` a sort.

    Variable sorts come only from the type marker; a variable without one is
    an error, as is any operation the backend cannot express.
    """
    sorter = _Sorter(reg, hint)
    type_terms = []
    for d in g.disjuncts:
        if _marker(d, TYPE_TAG):
            type_terms.extend(d.args[0].terms)
    for term in type_terms:
        if not (isinstance(term, App) and len(term.args) == 1 and isinstance(term.args[0], Var)):
            raise UnsupportedOp(print_term(term), 'type hypotheses must apply a recognizer to a variable')
        sorter.declare_var(term.args[0].name, term.fn, print_term(term))
    for var in free_vars(g):
        if var not in sorter.var_sorts:
            raise MissingTypeHyp(var)
    assumptions = []
    body = []
    units = []
    for d in g.disjuncts:
        if _marker(d, TYPE_TAG):
            units.append((d, None))
        elif _marker(d, RETURN_TAG):
            node = sorter.typed(d.args[0])
            assumptions.append((d, node))
            units.append((d, node))
        else:
            node = sorter.boolean(d)
            body.append((d, node))
            units.append((d, node))
    return TypedGoal(
        clause=g,
        var_sorts=tuple(sorter.var_sorts.items()),
        var_names=tuple(sorter.var_names.items()),
        type_terms=tuple(type_terms),
        assumptions=tuple(assumptions),
        body=tuple(body),
        units=tuple(units),
        interns=sorter.interns,
        declared=tuple(sorter.declared.values()),
        functions=tuple(sorter.functions.values()),
        ints_as_reals=sorter.ints_as_reals,
        sym_sort=sorter.sym,
    )


def lower_types(typed: TypedGoal) -> tuple:
    """Declarations for every datatype and alist sort the goal uses, dependencies first."""
    out = []
    for item in typed.declared:
        if isinstance(item, ArraySort):
            out.append(f'(define-sort {item.smt_name} () {item.full()})')
        else:
            out.extend(item.declarations())
    return tuple(out)


@dataclass(frozen=True)
class SmtScript:
    preamble: tuple
    declarations: tuple
    assertions: tuple
    directives: tuple = ('(check-sat)', '(get-model)')

    @property
    def body(self) -> str:
        return '\n'.join(self.preamble + self.declarations + self.assertions) + '\n'

    @property
    def text(self) -> str:
        return self.body + '\n'.join(self.directives) + '\n'


PREAMBLE = ('; generated by smtpipe', '(set-option :produce-models true)', '(set-logic ALL)')


def emit_script(typed: TypedGoal, declarations: tuple, interns: Optional[SymbolIntern] = None) -> SmtScript:
    """Assemble the script: declarations, assumptions, the negated goal, then check-sat and get-model."""
    decls = list(declarations)
    for name, smt_name in typed.var_names:
        decls.append(f'(declare-fun {smt_name} () {typed.sort_of(name).smt()})')
    decls.extend(uf.declaration() for uf in typed.functions)
    assertions = [f'(assert {render(node)})' for _, node in typed.assumptions]
    goal = [render(node) for _, node in typed.body]
    if not goal:
        assertions.append('(assert true)')
    elif len(goal) == 1:
        assertions.append(f'(assert (not {goal[0]}))')
    else:
        assertions.append(f'(assert (not (or {" ".join(goal)})))')
    return SmtScript(PREAMBLE, tuple(decls), tuple(assertions))


# ---------------------------------------------------------------------------
# preconditions

def _walk(node: TypedTerm, guards: tuple):
    """Every walked node with the path guards it sits under."""
    if not node.walk:
        return
    yield node, guards
    kids = node.args
    if node.head == 'ite':
        test, a, b = kids
        yield from _walk(test, guards)
        yield from _walk(a, guards + (test.term,))
        yield from _walk(b, guards + (negate(test.term),))
    elif node.head in ('and', 'or'):
        acc = guards
        for k in kids:
            yield from _walk(k, acc)
            acc = acc + ((k.term,) if node.head == 'and' else (negate(k.term),))
    elif node.head == '=>':
        yield from _walk(kids[0], guards)
        yield from _walk(kids[1], guards + (kids[0].term,))
    else:
        for k in kids:
            yield from _walk(k, guards)


def _sites(node: TypedTerm, guards: tuple):
    return ((n, g) for n, g in _walk(node, guards) if n.precondition is not None)


def _call_guards(roots, wanted) -> dict:
    """Guards shared by every occurrence of each ``wanted`` application in ``roots``."""
    out = {}
    for root in roots:
        for node, guards in _walk(root, ()):
            if node.term not in wanted:
                continue
            if node.term in out:
                present = set(guards)
                out[node.term] = tuple(g for g in out[node.term] if g in present)
            else:
                out[node.term] = guards
    return out


def _assumption_calls(d) -> list:
    return [sub for term in d.args[0].terms for sub in subterms(term) if isinstance(sub, App)]


def _assumption_guards(d, call_guards) -> tuple:
    """A return assumption is made for a call; its sites inherit that call's guards."""
    for sub in _assumption_calls(d):
        if sub in call_guards:
            return call_guards[sub]
    return ()


def _admitted(units) -> tuple:
    """Hypotheses whose own partial operations are justified by earlier admitted facts."""
    facts = set()
    admitted = set()
    changed = True
    while changed:
        changed = False
        for d, node in units:
            if d in admitted or not is_negation(d):
                continue
            sites = list(_sites(node, ())) if node is not None else []
            if all(implied_by(s.precondition, facts | set(guards)) for s, guards in sites):
                admitted.add(d)
                facts |= term_facts(d.args[0])
                changed = True
    return tuple(d for d, _ in units if d in admitted)


def gen_preconditions(typed: TypedGoal) -> tuple:
    """One obligation per partial operation: its guard holds under the admitted hypotheses and path."""
    context = _admitted(typed.units)
    wanted = {sub for d, _ in typed.assumptions for sub in _assumption_calls(d)}
    call_guards = _call_guards((node for _, node in typed.body), wanted) if wanted else {}
    ledger = ()
    roots = [(node, _assumption_guards(d, call_guards)) for d, node in typed.assumptions]
    roots += [(node, ()) for _, node in typed.body]
    for root, start in roots:
        for node, guards in _sites(root, start):
            clause = Clause(context + tuple(negate(g) for g in guards) + (node.precondition,))
            ledger = append_obligation(ledger, clause, Origin.SMT_PRECONDITION, Strategy.VIA_SMT,
                                       location=f'{node.site} {print_term(node.term)}')
    return ledger


@dataclass(frozen=True, eq=False)
class LoweredGoal:
    typed: TypedGoal
    declarations: tuple
    script: SmtScript
    preconditions: tuple = field(default_factory=tuple)


def lower_goal(g: Clause, reg, hint=None) -> LoweredGoal:
    typed = infer_sorts(g, reg, hint)
    declarations = lower_types(typed)
    script = emit_script(typed, declarations, typed.interns)
    preconditions = gen_preconditions(typed)
    log.debug(f'[smt-lower] {len(typed.var_sorts)} variable(s), {len(declarations)} declaration(s), '
              f'{len(preconditions)} precondition(s)')
    return LoweredGoal(typed, declarations, script, preconditions)
