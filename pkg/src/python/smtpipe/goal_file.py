# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""Goal files: definitions, type declarations and theorems with their hints."""
import logging as log
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from smtpipe.pipeline_passes import EMPTY_HINT, ExpandOverride, HintSpec, HypoHint
from smtpipe.term_core import Clause, SmtPipeError, Sym, clausify, print_sexpr, read_all, sexpr_to_term
from smtpipe.type_registry import (
    TypeRegistry, UninterpSpec, declare_stub, make_alist, make_list, make_option, make_prod, register_defun,
    register_fty, register_fty_group,
)


class GoalFileError(SmtPipeError):
    def __init__(self, path, line, form, cause):
        self.path = path
        self.line = line
        self.form = form
        self.cause = cause
        where = f'{path}:{line}' if line is not None else str(path)
        super().__init__(f'== {where}: {form}: {cause} ==')


class _FormError(SmtPipeError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class Theorem:
    name: str
    clause: Clause
    hints: HintSpec
    line: int
    body: object
    reg: TypeRegistry
    path: str = '<string>'


@dataclass(frozen=True)
class GoalFile:
    path: str
    reg: TypeRegistry
    theorems: tuple

    def theorem_names(self):
        return tuple(t.name for t in self.theorems)


def _name(s, what):
    if not isinstance(s, Sym) or s.name.startswith(':'):
        raise _FormError(f'expected a {what} name, got {print_sexpr(s)}')
    return s.name


def _names(s, what):
    if not isinstance(s, tuple):
        raise _FormError(f'expected a list of {what}s, got {print_sexpr(s)}')
    return tuple(_name(x, what) for x in s)


def _plist(items, allowed):
    """Keyword/value pairs; repeated or unknown keywords are errors."""
    if len(items) % 2:
        raise _FormError(f'odd keyword list {print_sexpr(tuple(items))}')
    out = {}
    for key, value in zip(items[::2], items[1::2]):
        if not isinstance(key, Sym) or not key.name.startswith(':'):
            raise _FormError(f'expected a keyword, got {print_sexpr(key)}')
        k = key.name[1:].lower()
        if k not in allowed:
            raise _FormError(f'unknown keyword :{k}, expected one of {sorted(allowed)}')
        if k in out:
            raise _FormError(f'keyword :{k} given twice')
        out[k] = value
    return out


def _flag(s, what):
    if s in (Sym('t'), Sym('nil')):
        return s == Sym('t')
    if s == ():
        return False
    raise _FormError(f'{what} expects t or nil')


def _positive_number(s, what):
    if isinstance(s, bool) or not isinstance(s, (int, Fraction)):
        raise _FormError(f'{what} expects a number, got {print_sexpr(s)}')
    if s <= 0:
        raise _FormError(f'{what} expects a positive number')
    return s


# ---------------------------------------------------------------------------
# type declarations

def _type_def(form):
    head = form[0].name
    if head == 'DEFPROD':
        if len(form) != 3 or not isinstance(form[2], tuple):
            raise _FormError('expected (defprod name ((field recognizer) ...))')
        fields = []
        for f in form[2]:
            if not (isinstance(f, tuple) and len(f) == 2):
                raise _FormError(f'bad field {print_sexpr(f)}')
            fields.append((_name(f[0], 'field'), _name(f[1], 'recognizer')))
        return make_prod(_name(form[1], 'type'), fields)
    if head == 'DEFLIST':
        opts = _plist(form[2:], {'elt-type', 'true-listp'})
        if 'elt-type' not in opts:
            raise _FormError('deflist needs :elt-type')
        true_listp = _flag(opts['true-listp'], ':true-listp') if 'true-listp' in opts else True
        return make_list(_name(form[1], 'type'), _name(opts['elt-type'], 'recognizer'), true_listp)
    if head == 'DEFALIST':
        opts = _plist(form[2:], {'key-type', 'val-type'})
        if set(opts) != {'key-type', 'val-type'}:
            raise _FormError('defalist needs :key-type and :val-type')
        return make_alist(_name(form[1], 'type'), _name(opts['key-type'], 'recognizer'),
                          _name(opts['val-type'], 'recognizer'))
    if head == 'DEFOPTION':
        if len(form) != 3:
            raise _FormError('expected (defoption name base-recognizer)')
        return make_option(_name(form[1], 'type'), _name(form[2], 'recognizer'))
    raise _FormError(f'{head.lower()} is not a type declaration')


_TYPE_FORMS = ('DEFPROD', 'DEFLIST', 'DEFALIST', 'DEFOPTION')


# ---------------------------------------------------------------------------
# hints

def _hypotheses(s, reg):
    if not isinstance(s, tuple):
        raise _FormError(':hypotheses expects a list of (term [:note reason]) entries')
    out = []
    for entry in s:
        if not isinstance(entry, tuple) or not entry:
            raise _FormError(f'bad hypothesis entry {print_sexpr(entry)}')
        opts = _plist(entry[1:], {'note'})
        note = None
        if 'note' in opts:
            note = print_sexpr(opts['note']).lower()
        out.append(HypoHint(sexpr_to_term(entry[0], reg), note))
    return tuple(out)


def _expand(s, reg):
    if not isinstance(s, tuple):
        raise _FormError(':expand expects a list of (name :depth n) or (name :uninterpreted) entries')
    out = {}
    for entry in s:
        if not isinstance(entry, tuple) or not entry:
            raise _FormError(f'bad expand entry {print_sexpr(entry)}')
        name = _name(entry[0], 'function')
        if entry[1:] == (Sym(':uninterpreted'),):
            out[name] = ExpandOverride(uninterpreted=True)
            continue
        opts = _plist(entry[1:], {'depth'})
        depth = opts.get('depth')
        if not isinstance(depth, int) or depth < 0:
            raise _FormError(f'{name.lower()}: :depth expects a non-negative integer')
        out[name] = ExpandOverride(depth=depth)
    return out


def _uninterp(s, reg):
    if not isinstance(s, tuple):
        raise _FormError(':uninterp expects a list of (name (arg-recognizers) result-recognizer) entries')
    out = {}
    for entry in s:
        if not isinstance(entry, tuple) or len(entry) < 3:
            raise _FormError(f'bad uninterp entry {print_sexpr(entry)}')
        name = _name(entry[0], 'function')
        fdef = reg.function(name)
        if fdef is None:
            raise _FormError(f'{name.lower()} is not defined')
        opts = _plist(entry[3:], {'constraints'})
        constraints = opts.get('constraints', ())
        if not isinstance(constraints, tuple):
            raise _FormError(':constraints expects a list of terms')
        out[name] = UninterpSpec(
            _names(entry[1], 'recognizer'), _name(entry[2], 'recognizer'),
            tuple(sexpr_to_term(c, reg, variables=fdef.formals) for c in constraints))
    return out


def parse_hints(s, reg) -> HintSpec:
    """Read a hint plist such as ``(:hypotheses (...) :expand (...) :ints-as-reals t)``."""
    if s == () or s is None:
        return EMPTY_HINT
    if not isinstance(s, tuple):
        raise _FormError(':hints expects a keyword list')
    opts = _plist(s, {'hypotheses', 'expand', 'uninterp', 'ints-as-reals', 'timeout', 'expansion-cap'})
    solver = {}
    if 'timeout' in opts:
        solver['timeout'] = _positive_number(opts['timeout'], ':timeout')
    cap = None
    if 'expansion-cap' in opts:
        cap = _positive_number(opts['expansion-cap'], ':expansion-cap')
    return HintSpec(
        hypotheses=_hypotheses(opts.get('hypotheses', ()), reg),
        expand=_expand(opts.get('expand', ()), reg),
        uninterp=_uninterp(opts.get('uninterp', ()), reg),
        ints_as_reals=_flag(opts['ints-as-reals'], ':ints-as-reals') if 'ints-as-reals' in opts else None,
        solver=solver,
        expansion_cap=cap,
    )


# ---------------------------------------------------------------------------
# forms

def _apply_form(form, reg, line, theorems, path):
    if not isinstance(form, tuple) or not form or not isinstance(form[0], Sym):
        raise _FormError('expected a top-level (def... ) form')
    head = form[0].name
    if head == 'DEFUN':
        if len(form) != 4:
            raise _FormError('expected (defun name (formals) body)')
        return register_defun(reg, _name(form[1], 'function'), _names(form[2], 'formal'), form[3])
    if head == 'DEFSTUB':
        if len(form) not in (3, 5) or (len(form) == 5 and form[3] != Sym('=>')):
            raise _FormError('expected (defstub name (formals) [=> *])')
        return declare_stub(reg, _name(form[1], 'function'), _names(form[2], 'formal'))
    if head in _TYPE_FORMS:
        return register_fty(reg, _type_def(form))
    if head == 'DEFTYPES':
        if len(form) < 3:
            raise _FormError('expected (deftypes name type-form ...)')
        return register_fty_group(reg, tuple(_type_def(f) for f in form[2:]))
    if head == 'SET-REALP-ALIAS':
        if len(form) != 2:
            raise _FormError('expected (set-realp-alias t|nil)')
        return reg.with_realp_alias(_flag(form[1], 'realp alias'))
    if head == 'DEFTHM':
        if len(form) < 3:
            raise _FormError('expected (defthm name body [:hints (...)])')
        name = _name(form[1], 'theorem')
        if any(t.name == name for t in theorems):
            raise _FormError(f'theorem {name.lower()} defined twice')
        opts = _plist(form[3:], {'hints'})
        body = sexpr_to_term(form[2], reg)
        theorems.append(Theorem(name, clausify(body), parse_hints(opts.get('hints'), reg), line, body, reg, str(path)))
        return reg
    raise _FormError(f'unknown form {head.lower()}')


def _form_label(form):
    if isinstance(form, tuple) and len(form) >= 2:
        return f'({print_sexpr(form[0]).lower()} {print_sexpr(form[1]).lower()} ...)'
    return print_sexpr(form)[:40]


def parse_goal_text(text: str, path='<string>') -> GoalFile:
    """Read every form in order; definitions must precede their uses."""
    try:
        forms = read_all(text)
    except SmtPipeError as err:
        offset = getattr(err, 'offset', None)
        line = text.count('\n', 0, offset) + 1 if isinstance(offset, int) else None
        raise GoalFileError(path, line, 'reader', err) from err
    reg = TypeRegistry()
    theorems = []
    for form, offset in forms:
        line = text.count('\n', 0, offset) + 1
        try:
            reg = _apply_form(form, reg, line, theorems, path)
        except SmtPipeError as err:
            cause = err.reason if isinstance(err, _FormError) else err
            raise GoalFileError(path, line, _form_label(form), cause) from err
    log.debug(f'[goal-file] {path}: {len(forms)} form(s), {len(theorems)} theorem(s)')
    return GoalFile(str(path), reg, tuple(theorems))


def load_goal_file(path) -> GoalFile:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as err:
        raise GoalFileError(path, None, 'file', f'cannot read: {err.strerror or err}') from err
    return parse_goal_text(text, path)


def select_theorem(goal_file: GoalFile, name: Optional[str] = None) -> Theorem:
    """The named theorem, or the only one when no name is given."""
    if name is not None:
        for t in goal_file.theorems:
            if t.name == name.upper():
                return t
        raise GoalFileError(goal_file.path, None, 'defthm', f'no theorem named {name}')
    if len(goal_file.theorems) != 1:
        names = ', '.join(n.lower() for n in goal_file.theorem_names()) or 'none'
        raise GoalFileError(goal_file.path, None, 'defthm',
                            f'expected exactly one theorem, found {names}; pick one with --theorem')
    return goal_file.theorems[0]
