# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""Hint handling and the clause passes that run before SMT lowering."""
import logging as log
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Dict, Mapping, Optional, Tuple

from smtpipe.config_class import (
    DEFAULT_EXPANSION_CAP, DEFAULT_RECURSIVE_DEPTH, INITIAL_STAGE, LOWERING_PASS, PASS_STAGE, SMT_ARCHITECTURE,
)
from smtpipe.obligation_ledger import Origin, Strategy, append_obligation, renumber
from smtpipe.smt_backend import lower_goal
from smtpipe.term_core import (
    App, Clause, SmtPipeError, TypeHypMarker, TYPE_TAG, RETURN_TAG, Var, children, format_clause, free_vars,
    implication_clause, is_negation, negate, rebuild, substitute,
)
from smtpipe.type_registry import UninterpSpec, effective_uninterp


class BadHint(SmtPipeError):
    def __init__(self, field_name, reason):
        self.field_name = field_name
        self.reason = reason
        super().__init__(f'== bad hint field {field_name}: {reason} ==')


class StageError(SmtPipeError):
    def __init__(self, pass_id, expected, got):
        self.pass_id = pass_id
        self.expected = expected
        self.got = got
        super().__init__(f'== pass {pass_id} needs stage {expected}, state is at {got} ==')


class ExpansionBlowup(SmtPipeError):
    def __init__(self, size, cap):
        self.size = size
        self.cap = cap
        super().__init__(f'== expansion grew the clause to size {size}, cap is {cap} ==')


class ArchTableError(SmtPipeError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f'== bad architecture table: {reason} ==')


# ---------------------------------------------------------------------------
# hints

@dataclass(frozen=True)
class HypoHint:
    term: object
    note: Optional[str] = None


@dataclass(frozen=True)
class ExpandOverride:
    depth: Optional[int] = None
    uninterpreted: bool = False


def _frozen(mapping):
    return MappingProxyType(dict(mapping or {}))


@dataclass(frozen=True, eq=False)
class HintSpec:
    hypotheses: tuple = ()
    expand: Mapping[str, ExpandOverride] = field(default_factory=dict)
    uninterp: Mapping[str, UninterpSpec] = field(default_factory=dict)
    ints_as_reals: Optional[bool] = None
    solver: Mapping[str, object] = field(default_factory=dict)
    expansion_cap: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, 'hypotheses', tuple(self.hypotheses))
        object.__setattr__(self, 'expand', _frozen(self.expand))
        object.__setattr__(self, 'uninterp', _frozen(self.uninterp))
        object.__setattr__(self, 'solver', _frozen(self.solver))

    def __eq__(self, other):
        if not isinstance(other, HintSpec):
            return NotImplemented
        return (self.hypotheses == other.hypotheses and dict(self.expand) == dict(other.expand)
                and dict(self.uninterp) == dict(other.uninterp) and self.ints_as_reals == other.ints_as_reals
                and dict(self.solver) == dict(other.solver) and self.expansion_cap == other.expansion_cap)


EMPTY_HINT = HintSpec()


def merge_hints(user: HintSpec, defaults: HintSpec) -> HintSpec:
    """User fields win; mappings merge key-wise; default hypotheses come first."""
    return HintSpec(
        hypotheses=defaults.hypotheses + tuple(h for h in user.hypotheses if h not in defaults.hypotheses),
        expand={**defaults.expand, **user.expand},
        uninterp={**defaults.uninterp, **user.uninterp},
        ints_as_reals=user.ints_as_reals if user.ints_as_reals is not None else defaults.ints_as_reals,
        solver={**defaults.solver, **user.solver},
        expansion_cap=user.expansion_cap if user.expansion_cap is not None else defaults.expansion_cap,
    )


def uninterp_specs(hint: HintSpec, reg) -> Dict[str, UninterpSpec]:
    return effective_uninterp(reg, hint.uninterp)


# ---------------------------------------------------------------------------
# architecture table and state

@dataclass(frozen=True)
class ArchTable:
    """Linear pass order; each pass may only run on the stage its predecessor produced."""
    passes: tuple = SMT_ARCHITECTURE

    def __post_init__(self):
        passes = tuple(self.passes)
        object.__setattr__(self, 'passes', passes)
        if not passes:
            raise ArchTableError('no passes')
        if len(set(passes)) != len(passes):
            raise ArchTableError('a pass appears twice, the table would not be acyclic')
        unknown = [p for p in passes if p not in PASS_STAGE]
        if unknown:
            raise ArchTableError(f'unknown pass(es) {unknown}')
        if passes[-1] != LOWERING_PASS:
            raise ArchTableError(f'the table must end in {LOWERING_PASS}')

    def successor(self, pass_id) -> Optional[str]:
        i = self.passes.index(pass_id)
        return self.passes[i + 1] if i + 1 < len(self.passes) else None

    def expected_stage(self, pass_id) -> str:
        if pass_id not in self.passes:
            raise ArchTableError(f'pass {pass_id} is not part of this table')
        i = self.passes.index(pass_id)
        return INITIAL_STAGE if i == 0 else PASS_STAGE[self.passes[i - 1]]


DEFAULT_ARCH = ArchTable()


@dataclass(frozen=True)
class TraceEntry:
    pass_id: str
    stage: str
    clause: Clause
    successor: Optional[str]


@dataclass(frozen=True, eq=False)
class PipelineState:
    goal: Clause
    main: Clause
    reg: object
    hint: HintSpec
    stage: str = INITIAL_STAGE
    ledger: tuple = ()
    trace: Tuple[TraceEntry, ...] = ()
    lowered: Optional[object] = None


def _enter(st: PipelineState, pass_id, arch: ArchTable):
    expected = arch.expected_stage(pass_id)
    if st.stage != expected:
        raise StageError(pass_id, expected, st.stage)


def _leave(st: PipelineState, pass_id, arch: ArchTable, main: Clause, ledger) -> PipelineState:
    stage = PASS_STAGE[pass_id]
    entry = TraceEntry(pass_id, stage, main, arch.successor(pass_id))
    log.info(f'[{pass_id}] stage {stage}: {len(main)} disjunct(s), ledger size {len(ledger)}')
    return replace(st, main=main, ledger=ledger, stage=stage, trace=st.trace + (entry,))


# ---------------------------------------------------------------------------
# process-hint

def _check_recognizer(reg, name, where):
    if not reg.is_recognizer(name):
        raise BadHint(where, f'{name} is not a recognizer')


def _validate_hint(hint: HintSpec, reg):
    for name, override in hint.expand.items():
        if reg.function(name) is None:
            raise BadHint('expand', f'{name} is not a user function')
        if not override.uninterpreted and (not isinstance(override.depth, int) or override.depth < 0):
            raise BadHint('expand', f'{name} needs a non-negative depth')
    for name, spec in hint.uninterp.items():
        fdef = reg.function(name)
        if fdef is None:
            raise BadHint('uninterp', f'{name} is not a user function')
        if len(spec.arg_recognizers) != len(fdef.formals):
            raise BadHint('uninterp', f'{name} takes {len(fdef.formals)} argument(s), '
                                      f'the hint types {len(spec.arg_recognizers)}')
        for rec in spec.arg_recognizers + (spec.result_recognizer,):
            _check_recognizer(reg, rec, 'uninterp')
        for c in spec.constraints:
            stray = set(free_vars(c)) - set(fdef.formals)
            if stray:
                raise BadHint('uninterp', f'constraint of {name} mentions {sorted(stray)} outside its formals')
    for h in hint.hypotheses:
        if not isinstance(h, HypoHint):
            raise BadHint('hypotheses', f'{h!r} is not a hypothesis entry')
        if h.note is not None and not str(h.note).strip():
            raise BadHint('hypotheses', 'an assumption note must not be empty')
    if hint.ints_as_reals not in (None, True, False):
        raise BadHint('ints-as-reals', 'expected t or nil')
    timeout = hint.solver.get('timeout')
    if timeout is not None and (not isinstance(timeout, (int, float)) or timeout <= 0):
        raise BadHint('timeout', 'expected a positive number of seconds')
    if hint.expansion_cap is not None and hint.expansion_cap <= 0:
        raise BadHint('expansion-cap', 'expected a positive size')


def process_hint(goal: Clause, user: HintSpec, defaults: HintSpec, reg) -> PipelineState:
    """Validate and merge the hints; the resulting state is at the initial stage."""
    merged = merge_hints(user, defaults)
    _validate_hint(merged, reg)
    return PipelineState(goal=goal, main=goal, reg=reg, hint=merged)


# ---------------------------------------------------------------------------
# add-hypo

def add_hypo(st: PipelineState, arch: ArchTable = DEFAULT_ARCH) -> PipelineState:
    """Move every hinted hypothesis H into the goal as a disjunct ``(not H)``.

    Each H also becomes an obligation ``H or G``: assumed when the hint
    carries a note, otherwise checked syntactically and then by the solver.
    """
    _enter(st, 'add-hypo', arch)
    ledger = st.ledger
    added = []
    for i, h in enumerate(st.hint.hypotheses, start=1):
        strategy = Strategy.USER_ASSUMED if h.note else Strategy.SYNTACTIC
        ledger = append_obligation(ledger, Clause((h.term,) + st.main.disjuncts), Origin.ADD_HYPO, strategy,
                                   note=h.note, location=f'hypothesis {i}')
        added.append(negate(h.term))
    main = Clause(tuple(added) + st.main.disjuncts)
    return _leave(st, 'add-hypo', arch, main, ledger)


# ---------------------------------------------------------------------------
# expand

class _Expander:
    """Innermost-first unfolding of user definitions.

    Non-recursive functions unfold completely.  A recursive function unfolds
    to its depth budget along each chain of nested calls, then stays a call.
    """

    def __init__(self, reg, hint: HintSpec):
        self.reg = reg
        self.overrides = hint.expand
        self.uninterp = set(uninterp_specs(hint, reg))
        self.cap = hint.expansion_cap or DEFAULT_EXPANSION_CAP
        self.bodies = {}
        self.sizes = {}

    def budget(self, name) -> Optional[int]:
        override = self.overrides.get(name)
        if override is not None:
            return 0 if override.uninterpreted else override.depth
        fdef = self.reg.function(name)
        if name in self.uninterp or fdef.body is None:
            return 0
        return DEFAULT_RECURSIVE_DEPTH if fdef.recursive else None

    def size(self, t) -> int:
        key = id(t)
        cached = self.sizes.get(key)
        if cached is not None:
            return cached[0]
        total = 1 + sum(self.size(k) for k in children(t))
        self.sizes[key] = (total, t)
        return total

    def body(self, name, budgets):
        key = (name, tuple(sorted(budgets.items())))
        if key not in self.bodies:
            self.bodies[key] = self.expand(self.reg.function(name).body, budgets)
        return self.bodies[key]

    def expand(self, t, budgets):
        kids = children(t)
        if kids:
            t = rebuild(t, (self.expand(k, budgets) for k in kids))
        if not isinstance(t, App) or self.reg.function(t.fn) is None:
            return t
        name = t.fn
        remaining = budgets[name] if name in budgets else self.budget(name)
        if remaining == 0:
            return t
        inner = dict(budgets)
        if remaining is not None:
            inner[name] = remaining - 1
        fdef = self.reg.function(name)
        result = substitute(self.body(name, inner), dict(zip(fdef.formals, t.args)))
        size = self.size(result)
        if size > self.cap:
            raise ExpansionBlowup(size, self.cap)
        return result


def expand_clause(c: Clause, reg, hint: HintSpec) -> Clause:
    """Expand every disjunct; the cap bounds the whole clause, not one unfolding."""
    expander = _Expander(reg, hint)
    disjuncts = []
    total = 0
    for d in c.disjuncts:
        expanded = expander.expand(d, {})
        total += expander.size(expanded)
        if total > expander.cap:
            raise ExpansionBlowup(total, expander.cap)
        disjuncts.append(expanded)
    return Clause(tuple(disjuncts))


def expand(st: PipelineState, arch: ArchTable = DEFAULT_ARCH) -> PipelineState:
    _enter(st, 'expand', arch)
    main = expand_clause(st.main, st.reg, st.hint)
    ledger = append_obligation(st.ledger, implication_clause(main, st.main), Origin.EXPAND, Strategy.SYNTACTIC,
                               location='expand')
    return _leave(st, 'expand', arch, main, ledger)


# ---------------------------------------------------------------------------
# type-extract

def _type_literal(reg, d) -> Optional[object]:
    """The recognizer application R(v) when ``d`` is ``(not R(v))``."""
    if not is_negation(d):
        return None
    inner = d.args[0]
    if (isinstance(inner, App) and len(inner.args) == 1 and isinstance(inner.args[0], Var)
            and reg.is_recognizer(inner.fn)):
        return inner
    return None


def type_extract(st: PipelineState, arch: ArchTable = DEFAULT_ARCH) -> PipelineState:
    """Collect the ``(not R(v))`` disjuncts into one leading type marker."""
    _enter(st, 'type-extract', arch)
    found = []
    rest = []
    for d in st.main.disjuncts:
        literal = _type_literal(st.reg, d)
        if literal is not None:
            found.append(literal)
        elif is_negation(d) and isinstance(d.args[0], TypeHypMarker) and d.args[0].tag == TYPE_TAG:
            found.extend(d.args[0].terms)
        else:
            rest.append(d)
    type_terms = tuple(dict.fromkeys(found))
    # the marker is always present, possibly empty
    main = Clause((App('NOT', (TypeHypMarker(type_terms, TYPE_TAG),)),) + tuple(rest))
    ledger = append_obligation(st.ledger, implication_clause(main, st.main), Origin.TYPE_EXTRACT,
                               Strategy.SYNTACTIC, location='type-extract')
    return _leave(st, 'type-extract', arch, main, ledger)


# ---------------------------------------------------------------------------
# uninterp-returns

def _call_sites(t, specs, out):
    for k in children(t):
        _call_sites(k, specs, out)
    if isinstance(t, App) and t.fn in specs:
        out.setdefault(t, None)


def _existing_return_terms(disjuncts):
    known = set()
    for d in disjuncts:
        if is_negation(d) and isinstance(d.args[0], TypeHypMarker) and d.args[0].tag == RETURN_TAG:
            known.update(d.args[0].terms)
    return known


def _general_claim(term, formals, spec: UninterpSpec) -> Clause:
    """``term`` over the formals, under the argument recognizers of ``spec``."""
    hyps = tuple(App(rec, (Var(f),)) for rec, f in zip(spec.arg_recognizers, formals))
    head = TypeHypMarker((term,), RETURN_TAG)
    return Clause((head, App('NOT', (TypeHypMarker(hyps, TYPE_TAG),))) if hyps else (head,))


def uninterp_returns(st: PipelineState, arch: ArchTable = DEFAULT_ARCH) -> PipelineState:
    """Assume the declared result type and constraints of every uninterpreted call.

    Each assumption becomes a ``:return`` marker in the goal and an
    obligation that the assumption follows from the type hypotheses.
    """
    _enter(st, 'uninterp-returns', arch)
    specs = uninterp_specs(st.hint, st.reg)
    sites: Dict[object, None] = {}
    for d in st.main.disjuncts:
        _call_sites(d, specs, sites)
    known = _existing_return_terms(st.main.disjuncts)
    head = st.main.disjuncts[:1] if _is_type_marker(st.main.disjuncts[0]) else ()
    tail = st.main.disjuncts[len(head):]
    markers = []
    ledger = st.ledger
    for call in sites:
        spec = specs[call.fn]
        formals = st.reg.function(call.fn).formals
        mapping = dict(zip(formals, call.args))
        generic = App(call.fn, tuple(Var(f) for f in formals))
        assumptions = [(App(spec.result_recognizer, (call,)), App(spec.result_recognizer, (generic,)),
                        Origin.UNINTERP_RETURN)]
        assumptions.extend((substitute(c, mapping), c, Origin.UNINTERP_CONSTRAINT) for c in spec.constraints)
        for term, general, origin in assumptions:
            if term in known:
                continue
            known.add(term)
            marker = TypeHypMarker((term,), RETURN_TAG)
            markers.append(App('NOT', (marker,)))
            ledger = append_obligation(ledger, Clause((marker,) + st.main.disjuncts), origin, Strategy.VIA_SMT,
                                       location=f'{origin.value} of {call.fn}', subject=call.fn,
                                       general=_general_claim(general, formals, spec))
    main = Clause(tuple(head) + tuple(markers) + tuple(tail))
    return _leave(st, 'uninterp-returns', arch, main, ledger)


def _is_type_marker(d) -> bool:
    return is_negation(d) and isinstance(d.args[0], TypeHypMarker) and d.args[0].tag == TYPE_TAG


# ---------------------------------------------------------------------------
# lowering step and the driver

def smt_lower(st: PipelineState, arch: ArchTable = DEFAULT_ARCH) -> PipelineState:
    """Translate the final clause; precondition obligations join the ledger."""
    _enter(st, LOWERING_PASS, arch)
    lowered = lower_goal(st.main, st.reg, st.hint)
    ledger = renumber(lowered.preconditions, st.ledger)
    log.info(f'[{LOWERING_PASS}] stage {PASS_STAGE[LOWERING_PASS]}: ledger size {len(ledger)}')
    return replace(st, ledger=ledger, stage=PASS_STAGE[LOWERING_PASS], lowered=lowered)


PASS_FUNCTIONS = {
    'add-hypo': add_hypo,
    'expand': expand,
    'type-extract': type_extract,
    'uninterp-returns': uninterp_returns,
    LOWERING_PASS: smt_lower,
}


def run_pipeline(goal: Clause, hints: HintSpec, reg, arch: ArchTable = DEFAULT_ARCH,
                 defaults: HintSpec = EMPTY_HINT, stop_before_lowering: bool = False) -> PipelineState:
    """Fold the passes of ``arch`` over ``goal``.

    The first failing pass aborts the run; the raised error carries the
    stage the state had reached in its ``stage`` attribute.
    """
    st = process_hint(goal, hints, defaults, reg)
    for pass_id in arch.passes:
        if stop_before_lowering and pass_id == LOWERING_PASS:
            break
        try:
            st = PASS_FUNCTIONS[pass_id](st, arch)
        except SmtPipeError as err:
            err.stage = st.stage
            err.pass_id = pass_id
            raise
    return st


def format_trace(st: PipelineState) -> str:
    blocks = []
    for n, entry in enumerate(st.trace, start=1):
        nxt = entry.successor or 'none'
        blocks.append(f';; stage {n}: {entry.stage} (pass {entry.pass_id}, next {nxt})\n{format_clause(entry.clause)}')
    return '\n\n'.join(blocks) + '\n'


def nested_hint(hint: HintSpec, reg, focus: Optional[str] = None) -> HintSpec:
    """Hint for discharging an obligation: no hypotheses, uninterpreted functions kept closed.

    ``focus`` is opened one level so its own return type can be checked.
    """
    expand_overrides = {name: ExpandOverride(uninterpreted=True) for name in uninterp_specs(hint, reg)}
    if focus is not None:
        expand_overrides[focus] = ExpandOverride(depth=1)
    return replace(hint, hypotheses=(), expand=expand_overrides)
