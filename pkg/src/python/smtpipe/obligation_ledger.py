# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""Auxiliary obligations produced by the passes, their discharge and the final verdict."""
import logging as log
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, Iterable, Optional, Tuple

from tqdm import tqdm

from smtpipe.config_class import DEFAULT_DISCHARGE_DEPTH
from smtpipe.term_core import (
    App, Clause, SmtPipeError, TypeHypMarker, TYPE_TAG, free_vars, clause_is_tautology, is_negation, print_clause,
    split_implication,
)


class Origin(str, Enum):
    ADD_HYPO = 'add-hypo'
    EXPAND = 'expand'
    TYPE_EXTRACT = 'type-extract'
    UNINTERP_RETURN = 'uninterp-return'
    UNINTERP_CONSTRAINT = 'uninterp-constraint'
    SMT_PRECONDITION = 'smt-precondition'


class Strategy(str, Enum):
    SYNTACTIC = 'syntactic'
    VIA_SMT = 'via-smt'
    USER_ASSUMED = 'user-assumed'


class Status(str, Enum):
    PENDING = 'pending'
    DISCHARGED = 'discharged'
    FAILED = 'failed'
    ASSUMED = 'assumed'


class LedgerError(SmtPipeError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f'== obligation ledger: {reason} ==')


@dataclass(frozen=True)
class Obligation:
    id: int
    clause: Clause
    origin: Origin
    strategy: Strategy
    status: Status = Status.PENDING
    note: Optional[str] = None
    location: str = ''
    subject: Optional[str] = None
    reason: str = ''
    seconds: float = 0.0
    # the claim over fresh arguments, for uninterpreted-function obligations
    general: Optional[Clause] = None


@dataclass(frozen=True)
class DischargeResult:
    status: Status
    reason: str = ''


Ledger = Tuple[Obligation, ...]


def append_obligation(ledger: Ledger, clause: Clause, origin: Origin, strategy: Strategy,
                      note: Optional[str] = None, location: str = '', subject: Optional[str] = None,
                      general: Optional[Clause] = None) -> Ledger:
    """Return ``ledger`` with one more pending obligation; ids stay dense and increasing."""
    if strategy is Strategy.USER_ASSUMED and not note:
        raise LedgerError(f'user-assumed obligation at {location or origin.value} needs a note')
    next_id = ledger[-1].id + 1 if ledger else 1
    return ledger + (Obligation(next_id, clause, origin, strategy, note=note, location=location, subject=subject,
                                general=general),)


def renumber(obligations: Iterable[Obligation], ledger: Ledger) -> Ledger:
    """Append already built obligations to ``ledger`` under fresh ids."""
    for ob in obligations:
        ledger = append_obligation(ledger, ob.clause, ob.origin, ob.strategy, ob.note, ob.location, ob.subject, ob.general)
    return ledger


def transition(ob: Obligation, status: Status, reason: str = '', seconds: float = 0.0) -> Obligation:
    if ob.status is not Status.PENDING:
        raise LedgerError(f'obligation {ob.id} is already {ob.status.value}')
    if status is Status.PENDING:
        return ob
    return replace(ob, status=status, reason=reason, seconds=ob.seconds + seconds)


@dataclass
class DischargeContext:
    """Everything the discharge strategies need besides the obligation itself.

    ``reexpand`` re-runs the expander on a clause under a hint, ``lower`` runs
    the whole pipeline on a clause under a hint built by ``nested_hint`` and
    ``solve`` sends a script to the solver.  ``hint`` is the hint the ledger's
    obligations were produced under.
    """
    reexpand: Callable
    lower: Callable
    solve: Callable
    nested_hint: Callable
    hint: object = None
    depth: int = DEFAULT_DISCHARGE_DEPTH
    jobs: int = 1
    memo: Dict[str, DischargeResult] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# syntactic discharge

def is_tautology(c: Clause) -> bool:
    return clause_is_tautology(c)


def _marker_terms(disjuncts, tag):
    terms = []
    rest = []
    for d in disjuncts:
        if is_negation(d) and isinstance(d.args[0], TypeHypMarker) and d.args[0].tag == tag:
            terms.extend(d.args[0].terms)
        else:
            rest.append(d)
    return terms, rest


def _type_extract_ok(ob: Obligation) -> bool:
    parts = split_implication(ob.clause)
    if parts is None:
        return False
    extracted, before = parts
    type_terms, remainder = _marker_terms(extracted.disjuncts, TYPE_TAG)
    old_terms, before_rest = _marker_terms(before.disjuncts, TYPE_TAG)
    before_set = set(before.disjuncts)
    for term in type_terms:
        if App('NOT', (term,)) not in before_set and term not in old_terms:
            return False
    covered = set(remainder) | {App('NOT', (term,)) for term in type_terms}
    return set(remainder) <= before_set and all(d in covered for d in before_rest)


def _expand_ok(ob: Obligation, ctx: DischargeContext) -> bool:
    parts = split_implication(ob.clause)
    if parts is None:
        return False
    expanded, original = parts
    return ctx.reexpand(original, ctx.hint) == expanded


def discharge_syntactic(ob: Obligation, ctx: DischargeContext) -> DischargeResult:
    """Check ``ob`` without the solver.

    Expansion and type-extraction obligations are decided here.  Anything
    else is discharged only when the clause is a tautology and stays pending
    otherwise.
    """
    if ob.origin is Origin.TYPE_EXTRACT:
        if _type_extract_ok(ob):
            return DischargeResult(Status.DISCHARGED, 'type hypotheses match')
        return DischargeResult(Status.FAILED, 'extracted type hypotheses do not match the clause')
    if ob.origin is Origin.EXPAND:
        if _expand_ok(ob, ctx):
            return DischargeResult(Status.DISCHARGED, 're-expansion agrees')
        return DischargeResult(Status.FAILED, 're-expansion differs from the recorded expansion')
    if is_tautology(ob.clause):
        return DischargeResult(Status.DISCHARGED, 'tautology')
    return DischargeResult(Status.PENDING)


# ---------------------------------------------------------------------------
# discharge through a nested pipeline run

def _sub_clause(ob: Obligation) -> Optional[Clause]:
    """The return marker with only the type hypotheses of its variables."""
    head = ob.clause.disjuncts[0]
    wanted = set(free_vars(head))
    hyps = []
    for d in ob.clause.disjuncts[1:]:
        if is_negation(d) and isinstance(d.args[0], TypeHypMarker) and d.args[0].tag == TYPE_TAG:
            kept = tuple(x for x in d.args[0].terms if set(free_vars(x)) & wanted)
            if kept:
                hyps.append(App('NOT', (TypeHypMarker(kept, TYPE_TAG),)))
    sub = Clause((head,) + tuple(hyps))
    return None if sub == ob.clause else sub


def _candidates(ob: Obligation):
    if ob.origin in (Origin.UNINTERP_RETURN, Origin.UNINTERP_CONSTRAINT):
        out = [ob.general] if ob.general is not None else []
        sub = _sub_clause(ob)
        if sub is not None:
            out.append(sub)
        return out + [ob.clause]
    return [ob.clause]


def _accepts_as_induction(nested: Obligation, focus: Optional[str]) -> bool:
    return (focus is not None and nested.subject == focus
            and nested.origin in (Origin.UNINTERP_RETURN, Origin.UNINTERP_CONSTRAINT))


def _discharge_nested(nested: Obligation, ctx: DischargeContext, focus, depth) -> DischargeResult:
    if _accepts_as_induction(nested, focus):
        return DischargeResult(Status.DISCHARGED, 'induction hypothesis')
    result = discharge_syntactic(nested, ctx)
    if result.status is not Status.PENDING:
        return result
    if nested.strategy is Strategy.USER_ASSUMED:
        return DischargeResult(Status.FAILED, 'nested obligation would need an assumption')
    if depth <= 0:
        return DischargeResult(Status.FAILED, 'nested discharge depth exhausted')
    return _via_smt(nested, ctx, depth - 1)


def _try_clause(clause: Clause, ob: Obligation, ctx: DischargeContext, depth) -> DischargeResult:
    focus = ob.subject if ob.origin in (Origin.UNINTERP_RETURN, Origin.UNINTERP_CONSTRAINT) else None
    try:
        hint = ctx.nested_hint(focus)
        state = ctx.lower(clause, hint)
    except SmtPipeError as err:
        return DischargeResult(Status.FAILED, f'not translatable: {err}')
    inner = replace(ctx, hint=state.hint)
    outcome = ctx.solve(state.lowered.script)
    verdict = type(outcome).__name__
    if verdict != 'Unsat':
        return DischargeResult(Status.FAILED, f'solver answered {verdict.lower()}')
    for nested in state.ledger:
        result = _discharge_nested(nested, inner, focus, depth)
        if result.status is not Status.DISCHARGED:
            return DischargeResult(Status.FAILED, f'nested {nested.origin.value} obligation: {result.reason}')
    return DischargeResult(Status.DISCHARGED, 'unsat')


def _via_smt(ob: Obligation, ctx: DischargeContext, depth) -> DischargeResult:
    key = print_clause(ob.clause) + '|' + (ob.subject or '')
    if key in ctx.memo:
        return ctx.memo[key]
    result = DischargeResult(Status.FAILED, 'no candidate clause')
    for clause in _candidates(ob):
        result = _try_clause(clause, ob, ctx, depth)
        if result.status is Status.DISCHARGED:
            break
    ctx.memo[key] = result
    return result


def discharge_via_smt(ob: Obligation, ctx: DischargeContext, backend=None, driver=None) -> DischargeResult:
    """Run the obligation through the pipeline and the solver; unsat discharges it.

    Obligations produced by the nested run are discharged recursively down to
    ``ctx.depth`` levels.  For a return or constraint obligation of ``f`` the
    claim over fresh arguments is tried first, then the call site with its
    type hypotheses, then the whole clause.  The nested run opens ``f`` once
    and accepts the obligations on the remaining recursive calls of ``f`` as
    the induction hypothesis.
    """
    if backend is not None or driver is not None:
        ctx = replace(ctx, lower=backend or ctx.lower, solve=driver or ctx.solve)
    return _via_smt(ob, ctx, ctx.depth)


# ---------------------------------------------------------------------------
# whole ledger

def _timed(fn, ob, ctx):
    start = time.perf_counter()
    result = fn(ob, ctx)
    return result, time.perf_counter() - start


def discharge_all(ledger: Ledger, ctx: DischargeContext, assume_ids: Iterable[int] = ()) -> Ledger:
    """Settle every pending obligation: assumptions, then syntactic checks, then the solver."""
    assume_ids = set(assume_ids)
    known = {ob.id for ob in ledger}
    unknown = sorted(assume_ids - known)
    if unknown:
        raise LedgerError(f'--assume names unknown obligation id(s) {unknown}')
    settled = {}
    for ob in ledger:
        if ob.id in assume_ids:
            settled[ob.id] = transition(replace(ob, strategy=Strategy.USER_ASSUMED, note=ob.note or 'assumed on the command line'),
                                        Status.ASSUMED, 'assumed on the command line')
            log.warning(f'[ledger] obligation {ob.id} ({ob.origin.value}) assumed without proof')
            continue
        result, seconds = _timed(discharge_syntactic, ob, ctx)
        if result.status is not Status.PENDING:
            settled[ob.id] = transition(ob, result.status, result.reason, seconds)
        elif ob.strategy is Strategy.USER_ASSUMED:
            settled[ob.id] = transition(ob, Status.ASSUMED, f'user assumed: {ob.note}')
            log.warning(f'[ledger] obligation {ob.id} assumed ({ob.note})')
    remaining = [ob for ob in ledger if ob.id not in settled]
    if remaining:
        def work(ob):
            return ob, _timed(lambda o, c: _via_smt(o, c, c.depth), ob, ctx)
        if ctx.jobs > 1:
            with ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
                results = list(tqdm(pool.map(work, remaining), total=len(remaining), desc='obligations', disable=None))
        else:
            results = [work(ob) for ob in tqdm(remaining, desc='obligations', disable=None)]
        for ob, (result, seconds) in results:
            settled[ob.id] = transition(replace(ob, strategy=Strategy.VIA_SMT), result.status, result.reason, seconds)
    out = tuple(settled[ob.id] for ob in ledger)
    for ob in out:
        log.debug(f'[ledger] #{ob.id} {ob.origin.value} {ob.status.value}: {ob.reason}')
    return out


# ---------------------------------------------------------------------------
# verdict

@dataclass(frozen=True)
class Verdict:
    kind: str
    reason: str = ''
    counterexample: Optional[str] = None
    failed_ids: tuple = ()
    assumed_ids: tuple = ()

    @property
    def name(self):
        return self.kind


def final_verdict(ledger: Ledger, main_outcome, cex_check=None, counterexample: Optional[str] = None) -> Verdict:
    """Combine the main solver outcome, the counterexample check and the ledger.

    PROVED needs an unsat main goal and every obligation discharged or
    assumed; assumptions are listed with the verdict.
    """
    failed = tuple(ob.id for ob in ledger if ob.status in (Status.FAILED, Status.PENDING))
    assumed = tuple(ob.id for ob in ledger if ob.status is Status.ASSUMED)
    outcome = type(main_outcome).__name__
    if outcome == 'Sat':
        kind = getattr(cex_check, 'kind', 'NotEvaluable')
        if kind == 'Confirmed':
            return Verdict('REFUTED', 'counterexample confirmed by evaluation', counterexample, failed, assumed)
        if kind == 'Spurious':
            return Verdict('UNKNOWN', f'spurious counterexample: {cex_check.reason}', counterexample, failed, assumed)
        return Verdict('UNKNOWN', 'counterexample could not be evaluated', counterexample, failed, assumed)
    if outcome == 'Unsat':
        if failed:
            return Verdict('FAILED-OBLIGATION', 'main goal unsat but obligations remain', None, failed, assumed)
        return Verdict('PROVED', 'unsat', None, (), assumed)
    reason = getattr(main_outcome, 'reason', '') or outcome.lower()
    return Verdict('UNKNOWN', reason, None, failed, assumed)


def ledger_counts(ledger: Ledger) -> Dict[str, int]:
    counts = {status.value: 0 for status in Status}
    for ob in ledger:
        counts[ob.status.value] += 1
    return counts
