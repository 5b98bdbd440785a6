# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""Library entry points: prove, emit and trace one theorem."""
import logging as log
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional

from smtpipe.config_class import DEFAULT_DISCHARGE_DEPTH, DEFAULT_JOBS, DEFAULT_TIMEOUT, VERDICT_EXIT_CODES
from smtpipe.goal_file import GoalFileError
from smtpipe.obligation_ledger import (
    DischargeContext, LedgerError, Status, Verdict, discharge_all, final_verdict, ledger_counts,
)
from smtpipe.pipeline_passes import EMPTY_HINT, HintSpec, expand_clause, format_trace, merge_hints, nested_hint, run_pipeline
from smtpipe.solver_driver import (
    ModelParseError, Sat, SolverConfig, check_counterexample, parse_model, print_counterexample, run_solver,
)
from smtpipe.term_core import SmtPipeError


@dataclass
class RunResult:
    theorem: str
    verdict: Verdict
    ledger: tuple = ()
    outcome: Optional[object] = None
    counterexample: Optional[object] = None
    cex_check: Optional[object] = None
    script: Optional[object] = None
    seconds: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return VERDICT_EXIT_CODES[self.verdict.kind]


def _user_hint(theorem, run_args) -> HintSpec:
    """Theorem hints with the command line flags applied on top."""
    hint = theorem.hints
    if run_args.get('ints_as_reals'):
        hint = replace(hint, ints_as_reals=True)
    if run_args.get('timeout') is not None:
        hint = replace(hint, solver={**hint.solver, 'timeout': run_args['timeout']})
    return hint


def solver_config(run_args, hint: HintSpec) -> SolverConfig:
    timeout = hint.solver.get('timeout', DEFAULT_TIMEOUT)
    kwargs = {'timeout': float(timeout)}
    if run_args.get('solver_cmd'):
        kwargs['command'] = run_args['solver_cmd']
    if run_args.get('memory_cap_mb'):
        kwargs['memory_cap_mb'] = run_args['memory_cap_mb']
    if run_args.get('temp_file'):
        kwargs['use_temp_file'] = True
    return SolverConfig(**kwargs)


def make_discharge_context(reg, hint: HintSpec, cfg: SolverConfig, depth=DEFAULT_DISCHARGE_DEPTH,
                           jobs=DEFAULT_JOBS) -> DischargeContext:
    """Wire the expander, the pipeline and the solver into the ledger's discharge strategies."""
    return DischargeContext(
        reexpand=lambda clause, h: expand_clause(clause, reg, h),
        lower=lambda clause, h: run_pipeline(clause, h, reg),
        solve=lambda script: run_solver(script, cfg),
        nested_hint=lambda focus: nested_hint(hint, reg, focus),
        hint=hint,
        depth=depth,
        jobs=jobs,
    )


def _defaults(run_args) -> HintSpec:
    return run_args.get('defaults') or EMPTY_HINT


def effective_hint(theorem, run_args) -> HintSpec:
    """Precedence: command line flags, then the theorem's hints, then the config defaults."""
    return merge_hints(_user_hint(theorem, run_args), _defaults(run_args))


@contextmanager
def located(theorem):
    """Re-raise errors from the pipeline, solver or ledger at the theorem's place in its goal file."""
    try:
        yield
    except GoalFileError:
        raise
    except SmtPipeError as err:
        raise GoalFileError(theorem.path, theorem.line, f'(defthm {theorem.name.lower()} ...)', err) from err


def emit_theorem(theorem, run_args=None):
    """Lowered script of ``theorem``; byte-stable for a given goal and flags."""
    run_args = run_args or {}
    with located(theorem):
        st = run_pipeline(theorem.clause, _user_hint(theorem, run_args), theorem.reg, defaults=_defaults(run_args))
    return st.lowered.script


def trace_theorem(theorem, run_args=None) -> str:
    run_args = run_args or {}
    with located(theorem):
        st = run_pipeline(theorem.clause, _user_hint(theorem, run_args), theorem.reg, defaults=_defaults(run_args),
                          stop_before_lowering=True)
    return format_trace(st)


def prove_theorem(theorem, run_args=None) -> RunResult:
    """Run the pipeline, the solver and the ledger on ``theorem``.

    A sat answer is lifted to a counterexample and checked against the goal
    before it can refute anything. Errors come back as ``GoalFileError``
    pointing at the theorem.
    """
    with located(theorem):
        return _prove(theorem, run_args or {})


def _prove(theorem, run_args) -> RunResult:
    seconds = {}
    start = time.perf_counter()
    user = _user_hint(theorem, run_args)
    st = run_pipeline(theorem.clause, user, theorem.reg, defaults=_defaults(run_args))
    seconds['pipeline'] = time.perf_counter() - start
    cfg = solver_config(run_args, effective_hint(theorem, run_args))

    outcome = run_solver(st.lowered.script, cfg)
    seconds['solve'] = outcome.seconds
    cex = check = cex_text = None
    if isinstance(outcome, Sat):
        try:
            cex = parse_model(outcome.model, st.lowered.typed)
        except ModelParseError as err:
            log.warning(f'[prove] {err}')
        else:
            check = check_counterexample(cex, theorem.clause, theorem.reg)
            cex_text = print_counterexample(cex, theorem.reg)
            log.info(f'[prove] counterexample {check.kind}: {cex_text}')

    t0 = time.perf_counter()
    ctx = make_discharge_context(theorem.reg, st.hint, cfg, run_args.get('depth', DEFAULT_DISCHARGE_DEPTH),
                                 run_args.get('jobs', DEFAULT_JOBS))
    ledger = discharge_all(st.ledger, ctx, run_args.get('assume', ()))
    seconds['discharge'] = time.perf_counter() - t0
    for ob in ledger:
        if ob.status is Status.FAILED:
            log.warning(f'[ledger] obligation {ob.id} ({ob.origin.value}, {ob.location}) failed: {ob.reason}')

    verdict = final_verdict(ledger, outcome, check, cex_text)
    if verdict.kind == 'PROVED' and any(ob.status in (Status.PENDING, Status.FAILED) for ob in ledger):
        raise LedgerError('PROVED with an open obligation')
    seconds['total'] = time.perf_counter() - start
    counts = ledger_counts(ledger)
    log.info(f'[prove] {theorem.name.lower()}: {verdict.kind} ({verdict.reason}); obligations {counts}')
    return RunResult(theorem.name, verdict, ledger, outcome, cex, check, st.lowered.script, seconds)
