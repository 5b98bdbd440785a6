# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import itertools

import pytest

from common import goal_text, skip_without_solver
from smtpipe.goal_file import GoalFileError, parse_goal_text
from smtpipe.obligation_ledger import Origin, Status
from smtpipe.prover import prove_theorem
from smtpipe.smt_backend import UnsupportedOp
from smtpipe.solver_driver import RootObj, parse_counterexample
from smtpipe.term_core import V_NIL, VCons, VInt, VSym, eval_term, parse_term

RINGOSC_SECONDS = 120

ALIST_KEYS = ('a', 'b', 'c')
ALIST_VALUES = (0, 1, 2)
ALIST_MAX_LEN = 3
ALIST_DECL = '(defalist sym-int-alist :key-type symbolp :val-type integerp)\n'
EMPTY_ALIST = '(as nil sym-int-alist)'


@pytest.fixture
def run_args():
    skip_without_solver()
    return {'solver_cmd': pytest.solver_cmd, 'timeout': 60}


def _prove(text, run_args):
    theorem = parse_goal_text(text).theorems[0]
    return theorem, prove_theorem(theorem, run_args)


@pytest.mark.precommit
@pytest.mark.solver
@pytest.mark.parametrize("goal_name", ['trivial.lisp', 'poly.lisp', 'deflist.lisp', 'defoption.lisp',
                                       'defalist.lisp', 'len.lisp'])
def test_proved(goal_name, run_args):
    _, result = _prove(goal_text(goal_name), run_args)
    assert result.verdict.kind == 'PROVED', result.verdict.reason
    assert result.exit_code == 0
    assert all(ob.status is Status.DISCHARGED for ob in result.ledger)


@pytest.mark.precommit
@pytest.mark.solver
def test_deflist_preconditions_are_discharged(run_args):
    _, result = _prove(goal_text('deflist.lisp'), run_args)
    pre = [ob for ob in result.ledger if ob.origin is Origin.SMT_PRECONDITION]
    assert len(pre) == 7
    assert all(ob.status is Status.DISCHARGED for ob in pre)


@pytest.mark.precommit
@pytest.mark.solver
def test_weakened_poly_is_refuted(run_args):
    _, result = _prove(goal_text('poly-weakened.lisp'), run_args)
    assert result.verdict.kind == 'REFUTED'
    assert result.cex_check.kind == 'Confirmed'
    assert result.exit_code == 1
    assert '(X ' in result.verdict.counterexample


@pytest.mark.precommit
@pytest.mark.solver
def test_ringosc_within_time_limit(run_args):
    _, result = _prove(goal_text('ringosc.lisp'), run_args)
    assert result.verdict.kind == 'PROVED', result.verdict.reason
    assert result.seconds['total'] < RINGOSC_SECONDS


@pytest.mark.precommit
@pytest.mark.solver
def test_root_obj_is_unknown(run_args):
    theorem, result = _prove(goal_text('root-obj.lisp'), run_args)
    assert result.verdict.kind == 'UNKNOWN'
    assert result.exit_code == 2
    text = result.verdict.counterexample
    assert 'CEX-ROOT-OBJ' in text
    assert isinstance(result.counterexample.env()['X'], RootObj)
    assert parse_counterexample(text, theorem.reg) == result.counterexample


@pytest.mark.precommit
@pytest.mark.solver
@pytest.mark.parametrize("dropped", ['(consp (cdr l))', '(consp l)'])
def test_dropped_guard_fails_an_obligation(dropped, run_args):
    text = goal_text('deflist.lisp').replace(dropped, '', 1)
    assert text != goal_text('deflist.lisp')
    _, result = _prove(text, run_args)
    assert result.verdict.kind == 'FAILED-OBLIGATION'
    assert result.exit_code == 3
    failed = [ob for ob in result.ledger if ob.id in result.verdict.failed_ids]
    assert failed and all(ob.origin is Origin.SMT_PRECONDITION for ob in failed)


def _alist_term(pairs):
    text = EMPTY_ALIST
    for key, value in reversed(pairs):
        text = f"(acons '{key} {value} {text})"
    return text


def _lookup(pairs, key):
    for k, v in pairs:
        if k == key:
            return v
    return None


def _alist_claims(reg, length):
    """One conjunct per alist of ``length`` and key, checked against the evaluator first."""
    claims = []
    for pairs in itertools.product(itertools.product(ALIST_KEYS, ALIST_VALUES), repeat=length):
        al = _alist_term(pairs)
        for key in ALIST_KEYS:
            lookup = f"(assoc-equal '{key} {al})"
            expected = _lookup(pairs, key)
            found = eval_term(parse_term(lookup, reg), {}, reg)
            if expected is None:
                assert found == V_NIL
                claims.append(f'(not {lookup})')
            else:
                assert found == VCons(VSym(key.upper()), VInt(expected))
                claims.append(f"(equal {lookup} (assoc-equal '{key} (acons '{key} {expected} {EMPTY_ALIST})))")
    return claims


@pytest.mark.precommit
@pytest.mark.solver
@pytest.mark.parametrize("length", range(ALIST_MAX_LEN + 1))
def test_alist_encoding_matches_evaluator(length, run_args):
    reg = parse_goal_text(ALIST_DECL).reg
    claims = _alist_claims(reg, length)
    assert len(claims) == len(ALIST_KEYS) * (len(ALIST_KEYS) * len(ALIST_VALUES)) ** length
    text = ALIST_DECL + f'(defthm alist-lookups-{length} (and {" ".join(claims)}))\n'
    _, result = _prove(text, run_args)
    assert result.verdict.kind == 'PROVED', result.verdict.reason


@pytest.mark.precommit
@pytest.mark.solver
def test_alist_encoding_catches_a_wrong_value(run_args):
    text = ALIST_DECL + ("(defthm wrong (implies (integerp v) (equal (assoc-equal 'a (acons 'a v (as nil sym-int-alist))) "
                         "(assoc-equal 'a (acons 'a 1 (as nil sym-int-alist))))))\n")
    _, result = _prove(text, run_args)
    assert result.verdict.kind == 'REFUTED'
    assert result.cex_check.kind == 'Confirmed'


@pytest.mark.precommit
def test_shadowed_acons_equality_is_never_proved():
    # equal as alists but not as lists: one array value would stand for both
    goal = "(equal (acons 'a 1 (acons 'a 2 al)) (acons 'a 1 al))"
    reg = parse_goal_text(ALIST_DECL).reg
    assert eval_term(parse_term(goal, reg), {'AL': V_NIL}, reg) == V_NIL
    theorem = parse_goal_text(ALIST_DECL + f'(defthm shadowed (implies (sym-int-alist-p al) {goal}))\n').theorems[0]
    with pytest.raises(GoalFileError) as err:
        prove_theorem(theorem, {'solver_cmd': 'no-solver-needed'})
    assert isinstance(err.value.__cause__, UnsupportedOp)
    assert err.value.line == 2
