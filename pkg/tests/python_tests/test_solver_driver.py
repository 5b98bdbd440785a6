# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
from fractions import Fraction

import pytest

from common import goal_text, scripted_solver
from smtpipe.goal_file import parse_goal_text
from smtpipe.pipeline_passes import run_pipeline
from smtpipe.smt_backend import PREAMBLE, SmtScript
from smtpipe.solver_driver import (
    ModelParseError, Opaque, RootObj, Sat, SolverConfig, SolverConfigError, SolverError, Timeout, Unknown, Unsat,
    check_counterexample, outcome_name, parse_counterexample, parse_model, print_counterexample, run_solver,
)
from smtpipe.term_core import VAlist, VCons, VInt, VNilTyped, VRat, VSym

SCRIPT = SmtScript(PREAMBLE, ('(declare-fun x () Int)',), ('(assert (not (< x (+ x 1))))',))


def _lowered(name):
    gf = parse_goal_text(goal_text(name))
    theorem = gf.theorems[0]
    st = run_pipeline(theorem.clause, theorem.hints, gf.reg)
    return theorem, st.lowered.typed


@pytest.mark.precommit
def test_unsat():
    outcome = run_solver(SCRIPT, scripted_solver('unsat'))
    assert outcome == Unsat()
    assert outcome.seconds > 0


@pytest.mark.precommit
def test_sat_reads_the_model():
    model = '(model (define-fun x () Int 3))'
    outcome = run_solver(SCRIPT, scripted_solver('sat', model))
    assert outcome == Sat(model)
    assert outcome_name(outcome) == 'sat'


@pytest.mark.precommit
def test_unknown_carries_reason():
    assert run_solver(SCRIPT, scripted_solver('unknown')) == Unknown('incomplete quantifiers')


@pytest.mark.precommit
def test_timeout_kills_the_solver():
    outcome = run_solver(SCRIPT, scripted_solver('hang', timeout=1))
    assert isinstance(outcome, Timeout)
    assert outcome.limit == 1
    assert outcome.seconds < 30


@pytest.mark.precommit
def test_crash_is_a_solver_error():
    outcome = run_solver(SCRIPT, scripted_solver('crash'))
    assert isinstance(outcome, SolverError)
    assert outcome.exit_code == 3


@pytest.mark.precommit
def test_error_response():
    outcome = run_solver(SCRIPT, scripted_solver('(error "unknown constant y")'))
    assert isinstance(outcome, SolverError)
    assert outcome.reason.startswith('(error')


@pytest.mark.precommit
def test_missing_solver_binary():
    outcome = run_solver(SCRIPT, SolverConfig(command=('/nonexistent/smt-solver', '-in'), timeout=5))
    assert isinstance(outcome, SolverError)
    assert 'cannot run' in outcome.reason


@pytest.mark.precommit
def test_solver_config_validation():
    assert SolverConfig(command='z3 -in -T:5').command == ('z3', '-in', '-T:5')
    with pytest.raises(SolverConfigError):
        SolverConfig(command='')
    with pytest.raises(SolverConfigError):
        SolverConfig(timeout=0)
    with pytest.raises(SolverConfigError):
        SolverConfig(memory_cap_mb=0)


@pytest.mark.precommit
def test_root_obj_model_round_trips():
    theorem, typed = _lowered('root-obj.lisp')
    cex = parse_model('(model (define-fun x () Real (root-obj (+ (^ x 2) (- 2)) 1)))', typed)
    (var, value), = cex.bindings
    assert var == 'X'
    assert isinstance(value, RootObj)
    assert value.index == 1
    text = print_counterexample(cex, theorem.reg)
    assert text == '((X (CEX-ROOT-OBJ X (+ (^ X 2) (- 2)) 1)))'
    assert parse_counterexample(text, theorem.reg) == cex
    assert not cex.evaluable
    assert check_counterexample(cex, theorem.clause, theorem.reg).kind == 'NotEvaluable'


@pytest.mark.precommit
def test_real_model_values():
    _, typed = _lowered('poly.lisp')
    cex = parse_model('(model (define-fun y () Real 0.0)\n (define-fun x () Real (/ (- 1.0) 2.0)))', typed)
    assert cex.env() == {'X': VRat(Fraction(-1, 2)), 'Y': VInt(0)}


@pytest.mark.precommit
def test_weakened_poly_counterexample_is_confirmed():
    theorem, typed = _lowered('poly-weakened.lisp')
    cex = parse_model('(model (define-fun x () Real 0.0) (define-fun y () Real 0.0))', typed)
    assert check_counterexample(cex, theorem.clause, theorem.reg).kind == 'Confirmed'


@pytest.mark.precommit
def test_unconstrained_variables_get_defaults():
    _, typed = _lowered('poly.lisp')
    assert parse_model('(model)', typed).env() == {'X': VInt(0), 'Y': VInt(0)}


@pytest.mark.precommit
def test_list_model_and_spurious_check():
    theorem, typed = _lowered('deflist.lisp')
    model = '(model (define-fun l () integer_list (integer_list_cons 3 (integer_list_cons (- 1) integer_list_nil))))'
    cex = parse_model(model, typed)
    assert cex.env()['L'] == VCons(VInt(3), VCons(VInt(-1), VNilTyped('INTEGER-LIST')))
    assert check_counterexample(cex, theorem.clause, theorem.reg).kind == 'Spurious'


@pytest.mark.precommit
def test_alist_model():
    theorem, typed = _lowered('defalist.lisp')
    model = '''(model
      (define-fun k1 () sym (sym_mk 0))
      (define-fun k2 () sym (sym_mk 1))
      (define-fun v () Int 5)
      (define-fun al () (Array sym sym_int)
        (store ((as const (Array sym sym_int)) sym_int_nil) (sym_mk 0) (sym_int_cons (sym_mk 0) 5))))'''
    cex = parse_model(model, typed)
    env = cex.env()
    assert env['K1'] == VSym('SYM-0')
    assert env['K2'] == VSym('SYM-1')
    assert env['AL'] == VAlist(((VSym('SYM-0'), VInt(5)),))
    text = print_counterexample(cex, theorem.reg)
    assert text == "((K1 'SYM-0) (K2 'SYM-1) (V 5) (AL (ACONS 'SYM-0 5 NIL)))"
    assert parse_counterexample(text, theorem.reg) == cex
    assert check_counterexample(cex, theorem.clause, theorem.reg).kind == 'Spurious'


@pytest.mark.precommit
def test_function_valued_array_is_opaque():
    _, typed = _lowered('defalist.lisp')
    cex = parse_model('(model (define-fun al () (Array sym sym_int) (lambda ((x sym)) sym_int_nil)))', typed)
    assert isinstance(cex.env()['AL'], Opaque)
    assert not cex.evaluable


@pytest.mark.precommit
@pytest.mark.parametrize("model", [
    '(model (define-fun x () Real (',
    'sat',
    '(model (define-fun x () Real true))',
    '(model (define-fun x () Real (bogus 1)))',
])
def test_bad_models(model):
    _, typed = _lowered('poly.lisp')
    with pytest.raises(ModelParseError):
        parse_model(model, typed)


@pytest.mark.precommit
def test_non_integral_int_value():
    _, typed = _lowered('deflist.lisp')
    with pytest.raises(ModelParseError):
        parse_model('(model (define-fun l () integer_list (integer_list_cons (/ 1 2) integer_list_nil)))', typed)
