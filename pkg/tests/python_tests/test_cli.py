# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import json
import os
import shlex
import subprocess
import sys

import pytest

from common import GOALS_DIR, SCRIPTED_SOLVER, SRC_DIR, goal_text, scripted_solver_cmd
from smtpipe import cli
from smtpipe.config_class import DEFAULT_TIMEOUT
from smtpipe.goal_file import parse_goal_text
from smtpipe.output_report import parse_report
from smtpipe.prover import effective_hint, emit_theorem, solver_config

EMIT_RUNS = 10


def run_cli(*args, hash_seed='0'):
    env = dict(os.environ)
    env['PYTHONPATH'] = str(SRC_DIR) + os.pathsep + env.get('PYTHONPATH', '')
    env['PYTHONHASHSEED'] = hash_seed
    env.pop('LOGLEVEL', None)
    return subprocess.run([sys.executable, '-m', 'smtpipe.cli', *map(str, args)], env=env,
                          capture_output=True, text=True, timeout=300)


@pytest.mark.precommit
@pytest.mark.parametrize("goal_name", sorted(p.name for p in GOALS_DIR.glob('*.lisp')))
def test_emit_is_byte_identical(goal_name):
    outputs = set()
    for i in range(EMIT_RUNS):
        res = run_cli('emit', GOALS_DIR / goal_name, hash_seed=str(i))
        assert res.returncode == 0, res.stderr
        outputs.add(res.stdout)
    assert len(outputs) == 1
    expected = emit_theorem(parse_goal_text(goal_text(goal_name)).theorems[0]).text
    assert outputs.pop() == expected


@pytest.mark.precommit
def test_emit_to_file(tmp_path):
    out = tmp_path / 'deflist.smt2'
    res = run_cli('emit', GOALS_DIR / 'deflist.lisp', '-o', out)
    assert res.returncode == 0, res.stderr
    assert res.stdout == ''
    assert out.read_text() == emit_theorem(parse_goal_text(goal_text('deflist.lisp')).theorems[0]).text


@pytest.mark.precommit
def test_trace_shows_every_stage():
    res = run_cli('trace', GOALS_DIR / 'len.lisp')
    assert res.returncode == 0, res.stderr
    assert res.stdout.startswith(';; stage 1: ')
    assert '(LEN (CDR L))' in res.stdout


@pytest.mark.precommit
@pytest.mark.parametrize("args", [
    ('frobnicate', GOALS_DIR / 'poly.lisp'),
    ('prove', GOALS_DIR / 'absent.lisp'),
    ('emit', GOALS_DIR / 'poly.lisp', '--theorem', 'nope'),
    ('prove', GOALS_DIR / 'poly.lisp', '--timeout', '-1'),
    ('prove', GOALS_DIR / 'poly.lisp', '--assume', '0'),
    ('prove', GOALS_DIR / 'trivial.lisp', '--assume', '99', '--solver-cmd', scripted_solver_cmd('unsat')),
])
def test_usage_errors(args):
    assert run_cli(*args).returncode == 4


@pytest.mark.precommit
def test_bad_config(tmp_path):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'timeout': 5, 'colour': 'blue'}))
    assert run_cli('emit', GOALS_DIR / 'poly.lisp', '-lc', config).returncode == 4
    config.write_text('{not json')
    assert run_cli('emit', GOALS_DIR / 'poly.lisp', '-lc', config).returncode == 4


@pytest.mark.precommit
def test_config_defaults_apply(tmp_path):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'ints_as_reals': True}))
    goal = tmp_path / 'sq.lisp'
    goal.write_text('(defthm sq-nonneg (implies (integerp x) (<= 0 (* x x))))\n')
    res = run_cli('emit', goal, '-lc', config)
    assert res.returncode == 0, res.stderr
    assert '(declare-fun x () Real)' in res.stdout


@pytest.mark.precommit
def test_prove_with_reports(tmp_path):
    csv_path = tmp_path / 'report.csv'
    json_path = tmp_path / 'report.json'
    res = run_cli('prove', GOALS_DIR / 'trivial.lisp', '--solver-cmd', scripted_solver_cmd('unsat'),
                  '-r', csv_path, '-rj', json_path)
    assert res.returncode == 0, res.stdout + res.stderr
    assert res.stdout.rstrip().endswith('PROVED')
    data = parse_report(res.stdout)
    assert data['verdict']['kind'] == 'PROVED'
    assert data['verdict']['theorem'] == 'trivial'
    assert csv_path.exists()
    assert json.loads(json_path.read_text())['verdict']['kind'] == 'PROVED'


@pytest.mark.precommit
def test_prove_refuted_by_confirmed_model():
    model = '(model (define-fun x () Real 0.0) (define-fun y () Real 0.0))'
    solver = shlex.join([sys.executable, str(SCRIPTED_SOLVER), 'sat', model])
    res = run_cli('prove', GOALS_DIR / 'poly-weakened.lisp', '--solver-cmd', solver)
    assert res.returncode == 1, res.stdout + res.stderr
    verdict = parse_report(res.stdout)['verdict']
    assert verdict['kind'] == 'REFUTED'
    assert '(X 0)' in verdict['counterexample']


@pytest.mark.precommit
def test_prove_spurious_model_is_unknown():
    model = '(model (define-fun x () Real 0.0) (define-fun y () Real 0.0))'
    solver = shlex.join([sys.executable, str(SCRIPTED_SOLVER), 'sat', model])
    res = run_cli('prove', GOALS_DIR / 'poly.lisp', '--solver-cmd', solver)
    assert res.returncode == 2, res.stdout + res.stderr
    assert parse_report(res.stdout)['verdict']['reason'].startswith('spurious counterexample')


@pytest.mark.precommit
def test_prove_unknown_and_emit_only():
    res = run_cli('prove', GOALS_DIR / 'poly.lisp', '--solver-cmd', scripted_solver_cmd('unknown'))
    assert res.returncode == 2
    assert parse_report(res.stdout)['verdict']['reason'] == 'incomplete quantifiers'
    res = run_cli('prove', GOALS_DIR / 'poly.lisp', '--emit-only')
    assert res.returncode == 0
    assert res.stdout.endswith('(check-sat)\n(get-model)\n')


@pytest.mark.precommit
@pytest.mark.parametrize("command", ['emit', 'prove'])
def test_translation_error_names_file_and_line(tmp_path, command):
    goal = tmp_path / 'poly.lisp'
    goal.write_text('; integer compared with a boolean\n'
                    '(defthm s (implies (and (integerp x) (booleanp b)) (equal x b)))\n')
    res = run_cli(command, goal, '--solver-cmd', scripted_solver_cmd('unsat'))
    assert res.returncode == 4
    assert 'poly.lisp:2' in res.stdout
    assert '(defthm s ...)' in res.stdout


@pytest.mark.precommit
@pytest.mark.parametrize("flags,hinted,expected", [
    ((), True, 5),
    ((), False, 20),
    (('--timeout', '7'), True, 7),
    (('--timeout', '7'), False, 7),
])
def test_timeout_precedence(tmp_path, flags, hinted, expected):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'timeout': 20}))
    hints = ' :hints (:timeout 5)' if hinted else ''
    theorem = parse_goal_text(f'(defthm a (implies (integerp x) (<= x x)){hints})').theorems[0]
    run_args = cli.analyze_args(cli.get_argprser(['prove', 'a.lisp', '-lc', str(config), *flags]))
    assert solver_config(run_args, effective_hint(theorem, run_args)).timeout == expected


@pytest.mark.precommit
def test_timeout_default_without_config():
    theorem = parse_goal_text('(defthm a t)').theorems[0]
    run_args = cli.analyze_args(cli.get_argprser(['prove', 'a.lisp']))
    assert solver_config(run_args, effective_hint(theorem, run_args)).timeout == DEFAULT_TIMEOUT
