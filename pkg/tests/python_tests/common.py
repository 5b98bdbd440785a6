# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0

import shlex
import shutil
import sys
from pathlib import Path

import numpy as np
import pytest

from smtpipe.goal_file import parse_goal_text
from smtpipe.solver_driver import SolverConfig
from smtpipe.term_core import VBool, VCons, VInt, VNilTyped, VSym

ROOT = Path(__file__).resolve().parents[2]
GOALS_DIR = ROOT / 'samples' / 'goals'
SRC_DIR = ROOT / 'src' / 'python'
SCRIPTED_SOLVER = Path(__file__).resolve().parent / 'data' / 'scripted_solver.py'

SYMBOLS = ('A', 'B', 'C', 'D')
INT_RANGE = (-8, 8)
MAX_LIST_LEN = 4
TRIALS = 1000

# definitions over the carriers the property suites draw from
CARRIER_WORLD = '''
(deflist int-list :elt-type integerp :true-listp t)
(defun sq (x) (* x x))
(defun pick (c x y) (if c x y))
(defun sum-list (l) (if (consp l) (+ (car l) (sum-list (cdr l))) 0))
'''

CARRIER_VARS = {'X': 'integerp', 'Y': 'integerp', 'B': 'booleanp', 'S': 'symbolp', 'L': 'int-list-p'}


def carrier_registry():
    return parse_goal_text(CARRIER_WORLD).reg


def solver_config(timeout=30):
    return SolverConfig(command=pytest.solver_cmd, timeout=timeout)


def solver_available():
    cmd = shlex.split(pytest.solver_cmd)
    return bool(cmd) and shutil.which(cmd[0]) is not None


def skip_without_solver():
    if not solver_available():
        pytest.skip(f'no solver for "{pytest.solver_cmd}" on PATH')


def scripted_solver(answer, model=None, timeout=10):
    command = [sys.executable, str(SCRIPTED_SOLVER), answer]
    if model is not None:
        command.append(model)
    return SolverConfig(command=tuple(command), timeout=timeout, grace=1)


def scripted_solver_cmd(answer):
    return shlex.join([sys.executable, str(SCRIPTED_SOLVER), answer])


def goal_text(name):
    return (GOALS_DIR / name).read_text()


# ---------------------------------------------------------------------------
# random carriers

def random_int(rng):
    return VInt(int(rng.integers(INT_RANGE[0], INT_RANGE[1] + 1)))


def random_bool(rng):
    return VBool(bool(rng.integers(0, 2)))


def random_sym(rng):
    return VSym(SYMBOLS[int(rng.integers(0, len(SYMBOLS)))])


def random_int_list(rng):
    value = VNilTyped('INT-LIST')
    for _ in range(int(rng.integers(0, MAX_LIST_LEN + 1))):
        value = VCons(random_int(rng), value)
    return value


def random_env(rng):
    return {'X': random_int(rng), 'Y': random_int(rng), 'B': random_bool(rng), 'S': random_sym(rng),
            'L': random_int_list(rng)}


def random_int_term(rng, depth):
    leaves = ['x', 'y', str(int(rng.integers(INT_RANGE[0], INT_RANGE[1] + 1))), '(car l)']
    if depth <= 0:
        return leaves[int(rng.integers(0, len(leaves)))]
    choice = int(rng.integers(0, 8))
    a = random_int_term(rng, depth - 1)
    b = random_int_term(rng, depth - 1)
    if choice == 0:
        return f'(+ {a} {b})'
    if choice == 1:
        return f'(* {a} {b})'
    if choice == 2:
        return f'(- {a} {b})'
    if choice == 3:
        return f'(sq {a})'
    if choice == 4:
        return f'(pick {random_bool_term(rng, depth - 1)} {a} {b})'
    if choice == 5:
        return '(sum-list l)'
    return leaves[int(rng.integers(0, len(leaves)))]


def random_bool_term(rng, depth):
    leaves = ['b', "(equal s 'a)", '(consp l)', f"(equal s '{SYMBOLS[int(rng.integers(0, len(SYMBOLS)))].lower()})"]
    if depth <= 0:
        return leaves[int(rng.integers(0, len(leaves)))]
    choice = int(rng.integers(0, 7))
    if choice == 0:
        return f'(< {random_int_term(rng, depth - 1)} {random_int_term(rng, depth - 1)})'
    if choice == 1:
        return f'(equal {random_int_term(rng, depth - 1)} {random_int_term(rng, depth - 1)})'
    if choice == 2:
        return f'(not {random_bool_term(rng, depth - 1)})'
    if choice == 3:
        return f'(and {random_bool_term(rng, depth - 1)} {random_bool_term(rng, depth - 1)})'
    if choice == 4:
        return f'(or {random_bool_term(rng, depth - 1)} {random_bool_term(rng, depth - 1)})'
    return leaves[int(rng.integers(0, len(leaves)))]


def random_goal_text(rng, depth=2):
    """A theorem body with type hypotheses for every carrier variable."""
    types = ' '.join(f'({rec} {var.lower()})' for var, rec in CARRIER_VARS.items())
    return f'(implies (and {types} {random_bool_term(rng, depth)}) {random_bool_term(rng, depth)})'


SYMBOL_CHARS = 'abcxyz0129-*?<>/^!=.'


def random_symbol_name(rng, max_len=8):
    """A Lisp symbol name, digits and punctuation included."""
    n = int(rng.integers(1, max_len + 1))
    return ''.join(SYMBOL_CHARS[int(i)] for i in rng.integers(0, len(SYMBOL_CHARS), size=n))


def make_rng(seed):
    return np.random.default_rng(seed)

