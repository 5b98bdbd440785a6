# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import pytest

from common import GOALS_DIR
from smtpipe.goal_file import GoalFileError, load_goal_file, parse_goal_text, select_theorem
from smtpipe.pipeline_passes import EMPTY_HINT, ExpandOverride
from smtpipe.prover import emit_theorem
from smtpipe.term_core import parse_term
from smtpipe.type_registry import UninterpSpec

HINTED = '''; a theorem with every kind of hint
(deflist integer-list :elt-type integerp :true-listp t)
(defun sq (x) (* x x))
(defun len (l) (if (consp l) (+ 1 (len (cdr l))) 0))

(defthm len-hinted
  (implies (integer-list-p l) (<= 0 (len l)))
  :hints (:hypotheses (((< 0 (len l)) :note by-hand)
                       ((integerp (len l))))
          :expand ((len :depth 2) (sq :uninterpreted))
          :uninterp ((len (integer-list-p) integerp :constraints ((<= 0 (len l)))))
          :ints-as-reals t
          :timeout 5
          :expansion-cap 500))
'''


@pytest.mark.precommit
def test_hints_are_parsed():
    gf = parse_goal_text(HINTED)
    theorem = select_theorem(gf)
    assert theorem.name == 'LEN-HINTED'
    assert theorem.line == 6
    hints = theorem.hints
    first, second = hints.hypotheses
    assert first.term == parse_term('(< 0 (len l))', gf.reg)
    assert first.note == 'by-hand'
    assert second.note is None
    assert dict(hints.expand) == {'LEN': ExpandOverride(depth=2), 'SQ': ExpandOverride(uninterpreted=True)}
    assert hints.uninterp['LEN'] == UninterpSpec(('INTEGER-LIST-P',), 'INTEGERP',
                                                 (parse_term('(<= 0 (len l))', gf.reg),))
    assert hints.ints_as_reals is True
    assert dict(hints.solver) == {'timeout': 5}
    assert hints.expansion_cap == 500


@pytest.mark.precommit
def test_theorem_without_hints():
    theorem = select_theorem(parse_goal_text('(defthm trivial t)'))
    assert theorem.hints == EMPTY_HINT
    assert theorem.line == 1


@pytest.mark.precommit
@pytest.mark.parametrize("text,line", [
    ('(defthm a t)\n(defthm a nil)', 2),
    ('(defun f (x) x)\n\n(frob 1)', 3),
    ('(deflist l :true-listp t)', 1),
    ('(defthm a t :hints (:bogus 1))', 1),
    ('(defthm a t :hints (:timeout 0))', 1),
    ('(defthm a t :hints (:expand ((f :depth -1))))', 1),
    ('(defthm a t :hints (:uninterp ((g (integerp) integerp))))', 1),
    ('(defthm a t :hints (:hypotheses (((< 0 x) :note))))', 1),
    ('; header\n(defstub f (x) => * extra)', 2),
    ('(defthm a t)\n(defthm b (< x', 2),
    ('(defun f (x) (+ x y))', 1),
])
def test_errors_carry_the_line(text, line):
    with pytest.raises(GoalFileError) as err:
        parse_goal_text(text, 'goal.lisp')
    assert err.value.line == line
    assert str(err.value).startswith(f'== goal.lisp:{line}: ')


@pytest.mark.precommit
def test_stub_and_type_group():
    gf = parse_goal_text('(defstub f (x) => *)\n'
                         '(deftypes shapes (deflist points :elt-type point-p) (defprod point ((x integerp))))\n')
    assert gf.reg.function('F').body is None
    assert gf.reg.is_recognizer('POINTS-P')
    assert gf.reg.is_recognizer('POINT-P')
    assert gf.theorems == ()


@pytest.mark.precommit
def test_realp_alias_form():
    goal = '(defthm r (implies (realp x) (<= 0 (* x x))))\n'
    with pytest.raises(GoalFileError):
        parse_goal_text(goal)
    gf = parse_goal_text('(set-realp-alias t)\n' + goal)
    assert gf.reg.realp_alias
    assert gf.theorems[0].line == 2
    assert '(declare-fun x () Real)' in emit_theorem(gf.theorems[0]).text


@pytest.mark.precommit
def test_select_theorem():
    gf = parse_goal_text('(defthm a t)\n(defthm b t)')
    assert gf.theorem_names() == ('A', 'B')
    assert select_theorem(gf, 'b').name == 'B'
    with pytest.raises(GoalFileError):
        select_theorem(gf)
    with pytest.raises(GoalFileError):
        select_theorem(gf, 'zz')
    with pytest.raises(GoalFileError) as err:
        select_theorem(parse_goal_text('(defun f (x) x)'))
    assert 'none' in str(err.value)


@pytest.mark.precommit
def test_missing_file(tmp_path):
    with pytest.raises(GoalFileError) as err:
        load_goal_file(tmp_path / 'absent.lisp')
    assert err.value.line is None
    assert 'cannot read' in str(err.value)


@pytest.mark.precommit
@pytest.mark.parametrize("path", sorted(GOALS_DIR.glob('*.lisp')), ids=lambda p: p.name)
def test_sample_goals_load(path):
    gf = load_goal_file(path)
    assert gf.path == str(path)
    assert len(gf.theorems) == 1
