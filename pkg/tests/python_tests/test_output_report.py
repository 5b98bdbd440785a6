# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import json

import pandas as pd
import pytest

from smtpipe import output_csv, output_json
from smtpipe.config_class import REPORT_FIELDS
from smtpipe.obligation_ledger import Obligation, Origin, Status, Strategy, Verdict
from smtpipe.output_report import ReportParseError, format_report, parse_report, report_data
from smtpipe.prover import RunResult
from smtpipe.term_core import T, Clause


def _result(kind='PROVED', counterexample=None):
    ledger = (
        Obligation(1, Clause((T,)), Origin.ADD_HYPO, Strategy.USER_ASSUMED, Status.ASSUMED,
                   note='by "hand" = fine', location='hypothesis 1', reason='user assumed: by "hand" = fine'),
        Obligation(2, Clause((T,)), Origin.EXPAND, Strategy.SYNTACTIC, Status.DISCHARGED,
                   location='expand', reason='re-expansion agrees', seconds=0.0012345678),
        Obligation(3, Clause((T,)), Origin.SMT_PRECONDITION, Strategy.VIA_SMT, Status.DISCHARGED,
                   location='car (CAR L)', reason='unsat', seconds=0.25),
        Obligation(4, Clause((T,)), Origin.SMT_PRECONDITION, Strategy.VIA_SMT, Status.DISCHARGED,
                   location='cdr (CDR L)', reason='unsat', seconds=0.75),
    )
    verdict = Verdict(kind, 'unsat' if kind == 'PROVED' else 'counterexample confirmed by evaluation',
                      counterexample, (), (1,))
    return RunResult('INTEGER-LIST-HEAD-POSITIVE', verdict, ledger, seconds={'pipeline': 0.0123456, 'solver': 1.5})


@pytest.mark.precommit
@pytest.mark.parametrize("kind,counterexample", [
    ('PROVED', None),
    ('REFUTED', "((X 0) (S 'SYM-0) (L (CONS 1 NIL)))"),
])
def test_report_round_trip(kind, counterexample):
    data = report_data(_result(kind, counterexample))
    text = format_report(data)
    assert text.startswith('begin-report\nverdict kind=')
    assert text.endswith('end-report\n')
    assert parse_report('solver log\n' + text + 'trailing\n') == data
    assert data['timing'] == {'pipeline': 0.01235, 'solver': 1.5}
    assert data['obligations'][1]['seconds'] == 0.00123


@pytest.mark.precommit
@pytest.mark.parametrize("text,line", [
    ('no block here\n', 0),
    ('begin-report\nobligation id=1\nend-report\n', 3),
    ('begin-report\nverdict kind="PROVED"\nwhatever x=1\nend-report\n', 3),
    ('begin-report\nverdict kind=PROVED\nend-report\n', 2),
    ('begin-report\nverdict kind="PROVED" 7\nend-report\n', 2),
    ('begin-report\nverdict kind="PROVED"\nverdict kind="UNKNOWN"\nend-report\n', 3),
])
def test_malformed_reports(text, line):
    with pytest.raises(ReportParseError) as err:
        parse_report(text)
    assert err.value.line == line


@pytest.mark.precommit
def test_json_report(tmp_path):
    path = tmp_path / 'report.json'
    run_args = {'solver_cmd': 'z3 -in', 'timeout': 30, 'assume': [4, 1]}
    output_json.write_result(path, 'samples/goals/deflist.lisp', _result(), run_args)
    data = json.loads(path.read_text())
    assert data['metadata'] == {'goal_file': 'samples/goals/deflist.lisp', 'theorem': 'integer-list-head-positive',
                                'solver': 'z3 -in', 'timeout': 30, 'ints_as_reals': False,
                                'assumed_on_command_line': [1, 4]}
    assert data['verdict']['kind'] == 'PROVED'
    assert data['verdict']['assumed_ids'] == [1]
    assert [row['id'] for row in data['obligations']] == [1, 2, 3, 4]
    assert data['obligations'][0]['note'] == 'by "hand" = fine'


@pytest.mark.precommit
def test_csv_report(tmp_path):
    path = tmp_path / 'out' / 'report.csv'
    output_csv.write_result(path, _result())
    df = pd.read_csv(path, keep_default_na=False)
    assert list(df.columns) == ['theorem'] + list(REPORT_FIELDS) + ['verdict']
    assert list(df['status']) == ['assumed', 'discharged', 'discharged', 'discharged']
    assert set(df['verdict']) == {'PROVED'}
    assert df.loc[2, 'location'] == 'car (CAR L)'


@pytest.mark.precommit
def test_timing_summary():
    summary = output_csv.timing_summary(_result().ledger)
    assert set(summary) == {'add-hypo', 'expand', 'smt-precondition'}
    pre = summary['smt-precondition']
    assert pre['count'] == 2
    assert pre['avg'] == pytest.approx(0.5)
    assert pre['mini'] == pytest.approx(0.25)
    assert pre['max'] == pytest.approx(0.75)
