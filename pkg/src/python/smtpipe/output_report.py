# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""Structured text run report; the grammar is documented in docs/REPORT.md."""
import json
import re

from smtpipe.config_class import REPORT_FIELDS
from smtpipe.output_json import obligation_rows
from smtpipe.term_core import SmtPipeError

BEGIN = 'begin-report'
END = 'end-report'
RECORDS = ('verdict', 'obligation', 'timing')

_KEY_RE = re.compile(r'\s*([a-z_]+)=')
_decoder = json.JSONDecoder()


class ReportParseError(SmtPipeError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f'== report line {line}: {reason} ==')


def report_data(result) -> dict:
    verdict = result.verdict
    return {
        'verdict': {
            'kind': verdict.kind,
            'theorem': result.theorem.lower(),
            'reason': verdict.reason,
            'counterexample': verdict.counterexample,
            'failed': list(verdict.failed_ids),
            'assumed': list(verdict.assumed_ids),
        },
        'obligations': obligation_rows(result.ledger),
        'timing': {k: round(v, 5) for k, v in result.seconds.items()},
    }


def _fields(record, mapping, keys):
    return record + ''.join(f' {k}={json.dumps(mapping[k], sort_keys=True)}' for k in keys)


def format_report(data: dict) -> str:
    lines = [BEGIN, _fields('verdict', data['verdict'], data['verdict'].keys())]
    for row in data['obligations']:
        lines.append(_fields('obligation', row, REPORT_FIELDS))
    lines.append(_fields('timing', data['timing'], data['timing'].keys()))
    lines.append(END)
    return '\n'.join(lines) + '\n'


def _parse_line(line, n):
    record, _, rest = line.partition(' ')
    if record not in RECORDS:
        raise ReportParseError(n, f'unknown record {record!r}')
    values = {}
    pos = 0
    while pos < len(rest):
        if not rest[pos:].strip():
            break
        m = _KEY_RE.match(rest, pos)
        if m is None:
            raise ReportParseError(n, f'expected key=value at column {pos}')
        try:
            value, pos = _decoder.raw_decode(rest, m.end())
        except json.JSONDecodeError as err:
            raise ReportParseError(n, f'bad value for {m.group(1)}: {err.msg}') from err
        values[m.group(1)] = value
    return record, values


def parse_report(text: str) -> dict:
    """Read the block between ``begin-report`` and ``end-report`` back into report data."""
    lines = text.splitlines()
    try:
        start = lines.index(BEGIN)
        end = lines.index(END, start)
    except ValueError as err:
        raise ReportParseError(0, 'no begin-report/end-report block') from err
    data = {'verdict': None, 'obligations': [], 'timing': {}}
    for n in range(start + 1, end):
        record, values = _parse_line(lines[n], n + 1)
        if record == 'obligation':
            data['obligations'].append(values)
        elif data[record]:
            raise ReportParseError(n + 1, f'duplicate {record} record')
        else:
            data[record] = values
    if data['verdict'] is None:
        raise ReportParseError(end + 1, 'missing verdict record')
    return data
