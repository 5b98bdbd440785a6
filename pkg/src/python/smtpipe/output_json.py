# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import json


def obligation_rows(ledger):
    rows = []
    for ob in ledger:
        rows.append({
            'id': ob.id,
            'origin': ob.origin.value,
            'strategy': ob.strategy.value,
            'status': ob.status.value,
            'seconds': round(ob.seconds, 5),
            'location': ob.location,
            'note': ob.note or '',
            'reason': ob.reason,
        })
    return rows


def write_result(report_file, path, result, run_args):
    metadata = {'goal_file': str(path), 'theorem': result.theorem.lower(), 'solver': run_args.get('solver_cmd') or '',
                'timeout': run_args.get('timeout'), 'ints_as_reals': bool(run_args.get('ints_as_reals')),
                'assumed_on_command_line': sorted(run_args.get('assume', ()))}
    verdict = result.verdict
    output_result = {
        'metadata': metadata,
        'verdict': {
            'kind': verdict.kind,
            'reason': verdict.reason,
            'counterexample': verdict.counterexample,
            'failed_ids': list(verdict.failed_ids),
            'assumed_ids': list(verdict.assumed_ids),
        },
        'timing': {k: round(v, 5) for k, v in result.seconds.items()},
        'obligations': obligation_rows(result.ledger),
    }

    with open(report_file, 'w') as outfile:
        json.dump(output_result, outfile, indent=2)
