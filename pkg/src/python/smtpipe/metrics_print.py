# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import logging as log

from smtpipe.obligation_ledger import ledger_counts
from smtpipe.output_csv import timing_summary


def print_summary(result):
    verdict = result.verdict
    log.info(f'[{result.theorem.lower()}] verdict: {verdict.kind} ({verdict.reason})')
    if verdict.counterexample:
        log.info(f'[{result.theorem.lower()}] counterexample: {verdict.counterexample}')
    counts = ledger_counts(result.ledger)
    log.info(f'[{result.theorem.lower()}] obligations: ' + ', '.join(f'{k} {v}' for k, v in counts.items()))
    for ob in result.ledger:
        note = f', note: {ob.note}' if ob.note else ''
        log.info(f'  #{ob.id} {ob.origin.value} [{ob.strategy.value}] {ob.status.value} '
                 f'{ob.seconds:.3f}s {ob.location}{note}')
    if verdict.assumed_ids:
        log.warning(f'[{result.theorem.lower()}] result depends on assumed obligation(s) {list(verdict.assumed_ids)}')
    for origin, stats in timing_summary(result.ledger).items():
        log.debug(f'  {origin}: {stats["count"]} obligation(s), avg {stats["avg"]:.3f}s, '
                  f'median {stats["median"]:.3f}s, max {stats["max"]:.3f}s')
    timing = result.seconds
    if timing:
        log.info(f'[{result.theorem.lower()}] time: ' + ', '.join(f'{k} {v:.3f}s' for k, v in timing.items()))
