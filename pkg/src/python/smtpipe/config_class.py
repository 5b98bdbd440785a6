# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import os

DEFAULT_SOLVER_CMD = os.environ.get('SMTPIPE_SOLVER_CMD', 'z3 -in')
DEFAULT_TIMEOUT = 10
DEFAULT_GRACE_PERIOD = 2
DEFAULT_EXPANSION_CAP = 100000
DEFAULT_RECURSIVE_DEPTH = 1
DEFAULT_DISCHARGE_DEPTH = 4
DEFAULT_JOBS = 1

# minimum solver versions known to print root-obj models and accept (set-logic ALL)
SOLVER_MIN_VERSIONS = {
    'z3': '4.8.0',
    'cvc5': '1.0.0',
}

INITIAL_STAGE = 'processed'

# pass identifier -> stage reached after the pass
PASS_STAGE = {
    'add-hypo': 'hypo-added',
    'expand': 'expanded',
    'type-extract': 'type-extracted',
    'uninterp-returns': 'uninterp-done',
    'smt-lower': 'lowered',
}

LOWERING_PASS = 'smt-lower'

SMT_ARCHITECTURE = ('add-hypo', 'expand', 'type-extract', 'uninterp-returns', 'smt-lower')

VERDICT_EXIT_CODES = {
    'PROVED': 0,
    'REFUTED': 1,
    'UNKNOWN': 2,
    'FAILED-OBLIGATION': 3,
}

USAGE_ERROR_EXIT_CODE = 4

REPORT_FIELDS = ('id', 'origin', 'strategy', 'status', 'seconds', 'location', 'note', 'reason')
