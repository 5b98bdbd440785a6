# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
from pathlib import Path

import numpy as np
import pandas as pd

from smtpipe.config_class import REPORT_FIELDS
from smtpipe.output_json import obligation_rows


def obligation_frame(ledger) -> pd.DataFrame:
    return pd.DataFrame(obligation_rows(ledger), columns=list(REPORT_FIELDS))


def timing_summary(ledger):
    """avg/min/median/max of the per-obligation discharge times, grouped by origin."""
    summary = {}
    by_origin = {}
    for ob in ledger:
        by_origin.setdefault(ob.origin.value, []).append(ob.seconds)
    for origin, values in by_origin.items():
        summary[origin] = {
            'count': len(values),
            'avg': float(np.mean(values)),
            'mini': float(np.min(values)),
            'median': float(np.median(values)),
            'max': float(np.max(values)),
        }
    return summary


def write_result(report_file, result):
    df = obligation_frame(result.ledger)
    df.insert(0, 'theorem', result.theorem.lower())
    df['verdict'] = result.verdict.kind
    Path(report_file).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(report_file, index=False)
