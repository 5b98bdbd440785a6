# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0

"""smtpipe module namespace, exposing the goal loader, the prover entry points and the pipeline pieces they use."""

from .__version__ import __version__

from .goal_file import (
    GoalFile,
    GoalFileError,
    Theorem,
    load_goal_file,
    parse_goal_text,
    select_theorem,
)
from .obligation_ledger import (
    Obligation,
    Origin,
    Status,
    Strategy,
    Verdict,
)
from .pipeline_passes import (
    ExpandOverride,
    HintSpec,
    HypoHint,
    format_trace,
    run_pipeline,
)
from .prover import (
    RunResult,
    emit_theorem,
    prove_theorem,
    trace_theorem,
)
from .solver_driver import (
    Counterexample,
    SolverConfig,
    run_solver,
)
from .term_core import (
    Clause,
    SmtPipeError,
    parse_clause,
    parse_term,
    print_clause,
)
