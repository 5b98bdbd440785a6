import os
import sys
from pathlib import Path

import pytest

# run against the source tree when the package is not installed
SRC = Path(__file__).resolve().parents[2] / 'src' / 'python'
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


def pytest_make_parametrize_id(config, val, argname):
    if argname in ['goal_name', 'pass_id']:
        return f'{val}'
    elif argname == 'goal_descr':
        return f"{val[0]}"
    elif isinstance(val, (int, float, str)):
        return f'{argname}={val}'
    return None


def pytest_addoption(parser):
    parser.addoption("--solver_cmd", help="SMT solver command line reading SMT-LIB2 from stdin",
                     default=os.environ.get('SMTPIPE_SOLVER_CMD', 'z3 -in'))


def pytest_configure(config: pytest.Config):
    marker = 'precommit' if config.getoption('-m') == 'precommit' else 'nightly'
    pytest.run_marker = marker
    pytest.solver_cmd = config.getoption('--solver_cmd')
