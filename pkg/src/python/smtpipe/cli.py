# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
import argparse
import json
import logging as log
import os
import shutil
import sys
import traceback
from pathlib import Path

from smtpipe import metrics_print, output_csv, output_json, output_report
from smtpipe.__version__ import __version__
from smtpipe.config_class import DEFAULT_DISCHARGE_DEPTH, DEFAULT_JOBS, DEFAULT_SOLVER_CMD, DEFAULT_TIMEOUT, USAGE_ERROR_EXIT_CODE
from smtpipe.goal_file import load_goal_file, select_theorem
from smtpipe.pipeline_passes import HintSpec
from smtpipe.prover import emit_theorem, prove_theorem, trace_theorem
from smtpipe.solver_driver import SolverConfig, check_solver_version
from smtpipe.term_core import SmtPipeError

COMMANDS = ('prove', 'emit', 'trace')
CONFIG_KEYS = ('ints_as_reals', 'timeout', 'expansion_cap', 'solver_cmd', 'memory_cap_mb', 'temp_file', 'depth', 'jobs')


class UsageError(SmtPipeError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f'== {reason} ==')


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the translation-error status instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR_EXIT_CODE, f'{self.prog}: error: {message}\n')


def positive_number_type(x):
    try:
        x = float(x)
    except ValueError:
        raise argparse.ArgumentTypeError(f'{x!r} is not a number')
    if x <= 0:
        raise argparse.ArgumentTypeError('Minimum input value is greater than 0')
    return x


def positive_int_type(x):
    x = int(x)
    if x < 1:
        raise argparse.ArgumentTypeError('Minimum input value is 1')
    return x


def non_negative_int_type(x):
    x = int(x)
    if x < 0:
        raise argparse.ArgumentTypeError('Minimum input value is 0')
    return x


def get_argprser(argv=None):
    parser = _ArgumentParser('smtpipe', add_help=True, formatter_class=argparse.RawTextHelpFormatter,
                             description='Prove goal-file theorems with an external SMT solver.')
    parser.add_argument('command', choices=COMMANDS, help='prove: verdict and report\nemit: print the SMT-LIB2 script\n'
                                                          'trace: print the clause after every pass')
    parser.add_argument('goal_file', help='goal file with definitions and defthm forms')
    parser.add_argument('--theorem', default=None, help='theorem to use when the file has several')
    parser.add_argument('--solver-cmd', dest='solver_cmd', default=None,
                        help=f'solver command line reading SMT-LIB2 from stdin.\n'
                        f'Default from SMTPIPE_SOLVER_CMD, currently "{DEFAULT_SOLVER_CMD}".')
    parser.add_argument('--timeout', type=positive_number_type, default=None,
                        help=f'seconds per solver query, overrides the :timeout hint. Default {DEFAULT_TIMEOUT}.')
    parser.add_argument('--ints-as-reals', dest='ints_as_reals', action='store_true', help='lower integerp as Real')
    parser.add_argument('--assume', type=positive_int_type, action='append', default=[], metavar='ID',
                        help='treat obligation ID as proved; repeatable and reported with the verdict')
    parser.add_argument('--emit-only', dest='emit_only', action='store_true', help='with prove: print the script and stop')
    parser.add_argument('--trace', action='store_true', help='with prove: print the per-pass trace first')
    parser.add_argument('--jobs', type=positive_int_type, default=None, help=f'parallel solver workers for obligations. Default {DEFAULT_JOBS}.')
    parser.add_argument('--depth', type=non_negative_int_type, default=None,
                        help=f'nested discharge depth. Default {DEFAULT_DISCHARGE_DEPTH}.')
    parser.add_argument('--memory-cap', dest='memory_cap_mb', type=positive_int_type, default=None, help='solver memory cap in MiB')
    parser.add_argument('--temp-file', dest='temp_file', action='store_true', help='pass the script as a file instead of stdin')
    parser.add_argument('-o', '--output', default=None, help='emit: write the script to this file')
    parser.add_argument('-r', '--report', help='report csv')
    parser.add_argument('-rj', '--report_json', help='report json')
    parser.add_argument(
        '-lc',
        '--load_config',
        default=None,
        required=False,
        help='path to JSON file with default settings.\n'
        'Example: {"ints_as_reals": true, "timeout": 20, "expansion_cap": 5000, "jobs": 4}.',
    )
    parser.add_argument('-v', '--version', action='version', version=f'%(prog)s {__version__}')
    return parser.parse_args(argv)


def get_config(config):
    with open(config, 'r') as f:
        try:
            run_config = json.load(f)
        except Exception:
            raise UsageError(f'Parse file:{config} failure, json format is incorrect')
    if not isinstance(run_config, dict):
        raise UsageError(f'{config} must hold a JSON object')
    unknown = sorted(set(run_config) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f'{config}: unknown key(s) {unknown}, expected {list(CONFIG_KEYS)}')
    return run_config


def analyze_args(args):
    """Flatten the namespace into the run_args dict the prover reads; flags win over --load_config."""
    config = get_config(args.load_config) if args.load_config is not None else {}
    run_args = {}
    run_args['command'] = 'emit' if args.command == 'prove' and args.emit_only else args.command
    run_args['goal_file'] = Path(args.goal_file)
    run_args['theorem'] = args.theorem
    run_args['trace'] = args.trace
    run_args['solver_cmd'] = args.solver_cmd or config.get('solver_cmd')
    run_args['timeout'] = args.timeout
    run_args['ints_as_reals'] = args.ints_as_reals
    run_args['assume'] = tuple(dict.fromkeys(args.assume))
    run_args['jobs'] = args.jobs or config.get('jobs', DEFAULT_JOBS)
    run_args['depth'] = args.depth if args.depth is not None else config.get('depth', DEFAULT_DISCHARGE_DEPTH)
    run_args['memory_cap_mb'] = args.memory_cap_mb or config.get('memory_cap_mb')
    run_args['temp_file'] = args.temp_file or bool(config.get('temp_file', False))
    # a config timeout is a default: a theorem's :timeout hint beats it, --timeout beats both
    solver = {'timeout': config['timeout']} if config.get('timeout') is not None else {}
    run_args['defaults'] = HintSpec(ints_as_reals=config.get('ints_as_reals'), solver=solver,
                                    expansion_cap=config.get('expansion_cap'))
    return run_args


def _check_solver(run_args):
    cfg = SolverConfig(command=run_args['solver_cmd'] or DEFAULT_SOLVER_CMD)
    if shutil.which(cfg.command[0]) is None:
        log.warning(f'[solver] {cfg.command[0]} not found on PATH')
        return
    found = check_solver_version(cfg)
    if found is not None:
        log.info(f'[solver] {cfg.command_text} version {found}')


def run_command(run_args) -> int:
    theorem = select_theorem(load_goal_file(run_args['goal_file']), run_args['theorem'])
    command = run_args['command']
    if command == 'trace' or run_args['trace']:
        sys.stdout.write(trace_theorem(theorem, run_args))
        if command == 'trace':
            return 0
    if command == 'emit':
        script = emit_theorem(theorem, run_args)
        out = run_args.get('output')
        if out:
            with open(out, 'w', newline='\n') as fh:
                fh.write(script.text)
            log.info(f'[emit] wrote {out}')
        else:
            sys.stdout.write(script.text)
        return 0
    _check_solver(run_args)
    result = prove_theorem(theorem, run_args)
    metrics_print.print_summary(result)
    if run_args.get('report'):
        output_csv.write_result(run_args['report'], result)
    if run_args.get('report_json'):
        output_json.write_result(run_args['report_json'], run_args['goal_file'], result, run_args)
    sys.stdout.write(output_report.format_report(output_report.report_data(result)))
    print(result.verdict.kind)
    return result.exit_code


def main(argv=None):
    logging_kwargs = {'encoding': 'utf-8'} if sys.version_info[1] > 8 else {}
    log.basicConfig(format='[ %(levelname)s ] %(message)s', level=os.environ.get('LOGLEVEL', log.INFO), stream=sys.stdout, **logging_kwargs)
    args = get_argprser(argv)
    if (args.command != 'prove' or args.emit_only) and 'LOGLEVEL' not in os.environ:
        # keep stdout clean for the script or trace
        log.getLogger().setLevel(log.WARNING)
    try:
        run_args = analyze_args(args)
        run_args['output'] = args.output
        run_args['report'] = args.report
        run_args['report_json'] = args.report_json
        return run_command(run_args)
    except (SmtPipeError, OSError) as err:
        log.error(str(err))
        log.debug(traceback.format_exc())
        return USAGE_ERROR_EXIT_CODE
    except Exception:
        log.error('An exception occurred')
        log.info(traceback.format_exc())
        return USAGE_ERROR_EXIT_CODE


if __name__ == '__main__':
    sys.exit(main())
