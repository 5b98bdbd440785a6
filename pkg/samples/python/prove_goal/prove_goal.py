#!/usr/bin/env python3
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0

import argparse

import smtpipe


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument('goal_file')
    parser.add_argument('--theorem', default=None)
    parser.add_argument('--solver-cmd', default=None)
    args = parser.parse_args()

    theorem = smtpipe.select_theorem(smtpipe.load_goal_file(args.goal_file), args.theorem)
    result = smtpipe.prove_theorem(theorem, {'solver_cmd': args.solver_cmd, 'timeout': 30})

    print(f'{theorem.name.lower()}: {result.verdict.kind} ({result.verdict.reason})')
    if result.verdict.counterexample:
        print(f'counterexample: {result.verdict.counterexample}')
    for ob in result.ledger:
        print(f'  #{ob.id} {ob.origin.value:<20} {ob.status.value:<10} {ob.location}')


if '__main__' == __name__:
    main()
