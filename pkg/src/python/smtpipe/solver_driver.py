# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""External solver process, model parsing and counterexample checking."""
import logging as log
import os
import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from queue import Empty, Queue
from threading import Thread
from typing import Optional

from packaging import version

from smtpipe.config_class import DEFAULT_GRACE_PERIOD, DEFAULT_SOLVER_CMD, DEFAULT_TIMEOUT, SOLVER_MIN_VERSIONS
from smtpipe.memory_profile import MemConsumption, kill_process_tree
from smtpipe.smt_backend import BOOL, INT, NUMERIC, REAL, ArraySort, DatatypeSort, fresh_symbol_name
from smtpipe.term_core import (
    FuelExhausted, NoDefinition, SmtPipeError, Sym, UnboundVar, UnknownFunction, V_NIL, VAlist, VBool, VCons, VInt,
    VNilTyped, VOption, VProd, VSym, Var, clause_eval, eval_term, free_vars, make_number, parse_sexpr, print_sexpr,
    print_term, sexpr_to_term, substitute, value_key, value_to_term,
)
from smtpipe.type_registry import TypeRegistry


class SolverConfigError(SmtPipeError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f'== solver configuration: {reason} ==')


class ModelParseError(SmtPipeError):
    def __init__(self, location, reason):
        self.location = location
        self.reason = reason
        super().__init__(f'== cannot parse model at {location}: {reason} ==')


@dataclass(frozen=True)
class SolverConfig:
    command: tuple = tuple(shlex.split(DEFAULT_SOLVER_CMD))
    timeout: float = DEFAULT_TIMEOUT
    memory_cap_mb: Optional[int] = None
    use_temp_file: bool = False
    grace: float = DEFAULT_GRACE_PERIOD

    def __post_init__(self):
        command = self.command
        if isinstance(command, str):
            command = tuple(shlex.split(command))
        object.__setattr__(self, 'command', tuple(command))
        if not self.command:
            raise SolverConfigError('empty solver command')
        if self.timeout is None or self.timeout <= 0:
            raise SolverConfigError(f'timeout must be positive, got {self.timeout}')
        if self.memory_cap_mb is not None and self.memory_cap_mb <= 0:
            raise SolverConfigError(f'memory cap must be positive, got {self.memory_cap_mb}')

    @property
    def command_text(self):
        return ' '.join(shlex.quote(c) for c in self.command)


# ---------------------------------------------------------------------------
# outcomes

@dataclass(frozen=True)
class Unsat:
    seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class Sat:
    model: str = ''
    seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class Unknown:
    reason: str = 'unknown'
    seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class SolverError:
    reason: str = ''
    exit_code: Optional[int] = None
    seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class Timeout:
    limit: float = DEFAULT_TIMEOUT
    seconds: float = field(default=0.0, compare=False)

    @property
    def reason(self):
        return f'timeout after {self.limit}s'


def outcome_name(outcome) -> str:
    return type(outcome).__name__.lower()


# ---------------------------------------------------------------------------
# the process

class _SolverProcess:
    """Line oriented conversation with a solver reading SMT-LIB2 from stdin."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.p = subprocess.Popen(list(cfg.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                  stderr=subprocess.PIPE, text=True, bufsize=1)
        self.p_queue = Queue()
        self.p_next = None
        self.err_lines = []
        self.p_thread = Thread(target=self._pump, daemon=True)
        self.err_thread = Thread(target=self._pump_err, daemon=True)
        self.p_thread.start()
        self.err_thread.start()
        self.mem = MemConsumption(self.p.pid, cfg.memory_cap_mb)
        self.mem.start_collect_mem_consumption_thread()

    def _pump(self):
        for line in self.p.stdout:
            self.p_queue.put(line)
        self.p_queue.put('')

    def _pump_err(self):
        for line in self.p.stderr:
            self.err_lines.append(line.rstrip())

    def write(self, data):
        try:
            self.p.stdin.write(data)
            self.p.stdin.flush()
            return True
        except (BrokenPipeError, OSError, ValueError):
            return False

    def read_line(self, deadline):
        """Next non-blank line; '' at end of output, None when the deadline passes."""
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            try:
                line = self.p_queue.get(True, remaining)
            except Empty:
                return None
            if line == '' or line.strip():
                return line.strip()

    def read_block(self, deadline):
        """One balanced s-expression, possibly spread over several lines."""
        parts = []
        depth = 0
        while True:
            line = self.read_line(deadline)
            if line is None or line == '':
                return line
            parts.append(line)
            depth += line.count('(') - line.count(')')
            if depth <= 0:
                return '\n'.join(parts)

    def stderr_text(self):
        return '\n'.join(self.err_lines[-5:])

    def close(self):
        self.write('(exit)\n')
        try:
            self.p.stdin.close()
        except OSError:
            pass
        try:
            self.p.wait(self.cfg.grace)
        except subprocess.TimeoutExpired:
            kill_process_tree(self.p.pid)
            self.p.wait()
        self.mem.end_collect_mem_consumption_thread()
        self.p_thread.join(self.cfg.grace)
        self.err_thread.join(self.cfg.grace)
        peak = self.mem.get_max_memory_consumption()
        if peak > 0:
            log.debug(f'[solver] peak memory {peak:.1f} MiB')

    def kill(self):
        kill_process_tree(self.p.pid)


def _verdict_line(line, proc: _SolverProcess, cfg: SolverConfig, deadline):
    if line == 'unsat':
        return Unsat()
    if line == 'sat':
        proc.write('(get-model)\n')
        block = proc.read_block(deadline + cfg.grace)
        if block is None:
            return Timeout(cfg.timeout)
        if block == '' or block.startswith('(error'):
            return SolverError(f'no model: {block or proc.stderr_text()}', proc.p.poll())
        return Sat(block)
    if line == 'unknown':
        proc.write('(get-info :reason-unknown)\n')
        block = proc.read_block(time.monotonic() + cfg.grace)
        reason = 'unknown'
        if block:
            m = re.search(r':reason-unknown\s+"?([^")]*)', block)
            if m:
                reason = m.group(1).strip() or reason
        return Unknown(reason)
    if line == 'timeout':
        return Timeout(cfg.timeout)
    if line.startswith('(error'):
        return SolverError(line, proc.p.poll())
    return SolverError(f'unexpected solver output {line!r}', proc.p.poll())


def _run_interactive(script, cfg: SolverConfig):
    proc = _SolverProcess(cfg)
    try:
        deadline = time.monotonic() + cfg.timeout
        if not proc.write(script.body + '(check-sat)\n'):
            return SolverError(f'solver closed its input: {proc.stderr_text()}', proc.p.poll())
        line = proc.read_line(deadline)
        if proc.mem.cap_exceeded:
            return SolverError(f'memory cap of {cfg.memory_cap_mb} MiB exceeded')
        if line is None:
            proc.kill()
            return Timeout(cfg.timeout)
        if line == '':
            proc.p.wait(cfg.grace)
            return SolverError(f'solver exited with code {proc.p.returncode}: {proc.stderr_text()}', proc.p.returncode)
        return _verdict_line(line, proc, cfg, deadline)
    finally:
        proc.close()


def _run_file(script, cfg: SolverConfig):
    fd, path = tempfile.mkstemp(suffix='.smt2', prefix='smtpipe-')
    with os.fdopen(fd, 'w') as fh:
        fh.write(script.text)
    command = [c for c in cfg.command if c != '-in'] + [path]
    try:
        p = subprocess.Popen(command, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        mem = MemConsumption(p.pid, cfg.memory_cap_mb)
        mem.start_collect_mem_consumption_thread()
        try:
            out, err = p.communicate(timeout=cfg.timeout)
        except subprocess.TimeoutExpired:
            kill_process_tree(p.pid)
            p.communicate()
            return Timeout(cfg.timeout)
        finally:
            mem.end_collect_mem_consumption_thread()
        if mem.cap_exceeded:
            return SolverError(f'memory cap of {cfg.memory_cap_mb} MiB exceeded')
    finally:
        os.unlink(path)
    lines = [x.strip() for x in out.splitlines() if x.strip()]
    if not lines:
        return SolverError(f'solver exited with code {p.returncode}: {err.strip()}', p.returncode)
    first = lines[0]
    if first == 'unsat':
        return Unsat()
    if first == 'sat':
        return Sat('\n'.join(lines[1:]))
    if first == 'unknown':
        return Unknown('unknown')
    if first == 'timeout':
        return Timeout(cfg.timeout)
    return SolverError(first, p.returncode)


def run_solver(script, cfg: Optional[SolverConfig] = None):
    """Send ``script`` to the solver; the outcome records the elapsed time.

    A solver that cannot be started, crashes, prints an error or exceeds the
    memory cap gives ``SolverError``; missing the deadline gives ``Timeout``.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    try:
        if cfg.use_temp_file:
            outcome = _run_file(script, cfg)
        else:
            outcome = _run_interactive(script, cfg)
    except OSError as err:
        outcome = SolverError(f'cannot run {cfg.command_text}: {err}')
    outcome = replace(outcome, seconds=time.perf_counter() - start)
    log.info(f'[solver] {cfg.command_text}: {outcome_name(outcome)} in {outcome.seconds:.3f}s')
    return outcome


_VERSION_RE = re.compile(r'(\d+\.\d+(?:\.\d+)?)')


def check_solver_version(cfg: SolverConfig) -> Optional[str]:
    """Version string of the configured solver; warns when it is older than known good."""
    exe = cfg.command[0]
    name = os.path.basename(exe).lower()
    minimum = next((v for k, v in SOLVER_MIN_VERSIONS.items() if name.startswith(k)), None)
    try:
        res = subprocess.run([exe, '--version'], capture_output=True, text=True, timeout=cfg.timeout)
    except (OSError, subprocess.SubprocessError) as err:
        log.warning(f'[solver] cannot query the version of {exe}: {err}')
        return None
    m = _VERSION_RE.search(res.stdout + res.stderr)
    if m is None:
        log.warning(f'[solver] no version number in the output of {exe} --version')
        return None
    found = m.group(1)
    if minimum is not None and version.parse(found) < version.parse(minimum):
        log.warning(f'[solver] {name} {found} is older than {minimum}, models may not parse')
    return found


# ---------------------------------------------------------------------------
# models

@dataclass(frozen=True)
class RootObj:
    """Index-th real root of a polynomial in ``var``."""
    var: str
    poly: object
    index: int

    def text(self):
        return f'(CEX-ROOT-OBJ {self.var} {print_term(self.poly)} {self.index})'


@dataclass(frozen=True)
class Opaque:
    """A model value with no finite term form (e.g. an array given as a function)."""
    raw: str


@dataclass(frozen=True)
class Counterexample:
    bindings: tuple

    def env(self):
        return dict(self.bindings)

    @property
    def evaluable(self):
        return not any(isinstance(v, (RootObj, Opaque)) for _, v in self.bindings)


_PRIMITIVES = TypeRegistry()


def _is_head(s, name):
    return isinstance(s, tuple) and s and isinstance(s[0], Sym) and s[0].name == name


class _ModelReader:
    def __init__(self, typed, interns):
        self.typed = typed
        self.interns = interns if interns is not None else typed.interns
        self.ctors = typed.constructor_table()

    def number(self, s, var, where):
        if isinstance(s, (int, Fraction)):
            return Fraction(s)
        if _is_head(s, '-') and len(s) == 2:
            inner = self.number(s[1], var, where)
            if isinstance(inner, RootObj):
                raise ModelParseError(where, f'negated algebraic number {print_sexpr(s)}')
            return -inner
        if _is_head(s, '/') and len(s) == 3:
            num = self.number(s[1], var, where)
            den = self.number(s[2], var, where)
            if isinstance(num, RootObj) or isinstance(den, RootObj) or den == 0:
                raise ModelParseError(where, f'unsupported quotient {print_sexpr(s)}')
            return num / den
        if _is_head(s, 'ROOT-OBJ') and len(s) == 3:
            poly = sexpr_to_term(s[1], _PRIMITIVES)
            mapping = {b: Var(var) for b in free_vars(poly)}
            return RootObj(var, substitute(poly, mapping), int(s[2]))
        raise ModelParseError(where, f'not a number: {print_sexpr(s)}')

    def value(self, s, sort, var, env, where):
        if isinstance(s, Sym) and s.name in env:
            s = env[s.name]
        if _is_head(s, 'LET') and len(s) == 3:
            inner = dict(env)
            for binding in s[1]:
                inner[binding[0].name] = binding[1]
            return self.value(s[2], sort, var, inner, where)
        if _is_head(s, 'AS') and len(s) == 3 and not isinstance(sort, ArraySort):
            s = s[1]
        if sort == BOOL:
            if s in (Sym('true'), Sym('false')):
                return VBool(s == Sym('true'))
            raise ModelParseError(where, f'not a Boolean: {print_sexpr(s)}')
        if sort in NUMERIC:
            n = self.number(s, var, where)
            if isinstance(n, RootObj):
                return n
            if sort == INT and n.denominator != 1:
                raise ModelParseError(where, f'non-integral Int value {n}')
            return make_number(n)
        if isinstance(sort, ArraySort):
            return self.array(s, sort, var, env, where)
        return self.datatype(s, sort, var, env, where)

    def datatype(self, s, sort, var, env, where):
        head = s[0] if isinstance(s, tuple) and s else s
        if not isinstance(head, Sym) or head.name.lower() not in self.ctors:
            raise ModelParseError(where, f'unknown constructor in {print_sexpr(s)}')
        info, ctor = self.ctors[head.name.lower()]
        args = s[1:] if isinstance(s, tuple) else ()
        if len(args) != len(ctor.fields):
            raise ModelParseError(where, f'{ctor.name} expects {len(ctor.fields)} field(s)')
        fields = [self.value(a, fsort, var, env, where) for a, (_, fsort) in zip(args, ctor.fields)]
        kind = info.sort.kind
        if kind == 'sym':
            index = fields[0].value if isinstance(fields[0], VInt) else None
            if index is None:
                raise ModelParseError(where, f'symbol index {print_sexpr(args[0])}')
            name = self.interns.name_of(index) if index >= 0 else None
            return VSym(name if name is not None else fresh_symbol_name(self.interns, index))
        if kind == 'prod':
            return VProd(info.sort.type_name, tuple(fields))
        if kind == 'list':
            return VCons(fields[0], fields[1]) if fields else VNilTyped(info.sort.type_name)
        if kind == 'option':
            return VOption(info.sort.type_name, fields[0] if fields else None)
        return VCons(fields[0], fields[1]) if fields else V_NIL

    def array(self, s, sort: ArraySort, var, env, where):
        if isinstance(s, Sym) and s.name in env:
            s = env[s.name]
        if _is_head(s, 'STORE') and len(s) == 4:
            inner = self.array(s[1], sort, var, env, where)
            if isinstance(inner, Opaque):
                return inner
            key = self.value(s[2], sort.key, var, env, where)
            pair = self.value(s[3], sort.pair, var, env, where)
            entries = [(k, v) for k, v in inner.pairs if value_key(k) != value_key(key)]
            if isinstance(pair, VCons):
                if value_key(pair.car) != value_key(key):
                    return Opaque(print_sexpr(s))
                entries.insert(0, (pair.car, pair.cdr))
            return VAlist(tuple(entries))
        if isinstance(s, tuple) and len(s) == 2 and _is_head(s[0], 'AS') and s[0][1] == Sym('const'):
            default = self.value(s[1], sort.pair, var, env, where)
            if default != V_NIL:
                return Opaque(print_sexpr(s))
            return VAlist(())
        return Opaque(print_sexpr(s))


def default_value(sort, typed, interns=None):
    """Some value of ``sort``, for variables a model leaves unconstrained."""
    interns = interns if interns is not None else typed.interns
    if sort == BOOL:
        return V_NIL
    if sort in (INT, REAL):
        return VInt(0)
    if isinstance(sort, ArraySort):
        return VAlist(())
    info = typed.info_of(sort)
    kind = sort.kind
    if kind == 'sym':
        return VSym(fresh_symbol_name(interns, interns.counter))
    if kind == 'list':
        return VNilTyped(sort.type_name)
    if kind == 'option':
        return VOption(sort.type_name, None)
    if kind == 'pair':
        return V_NIL
    return VProd(sort.type_name, tuple(default_value(fs, typed, interns) for _, fs in info.constructors[0].fields))


def parse_model(raw: str, typed, interns=None) -> Counterexample:
    """Lift a ``(get-model)`` answer to values of the goal's variables.

    Symbol indexes map back through the intern table; an index the table does
    not know becomes a fresh symbol name.  Irrational reals come back as
    ``RootObj``; arrays given as functions come back as ``Opaque``.
    """
    try:
        top, _ = parse_sexpr(raw)
    except SmtPipeError as err:
        raise ModelParseError('model text', str(err)) from err
    if not isinstance(top, tuple):
        raise ModelParseError('model text', 'expected a list of definitions')
    items = top[1:] if _is_head(top, 'MODEL') else top
    definitions = {}
    for item in items:
        if _is_head(item, 'DEFINE-FUN') and len(item) == 5 and item[2] == ():
            definitions[item[1].name.lower()] = item[4]
    reader = _ModelReader(typed, interns)
    bindings = []
    for var, smt_name in typed.var_names:
        sort = typed.sort_of(var)
        if smt_name in definitions:
            value = reader.value(definitions[smt_name], sort, var, {}, smt_name)
        else:
            value = default_value(sort, typed, reader.interns)
        bindings.append((var, value))
    return Counterexample(tuple(bindings))


def _value_text(v, reg):
    if isinstance(v, RootObj):
        return v.text()
    if isinstance(v, Opaque):
        return f'(CEX-OPAQUE {v.raw})'
    return print_term(value_to_term(v, reg))


def print_counterexample(cex: Counterexample, reg) -> str:
    return '(' + ' '.join(f'({var} {_value_text(v, reg)})' for var, v in cex.bindings) + ')'


def parse_counterexample(text: str, reg) -> Counterexample:
    """Read back the output of ``print_counterexample``."""
    top, _ = parse_sexpr(text)
    bindings = []
    for entry in top:
        if not (isinstance(entry, tuple) and len(entry) == 2 and isinstance(entry[0], Sym)):
            raise ModelParseError(print_sexpr(entry), 'expected (variable value)')
        var, form = entry[0].name, entry[1]
        if _is_head(form, 'CEX-ROOT-OBJ') and len(form) == 4:
            bound = form[1].name
            bindings.append((var, RootObj(bound, sexpr_to_term(form[2], reg, variables=[bound]), int(form[3]))))
        elif _is_head(form, 'CEX-OPAQUE'):
            bindings.append((var, Opaque(' '.join(print_sexpr(x) for x in form[1:]))))
        else:
            bindings.append((var, eval_term(sexpr_to_term(form, reg), {}, reg)))
    return Counterexample(tuple(bindings))


@dataclass(frozen=True)
class CexCheck:
    kind: str
    reason: str = ''


def check_counterexample(cex: Counterexample, goal, reg) -> CexCheck:
    """Evaluate the original goal under the model: false confirms it, true makes it spurious."""
    if not cex.evaluable:
        return CexCheck('NotEvaluable', 'the model has irrational or function-valued entries')
    env = cex.env()
    missing = [v for v in free_vars(goal) if v not in env]
    if missing:
        return CexCheck('NotEvaluable', f'no value for {", ".join(missing)}')
    try:
        holds = clause_eval(goal, env, reg)
    except (NoDefinition, FuelExhausted, UnknownFunction, UnboundVar) as err:
        return CexCheck('NotEvaluable', str(err))
    if holds:
        return CexCheck('Spurious', 'the goal evaluates to true under the model')
    return CexCheck('Confirmed')
