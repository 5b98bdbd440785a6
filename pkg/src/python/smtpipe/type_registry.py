# -*- coding: utf-8 -*-
# Copyright (C) 2024 The smtpipe Authors
# SPDX-License-Identifier: Apache-2.0
"""Function definitions, recognizers and the product/list/alist/option type formers."""
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, Iterable, Optional, Tuple, Union

from smtpipe.term_core import (
    PRIMITIVE_ARITY, PRIMITIVE_RECOGNIZERS, SmtPipeError, Var, called_functions, free_vars,
    sexpr_to_term, subterms, App,
)


class DuplicateName(SmtPipeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f'== name {name} is already defined ==')


class UnknownRecognizer(SmtPipeError):
    def __init__(self, name, owner=None):
        self.name = name
        self.owner = owner
        where = f' (referenced by {owner})' if owner else ''
        super().__init__(f'== unknown recognizer {name}{where} ==')


class CyclicTypeReference(SmtPipeError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__(f'== cyclic type reference: {" -> ".join(self.cycle)} ==')


class MutualRecursion(SmtPipeError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__(f'== mutual recursion is not supported: {" -> ".join(self.cycle)} ==')


class MalformedTypeDef(SmtPipeError):
    def __init__(self, name, reason):
        self.name = name
        self.reason = reason
        super().__init__(f'== malformed type {name}: {reason} ==')


class RegistryInvalid(SmtPipeError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f'== registry closure violated: {reason} ==')


@dataclass(frozen=True)
class UninterpSpec:
    arg_recognizers: tuple
    result_recognizer: str
    constraints: tuple = ()


@dataclass(frozen=True)
class FnDef:
    name: str
    formals: tuple
    body: Optional[object]
    recursive: bool = False
    uninterpreted: Optional[UninterpSpec] = None


@dataclass(frozen=True)
class ProdDef:
    name: str
    recognizer: str
    constructor: str
    fields: tuple
    kind: str = field(default='prod', init=False)

    def references(self):
        return tuple(r for _, r in self.fields)

    def function_names(self):
        return (self.recognizer, self.constructor) + tuple(a for a, _ in self.fields)


@dataclass(frozen=True)
class ListDef:
    name: str
    recognizer: str
    elt_recognizer: str
    true_listp: bool = True
    kind: str = field(default='list', init=False)

    def references(self):
        return (self.elt_recognizer,)

    def function_names(self):
        return (self.recognizer,)


@dataclass(frozen=True)
class AlistDef:
    name: str
    recognizer: str
    key_recognizer: str
    val_recognizer: str
    kind: str = field(default='alist', init=False)

    def references(self):
        return (self.key_recognizer, self.val_recognizer)

    def function_names(self):
        return (self.recognizer,)


@dataclass(frozen=True)
class OptionDef:
    name: str
    recognizer: str
    some_constructor: str
    val_accessor: str
    base_recognizer: str
    kind: str = field(default='option', init=False)

    def references(self):
        return (self.base_recognizer,)

    def function_names(self):
        return (self.recognizer, self.some_constructor, self.val_accessor)


FtyTypeDef = Union[ProdDef, ListDef, AlistDef, OptionDef]


@dataclass(frozen=True)
class PrimitiveKind:
    name: str
    kind: str = field(default='primitive', init=False)


class NotARecognizer:
    kind = 'none'

    def __repr__(self):
        return 'NOT_A_RECOGNIZER'


NOT_A_RECOGNIZER = NotARecognizer()


@dataclass(frozen=True)
class FtyRole:
    kind: str
    typedef: object
    index: int = 0


def make_prod(name, fields) -> ProdDef:
    """``(defprod name ((field recognizer) ...))`` naming: ``name-p``, ``name``, ``name->field``."""
    name = name.upper()
    return ProdDef(name, f'{name}-P', name, tuple((f'{name}->{f.upper()}', r.upper()) for f, r in fields))


def make_list(name, elt_recognizer, true_listp=True) -> ListDef:
    name = name.upper()
    return ListDef(name, f'{name}-P', elt_recognizer.upper(), true_listp)


def make_alist(name, key_recognizer, val_recognizer) -> AlistDef:
    name = name.upper()
    return AlistDef(name, f'{name}-P', key_recognizer.upper(), val_recognizer.upper())


def make_option(name, base_recognizer) -> OptionDef:
    name = name.upper()
    return OptionDef(name, f'{name}-P', f'{name}-SOME', f'{name}-SOME->VAL', base_recognizer.upper())


class TypeRegistry:
    """Read-only view of the logical world; ``register_*`` return new registries."""

    def __init__(self, functions=None, types=None, realp_alias=False):
        self._functions: Dict[str, FnDef] = dict(functions or {})
        self._types: Dict[str, FtyTypeDef] = dict(types or {})
        self.realp_alias = realp_alias
        self._roles: Dict[str, FtyRole] = {}
        self._recognizers: Dict[str, FtyTypeDef] = {}
        for tdef in self._types.values():
            self._recognizers[tdef.recognizer] = tdef
            self._roles[tdef.recognizer] = FtyRole('recognizer', tdef)
            if tdef.kind == 'prod':
                self._roles[tdef.constructor] = FtyRole('constructor', tdef)
                for i, (accessor, _) in enumerate(tdef.fields):
                    self._roles[accessor] = FtyRole('accessor', tdef, i)
            elif tdef.kind == 'option':
                self._roles[tdef.some_constructor] = FtyRole('some', tdef)
                self._roles[tdef.val_accessor] = FtyRole('val', tdef)

    @property
    def functions(self):
        return MappingProxyType(self._functions)

    @property
    def types(self):
        return MappingProxyType(self._types)

    def function(self, name) -> Optional[FnDef]:
        return self._functions.get(name)

    def fty_role(self, name) -> Optional[FtyRole]:
        return self._roles.get(name)

    def fty_type_by_name(self, type_name) -> Optional[FtyTypeDef]:
        return self._types.get(type_name)

    def alias_of(self, name) -> Optional[str]:
        if name == 'REALP' and self.realp_alias:
            return 'RATIONALP'
        return None

    def arity(self, name) -> Optional[Tuple[int, Optional[int]]]:
        if name in PRIMITIVE_ARITY:
            return PRIMITIVE_ARITY[name]
        if self.alias_of(name) is not None:
            return (1, 1)
        role = self._roles.get(name)
        if role is not None:
            if role.kind == 'constructor':
                n = len(role.typedef.fields)
                return (n, n)
            return (1, 1)
        fdef = self._functions.get(name)
        if fdef is not None:
            n = len(fdef.formals)
            return (n, n)
        return None

    def is_known(self, name) -> bool:
        return self.arity(name) is not None or name in self._types

    def recognizer_kind(self, name):
        alias = self.alias_of(name)
        if alias is not None:
            return PrimitiveKind(alias)
        if name in PRIMITIVE_RECOGNIZERS:
            return PrimitiveKind(name)
        return self._recognizers.get(name, NOT_A_RECOGNIZER)

    def is_recognizer(self, name) -> bool:
        return self.recognizer_kind(name) is not NOT_A_RECOGNIZER

    def uninterp_spec(self, name) -> Optional[UninterpSpec]:
        fdef = self._functions.get(name)
        return fdef.uninterpreted if fdef is not None else None

    def with_functions(self, functions) -> 'TypeRegistry':
        return TypeRegistry(functions, self._types, self.realp_alias)

    def with_types(self, types) -> 'TypeRegistry':
        return TypeRegistry(self._functions, types, self.realp_alias)

    def with_realp_alias(self, flag) -> 'TypeRegistry':
        return TypeRegistry(self._functions, self._types, flag)


def _call_cycle(functions, start):
    """Return a call path start -> ... -> start through defined bodies, if any."""
    stack = [(start, (start,))]
    visited = set()
    while stack:
        name, path = stack.pop()
        fdef = functions.get(name)
        if fdef is None or fdef.body is None:
            continue
        for callee in called_functions(fdef.body):
            if callee == start and len(path) > 1:
                return path + (start,)
            if callee in functions and callee not in visited and callee != name:
                visited.add(callee)
                stack.append((callee, path + (callee,)))
    return None


def _check_formals(name, formals):
    formals = tuple(f.upper() for f in formals)
    seen = set()
    for f in formals:
        if f in seen:
            raise DuplicateName(f'{name}/{f}')
        seen.add(f)
    return formals


def declare_stub(reg: TypeRegistry, name: str, formals) -> TypeRegistry:
    """Declare a bodiless function; a later ``register_defun`` may complete it."""
    name = name.upper()
    if reg.is_known(name):
        raise DuplicateName(name)
    formals = _check_formals(name, formals)
    functions = dict(reg.functions)
    functions[name] = FnDef(name, formals, None)
    return reg.with_functions(functions)


def register_defun(reg: TypeRegistry, name: str, formals, body_sexpr, uninterpreted: Optional[UninterpSpec] = None) -> TypeRegistry:
    """Add a function definition with its computed recursive flag."""
    name = name.upper()
    formals = _check_formals(name, formals)
    existing = reg.function(name)
    completes_stub = existing is not None and existing.body is None and existing.formals == formals
    if reg.is_known(name) and not completes_stub:
        raise DuplicateName(name)
    functions = dict(reg.functions)
    functions[name] = FnDef(name, formals, None)
    body = sexpr_to_term(body_sexpr, reg.with_functions(functions), variables=formals)
    recursive = name in called_functions(body)
    functions[name] = FnDef(name, formals, body, recursive, uninterpreted)
    cycle = _call_cycle(functions, name)
    if cycle is not None:
        raise MutualRecursion(cycle)
    return reg.with_functions(functions)


def attach_uninterp_spec(reg: TypeRegistry, name: str, spec: UninterpSpec) -> TypeRegistry:
    name = name.upper()
    fdef = reg.function(name)
    if fdef is None:
        raise RegistryInvalid(f'no function {name} to attach an uninterpreted spec to')
    functions = dict(reg.functions)
    functions[name] = FnDef(fdef.name, fdef.formals, fdef.body, fdef.recursive, spec)
    return reg.with_functions(functions)


def _type_cycle(types, start):
    stack = [(start, (start,))]
    while stack:
        name, path = stack.pop()
        tdef = types[name]
        for ref in tdef.references():
            target = next((t.name for t in types.values() if t.recognizer == ref), None)
            if target is None:
                continue
            if target == start:
                return path + (start,)
            if target not in path:
                stack.append((target, path + (target,)))
    return None


def register_fty_group(reg: TypeRegistry, defs: Iterable[FtyTypeDef]) -> TypeRegistry:
    """Register type definitions that may reference each other."""
    defs = tuple(defs)
    seen = set()
    for tdef in defs:
        if tdef.kind == 'list' and not tdef.true_listp:
            raise MalformedTypeDef(tdef.name, 'typed lists must be true lists')
        # a product's constructor shares the type name
        for name in dict.fromkeys((tdef.name,) + tdef.function_names()):
            if reg.is_known(name) or name in seen:
                raise DuplicateName(name)
            seen.add(name)
    group_recognizers = {t.recognizer for t in defs}
    for tdef in defs:
        for ref in tdef.references():
            if reg.recognizer_kind(ref) is NOT_A_RECOGNIZER and ref not in group_recognizers:
                raise UnknownRecognizer(ref, tdef.name)
    types = dict(reg.types)
    for tdef in defs:
        types[tdef.name] = tdef
    for tdef in defs:
        cycle = _type_cycle(types, tdef.name)
        if cycle is not None:
            raise CyclicTypeReference(cycle)
    return reg.with_types(types)


def register_fty(reg: TypeRegistry, tdef: FtyTypeDef) -> TypeRegistry:
    return register_fty_group(reg, (tdef,))


def recognizer_kind(reg: TypeRegistry, name: str):
    """Primitive kind, FTY type definition or ``NOT_A_RECOGNIZER``."""
    return reg.recognizer_kind(name.upper())


def validate(reg: TypeRegistry) -> bool:
    """Full closure check, used by tests after every registration."""
    for fdef in reg.functions.values():
        if fdef.body is None:
            continue
        for node in subterms(fdef.body):
            if isinstance(node, App) and reg.arity(node.fn) is None:
                raise RegistryInvalid(f'{fdef.name} calls unknown {node.fn}')
            if isinstance(node, Var) and node.name not in fdef.formals:
                raise RegistryInvalid(f'{fdef.name} has free variable {node.name}')
        if fdef.recursive != (fdef.name in called_functions(fdef.body)):
            raise RegistryInvalid(f'{fdef.name} has a stale recursive flag')
        if _call_cycle(reg.functions, fdef.name) is not None:
            raise RegistryInvalid(f'{fdef.name} is mutually recursive')
        if free_vars(fdef.body) and not set(free_vars(fdef.body)) <= set(fdef.formals):
            raise RegistryInvalid(f'{fdef.name} body escapes its formals')
    for tdef in reg.types.values():
        for ref in tdef.references():
            if reg.recognizer_kind(ref) is NOT_A_RECOGNIZER:
                raise RegistryInvalid(f'{tdef.name} references unknown recognizer {ref}')
        if _type_cycle(dict(reg.types), tdef.name) is not None:
            raise RegistryInvalid(f'{tdef.name} is part of a type cycle')
    return True


def effective_uninterp(reg: TypeRegistry, overrides=None) -> Dict[str, UninterpSpec]:
    """Uninterpreted functions in effect: registry specs, then ``overrides`` on top."""
    specs = {name: fdef.uninterpreted for name, fdef in reg.functions.items() if fdef.uninterpreted is not None}
    specs.update(overrides or {})
    return specs
