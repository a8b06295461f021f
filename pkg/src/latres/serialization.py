"""Strict dataclass <-> plain-dict conversion for config documents.

Unknown keys are rejected so typos in config files fail loudly, and
conversion is lossless: ``from_dict(cls, to_dict(x)) == x`` for every
config type in the package.
"""

from __future__ import annotations

import dataclasses
import json
import typing

from .errors import ConfigurationError


def to_dict(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    if isinstance(obj, dict):
        return {k: to_dict(v) for k, v in obj.items()}
    return obj


def _convert(tp, value, where):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _convert(args[0], value, where)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigurationError(f"{where}: expected object, got {type(value).__name__}")
        return from_dict(tp, value, where=where)
    if origin in (list, tuple):
        (item_tp, *_) = typing.get_args(tp) or (typing.Any,)
        seq = [_convert(item_tp, v, f"{where}[{i}]") for i, v in enumerate(value)]
        return tuple(seq) if origin is tuple else seq
    if tp is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if tp in (int, float, str, bool) and not isinstance(value, tp):
        raise ConfigurationError(
            f"{where}: expected {tp.__name__}, got {type(value).__name__}"
        )
    return value


def from_dict(cls, data, where=None):
    """Build dataclass *cls* from a plain dict, rejecting unknown keys."""
    where = where or cls.__name__
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where}: expected object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {unknown}")
    hints = typing.get_type_hints(cls)
    kwargs = {}
    for name, f in fields.items():
        if name not in data:
            if (
                f.default is dataclasses.MISSING
                and f.default_factory is dataclasses.MISSING
            ):
                raise ConfigurationError(f"{where}: missing required key {name!r}")
            continue
        kwargs[name] = _convert(hints[name], data[name], f"{where}.{name}")
    return cls(**kwargs)


def canonical_json(obj) -> str:
    """Deterministic JSON rendering (sorted keys, no whitespace drift)."""
    return json.dumps(to_dict(obj), sort_keys=True, separators=(",", ":"))


def pretty_json(obj) -> str:
    return json.dumps(to_dict(obj), sort_keys=True, indent=2) + "\n"
