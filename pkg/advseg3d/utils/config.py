# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import types
from dataclasses import fields, is_dataclass
from enum import Enum
from typing import Any, Union, get_args, get_origin, get_type_hints

from ..errors import ConfigError
from .serialization import load_json


def _join(key_path: str, name: str | int) -> str:
    if isinstance(name, int):
        return f"{key_path}[{name}]"

    return f"{key_path}.{name}" if key_path else name


def _parse_value(annotation: Any, value: Any, key_path: str) -> Any:
    origin = get_origin(annotation)
    args = get_args(annotation)

    if annotation is Any:
        return value

    if origin in [Union, types.UnionType]:
        if value is None:
            if type(None) in args:
                return None
            raise ConfigError(key_path, "value can't be null")

        error = None
        for arg in args:
            if arg is type(None):
                continue

            try:
                return _parse_value(arg, value, key_path)
            except ConfigError as e:
                error = e

        raise error

    if is_dataclass(annotation):
        return parse_dataclass(annotation, value, key_path)

    if isinstance(annotation, type) and issubclass(annotation, Enum):
        if isinstance(value, annotation):
            return value

        try:
            return annotation(value)
        except ValueError:
            allowed = [member.value for member in annotation]
            raise ConfigError(key_path, f"expected one of {allowed}, got {value!r}")

    if origin in [tuple, list]:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key_path, f"expected a list, got {type(value).__name__}")

        if origin is list or (len(args) == 2 and args[1] is Ellipsis):
            item_annotation = args[0] if len(args) > 0 else Any
            items = [_parse_value(item_annotation, item, _join(key_path, i)) for i, item in enumerate(value)]
        else:
            if len(args) != len(value):
                raise ConfigError(key_path, f"expected {len(args)} items, got {len(value)}")
            items = [_parse_value(arg, item, _join(key_path, i)) for i, (arg, item) in enumerate(zip(args, value))]

        return items if origin is list else tuple(items)

    if origin is dict or annotation is dict:
        if not isinstance(value, dict):
            raise ConfigError(key_path, f"expected an object, got {type(value).__name__}")
        return dict(value)

    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(key_path, f"expected a boolean, got {value!r}")
        return value

    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key_path, f"expected an integer, got {value!r}")
        return value

    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key_path, f"expected a number, got {value!r}")
        return float(value)

    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(key_path, f"expected a string, got {value!r}")
        return value

    raise ConfigError(key_path, f"unsupported annotation {annotation}")


def parse_dataclass(cls: type, data: Any, key_path: str = "") -> Any:
    """builds the dataclass `cls` from a JSON-like dict, rejecting unknown keys

    Args:
        cls (type): dataclass type
        data (Any): parsed JSON object
        key_path (str, optional): dotted path of `data` inside the root document. Defaults to "".

    Raises:
        ConfigError: on unknown keys, wrongly typed values or failed invariants

    Returns:
        Any: instance of `cls`
    """

    if isinstance(data, cls):
        return data

    if not isinstance(data, dict):
        raise ConfigError(key_path, f"expected an object, got {type(data).__name__}")

    annotations = get_type_hints(cls)
    names = [field.name for field in fields(cls) if field.init]

    unknown = sorted(set(data.keys()) - set(names))
    if len(unknown) > 0:
        raise ConfigError(_join(key_path, unknown[0]), "unknown key")

    kwargs = {name: _parse_value(annotations[name], value, _join(key_path, name)) for name, value in data.items()}

    try:
        return cls(**kwargs)
    except (AssertionError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(key_path, str(e))


def load_dataclass(cls: type, path: str) -> Any:
    return parse_dataclass(cls, load_json(path))


def dataclass_to_dict(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return {field.name: dataclass_to_dict(getattr(obj, field.name)) for field in fields(obj) if field.init}
    elif isinstance(obj, Enum):
        return obj.value
    elif isinstance(obj, (list, tuple)):
        return [dataclass_to_dict(i) for i in obj]
    elif isinstance(obj, dict):
        return {key: dataclass_to_dict(value) for key, value in obj.items()}

    return obj
