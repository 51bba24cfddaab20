# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import json
import os
from typing import Any


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def dump_json(obj: Any, path: str) -> None:
    # written as bytes so the line ending is identical on every platform
    with open(path, "wb") as f:
        f.write(dumps_json(obj).encode("utf-8"))


def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def ensure_directory(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
