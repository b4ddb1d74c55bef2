"""
Structured-text output with full float precision
"""

import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np


def _format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"Cannot serialize non-finite value {value}")
    text = format(value, ".17g")
    # keep floats recognisable as floats on re-read
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _encode(value: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)

    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _format_float(float(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, np.ndarray):
        return _encode(value.tolist(), indent, level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + end_pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        # flat numeric lists stay on one line
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in value):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in value) + "]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + end_pad + "]"
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def dumps_precise(obj: Any, indent: int = 2) -> str:
    """Serialize to JSON text with every float printed to 17 significant digits"""
    return _encode(obj, indent, 0) + "\n"


def write_json(path: Union[str, Path], obj: Any) -> Path:
    """Write a JSON document with full float precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_precise(obj), encoding="utf-8")
    return path


def read_json(path: Union[str, Path]) -> Any:
    """Read a JSON document"""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
