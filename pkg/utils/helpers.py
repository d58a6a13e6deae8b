import json
import math
from typing import Any, List

import numpy as np


def parse_float_list(text: str) -> List[float]:
    """'1.0,-2,3e-1' -> [1.0, -2.0, 0.3]; every value must be finite."""
    try:
        values = [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ValueError(f"Expected comma-separated numbers, got {text!r}")
    if not values:
        raise ValueError("Expected at least one number")
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"Values must be finite, got {text!r}")
    return values


def parse_int_list(text: str) -> List[int]:
    try:
        values = [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ValueError(f"Expected comma-separated integers, got {text!r}")
    if not values:
        raise ValueError("Expected at least one integer")
    return values


def _default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'value'):  # str enums
        return value.value
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def to_json(payload: Any) -> str:
    """Deterministic JSON: sorted keys, repr floats, UTF-8 text."""
    return json.dumps(payload, default=_default, sort_keys=True,
                      ensure_ascii=False)
