from typing import Any, Dict, List, Union
import io
import numbers

import pandas as pd

from utils.helpers import to_json


Payload = Union[Dict, List, pd.DataFrame]

FORMATS = ('json', 'csv', 'text')


def _is_vector(payload: Any) -> bool:
    return isinstance(payload, list) and bool(payload) and all(
        isinstance(v, numbers.Real) and not isinstance(v, bool) for v in payload)


def _flatten(record: Dict) -> Dict:
    # nested lists (witness vectors, pairs) become JSON text in a CSV cell
    return {key: to_json(value) if isinstance(value, (list, dict)) else value
            for key, value in record.items()}


def _frame(payload: Payload) -> pd.DataFrame:
    if isinstance(payload, pd.DataFrame):
        return payload
    if isinstance(payload, dict):
        return pd.DataFrame([_flatten(payload)])
    if _is_vector(payload):
        return pd.DataFrame([payload], columns=[f"x{i}" for i in range(len(payload))])
    return pd.DataFrame([_flatten(record) for record in payload])


def _text(payload: Payload) -> str:
    if isinstance(payload, pd.DataFrame):
        return payload.to_string(index=False) + '\n'
    if _is_vector(payload):
        return ' '.join(repr(float(v)) for v in payload) + '\n'
    records = [payload] if isinstance(payload, dict) else payload
    blocks = []
    for record in records:
        width = max((len(key) for key in record), default=0)
        blocks.append('\n'.join(
            f"{key.ljust(width)} : {value}" for key, value in record.items()))
    return '\n\n'.join(blocks) + '\n'


def render(payload: Payload, fmt: str) -> str:
    """
    Render a report. JSON: one document, or one line per record for lists
    (newline-delimited JSON); a bare vector renders as a JSON array.
    """
    if fmt == 'json':
        if isinstance(payload, pd.DataFrame):
            payload = payload.to_dict(orient='records')
        if isinstance(payload, dict) or _is_vector(payload):
            return to_json(payload) + '\n'
        return ''.join(to_json(record) + '\n' for record in payload)
    if fmt == 'csv':
        buffer = io.StringIO()
        _frame(payload).to_csv(buffer, index=False, lineterminator='\n')
        return buffer.getvalue()
    if fmt == 'text':
        return _text(payload)
    raise ValueError(f"Unknown output format {fmt!r}; choose from {FORMATS}")
