"""
Polygon files and JSON reports.

Polygon files are {"vertices": [[x, y], ...]} in counterclockwise order.
Reports are written with sorted keys and 17 significant digits so identical
inputs give byte-identical output.
"""

import os
import json
import math
import logging

import numpy as np

from config import SCHEMA_VERSION
from errors import DomainError, InputError
from polygon_geometry import ConvexPolygon, signed_area

logger = logging.getLogger(__name__)


def parse_polygon(text, source='<string>'):
    """Parse polygon JSON text; InputError carries line/column for syntax errors"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{source}: invalid JSON: {e.msg}", e.lineno, e.colno)

    if not isinstance(data, dict) or 'vertices' not in data:
        raise InputError(f"{source}: expected an object with a 'vertices' array")
    vertices = data['vertices']
    if not isinstance(vertices, list):
        raise InputError(f"{source}: 'vertices' must be an array")
    for n, item in enumerate(vertices):
        if (not isinstance(item, list) or len(item) != 2
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in item)):
            raise InputError(f"{source}: vertex {n} must be a pair of numbers, got {item!r}")

    pts = np.array(vertices, dtype=float).reshape(-1, 2)
    if len(pts) >= 3 and signed_area(pts) < 0:
        raise InputError(f"{source}: vertices are in clockwise order")
    try:
        return ConvexPolygon(pts)
    except DomainError as e:
        raise InputError(f"{source}: {e}")


def read_polygon(path):
    if not os.path.exists(path):
        raise InputError(f"polygon file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    P = parse_polygon(text, path)
    logger.debug(f"read {P.n}-gon from {path}")
    return P


def write_polygon(P, path):
    """Write P (CCW, as normalized by ConvexPolygon) to path"""
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps(P.to_json()))
        f.write('\n')


def _float(x):
    # JSON has no NaN or infinity literals; they are written as strings
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, '.17g')


def _encode(obj, out):
    if hasattr(obj, 'to_json'):
        obj = obj.to_json()
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append('null' if obj is None else ('true' if obj else 'false'))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append('{')
        for n, key in enumerate(sorted(obj, key=str)):
            if n:
                out.append(', ')
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(': ')
            _encode(obj[key], out)
        out.append('}')
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append('[')
        for n, item in enumerate(items):
            if n:
                out.append(', ')
            _encode(item, out)
        out.append(']')
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Deterministic JSON: sorted keys, floats as '.17g', objects via to_json()"""
    out = []
    _encode(obj, out)
    return ''.join(out)


def make_report(command, payload):
    """Wrap a command result with the schema version"""
    report = {'command': command, 'schema_version': SCHEMA_VERSION}
    report.update(payload)
    return report


def write_report(report, path=None):
    """Serialize report; write it to path when given. Returns the text."""
    text = dumps(report) + '\n'
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"report written to {path}")
    return text
