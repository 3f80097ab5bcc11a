"""JSON persistence for states and configuration files.

A state file is a single JSON object: headers as full-precision decimal
floats, coefficient arrays as flat lists with their shapes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import yaml

from .operator import Discretization, Problem, State
from .vorticity import VorticityModel

FORMAT = "vortwave-state"
VERSION = 1


class SchemaError(ValueError):
    """Malformed state or config file; ``offset`` is a byte offset into the file."""

    def __init__(self, message: str, offset: int = 0, path: str = ""):
        self.offset = int(offset)
        self.path = path
        where = f" at {path}" if path else ""
        super().__init__(f"{message}{where} (byte offset {self.offset})")


def state_to_dict(state: State, extra: dict | None = None) -> dict:
    d = state.disc
    out = {
        "format": FORMAT,
        "version": VERSION,
        "physical": {"g": d.g, "h": d.h, "L": d.L},
        "resolution": {"N": d.N, "M": d.M},
        "vorticity": state.model.to_dict(),
        "lambda": state.lam,
        "q": state.q,
        "sign": state.sign,
        "w": [float(v) for v in state.w_modes],
        "phi": {"shape": list(state.phi_modes.shape), "data": [float(v) for v in state.phi_modes.ravel()]},
    }
    if extra:
        out["continuation"] = extra
    return out


def dumps_state(state: State, extra: dict | None = None) -> str:
    return json.dumps(state_to_dict(state, extra), indent=1, allow_nan=False) + "\n"


def save_state(state: State, path, extra: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_state(state, extra))
    return path


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _key_offset(text: str, key: str) -> int:
    pos = text.find(f'"{key}"')
    return _byte_offset(text, pos if pos >= 0 else len(text))


def _get(obj: dict, key: str, text: str, path: str, kind=None):
    full = f"{path}.{key}" if path else key
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"missing field '{full}'", _byte_offset(text, len(text)), full)
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise SchemaError(f"field '{full}' must be a finite number", _key_offset(text, key), full)
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise SchemaError(f"field '{full}' must be an integer", _key_offset(text, key), full)
        return val
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"field '{full}' has the wrong type", _key_offset(text, key), full)
    return val


def parse_state(text: str) -> tuple[State, dict | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg}", _byte_offset(text, exc.pos)) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise SchemaError("not a state file (format tag missing)", _key_offset(text, "format"), "format")
    if _get(doc, "version", text, "", int) != VERSION:
        raise SchemaError("unsupported version", _key_offset(text, "version"), "version")
    phys = _get(doc, "physical", text, "", dict)
    res = _get(doc, "resolution", text, "", dict)
    disc = Discretization(_get(phys, "L", text, "physical", float), _get(phys, "h", text, "physical", float),
                          _get(res, "N", text, "resolution", int), _get(res, "M", text, "resolution", int),
                          _get(phys, "g", text, "physical", float))
    try:
        model = VorticityModel.from_dict(_get(doc, "vorticity", text, "", dict))
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad vorticity: {exc}", _key_offset(text, "vorticity"), "vorticity") from None
    lam = _get(doc, "lambda", text, "", float)
    q = _get(doc, "q", text, "", float)
    sign = _get(doc, "sign", text, "", int)
    w = np.array(_get(doc, "w", text, "", list), dtype=float)
    if w.shape != (disc.N,):
        raise SchemaError(f"w must have {disc.N} entries", _key_offset(text, "w"), "w")
    phi_d = _get(doc, "phi", text, "", dict)
    shape = tuple(_get(phi_d, "shape", text, "phi", list))
    data = np.array(_get(phi_d, "data", text, "phi", list), dtype=float)
    if shape != (disc.N + 1, disc.M + 1) or data.size != shape[0] * shape[1]:
        raise SchemaError("phi shape does not match the resolution", _key_offset(text, "phi"), "phi")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(data))):
        raise SchemaError("non-finite coefficients", _key_offset(text, "w"), "w")
    state = State(Problem(model, disc), lam, q, w, data.reshape(shape), sign)
    return state, doc.get("continuation")


def load_state(path) -> tuple[State, dict | None]:
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError("file is not UTF-8", exc.start) from None
    return parse_state(text)


def load_config(path) -> dict:
    """Read a YAML or JSON config file into a dict."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        offset = _byte_offset(text, mark.index) if mark is not None else 0
        raise SchemaError(f"invalid config: {getattr(exc, 'problem', exc)}", offset) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise SchemaError("config must be a mapping", 0)
    return doc
