"""JSON report helpers: schema versioning, float rounding and exit status."""
from __future__ import annotations

import json
import math

import numpy as np

SCHEMA = 1
SIG_DIGITS = 12

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def round_sig(x: float, sig: int = SIG_DIGITS):
    if not math.isfinite(x):
        return None
    return float(f"{x:.{sig}g}")


def normalize(obj, sig: int = SIG_DIGITS):
    """JSON-ready copy with floats rounded to ``sig`` significant digits.

    Non-finite floats become ``None``; integers, booleans and strings are kept
    exactly.
    """
    if isinstance(obj, dict):
        return {str(k): normalize(v, sig) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v, sig) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_sig(float(obj), sig)
    if isinstance(obj, complex):
        return [round_sig(obj.real, sig), round_sig(obj.imag, sig)]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist(), sig)
    return obj


def dumps(obj) -> str:
    return json.dumps(normalize(obj), indent=2, sort_keys=False) + "\n"


def failures(obj, path="") -> list[str]:
    """Paths of every failed verification or uncertified result in a report tree."""
    out = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            p = f"{path}/{k}"
            if k in ("certified", "holds", "met", "ok") and v is False:
                out.append(p)
            elif k == "indeterminate" and v is True:
                out.append(p)
            elif k == "error" and v:
                out.append(p)
            else:
                out += failures(v, p)
    elif isinstance(obj, list):
        for n, v in enumerate(obj):
            out += failures(v, f"{path}[{n}]")
    return out


def exit_status(reports) -> int:
    """0 when every verification holds and every degree is certified, else 1.

    A pure function of the report contents, so it can be recomputed from
    saved files.
    """
    return EXIT_OK if not failures(reports) else EXIT_FAILED


def error_report(kind: str, message: str) -> dict:
    return {"schema": SCHEMA, "error": {"type": kind, "message": message}}
