import json
import math

import numpy as np
from hypothesis import given, strategies as st

from rotodeg.report import EXIT_FAILED, EXIT_OK, SCHEMA, dumps, error_report, exit_status, failures, normalize, round_sig


def test_round_sig():
    assert round_sig(1.0 / 3.0) == 0.333333333333
    assert round_sig(123456789.123456789) == 123456789.123
    assert round_sig(float("inf")) is None and round_sig(float("nan")) is None


def test_normalize_types():
    out = normalize({"a": np.float64(0.1 + 0.2), "b": np.int64(3), "c": np.bool_(True), "d": complex(1, -2),
                     "e": np.array([1.0, np.nan]), 4: (1, "x")})
    assert out == {"a": 0.3, "b": 3, "c": True, "d": [1.0, -2.0], "e": [1.0, None], "4": [1, "x"]}
    assert type(out["b"]) is int and type(out["c"]) is bool


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_round_sig_is_idempotent_and_close(x):
    r = round_sig(x)
    assert round_sig(r) == r
    assert math.isclose(r, x, rel_tol=1e-11, abs_tol=0.0) or x == 0.0


def test_failures_paths():
    rep = {"degree": [{"certified": True}, {"certified": False}],
           "twist": [{"holds": True, "indeterminate": True}],
           "locate": [{"guarantees": [{"met": False}]}, {"error": {"type": "X"}}],
           "decomposition": [{"ok": True, "error": None}]}
    assert failures(rep) == ["/degree[1]/certified", "/twist[0]/indeterminate",
                             "/locate[0]/guarantees[0]/met", "/locate[1]/error"]
    assert exit_status(rep) == EXIT_FAILED
    assert exit_status({"degree": [{"certified": True}]}) == EXIT_OK


def test_exit_status_is_a_function_of_saved_json():
    rep = {"twist": [{"holds": False, "value": 0.1 + 0.2}]}
    assert exit_status(json.loads(dumps(rep))) == exit_status(rep)


def test_error_report():
    e = error_report("UsageError", "bad")
    assert e["schema"] == SCHEMA and e["error"] == {"type": "UsageError", "message": "bad"}
