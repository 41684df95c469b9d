"""Schedule files: full JSON records, single-representation JSON, and CSV tables.

All writers are deterministic (fixed key order, ``repr`` floats) so the same
schedule always serializes to the same bytes.  Readers validate each file
against its JSON schema and then check the numeric invariants; any mismatch
raises :class:`ScheduleValidationError`.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from typing import Any, Mapping, Optional

import jsonschema
import numpy as np

from . import schemas
from .errors import ScheduleValidationError, SingularTimeError
from .schedules import (
    DEFAULT_FLOOR,
    NoiseSchedule,
    _assemble,
    _validate_betas,
    from_alpha_bars,
    from_betas,
    from_observation_times,
    to_observation_times,
)

__all__ = [
    "FORMAT_VERSION",
    "REPRESENTATIONS",
    "CSV_HEADER",
    "FILE_RTOL",
    "dumps",
    "schedule_to_dict",
    "schedule_from_dict",
    "representation_to_dict",
    "representation_from_dict",
    "schedule_to_csv",
    "schedule_from_csv",
    "loads_schedule",
    "load_schedule",
]

FORMAT_VERSION = 1
REPRESENTATIONS = ("betas", "alpha-bars", "times")
CSV_HEADER = ("k", "beta", "alpha", "alpha_bar", "t")
# cumprod round-off grows with T; 1e-10 still catches any hand edit
FILE_RTOL = 1e-10
FILE_ATOL = 1e-14


def dumps(document: Mapping) -> str:
    """Canonical JSON text (two-space indent, trailing newline, no NaN)."""
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def _floats(arr) -> list:
    return [float(x) for x in np.asarray(arr, dtype=float)]


def _jsonable(value):
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if hasattr(value, "describe"):
        return _jsonable(value.describe())
    return value


def _times_or_empty(s: NoiseSchedule) -> list:
    try:
        return _floats(to_observation_times(s).times)
    except SingularTimeError:
        return []


def schedule_to_dict(s: NoiseSchedule) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "family": s.family,
        "T": s.T,
        "params": _jsonable(s.params),
        "alpha_bar_floor": float(s.alpha_bar_floor),
        "betas": _floats(s.betas),
        "alpha_bars": _floats(s.alpha_bars),
        "observation_times": _times_or_empty(s),
        "clamped_indices": [int(k) for k in s.clamped_steps],
    }


def _schema_check(name: str, document) -> None:
    try:
        schemas.validate(name, document)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScheduleValidationError(f"{name} file invalid at {where}: {exc.message}") from None


def _mismatch(stored, expected, rtol=FILE_RTOL, atol=FILE_ATOL) -> np.ndarray:
    stored = np.asarray(stored, dtype=float)
    expected = np.asarray(expected, dtype=float)
    return np.flatnonzero(~(np.abs(stored - expected) <= atol + rtol * np.abs(expected)))


def schedule_from_dict(doc: Mapping) -> NoiseSchedule:
    """Rebuild a schedule record, checking every column against the betas.

    Raises:
        ScheduleValidationError: schema violation, length mismatch, or a
            value that disagrees with ``cumprod(1 - betas)`` / ``-log(alpha_bar)/2``;
            ``indices`` holds the offending 1-based steps.
    """
    _schema_check("schedule", doc)
    T = doc["T"]
    for key in ("betas", "alpha_bars"):
        if len(doc[key]) != T:
            raise ScheduleValidationError(f"{key} has {len(doc[key])} entries, expected T={T}")
    if doc["observation_times"] and len(doc["observation_times"]) != T:
        raise ScheduleValidationError(f"observation_times has {len(doc['observation_times'])} entries, expected T={T}")
    floor = doc["alpha_bar_floor"]
    rebuilt = from_betas(doc["betas"], floor)
    clamped = tuple(doc["clamped_indices"])
    if clamped != rebuilt.clamped_steps:
        raise ScheduleValidationError(
            f"clamped_indices {list(clamped)} disagree with betas (expected {list(rebuilt.clamped_steps)})",
            set(clamped) ^ set(rebuilt.clamped_steps))
    stored_ab = np.asarray(doc["alpha_bars"], dtype=float)
    keep = ~rebuilt.clamped_mask
    bad = _mismatch(stored_ab[keep], rebuilt.alpha_bars[keep])
    bad_steps = (np.flatnonzero(keep)[bad] + 1).tolist()
    off_floor = np.flatnonzero(~keep & (stored_ab != floor))
    bad_steps += (off_floor + 1).tolist()
    if bad_steps:
        raise ScheduleValidationError(
            f"alpha_bars inconsistent with cumprod(1 - betas) at steps {sorted(bad_steps)}", sorted(bad_steps))
    stored_ab[~keep] = floor
    if doc["observation_times"]:
        bad = _mismatch(doc["observation_times"], -0.5 * np.log(stored_ab))
        if bad.size:
            raise ScheduleValidationError(
                f"observation_times inconsistent with alpha_bars at steps {(bad + 1).tolist()}", bad + 1)
    # zero marks the clamped entries so _assemble records them again
    stored_ab[~keep] = 0.0
    b = _validate_betas(doc["betas"])
    return _assemble(b, stored_ab, floor, doc["family"], doc["params"])


def representation_to_dict(s: NoiseSchedule, representation: str) -> dict:
    if representation not in REPRESENTATIONS:
        raise ScheduleValidationError(f"representation must be one of {REPRESENTATIONS}, got {representation!r}")
    if representation == "betas":
        values = _floats(s.betas)
    elif representation == "alpha-bars":
        values = _floats(s.alpha_bars)
    else:
        values = _floats(to_observation_times(s).times)
    return {
        "format_version": FORMAT_VERSION,
        "representation": representation,
        "T": s.T,
        "alpha_bar_floor": float(s.alpha_bar_floor),
        "values": values,
    }


def representation_from_dict(doc: Mapping) -> NoiseSchedule:
    _schema_check("representation", doc)
    if len(doc["values"]) != doc["T"]:
        raise ScheduleValidationError(f"values has {len(doc['values'])} entries, expected T={doc['T']}")
    floor = doc["alpha_bar_floor"]
    rep = doc["representation"]
    if rep == "betas":
        return from_betas(doc["values"], floor)
    if rep == "alpha-bars":
        return from_alpha_bars(doc["values"], floor)
    return from_observation_times(doc["values"], floor)


def _fmt(x: float) -> str:
    return repr(float(x))


def schedule_to_csv(s: NoiseSchedule) -> str:
    """Table ``k,beta,alpha,alpha_bar,t`` with one row per step."""
    times = _times_or_empty(s) or [math.inf] * s.T
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for i in range(s.T):
        w.writerow([i + 1, _fmt(s.betas[i]), _fmt(s.alphas[i]), _fmt(s.alpha_bars[i]), _fmt(times[i])])
    return buf.getvalue()


def schedule_from_csv(text: str, floor: float = DEFAULT_FLOOR) -> NoiseSchedule:
    """Parse a CSV table; betas are authoritative and the other columns are checked."""
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
        raise ScheduleValidationError(f"CSV header must be {','.join(CSV_HEADER)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ScheduleValidationError("CSV has no rows")
    try:
        table = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise ScheduleValidationError(f"CSV contains a non-numeric cell: {exc}") from None
    if table.shape[1] != len(CSV_HEADER):
        raise ScheduleValidationError("every CSV row needs five columns")
    k = table[:, 0]
    if not np.array_equal(k, np.arange(1, len(k) + 1)):
        raise ScheduleValidationError("CSV k column must be 1..T")
    s = from_betas(table[:, 1], floor)
    bad = _mismatch(table[:, 2], s.alphas)
    keep = ~s.clamped_mask
    bad_ab = np.flatnonzero(keep)[_mismatch(table[keep, 3], s.alpha_bars[keep])]
    bad = np.union1d(bad, bad_ab)
    if bad.size:
        raise ScheduleValidationError(f"CSV columns inconsistent with beta at steps {(bad + 1).tolist()}", bad + 1)
    keep &= np.isfinite(table[:, 4])
    bad_t = np.flatnonzero(keep)[_mismatch(table[keep, 4], -0.5 * np.log(s.alpha_bars[keep]))]
    if bad_t.size:
        raise ScheduleValidationError(f"CSV t column inconsistent at steps {(bad_t + 1).tolist()}", bad_t + 1)
    return s


def loads_schedule(text: str, floor: Optional[float] = None) -> NoiseSchedule:
    """Parse any supported schedule text: full JSON record, representation JSON, or CSV.

    ``floor`` only applies to CSV input, which does not carry one.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc: Any = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScheduleValidationError(f"malformed JSON: {exc}") from None
        if "representation" in doc:
            return representation_from_dict(doc)
        return schedule_from_dict(doc)
    return schedule_from_csv(text, DEFAULT_FLOOR if floor is None else floor)


def load_schedule(path: str, floor: Optional[float] = None) -> NoiseSchedule:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_schedule(fh.read(), floor)
