"""File formats: JSON-lines counts files, CSV tables and JSON documents.

Counts files hold one JSON object per line::

    {"qwp_r": deg, "hwp_r": deg, "qwp_l": deg, "hwp_l": deg,
     "coincidences": int, "singles_r": int, "singles_l": int,
     "duration_s": float, "window_s": float}

An optional ``"tag"`` string labels the setting (used by the CHSH analysis).
Blank lines and lines starting with ``#`` are skipped.
"""
import csv
import json
import math

import numpy as np

from .coincidences import CountsRecord

REQUIRED_KEYS = ("qwp_r", "hwp_r", "qwp_l", "hwp_l", "coincidences",
                 "singles_r", "singles_l", "duration_s", "window_s")


class CountsFileError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _deg(rad):
    return round(math.degrees(rad), 10) + 0.0


def record_to_json(rec):
    obj = {
        "qwp_r": _deg(rec.qwp_r), "hwp_r": _deg(rec.hwp_r),
        "qwp_l": _deg(rec.qwp_l), "hwp_l": _deg(rec.hwp_l),
        "coincidences": int(rec.coincidences),
        "singles_r": int(rec.singles_r), "singles_l": int(rec.singles_l),
        "duration_s": float(rec.duration), "window_s": float(rec.window),
    }
    if rec.tag:
        obj["tag"] = rec.tag
    return obj


def record_from_json(obj):
    missing = [k for k in REQUIRED_KEYS if k not in obj]
    if missing:
        raise ValueError(f"missing keys {missing}")
    for k in ("coincidences", "singles_r", "singles_l"):
        v = obj[k]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"{k} must be an integer")
    tag = obj.get("tag")
    if tag is not None and not isinstance(tag, str):
        raise ValueError("tag must be a string")
    return CountsRecord(
        math.radians(float(obj["qwp_r"])), math.radians(float(obj["hwp_r"])),
        math.radians(float(obj["qwp_l"])), math.radians(float(obj["hwp_l"])),
        obj["coincidences"], obj["singles_r"], obj["singles_l"],
        float(obj["duration_s"]), float(obj["window_s"]), tag)


def write_counts(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json(rec), sort_keys=True) + "\n")


def read_counts(path):
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                obj = json.loads(text)
                if not isinstance(obj, dict):
                    raise ValueError("expected a JSON object")
                records.append(record_from_json(obj))
            except (ValueError, TypeError) as exc:
                raise CountsFileError(path, lineno, str(exc)) from None
    if not records:
        raise CountsFileError(path, 0, "no records")
    return records


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v


def write_table(path, header, rows, meta, fmt="csv"):
    """Write a table as CSV (comment line, header, rows) or as JSON."""
    if fmt == "json":
        write_json(path, {"meta": meta, "columns": list(header), "rows": list(rows)})
        return
    with open(path, "w", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={meta[k]}" for k in sorted(meta)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
