"""CSV formats for bags, labels, predictions and key=value text files.

points CSV:       ``bag_id,x0,...,x{k-1}``, one row per point, any row order
labels CSV:       ``bag_id,y``
predictions CSV:  ``bag_id,y_true,y_pred`` (``y_true`` only when labels are known)

Floats are written with 17 significant digits so files round-trip exactly.
"""
from __future__ import annotations

import csv
import math
from collections import OrderedDict

import numpy as np

from .density import SampleBag


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, path, lineno: int, column: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: column {column!r}: not a number: {text!r}") from None
    if not math.isfinite(val):
        raise DataError(f"{path}:{lineno}: column {column!r}: value must be finite")
    return val


def _parse_id(text: str, path, lineno: int) -> int:
    try:
        val = int(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: bag_id must be a nonnegative integer, got {text!r}") from None
    if val < 0:
        raise DataError(f"{path}:{lineno}: bag_id must be a nonnegative integer, got {val}")
    return val


def read_points(path) -> "OrderedDict[int, SampleBag]":
    """Bags keyed by ``bag_id`` in ascending id order."""
    groups: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path}:1: empty file, expected header bag_id,x0,...")
        header = [h.strip() for h in header]
        k = len(header) - 1
        if header[0] != "bag_id" or k < 1 or header[1:] != [f"x{d}" for d in range(k)]:
            raise DataError(f"{path}:1: bad header {','.join(header)!r}, expected bag_id,x0,...,x{{k-1}}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != k + 1:
                raise DataError(f"{path}:{lineno}: expected {k + 1} fields, got {len(row)}")
            bag_id = _parse_id(row[0].strip(), path, lineno)
            point = [_parse_float(row[d + 1].strip(), path, lineno, header[d + 1]) for d in range(k)]
            groups.setdefault(bag_id, []).append(point)
    if not groups:
        raise DataError(f"{path}: no data rows")
    return OrderedDict((i, SampleBag(np.array(groups[i]))) for i in sorted(groups))


def read_labels(path) -> "OrderedDict[int, float]":
    labels: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or [h.strip() for h in header] != ["bag_id", "y"]:
            raise DataError(f"{path}:1: bad header, expected bag_id,y")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            bag_id = _parse_id(row[0].strip(), path, lineno)
            if bag_id in labels:
                raise DataError(f"{path}:{lineno}: duplicate label for bag_id {bag_id}")
            labels[bag_id] = _parse_float(row[1].strip(), path, lineno, "y")
    return OrderedDict((i, labels[i]) for i in sorted(labels))


def match_labels(bags: dict, labels: dict, path) -> list:
    missing = [i for i in bags if i not in labels]
    if missing:
        raise DataError(f"{path}: missing label for bag_id {missing[0]}"
                        + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
    return [labels[i] for i in bags]


def write_points(path, bags, ids=None) -> None:
    ids = list(range(len(bags))) if ids is None else list(ids)
    k = bags[0].k
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["bag_id"] + [f"x{d}" for d in range(k)]) + "\n")
        for i, bag in zip(ids, bags):
            for p in bag.points:
                fh.write(str(i) + "," + ",".join(fmt(v) for v in p) + "\n")


def write_labels(path, ys, ids=None) -> None:
    ids = list(range(len(ys))) if ids is None else list(ids)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bag_id,y\n")
        for i, y in zip(ids, ys):
            fh.write(f"{i},{fmt(y)}\n")


def write_predictions(path, ids, y_pred, y_true=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if y_true is None:
            fh.write("bag_id,y_pred\n")
            for i, p in zip(ids, y_pred):
                fh.write(f"{i},{fmt(p)}\n")
        else:
            fh.write("bag_id,y_true,y_pred\n")
            for i, t, p in zip(ids, y_true, y_pred):
                fh.write(f"{i},{fmt(t)},{fmt(p)}\n")


def write_kv(path, items: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in items.items():
            fh.write(f"{key}={_kv_value(val)}\n")


def _kv_value(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return fmt(val)
    return str(val)


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep or not key.strip():
                raise DataError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip()] = val.strip()
    return out
