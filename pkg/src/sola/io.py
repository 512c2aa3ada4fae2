"""Plain-text data formats and atomic file writes.

Data rows are ``x1,...,xm|y1,...,yd``; review files prefix each row with a
review id (``review_id,x1,...,xm|y1,...,yd``) and ratings files hold
``review_id,aspect,rating`` lines.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .experiments.synthetic import Reviews


class DataFormatError(ValueError):
    """A data file exists but cannot be parsed."""


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _fmt(v: float) -> str:
    return repr(float(v))


def format_rows(X, Y, ids=None) -> str:
    lines = []
    for k, (x, y) in enumerate(zip(X, Y)):
        head = [str(ids[k])] if ids is not None else []
        feats = ",".join(head + [_fmt(v) for v in x])
        lines.append(f"{feats}|{','.join(str(int(v)) for v in y)}")
    return "\n".join(lines) + ("\n" if lines else "")


def _parse_rows(path, with_ids: bool):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"data file not found: {path}")
    ids, X, Y = [], [], []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            left, right = line.split("|")
            parts = left.split(",")
            if with_ids:
                ids.append(int(parts[0]))
                parts = parts[1:]
            X.append([float(v) for v in parts])
            Y.append([int(v) for v in right.split(",")] if right.strip() else [])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{n}: malformed row ({exc})") from exc
    if not X:
        raise DataFormatError(f"{path}: no rows")
    if len({len(x) for x in X}) != 1 or len({len(y) for y in Y}) != 1:
        raise DataFormatError(f"{path}: rows have inconsistent lengths")
    return np.array(ids), np.array(X, dtype=float), np.array(Y, dtype=np.int8)


def read_dataset(path):
    """``(X, Y)`` from a data file."""
    _, X, Y = _parse_rows(path, with_ids=False)
    return X, Y


def write_dataset(path, X, Y) -> None:
    atomic_write(path, format_rows(X, Y))


def format_ratings(ratings: dict) -> str:
    lines = ["review_id,aspect,rating"]
    for rid in sorted(ratings):
        for a, v in enumerate(ratings[rid]):
            lines.append(f"{rid},{a},{int(v)}")
    return "\n".join(lines) + "\n"


def read_ratings(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"ratings file not found: {path}")
    table = {}
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("review_id"):
            continue
        try:
            rid, a, v = (int(t) for t in line.split(","))
        except ValueError as exc:
            raise DataFormatError(f"{path}:{n}: malformed rating ({exc})") from exc
        if v not in (-1, 0, 1):
            raise DataFormatError(f"{path}:{n}: rating must be -1, 0 or 1")
        table.setdefault(rid, {})[a] = v
    out = {}
    for rid, row in table.items():
        n_aspects = max(row) + 1
        if sorted(row) != list(range(n_aspects)):
            raise DataFormatError(f"{path}: review {rid} misses aspects")
        out[rid] = np.array([row[a] for a in range(n_aspects)], dtype=float)
    return out


def write_reviews(sentences_path, ratings_path, reviews: Reviews) -> None:
    atomic_write(sentences_path, format_rows(reviews.X, reviews.Y, reviews.review_ids))
    atomic_write(ratings_path, format_ratings(reviews.ratings))


def read_reviews(sentences_path, ratings_path) -> Reviews:
    ids, X, Y = _parse_rows(sentences_path, with_ids=True)
    return Reviews(ids, X, Y, read_ratings(ratings_path))
