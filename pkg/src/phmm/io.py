"""Plain-text formats for observation, state and side-information sequences."""

import json
from pathlib import Path

import numpy as np

from .side_info import SENTINEL

UNLABELED_TOKEN = "_"


def read_sequence(path) -> np.ndarray:
    """Integers, whitespace separated (normally one per line), or a JSON array."""
    text = Path(path).read_text()
    if text.lstrip().startswith("["):
        values = json.loads(text)
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
            raise ValueError(f"{path}: JSON array must hold integers only")
    else:
        values = text.split()
    try:
        arr = np.array([int(v) for v in values], dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: non-integer token ({exc})") from exc
    if arr.size == 0:
        raise ValueError(f"{path}: empty sequence")
    return arr


def write_sequence(path, values) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in values))


def read_side_info(path) -> np.ndarray:
    """One token per line: a state index, or ``_`` for an unlabeled step."""
    labels = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        token = line.strip()
        if not token:
            continue
        if token == UNLABELED_TOKEN:
            labels.append(SENTINEL)
            continue
        try:
            value = int(token)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: expected a state index or '_', got {token!r}") from None
        if value < 0:
            raise ValueError(f"{path}:{lineno}: negative state index {value}")
        labels.append(value)
    return np.array(labels, dtype=np.int64)


def write_side_info(path, labels) -> None:
    lines = (UNLABELED_TOKEN if v == SENTINEL else str(int(v)) for v in labels)
    Path(path).write_text("".join(f"{line}\n" for line in lines))
