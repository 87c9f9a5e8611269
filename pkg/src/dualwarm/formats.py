"""Plain-text file formats.

Instance::

    n_left n_right m
    i j c            (m lines, 0-based indices)

A b-instance appends two lines: the left demands, then the right demands.

Dual::

    n_left n_right
    y                (n_left + n_right lines, left block first)
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import TextIO

import numpy as np

from dualwarm.graph import BipartiteInstance, DualVector


class FormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def _ints(path, lineno: int, text: str, count: int | None = None) -> list[int]:
    try:
        vals = [int(tok) for tok in text.split()]
    except ValueError:
        raise FormatError(path, lineno, f"expected integers, got {text.strip()!r}") from None
    if count is not None and len(vals) != count:
        raise FormatError(path, lineno, f"expected {count} integers, got {len(vals)}")
    return vals


def _content_lines(fh: TextIO):
    for lineno, line in enumerate(fh, 1):
        if line.strip() and not line.lstrip().startswith("#"):
            yield lineno, line


def write_instance(
    path: str | os.PathLike,
    inst: BipartiteInstance,
    b_left=None,
    b_right=None,
) -> None:
    lines = [f"{inst.n_left} {inst.n_right} {inst.n_edges}"]
    lines += [f"{i} {j} {c}" for i, j, c in inst.edges()]
    if b_left is not None:
        lines.append(" ".join(str(int(v)) for v in b_left))
        lines.append(" ".join(str(int(v)) for v in b_right))
    Path(path).write_text("\n".join(lines) + "\n")


def _read(path) -> tuple[BipartiteInstance, list[int] | None, list[int] | None]:
    with open(path) as fh:
        rows = _content_lines(fh)
        try:
            lineno, header = next(rows)
        except StopIteration:
            raise FormatError(path, 1, "empty instance file") from None
        n_left, n_right, m = _ints(path, lineno, header, 3)
        edges = []
        for _ in range(m):
            try:
                lineno, line = next(rows)
            except StopIteration:
                raise FormatError(path, lineno, f"expected {m} edge lines") from None
            edges.append(tuple(_ints(path, lineno, line, 3)))
        rest = list(rows)
    try:
        inst = BipartiteInstance.from_edges(n_left, n_right, edges)
    except ValueError as exc:
        raise FormatError(path, 0, str(exc)) from None
    if not rest:
        return inst, None, None
    if len(rest) != 2:
        raise FormatError(path, rest[0][0], "expected exactly two demand lines")
    b_left = _ints(path, rest[0][0], rest[0][1], n_left)
    b_right = _ints(path, rest[1][0], rest[1][1], n_right)
    return inst, b_left, b_right


def read_instance(path: str | os.PathLike) -> BipartiteInstance:
    return _read(path)[0]


def read_b_instance(path: str | os.PathLike):
    from dualwarm.bmatching import BInstance

    inst, b_left, b_right = _read(path)
    if b_left is None:
        raise FormatError(path, 0, "missing demand lines")
    return BInstance(inst, np.array(b_left), np.array(b_right))


def write_dual(path: str | os.PathLike, y: DualVector) -> None:
    lines = [f"{y.n_left} {y.n_right}"] + [str(int(v)) for v in y.as_array()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_dual(path: str | os.PathLike) -> DualVector:
    with open(path) as fh:
        rows = list(_content_lines(fh))
    if not rows:
        raise FormatError(path, 1, "empty dual file")
    n_left, n_right = _ints(path, rows[0][0], rows[0][1], 2)
    if len(rows) - 1 != n_left + n_right:
        raise FormatError(path, rows[-1][0], f"expected {n_left + n_right} dual values")
    vals = [_ints(path, ln, text, 1)[0] for ln, text in rows[1:]]
    return DualVector.from_array(np.array(vals, dtype=np.int64), n_left)
