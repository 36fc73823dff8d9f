"""Dual RSK correspondence by column insertion.

A 0/1 matrix ``w`` with ``n`` rows (time steps) and ``N`` columns (particles)
is read row by row. Row ``i`` inserts its column indices ``j`` with
``w[i][j] == 1`` in increasing order; the insertion tableau ``P`` is column
strict with entries in 1..N, and the recording tableau ``Q`` gets the label
``i`` at every newly created cell, which makes it row strict.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .combinatorics import Tableau

STOP = None


class BitMatrix(tuple):
    """Rectangular tuple of tuples with entries 0 or 1."""

    def __new__(cls, rows: Sequence[Sequence[int]]):
        rows = tuple(tuple(int(v) for v in r) for r in rows)
        if rows and len({len(r) for r in rows}) != 1:
            raise ValueError("rows have different lengths")
        if any(v not in (0, 1) for r in rows for v in r):
            raise ValueError("entries must be 0 or 1")
        return super().__new__(cls, rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self), len(self[0]) if self else 0)

    @classmethod
    def from_int(cls, bits: int, n: int, N: int) -> "BitMatrix":
        """Row-major bits, most significant first."""
        flat = [(bits >> (n * N - 1 - k)) & 1 for k in range(n * N)]
        return cls([flat[i * N:(i + 1) * N] for i in range(n)])


def _to_columns(t: Tableau) -> list[list[int]]:
    return [list(c) for c in t.columns()]


def _from_columns(cols: list[list[int]]) -> Tableau:
    height = len(cols[0]) if cols else 0
    rows = [[c[r] for c in cols if len(c) > r] for r in range(height)]
    return Tableau(tuple(tuple(r) for r in rows))


def _insert_into_column(columns: list[list[int]], j: int, x: int):
    """Insert ``x`` into column ``j`` (0-based) in place.

    If every entry is smaller than ``x`` it is appended and ``STOP`` is
    returned. Otherwise the topmost entry ``>= x`` is replaced by ``x`` and
    returned.
    """
    if j == len(columns):
        columns.append([])
    col = columns[j]
    for r, v in enumerate(col):
        if v >= x:
            col[r] = x
            return v
    if j > 0 and len(col) >= len(columns[j - 1]):
        raise AssertionError("append would break the shape")
    col.append(x)
    return STOP


def _column_insert(columns: list[list[int]], x: int) -> tuple[int, int]:
    """Column-insert ``x`` in place, returning the new cell as (row, col), 0-based."""
    j = 0
    while True:
        bumped = _insert_into_column(columns, j, x)
        if bumped is STOP:
            return len(columns[j]) - 1, j
        x = bumped
        j += 1


@dataclass(frozen=True)
class InsertionOutcome:
    tableau: Tableau
    bumped: int | None  # None is the STOP marker


def insert_into_column(T: Tableau, j: int, x: int) -> InsertionOutcome:
    """Insert ``x`` into column ``j`` (1-based) of a column-strict tableau."""
    cols = _to_columns(T)
    if j < 1 or j > len(cols) + 1:
        raise ValueError(f"column {j} is not adjacent to the diagram")
    if not T.is_column_strict():
        raise ValueError("not a column-strict tableau")
    try:
        bumped = _insert_into_column(cols, j - 1, x)
    except AssertionError as exc:
        raise ValueError(str(exc)) from None
    return InsertionOutcome(_from_columns(cols), bumped)


def column_insert(T: Tableau, x: int) -> Tableau:
    """Column-insert ``x`` (columns 1, 2, ... until an entry is appended)."""
    if not T.is_column_strict():
        raise ValueError("not a column-strict tableau")
    cols = _to_columns(T)
    _column_insert(cols, x)
    return _from_columns(cols)


def drsk_forward(w: Sequence[Sequence[int]], history: bool = False):
    """Return ``(P, Q)``; with ``history`` also the list ``[P(1), ..., P(n)]``."""
    w = BitMatrix(w)
    cols: list[list[int]] = []
    qcols: list[list[int]] = []
    snapshots = []
    for i, row in enumerate(w, 1):
        for j, bit in enumerate(row, 1):
            if bit:
                r, c = _column_insert(cols, j)
                if c == len(qcols):
                    qcols.append([])
                if len(qcols[c]) != r:
                    raise AssertionError("recording tableau out of sync")
                qcols[c].append(i)
                assert _from_columns(qcols).is_row_strict(), "recording tableau lost row strictness"
        snapshots.append(_from_columns([list(c) for c in cols]))
    P, Q = _from_columns(cols), _from_columns(qcols)
    return (P, Q, snapshots) if history else (P, Q)


def reverse_column_bump(columns: list[list[int]], row: int, col: int) -> int:
    """Remove the cell (row, col) from ``columns`` in place and undo the bumps leading to it."""
    column = columns[col]
    if row != len(column) - 1:
        raise ValueError("cell is not at the bottom of its column")
    y = column.pop()
    if not column:
        columns.pop(col)
    for c in range(col - 1, -1, -1):
        column = columns[c]
        # the entry that displaced y is the largest one not exceeding it
        pos = max((r for r, v in enumerate(column) if v <= y), default=None)
        if pos is None:
            raise ValueError("not a valid insertion tableau")
        column[pos], y = y, column[pos]
    return y


def drsk_inverse(P: Tableau, Q: Tableau, n: int | None = None, N: int | None = None) -> BitMatrix:
    """Recover the 0/1 matrix from a pair of equal shape (P column strict, Q row strict)."""
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch {P.shape} vs {Q.shape}")
    if not P.is_column_strict():
        raise ValueError("P is not column strict")
    if not Q.is_row_strict():
        raise ValueError("Q is not row strict")
    n = Q.max_entry() if n is None else n
    N = P.max_entry() if N is None else N
    if Q.max_entry() > n or P.max_entry() > N:
        raise ValueError("entries exceed the matrix dimensions")
    if any(v < 1 for r in P.rows + Q.rows for v in r):
        raise ValueError("entries must be positive")
    pcols, qcols = _to_columns(P), _to_columns(Q)
    w = [[0] * N for _ in range(n)]
    for i in range(n, 0, -1):
        cells = [(r, c) for c, col in enumerate(qcols) for r, v in enumerate(col) if v == i]
        # cells created by one row were added from top to bottom, so undo bottom first
        cells.sort(reverse=True)
        last = None
        for r, c in cells:
            if r != len(qcols[c]) - 1:
                raise ValueError("recording tableau is not a valid chain")
            qcols[c].pop()
            if not qcols[c]:
                qcols.pop(c)
            j = reverse_column_bump(pcols, r, c)
            if last is not None and j >= last:
                raise ValueError("pair does not come from a 0/1 matrix")
            last = j
            w[i - 1][j - 1] = 1
    return BitMatrix(w)


def left_edge_update(edge: Sequence[int], row: Sequence[int]) -> tuple[int, ...]:
    """Left edge of P after inserting one more row of ``w``.

    Level k gains w_k only if level k-1 (already updated) is strictly ahead
    of it; levels are processed in order k = 1, 2, ... .
    """
    out = []
    ahead = None  # level 0 is infinitely far ahead
    for e, w in zip(edge, row):
        new = e + w if ahead is None or ahead > e else e
        out.append(new)
        ahead = new
    return tuple(out)
