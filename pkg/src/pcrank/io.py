"""Matrix files, CSV emission and number formatting.

Matrix files are UTF-8 CSV, one matrix row per line.  A cell is a decimal,
a rational ``p/q`` or ``?`` for a missing comparison::

    1, 3, ?
    1/3, 1, 3
    ?, 1/3, 1
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable
from fractions import Fraction
from pathlib import Path

from .core import PCMatrix, validate
from .errors import ParseError, PCError
from .indices import IndexReport

MISSING = "?"

INDEX_CSV_COLUMNS = [
    "n", "missing", "ci", "alpha", "beta", "iid_alpha", "ii_beta",
    "spanning_trees", "tree_index", "compound",
]


def parse_cell(token: str, line: int | None = None, column: int | None = None) -> float | None:
    token = token.strip()
    if token == MISSING:
        return None
    if not token:
        raise ParseError("empty cell", line, column)
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"cannot read {token!r} as a number", line, column) from None
    return float(value)


def parse_matrix_text(text: str) -> PCMatrix:
    grid = []
    line_of_row = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        grid.append([parse_cell(tok, lineno, col) for col, tok in enumerate(row, start=1)])
        line_of_row.append(lineno)
    try:
        return validate(grid)
    except PCError as exc:
        if exc.cell is not None and exc.cell[0] < len(line_of_row):
            r, c = exc.cell
            raise type(exc)(f"line {line_of_row[r]}, column {c + 1}: {exc}", cell=exc.cell) from None
        raise


def parse_matrix_file(path: str | Path) -> PCMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not UTF-8 text") from None
    return parse_matrix_text(text)


def format_matrix(C: PCMatrix) -> str:
    """CSV text for ``C``; ``parse_matrix_text`` reads it back to an equal matrix."""
    lines = []
    for row in C.to_grid():
        lines.append(", ".join(MISSING if v is None else repr(v) for v in row))
    return "\n".join(lines) + "\n"


def write_matrix_file(C: PCMatrix, path: str | Path) -> None:
    Path(path).write_text(format_matrix(C), encoding="utf-8")


def fmt_number(x: float | int | None) -> str:
    """Shortest decimal when it has at most 6 significant digits, else 6 significant digits."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.6g}"


def fmt_csv_float(x: float) -> str:
    # Full precision, stable across platforms.
    return repr(float(x))


def index_csv(rep: IndexReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(INDEX_CSV_COLUMNS)
    d = rep.as_dict()
    writer.writerow([fmt_number(d[c]) for c in INDEX_CSV_COLUMNS])
    return buf.getvalue()


def write_csv(path: str | Path, header: list[str], rows: Iterable[Iterable]) -> int:
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            count += 1
    return count
