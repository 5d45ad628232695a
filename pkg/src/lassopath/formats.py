"""Instance file formats: Matrix Market (array and coordinate, real,
general) as the canonical matrix format, CSV rows for convenience, and
vectors as plain floats one per line or comma-separated.

Parsers track line and column positions so malformed files come back with a
usable location.
"""

from __future__ import annotations

import numpy as np


class ParseError(ValueError):
    """Malformed input file; carries 1-based line and column positions."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {col}" if col is not None else "") + ")"
        super().__init__(message + where)


def _float_token(token, lineno, col):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", line=lineno, col=col) from None


def _token_col(line, index):
    """1-based column of the index-th whitespace token of a line."""
    pos = 0
    for _ in range(index):
        while pos < len(line) and line[pos].isspace():
            pos += 1
        while pos < len(line) and not line[pos].isspace():
            pos += 1
    while pos < len(line) and line[pos].isspace():
        pos += 1
    return pos + 1


def _parse_matrix_market(lines):
    header = lines[0][1].split()
    if len(header) < 4 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
        raise ParseError("malformed Matrix Market header", line=lines[0][0])
    layout, field_kind = header[2].lower(), header[3].lower()
    symmetry = header[4].lower() if len(header) > 4 else "general"
    if layout not in ("array", "coordinate"):
        raise ParseError(f"unsupported Matrix Market layout {layout!r}", line=lines[0][0])
    if field_kind not in ("real", "integer"):
        raise ParseError(f"unsupported Matrix Market field {field_kind!r}", line=lines[0][0])
    if symmetry != "general":
        raise ParseError(f"unsupported Matrix Market symmetry {symmetry!r}", line=lines[0][0])

    body = [(no, text) for no, text in lines[1:] if not text.lstrip().startswith("%")]
    body = [(no, text) for no, text in body if text.strip()]
    if not body:
        raise ParseError("missing size line", line=lines[0][0])
    size_no, size_line = body[0]
    size_tokens = size_line.split()
    expected = 2 if layout == "array" else 3
    if len(size_tokens) != expected:
        raise ParseError(
            f"size line must have {expected} integers", line=size_no, col=1
        )
    try:
        dims = [int(tok) for tok in size_tokens]
    except ValueError:
        raise ParseError("size line must contain integers", line=size_no, col=1) from None
    m, n = dims[0], dims[1]
    if m < 1 or n < 1:
        raise ParseError(f"matrix dimensions must be positive, got {m}x{n}", line=size_no)

    entries = body[1:]
    A = np.zeros((m, n))
    if layout == "array":
        values = []
        for no, text in entries:
            for k, tok in enumerate(text.split()):
                values.append(_float_token(tok, no, _token_col(text, k)))
        if len(values) != m * n:
            raise ParseError(
                f"expected {m * n} entries for a {m}x{n} array, found {len(values)}",
                line=entries[-1][0] if entries else size_no,
            )
        A = np.asarray(values).reshape((n, m)).T  # column-major storage
    else:
        nnz = dims[2]
        if len(entries) != nnz:
            raise ParseError(
                f"expected {nnz} coordinate entries, found {len(entries)}",
                line=entries[-1][0] if entries else size_no,
            )
        for no, text in entries:
            toks = text.split()
            if len(toks) != 3:
                raise ParseError("coordinate entries need 'i j value'", line=no, col=1)
            try:
                i, j = int(toks[0]), int(toks[1])
            except ValueError:
                raise ParseError("coordinate indices must be integers", line=no, col=1) from None
            if not (1 <= i <= m and 1 <= j <= n):
                raise ParseError(f"coordinate ({i}, {j}) out of range", line=no, col=1)
            A[i - 1, j - 1] = _float_token(toks[2], no, _token_col(text, 2))
    return A


def _parse_csv_matrix(lines):
    rows = []
    width = None
    for no, text in lines:
        cells = text.split(",")
        row = []
        col = 1
        for cell in cells:
            row.append(_float_token(cell.strip(), no, col))
            col += len(cell) + 1
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(
                f"row has {len(row)} fields, expected {width}", line=no, col=1
            )
        rows.append(row)
    return np.asarray(rows)


def _numbered_lines(text):
    return [
        (no, line)
        for no, line in enumerate(text.splitlines(), start=1)
        if line.strip()
    ]


def parse_matrix(text: str) -> np.ndarray:
    """Parse matrix text, sniffing Matrix Market vs CSV from the header."""
    lines = _numbered_lines(text)
    if not lines:
        raise ParseError("empty matrix file", line=1)
    first = lines[0][1].lstrip()
    if first.startswith("%%MatrixMarket") or first.lower().startswith("%%matrixmarket"):
        return _parse_matrix_market(lines)
    if "," in first:
        return _parse_csv_matrix(lines)
    raise ParseError(
        "unrecognized matrix format: expected a Matrix Market header or CSV rows",
        line=lines[0][0],
    )


def parse_vector(text: str) -> np.ndarray:
    """Parse a vector given as floats one per line or comma-separated."""
    values = []
    lines = _numbered_lines(text)
    if not lines:
        raise ParseError("empty vector file", line=1)
    for no, line in lines:
        if line.lstrip().startswith(("%", "#")):
            continue
        col = 1
        for cell in line.split(","):
            stripped = cell.strip()
            if stripped:
                values.append(_float_token(stripped, no, col))
            col += len(cell) + 1
    if not values:
        raise ParseError("vector file contains no numbers", line=lines[-1][0])
    return np.asarray(values)


def read_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def read_vector(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_vector(fh.read())


def format_matrix_market(A, comment: str = "") -> str:
    """Matrix Market array text for a dense matrix (column-major entries)."""
    A = np.asarray(A, dtype=float)
    out = ["%%MatrixMarket matrix array real general"]
    if comment:
        out.extend(f"% {line}" for line in comment.splitlines())
    m, n = A.shape
    out.append(f"{m} {n}")
    out.extend(repr(float(v)) for v in A.T.ravel())
    return "\n".join(out) + "\n"


def write_matrix_market(path, A, comment: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix_market(A, comment))


def write_vector(path, v) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x in np.asarray(v, dtype=float):
            fh.write(repr(float(x)) + "\n")
