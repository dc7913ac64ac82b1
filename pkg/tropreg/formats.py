"""Plain-text formats for matrices, orbits, evidence grids and solve reports.

Matrices are written as a header ``maxplus n d`` followed by n lines of d
whitespace-separated tokens, ``-inf`` standing for the bottom element.
Finite values are written with ``repr``, the shortest text that parses back
to the same double. All parse errors carry 1-based line and column numbers.
"""

import math
import re
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from tropreg.errors import NotExtendedRealError, ParseError
from tropreg.maxplus import as_matrix
from tropreg.solvers import SolveReport, TraceRecord
from tropreg.sysid import Orbit, OrbitSource

_TOKEN = re.compile(r"\S+")

_REPORT_FIELDS = ("solver", "seed", "verdict", "residual_2norm", "residual_infnorm", "solution")


def format_float(value) -> str:
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def parse_float(token: str, line: Optional[int] = None, column: Optional[int] = None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"Expected a number, got {token!r}", line, column) from None
    if math.isnan(value) or token.lower() in ("infinity", "+infinity", "-infinity"):
        raise ParseError(f"Unsupported number {token!r}", line, column)
    return value


def _tokens(text: str) -> List[Tuple[int, str]]:
    return [(m.start() + 1, m.group()) for m in _TOKEN.finditer(text)]


class _Lines:
    """Cursor over the non-blank lines of a document, keeping line numbers."""

    def __init__(self, text: str):
        self._lines = [(i + 1, line) for i, line in enumerate(text.splitlines()) if line.strip()]
        self._pos = 0

    def peek(self) -> Optional[Tuple[int, str]]:
        return self._lines[self._pos] if self._pos < len(self._lines) else None

    def next(self, what: str) -> Tuple[int, str]:
        item = self.peek()
        if item is None:
            last = self._lines[-1][0] + 1 if self._lines else 1
            raise ParseError(f"Unexpected end of input, expected {what}", last, 1)
        self._pos += 1
        return item

    def expect_end(self):
        item = self.peek()
        if item is not None:
            raise ParseError("Unexpected trailing content", item[0], 1)


def _header(lines: _Lines, keyword: str, n_fields: int) -> Tuple[int, List[Tuple[int, str]]]:
    lineno, text = lines.next(f"a '{keyword}' header")
    tokens = _tokens(text)
    if tokens[0][1] != keyword:
        raise ParseError(f"Expected header '{keyword}', got {tokens[0][1]!r}", lineno, tokens[0][0])
    if len(tokens) != n_fields + 1:
        raise ParseError(f"Header '{keyword}' takes {n_fields} fields, got {len(tokens) - 1}", lineno, 1)
    return lineno, tokens[1:]


def _parse_count(token: Tuple[int, str], lineno: int, what: str) -> int:
    column, text = token
    if not text.isdigit():
        raise ParseError(f"Expected a nonnegative integer {what}, got {text!r}", lineno, column)
    return int(text)


def _read_rows(lines: _Lines, n_rows: int, n_cols: int, parse) -> List[list]:
    rows = []
    for _ in range(n_rows):
        lineno, text = lines.next(f"a row of {n_cols} entries")
        tokens = _tokens(text)
        if len(tokens) != n_cols:
            raise ParseError(f"Expected {n_cols} entries, got {len(tokens)}", lineno, 1)
        rows.append([parse(token, lineno, column) for column, token in tokens])
    return rows


def _read_matrix(lines: _Lines) -> np.ndarray:
    lineno, (n_tok, d_tok) = _header(lines, "maxplus", 2)
    n = _parse_count(n_tok, lineno, "row count")
    d = _parse_count(d_tok, lineno, "column count")
    rows = _read_rows(lines, n, d, parse_float)
    try:
        return as_matrix(np.array(rows, dtype=np.float64).reshape(n, d))
    except NotExtendedRealError as e:
        raise ParseError(str(e), lineno, 1) from None


def format_matrix(A) -> str:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, np.newaxis]
    lines = [f"maxplus {A.shape[0]} {A.shape[1]}"]
    lines.extend(" ".join(format_float(v) for v in row) for row in A)
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = _Lines(text)
    A = _read_matrix(lines)
    lines.expect_end()
    return A


def parse_matrices(text: str) -> List[np.ndarray]:
    """Read consecutive matrix blocks, stopping at the first line that starts something else."""
    lines = _Lines(text)
    matrices = []
    while lines.peek() is not None and lines.peek()[1].split()[0] == "maxplus":
        matrices.append(_read_matrix(lines))
    return matrices


def parse_vector(text: str) -> np.ndarray:
    """Parse an n x 1 or 1 x n matrix block as a vector."""
    A = parse_matrix(text)
    if A.shape[1] == 1 or A.shape[0] == 1:
        return np.array(A.ravel())
    raise ParseError(f"Expected an n x 1 or 1 x n matrix, got {A.shape[0]} x {A.shape[1]}", 1, 1)


def format_orbit(orbit: Orbit) -> str:
    seed = "none" if orbit.seed is None else str(orbit.seed)
    lines = [f"orbit {orbit.d} {orbit.N} {format_float(orbit.sigma)} {seed}"]
    lines.extend(" ".join(format_float(v) for v in row) for row in orbit.states)
    return "\n".join(lines) + "\n"


def parse_orbit(text: str) -> Orbit:
    lines = _Lines(text)
    lineno, (d_tok, n_tok, sigma_tok, seed_tok) = _header(lines, "orbit", 4)
    d = _parse_count(d_tok, lineno, "dimension")
    N = _parse_count(n_tok, lineno, "number of transitions")
    sigma = parse_float(sigma_tok[1], lineno, sigma_tok[0])
    if seed_tok[1] == "none":
        seed, source = None, OrbitSource.INGESTED.value
    else:
        seed, source = _parse_count(seed_tok, lineno, "seed"), OrbitSource.SIMULATED.value
    rows = _read_rows(lines, d, N + 1, parse_float)
    lines.expect_end()
    states = np.array(rows, dtype=np.float64).reshape(d, N + 1)
    if not np.isfinite(states).all():
        raise ParseError("Orbit states must be finite", lineno, 1)
    states.setflags(write=False)
    return Orbit(states, sigma, seed, source)


def format_evidence(S) -> str:
    S = np.asarray(S)
    lines = [f"evidence {S.shape[0]} {S.shape[1]}"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in S)
    return "\n".join(lines) + "\n"


def _parse_int(token, line, column):
    if not token.isdigit():
        raise ParseError(f"Expected a count, got {token!r}", line, column)
    return int(token)


def parse_evidence(text: str) -> np.ndarray:
    lines = _Lines(text)
    lineno, (r_tok, c_tok) = _header(lines, "evidence", 2)
    rows = _parse_count(r_tok, lineno, "row count")
    cols = _parse_count(c_tok, lineno, "column count")
    grid = _read_rows(lines, rows, cols, _parse_int)
    lines.expect_end()
    return np.array(grid, dtype=np.int64).reshape(rows, cols)


def _format_optional(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format_float(value)


def _format_record(record: TraceRecord) -> str:
    fields = [
        f"step={record.step}",
        f"kind={record.kind}",
        f"pattern={record.pattern}",
        f"residual={format_float(record.residual)}",
        f"r_min={format_float(record.r_min)}",
    ]
    for name in ("admissible", "start", "mu"):
        value = getattr(record, name)
        if value is not None:
            fields.append(f"{name}={_format_optional(value)}")
    return "record " + " ".join(fields)


def format_report(report: SolveReport) -> str:
    lines = [_format_record(record) for record in report.trace]
    lines.append("# summary")
    lines.append(f"solver={report.solver}")
    lines.append(f"seed={_format_optional(report.seed)}")
    lines.append(f"verdict={report.verdict}")
    lines.append(f"residual_2norm={format_float(report.residual_2norm)}")
    lines.append(f"residual_infnorm={format_float(report.residual_infnorm)}")
    lines.append("solution=" + " ".join(format_float(v) for v in report.solution))
    lines.extend(f"{name}={value}" for name, value in report.counters.items())
    return "\n".join(lines) + "\n"


def _key_values(tokens: Sequence[Tuple[int, str]], lineno: int) -> Iterator[Tuple[str, str, int]]:
    for column, token in tokens:
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(f"Expected key=value, got {token!r}", lineno, column)
        yield key, value, column + len(key) + 1


def _parse_bool(value, lineno, column) -> bool:
    if value not in ("true", "false"):
        raise ParseError(f"Expected true or false, got {value!r}", lineno, column)
    return value == "true"


def _parse_record(text: str, lineno: int) -> TraceRecord:
    fields: Dict[str, object] = {}
    for key, value, column in _key_values(_tokens(text)[1:], lineno):
        if key in ("step", "start"):
            fields[key] = _parse_count((column, value), lineno, key)
        elif key in ("kind", "pattern"):
            fields[key] = value
        elif key in ("residual", "r_min", "mu"):
            fields[key] = parse_float(value, lineno, column)
        elif key == "admissible":
            fields[key] = _parse_bool(value, lineno, column)
        else:
            raise ParseError(f"Unknown trace field {key!r}", lineno, column)
    missing = {"step", "kind", "pattern", "residual", "r_min"} - fields.keys()
    if missing:
        raise ParseError(f"Trace record lacks {', '.join(sorted(missing))}", lineno, 1)
    return TraceRecord(**fields)


def parse_report(text: str) -> SolveReport:
    lines = _Lines(text)
    trace = []
    while True:
        lineno, line = lines.next("a '# summary' line")
        if line.strip() == "# summary":
            break
        if not line.startswith("record "):
            raise ParseError("Expected a trace record or '# summary'", lineno, 1)
        trace.append(_parse_record(line, lineno))

    summary: Dict[str, object] = {}
    counters: Dict[str, int] = {}
    while lines.peek() is not None:
        lineno, line = lines.next("a summary field")
        key, sep, value = line.strip().partition("=")
        column = line.index(key) + len(key) + 2
        if not sep:
            raise ParseError(f"Expected key=value, got {line.strip()!r}", lineno, 1)
        if key in ("solver", "verdict"):
            summary[key] = value
        elif key == "seed":
            summary[key] = None if value == "none" else _parse_count((column, value), lineno, "seed")
        elif key in ("residual_2norm", "residual_infnorm"):
            summary[key] = parse_float(value, lineno, column)
        elif key == "solution":
            summary[key] = np.array(
                [parse_float(tok, lineno, column + c - 1) for c, tok in _tokens(value)], dtype=np.float64
            )
        else:
            counters[key] = _parse_int(value, lineno, column)
    missing = set(_REPORT_FIELDS) - summary.keys()
    if missing:
        raise ParseError(f"Summary lacks {', '.join(sorted(missing))}", lineno, 1)
    return SolveReport(trace=tuple(trace), counters=counters, **summary)
