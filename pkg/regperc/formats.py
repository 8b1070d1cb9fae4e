"""Plain-text output formats shared by every command.

CSV files always carry a header row; floats use 17 significant digits and
never depend on the locale. Files are written atomically (temp file in the
target directory, then rename).
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence, TextIO, Union

import numpy as np

# a file path, or an open text stream such as sys.stdout
CsvTarget = Union[str, Path, TextIO]


def format_float(x: float) -> str:
    """Locale-independent 17-significant-digit rendering."""
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence], preamble: str | None = None) -> str:
    """Render rows to CSV text with ``\\n`` line endings."""
    buf = io.StringIO()
    if preamble:
        buf.write(preamble.rstrip("\n") + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_text_atomic(path: str | Path, text: str) -> Path:
    """Write text to ``path`` through a temp file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(
    target: CsvTarget,
    header: Sequence[str],
    rows: Iterable[Sequence],
    preamble: str | None = None,
) -> Path | None:
    """Write atomically to a path, or straight to a stream (returns None)."""
    text = render_csv(header, rows, preamble)
    if isinstance(target, (str, Path)):
        return write_text_atomic(target, text)
    target.write(text)
    return None


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV written by this package; ``#`` preamble lines are skipped."""
    with open(path, encoding="utf-8", newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    reader = csv.reader(lines)
    rows = [r for r in reader if r]
    if not rows:
        return [], []
    return rows[0], rows[1:]
