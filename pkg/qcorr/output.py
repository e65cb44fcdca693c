"""CSV and JSON writers; files are written once, atomically, at the end of a command."""
from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from pydantic import BaseModel

from .console import write_stdout_text
from .constants import CURVE_HEADER
from .models import CurveRow

logger = logging.getLogger(__name__)


def format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(value) for value in row])
    return buffer.getvalue()


def render_curve(rows: Iterable[CurveRow]) -> str:
    return render_csv(CURVE_HEADER, ([getattr(row, name) for name in CURVE_HEADER] for row in rows))


def parse_curve(text: str) -> List[CurveRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CURVE_HEADER:
        raise ValueError(f"unexpected curve header {reader.fieldnames}")
    return [CurveRow.model_validate(record) for record in reader]


def render_json(record: BaseModel | Sequence[BaseModel]) -> str:
    if isinstance(record, BaseModel):
        return record.model_dump_json(indent=2)
    return "[\n" + ",\n".join(item.model_dump_json(indent=2) for item in record) + "\n]"


def write_atomic(text: str, path: Path) -> None:
    """Replace ``path`` with ``text`` (UTF-8, LF) via a temporary sibling file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as stream:
            stream.write(text)
        os.replace(temp_name, path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise


def emit(text: str, out: Optional[Path], label: str = "Output") -> None:
    """Write to ``out`` or, when it is ``None``, to stdout."""
    if out is None:
        write_stdout_text(text)
        return
    write_atomic(text, out)
    logger.info("%s written to %s", label, out)
