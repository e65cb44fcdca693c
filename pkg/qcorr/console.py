"""Console output helpers.

Reports may contain non-ASCII symbols; legacy console code pages must not
turn a finished computation into a UnicodeEncodeError.
"""

from __future__ import annotations

import sys


def write_stdout_text(text: str) -> None:
    """Write text to stdout, newline-terminated, backslash-escaping what the console cannot encode."""
    if text is None:
        return

    if not text.endswith("\n"):
        text = f"{text}\n"

    try:
        sys.stdout.write(text)
        return
    except UnicodeEncodeError:
        encoding = getattr(sys.stdout, "encoding", None) or "utf-8"
        sys.stdout.flush()
        sys.stdout.buffer.write(text.encode(encoding, errors="backslashreplace"))
