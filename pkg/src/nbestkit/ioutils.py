"""Small filesystem helpers."""
from __future__ import annotations

import os
import tempfile


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file in the same directory.

    The target either keeps its old content or gets the complete new
    content; a failure mid-write never leaves a partial file behind.
    """
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
