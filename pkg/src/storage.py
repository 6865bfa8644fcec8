"""Atomic file writers."""

import logging
import os
import tempfile
from pathlib import Path
from typing import Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes) -> str:
    """Write bytes to path via a temp file in the same directory and a rename.

    Returns:
        The absolute path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {len(data)} bytes to {path}")
    return str(path.absolute())


def atomic_write_text(path: PathLike, text: str) -> str:
    """UTF-8 encode text and write it atomically."""
    return atomic_write_bytes(path, text.encode("utf-8"))
