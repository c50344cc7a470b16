"""Deterministic file output helpers.

Artifacts are written atomically (temp file in the target directory,
then rename) and contain no timestamps, so rerunning a configuration
reproduces every output byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile


def write_text_atomic(path, text: str):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    """Canonical JSON: sorted keys, stable float repr, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json_atomic(path, obj):
    write_text_atomic(path, dump_json(obj))


def sha256_of_json(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
