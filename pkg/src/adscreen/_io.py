"""JSON-lines and atomic file helpers.

All output files are written atomically (temp file in the target directory,
then rename) so a failing run never leaves a partial artifact behind.
JSON is always emitted with compact separators and a fixed key order, which
is what makes golden-file and manifest byte-comparisons meaningful.
"""
from __future__ import annotations

import json
import os
import tempfile
from typing import Any, Iterable, Iterator


def dumps_record(record: dict) -> str:
    """Serialize one record the way every adscreen file format does."""
    return json.dumps(record, ensure_ascii=True, separators=(",", ":"), allow_nan=False)


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: str, records: Iterable[dict]) -> int:
    """Write records as JSON lines atomically. Returns the record count."""
    lines = [dumps_record(r) for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    return len(lines)


def read_jsonl(path: str) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON line: {exc}") from exc


def write_json(path: str, obj: Any) -> None:
    atomic_write_text(path, json.dumps(obj, ensure_ascii=True, indent=2, sort_keys=False) + "\n")
