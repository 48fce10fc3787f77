"""Flat key-value configuration documents.

A document is either a JSON object or ``key = value`` lines (``#`` starts a
comment).  Values on ``key = value`` lines are decoded as JSON when possible
(``1``, ``0.5``, ``true``, ``null``, ``"text"``) and kept as bare strings
otherwise.
"""
from __future__ import annotations

import json
from pathlib import Path

from .errors import ValidationError


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_flat_document(text: str) -> dict:
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON config: {exc}") from None
        nested = [k for k, v in doc.items() if isinstance(v, dict)]
        if nested:
            raise ValidationError(f"config must be flat; nested keys: {nested}")
        return doc
    doc = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        doc[key.strip()] = parse_value(value)
    return doc


def read_flat_document(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    return parse_flat_document(text)
