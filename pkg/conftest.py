#!/usr/bin/env python3
"""
Project-level pytest configuration and shared fixtures.

This module provides shared fixtures used across multiple test modules:
- write_doc: Writes MapFile documents (models, dicts or raw text) to a temp dir
"""

import json

import pytest
from pydantic import BaseModel

from choi_ladder.mapfile import dump_mapfile


@pytest.fixture
def write_doc(tmp_path):
    """Write a MapFile document and return its path.

    Accepts a document model, a plain dict (serialized as JSON) or raw text,
    so malformed inputs can be written too.

    Returns:
        Callable[[object, str], Path]
    """

    def _write(doc, name="map.json"):
        path = tmp_path / name
        if isinstance(doc, BaseModel):
            path.write_text(dump_mapfile(doc), encoding="utf-8")
        elif isinstance(doc, dict):
            path.write_text(json.dumps(doc), encoding="utf-8")
        else:
            path.write_text(doc, encoding="utf-8")
        return path

    return _write
