"""Versioned binary container used to persist indexes.

Layout (all integers little-endian)::

    0       8 bytes   magic  b"LXANNIDX"
    8       uint32    format version (currently 1)
    12      uint32    header length H in bytes
    16      H bytes   UTF-8 JSON header
    16+H    ...       section payloads, concatenated in header order

The header is a JSON object. Its ``"sections"`` entry is a list of
``{"name": str, "length": int}`` records describing the payloads that
follow; their lengths must add up to the remainder of the file exactly.
Every other header key is owned by the index type that wrote the file.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

from .errors import IndexFormatError

MAGIC = b"LXANNIDX"
VERSION = 1
_PREAMBLE = struct.Struct("<8sII")


def encode_container(header: dict, sections: dict[str, bytes]) -> bytes:
    header = dict(header)
    header["sections"] = [{"name": name, "length": len(blob)} for name, blob in sections.items()]
    raw_header = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PREAMBLE.pack(MAGIC, VERSION, len(raw_header)), raw_header]
    parts.extend(sections.values())
    return b"".join(parts)


def decode_container(data: bytes) -> tuple[dict, dict[str, memoryview], dict[str, int]]:
    """Split a container into (header, section payloads, section file offsets)."""
    if len(data) < _PREAMBLE.size:
        raise IndexFormatError("file shorter than the fixed preamble", len(data))
    magic, version, header_len = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic bytes {magic!r}", 0)
    if version != VERSION:
        raise IndexFormatError(f"unsupported format version {version}", 8)
    start = _PREAMBLE.size
    end = start + header_len
    if end > len(data):
        raise IndexFormatError("header extends past end of file", len(data))
    try:
        header = json.loads(bytes(data[start:end]).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        pos = getattr(exc, "pos", None) or getattr(exc, "start", 0)
        raise IndexFormatError(f"malformed JSON header: {exc}", start + pos) from None
    if not isinstance(header, dict) or not isinstance(header.get("sections"), list):
        raise IndexFormatError("header lacks a sections list", start)

    view = memoryview(data)
    sections = {}
    offsets = {}
    offset = end
    for entry in header["sections"]:
        try:
            name, length = entry["name"], int(entry["length"])
        except (KeyError, TypeError, ValueError):
            raise IndexFormatError(f"bad section record {entry!r}", start) from None
        if length < 0 or offset + length > len(data):
            raise IndexFormatError(f"section {name!r} is truncated", offset)
        sections[name] = view[offset:offset + length]
        offsets[name] = offset
        offset += length
    if offset != len(data):
        raise IndexFormatError(f"{len(data) - offset} trailing bytes after last section", offset)
    return header, sections, offsets


def write_container(path, header: dict, sections: dict[str, bytes]) -> int:
    """Write a container atomically and return its size in bytes."""
    path = Path(path)
    blob = encode_container(header, sections)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)
    return len(blob)


def read_container(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_container(data)


class SectionReader:
    """Cursor over one section that reports absolute file offsets on failure."""

    def __init__(self, view: memoryview, base_offset: int, name: str):
        self.view = view
        self.base = base_offset
        self.name = name
        self.pos = 0

    def _need(self, n):
        if self.pos + n > len(self.view):
            raise IndexFormatError(f"section {self.name!r} ended unexpectedly", self.base + self.pos)

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        self._need(size)
        values = struct.unpack_from(fmt, self.view, self.pos)
        self.pos += size
        return values

    def take(self, n: int) -> memoryview:
        self._need(n)
        out = self.view[self.pos:self.pos + n]
        self.pos += n
        return out

    def offset(self) -> int:
        return self.base + self.pos

    def finish(self):
        if self.pos != len(self.view):
            raise IndexFormatError(f"unexpected bytes at end of section {self.name!r}", self.offset())

