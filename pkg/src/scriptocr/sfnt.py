"""Minimal sfnt reader: table directory, ``cmap`` and ``name``.

Only what font indexing needs. Reading the character map directly is much
faster than a full font load when indexing thousands of files.
"""

from __future__ import annotations

import struct
from pathlib import Path

SFNT_TAGS = {b"\x00\x01\x00\x00", b"OTTO", b"true", b"typ1"}

# Same preference order as fontTools' getBestCmap.
CMAP_PREFERENCE = ((3, 10), (0, 6), (0, 4), (3, 1), (0, 3), (0, 2), (0, 1), (0, 0))


class FontParseError(Exception):
    pass


def _u16(data: bytes, off: int) -> int:
    return struct.unpack_from(">H", data, off)[0]


def _u32(data: bytes, off: int) -> int:
    return struct.unpack_from(">I", data, off)[0]


def read_tables(data: bytes) -> dict[str, tuple[int, int]]:
    """Map table tag -> (offset, length)."""
    if len(data) < 12 or data[:4] not in SFNT_TAGS:
        raise FontParseError("not an sfnt font")
    num = _u16(data, 4)
    if 12 + 16 * num > len(data):
        raise FontParseError("truncated table directory")
    tables = {}
    for i in range(num):
        rec = 12 + 16 * i
        tag = data[rec:rec + 4].decode("latin-1")
        off, length = _u32(data, rec + 8), _u32(data, rec + 12)
        if off + length > len(data):
            raise FontParseError(f"table {tag!r} extends past end of file")
        tables[tag] = (off, length)
    return tables


def _fmt0(d: bytes, o: int) -> dict[int, int]:
    return {c: d[o + 6 + c] for c in range(256) if d[o + 6 + c]}


def _fmt4(d: bytes, o: int) -> dict[int, int]:
    segx2 = _u16(d, o + 6)
    ends, starts = o + 14, o + 16 + segx2
    deltas, ranges = starts + segx2, starts + 2 * segx2
    out = {}
    for s in range(segx2 // 2):
        end, start = _u16(d, ends + 2 * s), _u16(d, starts + 2 * s)
        delta = struct.unpack_from(">h", d, deltas + 2 * s)[0]
        ro_pos = ranges + 2 * s
        ro = _u16(d, ro_pos)
        for c in range(start, min(end, 0xFFFE) + 1):
            if ro == 0:
                g = (c + delta) & 0xFFFF
            else:
                gpos = ro_pos + ro + 2 * (c - start)
                g = _u16(d, gpos)
                if g:
                    g = (g + delta) & 0xFFFF
            if g:
                out[c] = g
    return out


def _fmt6(d: bytes, o: int) -> dict[int, int]:
    first, count = _u16(d, o + 6), _u16(d, o + 8)
    out = {}
    for i in range(count):
        g = _u16(d, o + 10 + 2 * i)
        if g:
            out[first + i] = g
    return out


def _fmt12_13(d: bytes, o: int, fmt: int) -> dict[int, int]:
    ngroups = _u32(d, o + 12)
    out = {}
    for i in range(ngroups):
        start, end, gid = struct.unpack_from(">III", d, o + 16 + 12 * i)
        for c in range(start, min(end, 0x10FFFF) + 1):
            g = gid + (c - start) if fmt == 12 else gid
            if g:
                out[c] = g
    return out


def parse_cmap(data: bytes, tables: dict[str, tuple[int, int]] | None = None) -> dict[int, int]:
    """Best Unicode cmap subtable as ``{codepoint: glyph id}``."""
    tables = tables if tables is not None else read_tables(data)
    if "cmap" not in tables:
        raise FontParseError("no cmap table")
    base = tables["cmap"][0]
    subtables = {}
    for i in range(_u16(data, base + 2)):
        plat, enc, off = struct.unpack_from(">HHI", data, base + 4 + 8 * i)
        subtables.setdefault((plat, enc), base + off)
    for key in CMAP_PREFERENCE:
        if key not in subtables:
            continue
        o = subtables[key]
        fmt = _u16(data, o)
        try:
            if fmt == 0:
                return _fmt0(data, o)
            if fmt == 4:
                return _fmt4(data, o)
            if fmt == 6:
                return _fmt6(data, o)
            if fmt in (12, 13):
                return _fmt12_13(data, o, fmt)
        except struct.error as exc:
            raise FontParseError(f"truncated cmap subtable {key}") from exc
        # format 14 and other non-mapping formats fall through
    raise FontParseError("no usable Unicode cmap subtable")


def parse_family(data: bytes, tables: dict[str, tuple[int, int]] | None = None) -> str | None:
    """Typographic family name (nameID 16, else 1), preferring Windows Unicode records."""
    tables = tables if tables is not None else read_tables(data)
    if "name" not in tables:
        return None
    base = tables["name"][0]
    count, str_off = _u16(data, base + 2), base + _u16(data, base + 4)
    found: dict[tuple[int, int], str] = {}
    for i in range(count):
        plat, enc, lang, nid, length, off = struct.unpack_from(">6H", data, base + 6 + 12 * i)
        if nid not in (1, 16):
            continue
        raw = data[str_off + off:str_off + off + length]
        if plat == 3 or plat == 0:
            text = raw.decode("utf-16-be", errors="replace")
            rank = 0 if (plat == 3 and lang == 0x409) else 1
        elif plat == 1 and enc == 0:
            text = raw.decode("mac_roman", errors="replace")
            rank = 2
        else:
            continue
        key = (0 if nid == 16 else 1, rank)
        found.setdefault(key, text)
    return found[min(found)] if found else None


def read_font(path: str | Path) -> tuple[str | None, dict[int, int]]:
    data = Path(path).read_bytes()
    tables = read_tables(data)
    return parse_family(data, tables), parse_cmap(data, tables)
