"""Small Unicode property helpers shared across modules."""

from __future__ import annotations

import unicodedata

# Unicode White_Space property (PropList.txt). Differs from str.isspace(),
# which also accepts the information separators U+001C..U+001F.
WHITE_SPACE = frozenset(
    chr(c)
    for c in (
        *range(0x09, 0x0E), 0x20, 0x85, 0xA0, 0x1680, *range(0x2000, 0x200B),
        0x2028, 0x2029, 0x202F, 0x205F, 0x3000,
    )
)

STRONG_LTR = frozenset({"L"})
STRONG_RTL = frozenset({"R", "AL"})


def is_white(ch: str) -> bool:
    return ch in WHITE_SPACE


def strip_white(text: str) -> str:
    """Remove every White_Space codepoint, wherever it occurs."""
    return "".join(ch for ch in text if ch not in WHITE_SPACE)


def is_blank(text: str) -> bool:
    return all(ch in WHITE_SPACE for ch in text)


def remove_marks(text: str) -> str:
    """NFD-decompose and drop nonspacing marks (General_Category Mn)."""
    return "".join(ch for ch in unicodedata.normalize("NFD", text) if unicodedata.category(ch) != "Mn")


def strong_directions(text: str) -> set[str]:
    """Return the set of strong directions ('LTR'/'RTL') present in text."""
    dirs = set()
    for ch in text:
        bc = unicodedata.bidirectional(ch)
        if bc in STRONG_LTR:
            dirs.add("LTR")
        elif bc in STRONG_RTL:
            dirs.add("RTL")
    return dirs


def renders_empty(ch: str) -> bool:
    """Characters allowed to produce an inkless glyph: whitespace, marks, format controls."""
    return ch in WHITE_SPACE or unicodedata.category(ch) in ("Mn", "Me", "Cf", "Zs", "Cc")
