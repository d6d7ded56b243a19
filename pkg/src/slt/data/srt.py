"""SubRip (.srt) reading and writing."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SrtParseError

_TIMING = re.compile(
    r"^\s*(\d+):([0-5]\d):([0-5]\d),(\d{3})\s*-->\s*(\d+):([0-5]\d):([0-5]\d),(\d{3})(?:\s.*)?$"
)


@dataclass(frozen=True)
class SubtitleEntry:
    index: int
    start_ms: int
    end_ms: int
    text: str

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


def _to_ms(h: str, m: str, s: str, ms: str) -> int:
    return ((int(h) * 60 + int(m)) * 60 + int(s)) * 1000 + int(ms)


def format_timestamp(ms: int) -> str:
    h, rem = divmod(int(ms), 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


def parse_srt(content: bytes | str) -> list[SubtitleEntry]:
    """Parse SubRip text; multi-line cue text is joined with single spaces.

    Raises :class:`SrtParseError` (with a 1-based line number) on a
    non-numeric index, a malformed timing line, an empty cue or a cue whose
    end does not come after its start.
    """
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    content = content.lstrip("﻿")
    lines = content.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    entries: list[SubtitleEntry] = []
    i, n = 0, len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        index_line = lines[i].strip()
        if not index_line.isdigit():
            raise SrtParseError(f"expected a numeric cue index, got {index_line!r}", i + 1)
        if i + 1 >= n:
            raise SrtParseError("cue index without a timing line", i + 1)
        m = _TIMING.match(lines[i + 1])
        if not m:
            raise SrtParseError(f"malformed timing line {lines[i + 1]!r}", i + 2)
        start, end = _to_ms(*m.group(1, 2, 3, 4)), _to_ms(*m.group(5, 6, 7, 8))
        if end <= start:
            raise SrtParseError(f"cue ends at {end} ms, not after its start {start} ms", i + 2)
        j = i + 2
        text_lines = []
        while j < n and lines[j].strip():
            text_lines.append(lines[j].strip())
            j += 1
        if not text_lines:
            raise SrtParseError("cue has no text", i + 3)
        entries.append(SubtitleEntry(int(index_line), start, end, " ".join(" ".join(text_lines).split())))
        i = j
    return entries


def serialize_srt(entries: list[SubtitleEntry]) -> str:
    blocks = [
        f"{e.index}\n{format_timestamp(e.start_ms)} --> {format_timestamp(e.end_ms)}\n{e.text}\n"
        for e in entries
    ]
    return "\n".join(blocks)
