"""Subtitle-driven subclipping: annotation manifest and ffmpeg commands."""

from __future__ import annotations

import logging
import os
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import FormatError
from .srt import SubtitleEntry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClipManifestRecord:
    clip_path: str
    sentence: str
    source_video: str
    start_ms: int
    end_ms: int

    @property
    def duration_s(self) -> float:
        return (self.end_ms - self.start_ms) / 1000.0


def ffmpeg_command(video: str, start_ms: int, end_ms: int, clip_path: str) -> str:
    # re-encodes (no stream copy) so cuts land on the requested timestamps
    return (
        f"ffmpeg -i {shlex.quote(str(video))} -ss {start_ms / 1000:.3f} "
        f"-to {end_ms / 1000:.3f} -y {shlex.quote(str(clip_path))}"
    )


def build_manifest(entries: Sequence[SubtitleEntry], video_path: str, video_duration_ms: int,
                   out_dir: str | os.PathLike, clip_ext: str = ".mp4"):
    """One record and one ffmpeg command per subtitle entry inside the video.

    Intervals are clamped to [0, duration]; entries left empty by clamping
    are dropped and counted. Returns (records, commands, dropped).
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    stem = Path(video_path).stem
    records: list[ClipManifestRecord] = []
    commands: list[str] = []
    used: set[str] = set()
    dropped = 0
    for entry in entries:
        start = min(max(entry.start_ms, 0), video_duration_ms)
        end = min(max(entry.end_ms, 0), video_duration_ms)
        if end <= start:
            dropped += 1
            continue
        name = f"{stem}_{entry.index:05d}"
        suffix = 1
        while name in used:
            name = f"{stem}_{entry.index:05d}_{suffix}"
            suffix += 1
        used.add(name)
        clip_path = str(out / (name + clip_ext))
        records.append(ClipManifestRecord(clip_path, entry.text, str(video_path), start, end))
        commands.append(ffmpeg_command(str(video_path), start, end, clip_path))
    if dropped:
        logger.warning("%d subtitle entries lie outside the %d ms video %s", dropped, video_duration_ms, video_path)
    return records, commands, dropped


def _clean_field(text: str) -> str:
    return " ".join(text.replace("\t", " ").split())


def write_manifest(path: str | os.PathLike, records: Iterable[ClipManifestRecord]) -> None:
    """UTF-8 TSV without header: clip_path, sentence, source_video, start_ms, end_ms."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(f"{r.clip_path}\t{_clean_field(r.sentence)}\t{r.source_video}\t{r.start_ms}\t{r.end_ms}\n")


def read_manifest(path: str | os.PathLike) -> list[ClipManifestRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise FormatError(f"{path}:{lineno}: expected 5 tab-separated fields, got {len(fields)}")
            try:
                start, end = int(fields[3]), int(fields[4])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer timestamps") from exc
            records.append(ClipManifestRecord(fields[0], fields[1], fields[2], start, end))
    return records


def run_commands(commands: Iterable[str], check: bool = True) -> int:
    """Execute ffmpeg command strings; returns how many ran."""
    count = 0
    for cmd in commands:
        logger.info("running %s", cmd)
        subprocess.run(shlex.split(cmd), check=check, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
        count += 1
    return count
