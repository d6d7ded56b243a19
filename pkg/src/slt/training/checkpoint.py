"""SLTK checkpoint files.

Layout (little-endian)::

    b"SLTK" | u32 version | u32 n | JSON (n bytes, UTF-8)
    params section | m section | v section

Each section is ``u32 count`` followed by records of
``u32 name_len | name | u32 rank | u32[rank] extents | f32[prod(extents)]``.
The JSON block holds the model configs, the vocabulary, the training state
and a tag ("best" or "periodic").
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..data.vocab import Vocabulary
from ..errors import FormatError
from ..model import SignTranslationModel
from ..rng import SplitMix64
from ..seq2seq import TransformerConfig
from ..vision import ResNetConfig
from .optim import AdamState

MAGIC = b"SLTK"
VERSION = 1
_U32 = struct.Struct("<I")


@dataclass
class TrainState:
    global_step: int = 0
    epoch: int = 0
    best_dev_ppl: float = float("inf")
    epochs_since_improve: int = 0
    adam: AdamState = field(default_factory=AdamState)

    def to_json(self) -> dict:
        return {"global_step": self.global_step, "epoch": self.epoch,
                "best_dev_ppl": self.best_dev_ppl, "epochs_since_improve": self.epochs_since_improve,
                "adam_step": self.adam.step}


@dataclass
class Checkpoint:
    model: SignTranslationModel
    vocab: Vocabulary
    state: TrainState
    tag: str
    extra: dict


def _write_section(fh, arrays: dict[str, np.ndarray]) -> None:
    fh.write(_U32.pack(len(arrays)))
    for name, arr in arrays.items():
        raw = name.encode("utf-8")
        fh.write(_U32.pack(len(raw)))
        fh.write(raw)
        fh.write(_U32.pack(arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


class _Reader:
    def __init__(self, blob: bytes, name: str):
        self.blob, self.pos, self.name = blob, 0, name

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError(f"{self.name}: truncated at byte {self.pos}")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def section(self) -> dict[str, np.ndarray]:
        out = {}
        for _ in range(self.u32()):
            name = self.take(self.u32()).decode("utf-8")
            rank = self.u32()
            shape = struct.unpack(f"<{rank}I", self.take(4 * rank))
            count = int(np.prod(shape)) if rank else 1
            out[name] = np.frombuffer(self.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
        return out


def save_checkpoint(path: str | os.PathLike, model: SignTranslationModel, vocab: Vocabulary,
                    state: TrainState, tag: str = "periodic", extra: dict | None = None) -> None:
    """Write atomically (temp file, then rename)."""
    meta = {
        "tag": tag,
        "vision": asdict(model.vision_cfg),
        "swm": model.swm,
        "language": asdict(model.lang_cfg),
        "vocab": vocab.to_json(),
        "state": state.to_json(),
        "extra": extra or {},
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(VERSION))
        fh.write(_U32.pack(len(blob)))
        fh.write(blob)
        _write_section(fh, model.state_dict())
        _write_section(fh, state.adam.m)
        _write_section(fh, state.adam.v)
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    r = _Reader(blob, str(path))
    if r.take(4) != MAGIC:
        raise FormatError(f"{path}: not an SLTK checkpoint")
    version = r.u32()
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    try:
        meta = json.loads(r.take(r.u32()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: corrupt config block ({exc})") from None
    params, m, v = r.section(), r.section(), r.section()
    if r.pos != len(blob):
        raise FormatError(f"{path}: {len(blob) - r.pos} trailing bytes")
    vocab = Vocabulary.from_json(meta["vocab"])
    model = SignTranslationModel(ResNetConfig(**meta["vision"]), meta["swm"],
                                 TransformerConfig(**meta["language"]), len(vocab), SplitMix64(0))
    try:
        model.load_state_dict(params)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    s = meta["state"]
    state = TrainState(s["global_step"], s["epoch"], float(s["best_dev_ppl"]), s["epochs_since_improve"],
                       AdamState(s["adam_step"], m, v))
    return Checkpoint(model, vocab, state, meta["tag"], meta.get("extra", {}))
