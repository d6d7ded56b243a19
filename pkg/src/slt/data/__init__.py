from .batching import Batch, ClipDataset, batch_iter, collate, epoch_plan, pad_targets
from .clipfile import decode_clip, fit_clip, load_clip, read_clip, temporal_indices, write_clip
from .manifest import ClipManifestRecord, build_manifest, ffmpeg_command, read_manifest, write_manifest
from .srt import SubtitleEntry, parse_srt, serialize_srt
from .stats import CorpusStats, corpus_stats, video_stats
from .synth import synth_corpus, synth_pairs
from .text import filter_long, tokenize_german
from .vocab import BOS_ID, EOS_ID, PAD_ID, UNK_ID, Vocabulary, build_vocab

__all__ = [
    "BOS_ID", "Batch", "ClipDataset", "ClipManifestRecord", "CorpusStats", "EOS_ID", "PAD_ID",
    "SubtitleEntry", "UNK_ID", "Vocabulary", "batch_iter", "build_manifest", "build_vocab",
    "collate", "corpus_stats", "decode_clip", "epoch_plan", "ffmpeg_command", "filter_long",
    "fit_clip", "load_clip", "pad_targets", "parse_srt", "read_clip", "read_manifest",
    "serialize_srt", "synth_corpus", "synth_pairs", "temporal_indices", "tokenize_german",
    "video_stats", "write_clip", "write_manifest",
]
