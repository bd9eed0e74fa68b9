from __future__ import annotations

import re

import numpy as np

from .types import TextTokens

PAD, UNK = 0, 1
MAX_TEXT_LEN = 84

TEMPLATES: dict[str, list[str]] = {
    "jump": [
        "a person jumps up and down",
        "someone jumps in place",
        "a person is keeping jumping",
        "the man jumps high twice",
    ],
    "spin": [
        "a person is spinning with arms spread out",
        "someone spins around in a circle",
        "a person turns around slowly",
        "the woman spins fast on one spot",
    ],
    "walk": [
        "a person walks in a circle",
        "someone walks slowly around",
        "a person is walking forward and back",
        "the man walks around the room",
    ],
    "wave": [
        "a person waves with the right hand",
        "someone waves both arms above the head",
        "a person raises a hand and waves",
        "the woman waves her left hand",
    ],
    "crouch": [
        "a person crouches down and stands up",
        "someone squats low to the ground",
        "a person bends the knees and rises",
        "the man crouches slowly then stands",
    ],
    "kick": [
        "a person kicks with the left leg",
        "someone kicks forward with the right foot",
        "a person does a high kick",
        "the woman kicks fast twice",
    ],
}

_EXTRA_WORDS = ["dances", "music", "beat", "arm", "legs", "quickly", "side", "to", "while", "again"]

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def split_words(s: str) -> list[str]:
    return _TOKEN_RE.findall(s.lower())


def default_vocab() -> dict[str, int]:
    """Closed vocabulary over the synthetic templates; ids 0/1 are PAD/UNK."""
    words = sorted({w for ts in TEMPLATES.values() for t in ts for w in split_words(t)} | set(_EXTRA_WORDS))
    return {w: i + 2 for i, w in enumerate(words)}


def tokenize_text(s: str, vocab: dict[str, int], max_len: int = MAX_TEXT_LEN) -> TextTokens:
    words = split_words(s)[:max_len]
    ids = np.full(max_len, PAD, dtype=np.int64)
    ids[:len(words)] = [vocab.get(w, UNK) for w in words]
    return TextTokens(ids=ids, length=len(words), text=s)
