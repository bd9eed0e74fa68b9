from .io import (
    FormatError,
    read_audio,
    read_corpus,
    read_motion,
    read_tokens,
    write_audio,
    write_corpus,
    write_motion,
    write_tokens,
)
from .synth import (
    PRIMITIVES,
    SynthConfig,
    corpus_windows,
    synth_action_corpus,
    synth_audio_features,
    synth_dance_corpus,
    window_motion,
)
from .text import MAX_TEXT_LEN, PAD, UNK, default_vocab, tokenize_text
from .types import (
    JOINTS,
    N_JOINTS,
    REST_POSE,
    AudioFeatureSeq,
    Corpus,
    CorpusItem,
    MotionSequence,
    TextTokens,
    TooShortError,
)
