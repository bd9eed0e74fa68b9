import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dancefuse.data import (
    MAX_TEXT_LEN,
    PAD,
    PRIMITIVES,
    REST_POSE,
    UNK,
    AudioFeatureSeq,
    FormatError,
    MotionSequence,
    TooShortError,
    default_vocab,
    read_audio,
    read_corpus,
    read_motion,
    read_tokens,
    synth_action_corpus,
    synth_audio_features,
    synth_dance_corpus,
    tokenize_text,
    window_motion,
    write_audio,
    write_corpus,
    write_motion,
    write_tokens,
)
from dancefuse.data.synth import SynthConfig, _action_motion, _envelope
from dancefuse.metrics import fid, kinetic_features


@pytest.fixture(scope="module")
def dance():
    return synth_dance_corpus(100, 0)


@pytest.fixture(scope="module")
def action():
    return synth_action_corpus(100, 1)


# -- types ----------------------------------------------------------------------


def test_motion_invariants():
    with pytest.raises(ValueError):
        MotionSequence(np.zeros((4, 5)))
    with pytest.raises(ValueError):
        MotionSequence(np.zeros((4, 6)), fps=0)
    with pytest.raises(ValueError):
        MotionSequence(np.full((4, 6), np.nan))
    m = MotionSequence(np.zeros((120, 24)), 60)
    assert m.duration == 2.0 and m.n_joints == 8 and m.joints().shape == (120, 8, 3)


# -- dance corpus ---------------------------------------------------------------------


def test_dance_deterministic():
    a, b = synth_dance_corpus(1, 5), synth_dance_corpus(1, 5)
    assert np.array_equal(a.items[0].motion.frames, b.items[0].motion.frames)
    assert np.array_equal(a.items[0].audio.features, b.items[0].audio.features)


def test_dance_contract(dance):
    assert len(dance) == 100 and dance.tag == "dance"
    for item in dance:
        assert item.audio is not None and item.text is None
        assert 6.0 <= item.motion.duration <= 12.0
        assert item.audio.rate == SynthConfig().token_rate
        assert item.audio.T == item.motion.T // 8


def test_dance_frequency_matches_tempo(dance):
    # dominant root-relative oscillation frequency vs the labelled tempo
    for item in dance.items[:30]:
        J = item.motion.joints()
        rel = (J[:, 1:] - J[:, :1]).reshape(len(J), -1)
        rel = rel - rel.mean(0)
        n = 8 * len(rel)
        power = (np.abs(np.fft.rfft(rel, n=n, axis=0)) ** 2).sum(1)
        peak = np.fft.rfftfreq(n, 1 / item.motion.fps)[power.argmax()]
        tempo = float(item.label.split("=")[1])
        assert abs(peak - tempo) / tempo < 0.05


def test_dance_beats_follow_tempo(dance):
    for item in dance.items[:20]:
        tempo = float(item.label.split("=")[1])
        beats = np.array(item.audio.beat_times)
        assert np.allclose(np.diff(beats), 1 / tempo, rtol=1e-3)  # label keeps 3 decimals


# -- action corpus -----------------------------------------------------------------------


def test_action_contract(action):
    assert action.tag == "action"
    for item in action:
        assert item.text is not None and item.audio is None
        assert 2.0 <= item.motion.duration <= 10.0
        assert item.text.length > 0
    assert {item.label for item in action} == set(PRIMITIVES)


def test_jump_rises_above_rest():
    rng = np.random.default_rng(0)
    t = np.arange(240) / 60
    joints = _action_motion("jump", t, _envelope(t, 0.2, 3.8), rng, 60.0)
    assert (joints[:, 0, 1] > REST_POSE[0, 1] + 0.01).any()


def test_corpora_distribution_distinct(dance, action):
    kd = [kinetic_features(i.motion) for i in dance]
    ka = [kinetic_features(i.motion) for i in action]
    between = fid(kd, ka)
    within = fid(kd[:50], kd[50:])
    assert between > 3 * within


def test_corpus_generation_is_pure():
    a, b = synth_action_corpus(5, 9), synth_action_corpus(5, 9)
    for x, y in zip(a, b):
        assert np.array_equal(x.motion.frames, y.motion.frames) and x.text.text == y.text.text


# -- windowing ---------------------------------------------------------------------------


def test_window_single():
    m = MotionSequence(np.random.default_rng(0).normal(size=(64, 24)))
    w = window_motion(m, 64, 7)
    assert len(w) == 1 and np.array_equal(w[0].frames, m.frames)


def test_window_count():
    assert len(window_motion(MotionSequence(np.zeros((128, 24))), 64, 16)) == 5


def test_window_too_short():
    with pytest.raises(TooShortError, match="63.*64"):
        window_motion(MotionSequence(np.zeros((63, 24))), 64, 16)


@given(st.integers(64, 300), st.integers(1, 40))
def test_window_formula(T, stride):
    ws = window_motion(MotionSequence(np.zeros((T, 6))), 64, stride)
    assert len(ws) == (T - 64) // stride + 1 and all(w.T == 64 for w in ws)


# -- text ----------------------------------------------------------------------------------


def test_tokenize_empty():
    t = tokenize_text("", default_vocab())
    assert t.length == 0 and np.all(t.ids == PAD) and len(t.ids) == MAX_TEXT_LEN


def test_tokenize_lookup():
    t = tokenize_text("A person jumps.", {"a": 2, "person": 3, "jumps": 4})
    assert t.length == 3 and t.ids[:4].tolist() == [2, 3, 4, 0]


def test_tokenize_unknown_and_truncate():
    t = tokenize_text(" ".join(["zebra"] * 100), default_vocab())
    assert t.length == 84 and np.all(t.ids == UNK)


@given(st.text(max_size=400))
def test_tokenize_invariants(s):
    t = tokenize_text(s, default_vocab())
    assert t.length <= 84 and np.all(t.ids[t.length:] == PAD) and np.all(t.ids[:t.length] != PAD)


def test_vocab_reserved_ids():
    v = default_vocab()
    assert min(v.values()) == 2 and len(set(v.values())) == len(v)


# -- audio ------------------------------------------------------------------------------------


def test_audio_no_beats():
    a = synth_audio_features([], 4.0, 7.5, 0)
    assert np.all(a.features[:, 0] == 0)


def test_audio_beat_rounding():
    a = synth_audio_features([0.5, 1.0], 4.0, 7.5, 0)
    assert np.flatnonzero(a.features[:, 0]).tolist() == [4, 8]


def test_audio_length():
    assert synth_audio_features([], 8.0, 7.5, 0).T == 60


def test_audio_beat_out_of_range():
    with pytest.raises(ValueError):
        synth_audio_features([9.0], 8.0, 7.5, 0)


def test_audio_onset_decays():
    a = synth_audio_features([1.0], 4.0, 7.5, 0).features[:, 1]
    i = 8
    assert a[i] == 1.0 and np.all(np.diff(a[i:]) < 0) and np.all(a[:i] == 0)


# -- file formats ---------------------------------------------------------------------------------


def test_motion_roundtrip(tmp_path):
    m = MotionSequence(np.random.default_rng(0).normal(size=(10, 24)), 60.0)
    write_motion(tmp_path / "m.tmot", m)
    back = read_motion(tmp_path / "m.tmot")
    assert np.array_equal(back.frames, m.frames) and back.fps == 60.0
    assert (tmp_path / "m.tmot").read_text().startswith("TMOT v1 10 24 60.0\n")


def test_audio_roundtrip(tmp_path):
    a = synth_audio_features([0.5, 1.5], 3.0, 7.5, 3)
    write_audio(tmp_path / "a.taud", a)
    back = read_audio(tmp_path / "a.taud")
    assert np.array_equal(back.features, a.features) and back.beat_times == a.beat_times


def test_tokens_roundtrip(tmp_path):
    write_tokens(tmp_path / "t.ttok", [3, 1, 4], 64)
    toks, K = read_tokens(tmp_path / "t.ttok")
    assert toks.tolist() == [3, 1, 4] and K == 64


def test_bad_header(tmp_path):
    (tmp_path / "x.tmot").write_text("NOPE\n")
    with pytest.raises(FormatError):
        read_motion(tmp_path / "x.tmot")


def test_corpus_roundtrip(tmp_path):
    c = synth_action_corpus(3, 2)
    write_corpus(tmp_path / "c", c)
    back = read_corpus(tmp_path / "c")
    assert back.tag == "action" and len(back) == 3
    for x, y in zip(c, back):
        assert np.array_equal(x.motion.frames, y.motion.frames)
        assert np.array_equal(x.text.ids, y.text.ids) and x.label == y.label


def test_corpus_dance_has_audio_paths(tmp_path):
    write_corpus(tmp_path / "d", synth_dance_corpus(2, 0))
    rows = (tmp_path / "d" / "manifest.tsv").read_text().splitlines()[2:]
    assert all(r.split("\t")[1].endswith(".taud") for r in rows)


def test_audio_type_rejects_1d():
    with pytest.raises(ValueError):
        AudioFeatureSeq(np.zeros(5), 7.5)
