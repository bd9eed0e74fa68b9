import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dancefuse.checkpoint import load_checkpoint
from dancefuse.data import PAD
from dancefuse.numerics import Tensor, grad_check, make_rng, no_grad
from dancefuse.xmodal import (
    ConfigError,
    MusicExample,
    TextExample,
    XModalConfig,
    XModalModel,
    XmTrainConfig,
    attention,
    branch_loss,
    causal_mask,
    load_xmodal,
    make_batch,
    save_xmodal_checkpoint,
    sinusoidal_positions,
    teacher_forced_accuracy,
    train_xmodal,
)

TINY = XModalConfig(K=12, audio_dim=4, vocab_size=20, hidden=8, heads=2, layers=2, ff_mult=2, max_len=96)


@pytest.fixture(scope="module")
def model():
    return XModalModel(TINY, seed=0)


def text_ids(words):
    ids = np.zeros(84, dtype=np.int64)
    ids[:len(words)] = words
    return ids


def examples(n=3, seed=0, length=10):
    r = np.random.default_rng(seed)
    music = [MusicExample(r.normal(size=(length, 4)), r.integers(0, 12, length)) for _ in range(n)]
    text = [TextExample(text_ids(r.integers(2, 20, 5)), r.integers(0, 12, length)) for _ in range(n)]
    return music, text


# -- building blocks --------------------------------------------------------------------------


def test_config_heads_must_divide():
    with pytest.raises(ConfigError):
        XModalModel(XModalConfig(K=4, hidden=10, heads=3, layers=1))
    with pytest.raises(ConfigError):
        XModalModel(XModalConfig(K=4, hidden=8, heads=2, layers=1, max_len=40))


def test_causal_mask():
    m = causal_mask(3)
    assert np.array_equal(m == 0, np.tril(np.ones((3, 3), bool)))
    assert np.all(np.isneginf(m[np.triu_indices(3, 1)]))


def test_sinusoidal_positions():
    pe = sinusoidal_positions(5, 6)
    assert np.allclose(pe[0], [0, 1, 0, 1, 0, 1])
    assert np.allclose(pe[3, 0], np.sin(3)) and np.allclose(pe[3, 1], np.cos(3))
    assert np.allclose(pe[2, 2], np.sin(2 / 10000 ** (2 / 6)))


def test_attention_matches_loop(rng):
    q, k, v = rng.normal(size=(3, 4)), rng.normal(size=(5, 4)), rng.normal(size=(5, 2))
    out = attention(Tensor(q), Tensor(k), Tensor(v)).data
    for i in range(3):
        s = np.array([q[i] @ k[j] / 2.0 for j in range(5)])
        w = np.exp(s - s.max()) / np.exp(s - s.max()).sum()
        assert np.allclose(out[i], w @ v)


def test_attention_grad_check(rng):
    mask = causal_mask(4)
    f = lambda q, k, v: (attention(q, k, v, mask) ** 2).sum()
    assert grad_check(f, [rng.normal(size=(4, 3)), rng.normal(size=(4, 3)), rng.normal(size=(4, 3))]) < 1e-4


def test_shared_decoder_single_parameter_set(model):
    dec = [k for k in model.params if k.startswith("dec.")]
    assert all(not k.startswith(("dec_music", "dec_text")) for k in model.params)
    assert "dec.block0.cross.q.w" in dec and model.params["dec.embed"].shape == (TINY.K + 1, 8)
    assert model.params["dec.head.w"].shape == (8, TINY.K)


def test_decoder_token_range(model):
    cond = model.encode_audio(np.zeros((3, 4)))
    with pytest.raises(IndexError):
        model.decoder_forward([TINY.K + 1], cond)


def test_audio_width_checked(model):
    with pytest.raises(ValueError):
        model.encode_audio(np.zeros((3, 5)))


# -- causality and masking ---------------------------------------------------------------------


@given(st.integers(0, 10_000), st.integers(1, 15))
def test_causality(seed, cut):
    m = XModalModel(TINY, seed=1)
    r = np.random.default_rng(seed)
    cond = m.encode_audio(r.normal(size=(16, 4)))
    a = r.integers(0, TINY.K + 1, 16)
    b = a.copy()
    b[cut:] = r.integers(0, TINY.K + 1, 16 - cut)
    with no_grad():
        la = m.decoder_forward(a, cond).data[0, :cut]
        lb = m.decoder_forward(b, cond).data[0, :cut]
    assert np.array_equal(la, lb)


def test_text_pad_rows_do_not_leak(model):
    ids = text_ids([3, 4, 5])
    cond, valid = model.encode_text(ids)
    ref = model.decoder_forward([TINY.bos, 1, 2], cond, valid).data
    saved = model.params["text_enc.embed"].data.copy()
    try:
        model.params["text_enc.embed"].data[PAD] += 5.0
        cond2, valid2 = model.encode_text(ids)
        out = model.decoder_forward([TINY.bos, 1, 2], cond2, valid2).data
    finally:
        model.params["text_enc.embed"].data = saved
    assert np.allclose(out, ref, atol=1e-12)


def test_all_pad_text_is_finite_and_ignores_encoder(model):
    cond, valid = model.encode_text(np.zeros(84, dtype=np.int64))
    assert not valid.any()
    out = model.decoder_forward([TINY.bos, 3], cond, valid).data
    assert np.all(np.isfinite(out))
    out2 = model.decoder_forward([TINY.bos, 3], Tensor(np.random.default_rng(0).normal(size=cond.shape)), valid).data
    assert np.array_equal(out, out2)


# -- batching ----------------------------------------------------------------------------------


def test_make_batch_teacher_forcing():
    music = [MusicExample(np.arange(5.0)[:, None] * np.ones((1, 4)), np.arange(5)),
             MusicExample(np.ones((3, 4)), np.array([7, 8, 9]))]
    inputs, targets, mask, cond, valid = make_batch("music", music, np.array([0, 1]), 96, 12, make_rng(0))
    assert inputs.tolist() == [[12, 0, 1, 2, 3], [12, 7, 8, 9, 0]]
    assert mask.sum(1).tolist() == [5, 3] and np.array_equal(valid, mask)
    assert targets[1, :3].tolist() == [7, 8, 9]
    assert cond.shape == (2, 5, 4) and np.all(cond[1, 3:] == 0)


def test_make_batch_crop_keeps_alignment():
    T = 50
    music = [MusicExample(np.arange(T, dtype=float)[:, None] * np.ones((1, 4)), np.arange(T) % 12)]
    for s in range(5):
        _, targets, mask, cond, _ = make_batch("music", music, np.array([0]), 16, 12, make_rng(s))
        assert targets.shape == (1, 16) and mask.all()
        assert np.array_equal(cond[0, :, 0].astype(int) % 12, targets[0])


def test_make_batch_text_mask():
    text = [TextExample(text_ids([2, 3]), np.array([1, 2, 3]))]
    *_, cond, valid = make_batch("text", text, np.array([0]), 96, 12, make_rng(0))
    assert cond.shape == (1, 84) and valid[0].sum() == 2


def test_padding_does_not_change_loss():
    music, _ = examples(2)
    music[1] = MusicExample(music[1].audio[:4], music[1].tokens[:4])
    m = XModalModel(TINY, seed=0)
    with no_grad():
        alone = branch_loss(m, "music", make_batch("music", music, np.array([1]), 96, 12, make_rng(0))).item()
        pair = branch_loss(m, "music", make_batch("music", music, np.array([0, 1]), 96, 12, make_rng(0)))
        first = branch_loss(m, "music", make_batch("music", music, np.array([0]), 96, 12, make_rng(0))).item()
    # token-weighted mean of the two per-example means
    assert abs(pair.item() - (10 * first + 4 * alone) / 14) < 1e-10


# -- training ---------------------------------------------------------------------------------


def test_training_alternates_branches():
    music, text = examples()
    res = train_xmodal(music, text, TINY, XmTrainConfig(lr=1e-3, batch_size=2, steps=6))
    assert [r["branch"] for r in res.log_rows] == ["music", "text"] * 3
    assert res.train_usage.sum() == 60


def test_zero_weights_freeze_parameters():
    music, text = examples()
    res = train_xmodal(music, text, TINY, XmTrainConfig(lr=1e-2, steps=4, music_weight=0, text_weight=0))
    fresh = XModalModel(TINY, seed=0)
    for k, p in res.model.params.items():
        assert np.array_equal(p.data, fresh.params[k].data)
    assert all(np.isfinite(r["loss"]) for r in res.log_rows)


def test_text_weight_zero_only_music_updates():
    music, text = examples()
    res = train_xmodal(music, text, TINY, XmTrainConfig(lr=1e-2, steps=2, text_weight=0))
    fresh = XModalModel(TINY, seed=0)
    # only the music step ran an update, so the text encoder is untouched
    assert np.array_equal(res.model.params["text_enc.embed"].data, fresh.params["text_enc.embed"].data)
    assert not np.array_equal(res.model.params["audio_enc.embed.w"].data, fresh.params["audio_enc.embed.w"].data)


@pytest.mark.parametrize("bad", ["empty", "range", "length", "textlen"])
def test_example_validation(bad):
    music, text = examples()
    if bad == "empty":
        text = []
    elif bad == "range":
        music[0] = MusicExample(music[0].audio, np.full(10, 12))
    elif bad == "length":
        music[0] = MusicExample(music[0].audio[:5], music[0].tokens)
    else:
        text[0] = TextExample(np.zeros(10, dtype=np.int64), text[0].tokens)
    with pytest.raises(ConfigError):
        train_xmodal(music, text, TINY, XmTrainConfig(steps=1))


def test_loss_decreases_and_accuracy_bounds():
    music, text = examples(2)
    res = train_xmodal(music, text, TINY, XmTrainConfig(lr=3e-3, batch_size=2, steps=60))
    music_losses = [r["loss"] for r in res.log_rows if r["branch"] == "music"]
    assert music_losses[-1] < music_losses[0]
    acc = teacher_forced_accuracy(res.model, "music", music)
    assert 0.0 <= acc <= 1.0


def test_checkpoint_and_resume(tmp_path):
    music, text = examples()
    hp6 = XmTrainConfig(lr=1e-3, batch_size=2, steps=6, seed=4)
    hp3 = XmTrainConfig(lr=1e-3, batch_size=2, steps=3, seed=4)
    full = train_xmodal(music, text, TINY, hp6, vq_d=8)
    half = train_xmodal(music, text, TINY, hp3, vq_d=8)
    save_xmodal_checkpoint(tmp_path / "x.ckpt", half, hp3)
    hp, _ = load_checkpoint(tmp_path / "x.ckpt")
    assert hp["xm.vq_K"] == "12" and hp["xm.vq_d"] == "8" and hp["train.step"] == "3"
    resumed = train_xmodal(music, text, TINY, hp6, resume=str(tmp_path / "x.ckpt"), vq_d=8)
    for k, p in full.model.params.items():
        assert np.array_equal(p.data, resumed.model.params[k].data), k
    model, _, usage = load_xmodal(tmp_path / "x.ckpt")
    assert np.array_equal(usage, half.train_usage) and model.cfg == TINY
