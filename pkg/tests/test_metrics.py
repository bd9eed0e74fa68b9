import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from dancefuse.data import REST_POSE, MotionSequence, TooShortError, synth_dance_corpus, write_motion
from dancefuse.data.types import L_HAND, R_HAND
from dancefuse.metrics import (
    METRIC_KEYS,
    MetricReport,
    auc_f,
    beat_align,
    dance_beats,
    diversity,
    evaluate_dirs,
    evaluate_motions,
    fid,
    frechet_distance,
    geometric_features,
    kinetic_features,
    knn_predictor,
    mpd,
    pff,
)
from dancefuse.numerics import ContractError, ShapeError

FPS = 60.0


def static(seconds=10.0, fps=FPS):
    return MotionSequence(np.tile(REST_POSE.ravel(), (int(seconds * fps), 1)), fps)


def linear_joint(speed=1.0, T=120, joint=2, fps=FPS):
    f = np.tile(REST_POSE.ravel(), (T, 1))
    f[:, 3 * joint] += speed * np.arange(T) / fps
    return MotionSequence(f, fps)


# -- kinetic / geometric ---------------------------------------------------------------------


def test_kinetic_static_zero():
    assert np.array_equal(kinetic_features(static(2)), np.zeros(16))


def test_kinetic_constant_speed():
    k = kinetic_features(linear_joint(1.0, joint=2))
    assert abs(k[2] - 1.0) < 1e-12 and abs(k[8 + 2]) < 1e-12
    assert np.all(np.delete(k, [2, 10]) == 0)


def test_kinetic_resampling_invariance():
    def traj(fps):
        t = np.arange(int(4 * fps)) / fps
        f = np.tile(REST_POSE.ravel(), (len(t), 1))
        f[:, 6] += 0.3 * np.sin(2 * np.pi * 1.3 * t)
        f[:, 1] += 0.1 * np.cos(2 * np.pi * 0.7 * t)
        return MotionSequence(f, fps)

    a, b = kinetic_features(traj(60)), kinetic_features(traj(120))
    nz = a > 1e-9
    assert np.all(np.abs(a[nz] - b[nz]) / a[nz] < 0.01)


def test_kinetic_time_reversal(rng):
    f = np.cumsum(rng.normal(size=(50, 24)) * 0.01, axis=0)
    a = kinetic_features(MotionSequence(f))
    b = kinetic_features(MotionSequence(f[::-1].copy()))
    assert np.allclose(a, b, atol=1e-12)


def test_kinetic_too_short():
    with pytest.raises(TooShortError):
        kinetic_features(MotionSequence(np.zeros((1, 24))))


def test_geometric_rest_pose():
    # feet sit on the ground, hands are 0.5 m apart and nothing moves, so no
    # relation holds strictly on any frame
    assert np.array_equal(geometric_features(static(1)), np.zeros(8))


def test_geometric_hands_touching():
    f = np.tile(REST_POSE.ravel(), (30, 1))
    f[:, 3 * R_HAND:3 * R_HAND + 3] = f[:, 3 * L_HAND:3 * L_HAND + 3]
    assert geometric_features(MotionSequence(f))[2] == 1.0


@given(st.integers(0, 10_000))
def test_geometric_in_unit_interval(seed):
    f = np.random.default_rng(seed).normal(size=(20, 24))
    g = geometric_features(MotionSequence(f))
    assert g.shape == (8,) and np.all((g >= 0) & (g <= 1))


# -- Frechet distance -------------------------------------------------------------------------


def _fid_oracle(a, b):
    mu_a, mu_b = a.mean(0), b.mean(0)
    ca, cb = np.cov(a, rowvar=False), np.cov(b, rowvar=False)
    covmean = scipy.linalg.sqrtm(ca @ cb).real
    return float(((mu_a - mu_b) ** 2).sum() + np.trace(ca + cb - 2 * covmean))


def test_fid_self_zero(rng):
    a = rng.normal(size=(50, 6))
    assert abs(fid(a, a)) < 1e-9


def test_fid_population_closed_form():
    assert abs(frechet_distance([0.0], [[1.0]], [1.0], [[1.0]]) - 1.0) < 1e-12
    # (mu diff)^2 + (sigma_a - sigma_b)^2 in one dimension
    assert abs(frechet_distance([0.0], [[4.0]], [0.0], [[1.0]]) - 1.0) < 1e-12


def test_fid_matches_scipy(rng):
    a = rng.normal(size=(200, 5)) @ rng.normal(size=(5, 5))
    b = rng.normal(1.0, 2.0, size=(150, 5))
    assert abs(fid(a, b) - _fid_oracle(a, b)) < 1e-6 * max(1.0, _fid_oracle(a, b))


def test_fid_monte_carlo():
    r = np.random.default_rng(0)
    assert abs(fid(r.normal(0, 1, size=(5000, 1)), r.normal(1, 1, size=(5000, 1))) - 1.0) < 0.05


@given(st.integers(0, 10_000))
def test_fid_symmetric_nonnegative(seed):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=(20, 3)), r.normal(size=(25, 3)) * 2
    assert fid(a, b) >= 0 and abs(fid(a, b) - fid(b, a)) < 1e-9


def test_fid_errors():
    with pytest.raises(ShapeError):
        fid(np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        fid(np.zeros((1, 2)), np.zeros((3, 2)))


def test_fid_rejects_clearly_indefinite():
    with pytest.raises(FloatingPointError):
        frechet_distance([0, 0], [[1, 0], [0, -1]], [0, 0], np.eye(2))


# -- diversity --------------------------------------------------------------------------------


def test_diversity_identical():
    assert diversity(np.ones((5, 3))) == 0.0


def test_diversity_single_pair():
    assert diversity([[0.0, 0.0], [3.0, 0.0]]) == 3.0


@given(st.permutations(list(range(6))))
def test_diversity_permutation(perm):
    x = np.random.default_rng(1).normal(size=(6, 4))
    assert abs(diversity(x) - diversity(x[list(perm)])) < 1e-12


def test_diversity_sampled_pairs_are_distinct(rng):
    x = rng.normal(size=(2, 3))
    assert abs(diversity(x, n_pairs=50, seed=3) - np.linalg.norm(x[0] - x[1])) < 1e-12


# -- beats ---------------------------------------------------------------------------------------


def test_dance_beats_constant_speed():
    assert dance_beats(linear_joint(1.0, T=300)).size == 0


def test_dance_beats_sinusoid_rate():
    f_hz, secs = 1.5, 8.0
    t = np.arange(int(secs * FPS)) / FPS
    fr = np.tile(REST_POSE.ravel(), (len(t), 1))
    fr[:, 6] += 0.3 * np.sin(2 * np.pi * f_hz * t)
    beats = dance_beats(MotionSequence(fr))
    assert abs(len(beats) / secs - 2 * f_hz) / (2 * f_hz) < 0.1
    assert np.all(np.diff(beats) > 0)


def test_beat_align_coincident():
    b = [1.0, 2.0, 3.5]
    assert beat_align(b, b) == 1.0


def test_beat_align_offset():
    assert abs(beat_align([10.0], [13.0], sigma=3) - np.exp(-0.5)) < 1e-12


def test_beat_align_empty():
    assert beat_align([1.0], []) == 0.0
    with pytest.raises(ValueError):
        beat_align([], [1.0])


@given(st.lists(st.floats(0, 100), min_size=1, max_size=8), st.lists(st.floats(0, 100), min_size=1, max_size=8),
       st.lists(st.floats(0, 100), max_size=4), st.floats(-50, 50))
def test_beat_align_properties(music, dance, extra, shift):
    s = beat_align(music, dance)
    assert 0 <= s <= 1
    assert beat_align(music, dance + extra) >= s - 1e-12
    shifted = beat_align(np.add(music, shift), np.add(dance, shift))
    assert abs(shifted - s) < 1e-9


# -- freeze metrics ------------------------------------------------------------------------------


def three_in_ten():
    T = 600
    step = np.full(T - 1, 1.0 / FPS)   # 1 m/s
    step[299:480] = 0.0                # frames 300..479 have zero central difference
    f = np.tile(REST_POSE.ravel(), (T, 1))
    f[:, 0::3] += np.concatenate([[0.0], np.cumsum(step)])[:, None]
    return MotionSequence(f)


def test_pff_static():
    assert pff(static(10)) == 100.0


def test_pff_slow_motion_not_frozen():
    assert pff(linear_joint(0.02, T=600)) == 0.0


def test_pff_three_in_ten_exact():
    assert pff(three_in_ten()) == 30.0


def test_pff_short_run_does_not_count():
    assert pff(three_in_ten(), min_dur=3.01) == 0.0


@given(st.floats(0.0, 0.05), st.floats(0.0, 0.05))
def test_pff_monotone_in_threshold(a, b):
    m = three_in_ten()
    lo, hi = sorted((a, b))
    assert pff(m, lo, 1.0) <= pff(m, hi, 1.0)


def test_auc_static_near_100():
    assert abs(auc_f(static(10)) - 100) < 1


def test_auc_fast_zero():
    assert auc_f(linear_joint(1.0, T=600)) == 0.0


def test_auc_bounded_by_max_pff():
    m = three_in_ten()
    th = np.linspace(0, 0.03, 64)
    assert auc_f(m) <= max(pff(m, v) for v in th) + 1e-12


# -- MPD -------------------------------------------------------------------------------------------


def sine_motion(T=240, seed=0):
    r = np.random.default_rng(seed)
    t = np.arange(T) / FPS
    f = np.tile(REST_POSE.ravel(), (T, 1)) + 0.1 * np.sin(2 * np.pi * r.uniform(0.5, 2, 24) * t[:, None])
    return MotionSequence(f)


def test_mpd_truth_in_oracle():
    m = sine_motion()

    def oracle(past, n):
        return [np.zeros((n, 24)), m.frames[60:60 + n]]

    assert mpd(oracle, m, 0.5, 1.0, 1.5) == 0.0


def test_mpd_constant_offset():
    m = sine_motion()
    assert abs(mpd(lambda p, n: [m.frames[60:60 + n] + 0.25], m, 0.5, 1.0, 1.5) - 0.25) < 1e-12


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=5), st.floats(-1, 1))
def test_mpd_more_hypotheses_never_worse(offsets, extra):
    m = sine_motion()
    base = lambda p, n: [m.frames[60:60 + n] + o for o in offsets]
    more = lambda p, n: base(p, n) + [m.frames[60:60 + n] + extra]
    assert mpd(more, m, 0.5, 1.0, 1.5) <= mpd(base, m, 0.5, 1.0, 1.5)


def test_mpd_wrong_length():
    m = sine_motion()
    with pytest.raises(ContractError):
        mpd(lambda p, n: [np.zeros((n + 1, 24))], m, 0.5, 1.0, 1.5)


def test_knn_contract_and_self_retrieval():
    ref = [sine_motion(seed=s) for s in range(4)]
    oracle = knn_predictor(ref, k=3, past_len=25, future_len=30)
    q = ref[2]
    assert len(oracle(MotionSequence(q.frames[35:60]), 30)) == 3
    assert mpd(oracle, q, 35 / FPS, 60 / FPS, 90 / FPS) < 1e-12


def test_knn_more_neighbours_help():
    ref = [sine_motion(seed=s) for s in range(6)]
    q = sine_motion(seed=99)
    d1 = mpd(knn_predictor(ref, 1, 25, 30), q, 1.0, 25 / FPS + 1.0, 55 / FPS + 1.0)
    d10 = mpd(knn_predictor(ref, 10, 25, 30), q, 1.0, 25 / FPS + 1.0, 55 / FPS + 1.0)
    assert d10 <= d1


def test_knn_insufficient_reference():
    with pytest.raises(ValueError):
        knn_predictor([sine_motion(T=60)], k=10, past_len=25, future_len=30)


# -- report ------------------------------------------------------------------------------------


def test_report_roundtrip():
    r = MetricReport({k: float(i) for i, k in enumerate(METRIC_KEYS)}, {"beat_sigma": 3.0})
    text = r.to_text()
    for k in METRIC_KEYS:
        assert sum(line.startswith(k + "=") for line in text.splitlines()) == 1
    back = MetricReport.parse(text)
    assert back.metrics == r.metrics
    assert r.to_csv().splitlines()[0] == ",".join(METRIC_KEYS)


def test_evaluate_reference_against_itself():
    ref = [it.motion for it in synth_dance_corpus(12, 3)]
    rep = evaluate_motions(ref, ref)
    assert abs(rep.metrics["FID_k"]) < 1e-6 and abs(rep.metrics["FID_g"]) < 1e-6


def test_evaluate_static_dir(tmp_path):
    gen, ref = tmp_path / "gen", tmp_path / "ref"
    gen.mkdir()
    ref.mkdir()
    for i in range(3):
        write_motion(gen / f"s{i}.tmot", static(8))
    for i, it in enumerate(synth_dance_corpus(3, 0)):
        write_motion(ref / f"r{i}.tmot", it.motion)
    rep = evaluate_dirs(gen, ref)
    assert rep.metrics["PFF"] == 100.0 and abs(rep.metrics["AUC_f"] - 100) < 1
    assert set(rep.metrics) == set(METRIC_KEYS)
