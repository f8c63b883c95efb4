import math

import numpy as np
import pytest
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from egostory.config import EventConfig
from egostory.core import events, synth
from egostory.errors import SegmentationError
from egostory.schemas import FrameRecord, VideoBundle


def hist_bundle(hists) -> VideoBundle:
    frames = [
        FrameRecord(index=i, global_color_hist=[(b, float(c)) for b, c in enumerate(h) if c > 0])
        for i, h in enumerate(hists)
    ]
    return VideoBundle(video_id="hists", fps_effective=1.0, frame_width=640, frame_height=480, frames=frames)


def random_bundle(seed, n=12, bins=6):
    return hist_bundle(synth.make_rng(seed).random((n, bins)) * 100)


def as_sets(evts):
    return sorted(tuple(e.member_frames) for e in evts)


def reference_segments(dm, tau):
    """Complete linkage cut at tau, via scipy."""
    tree = linkage(squareform(dm.d, checks=False), method="complete")
    labels = fcluster(tree, t=tau, criterion="distance")
    groups = {}
    for frame, label in enumerate(labels):
        groups.setdefault(label, []).append(frame)
    return sorted(tuple(g) for g in groups.values())


# 🔹 Frame distance
def test_frame_distance_examples():
    hists = np.array([[5.0, 3.0], [5.0, 3.0], [0.0, 8.0]])
    assert events.frame_distance(0, 0, hists, 10, 1.0) == 0.0
    assert events.frame_distance(0, 1, hists, 10, 1.0) == pytest.approx(0.1)
    assert events.frame_distance(0, 2, hists, 2, 1.0) == 1.0
    expected = 1.0 - 0.8 * math.exp(-events.chi_square(hists[0], hists[2]) / 4.0)
    assert events.frame_distance(0, 2, hists, 10, 4.0) == pytest.approx(expected)


def test_frame_distance_needs_positive_omega():
    with pytest.raises(ValueError):
        events.frame_distance(0, 1, np.ones((2, 2)), 10, 0.0)


def test_distance_matrix_matches_scalar_formula():
    bundle = random_bundle(1, n=9)
    dm = events.build_distance_matrix(bundle, t=5)
    hists = events.frame_histograms(bundle)
    assert dm.n_frames == 9
    np.testing.assert_allclose(dm.d, dm.d.T)
    np.testing.assert_allclose(np.diag(dm.d), 0.0)
    for m in range(9):
        for n in range(9):
            assert dm.d[m, n] == pytest.approx(events.frame_distance(m, n, hists, 5, dm.omega), abs=1e-12)
    assert dm.omega == pytest.approx(dm.chi2[np.triu_indices(9, k=1)].mean())


def test_distance_matrix_needs_two_frames():
    with pytest.raises(SegmentationError):
        events.build_distance_matrix(hist_bundle([[1.0, 2.0]]), t=10)
    with pytest.raises(SegmentationError):
        events.build_distance_matrix(random_bundle(0), t=0)


def test_pairwise_workers_and_blocks_agree():
    hists = synth.make_rng(4).random((30, 5))
    serial = events.pairwise_chi_square(hists)
    np.testing.assert_allclose(events.pairwise_chi_square(hists, workers=2, block=7), serial, rtol=0, atol=1e-12)


# 🔹 Thresholds
def test_chi_square_space_threshold():
    dm = events.build_distance_matrix(random_bundle(2), t=8)
    chi = dm.chi2[np.triu_indices(dm.n_frames, k=1)]
    expected = 1.0 - math.exp(-(chi.mean() + 2.0 * chi.std()) / chi.mean())
    assert events.stopping_threshold(dm, EventConfig()) == pytest.approx(expected)


def test_distance_space_threshold():
    dm = events.build_distance_matrix(random_bundle(3), t=8)
    d = dm.d[np.triu_indices(dm.n_frames, k=1)]
    cfg = EventConfig(threshold_space="d", sigma_multiplier=1.0)
    assert events.stopping_threshold(dm, cfg) == pytest.approx(d.mean() + d.std())


def test_threshold_override():
    dm = events.build_distance_matrix(random_bundle(3), t=8)
    assert events.stopping_threshold(dm, EventConfig(tau_override=0.25)) == 0.25


# 🔹 Segmentation
def test_three_blocks_are_three_events():
    bundle, oracle = synth.generate(synth.three_block_scenario(seed=0))
    dm = events.build_distance_matrix(bundle, t=30)
    evts = events.segment_events(dm, EventConfig(t_window=30))
    assert [e.start for e in evts] == [0, 10, 20]
    assert [(e.start, e.end) for e in evts] == [tuple(b) for b in oracle.event_bounds]
    assert [e.event_id for e in evts] == [0, 1, 2]


def test_single_block_is_one_event():
    bundle, _ = synth.generate(synth.single_block_scenario(seed=1))
    dm = events.build_distance_matrix(bundle, t=30)
    assert dm.omega == 0.0
    evts = events.segment_events(dm, EventConfig(t_window=30))
    assert len(evts) == 1
    assert evts[0].member_frames == list(range(30))


def test_zero_threshold_keeps_singletons():
    bundle, _ = synth.generate(synth.single_block_scenario(seed=1))
    dm = events.build_distance_matrix(bundle, t=30)
    evts = events.segment_events(dm, EventConfig(t_window=30, tau_override=0.0))
    assert len(evts) == 30
    assert all(e.n_frames == 1 for e in evts)


def test_reversing_the_video_mirrors_events():
    bundle = random_bundle(5)
    hists = events.frame_histograms(bundle)
    reversed_bundle = hist_bundle(hists[::-1])
    cfg = EventConfig(t_window=8, threshold_space="d", sigma_multiplier=0.0)
    forward = events.segment_events(events.build_distance_matrix(bundle, 8), cfg)
    backward = events.segment_events(events.build_distance_matrix(reversed_bundle, 8), cfg)
    mirrored = sorted(tuple(sorted(11 - f for f in e.member_frames)) for e in backward)
    assert as_sets(forward) == mirrored


@pytest.mark.parametrize("seed", range(6))
def test_matches_reference_complete_linkage(seed):
    dm = events.build_distance_matrix(random_bundle(seed, n=15), t=6)
    cfg = EventConfig(t_window=6, threshold_space="d", sigma_multiplier=0.0)
    tau = events.stopping_threshold(dm, cfg)
    evts = events.segment_events(dm, cfg)
    assert as_sets(evts) == reference_segments(dm, tau)
    for e in evts:
        block = dm.d[np.ix_(e.member_frames, e.member_frames)]
        assert block.max() <= tau


def test_events_partition_frames():
    dm = events.build_distance_matrix(random_bundle(9, n=20), t=6)
    evts = events.segment_events(dm, EventConfig(threshold_space="d", sigma_multiplier=0.0))
    frames = sorted(f for e in evts for f in e.member_frames)
    assert frames == list(range(20))
    assert [e.start for e in evts] == sorted(e.start for e in evts)
    owner = events.event_of_frame(evts)
    assert all(owner[f] == e.event_id for e in evts for f in e.member_frames)


def test_save_distance_matrix(tmp_path):
    dm = events.build_distance_matrix(random_bundle(6), t=8)
    path = events.save_distance_matrix(dm, tmp_path / "d.npy")
    np.testing.assert_array_equal(np.load(path), dm.d)
