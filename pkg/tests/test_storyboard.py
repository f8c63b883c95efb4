import math
import time
from itertools import combinations

import numpy as np
import pytest

from egostory.config import CueConfig, SummaryConfig
from egostory.core import grouping, importance, storyboard, synth
from egostory.core.cues import extract_cues
from egostory.errors import InstanceTooLargeError, SelectionError
from egostory.schemas import (
    EnergyStats,
    Event,
    EventBlock,
    FrameRecord,
    ObjectCluster,
    PlantedObject,
    RegionRef,
    ReproHeader,
    ScenarioSpec,
    Storyboard,
    TermStats,
)

from conftest import oracle_events, oracle_scores

UNIT = EnergyStats()
HEADER = ReproHeader(package_version="0.0.0", config_hash="test", seed=0)


def candidates(frames, importance, hists=None, omega=1.0):
    frames = np.asarray(frames, dtype=np.int64)
    hists = np.ones((frames.size, 3)) if hists is None else np.asarray(hists, dtype=float)
    return storyboard.FrameCandidates(
        frames=frames,
        importance=np.asarray(importance, dtype=float),
        hists=hists,
        omega=omega,
        event_ids=[None] * frames.size,
        regions=[None] * frames.size,
    )


def random_instance(rng):
    n = int(rng.integers(2, 13))
    k = int(rng.integers(1, min(5, n) + 1))
    frames = np.sort(rng.choice(60, size=n, replace=False))
    cands = candidates(frames, rng.random(n), rng.random((n, 4)) * 10, omega=float(rng.uniform(0.5, 5.0)))
    stats = EnergyStats(
        importance=TermStats(mean=float(rng.random()), std=float(rng.uniform(0.1, 2.0))),
        similarity=TermStats(mean=float(rng.random()), std=float(rng.uniform(0.1, 2.0))),
        spread=TermStats(mean=float(rng.uniform(0, 5)), std=float(rng.uniform(0.5, 3.0))),
    )
    return cands, k, stats


def reference_energy(selection, cands, stats):
    """Term-by-term energy with explicit loops."""
    pos = [int(np.flatnonzero(cands.frames == s)[0]) for s in selection]
    total = 0.0
    for p in pos:
        total += -(cands.importance[p] - stats.importance.mean) / stats.importance.std
    for a, b in zip(pos, pos[1:]):
        chi = 0.0
        for x, y in zip(cands.hists[a], cands.hists[b]):
            if x + y > 0:
                chi += (x - y) ** 2 / (x + y)
        similarity = math.exp(-0.5 * chi / cands.omega)
        gap = math.sqrt(abs(int(cands.frames[b]) - int(cands.frames[a])))
        total += (similarity - stats.similarity.mean) / stats.similarity.std
        total -= (gap - stats.spread.mean) / stats.spread.std
    return total


def spread_sum(subset):
    return sum(math.sqrt(b - a) for a, b in zip(subset, subset[1:]))


# 🔹 Frame importance
def test_frame_importance(tiny_bundle):
    assert storyboard.frame_importance(tiny_bundle.frames[0], [0.1, 0.8]) == 0.8
    assert storyboard.frame_importance(tiny_bundle.frames[0], [0.5]) == 0.5
    bare = FrameRecord(index=0, global_color_hist=[(0, 1.0)])
    assert storyboard.frame_importance(bare, []) == 0.0


# 🔹 Energy
def test_single_frame_energy_is_negative_importance():
    assert storyboard.energy([4], candidates([4], [0.7]), UNIT) == pytest.approx(-0.7)


def test_identical_neighbours_add_unit_similarity():
    cands = candidates([3, 4], [0.2, 0.5])
    # -0.2 - 0.5 + exp(0) - sqrt(1)
    assert storyboard.energy([3, 4], cands, UNIT) == pytest.approx(-0.7)


def test_energy_matches_reference():
    rng = np.random.default_rng(21)
    for _ in range(50):
        cands, k, stats = random_instance(rng)
        selection = sorted(rng.choice(cands.frames, size=k, replace=False).tolist())
        assert storyboard.energy(selection, cands, stats) == pytest.approx(reference_energy(selection, cands, stats), abs=1e-12)


def test_energy_rejects_bad_selections():
    cands = candidates([1, 2, 5], [0.1, 0.2, 0.3])
    for selection in ([], [2, 1], [2, 2], [3]):
        with pytest.raises(SelectionError):
            storyboard.energy(selection, cands, UNIT)


# 🔹 Budget selection
def test_k_equal_to_candidate_count():
    cands = candidates([2, 5, 9], [0.1, 0.9, 0.4])
    assert storyboard.select_k_frames(cands, 3, UNIT).frames == [2, 5, 9]
    assert storyboard.brute_force_select(cands, 3, UNIT).frames == [2, 5, 9]


def test_k_one_picks_most_important_frame():
    cands = candidates([2, 5, 9], [0.1, 0.9, 0.4])
    chosen = storyboard.select_k_frames(cands, 1, UNIT)
    assert chosen.frames == [5]
    assert chosen.energy == pytest.approx(-0.9)
    assert storyboard.brute_force_select(cands, 1, UNIT).frames == [5]


def test_k_out_of_range():
    cands = candidates([2, 5, 9], [0.1, 0.9, 0.4])
    for k in (0, 4):
        with pytest.raises(SelectionError):
            storyboard.select_k_frames(cands, k, UNIT)
        with pytest.raises(SelectionError):
            storyboard.brute_force_select(cands, k, UNIT)


def test_brute_force_guard():
    cands = candidates(range(30), np.zeros(30))
    with pytest.raises(InstanceTooLargeError):
        storyboard.brute_force_select(cands, 15, UNIT)


def test_dp_agrees_with_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        cands, k, stats = random_instance(rng)
        dp = storyboard.select_k_frames(cands, k, stats)
        exhaustive = storyboard.brute_force_select(cands, k, stats)
        assert dp.frames == exhaustive.frames
        assert abs(dp.energy - exhaustive.energy) <= 1e-9
        assert all(a < b for a, b in zip(dp.frames, dp.frames[1:]))


def test_ties_resolve_to_earliest_frames():
    flat = EnergyStats(spread=TermStats(mean=0.0, std=1e300))
    cands = candidates([1, 4, 6, 8, 12], np.full(5, 0.5))
    assert storyboard.select_k_frames(cands, 3, flat).frames == [1, 4, 6]
    assert storyboard.brute_force_select(cands, 3, flat).frames == [1, 4, 6]
    assert storyboard.dp_select(np.zeros(6), np.zeros((6, 6)), 4) == [0, 1, 2, 3]


def test_even_spacing_maximizes_spread():
    for n in range(2, 16):
        for k in range(2, min(4, n) + 1):
            best = max(spread_sum((0,) + middle + (n - 1,)) for middle in combinations(range(1, n - 1), k - 2))
            q, r = divmod(n - 1, k - 1)
            even = r * math.sqrt(q + 1) + (k - 1 - r) * math.sqrt(q)
            assert best == pytest.approx(even, abs=1e-12)


def test_budget_prefers_evenly_spread_frames():
    cands = candidates(range(11), np.full(11, 0.5))
    assert storyboard.energy([0, 5, 10], cands, UNIT) < storyboard.energy([0, 1, 10], cands, UNIT)
    assert storyboard.select_k_frames(cands, 3, UNIT).frames == [0, 5, 10]


@pytest.mark.slow
def test_dp_runtime_grows_quadratically():
    rng = np.random.default_rng(0)

    def timed(n):
        unary, pair = rng.random(n), rng.random((n, n))
        runs = []
        for _ in range(3):
            start = time.perf_counter()
            storyboard.dp_select(unary, pair, 10)
            runs.append(time.perf_counter() - start)
        return min(runs)

    timed(200)
    ratio = timed(800) / timed(400)
    assert 2.0 <= ratio <= 6.0


# 🔹 Criterion mode
def test_keyframe_count_shrinks_with_criterion(planted):
    bundle, oracle = planted
    scores = oracle_scores(bundle, oracle)
    evts = oracle_events(oracle)
    counts = [len(storyboard.summarize_by_criterion(bundle, scores, evts, tau).entries) for tau in np.linspace(0.05, 0.95, 10)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))
    assert counts[0] >= len(oracle.important_labels)


@pytest.mark.slow
def test_keyframe_count_shrinks_with_predicted_scores(planted, planted_model):
    bundle, oracle = planted
    scores = importance.score_regions(planted_model, bundle, extract_cues(bundle, CueConfig()))
    evts = oracle_events(oracle)
    everything = np.concatenate(scores)
    taus = np.quantile(everything, np.linspace(0.5, 0.99, 10))
    counts = [len(storyboard.summarize_by_criterion(bundle, scores, evts, float(tau)).entries) for tau in taus]
    assert all(b <= a for a, b in zip(counts, counts[1:]))
    assert counts[0] > 0


def three_object_day():
    objects = [PlantedObject(label=f"object-{i}", signature=[5000 + 4 * i, 5001 + 4 * i], recurrence=0.3) for i in range(3)]
    spec = ScenarioSpec(
        seed=3,
        video_id="three-objects",
        n_frames=30,
        event_blocks=[EventBlock(length=30, signature=[7, 8, 9])],
        objects=objects,
    )
    return synth.generate(spec)


def test_one_keyframe_per_planted_object():
    bundle, oracle = three_object_day()
    summary = storyboard.summarize_by_criterion(bundle, oracle_scores(bundle, oracle), oracle_events(oracle), 0.5)
    assert summary.mode == "criterion"
    assert summary.tau == 0.5
    assert len(summary.entries) == 3
    prominent = {RegionRef(frame=r.frame, region_id=r.region_id) for r in oracle.regions if r.prominent}
    assert {e.region for e in summary.entries} == prominent
    assert summary.frames == sorted(summary.frames)


def test_criterion_extremes():
    bundle, oracle = three_object_day()
    scores = oracle_scores(bundle, oracle)
    evts = oracle_events(oracle)
    assert storyboard.summarize_by_criterion(bundle, scores, evts, 2.0).entries == []
    everything = storyboard.summarize_by_criterion(bundle, scores, evts, -1.0)
    clusters = grouping.group_events(evts, bundle, scores, criterion=-1.0)
    assert len(everything.entries) == len({c.representative.frame for c in clusters})


def test_clusters_sharing_a_frame():
    def cluster(region_id, importance, event_id=0):
        ref = RegionRef(frame=2, region_id=region_id)
        return ObjectCluster(
            event_id=event_id,
            members=[ref],
            member_importances=[importance],
            avg_importance=importance,
            representative=ref,
            representative_importance=importance,
        )

    summary = storyboard.storyboard_from_clusters([cluster(0, 0.4), cluster(1, 0.9)], tau=0.1)
    (entry,) = summary.entries
    assert entry.region.region_id == 1
    assert entry.also_shown == [RegionRef(frame=2, region_id=0)]


# 🔹 Budget mode on a bundle
def tiny_event():
    return [Event(event_id=0, member_frames=list(range(6)), start=0, end=5)]


def objectness_scores(bundle):
    return [np.array([r.objectness for r in f.regions]) for f in bundle.frames]


def test_budget_candidates_are_representative_frames(tiny_bundle):
    cands = storyboard.budget_candidates(tiny_bundle, objectness_scores(tiny_bundle), tiny_event(), omega=1.0)
    assert cands.frames.tolist() == [0, 1, 2, 3, 4, 5]
    assert cands.regions[0] == RegionRef(frame=0, region_id=0)
    assert cands.regions[4] == RegionRef(frame=4, region_id=0)
    assert cands.event_ids == [0] * 6


def test_budget_summary(tiny_bundle):
    summary = storyboard.summarize_by_budget(tiny_bundle, objectness_scores(tiny_bundle), tiny_event(), 3, omega=1.0)
    assert summary.mode == "budget"
    assert summary.k == 3
    assert len(summary.entries) == 3
    assert summary.frames == sorted(set(summary.frames))
    assert all(e.event_id == 0 for e in summary.entries)


def test_budget_without_events_uses_every_frame(tiny_bundle):
    scores = [np.zeros(2) for _ in tiny_bundle.frames]
    cands = storyboard.budget_candidates(tiny_bundle, scores, tiny_event(), 1.0, SummaryConfig(no_events=True))
    assert len(cands) == 6
    summary = storyboard.summarize_by_budget(
        tiny_bundle, scores, tiny_event(), 6, 1.0, stats=UNIT, summary=SummaryConfig(no_events=True)
    )
    assert summary.frames == list(range(6))


# 🔹 Manifest
def test_empty_manifest(tiny_bundle):
    manifest = storyboard.render_manifest(Storyboard(mode="criterion", tau=0.9), tiny_bundle, tiny_event(), HEADER)
    assert manifest.entries == []
    assert manifest.events[0].end_time_s == 5.0
    assert storyboard.parse_manifest(storyboard.manifest_json(manifest)) == manifest


def test_budget_manifest_rows(tiny_bundle):
    summary = storyboard.summarize_by_budget(tiny_bundle, objectness_scores(tiny_bundle), tiny_event(), 3, omega=1.0)
    manifest = storyboard.render_manifest(summary, tiny_bundle, tiny_event(), HEADER)
    assert [e.frame for e in manifest.entries] == summary.frames
    assert [e.timestamp_s for e in manifest.entries] == [float(f) for f in summary.frames]
    assert manifest.energy == summary.energy
    assert storyboard.parse_manifest(storyboard.manifest_json(manifest)) == manifest
