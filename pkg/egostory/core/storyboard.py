"""Storyboard selection.

Two modes: keep one keyframe per important object cluster whose score clears a
criterion, or pick exactly ``k`` frames minimizing an energy that rewards
important, visually distinct and temporally spread frames. The budget energy is
minimized exactly by dynamic programming over ordered subsequences.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from egostory.config import GroupingConfig, SummaryConfig
from egostory.core.bundle import dense_histograms
from egostory.core.cues import chi_square, chi_square_matrix
from egostory.core.events import effective_omega, event_of_frame
from egostory.core.grouping import group_events
from egostory.errors import InstanceTooLargeError, SelectionError
from egostory.schemas import (
    EnergyStats,
    Event,
    FrameRecord,
    ManifestEntry,
    ManifestEvent,
    ObjectCluster,
    RegionRef,
    ReproHeader,
    Storyboard,
    StoryboardEntry,
    StoryboardManifest,
    TermStats,
    VideoBundle,
)

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12
# Energy statistics are estimated on at most this many evenly spaced frames.
MAX_STATS_FRAMES = 2000


@dataclass(frozen=True)
class FrameCandidates:
    frames: np.ndarray
    importance: np.ndarray
    hists: np.ndarray
    omega: float
    event_ids: List[Optional[int]]
    regions: List[Optional[RegionRef]]

    def __len__(self) -> int:
        return int(self.frames.size)

    def position(self, frame: int) -> int:
        pos = int(np.searchsorted(self.frames, frame))
        if pos >= self.frames.size or self.frames[pos] != frame:
            raise SelectionError(f"Frame {frame} is not a candidate")
        return pos


def frame_importance(frame: FrameRecord, importances: Sequence[float]) -> float:
    if not frame.regions or len(importances) == 0:
        return 0.0
    return float(np.max(importances))


def frame_candidates(
    bundle: VideoBundle,
    scores: Sequence[np.ndarray],
    frames: Sequence[int],
    omega: float,
    event_ids: Optional[Dict[int, int]] = None,
    regions: Optional[Dict[int, RegionRef]] = None,
) -> FrameCandidates:
    frames = sorted(set(int(f) for f in frames))
    hists, _ = dense_histograms([bundle.frames[f].global_color_hist for f in frames])
    return FrameCandidates(
        frames=np.asarray(frames, dtype=np.int64),
        importance=np.array([frame_importance(bundle.frames[f], scores[f]) for f in frames], dtype=float),
        hists=hists,
        omega=effective_omega(omega),
        event_ids=[(event_ids or {}).get(f) for f in frames],
        regions=[(regions or {}).get(f) for f in frames],
    )


# 🔹 Energy
def _similarity(candidates: FrameCandidates) -> np.ndarray:
    chi2 = chi_square_matrix(candidates.hists, candidates.hists)
    return np.exp(-chi2 / candidates.omega)


def _spread(candidates: FrameCandidates) -> np.ndarray:
    f = candidates.frames.astype(float)
    return np.sqrt(np.abs(np.subtract.outer(f, f)))


def energy_tables(candidates: FrameCandidates, stats: EnergyStats) -> Tuple[np.ndarray, np.ndarray]:
    """Per-frame unary cost and per-pair transition cost of the standardized energy."""
    unary = -(candidates.importance - stats.importance.mean) / stats.importance.std
    pair = (_similarity(candidates) - stats.similarity.mean) / stats.similarity.std - (
        _spread(candidates) - stats.spread.mean
    ) / stats.spread.std
    return unary, pair


def energy(selection: Sequence[int], candidates: FrameCandidates, stats: EnergyStats) -> float:
    selection = [int(s) for s in selection]
    if not selection:
        raise SelectionError("Energy needs at least one selected frame")
    if any(b <= a for a, b in zip(selection, selection[1:])):
        raise SelectionError(f"Selection must be strictly increasing: {selection}")
    pos = [candidates.position(s) for s in selection]
    total = 0.0
    for p in pos:
        total -= (candidates.importance[p] - stats.importance.mean) / stats.importance.std
    for (a, pa), (b, pb) in zip(zip(selection, pos), zip(selection[1:], pos[1:])):
        similarity = math.exp(-chi_square(candidates.hists[pa], candidates.hists[pb]) / candidates.omega)
        total += (similarity - stats.similarity.mean) / stats.similarity.std
        total -= (math.sqrt(abs(b - a)) - stats.spread.mean) / stats.spread.std
    return float(total)


def _term_samples(candidates: FrameCandidates) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = len(candidates)
    if n > MAX_STATS_FRAMES:
        keep = np.unique(np.linspace(0, n - 1, MAX_STATS_FRAMES).round().astype(np.int64))
        candidates = FrameCandidates(
            frames=candidates.frames[keep],
            importance=candidates.importance[keep],
            hists=candidates.hists[keep],
            omega=candidates.omega,
            event_ids=[candidates.event_ids[i] for i in keep],
            regions=[candidates.regions[i] for i in keep],
        )
        n = keep.size
    iu = np.triu_indices(n, k=1)
    return candidates.importance, _similarity(candidates)[iu], _spread(candidates)[iu]


def _term_stats(values: np.ndarray) -> TermStats:
    if values.size == 0:
        return TermStats()
    std = float(values.std())
    return TermStats(mean=float(values.mean()), std=std if std > 0 else 1.0)


def stats_from_candidates(candidate_sets: Sequence[FrameCandidates]) -> EnergyStats:
    samples = [_term_samples(c) for c in candidate_sets]
    if not samples:
        return EnergyStats()
    importance, similarity, spread = (np.concatenate([s[i] for s in samples]) for i in range(3))
    return EnergyStats(
        importance=_term_stats(importance),
        similarity=_term_stats(similarity),
        spread=_term_stats(spread),
    )


def compute_energy_stats(candidates: FrameCandidates) -> EnergyStats:
    return stats_from_candidates([candidates])


# 🔹 Budgeted selection
def _first_within(values: np.ndarray) -> int:
    """Index of the first entry tied (within tolerance) with the minimum."""
    best = values.min()
    return int(np.flatnonzero(values <= best + TIE_TOLERANCE * max(1.0, abs(best)))[0])


def dp_select(unary: np.ndarray, pair: np.ndarray, k: int) -> List[int]:
    """Positions of the minimum-cost ordered k-subsequence, lexicographically smallest on ties.

    ``best[t, a]`` is the cheapest cost of choosing position ``a`` as the t-th pick
    plus the picks after it; pick t may only use positions t..n-k+t.
    """
    n = unary.size
    later = np.triu(np.ones((n, n), dtype=bool), k=1)
    transitions = np.where(later, pair, np.inf)
    best = np.full((k, n), np.inf)
    best[k - 1, k - 1 :] = unary[k - 1 :]
    for t in range(k - 2, -1, -1):
        tail = (transitions + best[t + 1][None, :]).min(axis=1)
        row = unary + tail
        row[:t] = np.inf
        row[n - k + t + 1 :] = np.inf
        best[t] = row

    chosen = [_first_within(best[0])]
    for t in range(1, k):
        prev = chosen[-1]
        chosen.append(prev + 1 + _first_within(transitions[prev, prev + 1 :] + best[t, prev + 1 :]))
    return chosen


def _check_budget(n: int, k: int) -> None:
    if k < 1:
        raise SelectionError(f"k must be >= 1, got {k}")
    if k > n:
        raise SelectionError(f"k = {k} exceeds the {n} candidate frames")


def _budget_storyboard(
    positions: Sequence[int],
    candidates: FrameCandidates,
    stats: EnergyStats,
    k: int,
) -> Storyboard:
    frames = [int(candidates.frames[p]) for p in positions]
    entries = [
        StoryboardEntry(
            frame=int(candidates.frames[p]),
            event_id=candidates.event_ids[p],
            region=candidates.regions[p],
            importance=float(candidates.importance[p]),
        )
        for p in positions
    ]
    return Storyboard(mode="budget", k=k, energy=energy(frames, candidates, stats), entries=entries)


def select_k_frames(candidates: FrameCandidates, k: int, stats: EnergyStats) -> Storyboard:
    _check_budget(len(candidates), k)
    unary, pair = energy_tables(candidates, stats)
    return _budget_storyboard(dp_select(unary, pair, k), candidates, stats, k)


def brute_force_select(
    candidates: FrameCandidates,
    k: int,
    stats: EnergyStats,
    limit: int = 10_000_000,
) -> Storyboard:
    n = len(candidates)
    _check_budget(n, k)
    if math.comb(n, k) > limit:
        raise InstanceTooLargeError(f"C({n}, {k}) = {math.comb(n, k)} subsets exceeds the limit of {limit}")
    unary, pair = energy_tables(candidates, stats)
    best_value, best_positions = math.inf, None
    for positions in combinations(range(n), k):
        value = float(unary[list(positions)].sum())
        for a, b in zip(positions, positions[1:]):
            value += pair[a, b]
        if best_positions is None or value < best_value - TIE_TOLERANCE * max(1.0, abs(best_value)):
            best_value, best_positions = value, positions
    return _budget_storyboard(best_positions, candidates, stats, k)


# 🔹 Summaries
def _best_region(frame: FrameRecord, frame_scores: np.ndarray) -> Optional[RegionRef]:
    if not frame.regions:
        return None
    i = int(np.argmax(frame_scores))
    return RegionRef(frame=frame.index, region_id=frame.regions[i].region_id)


def storyboard_from_clusters(clusters: Sequence[ObjectCluster], tau: float) -> Storyboard:
    """One entry per frame; further clusters represented in the same frame go to ``also_shown``."""
    by_frame: Dict[int, List[ObjectCluster]] = {}
    for cluster in clusters:
        by_frame.setdefault(cluster.representative.frame, []).append(cluster)
    entries = []
    for frame in sorted(by_frame):
        ranked = sorted(by_frame[frame], key=lambda c: (-c.representative_importance, c.representative.region_id))
        head = ranked[0]
        entries.append(
            StoryboardEntry(
                frame=frame,
                event_id=head.event_id,
                region=head.representative,
                importance=head.representative_importance,
                also_shown=[c.representative for c in ranked[1:]],
            )
        )
    return Storyboard(mode="criterion", tau=tau, entries=entries)


def summarize_by_criterion(
    bundle: VideoBundle,
    scores: Sequence[np.ndarray],
    events: Sequence[Event],
    tau: float,
    grouping: GroupingConfig = GroupingConfig(),
    workers: int = 1,
) -> Storyboard:
    clusters = group_events(events, bundle, scores, grouping, criterion=tau, workers=workers)
    return storyboard_from_clusters(clusters, tau)


def budget_candidates(
    bundle: VideoBundle,
    scores: Sequence[np.ndarray],
    events: Sequence[Event],
    omega: float,
    summary: SummaryConfig = SummaryConfig(),
    grouping: GroupingConfig = GroupingConfig(),
    workers: int = 1,
) -> FrameCandidates:
    event_map = event_of_frame(events)
    if summary.no_events:
        regions = {f.index: _best_region(f, scores[f.index]) for f in bundle.frames}
        return frame_candidates(bundle, scores, range(len(bundle.frames)), omega, event_map, regions)

    clusters = group_events(events, bundle, scores, grouping, workers=workers)
    regions: Dict[int, RegionRef] = {}
    best: Dict[int, float] = {}
    for c in clusters:
        frame = c.representative.frame
        if frame not in best or c.representative_importance > best[frame]:
            best[frame] = c.representative_importance
            regions[frame] = c.representative
    return frame_candidates(bundle, scores, sorted(regions), omega, event_map, regions)


def summarize_by_budget(
    bundle: VideoBundle,
    scores: Sequence[np.ndarray],
    events: Sequence[Event],
    k: int,
    omega: float,
    stats: Optional[EnergyStats] = None,
    summary: SummaryConfig = SummaryConfig(),
    grouping: GroupingConfig = GroupingConfig(),
    workers: int = 1,
) -> Storyboard:
    candidates = budget_candidates(bundle, scores, events, omega, summary, grouping, workers)
    if stats is None:
        logger.warning(f"Energy statistics computed from the {len(candidates)} candidate frames of {bundle.video_id}")
        stats = compute_energy_stats(candidates)
    return select_k_frames(candidates, k, stats)


# 🔹 Manifest
def render_manifest(
    s: Storyboard,
    b: VideoBundle,
    events: Sequence[Event],
    header: ReproHeader,
    clusters: Optional[Sequence[ObjectCluster]] = None,
) -> StoryboardManifest:
    fps = b.fps_effective
    return StoryboardManifest(
        header=header,
        video_id=b.video_id,
        fps_effective=fps,
        mode=s.mode,
        tau=s.tau,
        k=s.k,
        energy=s.energy,
        events=[
            ManifestEvent(
                event_id=e.event_id,
                start=e.start,
                end=e.end,
                n_frames=e.n_frames,
                start_time_s=e.start / fps,
                end_time_s=e.end / fps,
            )
            for e in events
        ],
        entries=[
            ManifestEntry(
                frame=entry.frame,
                timestamp_s=entry.frame / fps,
                event_id=entry.event_id,
                region_id=entry.region.region_id if entry.region is not None else None,
                importance=entry.importance,
                also_shown=entry.also_shown,
            )
            for entry in s.entries
        ],
        clusters=list(clusters) if clusters is not None else None,
    )


def manifest_json(manifest: StoryboardManifest) -> str:
    return manifest.model_dump_json(indent=2) + "\n"


def parse_manifest(document: str) -> StoryboardManifest:
    return StoryboardManifest.model_validate_json(document)
