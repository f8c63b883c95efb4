"""Grouping of region instances into per-event object clusters.

Candidates are compared by color affinity, tight groups are peeled off one at a
time from the leading eigenvector of the remaining affinity matrix, clusters that
look like a higher-ranked cluster are pruned, and each surviving cluster is
represented by its most important member.

Membership, mass floor and pruning thresholds all come from ``GroupingConfig``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from egostory.config import GroupingConfig
from egostory.core.bundle import dense_histograms
from egostory.core.cues import chi_square_matrix
from egostory.schemas import Event, ObjectCluster, RegionRef, SparseHist, VideoBundle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegionAffinity:
    k: np.ndarray
    chi2: np.ndarray
    gamma: float
    member_refs: List[RegionRef]

    @property
    def size(self) -> int:
        return self.k.shape[0]


def build_affinity(hists: Sequence[SparseHist], member_refs: Optional[Sequence[RegionRef]] = None) -> RegionAffinity:
    n = len(hists)
    refs = list(member_refs) if member_refs is not None else [RegionRef(frame=0, region_id=i) for i in range(n)]
    if n == 0:
        return RegionAffinity(k=np.zeros((0, 0)), chi2=np.zeros((0, 0)), gamma=1.0, member_refs=refs)
    dense, _ = dense_histograms(hists)
    chi2 = chi_square_matrix(dense, dense)
    np.fill_diagonal(chi2, 0.0)
    gamma = 1.0
    if n > 1:
        gamma = float(chi2[np.triu_indices(n, k=1)].mean())
        if gamma == 0:
            logger.debug("All candidate histograms identical; gamma set to 1")
            gamma = 1.0
    return RegionAffinity(k=np.exp(-chi2 / gamma), chi2=chi2, gamma=gamma, member_refs=refs)


def _gated(affinity: RegionAffinity, cfg: GroupingConfig) -> np.ndarray:
    k = affinity.k.copy()
    if cfg.background_ratio is not None:
        k[affinity.chi2 >= cfg.background_ratio * affinity.gamma] = 0.0
        np.fill_diagonal(k, 1.0)
    return k


def _leading_vector(sub: np.ndarray, cfg: GroupingConfig) -> np.ndarray:
    degree = sub.sum(axis=1)
    seed = int(np.argmax(degree))
    v = sub[:, seed].copy()
    v /= np.linalg.norm(v)
    for _ in range(cfg.power_iterations):
        w = sub @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        w /= norm
        if np.linalg.norm(w - v) < cfg.power_tolerance:
            v = w
            break
        v = w
    if v[int(np.argmax(np.abs(v)))] < 0:
        v = -v
    return v


def factorize_clusters(affinity: RegionAffinity, cfg: GroupingConfig = GroupingConfig()) -> List[List[int]]:
    """Peel dominant groups off the affinity graph; returns disjoint sorted index lists."""
    if affinity.size == 0:
        return []
    k = _gated(affinity, cfg)
    remaining = np.arange(affinity.size)
    clusters: List[List[int]] = []
    while remaining.size and len(clusters) < cfg.max_clusters:
        sub = k[np.ix_(remaining, remaining)]
        if sub.sum() / remaining.size**2 < cfg.mass_floor:
            break
        v = _leading_vector(sub, cfg)
        inside = v >= cfg.membership_fraction * v.max()
        clusters.append(sorted(int(i) for i in remaining[inside]))
        remaining = remaining[~inside]
    return clusters


def _cluster(
    indices: Sequence[int],
    importances: np.ndarray,
    refs: Sequence[RegionRef],
    event_id: int,
) -> ObjectCluster:
    values = [float(importances[i]) for i in indices]
    return ObjectCluster(
        event_id=event_id,
        members=[refs[i] for i in indices],
        member_importances=values,
        avg_importance=float(np.mean(values)),
    )


def prune_redundant(
    clusters: Sequence[Sequence[int]],
    importances,
    affinity: RegionAffinity,
    rho: float = 0.5,
    event_id: int = 0,
) -> List[ObjectCluster]:
    """Rank clusters by mean importance and drop any whose mean cross-affinity to a kept cluster is >= rho."""
    importances = np.asarray(importances, dtype=float)
    averages = [float(np.mean(importances[list(c)])) for c in clusters]
    order = sorted(range(len(clusters)), key=lambda c: -averages[c])
    kept: List[Sequence[int]] = []
    for c in order:
        members = list(clusters[c])
        redundant = any(affinity.k[np.ix_(members, list(other))].mean() >= rho for other in kept)
        if redundant:
            logger.debug(f"Pruned cluster of {len(members)} regions as redundant")
            continue
        kept.append(members)
    return [_cluster(c, importances, affinity.member_refs, event_id) for c in kept]


def select_representatives(clusters: Sequence[ObjectCluster]) -> List[ObjectCluster]:
    """Pick the most important member; ties go to the earliest frame, then the smallest region_id."""
    out = []
    for cluster in clusters:
        best = min(
            range(len(cluster.members)),
            key=lambda i: (-cluster.member_importances[i], cluster.members[i].frame, cluster.members[i].region_id),
        )
        out.append(
            cluster.model_copy(
                update={
                    "representative": cluster.members[best],
                    "representative_importance": cluster.member_importances[best],
                }
            )
        )
    return out


def event_candidates(
    event: Event,
    bundle: VideoBundle,
    scores: Sequence[np.ndarray],
    cfg: GroupingConfig,
    criterion: Optional[float] = None,
):
    refs, hists, values = [], [], []
    for frame_idx in event.member_frames:
        frame = bundle.frames[frame_idx]
        for region, score in zip(frame.regions, scores[frame_idx]):
            if criterion is not None and not score > criterion:
                continue
            refs.append(RegionRef(frame=frame_idx, region_id=region.region_id))
            hists.append(region.color_hist)
            values.append(float(score))
    if len(refs) > cfg.max_candidates:
        logger.info(f"Event {event.event_id}: capping {len(refs)} candidates to the top {cfg.max_candidates}")
        top = sorted(range(len(refs)), key=lambda i: (-values[i], refs[i].frame, refs[i].region_id))[: cfg.max_candidates]
        top.sort()
        refs = [refs[i] for i in top]
        hists = [hists[i] for i in top]
        values = [values[i] for i in top]
    return refs, hists, np.asarray(values, dtype=float)


def group_event(
    event: Event,
    bundle: VideoBundle,
    scores: Sequence[np.ndarray],
    cfg: GroupingConfig = GroupingConfig(),
    criterion: Optional[float] = None,
) -> List[ObjectCluster]:
    refs, hists, values = event_candidates(event, bundle, scores, cfg, criterion)
    if not refs:
        return []
    affinity = build_affinity(hists, refs)
    clusters = factorize_clusters(affinity, cfg)
    pruned = prune_redundant(clusters, values, affinity, cfg.redundancy_affinity, event.event_id)
    logger.debug(
        f"Event {event.event_id}: {len(refs)} candidates -> {len(clusters)} clusters -> {len(pruned)} after pruning"
    )
    return select_representatives(pruned)


def group_events(
    events: Sequence[Event],
    bundle: VideoBundle,
    scores: Sequence[np.ndarray],
    cfg: GroupingConfig = GroupingConfig(),
    criterion: Optional[float] = None,
    workers: int = 1,
) -> List[ObjectCluster]:
    def run(event: Event) -> List[ObjectCluster]:
        return group_event(event, bundle, scores, cfg, criterion)

    if workers > 1 and len(events) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_event = list(pool.map(run, events))
    else:
        per_event = [run(e) for e in events]
    return [c for clusters in per_event for c in clusters]
