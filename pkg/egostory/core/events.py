"""Temporal event segmentation.

Frames are compared with a time-weighted color distance and grouped by
complete-link agglomerative clustering until the cheapest merge exceeds a
data-derived threshold.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from egostory.config import EventConfig
from egostory.core.bundle import dense_histograms
from egostory.core.cues import chi_square, chi_square_matrix
from egostory.errors import SegmentationError
from egostory.schemas import Event, VideoBundle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameDistanceMatrix:
    d: np.ndarray
    chi2: np.ndarray
    omega: float
    t_window: int

    @property
    def n_frames(self) -> int:
        return self.d.shape[0]


def effective_omega(omega: float) -> float:
    return omega if omega > 0 else 1.0


def temporal_weight(m: int, n: int, t: int) -> float:
    return max(0, t - abs(m - n)) / t


def frame_distance(m: int, n: int, hists, t: int, omega: float) -> float:
    if omega <= 0 or t <= 0:
        raise ValueError(f"frame_distance needs omega > 0 and t > 0, got omega={omega}, t={t}")
    return 1.0 - temporal_weight(m, n, t) * math.exp(-chi_square(hists[m], hists[n]) / omega)


def frame_histograms(b: VideoBundle) -> np.ndarray:
    dense, _ = dense_histograms([f.global_color_hist for f in b.frames])
    return dense


def pairwise_chi_square(hists: np.ndarray, workers: int = 1, block: int = 256) -> np.ndarray:
    n = hists.shape[0]
    starts = list(range(0, n, block))
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: chi_square_matrix(hists[s : s + block], hists), starts))
    else:
        parts = [chi_square_matrix(hists[s : s + block], hists) for s in starts]
    chi2 = np.vstack(parts) if parts else np.zeros((0, 0))
    np.fill_diagonal(chi2, 0.0)
    return chi2


def build_distance_matrix(b: VideoBundle, t: int, workers: int = 1) -> FrameDistanceMatrix:
    n = len(b.frames)
    if n < 2:
        raise SegmentationError(f"Event segmentation needs at least 2 frames, {b.video_id} has {n}")
    if t <= 0:
        raise SegmentationError(f"t_window must be > 0, got {t}")
    chi2 = pairwise_chi_square(frame_histograms(b), workers=workers)
    iu = np.triu_indices(n, k=1)
    omega = float(chi2[iu].mean())
    if omega == 0:
        logger.warning(f"All frames of {b.video_id} share one color histogram; using omega = 1 in the distance")
    idx = np.arange(n)
    weight = np.maximum(0, t - np.abs(np.subtract.outer(idx, idx))) / t
    d = 1.0 - weight * np.exp(-chi2 / effective_omega(omega))
    logger.debug(f"Built {n}x{n} frame distance matrix for {b.video_id} (omega={omega:.4g}, t={t})")
    return FrameDistanceMatrix(d=d, chi2=chi2, omega=omega, t_window=t)


def stopping_threshold(dm: FrameDistanceMatrix, cfg: EventConfig) -> float:
    if cfg.tau_override is not None:
        return cfg.tau_override
    iu = np.triu_indices(dm.n_frames, k=1)
    if cfg.threshold_space == "d":
        values = dm.d[iu]
        return float(values.mean() + cfg.sigma_multiplier * values.std())
    if dm.omega == 0:
        return 1.0
    sigma = float(dm.chi2[iu].std())
    return 1.0 - math.exp(-(dm.omega + cfg.sigma_multiplier * sigma) / dm.omega)


def segment_events(dm: FrameDistanceMatrix, cfg: EventConfig = EventConfig()) -> List[Event]:
    """Complete-link clustering; each cluster is keyed by its smallest frame index.

    The cheapest pair is merged while its complete-link distance is <= tau. Ties
    go to the pair with the smallest start, then the smallest partner start.
    """
    n = dm.n_frames
    tau = stopping_threshold(dm, cfg)
    dist = dm.d.astype(float, copy=True)
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    members: Dict[int, List[int]] = {i: [i] for i in range(n)}

    # row_min[i] / row_arg[i]: cheapest active partner j > i of cluster i.
    row_min = np.full(n, np.inf)
    row_arg = np.full(n, -1, dtype=np.int64)

    def refresh(i: int) -> None:
        tail = np.where(active[i + 1 :], dist[i, i + 1 :], np.inf)
        if tail.size == 0:
            row_min[i], row_arg[i] = np.inf, -1
            return
        j = int(np.argmin(tail))
        row_min[i], row_arg[i] = tail[j], i + 1 + j

    for i in range(n):
        refresh(i)

    while active.sum() > 1:
        i = int(np.argmin(row_min))
        best = row_min[i]
        if not np.isfinite(best) or best > tau:
            break
        j = int(row_arg[i])
        merged = np.maximum(dist[i], dist[j])
        dist[i, :] = merged
        dist[:, i] = merged
        dist[i, i] = np.inf
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        active[j] = False
        row_min[j], row_arg[j] = np.inf, -1
        members[i].extend(members.pop(j))
        stale = np.flatnonzero(active & ((row_arg == i) | (row_arg == j)))
        for k in set(stale.tolist()) | {i}:
            refresh(k)

    events = [
        Event(event_id=eid, member_frames=sorted(frames), start=min(frames), end=max(frames))
        for eid, frames in enumerate(sorted(members.values(), key=min))
    ]
    logger.debug(f"Segmented {n} frames into {len(events)} events (tau={tau:.4g})")
    return events


def event_of_frame(events: Sequence[Event]) -> Dict[int, int]:
    return {frame: e.event_id for e in events for frame in e.member_frames}


def save_distance_matrix(dm: FrameDistanceMatrix, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.save(fh, dm.d)
    return path
