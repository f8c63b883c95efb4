"""Per-region cue extraction.

Every region gets a 14-component vector in ``CUE_ORDER``: egocentric cues (hand and
gaze distance, region and point recurrence inside a temporal window), object cues
(objectness, motion against the surround, face overlap) and raw region geometry.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from egostory.config import CueConfig
from egostory.core import geometry
from egostory.core.bundle import dense_histograms
from egostory.errors import CueError
from egostory.schemas import CUE_ORDER, FrameRecord, Point, Rect, RegionRecord, ReproHeader, SparseHist, VideoBundle

logger = logging.getLogger(__name__)

ID_COLUMNS = ["video_id", "frame", "region_id"]
# Upper bound on elements materialized by one chi_square_matrix chunk.
_CHUNK_ELEMENTS = 1 << 22


# 🔹 Histogram distance
def chi_square(h1, h2) -> float:
    p = np.asarray(h1, dtype=float)
    q = np.asarray(h2, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"histogram length mismatch: {p.shape} vs {q.shape}")
    total = p + q
    diff = p - q
    terms = np.divide(diff * diff, total, out=np.zeros_like(total), where=total > 0)
    return 0.5 * float(terms.sum())


def chi_square_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise chi-square between the rows of ``a`` and ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"histogram length mismatch: {a.shape[1]} vs {b.shape[1]}")
    out = np.empty((a.shape[0], b.shape[0]), dtype=float)
    if out.size == 0:
        return out
    rows = max(1, _CHUNK_ELEMENTS // max(1, b.shape[0] * max(1, a.shape[1])))
    for start in range(0, a.shape[0], rows):
        block = a[start : start + rows, None, :]
        total = block + b[None, :, :]
        diff = block - b[None, :, :]
        terms = np.divide(diff * diff, total, out=np.zeros_like(total), where=total > 0)
        out[start : start + rows] = 0.5 * terms.sum(axis=2)
    return out


def sparse_chi_square(h1: SparseHist, h2: SparseHist) -> float:
    dense, _ = dense_histograms([h1, h2])
    return chi_square(dense[0], dense[1])


# 🔹 Temporal window
def window_size(fps: float, cfg: CueConfig) -> int:
    return int(round(cfg.window_minutes * 60.0 * fps))


def window_frames(center: int, n_frames: int, fps: float, cfg: CueConfig) -> List[int]:
    """Frames in the recurrence window of ``center``, own frame excluded, truncated at the ends."""
    span = window_size(fps, cfg)
    if cfg.window_alignment == "centered":
        lo, hi = center - span // 2, center + span // 2
    elif cfg.window_alignment == "trailing":
        lo, hi = center - span, center - 1
    else:
        lo, hi = center + 1, center + span
    lo, hi = max(lo, 0), min(hi, n_frames - 1)
    return [f for f in range(lo, hi + 1) if f != center]


class _RegionHistIndex:
    """All region color histograms of a bundle as one sparse matrix."""

    def __init__(self, frames: Sequence[FrameRecord], n_bins: int):
        rows, cols, vals = [], [], []
        self.offsets = np.zeros(len(frames) + 1, dtype=np.int64)
        row = 0
        for i, frame in enumerate(frames):
            for region in frame.regions:
                for b, c in region.color_hist:
                    rows.append(row)
                    cols.append(b)
                    vals.append(c)
                row += 1
            self.offsets[i + 1] = row
        n_cols = max(n_bins, max(cols, default=-1) + 1)
        self.matrix = sparse.csr_matrix(
            (np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(row, n_cols),
        )
        self.mass = np.asarray(self.matrix.sum(axis=1), dtype=float).ravel()

    def frame_rows(self, frame: int) -> np.ndarray:
        return np.arange(self.offsets[frame], self.offsets[frame + 1])


def _min_chi_square_per_frame(
    query: np.ndarray,
    query_cols: np.ndarray,
    index: _RegionHistIndex,
    window: Sequence[int],
) -> np.ndarray:
    """Minimum chi-square of each query row to each window frame's regions.

    Only the query's support is densified; bins outside it contribute half the
    window region's remaining mass.
    """
    result = np.full((query.shape[0], len(window)), np.inf)
    counts = np.array([index.offsets[f + 1] - index.offsets[f] for f in window], dtype=np.int64)
    if counts.sum() == 0:
        return result
    rows = np.concatenate([index.frame_rows(f) for f in window])
    restricted = np.zeros((rows.size, query_cols.size))
    in_range = query_cols < index.matrix.shape[1]
    restricted[:, in_range] = index.matrix[rows][:, query_cols[in_range]].toarray()
    chi = chi_square_matrix(query, restricted) + 0.5 * (index.mass[rows] - restricted.sum(axis=1))[None, :]
    bounds = np.concatenate([[0], np.cumsum(counts)])
    for j in range(len(window)):
        if counts[j]:
            result[:, j] = chi[:, bounds[j] : bounds[j + 1]].min(axis=1)
    return result


def region_frequency(
    region: RegionRecord,
    window: Sequence[FrameRecord],
    cfg: CueConfig,
) -> int:
    """Number of window frames holding a region within ``theta_r`` of ``region``."""
    if not window:
        return 0
    index = _RegionHistIndex(window, 0)
    query, support = dense_histograms([region.color_hist])
    mins = _min_chi_square_per_frame(query, support, index, list(range(len(window))))
    return int(np.count_nonzero(mins[0] <= cfg.theta_r))


# 🔹 Interest point matching
def _ratio_matches(query: np.ndarray, target: np.ndarray, theta_p: float, matcher: str) -> np.ndarray:
    """Per query descriptor, whether it passes the ratio test against ``target``.

    Both matchers only pick the two nearest targets; the distances are then
    measured the same way, so the matchers agree except on near-ties that
    float rounding orders differently.
    """
    if target.shape[0] < 2 or query.shape[0] == 0:
        return np.zeros(query.shape[0], dtype=bool)
    if matcher == "kdtree":
        _, nearest = cKDTree(target).query(query, k=2)
    else:
        nearest = np.argsort(cdist(query, target), axis=1, kind="stable")[:, :2]
    d = np.linalg.norm(query[:, None, :] - target[nearest], axis=2)
    d1, d2 = d[:, 0], d[:, 1]
    ok = d2 > 0
    passed = np.zeros(query.shape[0], dtype=bool)
    passed[ok] = d1[ok] / d2[ok] <= theta_p
    return passed


def _descriptors(frame: FrameRecord, ids: Optional[Sequence[int]] = None) -> np.ndarray:
    points = frame.interest_points if ids is None else [frame.interest_points[i] for i in ids]
    if not points:
        return np.zeros((0, 0))
    return np.array([p.descriptor for p in points], dtype=float)


def point_frequency(
    region: RegionRecord,
    frame: FrameRecord,
    window: Sequence[FrameRecord],
    cfg: CueConfig,
) -> float:
    """Average number of ratio-test matches of the region's points across the window."""
    n_points = len(region.member_point_ids)
    if n_points == 0:
        return 0.0
    query = _descriptors(frame, region.member_point_ids)
    total = 0
    for other in window:
        total += int(_ratio_matches(query, _descriptors(other), cfg.theta_p, cfg.matcher).sum())
    return total / n_points


# 🔹 Egocentric and object cues
def detect_hands(frame: FrameRecord, cfg: CueConfig) -> List[Point]:
    if frame.skin_superpixels is None:
        return []
    return [sp.centroid for sp in frame.skin_superpixels.superpixels if sp.skin_fraction > cfg.skin_fraction]


def frame_hands(frame: FrameRecord, cfg: CueConfig) -> List[Point]:
    if frame.hand_centroids:
        return list(frame.hand_centroids)
    return detect_hands(frame, cfg)


def hand_distance(region: RegionRecord, frame: FrameRecord, width: int, height: int, cfg: CueConfig) -> float:
    hands = frame_hands(frame, cfg)
    if not hands:
        return geometry.frame_diagonal(width, height)
    return geometry.nearest_distance(region.centroid, hands)


def gaze_distance(centroid: Point, width: int, height: int) -> float:
    return geometry.distance(centroid, geometry.frame_center(width, height))


def motion_distinctness(region: RegionRecord) -> float:
    if region.region_flow_hist is None or region.surround_flow_hist is None:
        return 0.0
    return sparse_chi_square(region.region_flow_hist, region.surround_flow_hist)


def face_overlap(bbox: Rect, faces: Sequence[Rect]) -> float:
    return geometry.max_iou(bbox, faces)


def region_geometry(region: RegionRecord) -> dict:
    cx, cy = geometry.rect_center(region.bbox)
    return {
        "size": float(region.area),
        "centroid_x": float(region.centroid[0]),
        "centroid_y": float(region.centroid[1]),
        "bbox_cx": cx,
        "bbox_cy": cy,
        "bbox_w": float(region.bbox.w),
        "bbox_h": float(region.bbox.h),
    }


# 🔹 Table assembly
def _frame_rows(b: VideoBundle, frame_idx: int, index: _RegionHistIndex, cfg: CueConfig) -> List[dict]:
    frame = b.frames[frame_idx]
    if not frame.regions:
        return []
    window = window_frames(frame_idx, len(b.frames), b.fps_effective, cfg)

    freq_region = np.zeros(len(frame.regions))
    if window:
        query, support = dense_histograms([r.color_hist for r in frame.regions])
        mins = _min_chi_square_per_frame(query, support, index, window)
        freq_region = np.count_nonzero(mins <= cfg.theta_r, axis=1)

    point_matches = np.zeros(len(frame.regions))
    queries = [_descriptors(frame, r.member_point_ids) for r in frame.regions]
    if window and any(q.shape[0] for q in queries):
        for other_idx in window:
            target = _descriptors(b.frames[other_idx])
            if target.shape[0] < 2:
                continue
            for i, q in enumerate(queries):
                if q.shape[0]:
                    point_matches[i] += _ratio_matches(q, target, cfg.theta_p, cfg.matcher).sum()

    rows = []
    for i, region in enumerate(frame.regions):
        n_points = len(region.member_point_ids)
        row = {
            "video_id": b.video_id,
            "frame": frame_idx,
            "region_id": region.region_id,
            "hand_dist": hand_distance(region, frame, b.frame_width, b.frame_height, cfg),
            "gaze_dist": gaze_distance(region.centroid, b.frame_width, b.frame_height),
            "freq_region": float(freq_region[i]),
            "freq_point": (int(point_matches[i]) / n_points) if n_points else 0.0,
            "objectness": float(region.objectness),
            "motion_distinct": motion_distinctness(region),
            "face_overlap": face_overlap(region.bbox, frame.face_boxes),
        }
        row.update(region_geometry(region))
        rows.append(row)
    return rows


def extract_cues(b: VideoBundle, cfg: CueConfig, workers: int = 1) -> pd.DataFrame:
    """One row per region (frame order, then region order) with the 14 cues."""
    if any(f.index != i for i, f in enumerate(b.frames)):
        raise CueError(f"Bundle {b.video_id} frames are not contiguous; validate it first")
    index = _RegionHistIndex(b.frames, b.color_bins)
    frame_ids = range(len(b.frames))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_frame = list(pool.map(lambda f: _frame_rows(b, f, index, cfg), frame_ids))
    else:
        per_frame = [_frame_rows(b, f, index, cfg) for f in frame_ids]
    rows = [row for frame_rows in per_frame for row in frame_rows]
    table = pd.DataFrame(rows, columns=ID_COLUMNS + list(CUE_ORDER))
    table = table.astype({"frame": "int64", "region_id": "int64"})
    logger.debug(f"Extracted cues for {len(table)} regions over {len(b.frames)} frames of {b.video_id}")
    return table


def cue_matrix(table: pd.DataFrame) -> np.ndarray:
    return table[list(CUE_ORDER)].to_numpy(dtype=float)


def header_sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".header.json")


def export_cue_table(table: pd.DataFrame, path, header: Optional[ReproHeader] = None) -> Path:
    """Write the table as CSV; a header goes to ``<stem>.header.json`` beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False)
    if header is not None:
        header_sidecar(path).write_text(header.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
