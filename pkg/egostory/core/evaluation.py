"""Evaluation of region scores and summaries against ground truth, plus baseline summarizers."""

import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from egostory.config import PipelineConfig
from egostory.core import geometry, pipeline
from egostory.core.events import effective_omega, frame_histograms, pairwise_chi_square
from egostory.core.storyboard import budget_candidates, compute_energy_stats, dp_select, summarize_by_budget
from egostory.errors import EgostoryError, EvaluationError
from egostory.schemas import (
    Event,
    GtRegion,
    ImportanceModel,
    LabeledRegion,
    MethodResult,
    MetricsReport,
    PrCurve,
    RecallPoint,
    ScoredRegion,
    Storyboard,
    StoryboardEntry,
    VideoBundle,
)

logger = logging.getLogger(__name__)

POSITIVE_IOU = 0.5

FrameSelection = Union[Storyboard, Iterable[int]]


# 🔹 Region-level precision/recall
def scored_regions(bundle: VideoBundle, scores: Sequence[np.ndarray]) -> List[ScoredRegion]:
    return [
        ScoredRegion(frame=f.index, region_id=r.region_id, bbox=r.bbox, score=float(s))
        for f in bundle.frames
        for r, s in zip(f.regions, scores[f.index])
    ]


def label_regions(predictions: Sequence[ScoredRegion], gt: Sequence[GtRegion]) -> List[LabeledRegion]:
    """Positive iff the region overlaps some ground-truth box of its frame with IoU > 0.5."""
    boxes: Dict[int, list] = {}
    for g in gt:
        boxes.setdefault(g.frame_index, []).append(g.bbox)
    return [
        LabeledRegion(**p.model_dump(), positive=geometry.max_iou(p.bbox, boxes.get(p.frame, [])) > POSITIVE_IOU)
        for p in predictions
    ]


def pr_curve(scores, positives) -> PrCurve:
    """Sweep thresholds over distinct scores, highest first; AP is the step integral (no interpolation)."""
    scores = np.asarray(scores, dtype=float)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    if n_pos == 0:
        raise EvaluationError("Average precision is undefined without positive regions")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    tp = np.cumsum(positives[order])
    fp = np.cumsum(~positives[order])
    # last index of each run of equal scores
    ends = np.flatnonzero(np.append(sorted_scores[1:] != sorted_scores[:-1], True))
    recall = tp[ends] / n_pos
    precision = tp[ends] / (tp[ends] + fp[ends])
    ap = float(np.sum(np.diff(np.concatenate([[0.0], recall])) * precision))
    return PrCurve(points=[(float(r), float(p)) for r, p in zip(recall, precision)], average_precision=ap)


def labeled_pr_curve(labeled: Sequence[LabeledRegion]) -> PrCurve:
    return pr_curve([l.score for l in labeled], [l.positive for l in labeled])


def pr_table(curve: PrCurve) -> pd.DataFrame:
    return pd.DataFrame(curve.points, columns=["recall", "precision"])


# 🔹 Summary-level metrics
def _frames_of(selection: FrameSelection) -> List[int]:
    if isinstance(selection, Storyboard):
        return selection.frames
    return [int(f) for f in selection]


def main_objects(gt: Sequence[GtRegion]) -> Dict[int, GtRegion]:
    """Largest ground-truth region per frame; ties go to the smaller label."""
    best: Dict[int, GtRegion] = {}
    for g in gt:
        cur = best.get(g.frame_index)
        key = (-geometry.rect_area(g.bbox), g.object_label)
        if cur is None or key < (-geometry.rect_area(cur.bbox), cur.object_label):
            best[g.frame_index] = g
    return best


def object_recall(selection: FrameSelection, gt: Sequence[GtRegion]) -> float:
    labels = {g.object_label for g in gt}
    if not labels:
        raise EvaluationError("Object recall needs ground truth")
    main = main_objects(gt)
    covered = {main[f].object_label for f in set(_frames_of(selection)) if f in main}
    return len(covered) / len(labels)


def prominence(selection: FrameSelection, gt: Sequence[GtRegion], width: int, height: int) -> Dict[str, float]:
    """Per covered label, the smallest centroid-to-center distance over selected frames showing it."""
    main = main_objects(gt)
    center = geometry.frame_center(width, height)
    out: Dict[str, float] = {}
    for f in _frames_of(selection):
        g = main.get(f)
        if g is None:
            continue
        d = geometry.distance(geometry.rect_center(g.bbox), center)
        out[g.object_label] = min(d, out.get(g.object_label, d))
    return dict(sorted(out.items()))


def method_result(name: str, selection: FrameSelection, bundle: VideoBundle) -> MethodResult:
    gt = bundle.ground_truth or []
    prom = prominence(selection, gt, bundle.frame_width, bundle.frame_height)
    return MethodResult(
        method=name,
        frames=sorted(_frames_of(selection)),
        object_recall=object_recall(selection, gt),
        prominence=prom,
        mean_prominence=float(np.mean(list(prom.values()))) if prom else None,
    )


# 🔹 Baselines
def _check_length(n: int, n_frames: int) -> None:
    if not 1 <= n <= n_frames:
        raise EvaluationError(f"Summary length {n} outside [1, {n_frames}]")


def _uniform_positions(size: int, n: int) -> List[int]:
    if n == 1:
        return [(size - 1) // 2]
    return [int(np.floor(i * (size - 1) / (n - 1) + 0.5)) for i in range(n)]


def _storyboard(mode: str, frames: Iterable[int], event_map: Optional[Dict[int, int]] = None) -> Storyboard:
    event_map = event_map or {}
    entries = [StoryboardEntry(frame=f, event_id=event_map.get(f)) for f in sorted(frames)]
    return Storyboard(mode=mode, k=len(entries), entries=entries)


def uniform_baseline(b: VideoBundle, n: int) -> Storyboard:
    _check_length(n, len(b.frames))
    return _storyboard("uniform", _uniform_positions(len(b.frames), n))


def allocate(n: int, sizes: Sequence[int]) -> List[int]:
    """Split ``n`` picks evenly over groups, earliest groups first, never exceeding a group's size."""
    counts = [0] * len(sizes)
    remaining = n
    while remaining > 0:
        open_groups = [i for i, size in enumerate(sizes) if counts[i] < size]
        if not open_groups:
            break
        share, extra = divmod(remaining, len(open_groups))
        for rank, i in enumerate(open_groups):
            give = min(share + (1 if rank < extra else 0), sizes[i] - counts[i])
            counts[i] += give
            remaining -= give
    return counts


def event_adaptive_baseline(b: VideoBundle, events: Sequence[Event], n: int) -> Storyboard:
    _check_length(n, len(b.frames))
    counts = allocate(n, [e.n_frames for e in events])
    frames = []
    event_map = {}
    for event, count in zip(events, counts):
        if count:
            members = event.member_frames
            picked = [members[p] for p in _uniform_positions(len(members), count)]
            frames += picked
            event_map.update({f: event.event_id for f in picked})
    return _storyboard("event_adaptive", frames, event_map)


def dissimilarity_baseline(b: VideoBundle, n: int, chi2: Optional[np.ndarray] = None) -> Storyboard:
    """Frames maximizing the color dissimilarity between consecutive picks."""
    _check_length(n, len(b.frames))
    if chi2 is None:
        chi2 = pairwise_chi_square(frame_histograms(b))
    positions = dp_select(np.zeros(len(b.frames)), -chi2, n)
    return _storyboard("dissimilarity", positions)


def _content_inclusion(similarity: np.ndarray, count: int, cover: float) -> List[int]:
    n = similarity.shape[0]
    chosen: List[int] = []
    covered = np.zeros(n, dtype=bool)
    for _ in range(min(count, n)):
        free = np.ones(n, dtype=bool)
        free[chosen] = False
        pool = free & ~covered
        if pool.any():
            target = ~covered
            gain = similarity[:, target].mean(axis=1)
            gain[~pool] = -np.inf
            pick = int(np.argmax(gain))
        else:
            # Everything is covered: take the frame least like what is already chosen.
            closeness = similarity[:, chosen].max(axis=1)
            closeness[~free] = np.inf
            pick = int(np.argmin(closeness))
        chosen.append(pick)
        covered |= similarity[pick] >= cover
    return sorted(chosen)


def content_inclusion_baseline(
    b: VideoBundle,
    events: Sequence[Event],
    n: int,
    chi2: Optional[np.ndarray] = None,
    cover: float = float(np.exp(-1.0)),
) -> Storyboard:
    """Greedy per-event coverage: repeatedly take the frame most similar to what is still uncovered."""
    _check_length(n, len(b.frames))
    if chi2 is None:
        chi2 = pairwise_chi_square(frame_histograms(b))
    iu = np.triu_indices(chi2.shape[0], k=1)
    omega = effective_omega(float(chi2[iu].mean()) if iu[0].size else 0.0)
    similarity = np.exp(-chi2 / omega)
    counts = allocate(n, [e.n_frames for e in events])
    frames = []
    event_map = {}
    for event, count in zip(events, counts):
        if count:
            members = np.asarray(event.member_frames)
            local = similarity[np.ix_(members, members)]
            picked = [int(members[p]) for p in _content_inclusion(local, count, cover)]
            frames += picked
            event_map.update({f: event.event_id for f in picked})
    return _storyboard("content_inclusion", frames, event_map)


def recall_curve(
    bundle: VideoBundle,
    methods: Dict[str, Callable[[int], Storyboard]],
    lengths: Sequence[int],
) -> List[RecallPoint]:
    gt = bundle.ground_truth or []
    points = []
    for name, summarize in methods.items():
        for n in lengths:
            try:
                selection = summarize(n)
            except EgostoryError as e:
                logger.info(f"Skipping {name} at {n} frames: {e}")
                continue
            points.append(RecallPoint(method=name, n_frames=n, object_recall=object_recall(selection, gt)))
    return points


# 🔹 Full report
def _cue_scores(bundle: VideoBundle, cue_table: pd.DataFrame, column: str) -> List[np.ndarray]:
    values = cue_table[column].to_numpy(dtype=float)
    counts = [len(f.regions) for f in bundle.frames]
    return np.split(values, np.cumsum(counts)[:-1]) if counts else []


def default_lengths(n_frames: int, n_ours: int) -> List[int]:
    return list(range(1, min(n_frames, max(10, 2 * n_ours)) + 1))


def evaluate_bundle(
    bundle: VideoBundle,
    model: ImportanceModel,
    cfg: PipelineConfig = PipelineConfig(),
    lengths: Optional[Sequence[int]] = None,
    workers: int = 1,
) -> MetricsReport:
    """Region AP, criterion-mode summary against the baselines at the same length, and recall curves."""
    gt = bundle.ground_truth or []
    if not gt:
        raise EvaluationError(f"{bundle.video_id} has no ground truth to evaluate against")
    analysis = pipeline.analyze(bundle, model, cfg, workers=workers)
    full = labeled_pr_curve(label_regions(scored_regions(bundle, analysis.scores), gt))
    objectness = labeled_pr_curve(
        label_regions(scored_regions(bundle, _cue_scores(bundle, analysis.cue_table, "objectness")), gt)
    )

    criterion_cfg = cfg.model_copy(update={"summary": cfg.summary.model_copy(update={"mode": "criterion"})})
    ours, clusters = pipeline.summarize(analysis, model, criterion_cfg, workers=workers)
    n = max(1, len(ours.entries))
    chi2 = analysis.distances.chi2 if analysis.distances is not None else None
    if chi2 is None:
        chi2 = pairwise_chi_square(frame_histograms(bundle), workers=workers)
    evs = analysis.events

    baselines: Dict[str, Callable[[int], Storyboard]] = {
        "uniform": lambda m: uniform_baseline(bundle, m),
        "event_adaptive": lambda m: event_adaptive_baseline(bundle, evs, m),
        "dissimilarity": lambda m: dissimilarity_baseline(bundle, m, chi2),
        "content_inclusion": lambda m: content_inclusion_baseline(bundle, evs, m, chi2),
    }
    methods = [method_result("criterion", ours, bundle)]
    for name, summarize in baselines.items():
        methods.append(method_result(name, summarize(n), bundle))

    budget_cfg = cfg.summary.model_copy(update={"mode": "budget"})
    stats = pipeline.energy_stats_for(analysis, model, cfg)
    if stats is None:
        stats = compute_energy_stats(
            budget_candidates(bundle, analysis.scores, evs, analysis.omega, budget_cfg, cfg.grouping, workers)
        )

    def budget(m: int) -> Storyboard:
        return summarize_by_budget(
            bundle, analysis.scores, evs, m, analysis.omega, stats, budget_cfg, cfg.grouping, workers
        )

    curve = recall_curve(bundle, {"budget": budget, **baselines}, lengths or default_lengths(len(bundle.frames), n))
    n_regions = sum(len(f.regions) for f in bundle.frames)
    logger.info(
        f"{bundle.video_id}: AP {full.average_precision:.3f} (objectness {objectness.average_precision:.3f}), "
        f"{len(ours.entries)} keyframes"
    )
    return MetricsReport(
        header=pipeline.make_header(cfg),
        video_id=bundle.video_id,
        n_frames=len(bundle.frames),
        n_regions=n_regions,
        ap_full=full.average_precision,
        ap_objectness=objectness.average_precision,
        n_events=len(evs),
        objects_per_event=len(clusters or []) / len(evs) if evs else 0.0,
        methods=methods,
        recall_curve=curve,
        pr_full=full,
    )


def report_json(report: MetricsReport) -> str:
    return report.model_dump_json(indent=2) + "\n"
