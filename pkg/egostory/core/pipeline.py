"""Shared plumbing between subcommands: cues -> scores -> events -> summary."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from egostory import __version__
from egostory.config import PipelineConfig, config_hash
from egostory.core import cues, events, grouping, importance, storyboard
from egostory.core.bundle import load_bundle, subsample
from egostory.errors import BundleError, ProtocolError
from egostory.schemas import (
    EnergyStats,
    Event,
    ImportanceModel,
    ObjectCluster,
    ReproHeader,
    Storyboard,
    VideoBundle,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Analysis:
    bundle: VideoBundle
    cue_table: pd.DataFrame
    scores: List[np.ndarray]
    distances: Optional[events.FrameDistanceMatrix]
    events: List[Event]

    @property
    def omega(self) -> float:
        return self.distances.omega if self.distances is not None else 0.0


def make_header(cfg: PipelineConfig) -> ReproHeader:
    return ReproHeader(
        package_version=__version__,
        config_hash=config_hash(cfg),
        seed=cfg.seed,
        parameters=cfg.model_dump(mode="json"),
    )


def check_protocol(bundle: VideoBundle, model: ImportanceModel, allow_overlap: bool = False) -> None:
    if bundle.video_id in model.training_video_ids:
        if not allow_overlap:
            raise ProtocolError(
                f"Video {bundle.video_id} was used to train this model; pass --allow-overlap to override",
                video_id=bundle.video_id,
            )
        logger.warning(f"Evaluating on training video {bundle.video_id}")


def segment(bundle: VideoBundle, cfg: PipelineConfig, workers: int = 1):
    if len(bundle.frames) < 2:
        only = [Event(event_id=0, member_frames=[0], start=0, end=0)] if bundle.frames else []
        return None, only
    dm = events.build_distance_matrix(bundle, cfg.events.t_window, workers=workers)
    return dm, events.segment_events(dm, cfg.events)


def analyze(bundle: VideoBundle, model: ImportanceModel, cfg: PipelineConfig, workers: int = 1) -> Analysis:
    table = cues.extract_cues(bundle, cfg.cues, workers=workers)
    scores = importance.score_regions(model, bundle, table)
    dm, evs = segment(bundle, cfg, workers=workers)
    logger.info(f"{bundle.video_id}: {len(bundle.frames)} frames, {len(table)} regions, {len(evs)} events")
    return Analysis(bundle=bundle, cue_table=table, scores=scores, distances=dm, events=evs)


def energy_stats_for(analysis: Analysis, model: ImportanceModel, cfg: PipelineConfig) -> Optional[EnergyStats]:
    if cfg.summary.stats == "model":
        if model.energy_term_stats is not None:
            return model.energy_term_stats
        logger.warning("Model carries no energy statistics; falling back to the current video")
    return None


def summarize(
    analysis: Analysis,
    model: ImportanceModel,
    cfg: PipelineConfig,
    workers: int = 1,
) -> Tuple[Storyboard, Optional[List[ObjectCluster]]]:
    if cfg.summary.mode == "criterion":
        clusters = grouping.group_events(
            analysis.events, analysis.bundle, analysis.scores, cfg.grouping, criterion=cfg.summary.tau, workers=workers
        )
        return storyboard.storyboard_from_clusters(clusters, cfg.summary.tau), clusters

    board = storyboard.summarize_by_budget(
        analysis.bundle,
        analysis.scores,
        analysis.events,
        cfg.summary.k,
        analysis.omega,
        stats=energy_stats_for(analysis, model, cfg),
        summary=cfg.summary,
        grouping=cfg.grouping,
        workers=workers,
    )
    return board, None


def training_energy_stats(
    bundles: Sequence[VideoBundle],
    tables: Sequence[pd.DataFrame],
    model: ImportanceModel,
    cfg: PipelineConfig,
    workers: int = 1,
) -> EnergyStats:
    """Energy term statistics over every frame of the training videos."""
    candidate_sets = []
    for bundle, table in zip(bundles, tables):
        if not bundle.frames:
            continue
        scores = importance.score_regions(model, bundle, table)
        omega = 0.0
        if len(bundle.frames) > 1:
            chi2 = events.pairwise_chi_square(events.frame_histograms(bundle), workers=workers)
            omega = float(chi2[np.triu_indices(len(bundle.frames), k=1)].mean())
        candidate_sets.append(storyboard.frame_candidates(bundle, scores, range(len(bundle.frames)), omega))
    return storyboard.stats_from_candidates(candidate_sets)


def relative_stride(source_stride: int, target_stride: int) -> int:
    """Extra striding needed so a bundle extracted every ``source_stride`` frames ends up every ``target_stride``."""
    if target_stride <= source_stride:
        if target_stride < source_stride:
            logger.warning(f"Bundle is already strided by {source_stride} > configured stride {target_stride}")
        return 1
    if target_stride % source_stride:
        raise BundleError(f"Configured stride {target_stride} is not a multiple of the bundle's stride {source_stride}")
    return target_stride // source_stride


def load(path, cfg: PipelineConfig, strict: bool = True) -> VideoBundle:
    b = load_bundle(path, strict=strict)
    return subsample(b, relative_stride(b.source_stride, cfg.bundle.stride))
