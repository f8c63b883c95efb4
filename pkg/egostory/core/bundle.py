"""Feature bundle storage, validation and temporal subsampling.

A bundle is a directory::

    manifest.json        video metadata (BundleManifest)
    frames.jsonl         one FrameRecord per line, histograms as [bin, count] pairs
    ground_truth.jsonl   optional, one GtRegion per line
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from egostory.core import geometry
from egostory.errors import BundleError, BundleSchemaError, BundleValidationError, DescriptorDimensionError
from egostory.schemas import (
    BundleManifest,
    FrameRecord,
    GtRegion,
    SparseHist,
    VideoBundle,
    Violation,
)

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
FRAMES_FILE = "frames.jsonl"
GROUND_TRUTH_FILE = "ground_truth.jsonl"


# 🔹 Histogram helpers
def dense_histograms(hists: Sequence[SparseHist]) -> Tuple[np.ndarray, np.ndarray]:
    """Stack sparse histograms into dense rows over their joint support.

    Columns that are zero in every row are dropped; chi-square is unaffected by them.
    Repeated bins within one histogram are summed.
    """
    support = np.unique(np.fromiter((b for h in hists for b, _ in h), dtype=np.int64))
    matrix = np.zeros((len(hists), support.size), dtype=float)
    for row, hist in enumerate(hists):
        if not hist:
            continue
        bins = np.fromiter((b for b, _ in hist), dtype=np.int64, count=len(hist))
        counts = np.fromiter((c for _, c in hist), dtype=float, count=len(hist))
        np.add.at(matrix[row], np.searchsorted(support, bins), counts)
    return matrix, support


def hist_mass(hist: SparseHist) -> float:
    return float(sum(c for _, c in hist))


# 🔹 Loading and saving
def _schema_error(e: ValidationError, source: str, line_no: Optional[int], frame_index: Optional[int]) -> BundleSchemaError:
    first = e.errors()[0]
    field_path = ".".join(str(p) for p in first.get("loc", ()))
    where = f"{source}" + (f" line {line_no}" if line_no is not None else "")
    if frame_index is not None:
        where += f" (frame {frame_index})"
    return BundleSchemaError(f"{where}: {field_path}: {first.get('msg')}", field_path=field_path, frame_index=frame_index)


def _read_jsonl(path: Path, model, source: str) -> list:
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise BundleSchemaError(f"{source} line {line_no}: invalid JSON: {e}", field_path="", frame_index=None)
            try:
                records.append(model.model_validate(raw))
            except ValidationError as e:
                frame_index = raw.get("index", raw.get("frame_index")) if isinstance(raw, dict) else None
                raise _schema_error(e, source, line_no, frame_index if isinstance(frame_index, int) else None)
    return records


def read_bundle(path) -> VideoBundle:
    """Parse a bundle directory without invariant checks or striding."""
    path = Path(path)
    manifest_path = path / MANIFEST_FILE
    frames_path = path / FRAMES_FILE
    gt_path = path / GROUND_TRUTH_FILE
    try:
        raw_manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as e:
        raise BundleError(f"Cannot read bundle manifest {manifest_path}: {e}")
    except json.JSONDecodeError as e:
        raise BundleSchemaError(f"{MANIFEST_FILE}: invalid JSON: {e}")
    try:
        manifest = BundleManifest.model_validate(raw_manifest)
    except ValidationError as e:
        raise _schema_error(e, MANIFEST_FILE, None, None)

    try:
        frames = _read_jsonl(frames_path, FrameRecord, FRAMES_FILE)
        ground_truth = _read_jsonl(gt_path, GtRegion, GROUND_TRUTH_FILE) if gt_path.exists() else None
    except OSError as e:
        raise BundleError(f"Cannot read bundle {path}: {e}")

    logger.debug(f"Read bundle {manifest.video_id}: {len(frames)} frames from {path}")
    return VideoBundle(**manifest.model_dump(), frames=frames, ground_truth=ground_truth)


def load_bundle(path, subsample_stride: int = 1, strict: bool = True) -> VideoBundle:
    if subsample_stride < 1:
        raise BundleError(f"subsample_stride must be >= 1, got {subsample_stride}")
    bundle = read_bundle(path)
    if strict:
        violations = validate_bundle(bundle)
        if violations:
            raise_for_violations(violations)
    return subsample(bundle, subsample_stride)


def raise_for_violations(violations: List[Violation]) -> None:
    dims = [v for v in violations if v.rule == "descriptor-dim"]
    if dims:
        first = dims[0]
        raise DescriptorDimensionError(
            f"Descriptor dimension mismatch in frame {first.frame_index} ({first.entity}): {first.detail}",
            violations=violations,
        )
    first = violations[0]
    raise BundleValidationError(
        f"{len(violations)} violation(s); first: [{first.rule}] frame {first.frame_index} {first.entity}: {first.detail}",
        violations=violations,
    )


def save_bundle(bundle: VideoBundle, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = bundle.manifest().model_dump(mode="json", exclude_none=True)
    (path / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    with (path / FRAMES_FILE).open("w", encoding="utf-8") as fh:
        for frame in bundle.frames:
            fh.write(frame.model_dump_json(exclude_none=True) + "\n")
    gt_path = path / GROUND_TRUTH_FILE
    if bundle.ground_truth is not None:
        with gt_path.open("w", encoding="utf-8") as fh:
            for gt in bundle.ground_truth:
                fh.write(gt.model_dump_json(exclude_none=True) + "\n")
    elif gt_path.exists():
        gt_path.unlink()
    return path


def bundle_json_schema() -> Dict[str, dict]:
    return {
        MANIFEST_FILE: BundleManifest.model_json_schema(),
        FRAMES_FILE: FrameRecord.model_json_schema(),
        GROUND_TRUTH_FILE: GtRegion.model_json_schema(),
    }


# 🔹 Subsampling
def subsample(bundle: VideoBundle, stride: int) -> VideoBundle:
    """Keep every ``stride``-th frame, re-indexed from zero.

    ``fps_effective`` is always recomputed from the source rate so that striding
    by ``s`` then ``t`` gives the same bundle as striding by ``s * t``.
    """
    if stride < 1:
        raise BundleError(f"stride must be >= 1, got {stride}")
    if stride == 1:
        return bundle
    fps_source = bundle.fps_source or bundle.fps_effective * bundle.source_stride
    source_stride = bundle.source_stride * stride
    frames = [f.model_copy(update={"index": new}) for new, f in enumerate(bundle.frames[::stride])]
    ground_truth = None
    if bundle.ground_truth is not None:
        ground_truth = [
            gt.model_copy(update={"frame_index": gt.frame_index // stride})
            for gt in bundle.ground_truth
            if gt.frame_index % stride == 0
        ]
    logger.debug(f"Subsampled {bundle.video_id} by {stride}: {len(bundle.frames)} -> {len(frames)} frames")
    return bundle.model_copy(
        update={
            "frames": frames,
            "ground_truth": ground_truth,
            "fps_source": fps_source,
            "source_stride": source_stride,
            "fps_effective": fps_source / source_stride,
        }
    )


# 🔹 Validation
def _hist_violations(hist: SparseHist, n_bins: int, frame_index: int, entity: str) -> List[Violation]:
    out = []
    if any(c < 0 for _, c in hist):
        out.append(Violation(rule="nonnegative-hist", frame_index=frame_index, entity=entity, detail="negative histogram entry"))
    bad_bins = [b for b, _ in hist if not 0 <= b < n_bins]
    if bad_bins:
        out.append(
            Violation(
                rule="hist-bin-range",
                frame_index=frame_index,
                entity=entity,
                detail=f"bins {bad_bins[:5]} outside [0, {n_bins})",
            )
        )
    return out


def validate_bundle(b: VideoBundle) -> List[Violation]:
    violations: List[Violation] = []
    width, height = b.frame_width, b.frame_height
    pixels = width * height

    indices = [f.index for f in b.frames]
    if indices != list(range(len(indices))):
        bad = next(i for i, idx in enumerate(indices) if idx != i)
        violations.append(
            Violation(
                rule="contiguous-frames",
                frame_index=indices[bad],
                entity="frame",
                detail=f"expected index {bad}, found {indices[bad]}",
            )
        )

    descriptor_dim: Optional[int] = None
    for frame in b.frames:
        fi = frame.index
        violations += _hist_violations(frame.global_color_hist, b.color_bins, fi, "global_color_hist")

        for i, face in enumerate(frame.face_boxes):
            if not geometry.rect_in_frame(face, width, height):
                violations.append(Violation(rule="face-in-frame", frame_index=fi, entity=f"face {i}", detail=str(face)))
        for i, hand in enumerate(frame.hand_centroids):
            if not geometry.point_in_frame(hand, width, height):
                violations.append(Violation(rule="point-in-frame", frame_index=fi, entity=f"hand {i}", detail=str(hand)))
        if frame.skin_superpixels is not None:
            for sp in frame.skin_superpixels.superpixels:
                if not geometry.point_in_frame(sp.centroid, width, height):
                    violations.append(
                        Violation(rule="point-in-frame", frame_index=fi, entity=f"superpixel {sp.label}", detail=str(sp.centroid))
                    )
                if not 0.0 <= sp.skin_fraction <= 1.0:
                    violations.append(
                        Violation(
                            rule="skin-fraction-range",
                            frame_index=fi,
                            entity=f"superpixel {sp.label}",
                            detail=f"skin_fraction {sp.skin_fraction}",
                        )
                    )

        for i, ip in enumerate(frame.interest_points):
            if not geometry.point_in_frame(ip.point, width, height):
                violations.append(Violation(rule="point-in-frame", frame_index=fi, entity=f"point {i}", detail=str(ip.point)))
            if descriptor_dim is None:
                descriptor_dim = len(ip.descriptor)
            elif len(ip.descriptor) != descriptor_dim:
                violations.append(
                    Violation(
                        rule="descriptor-dim",
                        frame_index=fi,
                        entity=f"point {i}",
                        detail=f"dimension {len(ip.descriptor)}, expected {descriptor_dim}",
                    )
                )

        seen_ids = set()
        n_points = len(frame.interest_points)
        for region in frame.regions:
            entity = f"region {region.region_id}"
            if region.region_id in seen_ids:
                violations.append(Violation(rule="region-id-unique", frame_index=fi, entity=entity, detail="duplicate region_id"))
            seen_ids.add(region.region_id)
            if region.area <= 0:
                violations.append(Violation(rule="area-positive", frame_index=fi, entity=entity, detail=f"area {region.area}"))
            if not geometry.rect_in_frame(region.bbox, width, height):
                violations.append(
                    Violation(
                        rule="bbox-in-frame",
                        frame_index=fi,
                        entity=entity,
                        detail=f"bbox {region.bbox} outside {width}x{height}",
                    )
                )
            if not geometry.point_in_rect(region.centroid, region.bbox):
                violations.append(
                    Violation(rule="centroid-in-bbox", frame_index=fi, entity=entity, detail=f"centroid {region.centroid}")
                )
            violations += _hist_violations(region.color_hist, b.color_bins, fi, entity)
            mass = hist_mass(region.color_hist)
            if mass > pixels:
                violations.append(
                    Violation(rule="hist-mass", frame_index=fi, entity=entity, detail=f"color mass {mass} > {pixels} pixels")
                )
            for flow in (region.region_flow_hist, region.surround_flow_hist):
                if flow is not None:
                    violations += _hist_violations(flow, b.flow_bins, fi, entity)
            bad_members = [p for p in region.member_point_ids if not 0 <= p < n_points]
            if bad_members:
                violations.append(
                    Violation(
                        rule="member-point-range",
                        frame_index=fi,
                        entity=entity,
                        detail=f"point ids {bad_members[:5]} outside [0, {n_points})",
                    )
                )

    n_frames = len(b.frames)
    for i, gt in enumerate(b.ground_truth or []):
        entity = f"gt {i}"
        if not 0 <= gt.frame_index < n_frames or not geometry.rect_in_frame(gt.bbox, width, height):
            violations.append(
                Violation(rule="gt-in-frame", frame_index=gt.frame_index, entity=entity, detail=f"bbox {gt.bbox}")
            )
        if not gt.object_label.strip():
            violations.append(Violation(rule="gt-label", frame_index=gt.frame_index, entity=entity, detail="empty object_label"))

    return violations
