"""Synthetic feature bundles with planted ground truth.

Every quantity the pipeline measures is planted on purpose: frames of one event
block share a global color signature, important objects recur with identical
color histograms and one-hot interest point descriptors, engaged instances sit
near the frame center and the hand and move against their surround, and the
ground-truth box of an engaged instance overlaps its region with IoU equal to
the planted prominence ``p``. Everything is drawn from a Philox generator seeded
by the scenario, so a spec always yields the same bytes.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from egostory.config import BundleConfig, CueConfig
from egostory.core import cues, geometry
from egostory.core.importance import N_CUES, PAIR_I, PAIR_J, target_importance
from egostory.errors import SynthSpecError
from egostory.schemas import (
    CUE_ORDER,
    CueVector,
    EventBlock,
    FrameRecord,
    GtRegion,
    InterestPoint,
    OracleRegion,
    PlantedObject,
    Rect,
    RegionRecord,
    RegionRef,
    ScenarioSpec,
    SkinSuperpixel,
    SkinSuperpixels,
    SynthOracle,
    TrainingSample,
    VideoBundle,
)

logger = logging.getLogger(__name__)

# Engaged instances have prominence p in [MIN_PROMINENCE, MAX_PROMINENCE); one per object has p = 1.
MIN_PROMINENCE = 0.55
MAX_PROMINENCE = 0.95
ENGAGED_OFFSET = 40.0
HAND_OFFSET = 30.0
PERIPHERAL_DISTANCE = 170.0
MAX_PLACEMENT_TRIES = 1000
FLOW_MASS = 500.0
POINT_VALUE = 100.0
POINT_SPACING = 10.0
POINT_GRID = 0.01
MAX_POINTS = 10
BACKGROUND_DIMS = 8
HAND_SKIN_FRACTION = 0.8
DECOY_SKIN_FRACTION = 0.1
OBJECTNESS_MEAN = {"engaged": 0.7, "important": 0.5, "background": 0.5, "distractor": 0.3}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class _Instance:
    label: str
    tier: str
    obj: Optional[PlantedObject]
    engaged: bool = False
    prominent: bool = False
    p: float = 0.0


# 🔹 Spec checks
def _validate(spec: ScenarioSpec, bins: BundleConfig) -> None:
    n_color = bins.color_bins_per_channel**3
    if sum(b.length for b in spec.event_blocks) != spec.n_frames:
        raise SynthSpecError(
            f"Event block lengths sum to {sum(b.length for b in spec.event_blocks)}, expected n_frames = {spec.n_frames}"
        )
    for i, block in enumerate(spec.event_blocks):
        if any(not 0 <= b < n_color for b in block.signature):
            raise SynthSpecError(f"Event block {i} signature has bins outside [0, {n_color})")
    labels = [o.label for o in spec.objects]
    if len(set(labels)) != len(labels):
        raise SynthSpecError("Planted object labels must be unique")
    used: Dict[int, str] = {}
    for obj in spec.objects:
        if obj.block >= len(spec.event_blocks):
            raise SynthSpecError(f"Object {obj.label} refers to block {obj.block}, only {len(spec.event_blocks)} exist")
        if any(not 0 <= b < n_color for b in obj.signature):
            raise SynthSpecError(f"Object {obj.label} signature has bins outside [0, {n_color})")
        if len(set(obj.signature)) != len(obj.signature):
            raise SynthSpecError(f"Object {obj.label} signature repeats a bin")
        for b in obj.signature:
            if b in used:
                raise SynthSpecError(f"Objects {used[b]} and {obj.label} share color bin {b}")
            used[b] = obj.label
        if obj.n_points > MAX_POINTS:
            raise SynthSpecError(f"Object {obj.label} has {obj.n_points} points, at most {MAX_POINTS} are supported")
        if obj.frames is not None:
            length = spec.event_blocks[obj.block].length
            if not obj.frames or len(set(obj.frames)) != len(obj.frames) or any(not 0 <= f < length for f in obj.frames):
                raise SynthSpecError(f"Object {obj.label} frames must be distinct offsets in [0, {length})")
    lo, hi = spec.background_points
    if not 0 <= lo <= hi:
        raise SynthSpecError(f"background_points must satisfy 0 <= lo <= hi, got {spec.background_points}")
    half = spec.region_side / 2
    reach = half / math.sqrt(MIN_PROMINENCE) + ENGAGED_OFFSET
    if 2 * reach > min(spec.frame_width, spec.frame_height):
        raise SynthSpecError(f"Frame {spec.frame_width}x{spec.frame_height} is too small for regions of side {spec.region_side}")
    distractors = spec.n_frames * spec.distractors_per_frame
    if distractors > n_color - len(used):
        raise SynthSpecError(f"{distractors} distractors need more than the {n_color - len(used)} free color bins")


# 🔹 Frame plans
def _draw(rng: np.random.Generator, pool: Sequence[int], count: int) -> List[int]:
    return sorted(int(f) for f in rng.choice(np.asarray(pool), size=count, replace=False))


def _plan_frames(spec: ScenarioSpec, rng: np.random.Generator) -> Dict[int, List[_Instance]]:
    starts = np.concatenate([[0], np.cumsum([b.length for b in spec.event_blocks])])
    free = {i: set(range(int(starts[i]), int(starts[i + 1]))) for i in range(len(spec.event_blocks))}
    plan: Dict[int, List[_Instance]] = {f: [] for f in range(spec.n_frames)}

    # Important objects first so at most one of them shows up per frame.
    ordered = [o for o in spec.objects if o.tier == "important"] + [o for o in spec.objects if o.tier == "background"]
    for obj in ordered:
        start = int(starts[obj.block])
        length = spec.event_blocks[obj.block].length
        pool = sorted(free[obj.block]) if obj.tier == "important" else list(range(start, start + length))
        if obj.frames is not None:
            frames = sorted(start + f for f in obj.frames)
            if obj.tier == "important" and not set(frames) <= set(pool):
                raise SynthSpecError(f"Object {obj.label} shares a frame with another important object")
        else:
            count = max(1, int(round(obj.recurrence * length)))
            if count > len(pool):
                raise SynthSpecError(f"Block {obj.block} has {len(pool)} free frames, object {obj.label} needs {count}")
            frames = _draw(rng, pool, count)

        engaged: List[int] = []
        prominent = None
        if obj.tier == "important":
            free[obj.block] -= set(frames)
            n_engaged = max(1, int(round(obj.engaged_fraction * len(frames))))
            engaged = _draw(rng, frames, n_engaged)
            prominent = int(engaged[int(rng.integers(len(engaged)))])
        for f in frames:
            inst = _Instance(label=obj.label, tier=obj.tier, obj=obj, engaged=f in engaged, prominent=f == prominent)
            if inst.prominent:
                inst.p = 1.0
            elif inst.engaged:
                inst.p = float(rng.uniform(MIN_PROMINENCE, MAX_PROMINENCE))
            plan[f].append(inst)
    return plan


# 🔹 Geometry
def _unit(rng: np.random.Generator) -> Tuple[float, float]:
    angle = float(rng.uniform(0.0, 2.0 * math.pi))
    return math.cos(angle), math.sin(angle)


def _engaged_centroid(spec: ScenarioSpec, p: float, rng: np.random.Generator) -> Tuple[float, float]:
    cx, cy = geometry.frame_center(spec.frame_width, spec.frame_height)
    radius = (1.0 - p) / (1.0 - MIN_PROMINENCE) * ENGAGED_OFFSET
    ux, uy = _unit(rng)
    return round(cx + radius * ux, 2), round(cy + radius * uy, 2)


def _peripheral_centroid(spec: ScenarioSpec, rng: np.random.Generator) -> Tuple[float, float]:
    half = spec.region_side / 2
    center = geometry.frame_center(spec.frame_width, spec.frame_height)
    for _ in range(MAX_PLACEMENT_TRIES):
        x = min(max(round(float(rng.uniform(half, spec.frame_width - half)), 2), half), spec.frame_width - half)
        y = min(max(round(float(rng.uniform(half, spec.frame_height - half)), 2), half), spec.frame_height - half)
        point = (x, y)
        if geometry.distance(point, center) >= PERIPHERAL_DISTANCE:
            return point
    raise SynthSpecError(f"No room for peripheral regions in a {spec.frame_width}x{spec.frame_height} frame")


def _frame_point(spec: ScenarioSpec, rng: np.random.Generator) -> Tuple[float, float]:
    # rounded to 0.01 px and kept inside [0, W) x [0, H)
    x = round(float(rng.uniform(0, spec.frame_width - POINT_GRID)), 2)
    y = round(float(rng.uniform(0, spec.frame_height - POINT_GRID)), 2)
    return x, y


def _box(centroid: Tuple[float, float], side: float) -> Rect:
    return Rect(x=centroid[0] - side / 2, y=centroid[1] - side / 2, w=side, h=side)


def _hist(signature: Sequence[int], mass: int) -> List[Tuple[int, float]]:
    share, extra = divmod(mass, len(signature))
    return [(int(b), float(share + (1 if i < extra else 0))) for i, b in enumerate(sorted(signature))]


def _global_hist(block: EventBlock, spec: ScenarioSpec, rng: np.random.Generator) -> List[Tuple[int, float]]:
    hist = _hist(block.signature, spec.frame_width * spec.frame_height)
    if spec.noise.global_hist > 0:
        jitter = rng.normal(0.0, spec.noise.global_hist, size=len(hist))
        hist = [(b, float(max(0.0, round(c * (1.0 + j))))) for (b, c), j in zip(hist, jitter)]
    return hist


class _BinAllocator:
    """Hands out single color bins not used by any planted object."""

    def __init__(self, taken: Sequence[int]):
        self.taken = set(taken)
        self.next = 0

    def take(self) -> int:
        while self.next in self.taken:
            self.next += 1
        b = self.next
        self.next += 1
        return b


def _objectness(kind: str, spec: ScenarioSpec, rng: np.random.Generator) -> float:
    value = OBJECTNESS_MEAN[kind] + spec.noise.objectness * float(rng.normal())
    return round(min(1.0, max(0.0, value)), 4)


# 🔹 Generation
def generate(
    spec: ScenarioSpec,
    cue_config: Optional[CueConfig] = None,
    bins: BundleConfig = BundleConfig(),
) -> Tuple[VideoBundle, SynthOracle]:
    """Build a bundle and its oracle from ``spec``; a pure function of its arguments."""
    cue_config = cue_config or CueConfig()
    _validate(spec, bins)
    rng = make_rng(spec.seed)
    plan = _plan_frames(spec, rng)

    offsets: Dict[str, int] = {}
    dim = 0
    for obj in spec.objects:
        offsets[obj.label] = dim
        dim += obj.n_points
    n_dims = dim + BACKGROUND_DIMS
    allocator = _BinAllocator([b for o in spec.objects for b in o.signature])
    block_of = np.repeat(np.arange(len(spec.event_blocks)), [b.length for b in spec.event_blocks])

    frames: List[FrameRecord] = []
    ground_truth: List[GtRegion] = []
    # per region: (label, tier, engaged, prominent, shown point indices, motion, objectness)
    planted: List[List[dict]] = []
    hands_per_frame: List[List[Tuple[float, float]]] = []
    side = float(spec.region_side)

    for f in range(spec.n_frames):
        regions: List[RegionRecord] = []
        points: List[InterestPoint] = []
        faces: List[Rect] = []
        hands: List[Tuple[float, float]] = []
        facts: List[dict] = []

        for inst in plan[f]:
            obj = inst.obj
            centroid = _engaged_centroid(spec, inst.p, rng) if inst.engaged else _peripheral_centroid(spec, rng)
            bbox = _box(centroid, side)
            shown = list(range(obj.n_points)) if inst.engaged else [0]
            member_ids = []
            for j in shown:
                descriptor = [0.0] * n_dims
                descriptor[offsets[obj.label] + j] = POINT_VALUE
                x = centroid[0] + (j - (len(shown) - 1) / 2) * POINT_SPACING
                member_ids.append(len(points))
                points.append(InterestPoint(point=(x, centroid[1]), descriptor=descriptor))
            if inst.engaged:
                flows = ([(0, FLOW_MASS)], [(1, FLOW_MASS)])
            else:
                flows = ([(0, FLOW_MASS)], [(0, FLOW_MASS)])
            kind = "engaged" if inst.engaged else inst.tier
            objectness = _objectness(kind, spec, rng)
            regions.append(
                RegionRecord(
                    region_id=len(regions),
                    area=side * side,
                    centroid=centroid,
                    bbox=bbox,
                    color_hist=_hist(obj.signature, spec.region_mass),
                    objectness=objectness,
                    region_flow_hist=flows[0],
                    surround_flow_hist=flows[1],
                    member_point_ids=member_ids,
                )
            )
            if obj.has_face:
                faces.append(bbox)
            if inst.engaged and obj.near_hand:
                ux, uy = _unit(rng)
                reach = (1.0 - inst.p) / (1.0 - MIN_PROMINENCE) * HAND_OFFSET
                hands.append((round(centroid[0] + reach * ux, 2), round(centroid[1] + reach * uy, 2)))
            if inst.engaged and inst.tier == "important":
                grown = side / math.sqrt(inst.p)
                ground_truth.append(GtRegion(frame_index=f, bbox=_box(centroid, grown), object_label=obj.label))
            facts.append(
                {
                    "label": obj.label,
                    "tier": inst.tier,
                    "engaged": inst.engaged,
                    "prominent": inst.prominent,
                    "shown": shown,
                    "motion": FLOW_MASS if inst.engaged else 0.0,
                    "objectness": objectness,
                }
            )

        for d in range(spec.distractors_per_frame):
            centroid = _peripheral_centroid(spec, rng)
            objectness = _objectness("distractor", spec, rng)
            regions.append(
                RegionRecord(
                    region_id=len(regions),
                    area=side * side,
                    centroid=centroid,
                    bbox=_box(centroid, side),
                    color_hist=_hist([allocator.take()], spec.region_mass),
                    objectness=objectness,
                )
            )
            facts.append(
                {
                    "label": f"distractor-{f}-{d}",
                    "tier": "distractor",
                    "engaged": False,
                    "prominent": False,
                    "shown": [],
                    "motion": 0.0,
                    "objectness": objectness,
                }
            )

        lo, hi = spec.background_points
        for _ in range(int(rng.integers(lo, hi + 1))):
            descriptor = [0.0] * n_dims
            noise = rng.normal(size=BACKGROUND_DIMS)
            descriptor[dim:] = [round(float(v), 4) for v in noise]
            points.append(InterestPoint(point=_frame_point(spec, rng), descriptor=descriptor))

        superpixels = None
        hand_centroids = hands
        if spec.hands_as_superpixels:
            decoy = _frame_point(spec, rng)
            entries = [SkinSuperpixel(label=i, centroid=h, skin_fraction=HAND_SKIN_FRACTION) for i, h in enumerate(hands)]
            entries.append(SkinSuperpixel(label=len(entries), centroid=decoy, skin_fraction=DECOY_SKIN_FRACTION))
            superpixels = SkinSuperpixels(label_map=f"synth://{spec.video_id}/{f}", superpixels=entries)
            hand_centroids = []

        frames.append(
            FrameRecord(
                index=f,
                global_color_hist=_global_hist(spec.event_blocks[int(block_of[f])], spec, rng),
                regions=regions,
                face_boxes=faces,
                hand_centroids=hand_centroids,
                skin_superpixels=superpixels,
                interest_points=points,
            )
        )
        planted.append(facts)
        hands_per_frame.append(hands)

    bundle = VideoBundle(
        video_id=spec.video_id,
        fps_effective=spec.fps_effective,
        fps_source=spec.fps_effective * bins.stride,
        source_stride=bins.stride,
        frame_width=spec.frame_width,
        frame_height=spec.frame_height,
        color_bins_per_channel=bins.color_bins_per_channel,
        flow_bins_per_direction=bins.flow_bins_per_direction,
        frames=frames,
        ground_truth=ground_truth,
    )
    oracle = _oracle(spec, bundle, planted, hands_per_frame, cue_config)
    logger.info(
        f"Generated {spec.video_id}: {spec.n_frames} frames, {len(oracle.regions)} regions, "
        f"{len(ground_truth)} ground-truth boxes"
    )
    return bundle, oracle


# 🔹 Oracle
def _oracle(
    spec: ScenarioSpec,
    bundle: VideoBundle,
    planted: List[List[dict]],
    hands_per_frame: List[List[Tuple[float, float]]],
    cue_config: CueConfig,
) -> SynthOracle:
    n = spec.n_frames
    # frames showing each label, and each (label, point) pair
    label_frames: Dict[str, set] = {}
    point_frames: Dict[Tuple[str, int], set] = {}
    matchable = [len(frame.interest_points) >= 2 for frame in bundle.frames]
    for f, facts in enumerate(planted):
        for fact in facts:
            label_frames.setdefault(fact["label"], set()).add(f)
            for j in fact["shown"]:
                point_frames.setdefault((fact["label"], j), set()).add(f)

    gt = bundle.gt_by_frame()
    diagonal = geometry.frame_diagonal(spec.frame_width, spec.frame_height)
    regions: List[OracleRegion] = []
    clusters: Dict[str, List[RegionRef]] = {}
    for f, (frame, facts) in enumerate(zip(bundle.frames, planted)):
        window = cues.window_frames(f, n, spec.fps_effective, cue_config)
        hands = hands_per_frame[f]
        for region, fact in zip(frame.regions, facts):
            label = fact["label"]
            shown = fact["shown"]
            freq_region = sum(1 for w in window if w in label_frames[label]) if fact["tier"] != "distractor" else 0
            if shown:
                matches = sum(1 for j in shown for w in window if matchable[w] and w in point_frames[(label, j)])
                freq_point = matches / len(shown)
            else:
                freq_point = 0.0
            values = {
                "hand_dist": geometry.nearest_distance(region.centroid, hands) if hands else diagonal,
                "gaze_dist": cues.gaze_distance(region.centroid, spec.frame_width, spec.frame_height),
                "freq_region": float(freq_region),
                "freq_point": freq_point,
                "objectness": fact["objectness"],
                "motion_distinct": fact["motion"],
                "face_overlap": cues.face_overlap(region.bbox, frame.face_boxes),
                **cues.region_geometry(region),
            }
            regions.append(
                OracleRegion(
                    frame=f,
                    region_id=region.region_id,
                    label=label,
                    tier=fact["tier"],
                    engaged=fact["engaged"],
                    prominent=fact["prominent"],
                    importance=target_importance(region.bbox, gt.get(f, [])),
                    cues=CueVector(**values),
                )
            )
            if fact["tier"] != "distractor":
                clusters.setdefault(label, []).append(RegionRef(frame=f, region_id=region.region_id))

    bounds = []
    start = 0
    for block in spec.event_blocks:
        bounds.append((start, start + block.length - 1))
        start += block.length
    important = sorted({g.object_label for g in bundle.ground_truth or []})
    return SynthOracle(
        seed=spec.seed,
        video_id=spec.video_id,
        event_bounds=bounds,
        regions=regions,
        clusters=dict(sorted(clusters.items())),
        important_labels=important,
    )


# 🔹 Scenario builders
def planted_day(
    seed: int = 0,
    n_events: int = 5,
    frames_per_event: int = 40,
    objects_per_event: int = 2,
    n_background: int = 2,
    distractors_per_frame: int = 2,
    video_id: Optional[str] = None,
) -> ScenarioSpec:
    """A multi-event day: ten important objects by default, recurring background objects and distractors."""
    blocks = [EventBlock(length=frames_per_event, signature=[40 * e + j for j in range(3)]) for e in range(n_events)]
    objects = []
    for e in range(n_events):
        for i in range(objects_per_event):
            idx = e * objects_per_event + i
            person = idx % 4 == 3
            objects.append(
                PlantedObject(
                    label=f"{'person' if person else 'object'}-{idx:02d}",
                    signature=[5000 + 4 * idx, 5001 + 4 * idx],
                    block=e,
                    n_points=2 + idx % 2,
                    has_face=person,
                    near_hand=not person,
                )
            )
    for j in range(n_background):
        objects.append(
            PlantedObject(
                label=f"background-{j:02d}",
                tier="background",
                signature=[9000 + 4 * j, 9001 + 4 * j, 9002 + 4 * j],
                block=j % n_events,
                recurrence=0.5,
                near_hand=False,
            )
        )
    return ScenarioSpec(
        seed=seed,
        video_id=video_id or f"planted-day-{seed}",
        n_frames=n_events * frames_per_event,
        event_blocks=blocks,
        objects=objects,
        distractors_per_frame=distractors_per_frame,
    )


def three_block_scenario(seed: int = 0, block_length: int = 10) -> ScenarioSpec:
    blocks = [EventBlock(length=block_length, signature=[100 * e, 100 * e + 1]) for e in range(3)]
    return ScenarioSpec(
        seed=seed,
        video_id=f"three-blocks-{seed}",
        n_frames=3 * block_length,
        event_blocks=blocks,
        distractors_per_frame=1,
    )


def single_block_scenario(seed: int = 0, n_frames: int = 30) -> ScenarioSpec:
    return ScenarioSpec(
        seed=seed,
        video_id=f"one-block-{seed}",
        n_frames=n_frames,
        event_blocks=[EventBlock(length=n_frames, signature=[7, 8, 9])],
        distractors_per_frame=1,
    )


# 🔹 Regression oracles
# Uniform ranges each cue is drawn from; they respect the cue domains.
CUE_RANGES: Dict[str, Tuple[float, float]] = {
    "hand_dist": (0.0, 800.0),
    "gaze_dist": (0.0, 400.0),
    "freq_region": (0.0, 600.0),
    "freq_point": (0.0, 50.0),
    "objectness": (0.0, 1.0),
    "motion_distinct": (0.0, 1000.0),
    "face_overlap": (0.0, 1.0),
    "size": (100.0, 50000.0),
    "centroid_x": (0.0, 640.0),
    "centroid_y": (0.0, 480.0),
    "bbox_cx": (0.0, 640.0),
    "bbox_cy": (0.0, 480.0),
    "bbox_w": (10.0, 300.0),
    "bbox_h": (10.0, 300.0),
}


def sample_cues(rng: np.random.Generator, n: int) -> np.ndarray:
    lows = np.array([CUE_RANGES[c][0] for c in CUE_ORDER])
    highs = np.array([CUE_RANGES[c][1] for c in CUE_ORDER])
    return lows + (highs - lows) * rng.random((n, N_CUES))


def _samples(x: np.ndarray, y: np.ndarray) -> List[TrainingSample]:
    return [TrainingSample(cues=CueVector.from_array(row), target=float(t)) for row, t in zip(x, y)]


def plant_regression_set(beta, n: int, seed: int = 0, noise: float = 0.0) -> List[TrainingSample]:
    """Samples whose targets follow the interaction model exactly, plus optional Gaussian noise.

    ``beta`` is the intercept followed by the 14 linear and 91 pairwise weights;
    cues are standardized with the sample's own mean and population std, the
    same convention the fitter uses.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (1 + N_CUES + len(PAIR_I),):
        raise SynthSpecError(f"Expected {1 + N_CUES + len(PAIR_I)} coefficients, got {beta.size}")
    if n < beta.size:
        raise SynthSpecError(f"Need at least {beta.size} samples, got {n}")
    rng = make_rng(seed)
    x = sample_cues(rng, n)
    z = (x - x.mean(axis=0)) / x.std(axis=0)
    terms = np.hstack([z, z[:, PAIR_I] * z[:, PAIR_J]])
    y = beta[0] + terms @ beta[1:]
    if noise > 0:
        y = y + noise * rng.normal(size=n)
    return _samples(x, y)


@dataclass(frozen=True)
class InteractionBenchmark:
    train: List[TrainingSample]
    test_cues: np.ndarray
    test_targets: np.ndarray
    test_positive: np.ndarray


def _standardize(x: np.ndarray) -> np.ndarray:
    lows = np.array([CUE_RANGES[c][0] for c in CUE_ORDER])
    highs = np.array([CUE_RANGES[c][1] for c in CUE_ORDER])
    return (x - (lows + highs) / 2) / ((highs - lows) / math.sqrt(12.0))


def interaction_importance(x: np.ndarray) -> np.ndarray:
    """Planted importance with a strong interaction: 0.8 z(gaze) + z(hand) z(motion)."""
    z = _standardize(x)
    col = {name: i for i, name in enumerate(CUE_ORDER)}
    return 0.8 * z[:, col["gaze_dist"]] + z[:, col["hand_dist"]] * z[:, col["motion_distinct"]]


def interaction_benchmark(
    seed: int = 0,
    n_train: int = 600,
    n_test: int = 2000,
    positive_fraction: float = 0.3,
) -> InteractionBenchmark:
    rng = make_rng(seed)
    x_train = sample_cues(rng, n_train)
    x_test = sample_cues(rng, n_test)
    y_test = interaction_importance(x_test)
    n_pos = int(math.ceil(positive_fraction * n_test))
    positive = np.zeros(n_test, dtype=bool)
    positive[np.argsort(-y_test, kind="stable")[:n_pos]] = True
    return InteractionBenchmark(
        train=_samples(x_train, interaction_importance(x_train)),
        test_cues=x_test,
        test_targets=y_test,
        test_positive=positive,
    )


# 🔹 Files
def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    try:
        return ScenarioSpec.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise SynthSpecError(f"Cannot read scenario {path}: {e}")
    except ValidationError as e:
        raise SynthSpecError(f"Invalid scenario {path}: {e.errors()[0]['msg']}", errors=len(e.errors()))


def save_scenario(spec: ScenarioSpec, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(spec.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def save_oracle(oracle: SynthOracle, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(oracle.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
