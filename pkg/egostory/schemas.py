from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

Point = Tuple[float, float]
SparseHist = List[Tuple[int, float]]

BUNDLE_FORMAT_VERSION = 1
MODEL_FORMAT_VERSION = 1
MANIFEST_FORMAT_VERSION = 1

CUE_ORDER: Tuple[str, ...] = (
    "hand_dist",
    "gaze_dist",
    "freq_region",
    "freq_point",
    "objectness",
    "motion_distinct",
    "face_overlap",
    "size",
    "centroid_x",
    "centroid_y",
    "bbox_cx",
    "bbox_cy",
    "bbox_w",
    "bbox_h",
)

# Display names used by the weight ranking ("face × y-position").
CUE_LABELS: Dict[str, str] = {
    "hand_dist": "hand distance",
    "gaze_dist": "gaze distance",
    "freq_region": "region frequency",
    "freq_point": "point frequency",
    "objectness": "objectness",
    "motion_distinct": "motion",
    "face_overlap": "face",
    "size": "size",
    "centroid_x": "x-position",
    "centroid_y": "y-position",
    "bbox_cx": "box x-center",
    "bbox_cy": "box y-center",
    "bbox_w": "box width",
    "bbox_h": "box height",
}


class _Record(BaseModel):
    model_config = ConfigDict(frozen=True)


# 📦 Bundle records
class Rect(_Record):
    x: float
    y: float
    w: float
    h: float


class SkinSuperpixel(_Record):
    label: int
    centroid: Point
    skin_fraction: float


class SkinSuperpixels(_Record):
    label_map: str = Field("", description="reference to the upstream label map")
    superpixels: List[SkinSuperpixel] = []


class InterestPoint(_Record):
    point: Point
    descriptor: List[float]


class RegionRecord(_Record):
    region_id: int
    area: float
    centroid: Point
    bbox: Rect
    color_hist: SparseHist
    objectness: float = 0.0
    region_flow_hist: Optional[SparseHist] = None
    surround_flow_hist: Optional[SparseHist] = None
    member_point_ids: List[int] = []


class FrameRecord(_Record):
    index: int
    global_color_hist: SparseHist
    regions: List[RegionRecord] = []
    face_boxes: List[Rect] = []
    hand_centroids: List[Point] = []
    skin_superpixels: Optional[SkinSuperpixels] = None
    interest_points: List[InterestPoint] = []


class GtRegion(_Record):
    frame_index: int
    bbox: Rect
    polygon: Optional[List[Point]] = None
    object_label: str


class ReproHeader(_Record):
    package_version: str
    config_hash: str
    seed: int
    parameters: Dict[str, Any] = {}


class BundleManifest(_Record):
    format_version: int = BUNDLE_FORMAT_VERSION
    video_id: str
    fps_effective: float = Field(..., gt=0)
    fps_source: Optional[float] = Field(None, gt=0)
    source_stride: int = Field(1, ge=1)
    frame_width: int = Field(..., gt=0)
    frame_height: int = Field(..., gt=0)
    color_bins_per_channel: int = Field(23, ge=1)
    flow_bins_per_direction: int = Field(61, ge=1)
    border_policy: Literal["clipped"] = "clipped"
    header: Optional[ReproHeader] = None

    @property
    def color_bins(self) -> int:
        return self.color_bins_per_channel ** 3

    @property
    def flow_bins(self) -> int:
        return 2 * self.flow_bins_per_direction


class VideoBundle(BundleManifest):
    frames: List[FrameRecord] = []
    ground_truth: Optional[List[GtRegion]] = None

    def manifest(self) -> BundleManifest:
        return BundleManifest.model_validate(self.model_dump(exclude={"frames", "ground_truth"}))

    def gt_by_frame(self) -> Dict[int, List[GtRegion]]:
        grouped: Dict[int, List[GtRegion]] = {}
        for gt in self.ground_truth or []:
            grouped.setdefault(gt.frame_index, []).append(gt)
        return grouped


class Violation(_Record):
    rule: str
    frame_index: Optional[int] = None
    entity: str = ""
    detail: str = ""


# 🧮 Cues and importance
class CueVector(_Record):
    hand_dist: float
    gaze_dist: float
    freq_region: float = Field(..., ge=0)
    freq_point: float = Field(..., ge=0)
    objectness: float
    motion_distinct: float = Field(..., ge=0)
    face_overlap: float = Field(..., ge=0, le=1)
    size: float
    centroid_x: float
    centroid_y: float
    bbox_cx: float
    bbox_cy: float
    bbox_w: float
    bbox_h: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in CUE_ORDER], dtype=float)

    @classmethod
    def from_array(cls, values) -> "CueVector":
        return cls(**{name: float(v) for name, v in zip(CUE_ORDER, values)})


class TrainingSample(_Record):
    cues: CueVector
    # Overlap targets lie in [0, 1]; planted regression sets may leave that range.
    target: float


class TermStats(_Record):
    mean: float = 0.0
    std: float = Field(1.0, gt=0)


class EnergyStats(_Record):
    importance: TermStats = TermStats()
    similarity: TermStats = TermStats()
    spread: TermStats = TermStats()


class ImportanceModel(_Record):
    format_version: int = MODEL_FORMAT_VERSION
    cue_order: List[str] = list(CUE_ORDER)
    beta0: float
    beta_linear: List[float] = Field(..., min_length=14, max_length=14)
    beta_pair: List[float] = Field(..., min_length=91, max_length=91)
    cue_means: List[float] = Field(..., min_length=14, max_length=14)
    cue_stds: List[float] = Field(..., min_length=14, max_length=14)
    linear_only: bool = False
    n_samples: int = 0
    training_video_ids: List[str] = []
    energy_term_stats: Optional[EnergyStats] = None
    header: Optional[ReproHeader] = None


# 🎞️ Events, clusters and storyboards
class Event(_Record):
    event_id: int
    member_frames: List[int] = Field(..., min_length=1)
    start: int
    end: int

    @property
    def n_frames(self) -> int:
        return len(self.member_frames)


class RegionRef(_Record):
    frame: int
    region_id: int


class ObjectCluster(_Record):
    event_id: int = 0
    members: List[RegionRef] = Field(..., min_length=1)
    member_importances: List[float] = []
    avg_importance: float
    representative: Optional[RegionRef] = None
    representative_importance: Optional[float] = None


class StoryboardEntry(_Record):
    frame: int
    event_id: Optional[int] = None
    region: Optional[RegionRef] = None
    importance: Optional[float] = None
    also_shown: List[RegionRef] = []


StoryboardMode = Literal["criterion", "budget", "uniform", "event_adaptive", "dissimilarity", "content_inclusion"]


class Storyboard(_Record):
    mode: StoryboardMode
    tau: Optional[float] = None
    k: Optional[int] = None
    energy: Optional[float] = None
    entries: List[StoryboardEntry] = []

    @property
    def frames(self) -> List[int]:
        return [entry.frame for entry in self.entries]


class ManifestEvent(_Record):
    event_id: int
    start: int
    end: int
    n_frames: int
    start_time_s: float
    end_time_s: float


class ManifestEntry(_Record):
    frame: int
    timestamp_s: float
    event_id: Optional[int] = None
    region_id: Optional[int] = None
    importance: Optional[float] = None
    also_shown: List[RegionRef] = []


class StoryboardManifest(_Record):
    format_version: int = MANIFEST_FORMAT_VERSION
    header: ReproHeader
    video_id: str
    fps_effective: float
    mode: StoryboardMode
    tau: Optional[float] = None
    k: Optional[int] = None
    energy: Optional[float] = None
    events: List[ManifestEvent] = []
    entries: List[ManifestEntry] = []
    clusters: Optional[List[ObjectCluster]] = None


# 📊 Evaluation
class ScoredRegion(_Record):
    frame: int
    region_id: int
    bbox: Rect
    score: float


class LabeledRegion(ScoredRegion):
    positive: bool


class PrCurve(_Record):
    points: List[Tuple[float, float]] = []
    average_precision: float


class MethodResult(_Record):
    method: str
    frames: List[int] = []
    object_recall: float
    prominence: Dict[str, float] = {}
    mean_prominence: Optional[float] = None


class RecallPoint(_Record):
    method: str
    n_frames: int
    object_recall: float


class MetricsReport(_Record):
    header: ReproHeader
    video_id: str
    n_frames: int
    n_regions: int
    ap_full: float
    ap_objectness: float
    n_events: int
    objects_per_event: float
    methods: List[MethodResult] = []
    recall_curve: List[RecallPoint] = []
    pr_full: Optional[PrCurve] = None


# 🧪 Synthetic scenarios
class EventBlock(_Record):
    length: int = Field(..., ge=1)
    signature: List[int] = Field(..., min_length=1, description="global color bins of the block")


class PlantedObject(_Record):
    label: str = Field(..., min_length=1)
    tier: Literal["important", "background"] = "important"
    signature: List[int] = Field(..., min_length=1, description="region color bins")
    block: int = Field(0, ge=0)
    frames: Optional[List[int]] = Field(None, description="explicit frames, relative to the block start")
    recurrence: float = Field(0.35, gt=0, le=1)
    engaged_fraction: float = Field(0.6, gt=0, le=1)
    n_points: int = Field(2, ge=1)
    has_face: bool = False
    near_hand: bool = True


class NoiseLevels(_Record):
    global_hist: float = Field(0.0, ge=0)
    objectness: float = Field(0.1, ge=0)


class ScenarioSpec(_Record):
    seed: int = 0
    video_id: str = "synth"
    n_frames: int = Field(..., ge=1)
    fps_effective: float = Field(1.0, gt=0)
    frame_width: int = Field(640, gt=0)
    frame_height: int = Field(480, gt=0)
    event_blocks: List[EventBlock] = Field(..., min_length=1)
    objects: List[PlantedObject] = []
    distractors_per_frame: int = Field(2, ge=0)
    region_mass: int = Field(12000, ge=1)
    region_side: int = Field(110, ge=2)
    background_points: Tuple[int, int] = (2, 4)
    hands_as_superpixels: bool = False
    noise: NoiseLevels = NoiseLevels()


class OracleRegion(_Record):
    frame: int
    region_id: int
    label: str
    tier: Literal["important", "background", "distractor"]
    engaged: bool = False
    prominent: bool = False
    importance: float
    cues: CueVector


class SynthOracle(_Record):
    seed: int
    video_id: str
    event_bounds: List[Tuple[int, int]]
    regions: List[OracleRegion] = []
    clusters: Dict[str, List[RegionRef]] = {}
    important_labels: List[str] = []
    header: Optional[ReproHeader] = None


# 🗄️ Run registry
class RunMetricOut(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    method: str
    name: str
    value: Optional[float] = None


class EvaluationRunOut(BaseModel):
    model_config = ConfigDict(from_attributes=True, protected_namespaces=())

    id: int
    video_id: str
    model_hash: str
    config_hash: str
    average_precision: float
    objectness_ap: float
    n_keyframes: int
    object_recall: float
    mean_prominence: Optional[float] = None
    metrics: List[RunMetricOut] = []
