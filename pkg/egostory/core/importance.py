"""Region importance regression.

The model is linear in the 14 standardized cues plus all 91 pairwise products of
standardized cues, fitted by least squares. Predictions are raw (unclamped) scores.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy import linalg

from egostory.core import geometry
from egostory.core.cues import cue_matrix
from egostory.errors import DegenerateDesignError, InsufficientSamplesError, ModelCompatibilityError, ModelError
from egostory.schemas import (
    CUE_LABELS,
    CUE_ORDER,
    CueVector,
    EnergyStats,
    GtRegion,
    ImportanceModel,
    Rect,
    ReproHeader,
    TrainingSample,
    VideoBundle,
)

logger = logging.getLogger(__name__)

N_CUES = len(CUE_ORDER)
PAIR_I, PAIR_J = np.triu_indices(N_CUES, k=1)
N_PAIRS = PAIR_I.size
N_TERMS = N_CUES + N_PAIRS

CueInput = Union[CueVector, Sequence[float], np.ndarray]


def _as_matrix(x: CueInput) -> np.ndarray:
    if isinstance(x, CueVector):
        return x.as_array()[None, :]
    arr = np.asarray(x, dtype=float)
    return arr[None, :] if arr.ndim == 1 else arr


def term_names() -> List[str]:
    names = [CUE_LABELS[c] for c in CUE_ORDER]
    return names + [f"{names[i]} × {names[j]}" for i, j in zip(PAIR_I, PAIR_J)]


# 🔹 Targets
def target_importance(r: Rect, gts: Sequence[GtRegion]) -> float:
    return geometry.max_iou(r, [gt.bbox for gt in gts])


def build_training_samples(bundle: VideoBundle, cue_table: pd.DataFrame) -> List[TrainingSample]:
    x, y = training_arrays(bundle, cue_table)
    return [TrainingSample(cues=CueVector.from_array(row), target=float(t)) for row, t in zip(x, y)]


def training_arrays(bundle: VideoBundle, cue_table: pd.DataFrame) -> Tuple[np.ndarray, np.ndarray]:
    if bundle.ground_truth is None:
        raise ModelError(f"Bundle {bundle.video_id} has no ground truth to train on")
    gt_by_frame = bundle.gt_by_frame()
    boxes = {(f.index, r.region_id): r.bbox for f in bundle.frames for r in f.regions}
    targets = np.array(
        [
            target_importance(boxes[(frame, region_id)], gt_by_frame.get(frame, []))
            for frame, region_id in zip(cue_table["frame"], cue_table["region_id"])
        ],
        dtype=float,
    )
    return cue_matrix(cue_table), targets


# 🔹 Feature expansion
def expand(x: CueInput, means, stds) -> np.ndarray:
    """Standardized cues followed by their pairwise products (1,2), (1,3), ..., (13,14)."""
    single = isinstance(x, CueVector) or np.asarray(x).ndim == 1
    z = (_as_matrix(x) - np.asarray(means, dtype=float)) / np.asarray(stds, dtype=float)
    out = np.hstack([z, z[:, PAIR_I] * z[:, PAIR_J]])
    return out[0] if single else out


# 🔹 Fitting
def fit_arrays(
    x: np.ndarray,
    y: np.ndarray,
    linear_only: bool = False,
    training_video_ids: Sequence[str] = (),
    header: Optional[ReproHeader] = None,
) -> ImportanceModel:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    n_params = 1 + N_CUES if linear_only else 1 + N_TERMS
    if n == 0:
        raise InsufficientSamplesError("Cannot fit an importance model on an empty sample set")
    if n < n_params:
        raise InsufficientSamplesError(f"Need at least {n_params} samples, got {n}")
    if x.shape[1] != N_CUES:
        raise ModelError(f"Expected {N_CUES} cue columns, got {x.shape[1]}")

    means = x.mean(axis=0)
    stds = x.std(axis=0)
    degenerate = stds == 0
    if degenerate.all():
        raise DegenerateDesignError("All cues are constant across the training set")
    if degenerate.any():
        names = [CUE_ORDER[i] for i in np.flatnonzero(degenerate)]
        logger.warning(f"Constant cues {names}: standard deviation clamped to 1")
        stds = np.where(degenerate, 1.0, stds)

    features = expand(x, means, stds)
    if linear_only:
        features = features[:, :N_CUES]
    design = np.hstack([np.ones((n, 1)), features])
    beta, _, rank, _ = linalg.lstsq(design, y)
    if rank < design.shape[1]:
        logger.warning(f"Design matrix rank {rank} < {design.shape[1]}; using the minimum-norm solution")

    beta_linear = beta[1 : 1 + N_CUES]
    beta_pair = np.zeros(N_PAIRS) if linear_only else beta[1 + N_CUES :]
    logger.info(f"Fitted importance model on {n} samples (linear_only={linear_only})")
    return ImportanceModel(
        beta0=float(beta[0]),
        beta_linear=[float(b) for b in beta_linear],
        beta_pair=[float(b) for b in beta_pair],
        cue_means=[float(m) for m in means],
        cue_stds=[float(s) for s in stds],
        linear_only=linear_only,
        n_samples=n,
        training_video_ids=sorted(set(training_video_ids)),
        header=header,
    )


def fit(samples: Sequence[TrainingSample], linear_only: bool = False) -> ImportanceModel:
    if not samples:
        raise InsufficientSamplesError("Cannot fit an importance model on an empty sample set")
    x = np.array([s.cues.as_array() for s in samples])
    y = np.array([s.target for s in samples], dtype=float)
    return fit_arrays(x, y, linear_only=linear_only)


def with_energy_stats(model: ImportanceModel, stats: EnergyStats) -> ImportanceModel:
    return model.model_copy(update={"energy_term_stats": stats})


# 🔹 Prediction
def coefficients(model: ImportanceModel) -> np.ndarray:
    return np.concatenate([model.beta_linear, model.beta_pair])


def predict(model: ImportanceModel, x: CueInput):
    single = isinstance(x, CueVector) or np.asarray(x).ndim == 1
    scores = model.beta0 + expand(_as_matrix(x), model.cue_means, model.cue_stds) @ coefficients(model)
    return float(scores[0]) if single else scores


def predict_table(model: ImportanceModel, cue_table: pd.DataFrame) -> np.ndarray:
    if cue_table.empty:
        return np.zeros(0)
    return predict(model, cue_matrix(cue_table))


def score_regions(model: ImportanceModel, bundle: VideoBundle, cue_table: pd.DataFrame) -> List[np.ndarray]:
    """Per-frame arrays of predicted importance, aligned with ``frame.regions``."""
    scores = predict_table(model, cue_table)
    counts = [len(f.regions) for f in bundle.frames]
    if sum(counts) != len(scores):
        raise ModelError(f"Cue table has {len(scores)} rows but bundle {bundle.video_id} has {sum(counts)} regions")
    return np.split(scores, np.cumsum(counts)[:-1]) if counts else []


def rank_weights(model: ImportanceModel) -> List[Tuple[str, float]]:
    magnitudes = np.abs(coefficients(model))
    names = term_names()
    order = sorted(range(N_TERMS), key=lambda i: -magnitudes[i])
    return [(names[i], float(magnitudes[i])) for i in order]


# 🔹 Model files
def save_model(model: ImportanceModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_model(path) -> ImportanceModel:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ModelError(f"Cannot read model file {path}: {e}")
    except json.JSONDecodeError as e:
        raise ModelCompatibilityError(f"Model file {path} is not valid JSON: {e}")
    if raw.get("cue_order") != list(CUE_ORDER):
        raise ModelCompatibilityError(f"Model file {path} uses cue order {raw.get('cue_order')}, expected {list(CUE_ORDER)}")
    try:
        return ImportanceModel.model_validate(raw)
    except ValidationError as e:
        raise ModelCompatibilityError(f"Model file {path} is invalid: {e}")
