from pathlib import Path

import numpy as np
import pytest

from egostory.config import CueConfig
from egostory.core import synth
from egostory.core.bundle import load_bundle
from egostory.core.cues import extract_cues
from egostory.core.importance import N_PAIRS, fit_arrays, training_arrays
from egostory.schemas import CUE_ORDER, Event, ImportanceModel

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "examples"
TINY_DIR = DATA_DIR / "tiny"


def cue_model(cue: str, weight: float = 1.0, beta0: float = 0.0) -> ImportanceModel:
    """A model whose score is ``beta0 + weight * cue`` (unit stds, zero means)."""
    linear = [0.0] * len(CUE_ORDER)
    linear[CUE_ORDER.index(cue)] = weight
    return ImportanceModel(
        beta0=beta0,
        beta_linear=linear,
        beta_pair=[0.0] * N_PAIRS,
        cue_means=[0.0] * len(CUE_ORDER),
        cue_stds=[1.0] * len(CUE_ORDER),
    )


def oracle_scores(bundle, oracle):
    """Per-frame arrays of the planted importances, aligned with ``frame.regions``."""
    by_ref = {(r.frame, r.region_id): r.importance for r in oracle.regions}
    return [np.array([by_ref[(f.index, r.region_id)] for r in f.regions], dtype=float) for f in bundle.frames]


def oracle_events(oracle):
    return [
        Event(event_id=i, member_frames=list(range(start, end + 1)), start=start, end=end)
        for i, (start, end) in enumerate(oracle.event_bounds)
    ]


@pytest.fixture
def tiny_bundle():
    return load_bundle(TINY_DIR)


@pytest.fixture
def objectness_model():
    return cue_model("objectness")


@pytest.fixture(scope="session")
def planted():
    """Bundle and oracle of the default planted day (seed 0)."""
    return synth.generate(synth.planted_day(seed=0))


@pytest.fixture(scope="session")
def planted_model():
    """Full interaction model trained on two planted days disjoint from the seed-0 test day."""
    xs, ys, ids = [], [], []
    for seed in (1, 2):
        bundle, _ = synth.generate(synth.planted_day(seed=seed))
        x, y = training_arrays(bundle, extract_cues(bundle, CueConfig()))
        xs.append(x)
        ys.append(y)
        ids.append(bundle.video_id)
    return fit_arrays(np.vstack(xs), np.concatenate(ys), training_video_ids=ids)
