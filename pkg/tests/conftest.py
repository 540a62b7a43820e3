import numpy as np
import pytest

from bido.config import PipelineConfig
from bido.geometry import LandmarkFrame
from bido.simulator import MEAN_FACE, new_subject, noiseless_frame


@pytest.fixture
def config():
    return PipelineConfig()


@pytest.fixture
def mean_face_frame():
    """The embedded mean face rendered verbatim: already canonical, valid."""
    return make_frame(MEAN_FACE.copy())


def make_frame(landmarks, subject_id="t", frame_id=0, face_count=1, width=1280, height=720):
    return LandmarkFrame(
        subject_id=subject_id,
        frame_id=frame_id,
        face_count=face_count,
        width=width,
        height=height,
        landmarks=np.asarray(landmarks, dtype=np.float64),
    )


@pytest.fixture
def subject_frame():
    """A noiseless rendering of a fixed synthetic subject."""
    return noiseless_frame(new_subject(rng_seed=2024), frame_id=5)


def similarity_transform(landmarks, angle, scale, translation):
    """Reference global similarity transform used by invariance tests."""
    pts = np.asarray(landmarks, dtype=np.float64)
    rot = np.array(
        [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
    )
    return pts @ rot.T * scale + np.asarray(translation, dtype=np.float64)
