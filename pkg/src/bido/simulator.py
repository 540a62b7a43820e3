"""Synthetic subjects and noisy frame streams in the landmark wire format.

Subjects are derived from an embedded 68-point mean-face template (canonical
200x200 proportions, eye-center means exactly at (70, 70) and (130, 70))
plus seeded per-landmark offsets. Frames place the face in a 1280x720 image
at webcam-realistic scale, so raw pixel jitter shrinks under alignment the
way real capture noise does. Everything is a pure function of the seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from .geometry import CANONICAL_MIDPOINT, LandmarkFrame
from .wire import write_frames

# Hand-placed mean face. Eye clusters (36-47) are mirror-symmetric about
# x=100 with integral coordinates; most prominent-landmark distances from
# (100, 70) sit near the middle of a q=8 quantization bin so the mean face
# itself is maximally jitter-tolerant.
MEAN_FACE = np.array([
    (30.00, 75.00), (38.75, 86.96), (47.50, 101.84), (56.25, 116.99),
    (65.00, 131.08), (74.32, 141.53), (82.50, 152.30), (91.25, 158.04),
    (100.00, 162.00), (108.75, 158.04), (117.50, 152.30), (125.68, 141.53),
    (135.00, 131.08), (143.75, 116.99), (152.50, 101.84), (161.25, 86.96),
    (170.00, 75.00),
    (57.99, 56.93), (63.00, 52.00), (70.71, 49.08), (81.00, 52.00), (88.17, 53.87),
    (111.83, 53.87), (119.00, 52.00), (129.29, 49.08), (137.00, 52.00), (142.01, 56.93),
    (100.00, 70.00), (100.00, 82.00), (100.00, 94.00), (100.00, 106.00),
    (87.53, 112.20), (93.00, 116.00), (100.00, 122.00), (107.00, 116.00), (112.47, 112.20),
    (63.00, 70.00), (67.00, 67.00), (72.00, 67.00), (77.00, 70.00), (72.00, 73.00), (69.00, 73.00),
    (123.00, 70.00), (128.00, 67.00), (133.00, 67.00), (137.00, 70.00), (131.00, 73.00), (128.00, 73.00),
    (77.21, 142.50), (86.00, 135.00), (94.00, 132.00), (100.00, 130.00), (106.00, 132.00),
    (114.00, 135.00), (122.79, 142.50), (114.00, 146.00), (106.00, 149.00), (100.00, 154.00),
    (94.00, 149.00), (86.00, 146.00),
    (83.00, 140.00), (93.00, 138.00), (100.00, 138.00), (107.00, 138.00), (117.00, 140.00),
    (107.00, 142.00), (100.00, 143.00), (93.00, 142.00),
], dtype=np.float64)
MEAN_FACE.flags.writeable = False

# left/right eye landmark pairs mirrored about the vertical face axis
_EYE_MIRROR_PAIRS = ((36, 45), (37, 44), (38, 43), (39, 42), (40, 47), (41, 46))

FRAME_WIDTH = 1280
FRAME_HEIGHT = 720
# face placement inside the frame: center offset and uniform wiggle
_PLACEMENT_BASE = np.array([420.0, 220.0])
_PLACEMENT_WIGGLE = 60.0

DEFAULT_SUBJECT_SPREAD_PX = 6.0


@dataclass(frozen=True)
class SubjectTemplate:
    """Ground-truth landmark geometry of one synthetic subject."""

    subject_id: str
    base_landmarks: np.ndarray
    rng_seed: int

    def __post_init__(self):
        pts = np.asarray(self.base_landmarks, dtype=np.float64)
        if pts.shape != (68, 2):
            raise ValueError("subject template needs 68 points")
        pts.flags.writeable = False
        object.__setattr__(self, "base_landmarks", pts)


@dataclass(frozen=True)
class NoiseConfig:
    """Per-frame perturbation model.

    jitter_sigma_px is applied per landmark in raw image space; the pose
    similarity transform (rotation/scale/translation) is what alignment
    must undo; invalid_frame_rate and nonfrontal_rate exercise the
    face-count and gaze gates.
    """

    jitter_sigma_px: float = 0.0
    pose_rotation_max_rad: float = 0.12
    pose_scale_range: tuple[float, float] = (2.0, 3.0)
    invalid_frame_rate: float = 0.0
    nonfrontal_rate: float = 0.0

    def __post_init__(self):
        if self.jitter_sigma_px < 0:
            raise ValueError("jitter sigma must be non-negative")
        lo, hi = self.pose_scale_range
        if not (0 < lo <= hi):
            raise ValueError("pose scale range must be positive and ordered")
        for name in ("invalid_frame_rate", "nonfrontal_rate"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability")


NOISELESS = NoiseConfig(pose_rotation_max_rad=0.0, pose_scale_range=(1.0, 1.0))


def new_subject(
    rng_seed: int,
    spread_px: float = DEFAULT_SUBJECT_SPREAD_PX,
    subject_id: str | None = None,
) -> SubjectTemplate:
    """Mean face plus seeded uniform per-landmark offsets in [-spread, +spread].

    Right-eye offsets mirror the left-eye ones about the face axis, so a
    noiseless rendering always passes the frontality gate.
    """
    if spread_px < 0:
        raise ValueError("spread must be non-negative")
    rng = np.random.default_rng(rng_seed)
    offsets = rng.uniform(-spread_px, spread_px, size=(68, 2))
    for left, right in _EYE_MIRROR_PAIRS:
        offsets[right] = offsets[left] * (-1.0, 1.0)
    return SubjectTemplate(
        subject_id=subject_id if subject_id is not None else f"subj-{rng_seed:016x}",
        base_landmarks=MEAN_FACE + offsets,
        rng_seed=rng_seed,
    )


def render_frame(
    subject: SubjectTemplate,
    noise: NoiseConfig,
    frame_id: int,
    rng: np.random.Generator,
) -> LandmarkFrame:
    """One noisy capture of the subject.

    Draws from the generator in a fixed order (pose, placement, jitter,
    gate rolls) so streams are reproducible regardless of the noise values.
    """
    phi = rng.uniform(-noise.pose_rotation_max_rad, noise.pose_rotation_max_rad)
    scale = rng.uniform(noise.pose_scale_range[0], noise.pose_scale_range[1])
    translation = _PLACEMENT_BASE + rng.uniform(-_PLACEMENT_WIGGLE, _PLACEMENT_WIGGLE, size=2)
    jitter = rng.normal(0.0, 1.0, size=(68, 2))
    invalid_roll = rng.uniform()
    invalid_pick = int(rng.integers(0, 2))
    nonfrontal_roll = rng.uniform()
    glitch_pick = int(rng.integers(0, 8))

    mid = np.asarray(CANONICAL_MIDPOINT)
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    pts = (subject.base_landmarks - mid) @ rot.T * scale + mid + translation
    pts = pts + jitter * noise.jitter_sigma_px

    if nonfrontal_roll < noise.nonfrontal_rate:
        if glitch_pick == 0:
            # detector glitch on an off-axis face: both eye clusters
            # collapse to one spot, which downstream reads as degenerate
            pts[36:48] = pts[36:48].mean(axis=0)
        else:
            # shove the left eye's outer corner outward by ~8 canonical px,
            # breaking the span symmetry regardless of drawn scale
            pts[36, 0] -= 8.0 * scale

    face_count = 1
    if invalid_roll < noise.invalid_frame_rate:
        face_count = (0, 2)[invalid_pick]

    return LandmarkFrame(
        subject_id=subject.subject_id,
        frame_id=frame_id,
        face_count=face_count,
        width=FRAME_WIDTH,
        height=FRAME_HEIGHT,
        landmarks=pts,
    )


def noiseless_frame(subject: SubjectTemplate, frame_id: int = 0) -> LandmarkFrame:
    """The subject's template rendered verbatim (identity pose, no jitter)."""
    return LandmarkFrame(
        subject_id=subject.subject_id,
        frame_id=frame_id,
        face_count=1,
        width=FRAME_WIDTH,
        height=FRAME_HEIGHT,
        landmarks=subject.base_landmarks.copy(),
    )


def subject_seeds(master_seed: int, n_subjects: int) -> list[tuple[int, int]]:
    """Per-subject (template_seed, stream_seed) pairs from one master seed."""
    root = np.random.SeedSequence(master_seed)
    state = root.generate_state(2 * n_subjects, dtype=np.uint64)
    return [(int(state[2 * k]), int(state[2 * k + 1])) for k in range(n_subjects)]


def frame_stream(
    subject: SubjectTemplate,
    noise: NoiseConfig,
    stream_seed: int,
    count: int | None = None,
    start_frame_id: int = 0,
) -> Iterator[LandmarkFrame]:
    """Sequential frames from a per-subject generator; unbounded when count
    is None (the ceremony decides when to stop pulling)."""
    rng = np.random.default_rng(stream_seed)
    frame_id = start_frame_id
    while count is None or frame_id - start_frame_id < count:
        yield render_frame(subject, noise, frame_id, rng)
        frame_id += 1


def generate_dataset(
    n_subjects: int,
    frames_per_subject: int,
    noise: NoiseConfig,
    out: IO[str] | str | Path,
    master_seed: int = 0,
    spread_px: float = DEFAULT_SUBJECT_SPREAD_PX,
) -> int:
    """Emit a wire-format dataset, grouped by subject; returns line count.

    Fully reproducible from the master seed: subject templates and their
    frame streams both derive from it.
    """
    if n_subjects < 1 or frames_per_subject < 1:
        raise ValueError("subject and frame counts must be positive")

    def all_frames():
        for k, (template_seed, stream_seed) in enumerate(subject_seeds(master_seed, n_subjects)):
            subject = new_subject(template_seed, spread_px, subject_id=f"subj-{k:04d}")
            yield from frame_stream(subject, noise, stream_seed, count=frames_per_subject)

    return write_frames(all_frames(), out)
