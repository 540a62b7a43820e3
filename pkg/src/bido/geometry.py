"""Landmark frame validation, eye geometry, affine alignment, and the
frontality gate.

All operations are pure functions over immutable values. Alignment maps the
eye centers to the canonical positions (70, 70) and (130, 70) inside a
200x200 face space, with the inter-eye midpoint pinned at (100, 70); the
similarity normalization is what makes downstream midpoint distances
invariant to in-plane pose and capture scale.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEyes

LANDMARK_COUNT = 68
LEFT_EYE_INDICES = tuple(range(36, 42))
RIGHT_EYE_INDICES = tuple(range(42, 48))

CANONICAL_LEFT_EYE = (70.0, 70.0)
CANONICAL_RIGHT_EYE = (130.0, 70.0)
CANONICAL_MIDPOINT = (100.0, 70.0)
CANONICAL_EYE_DISTANCE = 60.0

# below this inter-eye distance (px) the detection is treated as degenerate
MIN_EYE_DISTANCE = 1e-9


@dataclass(frozen=True)
class LandmarkFrame:
    """One capture event: 68 (x, y) image-coordinate points plus the
    upstream detector's face count."""

    subject_id: str
    frame_id: int
    face_count: int
    width: int
    height: int
    landmarks: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.landmarks, dtype=np.float64)
        if pts.shape != (LANDMARK_COUNT, 2):
            raise ValueError(f"expected {LANDMARK_COUNT} landmark points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        if self.face_count < 0:
            raise ValueError("face_count must be non-negative")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        pts.flags.writeable = False
        object.__setattr__(self, "landmarks", pts)


@dataclass(frozen=True)
class EyeGeometry:
    """Inter-eye displacement, distance, and tilt of a frame."""

    left_center: tuple[float, float]
    right_center: tuple[float, float]
    dx: float
    dy: float
    d: float
    theta: float


@dataclass(frozen=True)
class AlignmentTransform:
    """Similarity transform into canonical face space.

    ``m`` is the 2x3 scale-and-rotation matrix that fixes the raw inter-eye
    midpoint in place; ``canonical_shift`` is the translation appended after
    it, moving that midpoint to (100, 70).
    """

    alpha: float
    theta: float
    m: np.ndarray
    canonical_shift: tuple[float, float]
    canonical_midpoint: tuple[float, float] = CANONICAL_MIDPOINT

    def apply_point(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=np.float64)
        return self.m[:, :2] @ p + self.m[:, 2] + np.asarray(self.canonical_shift)


@dataclass(frozen=True)
class AlignedFrame:
    """A frame's 68 landmarks mapped into canonical 200x200 face space."""

    frame_id: int
    aligned_landmarks: np.ndarray
    midpoint: tuple[float, float] = CANONICAL_MIDPOINT

    def __post_init__(self):
        pts = np.asarray(self.aligned_landmarks, dtype=np.float64)
        if pts.shape != (LANDMARK_COUNT, 2):
            raise ValueError("aligned frame must carry 68 points")
        pts.flags.writeable = False
        object.__setattr__(self, "aligned_landmarks", pts)


class Rejection(enum.Enum):
    """Why the gate refused a frame. Values are the stable wire names."""

    NOT_EXACTLY_ONE_FACE = "NotExactlyOneFace"
    DEGENERATE_EYES = "DegenerateEyes"
    NOT_FRONTAL = "NotFrontal"


def eye_centers(frame: LandmarkFrame) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic means of the six left-eye (36-41) and right-eye (42-47)
    contour landmarks."""
    pts = frame.landmarks
    left = pts[LEFT_EYE_INDICES, :].mean(axis=0)
    right = pts[RIGHT_EYE_INDICES, :].mean(axis=0)
    return left, right


def eye_geometry(left, right) -> EyeGeometry:
    """Displacement, distance, and tilt between the eye centers.

    Raises DegenerateEyes when the centers (near-)coincide, which would make
    scale and tilt meaningless.
    """
    lx, ly = float(left[0]), float(left[1])
    rx, ry = float(right[0]), float(right[1])
    dx = rx - lx
    dy = ry - ly
    d = math.hypot(dx, dy)
    if d < MIN_EYE_DISTANCE:
        raise DegenerateEyes(f"inter-eye distance {d} below {MIN_EYE_DISTANCE}")
    theta = math.atan2(dy, dx)
    return EyeGeometry((lx, ly), (rx, ry), dx, dy, d, theta)


def alignment_transform(geom: EyeGeometry) -> AlignmentTransform:
    """Build the canonicalizing similarity transform from eye geometry.

    The 2x3 matrix scales by alpha = 60/d and rotates by -theta about the raw
    inter-eye midpoint C (its translation column is chosen so C maps to
    itself); the post-shift then places C at (100, 70), which lands the eye
    centers exactly on (70, 70) and (130, 70).
    """
    alpha = CANONICAL_EYE_DISTANCE / geom.d
    c = alpha * math.cos(geom.theta)
    s = alpha * math.sin(geom.theta)
    cx = (geom.left_center[0] + geom.right_center[0]) / 2.0
    cy = (geom.left_center[1] + geom.right_center[1]) / 2.0
    tx = (1.0 - c) * cx - s * cy
    ty = s * cx + (1.0 - c) * cy
    m = np.array([[c, s, tx], [-s, c, ty]], dtype=np.float64)
    shift = (CANONICAL_MIDPOINT[0] - cx, CANONICAL_MIDPOINT[1] - cy)
    return AlignmentTransform(alpha=alpha, theta=geom.theta, m=m, canonical_shift=shift)


def apply_transform(transform: AlignmentTransform, frame: LandmarkFrame) -> AlignedFrame:
    """Map all 68 landmarks through the transform (matrix, then shift)."""
    pts = frame.landmarks
    out = pts @ transform.m[:, :2].T + transform.m[:, 2]
    out = out + np.asarray(transform.canonical_shift)
    return AlignedFrame(frame_id=frame.frame_id, aligned_landmarks=out)


def _eye_span(aligned: AlignedFrame, indices) -> int:
    # horizontal distances from the canonical midpoint, in whole pixels
    dist = np.rint(np.abs(aligned.aligned_landmarks[indices, 0] - CANONICAL_MIDPOINT[0]))
    return int(dist.max() - dist.min())


def frontality_check(aligned: AlignedFrame, tolerance_px: int = 0) -> bool:
    """Gaze gate: the two eyes' horizontal spans about x=100 must agree.

    Spans are computed on integer-rounded distances; the default tolerance
    of 0 demands exact equality.
    """
    if tolerance_px < 0:
        raise ValueError("tolerance must be non-negative")
    span_left = _eye_span(aligned, LEFT_EYE_INDICES)
    span_right = _eye_span(aligned, RIGHT_EYE_INDICES)
    return abs(span_left - span_right) <= tolerance_px


def validate_frame(
    frame: LandmarkFrame, frontality_tolerance_px: int = 0
) -> AlignedFrame | Rejection:
    """Run the acquisition gates and return the aligned frame or the reason
    it was refused. Total: never raises on a well-formed frame."""
    if frame.face_count != 1:
        return Rejection.NOT_EXACTLY_ONE_FACE
    left, right = eye_centers(frame)
    try:
        geom = eye_geometry(left, right)
    except DegenerateEyes:
        return Rejection.DEGENERATE_EYES
    aligned = apply_transform(alignment_transform(geom), frame)
    if not frontality_check(aligned, frontality_tolerance_px):
        return Rejection.NOT_FRONTAL
    return aligned
