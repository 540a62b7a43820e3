"""Distance vectorization, floor quantization, salted hashing, and the
majority vote that turns many per-frame digests into one seed.

The byte array hashed per frame is the 27 quantized midpoint distances (one
byte each) followed by the UTF-8 salt, exactly in that order; the salt is
used verbatim (no normalization, no trimming).
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import PROMINENT_COUNT, PipelineConfig
from .errors import EmptyVote
from .geometry import CANONICAL_MIDPOINT, AlignedFrame, LandmarkFrame, Rejection, validate_frame

QUANT_CLAMP = 255
DIGEST_LENGTH = 32


@dataclass(frozen=True)
class ProminentSet:
    """The 27 landmark indices whose midpoint distances feed the hash."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) != PROMINENT_COUNT:
            raise ValueError(f"prominent set must have {PROMINENT_COUNT} indices")
        if list(idx) != sorted(set(idx)):
            raise ValueError("prominent indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] > 67:
            raise ValueError("prominent indices must lie in [0, 67]")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "ProminentSet":
        return cls(config.prominent_indices)


class QuantizedVector:
    """Salted quantized byte array; the pre-image of the frame hash.

    Backed by a mutable buffer so it can be wiped after hashing.
    """

    def __init__(self, q_values: Sequence[int], salt: str):
        values = [int(v) for v in q_values]
        if len(values) != PROMINENT_COUNT:
            raise ValueError(f"expected {PROMINENT_COUNT} quantized values")
        if any(v < 0 or v > QUANT_CLAMP for v in values):
            raise ValueError("quantized values must fit in one byte")
        self.salt_bytes = salt.encode("utf-8")
        self.packed = bytearray(bytes(values) + self.salt_bytes)

    @property
    def q_values(self) -> tuple[int, ...]:
        return tuple(self.packed[:PROMINENT_COUNT])

    def zeroize(self) -> None:
        for i in range(len(self.packed)):
            self.packed[i] = 0


class VseedDigest:
    """32-byte SHA-256 digest; per-frame candidate or majority-vote winner.

    Mutable container so the seed can be wiped once key derivation is done.
    """

    def __init__(self, digest: bytes):
        if len(digest) != DIGEST_LENGTH:
            raise ValueError(f"digest must be {DIGEST_LENGTH} bytes")
        self.bytes32 = bytearray(digest)

    def snapshot(self) -> bytes:
        """Immutable copy of the current digest bytes."""
        return bytes(self.bytes32)

    def zeroize(self) -> None:
        for i in range(DIGEST_LENGTH):
            self.bytes32[i] = 0

    def __eq__(self, other) -> bool:
        return isinstance(other, VseedDigest) and self.bytes32 == other.bytes32

    def __hash__(self):
        return hash(bytes(self.bytes32))

    def __repr__(self):
        return f"VseedDigest({bytes(self.bytes32[:4]).hex()}..)"


def distance_vector(aligned: AlignedFrame, prominent: ProminentSet) -> np.ndarray:
    """Euclidean distances of the prominent landmarks from the canonical
    midpoint (100, 70), in index order."""
    pts = aligned.aligned_landmarks[list(prominent.indices), :]
    return np.hypot(pts[:, 0] - CANONICAL_MIDPOINT[0], pts[:, 1] - CANONICAL_MIDPOINT[1])


def quantize(distances, q: int) -> list[int]:
    """Floor-divide each distance by q, clamped to one byte."""
    if q < 1:
        raise ValueError("quantizer divisor must be >= 1")
    return [min(int(d // q), QUANT_CLAMP) for d in np.asarray(distances, dtype=np.float64)]


def salted_hash(q_values: Sequence[int], salt: str) -> VseedDigest:
    """SHA-256 over the quantized bytes followed by the UTF-8 salt."""
    vec = QuantizedVector(q_values, salt)
    digest = hashlib.sha256(bytes(vec.packed)).digest()
    vec.zeroize()
    return VseedDigest(digest)


def majority_vote(digests: Sequence[VseedDigest]) -> VseedDigest:
    """The modal digest; ties broken by lexicographically smallest bytes."""
    if not digests:
        raise EmptyVote("no digests to vote over")
    counts = Counter(d.snapshot() for d in digests)
    top = max(counts.values())
    winner = min(b for b, c in counts.items() if c == top)
    return VseedDigest(winner)


def frame_digest(
    frame: LandmarkFrame,
    salt: str,
    prominent: ProminentSet,
    q: int,
    frontality_tolerance_px: int = 0,
) -> VseedDigest | Rejection:
    """Full per-frame pipeline: gate, align, vectorize, quantize, hash.

    Returns the gate's rejection reason instead of a digest when the frame
    is refused.
    """
    validated = validate_frame(frame, frontality_tolerance_px)
    if isinstance(validated, Rejection):
        return validated
    distances = distance_vector(validated, prominent)
    return salted_hash(quantize(distances, q), salt)


def frame_digest_with_config(
    frame: LandmarkFrame, salt: str, config: PipelineConfig
) -> VseedDigest | Rejection:
    return frame_digest(
        frame,
        salt,
        ProminentSet.from_config(config),
        config.q,
        config.frontality_tolerance_px,
    )
