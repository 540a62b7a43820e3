"""Pipeline configuration: quantizer divisor, prominent landmark set, gate
tolerance, and ceremony frame budgets. Serialized as a flat JSON object so
every CLI command can share one --config file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

# 27 landmark indices covering chin, jaw flanks, brows, nose bridge/tip/wings,
# periocular contours, and lip corners/midpoints (0-indexed, Dlib ordering).
DEFAULT_PROMINENT_INDICES = (
    5, 8, 11,
    17, 19, 21, 22, 24, 26,
    27, 30, 31, 33, 35,
    36, 37, 39, 40, 42, 43, 45, 46,
    48, 51, 54, 57, 62,
)

PROMINENT_COUNT = 27


@dataclass(frozen=True)
class PipelineConfig:
    q: int = 8
    prominent_indices: tuple[int, ...] = DEFAULT_PROMINENT_INDICES
    frontality_tolerance_px: int = 0
    enroll_frames: int = 200
    auth_max_frames: int = 200

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"quantizer divisor must be >= 1, got {self.q}")
        if self.frontality_tolerance_px < 0:
            raise ValueError("frontality tolerance must be non-negative")
        if self.enroll_frames < 1 or self.auth_max_frames < 1:
            raise ValueError("frame budgets must be positive")
        idx = tuple(int(i) for i in self.prominent_indices)
        if len(idx) != PROMINENT_COUNT:
            raise ValueError(
                f"prominent set must have exactly {PROMINENT_COUNT} indices, got {len(idx)}"
            )
        if list(idx) != sorted(set(idx)):
            raise ValueError("prominent indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] > 67:
            raise ValueError("prominent indices must lie in [0, 67]")
        object.__setattr__(self, "prominent_indices", idx)


def load_config(path: str | Path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {"q", "prominent_indices", "frontality_tolerance_px", "enroll_frames", "auth_max_frames"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "prominent_indices" in raw:
        raw["prominent_indices"] = tuple(raw["prominent_indices"])
    return PipelineConfig(**raw)


def save_config(config: PipelineConfig, path: str | Path) -> None:
    doc = {
        "q": config.q,
        "prominent_indices": list(config.prominent_indices),
        "frontality_tolerance_px": config.frontality_tolerance_px,
        "enroll_frames": config.enroll_frames,
        "auth_max_frames": config.auth_max_frames,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
