"""Landmark wire format: JSON Lines, one frame per line.

Keys are exactly {subject_id, frame_id, face_count, width, height,
landmarks}; landmarks is a 68-element list of [x, y] number pairs. A line
that fails to parse or violates the schema is a hard error naming the line
number.
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import WireFormatError
from .geometry import LANDMARK_COUNT, LandmarkFrame

_REQUIRED_KEYS = {"subject_id", "frame_id", "face_count", "width", "height", "landmarks"}


def frame_to_json(frame: LandmarkFrame) -> str:
    doc = {
        "subject_id": frame.subject_id,
        "frame_id": frame.frame_id,
        "face_count": frame.face_count,
        "width": frame.width,
        "height": frame.height,
        "landmarks": [[float(x), float(y)] for x, y in frame.landmarks],
    }
    return json.dumps(doc, separators=(",", ":"))


def _frame_from_doc(doc, line_number: int) -> LandmarkFrame:
    if not isinstance(doc, dict):
        raise WireFormatError(line_number, "frame must be a JSON object")
    keys = set(doc)
    if keys != _REQUIRED_KEYS:
        missing = _REQUIRED_KEYS - keys
        extra = keys - _REQUIRED_KEYS
        parts = []
        if missing:
            parts.append(f"missing keys {sorted(missing)}")
        if extra:
            parts.append(f"unexpected keys {sorted(extra)}")
        raise WireFormatError(line_number, "; ".join(parts))
    landmarks = doc["landmarks"]
    if not isinstance(landmarks, list) or len(landmarks) != LANDMARK_COUNT:
        raise WireFormatError(line_number, f"landmarks must be a list of {LANDMARK_COUNT} points")
    for pt in landmarks:
        if (
            not isinstance(pt, list)
            or len(pt) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pt)
        ):
            raise WireFormatError(line_number, "each landmark must be an [x, y] number pair")
    for key in ("frame_id", "face_count", "width", "height"):
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise WireFormatError(line_number, f"{key} must be an integer")
    if not isinstance(doc["subject_id"], str):
        raise WireFormatError(line_number, "subject_id must be a string")
    try:
        return LandmarkFrame(
            subject_id=doc["subject_id"],
            frame_id=doc["frame_id"],
            face_count=doc["face_count"],
            width=doc["width"],
            height=doc["height"],
            landmarks=landmarks,
        )
    except ValueError as exc:
        raise WireFormatError(line_number, str(exc)) from exc


def frame_from_json(line: str, line_number: int = 1) -> LandmarkFrame:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireFormatError(line_number, f"invalid JSON: {exc.msg}") from exc
    return _frame_from_doc(doc, line_number)


def read_frames(source: IO[str] | str | Path) -> Iterator[LandmarkFrame]:
    """Lazily parse frames from a file path or open text stream.

    Blank lines are skipped; anything else that does not parse aborts the
    iteration with a WireFormatError carrying the 1-based line number.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from _read_stream(fh)
    else:
        yield from _read_stream(source)


def _read_stream(fh: IO[str]) -> Iterator[LandmarkFrame]:
    for line_number, line in enumerate(fh, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        yield frame_from_json(stripped, line_number)


def write_frames(frames: Iterable[LandmarkFrame], sink: IO[str] | str | Path) -> int:
    """Write frames as JSONL; returns the number of lines written."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            return write_frames(frames, fh)
    count = 0
    for frame in frames:
        sink.write(frame_to_json(frame))
        sink.write("\n")
        count += 1
    return count


def frames_to_string(frames: Iterable[LandmarkFrame]) -> str:
    buf = io.StringIO()
    write_frames(frames, buf)
    return buf.getvalue()
