"""Reading, writing and validating 3D landmark sequence files.

A sequence file is a UTF-8 JSON document::

    {"subject_id": "H001", "expression": "happy",
     "frames": [{"level": 1, "points": [[1, x, y, z], ...]}, ...]}

A dataset manifest is a JSON array of sequence file paths relative to the
manifest's directory.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

N_POINTS = 83
EXPRESSIONS = ("happy", "sad")
LEVELS = (1, 2, 3, 4)

_SEQUENCE_KEYS = {"subject_id", "expression", "frames"}
_FRAME_KEYS = {"level", "points"}


class LandmarkFormatError(ValueError):
    """Raised for any malformed sequence file or invalid sequence value."""

    def __init__(self, message: str, source: str | None = None):
        self.message = message
        self.source = source
        super().__init__(f"{source}: {message}" if source else message)


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class LandmarkFrame:
    level: int
    points: Mapping[int, Point3]


@dataclass(frozen=True)
class LandmarkSequence:
    subject_id: str
    expression: str
    frames: tuple[LandmarkFrame, ...]

    def frame(self, level: int) -> LandmarkFrame:
        for fr in self.frames:
            if fr.level == level:
                return fr
        raise KeyError(level)


# Union of the point ids used by the default distance properties.
DEFAULT_SELECTION: tuple[int, ...] = (9, 11, 15, 27, 28, 45, 52, 55, 58, 76, 82)


def _check_levels(levels: Sequence[int], strict: bool) -> None:
    if strict:
        if tuple(levels) != LEVELS:
            raise LandmarkFormatError(
                f"expected levels 1,2,3,4 in ascending order, got {list(levels)}"
            )
        return
    if len(levels) < 2:
        raise LandmarkFormatError(f"need at least 2 frames, got {len(levels)}")
    if levels[0] != 1:
        raise LandmarkFormatError(f"first frame must be level 1, got {levels[0]}")
    for a, b in zip(levels, levels[1:]):
        if b <= a:
            raise LandmarkFormatError(f"levels out of order: {a} followed by {b}")
    for lv in levels:
        if lv not in LEVELS:
            raise LandmarkFormatError(f"level {lv} outside 1..4")


def validate_sequence(
    seq: LandmarkSequence,
    required_ids: Iterable[int] = DEFAULT_SELECTION,
    strict: bool = True,
) -> None:
    """Check every sequence invariant; raise LandmarkFormatError on the first violation."""
    if not isinstance(seq.subject_id, str):
        raise LandmarkFormatError("subject_id must be a string")
    if seq.expression not in EXPRESSIONS:
        raise LandmarkFormatError(f"unknown expression label {seq.expression!r}")
    if not seq.frames:
        raise LandmarkFormatError("sequence has no frames")
    _check_levels([fr.level for fr in seq.frames], strict)
    required = tuple(required_ids)
    for fr in seq.frames:
        for pid, pt in fr.points.items():
            if not 1 <= pid <= N_POINTS:
                raise LandmarkFormatError(f"point id {pid} outside 1..{N_POINTS}")
            if not all(math.isfinite(c) for c in pt):
                raise LandmarkFormatError(
                    f"non-finite coordinate for point {pid} in level {fr.level}"
                )
        for pid in required:
            if pid not in fr.points:
                raise LandmarkFormatError(
                    f"missing required point {pid} in level {fr.level}"
                )


def _coord(value, pid: int, level) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise LandmarkFormatError(
            f"coordinate of point {pid} in level {level} is not a number"
        )
    if isinstance(value, str):
        try:
            parsed = float(value)
        except ValueError:
            raise LandmarkFormatError(
                f"coordinate of point {pid} in level {level} is not a number"
            ) from None
        if math.isfinite(parsed):
            # finite strings are still a type error; only non-finite tokens get the specific message
            raise LandmarkFormatError(
                f"coordinate of point {pid} in level {level} is not a number"
            )
        value = parsed
    value = float(value)
    if not math.isfinite(value):
        raise LandmarkFormatError(f"non-finite coordinate for point {pid} in level {level}")
    return value


def _parse_frame(obj, index: int, strict: bool) -> LandmarkFrame:
    if not isinstance(obj, dict):
        raise LandmarkFormatError(f"frame {index} is not an object")
    missing = _FRAME_KEYS - obj.keys()
    if missing:
        raise LandmarkFormatError(f"frame {index} lacks key(s) {sorted(missing)}")
    if strict and obj.keys() - _FRAME_KEYS:
        raise LandmarkFormatError(
            f"frame {index} has unknown key(s) {sorted(obj.keys() - _FRAME_KEYS)}"
        )
    level = obj["level"]
    if isinstance(level, bool) or not isinstance(level, int):
        raise LandmarkFormatError(f"frame {index} level must be an integer")
    if not isinstance(obj["points"], list):
        raise LandmarkFormatError(f"frame {index} points must be an array")
    points: dict[int, Point3] = {}
    for entry in obj["points"]:
        if not isinstance(entry, list) or len(entry) != 4:
            raise LandmarkFormatError(
                f"frame {index}: each point must be [id, x, y, z], got {entry!r}"
            )
        pid = entry[0]
        if isinstance(pid, bool) or not isinstance(pid, int):
            raise LandmarkFormatError(f"frame {index}: point id {pid!r} is not an integer")
        if pid in points:
            raise LandmarkFormatError(f"duplicate point id {pid} in level {level}")
        points[pid] = Point3(*(_coord(v, pid, level) for v in entry[1:]))
    return LandmarkFrame(level=level, points=points)


def parse_sequence(
    text: str,
    strict: bool = True,
    required_ids: Iterable[int] = DEFAULT_SELECTION,
    source: str | None = None,
) -> LandmarkSequence:
    """Parse and validate one sequence document.

    ``strict`` demands exactly four frames at levels 1..4 and rejects unknown
    keys; lenient mode accepts two or more ascending levels starting at 1.
    Every failure raises LandmarkFormatError, tagged with ``source`` when given.
    """
    try:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LandmarkFormatError(
                f"syntax error at line {exc.lineno} column {exc.colno} "
                f"(char {exc.pos}): {exc.msg}"
            ) from None
        if not isinstance(doc, dict):
            raise LandmarkFormatError("top level must be an object")
        missing = _SEQUENCE_KEYS - doc.keys()
        if missing:
            raise LandmarkFormatError(f"missing key(s) {sorted(missing)}")
        if strict and doc.keys() - _SEQUENCE_KEYS:
            raise LandmarkFormatError(f"unknown key(s) {sorted(doc.keys() - _SEQUENCE_KEYS)}")
        if not isinstance(doc["frames"], list):
            raise LandmarkFormatError("frames must be an array")
        frames = tuple(_parse_frame(f, i, strict) for i, f in enumerate(doc["frames"]))
        seq = LandmarkSequence(doc["subject_id"], doc["expression"], frames)
        validate_sequence(seq, required_ids, strict)
    except LandmarkFormatError as exc:
        if source is not None and exc.source is None:
            raise LandmarkFormatError(exc.message, source) from None
        raise
    return seq


def serialize_sequence(seq: LandmarkSequence, strict: bool = False) -> str:
    """Render a sequence as JSON text; floats use shortest round-trip repr."""
    validate_sequence(seq, required_ids=(), strict=strict)
    doc = {
        "subject_id": seq.subject_id,
        "expression": seq.expression,
        "frames": [
            {
                "level": fr.level,
                "points": [[pid, p.x, p.y, p.z] for pid, p in sorted(fr.points.items())],
            }
            for fr in seq.frames
        ],
    }
    return json.dumps(doc, allow_nan=False) + "\n"


def select_points(frame: LandmarkFrame, ids: Iterable[int] = DEFAULT_SELECTION) -> dict[int, Point3]:
    out = {}
    for pid in ids:
        if pid not in frame.points:
            raise LandmarkFormatError(f"missing required point {pid} in level {frame.level}")
        out[pid] = frame.points[pid]
    return out


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_sequence_file(path: str | os.PathLike, strict: bool = True,
                       required_ids: Iterable[int] = DEFAULT_SELECTION) -> LandmarkSequence:
    text = Path(path).read_text(encoding="utf-8")
    return parse_sequence(text, strict=strict, required_ids=required_ids, source=str(path))


def write_dataset(seqs: Sequence[LandmarkSequence], out_dir: str | os.PathLike) -> Path:
    """Write one file per sequence plus ``manifest.json``; return the manifest path."""
    out_dir = Path(out_dir)
    names = []
    for seq in seqs:
        name = f"{seq.subject_id}.json"
        write_text_atomic(out_dir / name, serialize_sequence(seq))
        names.append(name)
    manifest = out_dir / "manifest.json"
    write_text_atomic(manifest, json.dumps(names, indent=1) + "\n")
    return manifest


def read_manifest(path: str | os.PathLike, strict: bool = True,
                  required_ids: Iterable[int] = DEFAULT_SELECTION) -> list[LandmarkSequence]:
    path = Path(path)
    try:
        names = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LandmarkFormatError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}", str(path)
        ) from None
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise LandmarkFormatError("manifest must be a JSON array of paths", str(path))
    return [read_sequence_file(path.parent / n, strict, required_ids) for n in names]
