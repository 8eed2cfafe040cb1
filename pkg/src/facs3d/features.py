"""Distance properties, per-frame distances and level-1 displacement features."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .landmark_io import LandmarkFormatError, LandmarkFrame, LandmarkSequence, Point3

AUS: tuple[int, ...] = (1, 4, 6, 12, 15, 17, 25)


class Direction(str, Enum):
    INCREASE = "d+"
    DECREASE = "d-"


@dataclass(frozen=True)
class DistanceProperty:
    au: int
    pair: tuple[int, int]
    direction: Direction

    def __post_init__(self):
        if self.pair[0] == self.pair[1]:
            raise ValueError(f"property pair endpoints must differ: {self.pair}")

    @property
    def key(self) -> tuple[int, tuple[int, int]]:
        return (self.au, self.pair)

    @property
    def column(self) -> str:
        return f"au{self.au}_{self.pair[0]}_{self.pair[1]}"


def _p(au, a, b, sign):
    return DistanceProperty(au, (a, b), Direction.INCREASE if sign == "+" else Direction.DECREASE)


# Canonical order: happy AUs then sad AUs, rows as listed in the source table.
DEFAULT_PROPERTIES: tuple[DistanceProperty, ...] = (
    _p(6, 11, 15, "-"),
    _p(12, 55, 82, "-"),
    _p(12, 45, 55, "-"),
    _p(25, 52, 58, "+"),
    _p(1, 9, 27, "+"),
    _p(4, 9, 27, "-"),
    _p(4, 27, 28, "-"),
    _p(15, 45, 55, "+"),
    _p(15, 55, 82, "+"),
    _p(15, 9, 55, "+"),
    _p(17, 76, 82, "+"),
    _p(17, 76, 45, "+"),
)

PropKey = tuple[int, tuple[int, int]]


def check_property_set(props: Sequence[DistanceProperty]) -> None:
    seen = set()
    for prop in props:
        if prop.key in seen:
            raise ValueError(f"duplicate property {prop.key}")
        seen.add(prop.key)


def point_selection(props: Iterable[DistanceProperty] = DEFAULT_PROPERTIES) -> tuple[int, ...]:
    ids = set()
    for prop in props:
        ids.update(prop.pair)
    return tuple(sorted(ids))


def properties_for(au: int, props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> list[DistanceProperty]:
    return [p for p in props if p.au == au]


@dataclass(frozen=True)
class FeatureRecord:
    subject_id: str
    expression: str
    level: int
    deltas: Mapping[PropKey, float]

    def vector(self, au: int, props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> list[float]:
        """Feature vector fed to the classifiers for one AU (1, 2 or 3 values)."""
        return [self.deltas[p.key] for p in props if p.au == au]


def euclidean_distance(p: Point3, q: Point3) -> float:
    return math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2)


def frame_distances(frame: LandmarkFrame,
                    props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> dict[PropKey, float]:
    # pairs shared between AUs are measured once
    cache: dict[tuple[int, int], float] = {}
    out = {}
    for prop in props:
        if prop.pair not in cache:
            a, b = prop.pair
            for pid in prop.pair:
                if pid not in frame.points:
                    raise LandmarkFormatError(
                        f"missing required point {pid} in level {frame.level}"
                    )
            cache[prop.pair] = euclidean_distance(frame.points[a], frame.points[b])
        out[prop.key] = cache[prop.pair]
    return out


def displacement_features(seq: LandmarkSequence,
                          props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> list[FeatureRecord]:
    """One record per level above 1: property distance at that level minus at level 1."""
    try:
        base_frame = seq.frame(1)
    except KeyError:
        raise LandmarkFormatError(f"sequence {seq.subject_id} has no level-1 frame") from None
    base = frame_distances(base_frame, props)
    records = []
    for fr in sorted(seq.frames, key=lambda f: f.level):
        if fr.level == 1:
            continue
        dist = frame_distances(fr, props)
        records.append(FeatureRecord(
            seq.subject_id, seq.expression, fr.level,
            {k: dist[k] - base[k] for k in base},
        ))
    return records


def extract_dataset(seqs: Iterable[LandmarkSequence],
                    props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> list[FeatureRecord]:
    records = [r for seq in seqs for r in displacement_features(seq, props)]
    records.sort(key=lambda r: (r.subject_id, r.level))
    return records


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def feature_header(props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> list[str]:
    return ["subject_id", "expression", "level"] + [p.column for p in props]


def feature_row(rec: FeatureRecord, props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> list[str]:
    return [rec.subject_id, rec.expression, str(rec.level)] + [_fmt(rec.deltas[p.key]) for p in props]


def write_feature_csv(records: Iterable[FeatureRecord],
                      props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(feature_header(props))
    for rec in records:
        writer.writerow(feature_row(rec, props))
    return buf.getvalue()


def parse_column(name: str, props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> DistanceProperty:
    for p in props:
        if p.column == name:
            return p
    raise ValueError(f"unknown feature column {name!r}")


def read_feature_csv(text: str, props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES
                     ) -> tuple[list[FeatureRecord], list[dict[str, str]]]:
    """Parse a feature CSV; also return leftover (non-feature) columns per row."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or reader.fieldnames[:3] != ["subject_id", "expression", "level"]:
        raise ValueError("feature CSV must start with subject_id,expression,level")
    cols = {name: parse_column(name, props) for name in reader.fieldnames[3:] if name.startswith("au")
            and name.count("_") == 2}
    records, extras = [], []
    for row in reader:
        deltas = {cols[c].key: float(row[c]) for c in cols}
        for v in deltas.values():
            if not math.isfinite(v):
                raise ValueError(f"non-finite feature value in row for {row['subject_id']}")
        records.append(FeatureRecord(row["subject_id"], row["expression"], int(row["level"]), deltas))
        extras.append({k: v for k, v in row.items() if k not in cols and k not in
                       ("subject_id", "expression", "level")})
    return records, extras
