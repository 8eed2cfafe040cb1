"""Rule-based AU presence labels from displacement features.

A property is satisfied when its delta moves past the threshold in the
expected direction; an AU is present only when every one of its properties
is satisfied.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .features import (
    AUS,
    DEFAULT_PROPERTIES,
    Direction,
    DistanceProperty,
    FeatureRecord,
    check_property_set,
    feature_header,
    feature_row,
    read_feature_csv,
)

AU_TABLE = {
    1: "Raised inner eyebrow",
    4: "Eyebrows drawn together, lowered eyebrows",
    6: "Raised cheek, compressed eyelid",
    12: "Mouth corners pulled up",
    15: "Mouth corners downward",
    17: "Chin raised",
    25: "Lips parted",
}

LABEL_COLUMNS = tuple(f"au{au}" for au in AUS)


@dataclass(frozen=True)
class RuleConfig:
    epsilon: float = 0.0
    properties: tuple[DistanceProperty, ...] = field(default=DEFAULT_PROPERTIES)

    def __post_init__(self):
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        check_property_set(self.properties)
        covered = {p.au for p in self.properties}
        missing = [au for au in AUS if au not in covered]
        if missing:
            raise ValueError(f"no property configured for AU(s) {missing}")


def property_satisfied(delta: float, direction: Direction, epsilon: float) -> int:
    if direction is Direction.INCREASE:
        return int(delta > epsilon)
    return int(delta < -epsilon)


def label_record(rec: FeatureRecord, cfg: RuleConfig = RuleConfig()) -> dict[int, int]:
    """AU -> 0/1 for one record, AUs in ascending order."""
    labels = {au: 1 for au in sorted({p.au for p in cfg.properties})}
    for prop in cfg.properties:
        if prop.key not in rec.deltas:
            raise KeyError(f"record {rec.subject_id}/level {rec.level} lacks delta for {prop.column}")
        if not property_satisfied(rec.deltas[prop.key], prop.direction, cfg.epsilon):
            labels[prop.au] = 0
    return labels


def label_dataset(records: Iterable[FeatureRecord], cfg: RuleConfig = RuleConfig()
                  ) -> list[tuple[FeatureRecord, dict[int, int]]]:
    return [(rec, label_record(rec, cfg)) for rec in records]


def write_labeled_csv(labeled: Sequence[tuple[FeatureRecord, dict[int, int]]],
                      props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(feature_header(props) + list(LABEL_COLUMNS))
    for rec, labels in labeled:
        writer.writerow(feature_row(rec, props) + [str(labels[au]) for au in AUS])
    return buf.getvalue()


def read_labeled_csv(text: str, props: Sequence[DistanceProperty] = DEFAULT_PROPERTIES
                     ) -> list[tuple[FeatureRecord, dict[int, int]]]:
    records, extras = read_feature_csv(text, props)
    out = []
    for rec, extra in zip(records, extras):
        labels = {}
        for au, col in zip(AUS, LABEL_COLUMNS):
            if col not in extra:
                raise ValueError(f"labeled CSV lacks column {col}")
            if extra[col] not in ("0", "1"):
                raise ValueError(f"label {col}={extra[col]!r} is not 0 or 1")
            labels[au] = int(extra[col])
        out.append((rec, labels))
    return out
