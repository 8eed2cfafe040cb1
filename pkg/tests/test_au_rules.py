import itertools

import pytest

from oracles import RULE_TABLE, brute_force_label
from facs3d.au_rules import (
    LABEL_COLUMNS,
    RuleConfig,
    label_dataset,
    label_record,
    property_satisfied,
    read_labeled_csv,
    write_labeled_csv,
)
from facs3d.features import AUS, DEFAULT_PROPERTIES, Direction, FeatureRecord, displacement_features
from facs3d.synthgen import GenConfig, generate_sequence

UP, DOWN = Direction.INCREASE, Direction.DECREASE


def _rec(**by_column):
    deltas = {p.key: 0.0 for p in DEFAULT_PROPERTIES}
    for p in DEFAULT_PROPERTIES:
        if p.column in by_column:
            deltas[p.key] = by_column[p.column]
    return FeatureRecord("r", "happy", 2, deltas)


@pytest.mark.parametrize("delta, direction, eps, expected", [
    (0.5, UP, 0.0, 1), (0.0, UP, 0.0, 0), (-0.2, DOWN, 0.3, 0),
    (-0.3, DOWN, 0.3, 0), (-0.31, DOWN, 0.3, 1), (0.3, UP, 0.3, 0), (-5.0, UP, 0.0, 0),
])
def test_property_satisfied(delta, direction, eps, expected):
    assert property_satisfied(delta, direction, eps) == expected


def test_au12_conjunction():
    assert label_record(_rec(au12_55_82=-1.0, au12_45_55=-0.4))[12] == 1
    assert label_record(_rec(au12_55_82=-1.0, au12_45_55=0.4))[12] == 0


def test_all_zero():
    labels = label_record(_rec())
    assert list(labels) == list(AUS)
    assert set(labels.values()) == {0}


def test_au15_three_properties():
    assert label_record(_rec(au15_45_55=1, au15_55_82=1, au15_9_55=1))[15] == 1
    assert label_record(_rec(au15_45_55=1, au15_55_82=1, au15_9_55=0))[15] == 0


def test_missing_delta():
    rec = FeatureRecord("r", "sad", 3, {})
    with pytest.raises(KeyError):
        label_record(rec)


def test_rule_config_validation():
    with pytest.raises(ValueError):
        RuleConfig(epsilon=-1)
    with pytest.raises(ValueError):
        RuleConfig(epsilon=float("nan"))
    with pytest.raises(ValueError, match="AU"):
        RuleConfig(properties=tuple(p for p in DEFAULT_PROPERTIES if p.au != 17))


@pytest.mark.parametrize("au", AUS)
def test_conjunction_law_exhaustive(au):
    props = [p for p in DEFAULT_PROPERTIES if p.au == au]
    for signs in itertools.product((0, 1), repeat=len(props)):
        cols = {}
        for p, s in zip(props, signs):
            good = 1.0 if p.direction is UP else -1.0
            cols[p.column] = good if s else -good
        assert label_record(_rec(**cols))[au] == int(all(signs))


def test_monotone_in_delta():
    cfg = RuleConfig(epsilon=0.1)
    for p in DEFAULT_PROPERTIES:
        step = 1.0 if p.direction is UP else -1.0
        prev = None
        for k in range(-5, 6):
            rec = _rec(**{q.column: (0.5 if q.direction is UP else -0.5) for q in DEFAULT_PROPERTIES if q.au == p.au})
            rec.deltas[p.key] = step * k * 0.07
            label = label_record(rec, cfg)[p.au]
            if prev is not None:
                assert label >= prev
            prev = label


def test_epsilon_monotone(clean_labeled):
    recs = [r for r, _ in clean_labeled][:60]
    prev = label_dataset(recs, RuleConfig(0.0))
    for eps in (0.5, 1.0, 2.0, 4.0):
        cur = label_dataset(recs, RuleConfig(eps))
        for (_, a), (_, b) in zip(prev, cur):
            assert all(b[au] <= a[au] for au in AUS)
        prev = cur


def test_noiseless_happy_level4_labels():
    rec = displacement_features(generate_sequence(GenConfig("happy", seed=5)))[-1]
    labels = label_record(rec)
    assert labels == {1: 0, 4: 0, 6: 1, 12: 1, 15: 0, 17: 0, 25: 1}
    by_pair = {p.pair: rec.deltas[p.key] for p in DEFAULT_PROPERTIES}
    assert labels == {au: brute_force_label(au, by_pair, 0.0) for au in RULE_TABLE}


def test_label_dataset(clean_labeled):
    assert len(clean_labeled) == 180
    assert label_dataset([]) == []
    again = label_dataset([r for r, _ in clean_labeled])
    assert again == clean_labeled


def test_labeled_csv_round_trip(clean_labeled):
    text = write_labeled_csv(clean_labeled)
    assert text.splitlines()[0].endswith(",".join(LABEL_COLUMNS))
    assert read_labeled_csv(text) == clean_labeled
    with pytest.raises(ValueError):
        read_labeled_csv(text.replace(",1\n", ",2\n", 1))
