import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import distance_oracle
from facs3d.features import (
    DEFAULT_PROPERTIES,
    Direction,
    DistanceProperty,
    displacement_features,
    euclidean_distance,
    extract_dataset,
    frame_distances,
    point_selection,
    read_feature_csv,
    write_feature_csv,
)
from facs3d.landmark_io import DEFAULT_SELECTION, LandmarkFormatError, LandmarkFrame, LandmarkSequence, Point3
from facs3d.synthgen import GenConfig, generate_sequence


def _frame(level, pts):
    return LandmarkFrame(level, {pid: Point3(*pts.get(pid, (0.0, 0.0, 0.0))) for pid in range(1, 84)})


@pytest.mark.parametrize("p, q, expected", [
    ((1.5, -2.0, 3.0), (1.5, -2.0, 3.0), 0.0),
    ((0, 0, 0), (1, 0, 0), 1.0),
    ((0, 0, 0), (1, 2, 2), 3.0),
])
def test_distance_examples(p, q, expected):
    assert euclidean_distance(Point3(*p), Point3(*q)) == expected


def test_distance_against_oracle():
    rng = np.random.default_rng(1)
    pts = rng.normal(scale=50, size=(1000, 2, 3))
    for p, q in pts:
        d = euclidean_distance(Point3(*p), Point3(*q))
        assert d == pytest.approx(distance_oracle(p, q), rel=1e-12)
        assert d == euclidean_distance(Point3(*q), Point3(*p))


def test_default_property_set():
    # twelve (AU, pair) rows over eleven distinct points
    assert len(DEFAULT_PROPERTIES) == 12
    assert point_selection() == DEFAULT_SELECTION
    assert len({p.pair for p in DEFAULT_PROPERTIES}) == 9
    counts = {au: sum(p.au == au for p in DEFAULT_PROPERTIES) for au in (1, 4, 6, 12, 15, 17, 25)}
    assert counts == {1: 1, 4: 2, 6: 1, 12: 2, 15: 3, 17: 2, 25: 1}


def test_property_rejects_degenerate_pair():
    with pytest.raises(ValueError):
        DistanceProperty(1, (9, 9), Direction.INCREASE)


def test_frame_distances():
    frame = _frame(1, {52: (0, 0, 0), 58: (0, 5, 0)})
    dist = frame_distances(frame)
    assert len(dist) == 12
    assert dist[(25, (52, 58))] == 5.0
    zero = frame_distances(_frame(1, {}))
    assert all(v == 0.0 for v in zero.values())
    missing = LandmarkFrame(1, {9: Point3(0, 0, 0)})
    with pytest.raises(LandmarkFormatError, match="missing required point"):
        frame_distances(missing)


def test_constant_sequence_has_zero_deltas():
    frame = _frame(1, {pid: (pid, 2.0 * pid, -pid) for pid in range(1, 84)})
    seq = LandmarkSequence("c", "happy", tuple(LandmarkFrame(lv, frame.points) for lv in (1, 2, 3, 4)))
    recs = displacement_features(seq)
    assert [r.level for r in recs] == [2, 3, 4]
    assert all(v == 0.0 for r in recs for v in r.deltas.values())


def test_direct_subtraction():
    frames = tuple(_frame(lv, {58: (0, d, 0)}) for lv, d in zip((1, 2, 3, 4), (2, 3, 4, 6)))
    recs = displacement_features(LandmarkSequence("s", "happy", frames))
    assert [r.deltas[(25, (52, 58))] for r in recs] == [1.0, 2.0, 4.0]


def test_needs_level_one():
    frames = tuple(_frame(lv, {}) for lv in (2, 3))
    with pytest.raises(LandmarkFormatError, match="level-1"):
        displacement_features(LandmarkSequence("s", "sad", frames))


def test_happy_mouth_deltas_shrink_monotonically():
    recs = displacement_features(generate_sequence(GenConfig("happy", seed=11)))
    for key in ((12, (55, 82)), (12, (45, 55))):
        vals = [r.deltas[key] for r in recs]
        assert all(v < 0 for v in vals)
        assert vals[0] > vals[1] > vals[2]


def test_vector_layout():
    rec = displacement_features(generate_sequence(GenConfig("sad", seed=2)))[0]
    assert [len(rec.vector(au)) for au in (1, 4, 6, 12, 15, 17, 25)] == [1, 2, 1, 2, 3, 2, 1]
    assert rec.vector(15) == [rec.deltas[(15, (45, 55))], rec.deltas[(15, (55, 82))], rec.deltas[(15, (9, 55))]]


def _rotation(a, b, c):
    rx = np.array([[1, 0, 0], [0, math.cos(a), -math.sin(a)], [0, math.sin(a), math.cos(a)]])
    ry = np.array([[math.cos(b), 0, math.sin(b)], [0, 1, 0], [-math.sin(b), 0, math.cos(b)]])
    rz = np.array([[math.cos(c), -math.sin(c), 0], [math.sin(c), math.cos(c), 0], [0, 0, 1]])
    return rz @ ry @ rx


def _transform(seq, fn):
    frames = tuple(LandmarkFrame(f.level, {pid: Point3(*map(float, fn(np.array(p)))) for pid, p in f.points.items()})
                   for f in seq.frames)
    return LandmarkSequence(seq.subject_id, seq.expression, frames)


def _deltas(seq):
    return np.array([[r.deltas[p.key] for p in DEFAULT_PROPERTIES] for r in displacement_features(seq)])


angles = st.floats(-math.pi, math.pi)
shift = st.floats(-1e3, 1e3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), angles, angles, angles, shift, shift, shift)
def test_rigid_invariance(seed, a, b, c, tx, ty, tz):
    seq = generate_sequence(GenConfig("sad", seed=seed, noise_sigma=0.5))
    base = _deltas(seq)
    rot = _rotation(a, b, c)
    t = np.array([tx, ty, tz])
    np.testing.assert_allclose(_deltas(_transform(seq, lambda p: rot @ p)), base, atol=1e-9)
    np.testing.assert_allclose(_deltas(_transform(seq, lambda p: p + t)), base, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 2.0, 4.0, 0.25, 8.0]))
def test_scaling(seed, s):
    # power-of-two factors scale every float exactly
    seq = generate_sequence(GenConfig("happy", seed=seed, noise_sigma=0.2))
    np.testing.assert_array_equal(_deltas(_transform(seq, lambda p: p * s)), _deltas(seq) * s)


def test_feature_csv_round_trip(clean_sequences):
    recs = extract_dataset(clean_sequences[:4])
    text = write_feature_csv(recs)
    header = text.splitlines()[0]
    assert header.startswith("subject_id,expression,level,au6_11_15,au12_55_82,au12_45_55,au25_52_58")
    back, extras = read_feature_csv(text)
    assert back == recs
    assert all(e == {} for e in extras)


def test_dataset_order(clean_sequences):
    recs = extract_dataset(list(reversed(clean_sequences)))
    keys = [(r.subject_id, r.level) for r in recs]
    assert keys == sorted(keys) and len(recs) == 180
