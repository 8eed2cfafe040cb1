"""Synthetic 83-point landmark sequences with controlled property distances.

Each generated sequence starts from a per-subject scaled copy of a fixed
neutral face. For levels 2..4 the eleven referenced points are moved so
that every distance pair changes by exactly

    sign * expressiveness * deformation_scale * (level - 1) / 3

where ``sign`` comes from the expression's movement plan below and
``expressiveness`` is a per-subject, per-pair draw from U(0.5, 1.0).
The remaining 72 points sit on a fixed lattice and only receive noise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .landmark_io import N_POINTS, LandmarkFrame, LandmarkSequence, Point3

_REFERENCED = {
    9: (15.0, 35.0, 25.0),    # inner corner of the left eye
    11: (30.0, 40.0, 24.0),   # left upper eyelid
    15: (30.0, 30.0, 24.0),   # left lower eyelid
    27: (12.0, 50.0, 30.0),   # inner end of the left eyebrow
    28: (-12.0, 50.0, 30.0),  # inner end of the right eyebrow
    45: (12.0, 0.0, 40.0),    # left nostril base
    52: (0.0, -20.0, 38.0),   # upper lip centre
    55: (25.0, -23.0, 30.0),  # left mouth corner
    58: (0.0, -26.0, 37.0),   # lower lip centre
    76: (0.0, -70.0, 30.0),   # chin tip
    82: (65.0, 25.0, 0.0),    # left face contour near the eye
}

PAIRS: tuple[tuple[int, int], ...] = (
    (11, 15), (55, 82), (45, 55), (52, 58), (9, 27), (27, 28), (9, 55), (76, 82), (76, 45),
)

# +1 grow, -1 shrink; every pair moves so noise-free labels are never on a boundary
_PLANS = {
    "happy": (-1, -1, -1, +1, -1, +1, -1, -1, -1),
    "sad": (+1, +1, +1, -1, +1, +1, +1, +1, +1),
    "sad_au4": (+1, +1, +1, -1, -1, -1, +1, +1, +1),
}


@dataclass(frozen=True)
class GenConfig:
    expression: str = "happy"
    seed: int = 0
    deformation_scale: float = 5.0
    noise_sigma: float = 0.0
    subject_variation: float = 0.05
    sad_brow_au: int = 1  # 1: inner brow raised, 4: brows lowered and drawn together
    mouth_corner_gain: float = 1.0  # multiplier on the mouth-corner to face-contour change

    def __post_init__(self):
        if self.expression not in ("happy", "sad"):
            raise ValueError(f"unknown expression {self.expression!r}")
        for name in ("deformation_scale", "noise_sigma", "subject_variation", "mouth_corner_gain"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.deformation_scale <= 0:
            raise ValueError("deformation_scale must be > 0")
        if self.sad_brow_au not in (1, 4):
            raise ValueError("sad_brow_au must be 1 or 4")

    @property
    def plan(self) -> tuple[int, ...]:
        if self.expression == "happy":
            return _PLANS["happy"]
        return _PLANS["sad"] if self.sad_brow_au == 1 else _PLANS["sad_au4"]


def _template_array() -> np.ndarray:
    pts = np.zeros((N_POINTS, 3))
    others = [pid for pid in range(1, N_POINTS + 1) if pid not in _REFERENCED]
    for idx, pid in enumerate(others):
        pts[pid - 1] = (-55.0 + 10.0 * (idx % 12), -55.0 + 10.0 * (idx // 12), -40.0)
    for pid, xyz in _REFERENCED.items():
        pts[pid - 1] = xyz
    return pts


def _frame(level: int, pts: np.ndarray) -> LandmarkFrame:
    return LandmarkFrame(level, {pid: Point3(*map(float, pts[pid - 1])) for pid in range(1, N_POINTS + 1)})


def neutral_template() -> LandmarkFrame:
    return _frame(1, _template_array())


def _pair_lengths(pts: np.ndarray) -> np.ndarray:
    return np.array([np.linalg.norm(pts[a - 1] - pts[b - 1]) for a, b in PAIRS])


def _solve_positions(pts: np.ndarray, targets: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Move the referenced points (minimum-norm Gauss-Newton) until every pair length hits its target."""
    ids = sorted(_REFERENCED)
    col = {pid: i for i, pid in enumerate(ids)}
    out = pts.copy()
    for _ in range(max_iter):
        resid = _pair_lengths(out) - targets
        if np.max(np.abs(resid)) < 1e-12 * max(1.0, np.max(targets)):
            return out
        jac = np.zeros((len(PAIRS), 3 * len(ids)))
        for r, (a, b) in enumerate(PAIRS):
            u = (out[a - 1] - out[b - 1]) / np.linalg.norm(out[a - 1] - out[b - 1])
            jac[r, 3 * col[a]:3 * col[a] + 3] = u
            jac[r, 3 * col[b]:3 * col[b] + 3] = -u
        step = np.linalg.lstsq(jac, -resid, rcond=None)[0]
        for pid in ids:
            out[pid - 1] += step[3 * col[pid]:3 * col[pid] + 3]
    raise RuntimeError("landmark solve did not converge; deformation_scale too large for the template")


def generate_sequence(cfg: GenConfig, subject_id: str | None = None) -> LandmarkSequence:
    if cfg.noise_sigma >= cfg.deformation_scale:
        warnings.warn("noise_sigma >= deformation_scale; labels will be mostly noise", stacklevel=2)
    rng = np.random.default_rng(cfg.seed)
    axis_scale = np.clip(1.0 + cfg.subject_variation * rng.standard_normal(3), 0.5, 1.5)
    expressiveness = rng.uniform(0.5, 1.0, size=len(PAIRS))
    noise = rng.standard_normal((3, N_POINTS, 3))

    neutral = _template_array() * axis_scale
    base = _pair_lengths(neutral)
    signs = np.array(cfg.plan, dtype=float)
    signs[PAIRS.index((55, 82))] *= cfg.mouth_corner_gain
    frames = [_frame(1, neutral)]
    pts = neutral
    for level in (2, 3, 4):
        change = signs * expressiveness * cfg.deformation_scale * (level - 1) / 3
        pts = _solve_positions(pts, base + change)
        noisy = pts + cfg.noise_sigma * noise[level - 2] if cfg.noise_sigma > 0 else pts
        frames.append(_frame(level, noisy))
    if subject_id is None:
        subject_id = f"{cfg.expression}-{cfg.seed}"
    return LandmarkSequence(subject_id, cfg.expression, tuple(frames))


EXPR_CODE = {"happy": 0, "sad": 1}


def subject_seed(base_seed: int, expression: str, index: int) -> int:
    ss = np.random.SeedSequence([base_seed, EXPR_CODE[expression], index])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _every(index: int, fraction: float) -> bool:
    return math.floor((index + 1) * fraction) > math.floor(index * fraction)


def generate_dataset(n_happy: int = 30, n_sad: int = 30, base_seed: int = 0,
                     template: GenConfig | None = None, au4_fraction: float = 1 / 3,
                     subtle_fraction: float = 0.5, subtle_gain: float = 0.25
                     ) -> list[LandmarkSequence]:
    """Happy subjects ``H001..`` then sad subjects ``S001..``.

    ``au4_fraction`` of the sad subjects lower their brows instead of raising
    them, so both brow AUs occur in the data. ``subtle_fraction`` of all
    subjects move the mouth corner relative to the face contour by only
    ``subtle_gain`` of the template's gain. Both selections are spread evenly
    over the subject index.
    """
    if n_happy < 0 or n_sad < 0:
        raise ValueError("subject counts must be >= 0")
    for name, v in (("au4_fraction", au4_fraction), ("subtle_fraction", subtle_fraction)):
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must lie in [0, 1]")
    if not (math.isfinite(subtle_gain) and subtle_gain >= 0):
        raise ValueError("subtle_gain must be finite and >= 0")
    template = template or GenConfig()
    seqs = []
    for expression, count, prefix in (("happy", n_happy, "H"), ("sad", n_sad, "S")):
        for i in range(count):
            gain = template.mouth_corner_gain
            if _every(i, subtle_fraction):
                gain *= subtle_gain
            brow = 4 if expression == "sad" and _every(i, au4_fraction) else 1
            cfg = replace(template, expression=expression, seed=subject_seed(base_seed, expression, i),
                          sad_brow_au=brow, mouth_corner_gain=gain)
            seqs.append(generate_sequence(cfg, f"{prefix}{i + 1:03d}"))
    return seqs
