"""Raw subjective ratings to MOS.

Pipeline: BT.500-style observer screening on raw scores, per-subject
Z-scoring, a single global rescale to [0, 100], then per-stimulus
averaging.  Z-scoring cancels per-subject affine rating biases before
scores are pooled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRange, ZeroVarianceSubject

__all__ = [
    "SubjectiveMatrix",
    "MosTable",
    "zscore",
    "rescale_to_range",
    "screen_outliers",
    "compute_mos",
]


@dataclass(frozen=True)
class SubjectiveMatrix:
    """Raw scores, stimuli in rows, subjects in columns; NaN marks missing."""

    ratings: np.ndarray
    stimulus_ids: tuple = ()
    subject_ids: tuple = ()

    def __post_init__(self):
        r = np.asarray(self.ratings, dtype=float)
        object.__setattr__(self, "ratings", r)
        if r.ndim != 2 or r.shape[0] < 2 or r.shape[1] < 2:
            raise ValueError("need at least 2 stimuli and 2 subjects")
        if np.any(np.sum(~np.isnan(r), axis=0) < 2):
            raise ValueError("every subject needs at least two ratings")
        if not self.stimulus_ids:
            object.__setattr__(self, "stimulus_ids",
                               tuple(f"s{i}" for i in range(r.shape[0])))
        if not self.subject_ids:
            object.__setattr__(self, "subject_ids",
                               tuple(f"obs{i}" for i in range(r.shape[1])))

    @classmethod
    def read_csv(cls, path) -> "SubjectiveMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header = rows[0]
        subject_ids = tuple(header[1:])
        stim_ids, data = [], []
        for row in rows[1:]:
            stim_ids.append(row[0])
            data.append([float(v) if v != "" else math.nan for v in row[1:]])
        return cls(np.array(data), tuple(stim_ids), subject_ids)


@dataclass(frozen=True)
class MosTable:
    mos: np.ndarray
    std: np.ndarray
    n_valid: np.ndarray
    stimulus_ids: tuple
    rejected_subjects: tuple = ()


def zscore(ratings: np.ndarray, subject_ids=None) -> np.ndarray:
    """Per-subject Z over that subject's non-missing ratings (sample std)."""
    ratings = np.asarray(ratings, dtype=float)
    out = np.full_like(ratings, np.nan)
    for i in range(ratings.shape[1]):
        col = ratings[:, i]
        mask = ~np.isnan(col)
        mu = col[mask].mean()
        sd = col[mask].std(ddof=1)
        if sd == 0.0:
            sid = subject_ids[i] if subject_ids else i
            raise ZeroVarianceSubject(sid)
        out[mask, i] = (col[mask] - mu) / sd
    return out


def rescale_to_range(z: np.ndarray, lo: float = 0.0, hi: float = 100.0) -> np.ndarray:
    """One global affine map sending min(z) -> lo and max(z) -> hi."""
    z = np.asarray(z, dtype=float)
    zmin, zmax = np.nanmin(z), np.nanmax(z)
    if zmax == zmin:
        raise DegenerateRange("all scores identical; cannot rescale")
    return lo + (z - zmin) * (hi - lo) / (zmax - zmin)


def screen_outliers(ratings: np.ndarray) -> set:
    """BT.500 Annex 2 observer screening on raw scores.

    Per stimulus: kurtosis decides Gaussian (2sigma) vs non-Gaussian
    (sqrt(20)*sigma) thresholds.  A subject is rejected when more than 5%
    of their ratings fall outside the thresholds AND the excursions are not
    one-sided (|P-Q|/(P+Q) < 0.3).  Returns the rejected column indices.
    """
    ratings = np.asarray(ratings, dtype=float)
    n_stim, n_subj = ratings.shape
    if n_subj < 3:
        return set()
    p = np.zeros(n_subj, dtype=int)
    q = np.zeros(n_subj, dtype=int)
    rated = np.zeros(n_subj, dtype=int)
    for m in range(n_stim):
        row = ratings[m]
        mask = ~np.isnan(row)
        vals = row[mask]
        if len(vals) < 2:
            continue
        mu = vals.mean()
        sd = vals.std(ddof=1)
        m2 = np.mean((vals - mu) ** 2)
        beta2 = np.mean((vals - mu) ** 4) / (m2 * m2) if m2 > 0 else 0.0
        k = 2.0 if 2.0 <= beta2 <= 4.0 else math.sqrt(20.0)
        hi, lo = mu + k * sd, mu - k * sd
        for i in np.nonzero(mask)[0]:
            rated[i] += 1
            if row[i] > hi:
                p[i] += 1
            elif row[i] < lo:
                q[i] += 1
    rejected = set()
    for i in range(n_subj):
        total = p[i] + q[i]
        if rated[i] == 0 or total == 0:
            continue
        if total / rated[i] > 0.05 and abs(p[i] - q[i]) / total < 0.3:
            rejected.add(i)
    return rejected


def compute_mos(matrix: SubjectiveMatrix) -> MosTable:
    """Screen, Z-score survivors, rescale to [0,100], average per stimulus."""
    rejected_idx = screen_outliers(matrix.ratings)
    keep = [i for i in range(matrix.ratings.shape[1]) if i not in rejected_idx]
    if len(keep) < 2:
        raise DegenerateRange("screening left fewer than two subjects")
    kept = matrix.ratings[:, keep]
    scaled = rescale_to_range(zscore(kept, [matrix.subject_ids[i] for i in keep]))
    with np.errstate(invalid="ignore"):
        mos = np.clip(np.nanmean(scaled, axis=1), 0.0, 100.0)  # guard round-off
        std = np.nanstd(scaled, axis=1, ddof=0)
    n_valid = np.sum(~np.isnan(scaled), axis=1)
    return MosTable(
        mos=mos,
        std=std,
        n_valid=n_valid,
        stimulus_ids=matrix.stimulus_ids,
        rejected_subjects=tuple(matrix.subject_ids[i] for i in sorted(rejected_idx)),
    )
