"""Sampled paths on dyadic time grids and variation reports."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from dimvar.dyadic import as_dyadic

__all__ = ["SamplePath", "VariationReport", "path_from_csv", "path_to_csv"]

DEFAULT_RHO = 20


@dataclass(frozen=True)
class SamplePath:
    """Finite complex-valued path sampled at increasing positive dyadic times.

    Times are stored as integer numerators at resolution ``2**-rho`` so block
    membership and grid alignment are exact.
    """

    time_nums: np.ndarray  # int64, strictly increasing, positive
    rho: int
    values: np.ndarray  # complex128, same length

    def __post_init__(self):
        nums = np.asarray(self.time_nums, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.complex128)
        if nums.ndim != 1 or vals.shape != nums.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if nums.size == 0:
            raise ValueError("empty path")
        if nums[0] <= 0 or np.any(np.diff(nums) <= 0):
            raise ValueError("times must be strictly increasing and positive")
        object.__setattr__(self, "time_nums", nums)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_times(cls, times, values, rho: int = DEFAULT_RHO) -> "SamplePath":
        """Build a path from float times, validating they sit on the 2**-rho grid."""
        nums = []
        for t in times:
            frac = Fraction(float(t)) * (1 << rho)
            if frac.denominator != 1:
                raise ValueError(f"time {t!r} not on the 2**-{rho} grid")
            nums.append(int(frac))
        return cls(np.array(nums, dtype=np.int64), rho, np.asarray(values))

    def __len__(self):
        return self.time_nums.size

    @property
    def times(self) -> np.ndarray:
        return self.time_nums / float(1 << self.rho)

    @property
    def block_exponents(self) -> np.ndarray:
        """Exact ``floor(log2 t)`` per sample."""
        bits = np.array([int(n).bit_length() for n in self.time_nums])
        return bits - 1 - self.rho

    def block_indices(self) -> dict[int, np.ndarray]:
        """Sample indices per dyadic block ``[2**n, 2**(n+1))``, ascending n."""
        exps = self.block_exponents
        return {int(n): np.flatnonzero(exps == n) for n in np.unique(exps)}

    def subpath(self, idx) -> "SamplePath":
        return SamplePath(self.time_nums[idx], self.rho, self.values[idx])

    def spacing(self) -> float:
        """Grid step of a uniform path; raises if the path is not uniform."""
        d = np.diff(self.time_nums)
        if d.size == 0 or np.any(d != d[0]):
            raise ValueError("path is not uniformly spaced")
        return float(d[0]) / (1 << self.rho)


@dataclass
class VariationReport:
    """Result of a variation computation on one path."""

    order: float
    value: float
    witness: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    block_values: dict[int, float] = field(default_factory=dict)
    long_value: float = 0.0


def path_from_csv(filename) -> SamplePath:
    """Read a path from CSV with header ``t,re`` or ``t,re,im``."""
    with open(filename, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0].strip() != "t" or rows[0][1].strip() != "re":
        raise ValueError("expected CSV header t,re[,im]")
    has_im = len(rows[0]) > 2 and rows[0][2].strip() == "im"
    times, vals = [], []
    for row in rows[1:]:
        if not row:
            continue
        times.append(float(row[0]))
        re = float(row[1])
        im = float(row[2]) if has_im and len(row) > 2 else 0.0
        vals.append(complex(re, im))
    nums, rhos = zip(*(as_dyadic(t) for t in times))
    rho = max(rhos)
    nums = [n << (rho - r) for n, r in zip(nums, rhos)]
    return SamplePath(np.array(nums, dtype=np.int64), rho, np.array(vals))


def path_to_csv(path: SamplePath, filename) -> None:
    complex_vals = bool(np.any(path.values.imag != 0))
    with open(filename, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "re", "im"] if complex_vals else ["t", "re"])
        for t, v in zip(path.times, path.values):
            row = [repr(float(t)), repr(float(v.real))]
            if complex_vals:
                row.append(repr(float(v.imag)))
            writer.writerow(row)
