"""Observed-surrogate datasets and their noise mechanisms.

A dataset holds the observed covariate matrix Z (a noisy or partially
observed stand-in for the true design X), the response y, and a tag saying
which corruption mechanism produced Z: additive noise with a known
covariance, or entrywise Bernoulli missingness encoded as a boolean mask
with missing cells zero-filled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AdditiveNoise",
    "MissingNoise",
    "SurrogateDataset",
    "read_dataset_csv",
    "write_dataset_csv",
    "read_matrix_csv",
    "write_matrix_csv",
]

NA_TOKEN = "NA"


@dataclass(frozen=True)
class AdditiveNoise:
    """Z = X + W with W mean-zero and known covariance ``sigma_w``."""

    sigma_w: np.ndarray

    def __post_init__(self):
        sw = np.asarray(self.sigma_w, dtype=float)
        if sw.ndim != 2 or sw.shape[0] != sw.shape[1]:
            raise ValueError("sigma_w must be a square matrix")
        if not np.all(np.isfinite(sw)):
            raise ValueError("sigma_w has non-finite entries")
        if np.max(np.abs(sw - sw.T)) > 1e-12:
            raise ValueError("sigma_w must be symmetric within 1e-12")
        object.__setattr__(self, "sigma_w", sw)

    @property
    def p(self):
        return self.sigma_w.shape[0]


@dataclass(frozen=True)
class MissingNoise:
    """Entrywise Bernoulli missingness with per-column missing rates ``rho``."""

    rho: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=float).ravel()
        if r.size == 0:
            raise ValueError("rho must be non-empty")
        if np.any(r < 0.0) or np.any(r >= 1.0):
            raise ValueError("every missing rate must lie in [0, 1)")
        object.__setattr__(self, "rho", r)

    @property
    def p(self):
        return self.rho.size


@dataclass(frozen=True)
class SurrogateDataset:
    """Observed (Z, y) pair plus the declared noise mechanism.

    For missing data, ``mask`` is True where the entry was observed and Z is
    zero wherever the mask is False; this keeps a genuine zero observation
    distinguishable from a missing one.  ``y`` may be None in the pure
    covariance/graph setting where no response exists.
    """

    Z: np.ndarray
    y: np.ndarray | None
    noise: AdditiveNoise | MissingNoise
    mask: np.ndarray | None = field(default=None)

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] < 1 or Z.shape[1] < 1:
            raise ValueError("Z must be a non-empty n x p matrix")
        object.__setattr__(self, "Z", Z)
        if self.y is not None:
            y = np.asarray(self.y, dtype=float).ravel()
            if y.size != Z.shape[0]:
                raise ValueError("y length must equal the number of rows of Z")
            object.__setattr__(self, "y", y)
        if isinstance(self.noise, MissingNoise):
            if self.mask is None:
                raise ValueError("missing-data noise requires an observation mask")
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != Z.shape:
                raise ValueError("mask shape must match Z")
            if np.any(Z[~mask] != 0.0):
                raise ValueError("Z must be zero-filled where the mask is False")
            if self.noise.p != Z.shape[1]:
                raise ValueError("rho length must equal the number of columns of Z")
            object.__setattr__(self, "mask", mask)
        else:
            if self.mask is not None:
                raise ValueError("additive-noise datasets carry no mask")
            if self.noise.p != Z.shape[1]:
                raise ValueError("sigma_w dimension must equal the number of columns of Z")

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def p(self):
        return self.Z.shape[1]


def read_dataset_csv(path, noise):
    """Load a dataset from a delimited file.

    Expects a header row; a column named "y" (if present) becomes the
    response, all remaining columns become Z in file order.  Missing cells
    carry the literal token "NA" and are only legal under a missing-data
    noise model, where they zero-fill Z and clear the mask.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    y_idx = header.index("y") if "y" in header else None
    z_cols = [j for j in range(len(header)) if j != y_idx]
    n, p = len(rows), len(z_cols)
    Z = np.zeros((n, p))
    mask = np.ones((n, p), dtype=bool)
    y = np.zeros(n) if y_idx is not None else None
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        if y_idx is not None:
            y[i] = float(row[y_idx])
        for k, j in enumerate(z_cols):
            tok = row[j].strip()
            if tok == NA_TOKEN:
                mask[i, k] = False
            else:
                Z[i, k] = float(tok)
    if isinstance(noise, MissingNoise):
        return SurrogateDataset(Z=Z, y=y, noise=noise, mask=mask)
    if not mask.all():
        raise ValueError(f"{path}: NA entries present but noise model is additive")
    return SurrogateDataset(Z=Z, y=y, noise=noise)


def write_dataset_csv(data: SurrogateDataset, path):
    """Write a dataset in the format `read_dataset_csv` accepts."""
    p = data.p
    header = (["y"] if data.y is not None else []) + [f"z{j + 1}" for j in range(p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = []
            if data.y is not None:
                row.append(f"{data.y[i]:.17g}")
            for j in range(p):
                if data.mask is not None and not data.mask[i, j]:
                    row.append(NA_TOKEN)
                else:
                    row.append(f"{data.Z[i, j]:.17g}")
            writer.writerow(row)


def read_matrix_csv(path):
    """Read a plain numeric matrix (no header) from a delimited file."""
    mat = np.loadtxt(path, delimiter=",", ndmin=2)
    return mat


def write_matrix_csv(mat, path):
    np.savetxt(path, np.asarray(mat, dtype=float), delimiter=",", fmt="%.17g")
