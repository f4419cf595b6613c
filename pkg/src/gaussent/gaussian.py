"""Covariance matrices of Gaussian states, physicality and the PPT test.

All matrices use the interleaved quadrature ordering (q1, p1, ..., qN, pN)
and the convention hbar = 1, so the vacuum has covariance matrix I.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import InputError, NotPositiveDefiniteError

TOL_PHYS = 1e-9
ASYMMETRY_GATE = 1e-9

OMEGA_1 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class ModePartition(NamedTuple):
    """Bipartite split: the first ``m`` modes form A, the next ``n`` form B."""

    m: int
    n: int

    @property
    def n_modes(self) -> int:
        return self.m + self.n

    def check(self, n_modes: int) -> ModePartition:
        if self.m < 1 or self.n < 1:
            raise InputError(f"both subsystems need at least one mode, got {tuple(self)}")
        if self.m + self.n != n_modes:
            raise InputError(f"partition {tuple(self)} does not cover a {n_modes}-mode state")
        return self

    @classmethod
    def parse(cls, value) -> ModePartition:
        """Accept ``"m,n"``, ``(m, n)`` or an existing partition."""
        if isinstance(value, str):
            parts = value.replace(" ", "").split(",")
            if len(parts) != 2:
                raise InputError(f"partition must look like 'm,n', got {value!r}")
            try:
                return cls(int(parts[0]), int(parts[1]))
            except ValueError as exc:
                raise InputError(f"partition must look like 'm,n', got {value!r}") from exc
        m, n = value
        return cls(int(m), int(n))


def _as_square(matrix) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InputError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("matrix contains NaN or Inf entries")
    return arr


@dataclass(frozen=True)
class CovarianceMatrix:
    """A validated, exactly symmetric 2N x 2N covariance matrix."""

    matrix: np.ndarray
    partition: ModePartition | None = None

    def __post_init__(self):
        arr = _as_square(self.matrix)
        if arr.shape[0] % 2 or arr.shape[0] == 0:
            raise InputError(f"covariance dimension must be even and positive, got {arr.shape[0]}")
        asym = np.max(np.abs(arr - arr.T))
        if asym > ASYMMETRY_GATE:
            raise InputError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
        arr = 0.5 * (arr + arr.T)
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)
        if self.partition is not None:
            part = ModePartition.parse(self.partition).check(self.n_modes)
            object.__setattr__(self, "partition", part)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def to_dict(self) -> dict:
        out = {"n_modes": self.n_modes, "ordering": "interleaved"}
        if self.partition is not None:
            out["partition"] = list(self.partition)
        out["matrix"] = self.matrix.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> CovarianceMatrix:
        if not isinstance(data, dict) or "matrix" not in data:
            raise InputError("covariance JSON needs a 'matrix' field")
        ordering = data.get("ordering", "interleaved")
        if ordering != "interleaved":
            raise InputError(f"unsupported quadrature ordering {ordering!r}")
        try:
            matrix = np.array(data["matrix"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise InputError("matrix must be a rectangular array of numbers") from exc
        cov = cls(matrix, data.get("partition"))
        if "n_modes" in data and int(data["n_modes"]) != cov.n_modes:
            raise InputError(f"n_modes={data['n_modes']} disagrees with a {matrix.shape[0]}-dim matrix")
        return cov


def as_covariance(gamma) -> np.ndarray:
    """Validate ``gamma`` (array-like or :class:`CovarianceMatrix`) and return a symmetric array."""
    if isinstance(gamma, CovarianceMatrix):
        return gamma.matrix
    return CovarianceMatrix(gamma).matrix


def load_covariance(path) -> CovarianceMatrix:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return CovarianceMatrix.from_dict(data)


def save_covariance(cov: CovarianceMatrix, path) -> None:
    Path(path).write_text(json.dumps(cov.to_dict(), indent=2) + "\n", encoding="utf-8")


def symplectic_form(n_modes: int) -> np.ndarray:
    """Direct sum of ``n_modes`` copies of [[0, 1], [-1, 0]]."""
    if n_modes < 1:
        raise InputError(f"n_modes must be positive, got {n_modes}")
    return np.kron(np.eye(n_modes), OMEGA_1)


def ppt_symplectic_form(partition: ModePartition) -> np.ndarray:
    """(-Omega_A) + Omega_B, the form seen by a partially transposed state."""
    omega = symplectic_form(partition.n_modes)
    omega[: 2 * partition.m, : 2 * partition.m] *= -1.0
    return omega


def partial_transpose_signs(partition: ModePartition) -> np.ndarray:
    """Diagonal of Lambda + I_B: -1 on every momentum quadrature of A."""
    signs = np.ones(2 * partition.n_modes)
    signs[1 : 2 * partition.m : 2] = -1.0
    return signs


def embedding(gamma: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Real symmetric form [[gamma, omega], [omega^T, gamma]] of gamma + i*omega.

    Its spectrum is that of the Hermitian matrix gamma + i*omega with every
    eigenvalue doubled.
    """
    return np.block([[gamma, omega], [omega.T, gamma]])


class PhysicalityReport(NamedTuple):
    physical: bool
    min_eig: float


class PptReport(NamedTuple):
    ppt: bool
    min_eig: float


def is_physical(gamma, tol: float = TOL_PHYS) -> PhysicalityReport:
    """Check the uncertainty relation gamma + i*Omega >= 0 up to ``tol``."""
    g = as_covariance(gamma)
    min_eig = float(np.linalg.eigvalsh(embedding(g, symplectic_form(g.shape[0] // 2)))[0])
    return PhysicalityReport(min_eig >= -tol, min_eig)


def physicality_spectrum(gamma) -> np.ndarray:
    """Ascending eigenvalues of the physicality embedding (each Hermitian eigenvalue twice)."""
    g = as_covariance(gamma)
    return np.linalg.eigvalsh(embedding(g, symplectic_form(g.shape[0] // 2)))


def symplectic_eigenvalues(gamma) -> np.ndarray:
    """Ascending symplectic eigenvalues, the moduli of the spectrum of i*Omega*gamma.

    The spectrum comes in +-nu pairs; the N positive members are taken as the
    eigenvalues of the Hermitian matrix i * gamma^(1/2) Omega gamma^(1/2),
    which is similar to i*Omega*gamma.
    """
    g = as_covariance(gamma)
    w, v = np.linalg.eigh(g)
    if w[0] <= 1e-12:
        raise NotPositiveDefiniteError(f"covariance is not positive definite (min eigenvalue {w[0]:.3g})")
    root = (v * np.sqrt(w)) @ v.T
    n = g.shape[0] // 2
    herm = 1j * (root @ symplectic_form(n) @ root)
    spec = np.linalg.eigvalsh(0.5 * (herm + herm.conj().T))
    return spec[n:].copy()


def partial_transpose(gamma, partition) -> np.ndarray:
    """Flip the sign of subsystem A's momenta: (Lambda+I) gamma (Lambda+I)."""
    g = as_covariance(gamma)
    part = ModePartition.parse(partition).check(g.shape[0] // 2)
    signs = partial_transpose_signs(part)
    return signs[:, None] * g * signs[None, :]


def ppt_check(gamma, partition, tol: float = TOL_PHYS) -> PptReport:
    """Positivity of the partial transpose, gamma + i*Omega_tilde >= 0."""
    g = as_covariance(gamma)
    part = ModePartition.parse(partition).check(g.shape[0] // 2)
    min_eig = float(np.linalg.eigvalsh(embedding(g, ppt_symplectic_form(part)))[0])
    return PptReport(min_eig >= -tol, min_eig)


def mode_blocks(gamma: np.ndarray, partition: ModePartition) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split gamma into (A block, B block, A-B coupling)."""
    k = 2 * partition.m
    return gamma[:k, :k], gamma[k:, k:], gamma[:k, k:]
