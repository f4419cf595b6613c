"""Symplectic decompositions and the Williamson-Euler parametrization of states.

Every physical covariance matrix can be written as

    gamma = K S(r) L  nu  L^T S(r) K^T,

with ``nu`` the thermal diagonal diag(nu_1, nu_1, ..., nu_N, nu_N), ``L`` and
``K`` passive (orthogonal symplectic) interferometers and S(r) the product of
single-mode squeezers diag(exp(-r_k), exp(r_k)).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.linalg import schur

from .errors import (
    InputError,
    NotPositiveDefiniteError,
    NotSymplecticError,
    NotUnitaryError,
    NumericalError,
    UnphysicalStateError,
)
from .gaussian import as_covariance, symplectic_form

SYMPLECTIC_TOL = 1e-8
ORTHOGONAL_TOL = 1e-10
UNITARY_TOL = 1e-10
RECOMPOSE_TOL = 1e-8
# |log sigma| below this is treated as "no squeezing" when pairing eigenvectors
UNSQUEEZED_TOL = 1e-9


def reordering_permutation(n_modes: int) -> np.ndarray:
    """Permutation P with P^T Omega P = J = [[0, I], [-I, 0]].

    Column k of P selects q_k, column N+k selects p_k, so ``P^T x`` maps an
    interleaved vector to (q_1..q_N, p_1..p_N).
    """
    p = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        p[2 * k, k] = 1.0
        p[2 * k + 1, n_modes + k] = 1.0
    return p


def standard_form(n_modes: int) -> np.ndarray:
    """J = [[0, I_N], [-I_N, 0]] in qqpp ordering."""
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def squeezing_matrix(r) -> np.ndarray:
    """Direct sum of diag(exp(-r_k), exp(r_k)), interleaved ordering."""
    r = np.asarray(r, dtype=float)
    return np.diag(np.column_stack([np.exp(-r), np.exp(r)]).ravel())


def thermal_matrix(nu) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    return np.diag(np.repeat(nu, 2))


def symplectic_residual(s: np.ndarray) -> float:
    """max |S Omega S^T - Omega|."""
    omega = symplectic_form(s.shape[0] // 2)
    return float(np.max(np.abs(s @ omega @ s.T - omega)))


def orthogonal_residual(s: np.ndarray) -> float:
    return float(np.max(np.abs(s.T @ s - np.eye(s.shape[0]))))


def is_symplectic(s, tol: float = SYMPLECTIC_TOL) -> bool:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
        return False
    return symplectic_residual(s) <= tol


def _check_symplectic(s, tol: float = SYMPLECTIC_TOL, what: str = "matrix") -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2 or s.shape[0] == 0:
        raise InputError(f"{what} must be square with even dimension, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InputError(f"{what} contains NaN or Inf entries")
    res = symplectic_residual(s)
    if res > tol:
        raise NotSymplecticError(f"{what} is not symplectic (residual {res:.3g})")
    return s


def _check_passive(s, what: str) -> np.ndarray:
    s = _check_symplectic(s, ORTHOGONAL_TOL, what)
    res = orthogonal_residual(s)
    if res > ORTHOGONAL_TOL:
        raise NotSymplecticError(f"{what} is not orthogonal (residual {res:.3g})")
    return s


def _check_unitary(q) -> np.ndarray:
    q = np.asarray(q, dtype=complex)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] == 0:
        raise InputError(f"unitary must be square, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InputError("unitary contains NaN or Inf entries")
    res = np.linalg.norm(q.conj().T @ q - np.eye(q.shape[0]), 2)
    if res > UNITARY_TOL:
        raise NotUnitaryError(f"matrix is not unitary (residual {res:.3g})")
    return q


def unitary_to_symplectic(q) -> np.ndarray:
    """Passive symplectic K = P O P^T with O = [[Re Q, Im Q], [-Im Q, Re Q]]."""
    q = _check_unitary(q)
    x, y = q.real, q.imag
    o = np.block([[x, y], [-y, x]])
    p = reordering_permutation(q.shape[0])
    return p @ o @ p.T


def symplectic_to_unitary(k) -> np.ndarray:
    """Inverse of :func:`unitary_to_symplectic` for an orthogonal symplectic ``k``."""
    k = _check_passive(k, "passive transformation")
    n = k.shape[0] // 2
    p = reordering_permutation(n)
    o = p.T @ k @ p
    return o[:n, :n] + 1j * o[:n, n:]


class WilliamsonForm(NamedTuple):
    nu: np.ndarray
    S: np.ndarray


class EulerForm(NamedTuple):
    K: np.ndarray
    r: np.ndarray
    L: np.ndarray


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def williamson_decompose(gamma) -> WilliamsonForm:
    """Symplectic diagonalization gamma = S diag(nu_1, nu_1, ...) S^T.

    With R = gamma^(1/2), the antisymmetric matrix R Omega R is brought to
    real Schur form O^T (R Omega R) O = (+) nu_k [[0, 1], [-1, 0]]; then
    S = R O diag(nu)^(-1/2) is symplectic.  For degenerate nu the result is
    one of many valid S.
    """
    g = as_covariance(gamma)
    n = g.shape[0] // 2
    w, v = np.linalg.eigh(g)
    if w[0] <= 1e-12:
        raise NotPositiveDefiniteError(f"covariance is not positive definite (min eigenvalue {w[0]:.3g})")
    root = (v * np.sqrt(w)) @ v.T
    a = root @ symplectic_form(n) @ root
    a = 0.5 * (a - a.T)
    t, o = schur(a, output="real")

    nu = np.empty(n)
    cols = np.empty_like(o)
    for k in range(n):
        i = 2 * k
        beta = t[i, i + 1]
        if beta >= 0:
            cols[:, i], cols[:, i + 1] = o[:, i], o[:, i + 1]
        else:
            cols[:, i], cols[:, i + 1] = o[:, i + 1], o[:, i]
        nu[k] = abs(beta)

    order = np.argsort(nu, kind="stable")
    nu = nu[order]
    idx = np.column_stack([2 * order, 2 * order + 1]).ravel()
    cols = cols[:, idx]
    s = root @ cols / np.sqrt(np.repeat(nu, 2))[None, :]

    err = _relative_error(s @ thermal_matrix(nu) @ s.T, g)
    if err > RECOMPOSE_TOL or symplectic_residual(s) > 1e-9:
        raise NumericalError(
            f"Williamson decomposition inaccurate (recomposition {err:.3g}, "
            f"symplectic residual {symplectic_residual(s):.3g})"
        )
    return WilliamsonForm(nu, s)


def euler_decompose(s) -> EulerForm:
    """Bloch-Messiah factorization S = K (+)S(r_k) L with r descending, r_k >= 0.

    Uses the polar decomposition S = O H, H = (S^T S)^(1/2).  H is a positive
    symplectic matrix whose eigenvectors pair up as (u, J^T u) with eigenvalues
    (exp(-r), exp(r)); collecting them (in qqpp ordering) gives a passive W
    with H = W S(r) W^T, hence K = O W and L = W^T.
    """
    s = _check_symplectic(s, what="S")
    n = s.shape[0] // 2
    p = reordering_permutation(n)
    j = standard_form(n)
    sq = p.T @ s @ p

    lam, vec = np.linalg.eigh(sq.T @ sq)
    sigma = np.sqrt(np.clip(lam, 0.0, None))
    logs = np.log(sigma)
    lower = np.flatnonzero(logs < -UNSQUEEZED_TOL)
    middle = np.flatnonzero(np.abs(logs) <= UNSQUEEZED_TOL)
    if len(middle) % 2 or len(lower) + len(middle) // 2 != n:
        raise NumericalError("squeezing spectrum does not pair up; matrix ill-conditioned")

    us = [vec[:, i] for i in lower]
    rs = [-logs[i] for i in lower]
    # unsqueezed subspace: pick a J-compatible orthonormal basis greedily
    basis = vec[:, middle]
    chosen: list[np.ndarray] = []
    for _ in range(len(middle) // 2):
        cand = basis.copy()
        for c in chosen:
            cand -= np.outer(c, c @ cand)
        norms = np.linalg.norm(cand, axis=0)
        u = cand[:, int(np.argmax(norms))]
        u = u / np.linalg.norm(u)
        us.append(u)
        rs.append(0.0)
        chosen.extend([u, j.T @ u])

    u_mat = np.column_stack(us)
    w = np.hstack([u_mat, j.T @ u_mat])
    r = np.array(rs)
    h = w @ np.diag(np.exp(np.concatenate([-r, r]))) @ w.T
    o = sq @ np.linalg.inv(h)

    k_mat = p @ (o @ w) @ p.T
    l_mat = p @ w.T @ p.T
    recomposed = k_mat @ squeezing_matrix(r) @ l_mat
    err = _relative_error(recomposed, s)
    worst = max(symplectic_residual(k_mat), symplectic_residual(l_mat), orthogonal_residual(l_mat))
    if err > RECOMPOSE_TOL or worst > 1e-9 or orthogonal_residual(k_mat) > 1e-9:
        raise NumericalError(f"Euler decomposition inaccurate (recomposition {err:.3g})")
    return EulerForm(k_mat, r, l_mat)


@dataclass(frozen=True)
class GaussianRecipe:
    """Parameters (nu, L, r, Q) of the thermal -> L -> squeeze -> K preparation.

    ``unitary`` is the N x N mode unitary of the output interferometer; the
    quadrature-level K is derived from it.  ``L`` is stored as its 2N x 2N
    orthogonal symplectic matrix.
    """

    nu: np.ndarray
    L: np.ndarray
    r: np.ndarray
    unitary: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float).ravel()
        r = np.asarray(self.r, dtype=float).ravel()
        q = np.asarray(self.unitary, dtype=complex)
        n = len(nu)
        l_mat = np.eye(2 * n) if self.L is None else np.asarray(self.L, dtype=float)
        if len(r) != n or q.shape != (n, n) or l_mat.shape != (2 * n, 2 * n):
            raise InputError(
                f"recipe shapes disagree: nu {nu.shape}, r {r.shape}, unitary {q.shape}, L {l_mat.shape}"
            )
        if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(r))):
            raise InputError("recipe contains NaN or Inf")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "unitary", q)
        object.__setattr__(self, "L", l_mat)

    @property
    def n_modes(self) -> int:
        return len(self.nu)

    @property
    def K(self) -> np.ndarray:
        return unitary_to_symplectic(self.unitary)

    def to_dict(self) -> dict:
        return {
            "nu": self.nu.tolist(),
            "L": self.L.tolist(),
            "r": self.r.tolist(),
            "K_unitary": {"re": self.unitary.real.tolist(), "im": self.unitary.imag.tolist()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> GaussianRecipe:
        try:
            ku = data["K_unitary"]
            q = np.array(ku["re"], dtype=float) + 1j * np.array(ku.get("im", np.zeros_like(ku["re"])), dtype=float)
            return cls(
                nu=np.array(data["nu"], dtype=float),
                L=None if data.get("L") is None else np.array(data["L"], dtype=float),
                r=np.array(data["r"], dtype=float),
                unitary=q,
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"recipe JSON needs nu, r and K_unitary fields ({exc})") from exc
        except ValueError as exc:
            raise InputError(f"recipe JSON has malformed arrays ({exc})") from exc


def load_recipe(path) -> GaussianRecipe:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return GaussianRecipe.from_dict(data)


def save_recipe(recipe: GaussianRecipe, path) -> None:
    Path(path).write_text(json.dumps(recipe.to_dict(), indent=2) + "\n", encoding="utf-8")


def recipe_from_covariance(gamma) -> GaussianRecipe:
    """Invert :func:`compose_covariance`: Williamson followed by Euler."""
    nu, s = williamson_decompose(gamma)
    k_mat, r, l_mat = euler_decompose(s)
    return GaussianRecipe(nu=nu, L=l_mat, r=r, unitary=symplectic_to_unitary(k_mat))


def compose_covariance(recipe: GaussianRecipe) -> np.ndarray:
    """gamma = K S(r) L nu L^T S(r) K^T."""
    if np.any(recipe.nu < 1.0):
        raise UnphysicalStateError(f"symplectic eigenvalues must be >= 1, got {recipe.nu.tolist()}")
    l_mat = _check_passive(recipe.L, "L")
    k_mat = recipe.K
    m = k_mat @ squeezing_matrix(recipe.r) @ l_mat
    gamma = m @ thermal_matrix(recipe.nu) @ m.T
    return 0.5 * (gamma + gamma.T)
