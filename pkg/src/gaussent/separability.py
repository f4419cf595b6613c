"""Separability of bipartite Gaussian states as an LMI feasibility problem.

A state gamma on A+B is separable iff there are single-party covariance
matrices gamma_A >= i Omega_A and gamma_B >= i Omega_B with
gamma >= gamma_A (+) gamma_B.  Written with the real embedding of the
uncertainty relation this is three linear matrix inequalities in the
entries of gamma_A and gamma_B.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UnphysicalStateError
from .gaussian import (
    TOL_PHYS,
    ModePartition,
    as_covariance,
    embedding,
    is_physical,
    mode_blocks,
    ppt_check,
    symplectic_form,
)
from .lmi import (
    DEFAULT_DELTA_FEAS,
    DEFAULT_EPSILON,
    FeasibilityReport,
    InfeasibilityCertificate,
    LmiBlock,
    LmiProblem,
    Verdict,
    eval_constraints,
    solve_feasibility,
    verify_certificate,
)

WITNESS_TOL = 1e-9


class StateClass(str, enum.Enum):
    SEPARABLE = "SEPARABLE"
    NPT_ENTANGLED = "NPT_ENTANGLED"
    BOUND_ENTANGLED = "BOUND_ENTANGLED"
    MARGINAL = "MARGINAL"
    UNPHYSICAL = "UNPHYSICAL"


def symmetric_basis(dim: int) -> list[tuple[int, int]]:
    """Upper-triangle index pairs (row-major) parametrizing a dim x dim symmetric matrix."""
    return [(p, q) for p in range(dim) for q in range(p, dim)]


def _basis_matrix(dim: int, p: int, q: int) -> np.ndarray:
    e = np.zeros((dim, dim))
    e[p, q] = 1.0
    e[q, p] = 1.0
    return e


def unpack_symmetric(values, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim))
    for v, (p, q) in zip(values, symmetric_basis(dim)):
        out[p, q] = out[q, p] = v
    return out


def pack_symmetric(matrix: np.ndarray) -> np.ndarray:
    return np.array([matrix[p, q] for p, q in symmetric_basis(matrix.shape[0])])


@dataclass
class SeparabilityProblem:
    gamma: np.ndarray
    partition: ModePartition
    lmi: LmiProblem

    @property
    def n_vars_a(self) -> int:
        return self.partition.m * (2 * self.partition.m + 1)

    def unpack(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Map the variable vector to (gamma_A, gamma_B)."""
        x = np.asarray(x, dtype=float)
        k = self.n_vars_a
        return unpack_symmetric(x[:k], 2 * self.partition.m), unpack_symmetric(x[k:], 2 * self.partition.n)

    def pack(self, gamma_a, gamma_b) -> np.ndarray:
        return np.concatenate([pack_symmetric(np.asarray(gamma_a)), pack_symmetric(np.asarray(gamma_b))])


def build_problem(gamma, partition) -> SeparabilityProblem:
    """LMI blocks: gamma - gamma_A (+) gamma_B, and the embeddings of gamma_A, gamma_B.

    Variables are the upper triangles of gamma_A then gamma_B, row-major.
    """
    g = as_covariance(gamma)
    part = ModePartition.parse(partition).check(g.shape[0] // 2)
    phys = is_physical(g)
    if not phys.physical:
        raise UnphysicalStateError(f"state violates the uncertainty relation (min eigenvalue {phys.min_eig:.3g})")
    da, db = 2 * part.m, 2 * part.n
    size = da + db
    basis_a = symmetric_basis(da)
    basis_b = symmetric_basis(db)
    n_vars = len(basis_a) + len(basis_b)

    joint = np.zeros((n_vars, size, size))
    local_a = np.zeros((n_vars, 2 * da, 2 * da))
    local_b = np.zeros((n_vars, 2 * db, 2 * db))
    for i, (p, q) in enumerate(basis_a):
        e = _basis_matrix(da, p, q)
        joint[i, :da, :da] = -e
        local_a[i] = np.kron(np.eye(2), e)
    for i, (p, q) in enumerate(basis_b, start=len(basis_a)):
        e = _basis_matrix(db, p, q)
        joint[i, da:, da:] = -e
        local_b[i] = np.kron(np.eye(2), e)

    blocks = [
        LmiBlock(g.copy(), joint),
        LmiBlock(embedding(np.zeros((da, da)), symplectic_form(part.m)), local_a),
        LmiBlock(embedding(np.zeros((db, db)), symplectic_form(part.n)), local_b),
    ]
    return SeparabilityProblem(g, part, LmiProblem(blocks))


def validate_witness(gamma, partition, witness, tol: float = WITNESS_TOL) -> bool:
    """True iff gamma_A, gamma_B are physical and gamma - gamma_A (+) gamma_B >= 0, up to ``tol``."""
    g = as_covariance(gamma)
    part = ModePartition.parse(partition).check(g.shape[0] // 2)
    gamma_a, gamma_b = (np.asarray(w, dtype=float) for w in witness)
    if gamma_a.shape != (2 * part.m, 2 * part.m) or gamma_b.shape != (2 * part.n, 2 * part.n):
        raise InputError(f"witness shapes {gamma_a.shape}, {gamma_b.shape} do not match partition {tuple(part)}")
    gamma_a = 0.5 * (gamma_a + gamma_a.T)
    gamma_b = 0.5 * (gamma_b + gamma_b.T)
    direct = np.zeros_like(g)
    k = 2 * part.m
    direct[:k, :k] = gamma_a
    direct[k:, k:] = gamma_b
    checks = (
        np.linalg.eigvalsh(g - direct)[0],
        np.linalg.eigvalsh(embedding(gamma_a, symplectic_form(part.m)))[0],
        np.linalg.eigvalsh(embedding(gamma_b, symplectic_form(part.n)))[0],
    )
    return bool(min(checks) >= -tol)


@dataclass
class StateVerdict:
    """Outcome of :func:`classify`."""

    state_class: StateClass
    ppt_min_eig: float
    lmi_margin: float | None = None
    physical_min_eig: float | None = None
    witness: tuple[np.ndarray, np.ndarray] | None = None
    certificate: InfeasibilityCertificate | None = None
    certificate_slack: float | None = None
    report: FeasibilityReport | None = None

    def to_dict(self) -> dict:
        out = {
            "class": self.state_class.value,
            "ppt_min_eig": self.ppt_min_eig,
            "lmi_margin": self.lmi_margin,
            "physical_min_eig": self.physical_min_eig,
        }
        if self.witness is not None:
            out["witness"] = {"gamma_A": self.witness[0].tolist(), "gamma_B": self.witness[1].tolist()}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        if self.report is not None:
            out["solver"] = {
                "verdict": self.report.verdict.value,
                "iterations": self.report.iterations,
                "converged": self.report.converged,
                "dual_bound": self.report.dual_bound,
                "diagnostics": list(self.report.diagnostics),
            }
        return out


def classify(
    gamma,
    partition,
    epsilon: float = DEFAULT_EPSILON,
    delta_feas: float = DEFAULT_DELTA_FEAS,
    tol_phys: float = TOL_PHYS,
) -> StateVerdict:
    """Classify a bipartite state as separable, NPT entangled or bound entangled.

    Order of tests: physicality, PPT, the trivial product witness (the two
    diagonal blocks of gamma), and finally the LMI.  A separable verdict
    always carries a witness that passed :func:`validate_witness`; a bound
    entangled verdict always carries a verified infeasibility certificate.
    """
    g = as_covariance(gamma)
    part = ModePartition.parse(partition).check(g.shape[0] // 2)
    phys = is_physical(g, tol_phys)
    ppt = ppt_check(g, part, tol_phys)
    if not phys.physical:
        return StateVerdict(StateClass.UNPHYSICAL, ppt.min_eig, physical_min_eig=phys.min_eig)
    if not ppt.ppt:
        return StateVerdict(StateClass.NPT_ENTANGLED, ppt.min_eig, physical_min_eig=phys.min_eig)

    # product states sit on the boundary of the LMI (margin 0) but are
    # separable with their own marginals as witness
    gamma_a, gamma_b, _ = mode_blocks(g, part)
    if validate_witness(g, part, (gamma_a, gamma_b)):
        sep = build_problem(g, part)
        margin = float(np.min(eval_constraints(sep.lmi, sep.pack(gamma_a, gamma_b))))
        return StateVerdict(
            StateClass.SEPARABLE, ppt.min_eig, margin, phys.min_eig, witness=(gamma_a.copy(), gamma_b.copy())
        )

    sep = build_problem(g, part)
    report = solve_feasibility(sep.lmi, epsilon=epsilon, delta_feas=delta_feas)
    verdict = StateVerdict(StateClass.MARGINAL, ppt.min_eig, report.margin, phys.min_eig, report=report)
    if report.verdict is Verdict.FEASIBLE:
        witness = sep.unpack(report.witness)
        if validate_witness(g, part, witness):
            verdict.state_class = StateClass.SEPARABLE
            verdict.witness = witness
        else:
            report.diagnostics.append("solver witness failed independent validation")
    elif report.verdict is Verdict.INFEASIBLE:
        check = verify_certificate(sep.lmi, report.certificate)
        if check.valid:
            verdict.state_class = StateClass.BOUND_ENTANGLED
            verdict.certificate = report.certificate
            verdict.certificate_slack = check.slack
        else:
            report.diagnostics.append("certificate failed independent verification")
    return verdict

