"""Dense LMI feasibility with margin maximization and dual certificates.

A problem is a list of affine blocks G_j(x) = A0_j + sum_i x_i A_ij.  The
solver maximizes the common margin t subject to G_j(x) >= t I for every j and
|x_i| <= R, using a log-determinant barrier method.  At the end the
barrier's dual iterate gives PSD matrices Z_j with sum_j tr Z_j = 1; when the
margin is negative they form a Farkas-type proof that no x makes every block
PSD, which :func:`verify_certificate` checks with plain arithmetic.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-8
DEFAULT_DELTA_FEAS = 1e-7
DEFAULT_MAX_ITER = 200
DEFAULT_GAP = 1e-10
CENTERING_TOL = 1e-8

CERT_PSD_TOL = 1e-9
CERT_TRACE_TOL = 1e-9
CERT_EQ_TOL = 1e-7


class Verdict(str, enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    MARGINAL = "MARGINAL"


@dataclass
class LmiBlock:
    A0: np.ndarray
    A: np.ndarray  # shape (d, s, s)

    @property
    def size(self) -> int:
        return self.A0.shape[0]


@dataclass
class LmiProblem:
    """Blocks G_j(x) = A0_j + sum_i x_i A_ij >= 0 sharing the variables x."""

    blocks: list[LmiBlock]
    var_bound: float | None = None

    def __post_init__(self):
        if not self.blocks:
            raise InputError("an LMI problem needs at least one block")
        clean = []
        d = None
        for j, blk in enumerate(self.blocks):
            a0 = np.asarray(blk.A0 if isinstance(blk, LmiBlock) else blk[0], dtype=float)
            a = np.asarray(blk.A if isinstance(blk, LmiBlock) else blk[1], dtype=float)
            if a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
                raise InputError(f"block {j}: A0 must be square, got {a0.shape}")
            if a.ndim != 3 or a.shape[1:] != a0.shape:
                raise InputError(f"block {j}: coefficients must have shape (d, {a0.shape[0]}, {a0.shape[0]}), got {a.shape}")
            if d is None:
                d = a.shape[0]
            elif a.shape[0] != d:
                raise InputError(f"block {j} has {a.shape[0]} coefficient matrices, expected {d}")
            if not (np.all(np.isfinite(a0)) and np.all(np.isfinite(a))):
                raise InputError(f"block {j} contains NaN or Inf")
            if np.max(np.abs(a0 - a0.T), initial=0.0) > 1e-12 or np.max(np.abs(a - a.transpose(0, 2, 1)), initial=0.0) > 1e-12:
                raise InputError(f"block {j} is not symmetric")
            clean.append(LmiBlock(a0, a))
        if d < 1:
            raise InputError("an LMI problem needs at least one variable")
        self.blocks = clean
        if self.var_bound is None:
            biggest = max(np.max(np.abs(b.A0)) for b in clean)
            self.var_bound = max(10.0, 10.0 * float(biggest))
        elif not self.var_bound > 0:
            raise InputError(f"var_bound must be positive, got {self.var_bound}")

    @property
    def dim_vars(self) -> int:
        return self.blocks[0].A.shape[0]

    def evaluate(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_vars,):
            raise InputError(f"expected {self.dim_vars} variables, got shape {x.shape}")
        return [b.A0 + np.tensordot(x, b.A, axes=1) for b in self.blocks]

    def to_dict(self) -> dict:
        return {
            "dim_vars": self.dim_vars,
            "var_bound": self.var_bound,
            "blocks": [{"A0": b.A0.tolist(), "A": b.A.tolist()} for b in self.blocks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> LmiProblem:
        try:
            blocks = [LmiBlock(np.array(b["A0"], dtype=float), np.array(b["A"], dtype=float)) for b in data["blocks"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed LMI problem JSON ({exc})") from exc
        prob = cls(blocks, data.get("var_bound"))
        if "dim_vars" in data and int(data["dim_vars"]) != prob.dim_vars:
            raise InputError("dim_vars disagrees with the coefficient arrays")
        return prob


@dataclass
class InfeasibilityCertificate:
    Z: list[np.ndarray]
    slack: float = float("nan")

    def to_dict(self) -> dict:
        return {"Z": [z.tolist() for z in self.Z], "slack": self.slack}

    @classmethod
    def from_dict(cls, data: dict) -> InfeasibilityCertificate:
        try:
            return cls([np.array(z, dtype=float) for z in data["Z"]], float(data.get("slack", float("nan"))))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed certificate JSON ({exc})") from exc


@dataclass
class FeasibilityReport:
    verdict: Verdict
    margin: float
    witness: np.ndarray | None = None
    certificate: InfeasibilityCertificate | None = None
    iterations: int = 0
    converged: bool = True
    dual_bound: float = float("nan")
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "margin": self.margin,
            "dual_bound": self.dual_bound,
            "witness": None if self.witness is None else self.witness.tolist(),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "diagnostics": list(self.diagnostics),
        }


class CertificateCheck(tuple):
    """(valid, slack) with the individual residuals attached for diagnostics."""

    def __new__(cls, valid: bool, slack: float, **details):
        obj = super().__new__(cls, (valid, slack))
        obj.details = details
        return obj

    @property
    def valid(self) -> bool:
        return self[0]

    @property
    def slack(self) -> float:
        return self[1]


def eval_constraints(problem: LmiProblem, x) -> np.ndarray:
    """Smallest eigenvalue of each block at ``x``."""
    return np.array([np.linalg.eigvalsh(g)[0] for g in problem.evaluate(x)])


def verify_certificate(problem: LmiProblem, cert: InfeasibilityCertificate) -> CertificateCheck:
    """Check Z_j >= 0, sum tr Z_j = 1, sum <A_ij, Z_j> = 0 and sum <A0_j, Z_j> < 0.

    A valid certificate shows that every x has some block with
    lambda_min(G_j(x)) <= -slack, because sum_j <G_j(x), Z_j> = -slack.
    """
    if len(cert.Z) != len(problem.blocks):
        raise InputError(f"certificate has {len(cert.Z)} matrices for {len(problem.blocks)} blocks")
    zs = []
    for j, (z, blk) in enumerate(zip(cert.Z, problem.blocks)):
        z = np.asarray(z, dtype=float)
        if z.shape != blk.A0.shape:
            raise InputError(f"certificate block {j} has shape {z.shape}, expected {blk.A0.shape}")
        zs.append(0.5 * (z + z.T))
    min_eig = min(float(np.linalg.eigvalsh(z)[0]) for z in zs)
    trace = sum(float(np.trace(z)) for z in zs)
    eq = sum(np.tensordot(blk.A, z, axes=([1, 2], [0, 1])) for blk, z in zip(problem.blocks, zs))
    eq_res = float(np.max(np.abs(eq)))
    # weak duality with an inexact equality still bounds every |x_i| <= R
    bounded = -sum(float(np.sum(blk.A0 * z)) for blk, z in zip(problem.blocks, zs)) - problem.var_bound * float(np.sum(np.abs(eq)))
    slack = -sum(float(np.sum(blk.A0 * z)) for blk, z in zip(problem.blocks, zs))
    valid = (
        min_eig >= -CERT_PSD_TOL
        and abs(trace - 1.0) <= CERT_TRACE_TOL
        and eq_res <= CERT_EQ_TOL
        and slack > 0.0
    )
    return CertificateCheck(valid, slack, min_eig=min_eig, trace=trace, eq_residual=eq_res, bounded_slack=bounded)


class _Barrier:
    """Barrier  -tau*t - sum_j logdet(G_j(x) - tI) - sum_i log(R^2 - x_i^2)  in z = (x, t)."""

    def __init__(self, problem: LmiProblem):
        self.problem = problem
        self.R = float(problem.var_bound)
        d = problem.dim_vars
        # coefficient stacks in z = (x, t): the t direction contributes -I
        self.coeffs = [np.concatenate([b.A, -np.eye(b.size)[None]], axis=0) for b in problem.blocks]
        self.offsets = [b.A0 for b in problem.blocks]
        self.d = d
        self.m = sum(b.size for b in problem.blocks) + 2 * d

    def slacks(self, z):
        return [a0 + np.tensordot(z, c, axes=1) for a0, c in zip(self.offsets, self.coeffs)]

    def value(self, z, tau):
        x = z[: self.d]
        if np.any(np.abs(x) >= self.R):
            return np.inf
        total = -tau * z[-1] - np.sum(np.log(self.R - x) + np.log(self.R + x))
        for f in self.slacks(z):
            try:
                chol = np.linalg.cholesky(f)
            except np.linalg.LinAlgError:
                return np.inf
            total -= 2.0 * np.sum(np.log(np.diag(chol)))
        return total

    def derivatives(self, z, tau):
        x = z[: self.d]
        grad = np.zeros(self.d + 1)
        hess = np.zeros((self.d + 1, self.d + 1))
        grad[-1] = -tau
        inverses = []
        for f, c in zip(self.slacks(z), self.coeffs):
            finv = np.linalg.inv(f)
            finv = 0.5 * (finv + finv.T)
            inverses.append(finv)
            prod = np.matmul(finv[None], c)
            grad -= np.einsum("app->a", prod)
            hess += np.einsum("apq,bqp->ab", prod, prod)
        up, lo = self.R - x, self.R + x
        grad[: self.d] += 1.0 / up - 1.0 / lo
        hess[np.arange(self.d), np.arange(self.d)] += 1.0 / up**2 + 1.0 / lo**2
        return grad, 0.5 * (hess + hess.T), inverses


def _initial_point(problem: LmiProblem) -> np.ndarray:
    z = np.zeros(problem.dim_vars + 1)
    z[-1] = min(np.linalg.eigvalsh(b.A0)[0] for b in problem.blocks) - 1.0
    return z


def _newton_direction(grad, hess):
    try:
        chol = np.linalg.cholesky(hess)
        y = np.linalg.solve(chol, -grad)
        return np.linalg.solve(chol.T, y)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(hess, -grad, rcond=None)[0]


def _long_step(bar: _Barrier, z, step, tau, decrement, damped) -> float:
    """Armijo backtracking from a unit step, never below the damped Newton step.

    Only used far from the central path, where barrier differences are large
    compared with rounding in the barrier value itself.
    """
    f0 = bar.value(z, tau)
    s = 1.0
    while s > damped:
        if bar.value(z + s * step, tau) <= f0 - 0.25 * s * decrement:
            return s
        s *= 0.5
    return damped


def _extract_certificate(problem: LmiProblem, inverses, tau) -> tuple[InfeasibilityCertificate, CertificateCheck]:
    """Normalized dual iterate Z_j = (G_j - tI)^-1 / tau, with a projected fallback."""
    zs = [inv / tau for inv in inverses]
    total = sum(np.trace(z) for z in zs)
    zs = [z / total for z in zs]
    plain = InfeasibilityCertificate(zs)
    check = verify_certificate(problem, plain)
    if check.valid:
        plain.slack = check.slack
        return plain, check
    # least-squares correction onto {sum <A_i, Z> = 0, sum tr Z = 1}
    rows = [np.concatenate([b.A[i].ravel() for b in problem.blocks]) for i in range(problem.dim_vars)]
    rows.append(np.concatenate([np.eye(b.size).ravel() for b in problem.blocks]))
    mat = np.array(rows)
    flat = np.concatenate([z.ravel() for z in zs])
    target = np.zeros(len(rows))
    target[-1] = 1.0
    corr = np.linalg.lstsq(mat @ mat.T, mat @ flat - target, rcond=None)[0]
    fixed = flat - mat.T @ corr
    out, pos = [], 0
    for b in problem.blocks:
        z = fixed[pos : pos + b.size**2].reshape(b.size, b.size)
        out.append(0.5 * (z + z.T))
        pos += b.size**2
    projected = InfeasibilityCertificate(out)
    pcheck = verify_certificate(problem, projected)
    if pcheck.valid:
        projected.slack = pcheck.slack
        return projected, pcheck
    plain.slack = check.slack
    return plain, check


def solve_feasibility(
    problem: LmiProblem,
    epsilon: float = DEFAULT_EPSILON,
    delta_feas: float = DEFAULT_DELTA_FEAS,
    max_iter: int = DEFAULT_MAX_ITER,
    gap: float = DEFAULT_GAP,
    mu: float = 20.0,
) -> FeasibilityReport:
    """Maximize t subject to G_j(x) >= tI, |x_i| <= R, and classify the optimum.

    FEASIBLE when t* >= ``delta_feas`` (with the maximizing x as witness),
    INFEASIBLE when an extracted dual certificate verifies and proves
    t* <= -``epsilon`` over the whole trust region, MARGINAL otherwise or when
    the Newton budget runs out before the duality gap reaches ``gap``.
    """
    if not epsilon > 0 or not delta_feas > 0:
        raise InputError("epsilon and delta_feas must be positive")
    bar = _Barrier(problem)
    z = _initial_point(problem)
    tau = 1.0
    iterations = 0
    converged = False
    diagnostics: list[str] = []
    inverses = None
    best_cert = None
    last_failure = None

    while True:
        # centering by damped Newton: the step 1/(1+lambda) stays inside the
        # Dikin ellipsoid of the self-concordant barrier, so no function
        # values (which lose precision at large tau) are compared
        centered = False
        stalled = 0
        best = np.inf
        while iterations < max_iter:
            grad, hess, inverses = bar.derivatives(z, tau)
            step = _newton_direction(grad, hess)
            decrement = max(float(-grad @ step), 0.0)
            # Newton converges quadratically near the path; no progress for a
            # few steps means the rounding floor (slacks ~ 1/tau) was reached
            if decrement < 0.5 * best:
                best, stalled = decrement, 0
            else:
                stalled += 1
            if decrement <= CENTERING_TOL or stalled > 4:
                centered = True
                break
            iterations += 1
            lam = np.sqrt(decrement)
            s = 1.0 if lam < 0.25 else _long_step(bar, z, step, tau, decrement, 1.0 / (1.0 + lam))
            while s > 1e-12 and not np.isfinite(bar.value(z + s * step, tau)):
                s *= 0.5
            if s <= 1e-12:
                diagnostics.append(f"step collapsed at tau={tau:.3g}")
                centered = True
                break
            z = z + s * step
        if not centered:
            diagnostics.append("Newton budget exhausted before convergence")
            break
        # dual iterates lose accuracy as tau grows, so keep the last one that verifies
        if z[-1] < 0:
            cert, check = _extract_certificate(problem, inverses, tau)
            if check.valid and check.details["bounded_slack"] >= epsilon:
                best_cert = cert
            else:
                last_failure = check
        # gap measured relative to the margin's scale
        scaled_gap = gap * max(1.0, abs(z[-1]))
        if bar.m / tau <= scaled_gap * (1.0 + 1e-12):
            converged = True
            break
        tau = min(tau * mu, bar.m / scaled_gap)

    x, t = z[:-1].copy(), float(z[-1])
    margin = float(min(eval_constraints(problem, x)))
    dual_bound = t + bar.m / tau

    report = FeasibilityReport(
        Verdict.MARGINAL, margin, iterations=iterations, converged=converged, dual_bound=dual_bound, diagnostics=diagnostics
    )
    if not converged:
        logger.warning("LMI solve did not converge after %d Newton steps", iterations)
        return report
    if margin >= delta_feas:
        report.verdict = Verdict.FEASIBLE
        report.witness = x
        return report
    if best_cert is not None:
        report.verdict = Verdict.INFEASIBLE
        report.certificate = best_cert
    elif margin <= -epsilon and last_failure is not None:
        d = last_failure.details
        diagnostics.append(
            "margin below -epsilon but no certificate verified "
            f"(min eig {d['min_eig']:.3g}, trace {d['trace']:.12g}, equality residual {d['eq_residual']:.3g})"
        )
    return report

