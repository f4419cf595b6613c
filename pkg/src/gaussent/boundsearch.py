"""Random search for bound entangled Gaussian states.

Candidates are drawn in the thermal -> L -> squeeze -> K parametrization,
screened with the PPT test and, if they pass, handed to the separability
LMI.  A hit is a PPT state whose LMI comes back infeasible with a verified
certificate.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .gaussian import CovarianceMatrix, ModePartition, ppt_check, save_covariance
from .lmi import DEFAULT_DELTA_FEAS, DEFAULT_EPSILON
from .separability import StateClass, StateVerdict, classify
from .symplectic import GaussianRecipe, compose_covariance, save_recipe, unitary_to_symplectic

RECOMPOSE_TOL = 1e-9


class LPolicy(str, enum.Enum):
    IDENTITY = "IDENTITY"
    RANDOM = "RANDOM"


def _interval(value, name: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be a pair [lo, hi], got {value!r}") from exc
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise InputError(f"{name} must satisfy lo <= hi, got [{lo}, {hi}]")
    return lo, hi


@dataclass
class SearchConfig:
    """Sampling ranges and solver settings for :func:`search`.

    ``fixed_nu``, ``fixed_r`` and ``fixed_unitary`` pin the corresponding
    recipe component instead of sampling it; this is how a single known
    recipe is replayed through the search pipeline.
    """

    n_modes: int = 4
    nu_range: tuple[float, float] = (1.01, 4.0)
    r_range: tuple[float, float] = (0.0, 0.3)
    L_policy: LPolicy = LPolicy.IDENTITY
    seed: int = 0
    max_candidates: int = 100
    epsilon: float = DEFAULT_EPSILON
    delta_feas: float = DEFAULT_DELTA_FEAS
    partition: ModePartition | None = None
    fixed_nu: np.ndarray | None = None
    fixed_r: np.ndarray | None = None
    fixed_unitary: np.ndarray | None = None
    workers: int = 1

    def __post_init__(self):
        self.n_modes = int(self.n_modes)
        if self.n_modes < 2:
            raise InputError("search needs at least two modes")
        self.nu_range = _interval(self.nu_range, "nu_range")
        self.r_range = _interval(self.r_range, "r_range")
        if self.nu_range[0] < 1.0:
            raise InputError(f"nu_range lower bound must be >= 1, got {self.nu_range[0]}")
        try:
            self.L_policy = LPolicy(self.L_policy)
        except ValueError as exc:
            raise InputError(f"L_policy must be IDENTITY or RANDOM, got {self.L_policy!r}") from exc
        self.seed = int(self.seed)
        self.max_candidates = int(self.max_candidates)
        if self.max_candidates < 0:
            raise InputError("max_candidates must be non-negative")
        if not (self.epsilon > 0 and self.delta_feas > 0):
            raise InputError("epsilon and delta_feas must be positive")
        if self.partition is None:
            half = self.n_modes // 2
            self.partition = ModePartition(half, self.n_modes - half)
        self.partition = ModePartition.parse(self.partition).check(self.n_modes)
        n = self.n_modes
        if self.fixed_nu is not None:
            self.fixed_nu = np.asarray(self.fixed_nu, dtype=float)
            if self.fixed_nu.shape != (n,) or np.any(self.fixed_nu < 1.0):
                raise InputError("fixed_nu needs one value >= 1 per mode")
        if self.fixed_r is not None:
            self.fixed_r = np.asarray(self.fixed_r, dtype=float)
            if self.fixed_r.shape != (n,):
                raise InputError("fixed_r needs one value per mode")
        if self.fixed_unitary is not None:
            self.fixed_unitary = np.asarray(self.fixed_unitary, dtype=complex)
            if self.fixed_unitary.shape != (n, n):
                raise InputError(f"fixed_unitary must be {n}x{n}")
        self.workers = max(1, int(self.workers))

    def to_dict(self) -> dict:
        out = {
            "n_modes": self.n_modes,
            "nu_range": list(self.nu_range),
            "r_range": list(self.r_range),
            "L_policy": self.L_policy.value,
            "seed": self.seed,
            "max_candidates": self.max_candidates,
            "epsilon": self.epsilon,
            "delta_feas": self.delta_feas,
            "partition": list(self.partition),
        }
        if self.fixed_nu is not None:
            out["fixed_nu"] = self.fixed_nu.tolist()
        if self.fixed_r is not None:
            out["fixed_r"] = self.fixed_r.tolist()
        if self.fixed_unitary is not None:
            out["fixed_unitary"] = {"re": self.fixed_unitary.real.tolist(), "im": self.fixed_unitary.imag.tolist()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SearchConfig:
        if not isinstance(data, dict):
            raise InputError("search config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown search config fields: {sorted(unknown)}")
        kwargs = dict(data)
        fu = kwargs.get("fixed_unitary")
        if isinstance(fu, dict):
            re = np.array(fu["re"], dtype=float)
            kwargs["fixed_unitary"] = re + 1j * np.array(fu.get("im", np.zeros_like(re)), dtype=float)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise InputError(f"malformed search config ({exc})") from exc


@dataclass
class SearchHit:
    recipe: GaussianRecipe
    gamma: CovarianceMatrix
    verdict: StateVerdict
    robustness: float
    index: int = -1

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "robustness": self.robustness,
            "certificate_slack": self.verdict.certificate_slack,
            "recipe": self.recipe.to_dict(),
            "gamma": self.gamma.to_dict(),
        }


@dataclass
class SearchResult:
    """Hits sorted by descending robustness, plus how every candidate was classified."""

    config: SearchConfig
    hits: list[SearchHit] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_evaluated(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "n_evaluated": self.n_evaluated,
            "counts": dict(self.counts),
            "hits": [h.to_dict() for h in self.hits],
        }


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Gaussian matrix with the phases of diag(R) divided out."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]


def candidate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per candidate so serial and parallel runs agree."""
    return np.random.default_rng([int(seed), int(index)])


def random_candidate(config: SearchConfig, rng: np.random.Generator) -> GaussianRecipe:
    """Draw nu, r, Q and (per policy) L; pinned components are taken from the config."""
    n = config.n_modes
    nu = rng.uniform(*config.nu_range, size=n)
    r = rng.uniform(*config.r_range, size=n)
    q = haar_unitary(n, rng)
    l_mat = unitary_to_symplectic(haar_unitary(n, rng)) if config.L_policy is LPolicy.RANDOM else np.eye(2 * n)
    if config.fixed_nu is not None:
        nu = config.fixed_nu.copy()
    if config.fixed_r is not None:
        r = config.fixed_r.copy()
    if config.fixed_unitary is not None:
        q = config.fixed_unitary.copy()
    return GaussianRecipe(nu=nu, L=l_mat, r=r, unitary=q)


def evaluate_recipe(
    recipe: GaussianRecipe,
    partition,
    epsilon: float = DEFAULT_EPSILON,
    delta_feas: float = DEFAULT_DELTA_FEAS,
) -> tuple[CovarianceMatrix, StateVerdict]:
    gamma = CovarianceMatrix(compose_covariance(recipe), partition)
    return gamma, classify(gamma, gamma.partition, epsilon=epsilon, delta_feas=delta_feas)


def _hit_or_none(recipe, gamma, verdict, index) -> SearchHit | None:
    if verdict.state_class is not StateClass.BOUND_ENTANGLED:
        return None
    return SearchHit(recipe, gamma, verdict, verdict.ppt_min_eig, index)


def paper_example() -> SearchHit:
    """The constructed 2x2 bound entangled state, rebuilt from its recipe."""
    from .fixtures import paper_recipe

    recipe = paper_recipe()
    gamma, verdict = evaluate_recipe(recipe, (2, 2))
    hit = _hit_or_none(recipe, gamma, verdict, 0)
    if hit is None:
        # a regression, not a user error
        raise AssertionError(f"reference recipe classified as {verdict.state_class.value}")
    return hit


def _evaluate_index(config: SearchConfig, index: int) -> tuple[int, GaussianRecipe, CovarianceMatrix, StateVerdict]:
    recipe = random_candidate(config, candidate_rng(config.seed, index))
    gamma, verdict = evaluate_recipe(recipe, config.partition, config.epsilon, config.delta_feas)
    return index, recipe, gamma, verdict


def search(config: SearchConfig) -> SearchResult:
    """Evaluate ``config.max_candidates`` random recipes; PPT screening happens inside classify."""
    indices = range(config.max_candidates)
    if config.workers > 1 and config.max_candidates > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_evaluate_index, [config] * len(indices), indices, chunksize=8))
    else:
        outcomes = [_evaluate_index(config, i) for i in indices]

    counts: Counter[str] = Counter({c.value: 0 for c in StateClass})
    hits = []
    for index, recipe, gamma, verdict in outcomes:
        counts[verdict.state_class.value] += 1
        hit = _hit_or_none(recipe, gamma, verdict, index)
        if hit is not None:
            hits.append(hit)
    # stable: equal robustness keeps candidate order
    hits.sort(key=lambda h: -h.robustness)
    return SearchResult(config, hits, dict(counts))


def revalidate_hit(hit: SearchHit) -> bool:
    """PPT still passes, the certificate still verifies, and the recipe still composes to gamma."""
    from .lmi import verify_certificate
    from .separability import build_problem

    gamma = hit.gamma.matrix
    part = hit.gamma.partition
    if not ppt_check(gamma, part).ppt:
        return False
    if hit.verdict.certificate is None:
        return False
    if not verify_certificate(build_problem(gamma, part).lmi, hit.verdict.certificate).valid:
        return False
    return bool(np.max(np.abs(compose_covariance(hit.recipe) - gamma)) <= RECOMPOSE_TOL)


def write_hits(result: SearchResult, out_dir) -> list[Path]:
    """Write ``hit_XXX.cov.json`` / ``hit_XXX.recipe.json`` pairs and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for rank, hit in enumerate(result.hits):
        cov_path = out / f"hit_{rank:03d}.cov.json"
        rec_path = out / f"hit_{rank:03d}.recipe.json"
        save_covariance(hit.gamma, cov_path)
        save_recipe(hit.recipe, rec_path)
        written += [cov_path, rec_path]
    summary = out / "summary.json"
    data = result.to_dict()
    for h in data["hits"]:
        del h["recipe"], h["gamma"]
    summary.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    written.append(summary)
    return written


def _perturb_unitary(q: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    from scipy.linalg import expm

    n = q.shape[0]
    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = 0.5 * (h + h.conj().T)
    return expm(1j * sigma * h) @ q


def perturbation_sweep(
    recipe: GaussianRecipe,
    partition,
    sigmas,
    n_samples: int = 20,
    seed: int = 0,
    epsilon: float = DEFAULT_EPSILON,
) -> list[dict]:
    """Re-classify noisy copies of ``recipe`` at each noise level.

    Gaussian noise of width sigma is added to nu (clipped at 1) and r, and
    the output unitary is multiplied by exp(i sigma H) for a random
    Hermitian H.  Only class tallies are reported; no robustness radius is
    inferred.
    """
    rows = []
    for level, sigma in enumerate(sigmas):
        tally: Counter[str] = Counter()
        min_ppt = np.inf
        for k in range(n_samples):
            rng = np.random.default_rng([int(seed), level, k])
            noisy = GaussianRecipe(
                nu=np.maximum(recipe.nu + sigma * rng.standard_normal(recipe.n_modes), 1.0),
                L=recipe.L,
                r=recipe.r + sigma * rng.standard_normal(recipe.n_modes),
                unitary=_perturb_unitary(recipe.unitary, sigma, rng),
            )
            _, verdict = evaluate_recipe(noisy, partition, epsilon)
            tally[verdict.state_class.value] += 1
            min_ppt = min(min_ppt, verdict.ppt_min_eig)
        rows.append({"sigma": float(sigma), "n_samples": n_samples, "counts": dict(sorted(tally.items())), "min_ppt_eig": float(min_ppt)})
    return rows
