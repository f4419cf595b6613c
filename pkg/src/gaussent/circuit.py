"""Beam-splitter networks and preparation circuits for Gaussian states.

A beam splitter on modes (i, j) with angle theta and phase phi acts on the
mode amplitudes by the 2x2 block

    [[exp(i*phi) cos(theta),  sin(theta)],
     [-exp(i*phi) sin(theta), cos(theta)]],

so phi = 0, theta = pi/4 is a balanced (50:50) splitter.  A network applies
its ops in list order and then per-mode output phases:

    U = diag(exp(i*phases)) @ T_last @ ... @ T_first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, NotUnitaryError
from .gaussian import as_covariance
from .symplectic import GaussianRecipe, symplectic_to_unitary

UNITARY_TOL = 1e-10
MATCH_TOL = 1e-10
# entries this small are treated as already eliminated
PRUNE_TOL = 1e-14


@dataclass(frozen=True)
class BeamSplitterOp:
    mode_i: int
    mode_j: int
    angle: float
    phase: float = 0.0

    def __post_init__(self):
        if not 0 <= self.mode_i < self.mode_j:
            raise InputError(f"beam splitter needs 0 <= i < j, got ({self.mode_i}, {self.mode_j})")

    @property
    def is_balanced(self) -> bool:
        return bool(np.isclose(abs(np.cos(self.angle)), np.sqrt(0.5), atol=1e-12))

    def block(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        e = np.exp(1j * self.phase)
        return np.array([[e * c, s], [-e * s, c]])

    def matrix(self, n_modes: int) -> np.ndarray:
        """N x N unitary acting on the mode amplitudes."""
        if self.mode_j >= n_modes:
            raise InputError(f"op on modes ({self.mode_i}, {self.mode_j}) does not fit {n_modes} modes")
        u = np.eye(n_modes, dtype=complex)
        idx = np.ix_([self.mode_i, self.mode_j], [self.mode_i, self.mode_j])
        u[idx] = self.block()
        return u

    def to_dict(self) -> dict:
        return {"i": self.mode_i, "j": self.mode_j, "angle": self.angle, "phase": self.phase}

    @classmethod
    def from_dict(cls, data: dict) -> BeamSplitterOp:
        try:
            return cls(int(data["i"]), int(data["j"]), float(data["angle"]), float(data.get("phase", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed beam splitter entry {data!r}") from exc


def network_unitary(ops, phases, n_modes: int) -> np.ndarray:
    u = np.eye(n_modes, dtype=complex)
    for op in ops:
        u = op.matrix(n_modes) @ u
    return np.exp(1j * np.asarray(phases, dtype=float))[:, None] * u


def synthesize_passive(q) -> tuple[list[BeamSplitterOp], np.ndarray]:
    """Triangular decomposition of a unitary into beam splitters plus output phases.

    Rows are cleared from the bottom up: in row k every entry left of the
    diagonal is rotated into column k by a splitter on modes (i, k).  Real
    input gives phase-free splitters (signed angles), so the only phases left
    are the output phases in {0, pi}.
    """
    q = np.asarray(q, dtype=complex)
    n = q.shape[0]
    if q.ndim != 2 or q.shape != (n, n):
        raise InputError(f"unitary must be square, got shape {q.shape}")
    if np.linalg.norm(q.conj().T @ q - np.eye(n), 2) > UNITARY_TOL:
        raise NotUnitaryError("matrix is not unitary")
    real_input = np.max(np.abs(q.imag)) <= 1e-12
    w = q.real.astype(complex) if real_input else q.copy()

    ops: list[BeamSplitterOp] = []
    for k in range(n - 1, 0, -1):
        for i in range(k):
            a, b = w[k, i], w[k, k]
            if abs(a) <= PRUNE_TOL:
                continue
            if real_input:
                theta, phi = np.arctan2(-a.real, b.real), 0.0
            else:
                phi = float(np.angle(a) - np.angle(b)) if abs(b) > PRUNE_TOL else 0.0
                phi = float(np.angle(np.exp(1j * phi)))
                theta = np.arctan2(-abs(a), abs(b))
            op = BeamSplitterOp(i, k, float(theta), phi)
            # W <- W T^dagger zeroes W[k, i]; hence Q = D T_m ... T_1
            w = w @ op.matrix(n).conj().T
            ops.append(op)
    phases = np.angle(np.diag(w))
    if real_input:
        phases = np.where(np.abs(phases) > np.pi / 2, np.pi, 0.0)
    return ops, phases


def verify_network(ops, phases, q_target) -> tuple[bool, float]:
    """Compare the network's unitary with ``q_target`` (max-abs residual)."""
    q_target = np.asarray(q_target, dtype=complex)
    if q_target.ndim != 2 or q_target.shape[0] != q_target.shape[1]:
        raise InputError(f"target must be square, got shape {q_target.shape}")
    n = q_target.shape[0]
    if len(phases) != n:
        raise InputError(f"{len(phases)} phases for {n} modes")
    residual = float(np.max(np.abs(network_unitary(ops, phases, n) - q_target)))
    return residual <= MATCH_TOL, residual


def _mode_rotation(z: complex, n_modes: int, mode: int) -> np.ndarray:
    """Quadrature action of a ~ z a on one mode (q' = Re z q + Im z p, p' = -Im z q + Re z p)."""
    m = np.eye(2 * n_modes)
    sl = slice(2 * mode, 2 * mode + 2)
    m[sl, sl] = [[z.real, z.imag], [-z.imag, z.real]]
    return m


def beam_splitter_symplectic(op: BeamSplitterOp, n_modes: int) -> np.ndarray:
    """Interleaved quadrature matrix of one beam splitter, built from its angle and phase."""
    m = np.eye(2 * n_modes)
    blk = op.block()
    for a, ma in enumerate((op.mode_i, op.mode_j)):
        for b, mb in enumerate((op.mode_i, op.mode_j)):
            z = blk[a, b]
            m[2 * ma : 2 * ma + 2, 2 * mb : 2 * mb + 2] = [[z.real, z.imag], [-z.imag, z.real]]
    return m


def layer_symplectic(ops, phases, n_modes: int) -> np.ndarray:
    m = np.eye(2 * n_modes)
    for op in ops:
        m = beam_splitter_symplectic(op, n_modes) @ m
    for mode, phi in enumerate(phases):
        if phi:
            m = _mode_rotation(np.exp(1j * phi), n_modes, mode) @ m
    return m


@dataclass
class CircuitDescription:
    """Thermal inputs, a passive layer L, single-mode squeezers, a passive layer K."""

    n_modes: int
    thermal_inputs: np.ndarray
    squeezers: list[tuple[int, float]]
    pre_layer: list[BeamSplitterOp] = field(default_factory=list)
    post_layer: list[BeamSplitterOp] = field(default_factory=list)
    phases: np.ndarray | None = None
    pre_phases: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.n_modes)
        if n < 1:
            raise InputError("circuit needs at least one mode")
        self.thermal_inputs = np.asarray(self.thermal_inputs, dtype=float)
        if self.thermal_inputs.shape != (n,):
            raise InputError(f"expected {n} thermal inputs, got {self.thermal_inputs.shape}")
        if np.any(self.thermal_inputs < 1.0) or not np.all(np.isfinite(self.thermal_inputs)):
            raise InputError("thermal inputs must be finite and >= 1")
        self.phases = np.zeros(n) if self.phases is None else np.asarray(self.phases, dtype=float)
        self.pre_phases = np.zeros(n) if self.pre_phases is None else np.asarray(self.pre_phases, dtype=float)
        if self.phases.shape != (n,) or self.pre_phases.shape != (n,):
            raise InputError("phase lists must have one entry per mode")
        for mode, r in self.squeezers:
            if not 0 <= mode < n or not np.isfinite(r):
                raise InputError(f"invalid squeezer ({mode}, {r})")
        for op in [*self.pre_layer, *self.post_layer]:
            if op.mode_j >= n:
                raise InputError(f"op on modes ({op.mode_i}, {op.mode_j}) does not fit {n} modes")

    @property
    def beam_splitter_count(self) -> int:
        return len(self.pre_layer) + len(self.post_layer)

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "thermal_inputs": self.thermal_inputs.tolist(),
            "pre_layer": [op.to_dict() for op in self.pre_layer],
            "pre_phases": self.pre_phases.tolist(),
            "squeezers": [{"mode": m, "r": r} for m, r in self.squeezers],
            "post_layer": [op.to_dict() for op in self.post_layer],
            "phases": self.phases.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> CircuitDescription:
        try:
            return cls(
                n_modes=int(data["n_modes"]),
                thermal_inputs=data["thermal_inputs"],
                squeezers=[(int(s["mode"]), float(s["r"])) for s in data.get("squeezers", [])],
                pre_layer=[BeamSplitterOp.from_dict(o) for o in data.get("pre_layer", [])],
                post_layer=[BeamSplitterOp.from_dict(o) for o in data.get("post_layer", [])],
                phases=data.get("phases"),
                pre_phases=data.get("pre_phases"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed circuit JSON ({exc})") from exc


def load_circuit(path) -> CircuitDescription:
    with open(path, encoding="utf-8") as fh:
        try:
            return CircuitDescription.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc


def save_circuit(circuit: CircuitDescription, path) -> None:
    Path(path).write_text(json.dumps(circuit.to_dict(), indent=2) + "\n", encoding="utf-8")


def synthesize_circuit(recipe: GaussianRecipe) -> CircuitDescription:
    """Turn a recipe into thermal inputs, beam splitters and squeezers."""
    n = recipe.n_modes
    pre_ops, pre_phases = synthesize_passive(symplectic_to_unitary(recipe.L))
    post_ops, post_phases = synthesize_passive(recipe.unitary)
    squeezers = [(k, float(r)) for k, r in enumerate(recipe.r) if r != 0.0]
    return CircuitDescription(
        n_modes=n,
        thermal_inputs=recipe.nu.copy(),
        squeezers=squeezers,
        pre_layer=pre_ops,
        post_layer=post_ops,
        phases=post_phases,
        pre_phases=pre_phases,
    )


def replay_circuit(circuit: CircuitDescription) -> np.ndarray:
    """Propagate the thermal inputs through the circuit, one element at a time."""
    n = circuit.n_modes
    gamma = np.diag(np.repeat(circuit.thermal_inputs, 2))
    m = layer_symplectic(circuit.pre_layer, circuit.pre_phases, n)
    for mode, r in circuit.squeezers:
        sq = np.eye(2 * n)
        sq[2 * mode, 2 * mode] = np.exp(-r)
        sq[2 * mode + 1, 2 * mode + 1] = np.exp(r)
        m = sq @ m
    m = layer_symplectic(circuit.post_layer, circuit.phases, n) @ m
    gamma = m @ gamma @ m.T
    return as_covariance(0.5 * (gamma + gamma.T))
