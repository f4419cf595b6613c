"""Reference states and circuits shipped with the package.

``werner_wolf.json``
    The 2x2-mode boundary state with a PPT but no separable decomposition.
``robustcov.json``
    The constructed bound entangled state, as printed (four decimals).
``paper_recipe.json``
    The thermal/squeeze/interferometer parameters that produce it.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .circuit import BeamSplitterOp
from .gaussian import CovarianceMatrix
from .symplectic import GaussianRecipe

_S = np.sqrt(2.0) / 2.0

# output interferometer of the constructed state, acting on mode amplitudes
REFERENCE_UNITARY = np.array(
    [
        [_S, _S / 2, -_S / 2, 0.5],
        [0.0, _S, _S, 0.0],
        [0.0, -0.5, 0.5, _S],
        [-_S, _S / 2, -_S / 2, 0.5],
    ]
)

# three balanced splitters, applied B1 first: REFERENCE_UNITARY = B3 @ B2 @ B1
REFERENCE_SPLITTERS = (
    BeamSplitterOp(1, 2, np.pi / 4),
    BeamSplitterOp(2, 3, np.pi / 4),
    BeamSplitterOp(0, 3, np.pi / 4),
)


def fixture_path(name: str):
    return resources.files("gaussent") / "data" / name


def _load(name: str) -> dict:
    return json.loads(fixture_path(name).read_text(encoding="utf-8"))


def werner_wolf() -> CovarianceMatrix:
    return CovarianceMatrix.from_dict(_load("werner_wolf.json"))


def robustcov() -> CovarianceMatrix:
    return CovarianceMatrix.from_dict(_load("robustcov.json"))


def paper_recipe() -> GaussianRecipe:
    return GaussianRecipe.from_dict(_load("paper_recipe.json"))


def reference_splitter_matrices(n_modes: int = 4) -> list[np.ndarray]:
    """[B1, B2, B3] as 4x4 mode unitaries."""
    return [op.matrix(n_modes).real for op in REFERENCE_SPLITTERS]
