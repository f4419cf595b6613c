import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussent.errors import InputError, NotPositiveDefiniteError
from gaussent.gaussian import (
    CovarianceMatrix,
    ModePartition,
    embedding,
    is_physical,
    load_covariance,
    partial_transpose,
    partial_transpose_signs,
    physicality_spectrum,
    ppt_check,
    ppt_symplectic_form,
    save_covariance,
    symplectic_eigenvalues,
    symplectic_form,
)

from states import ROBUSTCOV, WERNER_WOLF, random_state, two_mode_squeezed


class TestSymplecticForm:
    def test_single_mode(self):
        np.testing.assert_array_equal(symplectic_form(1), [[0, 1], [-1, 0]])

    def test_two_modes_block_diagonal(self):
        w = np.array([[0, 1], [-1, 0]])
        expected = np.zeros((4, 4))
        expected[:2, :2] = w
        expected[2:, 2:] = w
        np.testing.assert_array_equal(symplectic_form(2), expected)

    @given(st.integers(1, 12))
    def test_antisymmetric_orthogonal(self, n):
        om = symplectic_form(n)
        np.testing.assert_array_equal(om.T, -om)
        np.testing.assert_array_equal(om @ om.T, np.eye(2 * n))

    def test_rejects_zero_modes(self):
        with pytest.raises(InputError):
            symplectic_form(0)


class TestCovarianceMatrix:
    def test_symmetrizes_small_asymmetry(self):
        m = np.eye(2)
        m[0, 1] = 1e-10
        cov = CovarianceMatrix(m)
        np.testing.assert_array_equal(cov.matrix, cov.matrix.T)

    def test_rejects_large_asymmetry(self):
        m = np.eye(2)
        m[0, 1] = 1e-6
        with pytest.raises(InputError, match="symmetric"):
            CovarianceMatrix(m)

    @pytest.mark.parametrize(
        "matrix",
        [np.eye(3), np.ones((2, 3)), np.array([[np.nan, 0], [0, 1]]), np.array([[np.inf, 0], [0, 1]]), np.zeros((0, 0))],
    )
    def test_rejects_malformed(self, matrix):
        with pytest.raises(InputError):
            CovarianceMatrix(matrix)

    def test_partition_must_cover_modes(self):
        with pytest.raises(InputError):
            CovarianceMatrix(np.eye(4), (1, 2))

    def test_json_roundtrip(self, tmp_path):
        cov = CovarianceMatrix(WERNER_WOLF, (2, 2))
        path = tmp_path / "ww.json"
        save_covariance(cov, path)
        data = json.loads(path.read_text())
        assert data["ordering"] == "interleaved"
        assert data["n_modes"] == 4
        back = load_covariance(path)
        np.testing.assert_array_equal(back.matrix, WERNER_WOLF)
        assert back.partition == ModePartition(2, 2)

    def test_json_rejects_other_ordering(self):
        with pytest.raises(InputError, match="ordering"):
            CovarianceMatrix.from_dict({"ordering": "qqpp", "matrix": np.eye(2).tolist()})

    def test_json_n_modes_consistency(self):
        with pytest.raises(InputError):
            CovarianceMatrix.from_dict({"n_modes": 2, "matrix": np.eye(2).tolist()})

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(InputError):
            load_covariance(path)


class TestModePartition:
    def test_parse_string(self):
        assert ModePartition.parse("2,3") == (2, 3)
        assert ModePartition.parse(" 1, 1 ") == (1, 1)

    @pytest.mark.parametrize("bad", ["2", "a,b", "1,2,3"])
    def test_parse_rejects(self, bad):
        with pytest.raises(InputError):
            ModePartition.parse(bad)

    def test_check_rejects_empty_side(self):
        with pytest.raises(InputError):
            ModePartition(0, 2).check(2)


class TestPhysicality:
    def test_werner_wolf_spectrum(self):
        rep = is_physical(WERNER_WOLF)
        assert rep.physical
        assert abs(rep.min_eig) <= 1e-9
        s3 = np.sqrt(3.0)
        expected = np.repeat([0.0, 3 - s3, 3.0, 3 + s3], 4)
        np.testing.assert_allclose(physicality_spectrum(WERNER_WOLF), expected, atol=1e-9)

    def test_vacuum_physical(self):
        rep = is_physical(np.eye(6))
        assert rep.physical
        assert rep.min_eig == pytest.approx(0.0, abs=1e-12)

    def test_half_identity_unphysical(self):
        rep = is_physical(0.5 * np.eye(2))
        assert not rep.physical
        assert rep.min_eig == pytest.approx(-0.5, abs=1e-12)

    def test_embedding_matches_hermitian_route(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 5))
            g = random_state(n, rng) + rng.uniform(-0.3, 0.3) * np.eye(2 * n)
            herm = np.linalg.eigvalsh(g + 1j * symplectic_form(n))[0]
            assert is_physical(g).min_eig == pytest.approx(herm, abs=1e-9)

    def test_embedding_doubles_hermitian_spectrum(self, rng):
        g = random_state(3, rng)
        om = symplectic_form(3)
        herm = np.linalg.eigvalsh(g + 1j * om)
        np.testing.assert_allclose(np.linalg.eigvalsh(embedding(g, om)), np.repeat(herm, 2), atol=1e-10)


class TestSymplecticEigenvalues:
    def test_vacuum(self):
        np.testing.assert_allclose(symplectic_eigenvalues(np.eye(6)), np.ones(3), atol=1e-12)

    def test_thermal_diagonal(self):
        g = np.diag([1.01] * 4 + [3.2] * 4)
        np.testing.assert_allclose(symplectic_eigenvalues(g), [1.01, 1.01, 3.2, 3.2], atol=1e-12)

    def test_werner_wolf_against_complex_eigensolver(self):
        om = symplectic_form(4)
        moduli = np.sort(np.abs(np.linalg.eigvals(1j * om @ WERNER_WOLF)))
        # each modulus appears twice (+nu and -nu)
        np.testing.assert_allclose(moduli[::2], moduli[1::2], atol=1e-8)
        np.testing.assert_allclose(symplectic_eigenvalues(WERNER_WOLF), moduli[::2], atol=1e-8)

    def test_rejects_singular(self):
        with pytest.raises(NotPositiveDefiniteError):
            symplectic_eigenvalues(np.diag([1.0, 0.0]))

    def test_two_routes_agree_on_physicality(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 4))
            a = rng.standard_normal((2 * n, 2 * n))
            g = a @ a.T + rng.uniform(0.05, 1.5) * np.eye(2 * n)
            phys = is_physical(g).physical
            nu_ok = bool(np.all(symplectic_eigenvalues(g) >= 1 - 1e-7))
            assert phys == nu_ok


class TestPartialTranspose:
    def test_signs(self):
        np.testing.assert_array_equal(partial_transpose_signs(ModePartition(2, 1)), [1, -1, 1, -1, 1, 1])

    def test_involution(self, rng):
        g = random_state(4, rng)
        twice = partial_transpose(partial_transpose(g, (2, 2)), (2, 2))
        np.testing.assert_array_equal(twice, g)

    def test_identity_fixed(self):
        np.testing.assert_array_equal(partial_transpose(np.eye(4), (1, 1)), np.eye(4))

    def test_werner_wolf_entry_flip(self):
        assert WERNER_WOLF[1, 7] == -1
        assert partial_transpose(WERNER_WOLF, (2, 2))[1, 7] == 1

    def test_spectrum_preserved(self, rng):
        g = random_state(3, rng)
        np.testing.assert_allclose(
            np.linalg.eigvalsh(partial_transpose(g, (1, 2))), np.linalg.eigvalsh(g), atol=1e-10
        )

    def test_ppt_form_equals_transposed_state(self, rng):
        # gamma + i*Omega_tilde is unitarily equivalent to the transposed state + i*Omega
        g = random_state(3, rng)
        part = ModePartition(1, 2)
        a = np.linalg.eigvalsh(embedding(g, ppt_symplectic_form(part)))
        b = np.linalg.eigvalsh(embedding(partial_transpose(g, part), -symplectic_form(3)))
        np.testing.assert_allclose(a, b, atol=1e-10)


class TestPpt:
    def test_robustcov_margin(self):
        rep = ppt_check(ROBUSTCOV, (2, 2))
        assert rep.ppt
        assert rep.min_eig == pytest.approx(0.0840, abs=5e-4)

    def test_werner_wolf_ppt(self):
        assert ppt_check(WERNER_WOLF, (2, 2)).ppt

    def test_two_mode_squeezed_npt(self):
        g = two_mode_squeezed(0.5)
        rep = ppt_check(g, (1, 1))
        # oracle: the partially transposed state's smallest symplectic eigenvalue is exp(-2r) < 1
        oracle = np.linalg.eigvalsh(partial_transpose(g, (1, 1)) + 1j * symplectic_form(2))[0]
        assert not rep.ppt
        assert rep.min_eig == pytest.approx(oracle, abs=1e-9)
        assert rep.min_eig == pytest.approx(np.exp(-1.0) - 1.0, abs=1e-9)

    def test_product_state_ppt(self, rng):
        g = np.zeros((4, 4))
        g[:2, :2] = random_state(1, rng)
        g[2:, 2:] = random_state(1, rng)
        assert ppt_check(g, (1, 1)).ppt

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.01, 1.5))
    def test_tmsv_always_npt(self, r):
        assert not ppt_check(two_mode_squeezed(r), (1, 1)).ppt
