import json

import numpy as np
import pytest

from gaussent.errors import InputError, UnphysicalStateError
from gaussent.gaussian import ppt_check
from gaussent.lmi import eval_constraints, verify_certificate
from gaussent.separability import (
    StateClass,
    build_problem,
    classify,
    pack_symmetric,
    symmetric_basis,
    unpack_symmetric,
    validate_witness,
)

from states import ROBUSTCOV, WERNER_WOLF, random_state, random_symplectic, two_mode_squeezed


def direct_sum(a, b):
    out = np.zeros((a.shape[0] + b.shape[0],) * 2)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0] :, a.shape[0] :] = b
    return out


def planted_separable(rng, m, n):
    ga, gb = random_state(m, rng), random_state(n, rng)
    v = rng.standard_normal((2 * (m + n), 2 * (m + n)))
    noise = rng.uniform(0.01, 0.5) * v @ v.T / (2 * (m + n))
    return direct_sum(ga, gb) + noise


class TestParametrization:
    def test_basis_order(self):
        assert symmetric_basis(2) == [(0, 0), (0, 1), (1, 1)]

    def test_pack_unpack(self, rng):
        a = rng.standard_normal((4, 4))
        a = a + a.T
        np.testing.assert_array_equal(unpack_symmetric(pack_symmetric(a), 4), a)


class TestBuildProblem:
    @pytest.mark.parametrize("part, d, sizes", [((2, 2), 20, [8, 8, 8]), ((1, 1), 6, [4, 4, 4]), ((1, 2), 13, [6, 4, 8])])
    def test_counts(self, part, d, sizes):
        n = sum(part)
        sep = build_problem(np.eye(2 * n), part)
        assert sep.lmi.dim_vars == d
        assert [b.size for b in sep.lmi.blocks] == sizes

    def test_block_one_at_marginals(self, rng):
        g = random_state(4, rng)
        sep = build_problem(g, (2, 2))
        x = sep.pack(g[:4, :4], g[4:, 4:])
        coupling = g.copy()
        coupling[:4, :4] = 0
        coupling[4:, 4:] = 0
        blocks = sep.lmi.evaluate(x)
        np.testing.assert_allclose(blocks[0], coupling, atol=1e-14)
        assert eval_constraints(sep.lmi, x)[0] == pytest.approx(np.linalg.eigvalsh(coupling)[0], abs=1e-12)

    def test_blocks_symmetric_everywhere(self, rng):
        sep = build_problem(random_state(3, rng), (1, 2))
        for g in sep.lmi.evaluate(rng.standard_normal(sep.lmi.dim_vars)):
            np.testing.assert_array_equal(g, g.T)

    def test_unpack_inverts_pack(self, rng):
        sep = build_problem(np.eye(6), (1, 2))
        ga, gb = random_state(1, rng), random_state(2, rng)
        a, b = sep.unpack(sep.pack(ga, gb))
        np.testing.assert_allclose(a, ga)
        np.testing.assert_allclose(b, gb)

    def test_rejects_unphysical(self):
        with pytest.raises(UnphysicalStateError):
            build_problem(0.5 * np.eye(4), (1, 1))


class TestValidateWitness:
    def test_product_state(self, rng):
        ga, gb = random_state(2, rng), random_state(1, rng)
        assert validate_witness(direct_sum(ga, gb), (2, 1), (ga, gb))

    def test_oversized_witness(self, rng):
        ga, gb = random_state(1, rng), random_state(1, rng)
        assert not validate_witness(direct_sum(ga, gb), (1, 1), (2 * ga, gb))

    def test_unphysical_witness(self):
        assert not validate_witness(np.eye(4), (1, 1), (0.5 * np.eye(2), np.eye(2)))

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            validate_witness(np.eye(4), (1, 1), (np.eye(4), np.eye(2)))


class TestClassify:
    def test_werner_wolf(self):
        v = classify(WERNER_WOLF, (2, 2), epsilon=1e-8)
        assert v.state_class is StateClass.BOUND_ENTANGLED
        assert v.ppt_min_eig >= -1e-9
        assert verify_certificate(build_problem(WERNER_WOLF, (2, 2)).lmi, v.certificate).valid
        assert v.lmi_margin <= -1e-8

    def test_printed_robustcov(self):
        v = classify(ROBUSTCOV, (2, 2))
        assert v.state_class is StateClass.BOUND_ENTANGLED
        assert v.ppt_min_eig == pytest.approx(0.0840, abs=5e-4)

    def test_product_state(self, rng):
        ga, gb = random_state(2, rng), random_state(2, rng)
        v = classify(direct_sum(ga, gb), (2, 2))
        assert v.state_class is StateClass.SEPARABLE
        np.testing.assert_allclose(v.witness[0], ga, atol=1e-9)
        np.testing.assert_allclose(v.witness[1], gb, atol=1e-9)

    def test_vacuum(self):
        assert classify(np.eye(8), (2, 2)).state_class is StateClass.SEPARABLE

    def test_two_mode_squeezed(self):
        v = classify(two_mode_squeezed(0.5), (1, 1))
        assert v.state_class is StateClass.NPT_ENTANGLED
        assert v.ppt_min_eig < -1e-9

    def test_unphysical(self):
        v = classify(0.5 * np.eye(4), (1, 1))
        assert v.state_class is StateClass.UNPHYSICAL
        assert v.physical_min_eig == pytest.approx(-0.5)

    def test_planted_separable(self, rng):
        for _ in range(20):
            m, n = (int(k) for k in rng.integers(1, 3, size=2))
            g = planted_separable(rng, m, n)
            v = classify(g, (m, n))
            assert v.state_class is StateClass.SEPARABLE
            assert validate_witness(g, (m, n), v.witness)

    def test_agrees_with_ppt_on_one_plus_one(self, rng):
        marginal = 0
        for _ in range(40):
            g = random_state(2, rng, rmax=0.6)
            v = classify(g, (1, 1))
            if v.state_class is StateClass.MARGINAL:
                marginal += 1
                continue
            assert (v.state_class is StateClass.SEPARABLE) == ppt_check(g, (1, 1)).ppt
        assert marginal <= 2

    def test_local_symplectic_invariance(self, rng):
        states = [WERNER_WOLF, ROBUSTCOV] + [random_state(4, rng, rmax=0.3) for _ in range(4)]
        for g in states:
            local = direct_sum(random_symplectic(2, rng, 0.5), random_symplectic(2, rng, 0.5))
            a = classify(g, (2, 2))
            b = classify(local @ g @ local.T, (2, 2))
            if StateClass.MARGINAL in (a.state_class, b.state_class):
                continue
            assert a.state_class is b.state_class

    def test_verdict_json(self):
        data = json.loads(json.dumps(classify(WERNER_WOLF, (2, 2)).to_dict()))
        assert data["class"] == "BOUND_ENTANGLED"
        assert {"ppt_min_eig", "lmi_margin", "certificate"} <= set(data)
        assert "witness" not in data

    def test_separable_json_has_witness(self, rng):
        g = planted_separable(rng, 1, 1)
        data = json.loads(json.dumps(classify(g, (1, 1)).to_dict()))
        assert data["class"] == "SEPARABLE"
        assert np.array(data["witness"]["gamma_A"]).shape == (2, 2)
