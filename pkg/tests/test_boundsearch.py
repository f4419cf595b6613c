import json

import numpy as np
import pytest

from gaussent.boundsearch import (
    LPolicy,
    SearchConfig,
    candidate_rng,
    paper_example,
    perturbation_sweep,
    random_candidate,
    revalidate_hit,
    search,
    write_hits,
)
from gaussent.errors import InputError
from gaussent.fixtures import paper_recipe
from gaussent.gaussian import is_physical, ppt_check
from gaussent.separability import StateClass
from gaussent.symplectic import compose_covariance

from states import ROBUSTCOV


class TestConfig:
    def test_defaults(self):
        c = SearchConfig()
        assert c.n_modes == 4
        assert c.nu_range == (1.01, 4.0)
        assert c.r_range == (0.0, 0.3)
        assert c.partition == (2, 2)

    @pytest.mark.parametrize(
        "kwargs",
        [{"nu_range": (0.9, 2.0)}, {"r_range": (0.3, 0.1)}, {"L_policy": "SOMETIMES"}, {"max_candidates": -1}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InputError):
            SearchConfig(**kwargs)

    def test_json_roundtrip(self):
        pr = paper_recipe()
        c = SearchConfig(seed=3, L_policy="RANDOM", fixed_unitary=pr.unitary, fixed_nu=pr.nu)
        back = SearchConfig.from_dict(json.loads(json.dumps(c.to_dict())))
        assert back.to_dict() == c.to_dict()

    def test_unknown_field(self):
        with pytest.raises(InputError):
            SearchConfig.from_dict({"sead": 3})


class TestRandomCandidate:
    def test_deterministic(self):
        c = SearchConfig(L_policy=LPolicy.RANDOM)
        a = random_candidate(c, candidate_rng(42, 0))
        b = random_candidate(c, candidate_rng(42, 0))
        np.testing.assert_array_equal(a.unitary, b.unitary)
        np.testing.assert_array_equal(a.nu, b.nu)
        np.testing.assert_array_equal(a.L, b.L)

    def test_ranges_and_physicality(self):
        c = SearchConfig(nu_range=(1.5, 2.0), r_range=(0.1, 0.2))
        for i in range(50):
            rec = random_candidate(c, candidate_rng(1, i))
            assert np.all((rec.nu >= 1.5) & (rec.nu <= 2.0))
            assert np.all((rec.r >= 0.1) & (rec.r <= 0.2))
            np.testing.assert_array_equal(rec.L, np.eye(8))
            assert is_physical(compose_covariance(rec)).physical

    def test_unitarity(self):
        c = SearchConfig()
        worst = 0.0
        for i in range(1000):
            q = random_candidate(c, candidate_rng(9, i)).unitary
            worst = max(worst, np.linalg.norm(q.conj().T @ q - np.eye(4), 2))
        assert worst <= 1e-10


class TestReferenceHit:
    def test_hit(self):
        hit = paper_example()
        np.testing.assert_allclose(hit.gamma.matrix, ROBUSTCOV, atol=5e-5, rtol=0)
        assert hit.robustness == pytest.approx(0.0840, abs=5e-4)
        assert hit.verdict.state_class is StateClass.BOUND_ENTANGLED
        assert revalidate_hit(hit)


class TestSearch:
    def test_pinned_to_reference(self):
        pr = paper_recipe()
        c = SearchConfig(nu_range=(1.01, 1.01), r_range=(0.0, 0.0), fixed_nu=pr.nu, fixed_r=pr.r, fixed_unitary=pr.unitary, max_candidates=1)
        res = search(c)
        ref = paper_example()
        assert len(res.hits) == 1
        np.testing.assert_array_equal(res.hits[0].gamma.matrix, ref.gamma.matrix)
        assert res.hits[0].robustness == ref.robustness

    def test_vacuum_inputs_all_separable(self):
        res = search(SearchConfig(nu_range=(1.0, 1.0), r_range=(0.0, 0.0), max_candidates=15, seed=4))
        assert res.hits == []
        assert res.counts["SEPARABLE"] == 15

    def test_counts_and_ordering(self):
        # generic draws almost never land on bound entanglement; around the
        # reference interferometer they do
        pr = paper_recipe()
        c = SearchConfig(seed=2, max_candidates=30, r_range=(-0.3, 0.3), fixed_nu=pr.nu, fixed_unitary=pr.unitary)
        res = search(c)
        assert res.n_evaluated == 30
        assert len(res.hits) == res.counts["BOUND_ENTANGLED"] >= 2
        rob = [h.robustness for h in res.hits]
        assert rob == sorted(rob, reverse=True)
        for h in res.hits:
            assert revalidate_hit(h)
            assert ppt_check(h.gamma.matrix, (2, 2)).min_eig == h.robustness

    def test_reproducible(self):
        c = SearchConfig(seed=7, max_candidates=10)
        assert json.dumps(search(c).to_dict()) == json.dumps(search(c).to_dict())

    def test_parallel_matches_serial(self):
        serial = search(SearchConfig(seed=5, max_candidates=6))
        parallel = search(SearchConfig(seed=5, max_candidates=6, workers=2))
        assert json.dumps(serial.to_dict()["counts"]) == json.dumps(parallel.to_dict()["counts"])
        assert [h.index for h in serial.hits] == [h.index for h in parallel.hits]

    def test_write_hits(self, tmp_path):
        pr = paper_recipe()
        res = search(SearchConfig(fixed_nu=pr.nu, fixed_r=pr.r, fixed_unitary=pr.unitary, max_candidates=2))
        files = write_hits(res, tmp_path / "out")
        names = sorted(p.name for p in files)
        assert names == ["hit_000.cov.json", "hit_000.recipe.json", "hit_001.cov.json", "hit_001.recipe.json", "summary.json"]
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["counts"]["BOUND_ENTANGLED"] == 2


def test_perturbation_sweep_runs():
    rows = perturbation_sweep(paper_recipe(), (2, 2), [0.0, 1e-3], n_samples=3, seed=1)
    assert [r["sigma"] for r in rows] == [0.0, 1e-3]
    assert rows[0]["counts"] == {"BOUND_ENTANGLED": 3}
    assert sum(rows[1]["counts"].values()) == 3
