import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnaug.dataset import MISSING, Completion
from bnaug.learner import ApproxConfig, Solution, learn_approx, learn_exact, total_score, verify_t_local
from bnaug.scoring import ScoringConfig, build_candidate_list
from bnaug.structopt import exact_dag, filter_candidates
from conftest import make_dataset, random_instance
from oracles import brute_force_joint


class TestConfig:
    @pytest.mark.parametrize("kw", [{"t": 0}, {"restarts": 0}, {"max_iters": 0}, {"init": "median"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ApproxConfig(**kw)


class TestExact:
    def test_complete_data(self, rng):
        d = make_dataset(rng.integers(0, 2, size=(12, 3)))
        sol = learn_exact(d)
        assert sol.z.values == ()
        assert (sol.iterations, sol.converged) == (1, True)
        assert (sol.dag, sol.total) == exact_dag(filter_candidates(build_candidate_list(d, ScoringConfig()), ()))

    def test_biased_example(self):
        cells = [[0, 0], [1, 1], [0, 0], [1, 1], [0, 0], [1, MISSING]]
        d = make_dataset(cells)
        sol = learn_exact(d)
        assert sol.z.values == (1,)
        best, _, z = brute_force_joint(np.array(cells), [2, 2], d.missing_index)
        assert z == (1,)
        assert sol.total == pytest.approx(best, abs=1e-9)

    def test_total_rescores(self, rng):
        for _ in range(10):
            d = random_instance(rng, 3, 10, 3, cards=[2, 3, 2])
            sol = learn_exact(d)
            assert abs(total_score(d, sol.dag, sol.z, ScoringConfig()) - sol.total) <= 1e-9


class TestApprox:
    def test_complete_data_equals_exact(self, rng):
        d = make_dataset(rng.integers(0, 2, size=(12, 3)))
        sol = learn_approx(d)
        assert sol.iterations == 1 and sol.converged
        ex = learn_exact(d)
        assert (sol.dag, sol.z, sol.total) == (ex.dag, ex.z, ex.total)

    def test_full_radius_equals_exact(self, rng):
        for _ in range(10):
            d = random_instance(rng, 3, 8, 3)
            sol = learn_approx(d, acfg=ApproxConfig(t=3))
            ex = learn_exact(d)
            assert sol.total == pytest.approx(ex.total, abs=1e-9)

    def test_three_binary_four_missing(self, rng):
        d = random_instance(rng, 3, 10, 4)
        sol = learn_approx(d, acfg=ApproxConfig(t=1, init="mode"))
        assert sol.converged
        assert verify_t_local(d, sol, ScoringConfig(), 1)
        assert learn_exact(d).total >= sol.total - 1e-9

    def test_provided_init(self, rng):
        d = random_instance(rng, 3, 10, 3)
        z0 = d.completion([1, 1, 1])
        sol = learn_approx(d, acfg=ApproxConfig(init=z0, max_iters=1))
        assert sol.iterations == 1
        with pytest.raises(ValueError):
            learn_approx(d, acfg=ApproxConfig(init=Completion((0,), (2,))))

    def test_max_iters_exhaustion(self):
        # starts far from the optimum so one step cannot converge
        cells = [[0, 0]] * 6 + [[1, 1]] * 6 + [[MISSING, 0], [MISSING, 0], [MISSING, 1]]
        d = make_dataset(cells)
        sol = learn_approx(d, acfg=ApproxConfig(init=d.completion([1, 1, 0]), max_iters=1))
        assert not sol.converged
        assert sol.iterations == 1

    def test_restarts_never_worse(self, rng):
        for _ in range(5):
            d = random_instance(rng, 3, 10, 5)
            one = learn_approx(d, acfg=ApproxConfig(init="random", seed=3))
            many = learn_approx(d, acfg=ApproxConfig(init="random", restarts=4, seed=3))
            assert many.total >= one.total - 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 6), st.sampled_from(["mode", "random"]))
    def test_local_optimality_properties(self, seed, c, init):
        rng = np.random.default_rng(seed)
        d = random_instance(rng, 3, int(rng.integers(4, 12)), c)
        cfg = ScoringConfig()
        sol = learn_approx(d, cfg, ApproxConfig(t=1, init=init, seed=seed % 1000))
        assert all(b >= a - 1e-12 for a, b in zip(sol.trace, sol.trace[1:]))
        assert abs(total_score(d, sol.dag, sol.z, cfg) - sol.total) <= 1e-9
        if sol.converged:
            assert verify_t_local(d, sol, cfg, 1)
        assert learn_exact(d, cfg).total >= sol.total - 1e-9

    def test_deterministic(self, rng):
        d = random_instance(rng, 4, 15, 5)
        acfg = ApproxConfig(init="random", restarts=3, seed=7)
        a, b = learn_approx(d, acfg=acfg), learn_approx(d, acfg=acfg)
        assert a == b and a.trace == b.trace


class TestVerify:
    def test_perturbed_fails(self, rng):
        # a non-optimal completion paired with its own best DAG is not 1-local
        cells = [[0, 0]] * 5 + [[1, 1]] * 5 + [[1, MISSING]]
        d = make_dataset(cells)
        cfg = ScoringConfig()
        cands = build_candidate_list(d, cfg)
        z = d.completion([0])
        dag, total = exact_dag(filter_candidates(cands, z))
        bad = Solution(dag, z, total, 1, True)
        assert not verify_t_local(d, bad, cfg, 1)
        good = learn_exact(d, cfg)
        assert verify_t_local(d, good, cfg, 1)

    def test_exact_is_local_for_every_t(self, rng):
        d = random_instance(rng, 3, 8, 3)
        sol = learn_exact(d)
        for t in (1, 2, 3):
            assert verify_t_local(d, sol, ScoringConfig(), t)
