import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnaug.dataset import MISSING
from bnaug.errors import BudgetExceeded
from bnaug.scoring import ScoringConfig, build_candidate_list, parent_sets
from bnaug.structopt import (
    Dag,
    ScoreTable,
    best_totals,
    completion_rows,
    exact_dag,
    exact_joint,
    filter_candidates,
    topological_order,
)
from conftest import make_dataset, random_instance
from oracles import all_dags, brute_force_joint, brute_force_table, is_acyclic


def random_table(rng, m, k=None, density=1.0):
    """Random table over every parent set of size <= k (empty set always kept)."""
    k = m - 1 if k is None else k
    entries = []
    for i in range(m):
        child = [((), float(-rng.uniform(1, 20)))]
        for ps in parent_sets(m, i, k):
            if ps and rng.random() < density:
                child.append((ps, float(-rng.uniform(1, 20))))
        entries.append(child)
    return entries


class TestDagTypes:
    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            Dag(((1,), (0,)))

    def test_order_and_arcs(self):
        d = Dag(((), (0,), (0, 1)))
        assert d.order == (0, 1, 2)
        assert d.arcs == [(0, 1), (0, 2), (1, 2)]

    def test_topological_order_cycle(self):
        assert topological_order([(2,), (0,), (1,)]) is None

    def test_table_validation(self):
        with pytest.raises(ValueError):
            ScoreTable(((),))
        with pytest.raises(ValueError):
            ScoreTable(((((0,), -1.0),),))
        with pytest.raises(ValueError):
            ScoreTable(((((3,), -1.0),),))

    def test_dag_count_oracle(self):
        assert sum(1 for _ in all_dags(3)) == 25
        assert sum(1 for _ in all_dags(4)) == 543


class TestExactDag:
    def test_single_variable(self):
        dag, total = exact_dag(ScoreTable(((((), -3.0),),)))
        assert dag.parents == ((),)
        assert total == -3.0

    def test_dominant_entry(self):
        table = ScoreTable(((((), -5.0), ((1,), -1.0)), (((), -5.0), ((0,), -5.0))))
        dag, total = exact_dag(table)
        assert dag.parents == ((1,), ())
        assert dag.arcs == [(1, 0)]
        assert total == -6.0

    def test_tie_prefers_smaller_parent_set(self):
        table = ScoreTable(((((), -2.0), ((1,), -2.0)), (((), -1.0),)))
        dag, _ = exact_dag(table)
        assert dag.parents[0] == ()

    def test_tie_lexicographic(self):
        table = ScoreTable(((((2,), -1.0), ((1,), -1.0)), (((), -1.0),), (((), -1.0),)))
        dag, _ = exact_dag(table)
        assert dag.parents[0] == (1,)

    def test_cap(self):
        table = ScoreTable(tuple((((), -1.0),) for _ in range(4)))
        with pytest.raises(BudgetExceeded):
            exact_dag(table, max_vars=3)

    def test_three_variables_all_25(self, rng):
        for _ in range(30):
            entries = random_table(rng, 3)
            _, total = exact_dag(ScoreTable(entries))
            assert abs(total - brute_force_table(entries)) <= 1e-9

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.floats(0.0, 1.0))
    def test_matches_exhaustive(self, seed, m, density):
        rng = np.random.default_rng(seed)
        entries = random_table(rng, m, density=density)
        dag, total = exact_dag(ScoreTable(entries))
        assert abs(total - brute_force_table(entries)) <= 1e-9
        assert is_acyclic(dag.parents)
        for i, ps in enumerate(dag.parents):
            assert ps in [p for p, _ in entries[i]]
        chosen = math.fsum(dict(entries[i])[ps] for i, ps in enumerate(dag.parents))
        assert chosen == total

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4))
    def test_monotone_in_entries(self, seed, m):
        rng = np.random.default_rng(seed)
        entries = random_table(rng, m, density=0.6)
        _, before = exact_dag(ScoreTable(entries))
        i = int(rng.integers(m))
        j, s = entries[i][int(rng.integers(len(entries[i])))]
        entries[i] = [(p, v if p != j else v + float(rng.uniform(0.1, 5))) for p, v in entries[i]]
        _, after = exact_dag(ScoreTable(entries))
        assert after >= before - 1e-12


class TestFilter:
    def test_complete_identity(self, rng):
        d = make_dataset(rng.integers(0, 2, size=(8, 3)))
        cands = build_candidate_list(d, ScoringConfig(k=2))
        table = filter_candidates(cands, ())
        for i in range(3):
            assert sorted(table.entries[i]) == sorted((c.parents, c.log_score) for c in cands.for_child(i))

    def test_drops_other_value(self):
        d = make_dataset([[MISSING, 0], [1, 1], [0, 0]])
        cands = build_candidate_list(d, ScoringConfig(k=1))
        table = filter_candidates(cands, (0,))
        kept = {(c.child, c.parents): c.log_score for c in cands if c.family_completion in ((), (0,))}
        for i in range(2):
            assert dict(table.entries[i]) == {p: kept[(i, p)] for p, _ in table.entries[i]}

    def test_counts(self, rng):
        d = random_instance(rng, 4, 10, 4, cards=[2, 3, 2, 2])
        cands = build_candidate_list(d, ScoringConfig(k=2))
        z = [int(rng.integers(r)) for r in d.missing_radices]
        table = filter_candidates(cands, z)
        for i in range(4):
            assert len(table.entries[i]) == 1 + 3 + 3

    def test_missing_entry_raises(self, rng):
        d = random_instance(rng, 3, 6, 2)
        cands = build_candidate_list(d, ScoringConfig(k=2), completions=np.zeros((1, 2), dtype=int))
        with pytest.raises(ValueError):
            filter_candidates(cands, (1, 1))

    def test_wrong_length(self, rng):
        d = random_instance(rng, 3, 6, 2)
        with pytest.raises(ValueError):
            filter_candidates(build_candidate_list(d, ScoringConfig()), (0,))


class TestBatched:
    def test_completion_rows(self):
        rows = completion_rows((2, 3), 0, 6)
        assert [tuple(r) for r in rows.tolist()] == list(itertools.product(range(2), range(3)))

    def test_best_totals_match_scalar(self, rng):
        for _ in range(5):
            d = random_instance(rng, 4, 12, 3, cards=[2, 3, 2, 2])
            cands = build_candidate_list(d, ScoringConfig(k=2))
            rows = completion_rows(d.missing_radices, 0, d.completion_space_size())
            batch = best_totals(cands, rows)
            for row, v in zip(rows.tolist(), batch):
                assert v == pytest.approx(exact_dag(filter_candidates(cands, row))[1], abs=1e-9)


class TestExactJoint:
    def test_complete_reduces(self, rng):
        d = make_dataset(rng.integers(0, 2, size=(10, 3)))
        cands = build_candidate_list(d, ScoringConfig())
        dag, z, total = exact_joint(d, cands, ScoringConfig())
        assert z.values == ()
        assert (dag, total) == exact_dag(filter_candidates(cands, ()))

    def test_two_binary_one_missing(self):
        cells = [[0, 0], [1, 1], [1, MISSING], [0, 1]]
        d = make_dataset(cells)
        dag, z, total = exact_joint(d, None, ScoringConfig())
        want, _, _ = brute_force_joint(np.array(cells), [2, 2], d.missing_index)
        assert abs(total - want) <= 1e-9

    def test_three_binary_three_missing(self, rng):
        for _ in range(10):
            d = random_instance(rng, 3, 8, 3)
            dag, z, total = exact_joint(d, None, ScoringConfig())
            want, _, _ = brute_force_joint(d.cells, [2, 2, 2], d.missing_index)
            assert abs(total - want) <= 1e-9

    def test_ties_pick_smallest_completion(self):
        # the two missing cells are symmetric, so both completions tie
        d = make_dataset([[MISSING], [MISSING], [0], [1]])
        _, z, _ = exact_joint(d, None, ScoringConfig())
        assert z.values == (0, 0)

    def test_budget(self, rng):
        d = random_instance(rng, 3, 10, 6)
        with pytest.raises(BudgetExceeded):
            exact_joint(d, None, ScoringConfig(), budget=32)

    def test_batches_agree(self, rng, monkeypatch):
        import bnaug.structopt as so

        d = random_instance(rng, 3, 10, 5)
        ref = exact_joint(d, None, ScoringConfig())
        monkeypatch.setattr(so, "_BATCH_CELLS", 1)
        assert exact_joint(d, None, ScoringConfig()) == ref
