import itertools
import json

import numpy as np
import pytest

from uncoopsched.assignment import (AssignmentProblem, AssignmentSizeError, SetCoverInstance,
                                    UncoopUser, dumps_problem, problem_from_dict, reduce_set_cover,
                                    set_cover_exists, set_cover_from_dict, set_cover_to_dict,
                                    solve_exact, solve_greedy)
from uncoopsched.core import NetworkConfig, NetworkTopology
from uncoopsched.stability import check_sufficient

YES = SetCoverInstance(("e1", "e2"), (frozenset({"e1"}), frozenset({"e2"}), frozenset({"e1", "e2"})), 1)
NO = SetCoverInstance(("e1", "e2"), (frozenset({"e1"}), frozenset({"e2"})), 1)


def random_instance(rng):
    n_el = int(rng.integers(1, 7))
    n_sub = int(rng.integers(1, 7))
    elements = tuple(f"e{i}" for i in range(n_el))
    subsets = [set(e for e in elements if rng.random() < 0.4) for _ in range(n_sub)]
    for e in elements:
        if not any(e in s for s in subsets):
            subsets[int(rng.integers(n_sub))].add(e)
    return SetCoverInstance(elements, tuple(frozenset(s) for s in subsets), int(rng.integers(0, n_sub + 1)))


def brute_force(problem):
    m = problem.num_channels
    for placement in itertools.permutations(range(m), len(problem.users)):
        if all(ch in u.candidates for ch, u in zip(placement, problem.users)):
            if check_sufficient(problem.config_for(placement)).feasible:
                return True
    return False


class TestReduction:
    def test_shape(self):
        p = reduce_set_cover(YES)
        assert p.base.adaptive_rates == (0.5, 0.5)
        assert p.base.topology.access_sets == ((0, 2), (1, 2))
        assert sorted(u.rate for u in p.users) == [0.0, 1.0, 1.0]
        assert all(u.candidates == (0, 1, 2) for u in p.users)

    def test_yes_instance(self):
        res = solve_exact(reduce_set_cover(YES))
        assert res.feasible
        silent = [k for k, u in enumerate(reduce_set_cover(YES).users) if u.rate == 0.0][0]
        assert res.placement[silent] == 2

    def test_k_zero(self):
        inst = SetCoverInstance(YES.elements, YES.subsets, 0)
        assert not solve_exact(reduce_set_cover(inst)).feasible

    def test_k_full(self):
        inst = SetCoverInstance(YES.elements, YES.subsets, 3)
        assert solve_exact(reduce_set_cover(inst)).feasible

    def test_no_instance(self):
        assert not set_cover_exists(NO)
        assert not solve_exact(reduce_set_cover(NO)).feasible

    def test_rejects_large_k(self):
        with pytest.raises(ValueError):
            reduce_set_cover(SetCoverInstance(YES.elements, YES.subsets, 4))

    def test_random_agreement(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            inst = random_instance(rng)
            assert solve_exact(reduce_set_cover(inst)).feasible == set_cover_exists(inst)


class TestExact:
    def test_zero_demand(self):
        base = NetworkConfig(NetworkTopology(2, 2, ((0,), (1,))), (0.0, 0.0), (0.0, 0.0))
        p = AssignmentProblem(base, (UncoopUser(1.0, (0, 1)), UncoopUser(1.0, (0, 1))))
        assert solve_exact(p).feasible

    def test_pruned_matches_unpruned(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(1, 5))
            access = tuple(tuple(sorted(int(j) for j in rng.choice(m, rng.integers(1, m + 1), replace=False)))
                           for _ in range(n))
            base = NetworkConfig(NetworkTopology(n, m, access), tuple(rng.uniform(0, 0.4, n).round(2)), (0.0,) * m)
            users = tuple(UncoopUser(round(float(rng.uniform(0, 1)), 2),
                                     tuple(sorted(int(j) for j in rng.choice(m, rng.integers(1, m + 1), replace=False))))
                          for _ in range(int(rng.integers(0, m + 1))))
            p = AssignmentProblem(base, users)
            a = solve_exact(p, prune=True, count_all=True)
            b = solve_exact(p, prune=False, count_all=True)
            assert a.feasible == b.feasible == brute_force(p)
            assert a.feasible_count == b.feasible_count
            if a.feasible:
                assert len(set(a.placement)) == len(a.placement)
                assert all(ch in u.candidates for ch, u in zip(a.placement, users))
                assert a.verdict.feasible

    def test_size_guard(self):
        base = NetworkConfig(NetworkTopology(1, 20, ((0,),)), (0.1,), (0.0,) * 20)
        p = AssignmentProblem(base, (UncoopUser(0.5, (0,)),))
        with pytest.raises(AssignmentSizeError):
            solve_exact(p)
        assert solve_exact(p, override=True).feasible

    def test_invalid_problem(self):
        base = NetworkConfig(NetworkTopology(1, 1, ((0,),)), (0.1,), (0.0,))
        with pytest.raises(ValueError):
            solve_exact(AssignmentProblem(base, (UncoopUser(0.5, ()),)))
        with pytest.raises(ValueError):
            solve_exact(AssignmentProblem(base, (UncoopUser(0.5, (0,)),) * 2))


class TestGreedy:
    def test_yes_instance(self):
        p = reduce_set_cover(YES)
        res = solve_greedy(p)
        silent = [k for k, u in enumerate(p.users) if u.rate == 0.0][0]
        assert res.feasible and res.placement[silent] == 2

    def test_symmetric_tie(self):
        base = NetworkConfig(NetworkTopology(1, 3, ((0, 1, 2),)), (0.2,), (0.0,) * 3)
        res = solve_greedy(AssignmentProblem(base, (UncoopUser(0.3, (0, 1, 2)),)))
        assert res.placement == (0,)

    def test_sound(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            p = reduce_set_cover(random_instance(rng))
            res = solve_greedy(p)
            if res.feasible:
                assert check_sufficient(p.config_for(res.placement)).feasible
                assert solve_exact(p).feasible
            if not solve_exact(p).feasible:
                assert not res.feasible


def test_text_round_trip():
    p = reduce_set_cover(YES)
    assert problem_from_dict(json.loads(dumps_problem(p))) == p
    assert set_cover_from_dict(set_cover_to_dict(YES)) == YES
    assert problem_from_dict({"set_cover": set_cover_to_dict(YES)}) == p
