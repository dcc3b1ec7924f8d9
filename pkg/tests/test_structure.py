import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import mdpcs
from mdpcs.structure import _all_staircases

from helpers import complements_model, walk_models
from mdpcs.generate import random_complements_instance, random_walk_instance


def table(f, xs, ys):
    return np.array([[f(x, y) for y in ys] for x in xs])


XS = np.linspace(0, 1, 5)
YS = np.linspace(0, 1, 4)


class TestIncreasingDifferences:
    def test_product_is_supermodular(self):
        assert mdpcs.increasing_differences_check(table(lambda x, y: x * y, XS, YS)).holds

    def test_negated_product_fails(self):
        v = mdpcs.increasing_differences_check(table(lambda x, y: -x * y, XS, YS))
        assert not v.holds and v.witness is not None

    def test_additively_separable_holds_weakly(self):
        assert mdpcs.increasing_differences_check(table(lambda x, y: x + y, XS, YS)).holds

    def test_adjacent_blocks_equal_all_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            t = rng.normal(size=(4, 4))
            adjacent = mdpcs.increasing_differences_check(t).holds
            brute = True
            for i in range(4):
                for i2 in range(i + 1, 4):
                    for j in range(4):
                        for j2 in range(j + 1, 4):
                            if t[i2, j2] - t[i2, j] - t[i, j2] + t[i, j] < -1e-9:
                                brute = False
            assert adjacent == brute


class TestSupermodularity3:
    def test_modular_map(self):
        zs = np.linspace(-1, 0, 3)
        t = XS[:, None, None] + YS[None, :, None] + zs[None, None, :]
        assert mdpcs.supermodularity_check_3(t).holds

    def test_product_of_nonnegatives(self):
        zs = np.linspace(0.5, 1, 3)
        t = XS[:, None, None] * YS[None, :, None] * zs[None, None, :]
        assert mdpcs.supermodularity_check_3(t).holds

    def test_min_term_fails_in_first_pair(self):
        zs = np.linspace(0, 1, 3)
        t = (XS[:, None, None] + YS[None, :, None] + zs[None, None, :]
             - 2 * np.minimum(XS[:, None], YS[None, :])[:, :, None])
        v = mdpcs.supermodularity_check_3(t)
        assert not v.holds
        assert "(0,1)" in v.witness.test_function


class TestStochasticIncreasingDifferences:
    def test_constant_kernel(self):
        sg = mdpcs.make_uniform_grid(0, 1, 4)
        ag = mdpcs.make_uniform_grid(0, 1, 3)
        row = np.full(4, 0.25)
        rows = np.tile(row, (4, 3, 1))
        assert mdpcs.stochastically_increasing_differences_check(
            mdpcs.Kernel(sg, ag, rows)).holds

    def test_two_anchor_mixture_holds(self):
        m = complements_model(random_complements_instance(np.random.default_rng(1)))
        assert mdpcs.stochastically_increasing_differences_check(m.kernel).holds

    def test_constructed_violation_found(self):
        sg = mdpcs.make_uniform_grid(0, 1, 3)
        ag = mdpcs.make_uniform_grid(0, 1, 2)
        lo = np.array([0.6, 0.3, 0.1])
        hi = np.array([0.1, 0.3, 0.6])
        w = np.array([[0.1, 0.5], [0.3, 0.2]])  # mixed difference negative
        w = np.vstack([w, [0.4, 0.9]])
        rows = (1 - w)[:, :, None] * lo + w[:, :, None] * hi
        v = mdpcs.stochastically_increasing_differences_check(
            mdpcs.Kernel(sg, ag, rows))
        assert not v.holds and "upper set" in v.witness.test_function

    def test_2d_states_small_grid_exact(self):
        # shock-style kernel independent of the action and first axis
        grid = mdpcs.product_grid([0.0, 1.0], [0.0, 1.0, 2.0])
        ag = mdpcs.make_uniform_grid(0, 1, 2)
        row = np.full(6, 1 / 6)
        rows = np.tile(row, (6, 2, 1))
        v = mdpcs.stochastically_increasing_differences_check(
            mdpcs.Kernel(grid, ag, rows))
        assert v.holds and not v.sampled

    def test_2d_states_sampled_beyond_cap(self):
        grid = mdpcs.product_grid(np.arange(4.0), np.arange(4.0))
        ag = mdpcs.make_uniform_grid(0, 1, 2)
        rows = np.tile(np.full(16, 1 / 16), (16, 2, 1))
        v = mdpcs.stochastically_increasing_differences_check(
            mdpcs.Kernel(grid, ag, rows), max_upper_sets=10)
        assert v.holds and v.sampled


def test_all_staircases_count():
    from math import comb
    assert len(_all_staircases(3, 4)) == comb(7, 3)
    for c in _all_staircases(3, 2):
        assert all(c[i] >= c[i + 1] for i in range(2))


class TestAscending:
    def test_full_grid(self):
        assert mdpcs.ascending_check(np.ones((4, 3), dtype=bool)).holds

    def test_interval_with_increasing_upper_bound(self):
        ub = np.array([0, 1, 1, 2])
        feas = np.arange(3)[None, :] <= ub[:, None]
        assert mdpcs.ascending_check(feas).holds
        assert mdpcs.expanding_check(feas).holds

    def test_swap_fails(self):
        feas = np.array([[False, True], [True, False]])
        v = mdpcs.ascending_check(feas)
        assert not v.holds

    def test_expanding_but_not_ascending(self):
        # low state allows only the top action; high state adds the bottom:
        # the min selection is infeasible below
        feas = np.array([[False, True], [True, True]])
        assert mdpcs.expanding_check(feas).holds
        v = mdpcs.ascending_check(feas)
        assert not v.holds and "min selection" in v.witness.test_function

    def test_empty_row_flagged(self):
        feas = np.array([[True, True], [False, False]])
        v = mdpcs.ascending_check(feas)
        assert not v.holds and v.witness.test_function == "nonempty feasible set"


class TestMonotonePolicyConditions:
    def test_complements_instances_pass(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            m = complements_model(random_complements_instance(rng))
            rep = mdpcs.monotone_policy_conditions_check(m)
            assert rep.holds, rep.failing()

    def test_decreasing_reward_flagged(self):
        rng = np.random.default_rng(10)
        inst = random_complements_instance(rng)
        drop = np.linspace(0.0, 5.0, inst["reward"].shape[0])
        inst = dict(inst, reward=inst["reward"] - 3 * drop[:, None])
        rep = mdpcs.monotone_policy_conditions_check(complements_model(inst))
        assert rep.failing() == ["reward increasing in state"]
        assert rep["reward increasing in state"].witness is not None

    def test_report_shape(self):
        m = complements_model(random_complements_instance(np.random.default_rng(2)))
        rep = mdpcs.monotone_policy_conditions_check(m)
        assert rep.names() == [
            "reward increasing in state",
            "reward increasing differences",
            "kernel monotone",
            "kernel stochastically increasing differences",
            "feasibility expanding",
            "feasibility ascending",
        ]
        d = rep.to_dict()
        assert d["holds"] and set(d["conditions"]) == set(rep.names())


class TestTransitionMapConditions:
    def test_walk_instance_passes(self):
        m_lo, m_hi, lo, hi = walk_models(random_walk_instance(np.random.default_rng(3)))
        mt = mdpcs.clamped_additive_map_table(m_lo.state_grid, m_lo.action_grid,
                                              lo.grid)
        rep = mdpcs.transition_map_conditions_check(
            m_lo.state_grid, m_lo.action_grid, mt, m_lo.reward, m_lo.feasible,
            hi, lo)
        assert rep.holds, rep.failing()

    def test_concave_reward_flagged(self):
        inst = random_walk_instance(np.random.default_rng(4))
        n = inst["state_points"].size
        inst = dict(inst, state_reward=np.sqrt(np.arange(n, dtype=float)))
        m_lo, m_hi, lo, hi = walk_models(inst)
        mt = mdpcs.clamped_additive_map_table(m_lo.state_grid, m_lo.action_grid,
                                              lo.grid)
        rep = mdpcs.transition_map_conditions_check(
            m_lo.state_grid, m_lo.action_grid, mt, m_lo.reward, m_lo.feasible,
            hi, lo)
        assert "reward convex in state" in rep.failing()
        assert rep["reward convex in state"].witness is not None

    def test_state_dependent_feasibility_flagged(self):
        inst = random_walk_instance(np.random.default_rng(5))
        m_lo, m_hi, lo, hi = walk_models(inst)
        mask = m_lo.feasible.copy()
        mask[0, -1] = False
        mt = mdpcs.clamped_additive_map_table(m_lo.state_grid, m_lo.action_grid,
                                              lo.grid)
        rep = mdpcs.transition_map_conditions_check(
            m_lo.state_grid, m_lo.action_grid, mt, m_lo.reward, mask, hi, lo)
        assert "feasibility state-independent" in rep.failing()


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_max_operator_preserves_increasing_differences(seed):
    """With complementary one-step values and an ascending feasibility
    correspondence, the per-state max keeps increasing differences in the
    (state, parameter) pair."""
    rng = np.random.default_rng(seed)
    ns, na, ne = (int(rng.integers(3, 6)) for _ in range(3))
    h = np.zeros((ns, na, ne))
    for _ in range(3):
        h += np.multiply.outer(
            np.cumsum(rng.uniform(0, 1, ns)),
            np.multiply.outer(np.cumsum(rng.uniform(0, 1, na)),
                              np.cumsum(rng.uniform(0, 1, ne))))
    ub = np.sort(rng.integers(0, na, ns))
    feas = np.arange(na)[None, :] <= ub[:, None]
    assert mdpcs.supermodularity_check_3(h).holds
    assert mdpcs.ascending_check(feas).holds
    tf = np.array([[h[s, feas[s], e].max() for e in range(ne)]
                   for s in range(ns)])
    assert mdpcs.increasing_differences_check(tf).holds
