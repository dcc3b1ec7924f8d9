import numpy as np
import pytest

import mdpcs

from helpers import monotone_chain, savings_models
from mdpcs.generate import random_savings_instance
from oracles import recurrent_class_count, stationary_linear_solve


def chain(rows):
    rows = np.asarray(rows, float)
    grid = mdpcs.make_uniform_grid(0, rows.shape[0] - 1, rows.shape[0])
    return mdpcs.InducedKernel(grid, rows)


class TestStationaryExtremes:
    def test_identity_chain_keeps_point_masses(self):
        pair = mdpcs.stationary_extremes(chain(np.eye(3)))
        assert np.allclose(pair.least.mass, [1, 0, 0])
        assert np.allclose(pair.greatest.mass, [0, 0, 1])
        assert pair.extremal
        assert pair.labels == ("least", "greatest")

    def test_symmetric_switch_unique(self):
        pair = mdpcs.stationary_extremes(chain([[0.5, 0.5], [0.5, 0.5]]))
        assert np.allclose(pair.least.mass, [0.5, 0.5], atol=1e-9)
        assert np.allclose(pair.greatest.mass, [0.5, 0.5], atol=1e-9)

    def test_residuals_meet_tolerance(self):
        P = monotone_chain(np.random.default_rng(0), 12)
        pair = mdpcs.stationary_extremes(P, tol=1e-10)
        assert max(pair.residual) < 1e-10
        # stationarity under one more application of the update
        for lam in (pair.least, pair.greatest):
            nxt = lam.mass @ P.rows
            assert 0.5 * np.abs(nxt - lam.mass).sum() < 1e-9

    def test_non_monotone_chain_flagged_as_limits(self):
        rows = [[0.1, 0.1, 0.8], [0.8, 0.1, 0.1], [0.1, 0.8, 0.1]]
        assert not mdpcs.d_preserving_check(chain(rows), "increasing").holds
        pair = mdpcs.stationary_extremes(chain(rows))
        assert not pair.extremal
        assert pair.labels == ("limit from below", "limit from above")

    def test_max_iter_diagnostic(self):
        # period-2 deterministic cycle never meets the tolerance
        with pytest.raises(RuntimeError, match="residual"):
            mdpcs.stationary_extremes(chain([[0, 1], [1, 0]]), max_iter=50)

    def test_rejects_2d_grids(self):
        grid = mdpcs.product_grid([0.0, 1.0], [0.0, 1.0])
        P = mdpcs.InducedKernel(grid, np.eye(4))
        with pytest.raises(ValueError, match="1-D"):
            mdpcs.stationary_extremes(P)


def test_monotone_iteration_sandwich():
    """From the bottom the iterates rise in first-order dominance, from the
    top they fall, at every step."""
    P = monotone_chain(np.random.default_rng(1), 10)
    assert mdpcs.d_preserving_check(P, "increasing").holds
    lo = np.zeros(10)
    lo[0] = 1.0
    hi = np.zeros(10)
    hi[-1] = 1.0
    for _ in range(60):
        lo_next, hi_next = lo @ P.rows, hi @ P.rows
        assert mdpcs.fosd_compare(
            mdpcs.DiscreteDistribution(P.grid, lo_next / lo_next.sum()),
            mdpcs.DiscreteDistribution(P.grid, lo / lo.sum())).holds
        assert mdpcs.fosd_compare(
            mdpcs.DiscreteDistribution(P.grid, hi / hi.sum()),
            mdpcs.DiscreteDistribution(P.grid, hi_next / hi_next.sum())).holds
        lo, hi = lo_next, hi_next


def test_irreducible_chain_matches_linear_solve_oracle():
    rng = np.random.default_rng(2)
    rows = rng.gamma(1.0, 1.0, size=(9, 9)) + 1e-3
    rows /= rows.sum(axis=1, keepdims=True)
    P = chain(rows)
    assert mdpcs.is_irreducible(P)
    pair = mdpcs.stationary_extremes(P)
    lam = stationary_linear_solve(rows)
    assert np.max(np.abs(pair.least.mass - lam)) <= 1e-8
    assert np.max(np.abs(pair.greatest.mass - lam)) <= 1e-8


def test_is_irreducible_detects_absorbing_state():
    rows = np.array([[1.0, 0.0], [0.5, 0.5]])
    assert not mdpcs.is_irreducible(chain(rows))
    assert recurrent_class_count(rows) == 1


class TestStationaryDominance:
    def test_equal_models_give_equal_extremes(self):
        m_lo, _ = savings_models(random_savings_instance(np.random.default_rng(3)))
        rep = mdpcs.check_stationary_dominance(m_lo, m_lo, "cx")
        assert rep.conclusion.holds

    def test_savings_income_spread(self):
        m_lo, m_hi = savings_models(random_savings_instance(np.random.default_rng(4)))
        rep = mdpcs.check_stationary_dominance(m_hi, m_lo, "cx")
        assert rep.conclusion.holds
        # argmax staircase: the policy-convexity legs report honestly
        assert "stationary-dominance" == rep.name

    def test_st_order_with_upshifted_kernel(self):
        rng = np.random.default_rng(5)
        inst = random_savings_instance(rng)
        m_lo, _ = savings_models(inst)
        # shift every kernel row up one wealth step: first-order improvement
        n = m_lo.n_states
        up = np.zeros((n, n))
        for j in range(n):
            up[j, min(j + 1, n - 1)] = 1.0
        rows_hi = m_lo.kernel.rows @ up
        m_hi = mdpcs.MdpModel(
            m_lo.state_grid, m_lo.action_grid, m_lo.reward, m_lo.feasible,
            mdpcs.Kernel(m_lo.state_grid, m_lo.action_grid, rows_hi), m_lo.beta)
        rep = mdpcs.check_stationary_dominance(m_hi, m_lo, "st")
        assert rep.conclusion.holds
