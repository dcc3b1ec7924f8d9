"""Shared instance construction for the test suite."""

import numpy as np

import mdpcs
from mdpcs.generate import (
    random_capital_instance,
    random_complements_instance,
    random_pricing_instance,
    random_savings_instance,
    random_walk_instance,
)


def m3_model() -> mdpcs.MdpModel:
    """Fixed 3-state / 2-action reference model used across solver tests."""
    sg = mdpcs.make_uniform_grid(0.0, 2.0, 3)
    ag = mdpcs.make_uniform_grid(0.0, 1.0, 2)
    reward = np.array([[0.0, 1.0], [2.0, 0.5], [1.5, 3.0]])
    rows = np.array([
        [[1.0, 0.0, 0.0], [0.5, 0.5, 0.0]],
        [[0.2, 0.5, 0.3], [0.0, 0.5, 0.5]],
        [[0.1, 0.4, 0.5], [0.0, 0.2, 0.8]],
    ])
    feasible = np.ones((3, 2), dtype=bool)
    return mdpcs.MdpModel(sg, ag, reward, feasible,
                          mdpcs.Kernel(sg, ag, rows), 0.9)

# oracle values of m3_model, frozen from exact policy enumeration
M3_VALUES = np.array([20.456219892320778, 22.779824312836507, 25.358458486823476])
M3_POLICY = np.array([1, 0, 1])


def random_mdp(rng, max_states=6, max_actions=4) -> mdpcs.MdpModel:
    """Small random model: Dirichlet-style rows, normal rewards, random
    feasibility with at least one action per state."""
    ns = int(rng.integers(2, max_states + 1))
    na = int(rng.integers(2, max_actions + 1))
    sg = mdpcs.make_uniform_grid(0.0, 1.0, ns)
    ag = mdpcs.make_uniform_grid(0.0, 1.0, na)
    rows = rng.gamma(1.0, 1.0, size=(ns, na, ns)) + 1e-3
    rows /= rows.sum(axis=2, keepdims=True)
    reward = rng.normal(size=(ns, na))
    feasible = rng.random((ns, na)) < 0.8
    for s in range(ns):
        if not feasible[s].any():
            feasible[s, int(rng.integers(na))] = True
    beta = float(rng.uniform(0.3, 0.95))
    return mdpcs.MdpModel(sg, ag, reward, feasible,
                          mdpcs.Kernel(sg, ag, rows), beta)


def complements_model(inst) -> mdpcs.MdpModel:
    sg = mdpcs.Grid((inst["state_points"],))
    ag = mdpcs.Grid((inst["action_points"],))
    kernel = mdpcs.Kernel(sg, ag, inst["kernel_rows"])
    return mdpcs.MdpModel(sg, ag, inst["reward"], inst["feasible"],
                          kernel, inst["beta"])


def with_beta(model, beta) -> mdpcs.MdpModel:
    return mdpcs.MdpModel(model.state_grid, model.action_grid, model.reward,
                          model.feasible, model.kernel, beta)


def with_reward(model, reward) -> mdpcs.MdpModel:
    return mdpcs.MdpModel(model.state_grid, model.action_grid, reward,
                          model.feasible, model.kernel, model.beta)


def walk_models(inst):
    """(low, high) random-walk models plus the pieces for the map bundle."""
    sg = mdpcs.Grid((inst["state_points"],))
    ag = mdpcs.Grid((inst["action_points"],))
    lo = mdpcs.distribution_from_points(inst["noise_points"], inst["noise_lo_mass"])
    hi = mdpcs.distribution_from_points(inst["noise_points"], inst["noise_hi_mass"])
    m_lo = mdpcs.build_randomwalk(sg, ag, inst["state_reward"],
                                  inst["action_cost"], lo, inst["beta"])
    m_hi = mdpcs.build_randomwalk(sg, ag, inst["state_reward"],
                                  inst["action_cost"], hi, inst["beta"])
    return m_lo, m_hi, lo, hi


def pricing_model(inst, beta) -> mdpcs.MdpModel:
    rg = mdpcs.Grid((inst["reference_points"],))
    pg = mdpcs.Grid((inst["price_points"],))
    demand = mdpcs.linear_demand_table(rg, pg, inst["intercept"],
                                       inst["reference_slope"], inst["price_slope"])
    memory = mdpcs.distribution_from_points(inst["memory_points"], inst["memory_mass"])
    return mdpcs.build_pricing(rg, pg, demand, memory, beta)


def savings_models(inst):
    """(low, high) savings models for an income-spread pair."""
    u = mdpcs.crra_utility(inst["sigma"])
    kw = dict(gross_return=inst["gross_return"], borrow_limit=inst["borrow_limit"],
              savings_cap=inst["savings_cap"], beta=inst["beta"],
              n_actions=inst["n_actions"],
              state_refinement=inst["state_refinement"])
    lo = mdpcs.distribution_from_points(inst["income_points"], inst["income_lo_mass"])
    hi = mdpcs.distribution_from_points(inst["income_points"], inst["income_hi_mass"])
    return (mdpcs.build_savings(u, income=lo, **kw),
            mdpcs.build_savings(u, income=hi, **kw))


def capital_models(inst):
    kw = dict(capital_axis=inst["capital_points"], shock_axis=inst["shock_points"],
              revenue=inst["revenue"], adjustment_cost=inst["adjustment_cost"],
              beta=inst["beta"])
    return (mdpcs.build_capital(shock_kernel=inst["shock_kernel_lo"], **kw),
            mdpcs.build_capital(shock_kernel=inst["shock_kernel_hi"], **kw))


def monotone_chain(rng, n) -> mdpcs.InducedKernel:
    """Random monotone chain: two-anchor mixture with increasing weight."""
    grid = mdpcs.make_uniform_grid(0.0, 1.0, n)
    lo = rng.uniform(0.2, 1.0, n)
    lo /= lo.sum()
    hi = np.zeros(n)
    shift = int(rng.integers(1, 3))
    for k, m in enumerate(lo):
        hi[min(k + shift, n - 1)] += m
    w = np.cumsum(rng.uniform(0.05, 0.5, n))
    w = 0.05 + 0.9 * (w - w.min()) / (w.max() - w.min())
    rows = (1 - w)[:, None] * lo[None, :] + w[:, None] * hi[None, :]
    return mdpcs.InducedKernel(grid, rows)


def upshift_matrix(n, steps=1) -> np.ndarray:
    u = np.zeros((n, n))
    for j in range(n):
        u[j, min(j + steps, n - 1)] = 1.0
    return u


def affine_spread_chains(rng, n):
    """(low, high) chains where the high one adds a mean-preserving spread
    to the low one's affine successor map; exact ICX-preserving pair."""
    grid = mdpcs.make_uniform_grid(0.0, 1.0, n)
    pts = grid.points
    alpha = float(rng.uniform(0.3, 0.8))
    span = 1.0 - alpha
    d = float(rng.uniform(0.05, 0.45)) * span / 2
    b = float(rng.uniform(d, span - d))
    from mdpcs.core import allocation_weights
    centers = alpha * pts + b
    low = allocation_weights(grid, centers)
    high = 0.5 * (allocation_weights(grid, centers - d)
                  + allocation_weights(grid, centers + d))
    return (mdpcs.InducedKernel(grid, low), mdpcs.InducedKernel(grid, high))


def forced_policy_models(rng, n_states=9, n_actions=5):
    """(low, high) models with singleton feasible sets along a convex
    increasing selection, affine transition maps, and a mean-preserving
    spread between the kernels: every convex-order precondition of the
    transition comparison genuinely holds."""
    sg = mdpcs.make_uniform_grid(0.0, 1.0, n_states)
    ag = mdpcs.make_uniform_grid(0.0, 1.0, n_actions)
    pts, apts = sg.points, ag.points
    # convex increasing selection: sorted index increments never decrease
    k = int(rng.integers(2, n_actions))
    incs = np.array([0] * (n_states - 1 - k) + [1] * k)
    sel = np.concatenate(([0], np.cumsum(incs)))
    feasible = np.zeros((n_states, n_actions), dtype=bool)
    feasible[np.arange(n_states), sel] = True
    reward = np.where(feasible, rng.normal(size=(1, n_actions)), np.nan)
    reward = np.broadcast_to(reward, (n_states, n_actions)).copy()

    from mdpcs.core import allocation_weights
    alpha, gamma = 0.45, 0.25
    d = 0.05
    centers = alpha * pts[:, None] + gamma * apts[None, :] + 0.15
    flat = centers.reshape(-1)
    low_rows = allocation_weights(sg, flat).reshape(n_states, n_actions, n_states)
    high_rows = 0.5 * (allocation_weights(sg, flat - d)
                       + allocation_weights(sg, flat + d)
                       ).reshape(n_states, n_actions, n_states)
    beta = 0.7
    m_lo = mdpcs.MdpModel(sg, ag, reward, feasible,
                          mdpcs.Kernel(sg, ag, low_rows), beta)
    m_hi = mdpcs.MdpModel(sg, ag, reward, feasible,
                          mdpcs.Kernel(sg, ag, high_rows), beta)
    return m_lo, m_hi
