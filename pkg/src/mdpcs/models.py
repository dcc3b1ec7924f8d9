"""Builders for the four application models.

Each builder assembles a full MdpModel ready for the solve/check
pipeline:

* capital: 2-D state (capital, demand shock); the action is next-period
  capital chosen directly, the shock moves exogenously.
* pricing: the state is a reference price updated to a random convex
  combination of itself and the charged price.
* random walk: additive state transitions s + a + noise, clamped to the
  grid, with a state reward and an action cost.
* savings: wealth state, savings action, HARA consumption utility,
  next wealth = return * savings + random income.

Shape conditions (demand slopes, convexity, complementarity) are not
enforced at build time unless they would make the model ill-defined;
the structure checkers report on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DiscreteDistribution,
    Grid,
    Kernel,
    MdpModel,
    allocation_weights,
    kernel_from_map,
    product_grid,
)


@dataclass(frozen=True)
class HaraUtility:
    """Consumption utility with hyperbolic absolute risk aversion
    1 / (a * c + b), in closed form.

    a > 0, b = 0 is constant relative risk aversion (sigma = 1/a);
    a = 0 is constant absolute risk aversion (alpha = 1/b);
    a = -1 is quadratic with bliss point b.
    """

    a: float
    b: float
    label: str = "hara"

    def domain(self) -> tuple[float, float]:
        """Open interval of admissible consumption."""
        if self.a > 0:
            return (-self.b / self.a, np.inf)
        if self.a == 0:
            return (-np.inf, np.inf)
        return (-np.inf, -self.b / self.a)

    def __call__(self, c):
        c = np.asarray(c, float)
        if self.a == 0:
            return -self.b * np.exp(-c / self.b)
        if self.a == 1:
            return np.log(self.a * c + self.b)
        return (self.a * c + self.b) ** (1.0 - 1.0 / self.a) / (self.a - 1.0)

    def marginal(self, c):
        c = np.asarray(c, float)
        if self.a == 0:
            return np.exp(-c / self.b)
        return (self.a * c + self.b) ** (-1.0 / self.a)


def crra_utility(sigma: float) -> HaraUtility:
    """Constant relative risk aversion sigma (> 0); sigma = 1 is log."""
    if sigma <= 0:
        raise ValueError("relative risk aversion must be positive")
    return HaraUtility(1.0 / sigma, 0.0, label=f"crra(sigma={sigma:g})")


def cara_utility(alpha: float) -> HaraUtility:
    """Constant absolute risk aversion alpha > 0."""
    if alpha <= 0:
        raise ValueError("absolute risk aversion must be positive")
    return HaraUtility(0.0, 1.0 / alpha, label=f"cara(alpha={alpha:g})")


def quadratic_utility(bliss: float) -> HaraUtility:
    """Quadratic utility with bliss consumption level `bliss`."""
    return HaraUtility(-1.0, bliss, label=f"quadratic(bliss={bliss:g})")


@dataclass(frozen=True)
class ModelSpec:
    """Reproducible description of a built instance: builder id, parameter
    map, free-form provenance notes (e.g. generator family and seed)."""

    variant: str
    params: dict
    notes: str = ""


def build_capital(
    capital_axis,
    shock_axis,
    revenue,
    adjustment_cost,
    shock_kernel,
    beta: float,
    feasible=None,
) -> MdpModel:
    """Capital accumulation: choose next-period capital directly while an
    exogenous demand shock follows its own chain.

    revenue is a (capital, shock) table, adjustment_cost a
    (capital, action) table with the action grid equal to the capital
    axis; shock_kernel is row-stochastic on the shock axis.  feasible, if
    given, is a (capital, action) mask replicated across shock values.
    """
    cap = np.asarray(capital_axis, float)
    shk = np.asarray(shock_axis, float)
    n1, n2 = cap.size, shk.size
    R = np.asarray(revenue, float)
    C = np.asarray(adjustment_cost, float)
    Q = np.asarray(shock_kernel, float)
    if R.shape != (n1, n2):
        raise ValueError(f"revenue must have shape {(n1, n2)}, got {R.shape}")
    if C.shape != (n1, n1):
        raise ValueError(f"adjustment cost must have shape {(n1, n1)}, got {C.shape}")
    if Q.shape != (n2, n2):
        raise ValueError(f"shock kernel must have shape {(n2, n2)}, got {Q.shape}")
    state_grid = product_grid(cap, shk)
    action_grid = Grid((cap,))  # next-period capital is chosen directly
    eye = np.eye(n1)
    rows5 = eye[None, :, :, None] * Q[:, None, None, :]        # (i2, a, j1, j2)
    rows5 = np.broadcast_to(rows5, (n1, n2, n1, n1, n2))
    rows = rows5.reshape(n1 * n2, n1, n1 * n2)
    reward = (R[:, :, None] - C[:, None, :]).reshape(n1 * n2, n1)
    if feasible is None:
        mask = np.ones((n1 * n2, n1), dtype=bool)
    else:
        gam = np.asarray(feasible, bool)
        if gam.shape != (n1, n1):
            raise ValueError(f"feasible mask must have shape {(n1, n1)}")
        mask = np.repeat(gam[:, None, :], n2, axis=1).reshape(n1 * n2, n1)
    kernel = Kernel(state_grid, action_grid, rows)
    return MdpModel(state_grid, action_grid, reward, mask, kernel, beta)


def build_pricing(
    reference_grid: Grid,
    price_grid: Grid,
    demand,
    memory: DiscreteDistribution,
    beta: float,
) -> MdpModel:
    """Pricing under a reference effect: revenue is price times demand, and
    the next reference price is gamma*s + (1-gamma)*a with the memory
    factor gamma drawn from `memory` (a law on [0, 1])."""
    D = np.asarray(demand, float)
    ns, na = reference_grid.size, price_grid.size
    if D.shape != (ns, na):
        raise ValueError(f"demand must have shape {(ns, na)}, got {D.shape}")
    gammas = memory.grid.points
    if gammas.min() < 0.0 or gammas.max() > 1.0:
        raise ValueError("memory factors must lie in [0, 1]")
    reward = price_grid.points[None, :] * D
    kernel = kernel_from_map(
        reference_grid, price_grid,
        lambda s, a, g: g * s + (1.0 - g) * a,
        memory,
    )
    feasible = np.ones((ns, na), dtype=bool)
    return MdpModel(reference_grid, price_grid, reward, feasible, kernel, beta)


def linear_demand_table(reference_grid: Grid, price_grid: Grid,
                        intercept: float, reference_slope: float,
                        price_slope: float) -> np.ndarray:
    """max(0, intercept + reference_slope * s - price_slope * a)."""
    s = reference_grid.points[:, None]
    a = price_grid.points[None, :]
    return np.maximum(0.0, intercept + reference_slope * s - price_slope * a)


def demand_shape_report(demand, reference_grid: Grid, price_grid: Grid,
                        tol: float = 1e-9):
    """Shape conditions on a demand table: nonnegative, nonincreasing in
    the charged price, nondecreasing and convex in the reference price,
    increasing differences.  Reported, never assumed."""
    from .orders import OrderVerdict, Witness, _Scan, _slope_convexity_slack
    from .structure import ConditionReport, increasing_differences_check

    D = np.asarray(demand, float)
    pts = reference_grid.points

    def scan_of(slack, name, locate):
        sc = _Scan(tol)
        sc.observe(slack, name, locate)
        return sc.verdict()

    neg = scan_of(D.ravel(), "demand nonnegative",
                  lambda i: (i // D.shape[1], i % D.shape[1]))
    dec_a = scan_of(-np.diff(D, axis=1).ravel(), "demand nonincreasing in price",
                    lambda i: (i // (D.shape[1] - 1), i % (D.shape[1] - 1)))
    inc_s = scan_of(np.diff(D, axis=0).ravel(), "demand nondecreasing in reference",
                    lambda i: (i // D.shape[1], i % D.shape[1]))
    cvx = _Scan(tol)
    for a in range(D.shape[1]):
        cvx.observe(_slope_convexity_slack(pts, D[:, a]),
                    "demand slope convexity in reference", lambda i, a=a: (i + 1, a))
        if cvx.witness is not None:
            break
    return ConditionReport((
        ("demand nonnegative", neg),
        ("demand nonincreasing in price", dec_a),
        ("demand nondecreasing in reference", inc_s),
        ("demand convex in reference", cvx.verdict()),
        ("demand increasing differences", increasing_differences_check(D, tol)),
    ))


def build_randomwalk(
    state_grid: Grid,
    action_grid: Grid,
    state_reward,
    action_cost,
    noise: DiscreteDistribution,
    beta: float,
) -> MdpModel:
    """Controlled additive walk: next state is s + a + noise clamped to the
    grid; the payoff is a state reward minus an action cost."""
    c1 = np.asarray(state_reward, float)
    c2 = np.asarray(action_cost, float)
    if c1.shape != (state_grid.size,):
        raise ValueError("state reward must have one value per state")
    if c2.shape != (action_grid.size,):
        raise ValueError("action cost must have one value per action")
    kernel = kernel_from_map(state_grid, action_grid,
                             lambda s, a, e: s + a + e, noise)
    reward = c1[:, None] - c2[None, :]
    feasible = np.ones((state_grid.size, action_grid.size), dtype=bool)
    return MdpModel(state_grid, action_grid, reward, feasible, kernel, beta)


def clamped_additive_map_table(state_grid: Grid, action_grid: Grid,
                               noise_grid: Grid) -> np.ndarray:
    """Successor table of the clamped walk, clip(s + a + e, lo, hi): the
    map the discretized kernel actually implements."""
    vals = (state_grid.points[:, None, None]
            + action_grid.points[None, :, None]
            + noise_grid.points[None, None, :])
    lo, hi = state_grid.points[0], state_grid.points[-1]
    return np.clip(vals, lo, hi)


def build_savings(
    utility: HaraUtility,
    gross_return: float,
    income: DiscreteDistribution,
    borrow_limit: float,
    savings_cap: float,
    beta: float,
    n_actions: int,
    state_refinement: int = 1,
) -> MdpModel:
    """Consumption-savings on a wealth grid.

    The savings grid is uniform on [borrow_limit, savings_cap] with step
    h; the wealth grid uses step h / state_refinement offset by half a
    step and extends to the highest reachable wealth, so the feasible set
    {a : borrow_limit <= a <= min(s, savings_cap)} is represented exactly
    and feasible consumption s - a is bounded below by half a wealth
    step.  Any feasible consumption outside the utility domain rejects
    the build, naming the offending pair.
    """
    if not borrow_limit < savings_cap:
        raise ValueError("borrow limit must lie below the savings cap")
    if n_actions < 2:
        raise ValueError("need at least two savings levels")
    if gross_return <= 0:
        raise ValueError("the gross return must be positive")
    if state_refinement < 1:
        raise ValueError("state_refinement must be a positive integer")
    apts = np.linspace(borrow_limit, savings_cap, n_actions)
    h = (apts[1] - apts[0]) / state_refinement
    y_max = float(income.grid.points[-1])
    top = gross_return * savings_cap + y_max
    n_states = int(np.ceil((top - (borrow_limit + h / 2)) / h)) + 1
    spts = borrow_limit + h / 2 + h * np.arange(n_states)
    state_grid = Grid((spts,))
    action_grid = Grid((apts,))

    feasible = apts[None, :] <= np.minimum(spts[:, None], savings_cap) + 1e-12
    consumption = spts[:, None] - apts[None, :]
    lo_dom, hi_dom = utility.domain()
    bad = feasible & ~((consumption > lo_dom) & (consumption < hi_dom))
    if bad.any():
        s, a = map(int, np.argwhere(bad)[0])
        raise ValueError(
            f"consumption {consumption[s, a]:g} at feasible pair (s={s}, a={a}) "
            f"is outside the utility domain ({lo_dom:g}, {hi_dom:g})"
        )
    reward = np.full_like(consumption, np.nan)
    reward[feasible] = utility(consumption[feasible])

    # next wealth R*a + y does not depend on the current state
    successors = gross_return * apts[:, None] + income.grid.points[None, :]
    w = allocation_weights(state_grid, successors.reshape(-1))
    w = w.reshape(n_actions, income.grid.size, n_states)
    action_rows = np.einsum("e,aen->an", income.mass, w)
    rows = np.broadcast_to(action_rows[None, :, :],
                           (n_states, n_actions, n_states)).copy()
    kernel = Kernel(state_grid, action_grid, rows)
    return MdpModel(state_grid, action_grid, reward, feasible, kernel, beta)
