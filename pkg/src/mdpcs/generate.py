"""Reproducible random instance families for the check suites.

Each family is constructed so that the preconditions of its target
comparison hold exactly on the discretized instance, not merely
approximately:

* complements-random: rewards are sums of products of nonnegative
  increasing functions (increasing differences by construction) and the
  kernel mixes two fixed anchor laws, the high one first-order above the
  low one, with an increasing supermodular mixing weight.  That gives
  monotonicity and stochastically increasing differences exactly; an
  additive survival-function construction would not (boundary clamping
  and step effects break the mixed-difference inequality).
* randomwalk-random: an additive walk that drifts downward (noise support
  below minus the largest action), so only the bottom clamp binds.
  max(s + a + e, lo) is increasing, convex and supermodular, while a
  binding top clamp would break supermodularity near the cap.
* pricing-random: linear demand kept strictly positive on the grid, so
  the payoff has increasing differences without kink effects, and prices
  never leave the reference grid (no clamping at all).
* savings-random: gross return 1 with incomes aligned to the wealth
  lattice, so transitions hit grid points exactly; the high income law is
  a one-step mean-preserving spread of the low one.

All draws come from numpy's default generator seeded by the caller, and
`generate_config` emits plain JSON-able experiment configs.
"""

from __future__ import annotations

import numpy as np


def _increasing(rng, n, lo=0.05, hi=0.5, start=0.0):
    return start + np.cumsum(rng.uniform(lo, hi, n))


def _convex_increasing(rng, n, lo=0.05, hi=0.4):
    increments = np.cumsum(rng.uniform(lo, hi, n - 1))
    return np.concatenate(([0.0], np.cumsum(increments)))


def _random_simplex(rng, n):
    w = rng.uniform(0.2, 1.0, n)
    return w / w.sum()


def _upshift(mass, steps=1):
    """Shift mass up the grid, accumulating at the top (first-order above)."""
    out = np.zeros_like(mass)
    n = mass.size
    for k, m in enumerate(mass):
        out[min(k + steps, n - 1)] += m
    return out


def random_complements_instance(rng: np.random.Generator) -> dict:
    """Complementarity bundle by construction: monotone reward with
    increasing differences, two-anchor mixture kernel (monotone and with
    stochastically increasing differences), expanding/ascending feasibility.

    Also ships payoff-parameter terms (both increasing) whose additive
    entry c * (state_term + action_term) has increasing differences in
    (state, c) and (action, c)."""
    ns = int(rng.integers(6, 11))
    na = int(rng.integers(4, 7))
    spts = np.linspace(0.0, 1.0, ns)
    apts = np.linspace(0.0, 1.0, na)

    reward = np.zeros((ns, na))
    for _ in range(2):
        alpha = rng.uniform(0.5, 1.5)
        phi = _increasing(rng, ns)
        psi = _increasing(rng, na)
        reward += alpha * np.outer(phi, psi)
    reward += _increasing(rng, ns, 0.1, 0.6)[:, None]

    lo_anchor = _random_simplex(rng, ns)
    hi_anchor = _upshift(lo_anchor, steps=int(rng.integers(1, 3)))
    w = np.zeros((ns, na))
    for _ in range(2):
        w += rng.uniform(0.5, 1.5) * np.outer(_increasing(rng, ns),
                                              _increasing(rng, na))
    w = 0.05 + 0.9 * (w - w.min()) / (w.max() - w.min())
    rows = ((1.0 - w)[:, :, None] * lo_anchor[None, None, :]
            + w[:, :, None] * hi_anchor[None, None, :])

    if rng.random() < 0.5:
        feasible = np.ones((ns, na), dtype=bool)
    else:
        ub = np.sort(rng.integers(max(na - 3, 0), na, ns))
        feasible = np.arange(na)[None, :] <= ub[:, None]

    return {
        "state_points": spts,
        "action_points": apts,
        "reward": reward,
        "feasible": feasible,
        "kernel_rows": rows,
        "beta": float(rng.uniform(0.4, 0.8)),
        "payoff_state_term": _increasing(rng, ns, 0.1, 0.5),
        "payoff_action_term": _increasing(rng, na, 0.1, 0.5),
    }


def random_walk_instance(rng: np.random.Generator) -> dict:
    """Downward-drifting controlled walk with a convex increasing state
    reward, an increasing action cost, and a one-step noise upshift pair."""
    ns = int(rng.integers(18, 29))
    spts = np.arange(ns, dtype=float)
    apts = np.array([0.0, 1.0, 2.0])
    noise_pts = np.array([-4.0, -3.0, -2.0])
    p = rng.uniform(0.25, 0.75)
    lo_mass = np.array([p, 1.0 - p, 0.0])
    hi_mass = np.array([0.0, p, 1.0 - p])  # lo shifted up one grid step
    c1 = _convex_increasing(rng, ns, 0.05, 0.35)
    c2 = np.concatenate(([0.0], np.cumsum(rng.uniform(0.1, 1.2, apts.size - 1))))
    return {
        "state_points": spts,
        "action_points": apts,
        "state_reward": c1,
        "action_cost": c2,
        "noise_points": noise_pts,
        "noise_lo_mass": lo_mass,
        "noise_hi_mass": hi_mass,
        "beta": float(rng.uniform(0.5, 0.9)),
    }


def random_pricing_instance(rng: np.random.Generator) -> dict:
    """Linear-demand pricing instance with demand strictly positive on the
    grid and prices inside the reference range (no clamping)."""
    ns = int(rng.integers(12, 21))
    na = int(rng.integers(8, 15))
    intercept = float(rng.uniform(1.0, 1.5))
    reference_slope = float(rng.uniform(0.3, 0.7))
    price_slope = 1.0
    a_max = min(0.8 * intercept / price_slope, 1.0)
    gammas = np.sort(rng.uniform(0.1, 0.9, 3))
    while np.min(np.diff(gammas)) < 0.05:
        gammas = np.sort(rng.uniform(0.1, 0.9, 3))
    return {
        "reference_points": np.linspace(0.0, 1.0, ns),
        "price_points": np.linspace(0.0, a_max, na),
        "intercept": intercept,
        "reference_slope": reference_slope,
        "price_slope": price_slope,
        "memory_points": gammas,
        "memory_mass": _random_simplex(rng, 3),
        "beta": 0.6,
    }


def random_savings_instance(rng: np.random.Generator) -> dict:
    """CRRA consumption-savings instance with a one-step mean-preserving
    income spread pair.

    Parameters sit in the accumulation corner: the return beats the
    discount rate and the income spread is narrow relative to one savings
    step, so the savings cap binds on the entire recurrent wealth band
    for both income laws.  There the discretized stationary comparison is
    exact: the stationary law is the allocation image of R*cap + income,
    and the spread passes through that linear map as an exact convex-order
    increase.  Interior-target parameterizations put the comparison at
    the mercy of argmax staircase effects of order one grid step, which
    would falsely refute the ordering at desk tolerances.
    """
    sigma = float(rng.uniform(2.0, 3.5))
    n_actions = int(rng.integers(9, 13))
    refinement = 6
    savings_cap = float(rng.uniform(0.5, 0.7))
    beta = float(rng.uniform(0.94, 0.96))
    gross_return = float(rng.uniform(1.12, 1.18))
    hs = savings_cap / (n_actions - 1) / refinement
    # income atoms on the wealth lattice (offset half a wealth step)
    base_idx = int(np.round(0.62 / hs))
    y0 = hs * (base_idx + 0.5)
    income_pts = y0 + hs * np.arange(5)
    w = np.concatenate((rng.uniform(0.05, 0.15, 2),
                        [rng.uniform(0.5, 0.7)],
                        rng.uniform(0.05, 0.15, 2)))
    lo_mass = w / w.sum()
    delta = float(lo_mass[2] * rng.uniform(0.3, 0.45))
    hi_mass = lo_mass.copy()
    hi_mass[2] -= 2 * delta
    hi_mass[1] += delta
    hi_mass[3] += delta
    return {
        "sigma": sigma,
        "gross_return": gross_return,
        "income_points": income_pts,
        "income_lo_mass": lo_mass,
        "income_hi_mass": hi_mass,
        "borrow_limit": 0.0,
        "savings_cap": savings_cap,
        "beta": beta,
        "n_actions": n_actions,
        "state_refinement": refinement,
    }


def random_capital_instance(rng: np.random.Generator) -> dict:
    """2-D capital instance: supermodular increasing revenue, quadratic
    adjustment cost (decreasing differences), and a monotone shock kernel
    pair ordered by mixing toward the top shock."""
    n1 = int(rng.integers(5, 8))
    n2 = int(rng.integers(4, 7))
    cap_pts = np.linspace(0.0, 1.0, n1)
    shk_pts = np.linspace(0.0, 1.0, n2)
    revenue = np.zeros((n1, n2))
    for _ in range(2):
        revenue += rng.uniform(0.5, 1.5) * np.outer(_increasing(rng, n1),
                                                    _increasing(rng, n2))
    scale = float(rng.uniform(0.5, 1.5))
    linear = float(rng.uniform(0.0, 0.3))
    cost = scale * (cap_pts[None, :] - cap_pts[:, None]) ** 2 + linear * cap_pts[None, :]

    lo_anchor = _random_simplex(rng, n2)
    hi_anchor = _upshift(lo_anchor, 1)
    wz = _increasing(rng, n2)
    wz = 0.05 + 0.9 * (wz - wz.min()) / (wz.max() - wz.min())
    q_lo = ((1.0 - wz)[:, None] * lo_anchor[None, :]
            + wz[:, None] * hi_anchor[None, :])
    theta = float(rng.uniform(0.1, 0.3))
    top = np.zeros(n2)
    top[-1] = 1.0
    q_hi = (1.0 - theta) * q_lo + theta * top[None, :]
    return {
        "capital_points": cap_pts,
        "shock_points": shk_pts,
        "revenue": revenue,
        "adjustment_cost": cost,
        "shock_kernel_lo": q_lo,
        "shock_kernel_hi": q_hi,
        "beta": float(rng.uniform(0.4, 0.8)),
    }


def _listify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


FAMILIES = ("complements-random", "randomwalk-random",
            "savings-random", "pricing-random")


def generate_config(family: str, seed: int) -> dict:
    """One JSON-able experiment config for the given family and seed."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    rng = np.random.default_rng(seed)
    if family == "complements-random":
        inst = random_complements_instance(rng)
        cfg = {
            "model": {
                "builder": "table",
                "params": {
                    "state_points": inst["state_points"],
                    "action_points": inst["action_points"],
                    "reward": inst["reward"],
                    "feasible": inst["feasible"],
                    "kernel": inst["kernel_rows"],
                    "beta": inst["beta"],
                },
            },
            "axis": {"kind": "discount", "values": [0.3, 0.6, 0.9]},
            "checks": ["conditions", "parameter"],
        }
    elif family == "randomwalk-random":
        inst = random_walk_instance(rng)
        cfg = {
            "model": {
                "builder": "randomwalk",
                "params": {
                    "state_points": inst["state_points"],
                    "action_points": inst["action_points"],
                    "state_reward": inst["state_reward"],
                    "action_cost": inst["action_cost"],
                    "noise": {"points": inst["noise_points"],
                              "mass": inst["noise_lo_mass"]},
                    "beta": inst["beta"],
                },
            },
            "axis": {
                "kind": "kernel",
                "order": "st",
                "override": {"noise": {"points": inst["noise_points"],
                                       "mass": inst["noise_hi_mass"]}},
            },
            "checks": ["map-conditions", "transition"],
        }
    elif family == "savings-random":
        inst = random_savings_instance(rng)
        cfg = {
            "model": {
                "builder": "savings",
                "params": {
                    "utility": {"family": "crra", "sigma": inst["sigma"]},
                    "gross_return": inst["gross_return"],
                    "income": {"points": inst["income_points"],
                               "mass": inst["income_lo_mass"]},
                    "borrow_limit": inst["borrow_limit"],
                    "savings_cap": inst["savings_cap"],
                    "beta": inst["beta"],
                    "n_actions": inst["n_actions"],
                    "state_refinement": inst["state_refinement"],
                },
            },
            "axis": {
                "kind": "kernel",
                "order": "cx",
                "override": {"income": {"points": inst["income_points"],
                                        "mass": inst["income_hi_mass"]}},
            },
            "checks": ["stationary"],
        }
    else:
        inst = random_pricing_instance(rng)
        cfg = {
            "model": {
                "builder": "pricing",
                "params": {
                    "reference_points": inst["reference_points"],
                    "price_points": inst["price_points"],
                    "demand": {"family": "linear",
                               "intercept": inst["intercept"],
                               "reference_slope": inst["reference_slope"],
                               "price_slope": inst["price_slope"]},
                    "memory": {"points": inst["memory_points"],
                               "mass": inst["memory_mass"]},
                    "beta": inst["beta"],
                },
            },
            "axis": {"kind": "discount", "values": [0.3, 0.6, 0.9]},
            "checks": ["parameter"],
        }
    cfg.update({
        "schema": "mdpcs-experiment-v1",
        "seed": int(seed),
        "horizon": 20,
        "tol": 1e-9,
        "initial_state": None,
        "notes": f"{family} seed={seed}",
    })
    return _listify(cfg)
