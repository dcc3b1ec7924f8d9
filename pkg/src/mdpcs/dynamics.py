"""Forward distribution dynamics and the executable comparison checks.

A solved policy induces a state chain; pushing the initial distribution
through it gives the period-t state laws, and integrating the policy
against them gives the expected period-t decision.  The check operations
verify a result's preconditions on the concrete instance, then propagate
and compare.  Precondition failure and conclusion failure are reported
separately: the results are one-directional, so a conclusion may hold
anyway, but a conclusion failing while preconditions hold would refute
the comparison on this instance and must never happen.

Expected decisions from every initial point mass are computed at once by
iterating w_{t+1} = P w_t from w_1 = g: the expected decision t periods
out, starting from state s, is w_t[s].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DiscreteDistribution, Grid, InducedKernel, MdpModel, PolicyFunction
from .orders import (
    DEFAULT_TOL,
    OrderVerdict,
    Witness,
    _row_compare,
    _Scan,
    _state_steps,
    _slope_convexity_slack,
    convexity_preserving_check,
    d_preserving_check,
    distribution_compare,
    kernel_compare,
    monotone_kernel_check,
)
from .solver import induced_kernel, policy_correspondence, policy_function, value_iterate
from .structure import ConditionReport

_FAMILIES = {
    "increasing": ("increasing", "st"),
    "st": ("increasing", "st"),
    "increasing-convex": ("increasing-convex", "icx"),
    "icx": ("increasing-convex", "icx"),
}


@dataclass(frozen=True)
class Trajectory:
    """Forward state laws and the expected decision per period."""

    distributions: tuple[DiscreteDistribution, ...]
    expected_decision: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.distributions)


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one comparison check: precondition bundle + conclusion."""

    name: str
    preconditions: ConditionReport
    conclusion: OrderVerdict
    notes: tuple[str, ...] = ()

    @property
    def preconditions_hold(self) -> bool:
        return self.preconditions.holds

    @property
    def holds(self) -> bool:
        return self.conclusion.holds

    @property
    def status(self) -> str:
        if self.preconditions.holds:
            return "pass" if self.conclusion.holds else "refuted"
        return ("preconditions-failed" if self.conclusion.holds
                else "preconditions-and-conclusion-failed")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "preconditions": self.preconditions.to_dict(),
            "conclusion": self.conclusion.to_dict(),
            "notes": list(self.notes),
        }


def propagate(P: InducedKernel, mu1: DiscreteDistribution, T: int) -> list[DiscreteDistribution]:
    """State laws for periods 1..T: each step is a vector-matrix product."""
    if T < 1:
        raise ValueError("the horizon must be at least 1")
    if not P.grid.same_as(mu1.grid):
        raise ValueError("initial distribution lives on the wrong grid")
    out = [mu1]
    mass = mu1.mass
    for _ in range(T - 1):
        mass = mass @ P.rows
        out.append(DiscreteDistribution(P.grid, mass))
    return out


def expected_decision(g: PolicyFunction, mu: DiscreteDistribution) -> float:
    """Integral of the policy against a state law."""
    if not g.grid.same_as(mu.grid):
        raise ValueError("policy and distribution grids differ")
    return float(mu.mass @ g.values)


def trajectory(P: InducedKernel, g: PolicyFunction, mu1: DiscreteDistribution,
               T: int) -> Trajectory:
    dists = propagate(P, mu1, T)
    ed = np.array([expected_decision(g, mu) for mu in dists])
    return Trajectory(tuple(dists), ed)


def _decision_paths(P: InducedKernel, g: PolicyFunction, T: int) -> np.ndarray:
    """(T, n_states) array: entry [t-1, s] is the expected decision in
    period t when the chain starts at state s."""
    w = g.values.astype(float)
    out = np.empty((T, w.size))
    for t in range(T):
        out[t] = w
        w = P.rows @ w
    return out


def default_initial_states(grid: Grid, cap: int = 50) -> np.ndarray:
    """All grid points while |S| <= cap, else an evenly spaced subsample of
    size cap including both ends."""
    n = grid.size
    if n <= cap:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, cap)).astype(int))


def _policy_monotone_verdict(g: PolicyFunction, tol: float) -> OrderVerdict:
    scan = _Scan(tol)
    vals = g.values
    for axis, (lo, hi) in enumerate(_state_steps(g.grid)):
        scan.observe(vals[hi] - vals[lo], "policy nondecreasing in state",
                     lambda i, axis=axis, lo=lo: (f"state step (axis {axis})", int(lo[i])))
        if scan.witness is not None:
            break
    return scan.verdict()


def _policy_convex_verdict(g: PolicyFunction, tol: float) -> OrderVerdict:
    if g.grid.ndim != 1:
        raise ValueError("policy convexity needs a 1-D state grid")
    scan = _Scan(tol)
    scan.observe(_slope_convexity_slack(g.grid.points, g.values),
                 "policy slope convexity", lambda i: (int(i + 1),))
    return scan.verdict()


def _policies_ordered_verdict(g_hi: PolicyFunction, g_lo: PolicyFunction,
                              tol: float, label: str) -> OrderVerdict:
    scan = _Scan(tol)
    scan.observe(g_hi.values - g_lo.values, label, lambda i: (int(i),))
    return scan.verdict()


def check_distribution_dominance(
    P2: InducedKernel,
    P1: InducedKernel,
    mu1: DiscreteDistribution,
    family: str,
    T: int = 20,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Propagated state laws stay ordered period by period.

    Preconditions: the high chain preserves the test family, and its rows
    dominate the low chain's rows statewise.  Conclusion: starting both
    chains from the same initial law, the period-t laws are ordered for
    every t <= T.
    """
    try:
        fam, order = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown test family {family!r}") from None
    if not (P2.grid.same_as(P1.grid) and P2.grid.same_as(mu1.grid)):
        raise ValueError("chains and initial law must share one grid")
    rowscan = _Scan(tol)
    for s in range(P2.grid.size):
        v = _row_compare(P2.grid, P2.rows[s], P1.rows[s], order, tol)
        rowscan.merge(v, (s,))
        if rowscan.witness is not None:
            break
    pre = ConditionReport((
        ("chain preserves family", d_preserving_check(P2, fam, tol)),
        ("rowwise chain dominance", rowscan.verdict()),
    ))
    scan = _Scan(tol)
    mus2 = propagate(P2, mu1, T)
    mus1 = propagate(P1, mu1, T)
    for t, (m2, m1) in enumerate(zip(mus2, mus1), start=1):
        v = distribution_compare(m2, m1, order, tol)
        scan.merge(v, (f"period {t}",))
        if scan.witness is not None:
            break
    return CheckReport("distribution-dominance", pre, scan.verdict())


def _tie_notes(models, correspondences) -> tuple[str, ...]:
    notes = []
    for i, G in enumerate(correspondences):
        ties = G.tie_states
        if ties.size:
            notes.append(
                f"model {i}: argmax ties within {G.tol:g} at "
                f"{ties.size} state(s)"
            )
    return tuple(notes)


def _shared_grid_guard(models) -> None:
    m0 = models[0]
    for m in models[1:]:
        if not (m.state_grid.same_as(m0.state_grid)
                and m.action_grid.same_as(m0.action_grid)):
            raise ValueError("models must share state and action grids")


def check_parameter_monotonicity(
    models,
    T: int = 20,
    tol: float = DEFAULT_TOL,
    initial_states=None,
    eps: float | None = None,
) -> CheckReport:
    """Expected decisions rise along an ordered family of payoff-side
    parameters (discount factors or payoff parameters).

    The models must share grids, feasibility and transition kernel and may
    differ in rewards and discounting.  Preconditions: solved policies
    nondecreasing in the parameter pointwise, every upper policy
    nondecreasing in the state, kernel monotone.  Conclusion: expected
    period-t decisions nondecreasing across every parameter pair, every
    period t <= T, from every chosen initial state.
    """
    models = list(models)
    if len(models) < 2:
        raise ValueError("need at least two parameter points")
    _shared_grid_guard(models)
    base = models[0]
    for m in models[1:]:
        if not np.allclose(m.kernel.rows, base.kernel.rows, rtol=0.0, atol=1e-12):
            raise ValueError("models must share the transition kernel")
        if not np.array_equal(m.feasible, base.feasible):
            raise ValueError("models must share the feasibility mask")
    eps = min(1e-10, tol / 10) if eps is None else eps
    solved = []
    for m in models:
        V = value_iterate(m, eps=eps)
        G = policy_correspondence(m, V, tol=tol)
        solved.append((G, policy_function(G)))
    policies = [g for _, g in solved]

    param_scan = _Scan(tol)
    for i in range(len(policies) - 1):
        v = _policies_ordered_verdict(policies[i + 1], policies[i], tol,
                                      "policy nondecreasing in parameter")
        param_scan.merge(v, (f"parameters {i}->{i + 1}",))
        if param_scan.witness is not None:
            break
    state_scan = _Scan(tol)
    for i in range(1, len(policies)):
        v = _policy_monotone_verdict(policies[i], tol)
        state_scan.merge(v, (f"parameter {i}",))
        if state_scan.witness is not None:
            break
    pre = ConditionReport((
        ("policy nondecreasing in parameter", param_scan.verdict()),
        ("upper policies nondecreasing in state", state_scan.verdict()),
        ("kernel monotone", monotone_kernel_check(base.kernel, tol)),
    ))

    starts = (default_initial_states(base.state_grid)
              if initial_states is None else np.asarray(initial_states, int))
    paths = [
        _decision_paths(induced_kernel(m, g), g, T)[:, starts]
        for m, (_, g) in zip(models, solved)
    ]
    scan = _Scan(tol)
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            d = paths[j] - paths[i]
            scan.observe(
                d, "expected decision nondecreasing in parameter",
                lambda k, i=i, j=j, d=d: (
                    f"parameters {i}->{j}", f"period {k // d.shape[1] + 1}",
                    int(starts[k % d.shape[1]])),
            )
            if scan.witness is not None:
                break
        if scan.witness is not None:
            break
    return CheckReport("parameter-monotonicity", pre, scan.verdict(),
                       _tie_notes(models, [G for G, _ in solved]))


def check_initial_state_monotonicity(
    model: MdpModel,
    s_low: int,
    s_high: int,
    T: int = 20,
    tol: float = DEFAULT_TOL,
    eps: float | None = None,
) -> CheckReport:
    """A higher starting state yields weakly higher expected decisions in
    every period, provided the policy is nondecreasing and the kernel
    monotone."""
    coords = model.state_grid.coords()
    if not np.all(coords[s_high] >= coords[s_low]):
        raise ValueError("initial states must be comparable with s_low <= s_high")
    eps = min(1e-10, tol / 10) if eps is None else eps
    V = value_iterate(model, eps=eps)
    G = policy_correspondence(model, V, tol=tol)
    g = policy_function(G)
    pre = ConditionReport((
        ("policy nondecreasing in state", _policy_monotone_verdict(g, tol)),
        ("kernel monotone", monotone_kernel_check(model.kernel, tol)),
    ))
    paths = _decision_paths(induced_kernel(model, g), g, T)
    scan = _Scan(tol)
    scan.observe(paths[:, s_high] - paths[:, s_low],
                 "expected decision nondecreasing in initial state",
                 lambda t: (f"period {t + 1}",))
    return CheckReport("initial-state-monotonicity", pre, scan.verdict(),
                       _tie_notes([model], [G]))


def check_transition_monotonicity(
    model2: MdpModel,
    model1: MdpModel,
    order: str = "st",
    T: int = 20,
    tol: float = DEFAULT_TOL,
    initial_states=None,
    eps: float | None = None,
) -> CheckReport:
    """A dominance-ordered improvement of the transition kernel raises
    expected decisions in every period.

    order 'st': the high kernel must be monotone, its policy nondecreasing
    and above the low policy, and the kernels rowwise first-order ordered.
    order 'cx': additionally the high kernel convexity-preserving and its
    policy convex (1-D state grids).
    """
    if order not in ("st", "cx"):
        raise ValueError("order must be 'st' or 'cx'")
    _shared_grid_guard([model2, model1])
    if not np.array_equal(model2.feasible, model1.feasible):
        raise ValueError("models must share the feasibility mask")
    r2, r1 = model2.reward, model1.reward
    both = model2.feasible
    if not np.allclose(r2[both], r1[both], rtol=0.0, atol=1e-12):
        raise ValueError("models must share the reward table")
    if model2.beta != model1.beta:
        raise ValueError("models must share the discount factor")
    if order == "cx" and model2.state_grid.ndim != 1:
        raise ValueError("the convex-order comparison needs a 1-D state grid")
    eps = min(1e-10, tol / 10) if eps is None else eps
    solved = []
    for m in (model2, model1):
        V = value_iterate(m, eps=eps)
        G = policy_correspondence(m, V, tol=tol)
        solved.append((G, policy_function(G)))
    (G2, g2), (G1, g1) = solved

    conditions = [
        ("kernel monotone (high)", monotone_kernel_check(model2.kernel, tol)),
        ("policy nondecreasing in state (high)", _policy_monotone_verdict(g2, tol)),
        ("policy dominance", _policies_ordered_verdict(
            g2, g1, tol, "high policy above low policy")),
        ("kernel dominance", kernel_compare(
            model2.kernel, model1.kernel, order, model2.feasible, tol)),
    ]
    if order == "cx":
        conditions.insert(1, ("kernel convexity-preserving (high)",
                              convexity_preserving_check(model2.kernel, tol)))
        conditions.insert(3, ("policy convex in state (high)",
                              _policy_convex_verdict(g2, tol)))
    pre = ConditionReport(tuple(conditions))

    starts = (default_initial_states(model2.state_grid)
              if initial_states is None else np.asarray(initial_states, int))
    hi = _decision_paths(induced_kernel(model2, g2), g2, T)[:, starts]
    lo = _decision_paths(induced_kernel(model1, g1), g1, T)[:, starts]
    scan = _Scan(tol)
    d = hi - lo
    scan.observe(
        d, "expected decision nondecreasing in kernel",
        lambda k: (f"period {k // d.shape[1] + 1}", int(starts[k % d.shape[1]])),
    )
    return CheckReport("transition-monotonicity", pre, scan.verdict(),
                       _tie_notes([model2, model1], [G2, G1]))
