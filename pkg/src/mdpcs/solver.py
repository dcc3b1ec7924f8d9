"""Value iteration and optimal-policy extraction for finite models.

The fixed-point operator contracts at rate beta in the sup norm, so the
stopping rule `residual < eps * (1 - beta) / (2 * beta)` guarantees the
returned values are within eps of the true fixed point.  The optimal-set
extraction keeps every feasible action within an argmax tolerance of the
per-state best, and the policy selection takes the largest such action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, InducedKernel, MdpModel, PolicyFunction, _frozen

DEFAULT_ARGMAX_TOL = 1e-9


@dataclass(frozen=True)
class ValueFunction:
    """Values per state; `sup_error` records the accuracy guarantee when
    produced by value iteration (None for hand-built candidates)."""

    grid: Grid
    values: np.ndarray
    sup_error: float | None = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.size,):
            raise ValueError(f"values must have shape ({self.grid.size},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("value functions must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class PolicyCorrespondence:
    """Per-state optimal action sets as a boolean (state, action) mask."""

    grid: Grid
    action_grid: Grid
    optimal: np.ndarray
    tol: float

    def __post_init__(self):
        m = _frozen(self.optimal, dtype=bool)
        if m.shape != (self.grid.size, self.action_grid.size):
            raise ValueError("optimal-set mask has the wrong shape")
        if not m.any(axis=1).all():
            raise ValueError("every optimal set must be nonempty")
        object.__setattr__(self, "optimal", m)

    def actions(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.optimal[s])

    @property
    def tie_states(self) -> np.ndarray:
        """States whose optimal set is not a singleton."""
        return np.flatnonzero(self.optimal.sum(axis=1) > 1)


def _action_values(model: MdpModel, values: np.ndarray) -> np.ndarray:
    """q(s, a) = r(s, a) + beta * E[f(s') | s, a]; -inf at infeasible pairs."""
    q = model.reward + model.beta * (model.kernel.rows @ values)
    return np.where(model.feasible, q, -np.inf)


def bellman_h(model: MdpModel, s: int, a: int, f: ValueFunction) -> float:
    """One-step return of action a in state s against continuation f."""
    if not model.feasible[s, a]:
        raise ValueError(f"action {a} is not feasible in state {s}")
    row = model.kernel.rows[s, a]
    return float(model.reward[s, a] + model.beta * (row @ f.values))


def bellman_T(model: MdpModel, f: ValueFunction) -> ValueFunction:
    """Pointwise max of bellman_h over feasible actions."""
    if not f.grid.same_as(model.state_grid):
        raise ValueError("value candidate lives on the wrong grid")
    return ValueFunction(model.state_grid, _action_values(model, f.values).max(axis=1))


def value_iterate(
    model: MdpModel,
    eps: float = 1e-10,
    f0: ValueFunction | None = None,
    max_iter: int = 10**6,
) -> ValueFunction:
    """Iterate the fixed-point operator until the result is within eps of
    the true fixed point in sup norm.

    Starts from zero by default (any start converges; zero is
    reproducible).  Raises if the iteration cap is exceeded, reporting the
    last residual.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    v = np.zeros(model.n_states) if f0 is None else np.array(f0.values, float)
    threshold = eps * (1.0 - model.beta) / (2.0 * model.beta)
    rows = model.kernel.rows
    reward = model.reward
    feasible = model.feasible
    beta = model.beta
    residual = np.inf
    for _ in range(max_iter):
        q = np.where(feasible, reward + beta * (rows @ v), -np.inf)
        v_next = q.max(axis=1)
        residual = float(np.max(np.abs(v_next - v)))
        v = v_next
        if residual < threshold:
            return ValueFunction(model.state_grid, v, sup_error=eps)
    raise RuntimeError(
        f"value iteration did not converge in {max_iter} iterations "
        f"(last sup-norm residual {residual:.3e}, threshold {threshold:.3e})"
    )


def policy_correspondence(
    model: MdpModel,
    V: ValueFunction,
    tol: float = DEFAULT_ARGMAX_TOL,
) -> PolicyCorrespondence:
    """All feasible actions within tol of the per-state best one-step value.

    V should come from value_iterate with eps <= tol / 10 so the argmax
    band is meaningful; this is enforced when the accuracy is known.
    """
    if V.sup_error is not None and V.sup_error > tol / 10:
        raise ValueError(
            f"value accuracy {V.sup_error:g} is too loose for argmax tol {tol:g}"
        )
    q = _action_values(model, V.values)
    best = q.max(axis=1, keepdims=True)
    return PolicyCorrespondence(
        model.state_grid, model.action_grid, q >= best - tol, tol
    )


def policy_function(G: PolicyCorrespondence) -> PolicyFunction:
    """Largest action in each optimal set (the max tie-breaking rule)."""
    na = G.action_grid.size
    idx = na - 1 - np.argmax(G.optimal[:, ::-1], axis=1)
    return PolicyFunction(G.grid, G.action_grid, idx)


def solve(model: MdpModel, eps: float = 1e-10,
          tol: float = DEFAULT_ARGMAX_TOL):
    """Convenience pipeline: values, optimal sets, max-selection policy."""
    V = value_iterate(model, eps=eps)
    G = policy_correspondence(model, V, tol=tol)
    return V, G, policy_function(G)


def induced_kernel(model: MdpModel, g: PolicyFunction) -> InducedKernel:
    """State chain obtained by following the policy: row s = p(s, g(s), .)."""
    if not g.grid.same_as(model.state_grid):
        raise ValueError("policy lives on the wrong state grid")
    idx = g.indices
    if not model.feasible[np.arange(model.n_states), idx].all():
        s = int(np.argmin(model.feasible[np.arange(model.n_states), idx]))
        raise ValueError(f"policy action at state {s} is infeasible")
    rows = model.kernel.rows[np.arange(model.n_states), idx]
    return InducedKernel(model.state_grid, rows)
