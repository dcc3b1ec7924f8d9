"""Independent oracles used by the test suite.

These deliberately avoid the library's solution paths: values come from
exact policy enumeration with linear solves, stationary distributions
from a least-squares solve of the balance equations, and order verdicts
are cross-checked against sampled test functions.
"""

import itertools

import numpy as np
from scipy.sparse import csgraph, csr_matrix


def enumerate_values(model) -> np.ndarray:
    """Exact optimal values by enumerating all stationary deterministic
    policies and solving (I - beta P_g) v = r_g for each (batched)."""
    n = model.n_states
    feas = [np.flatnonzero(model.feasible[s]) for s in range(n)]
    combos = np.array(list(itertools.product(*feas)))
    states = np.arange(n)
    P = model.kernel.rows[states[None, :], combos]          # (ncombo, n, n)
    r = model.reward[states[None, :], combos]               # (ncombo, n)
    A = np.eye(n)[None, :, :] - model.beta * P
    v = np.linalg.solve(A, r[:, :, None])[:, :, 0]
    return v.max(axis=0)


def enumerate_policy(model, values: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Largest argmax action per state against oracle values."""
    q = model.reward + model.beta * (model.kernel.rows @ values)
    q = np.where(model.feasible, q, -np.inf)
    best = q.max(axis=1, keepdims=True)
    mask = q >= best - tol
    return model.n_actions - 1 - np.argmax(mask[:, ::-1], axis=1)


def stationary_linear_solve(rows: np.ndarray) -> np.ndarray:
    """Stationary distribution from the balance equations plus
    normalization (least squares; exact when the solution is unique)."""
    n = rows.shape[0]
    A = np.vstack([rows.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def recurrent_class_count(rows: np.ndarray) -> int:
    """Number of closed communicating classes of the chain."""
    adj = csr_matrix((rows > 0).astype(np.int8))
    ncomp, labels = csgraph.connected_components(adj, directed=True,
                                                 connection="strong")
    count = 0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        leaves = rows[idx].sum(axis=0) > 0
        if not np.any(leaves & (labels != c)):
            count += 1
    return count


def sample_increasing(rng, pts, count):
    """Random nondecreasing piecewise-linear functions on the grid."""
    steps = rng.uniform(0.0, 1.0, size=(count, pts.size - 1))
    start = rng.uniform(-1.0, 1.0, size=(count, 1))
    return np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1)


def sample_increasing_convex(rng, pts, count):
    """Random nondecreasing convex piecewise-linear functions."""
    dx = np.diff(pts)
    slopes = np.cumsum(rng.uniform(0.0, 1.0, size=(count, pts.size - 1)), axis=1)
    start = rng.uniform(-1.0, 1.0, size=(count, 1))
    return np.concatenate([start, start + np.cumsum(slopes * dx, axis=1)], axis=1)


def sample_convex(rng, pts, count):
    """Random convex piecewise-linear functions (slopes of any sign)."""
    dx = np.diff(pts)
    raw = np.sort(rng.normal(size=(count, pts.size - 1)), axis=1)
    start = rng.uniform(-1.0, 1.0, size=(count, 1))
    return np.concatenate([start, start + np.cumsum(raw * dx, axis=1)], axis=1)
