"""Structural hypothesis checkers: complementarity, monotone feasibility,
and the precondition bundles behind monotone-policy results.

All "increasing" notions are weak.  Increasing differences is checked on
adjacent index blocks only, which is sufficient by telescoping; convexity
of a function of one real grid variable uses the exact nondecreasing-slope
criterion, and joint convexity on product grids uses collinear
grid-midpoint triples (the exact second-difference test on uniform grids).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .core import DiscreteDistribution, Grid, Kernel, MdpModel
from .orders import (
    DEFAULT_TOL,
    OrderVerdict,
    Witness,
    _Scan,
    _state_steps,
    _upper_sums,
    fosd_compare,
    grid_midpoint_triples,
    monotone_kernel_check,
)


@dataclass(frozen=True)
class ConditionReport:
    """Named sub-verdicts of a precondition bundle; holds iff all hold."""

    conditions: tuple[tuple[str, OrderVerdict], ...]

    @property
    def holds(self) -> bool:
        return all(v.holds for _, v in self.conditions)

    def __getitem__(self, name: str) -> OrderVerdict:
        for key, verdict in self.conditions:
            if key == name:
                return verdict
        raise KeyError(name)

    def names(self) -> list[str]:
        return [key for key, _ in self.conditions]

    def failing(self) -> list[str]:
        return [key for key, v in self.conditions if not v.holds]

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "conditions": {key: v.to_dict() for key, v in self.conditions},
        }


def increasing_differences_check(table, tol: float = DEFAULT_TOL,
                                 mask=None) -> OrderVerdict:
    """Increasing differences of a 2-D table over two totally ordered axes.

    Checks the defining inequality on all adjacent 2x2 blocks (sufficient
    for all comparable pairs by telescoping).  With a mask, a block counts
    only when all four cells are present.
    """
    f = np.asarray(table, float)
    if f.ndim != 2:
        raise ValueError("expected a 2-D table")
    d = f[1:, 1:] - f[1:, :-1] - f[:-1, 1:] + f[:-1, :-1]
    if mask is not None:
        m = np.asarray(mask, bool)
        ok = m[1:, 1:] & m[1:, :-1] & m[:-1, 1:] & m[:-1, :-1]
        d = np.where(ok, d, 0.0)
    scan = _Scan(tol)
    nc = f.shape[1] - 1
    scan.observe(d, "adjacent mixed difference",
                 lambda i: (i // nc, i % nc))
    return scan.verdict()


def supermodularity_check_3(table, tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Pairwise increasing differences of a 3-D table (all three coordinate
    pairs, third coordinate fixed at every grid value)."""
    f = np.asarray(table, float)
    if f.ndim != 3:
        raise ValueError("expected a 3-D table")
    scan = _Scan(tol)
    pairs = [((0, 1), 2), ((0, 2), 1), ((1, 2), 0)]
    for (ax1, ax2), fixed in pairs:
        g = np.moveaxis(f, (ax1, ax2, fixed), (0, 1, 2))
        d = g[1:, 1:, :] - g[1:, :-1, :] - g[:-1, 1:, :] + g[:-1, :-1, :]
        shape = d.shape
        scan.observe(
            d, f"mixed difference in axes ({ax1},{ax2})",
            lambda i, shape=shape: tuple(int(x) for x in np.unravel_index(i, shape)),
        )
        if scan.witness is not None:
            break
    return scan.verdict()


def _state_action_id_slacks(table: np.ndarray, state_grid: Grid,
                            mask: np.ndarray | None):
    """Mixed differences of a (flat state, action) table over adjacent
    state steps (per axis for 2-D states) crossed with adjacent action steps.

    Yields (axis, lo_flat, slack_matrix, ok_matrix or None).
    """
    for axis, (lo, hi) in enumerate(_state_steps(state_grid)):
        d = (table[hi][:, 1:] - table[hi][:, :-1]
             - table[lo][:, 1:] + table[lo][:, :-1])
        ok = None
        if mask is not None:
            ok = (mask[hi][:, 1:] & mask[hi][:, :-1]
                  & mask[lo][:, 1:] & mask[lo][:, :-1])
        yield axis, lo, d, ok


def _table_id_verdict(table: np.ndarray, state_grid: Grid,
                      mask: np.ndarray | None, tol: float,
                      label: str) -> OrderVerdict:
    scan = _Scan(tol)
    for axis, lo, d, ok in _state_action_id_slacks(table, state_grid, mask):
        if ok is not None:
            d = np.where(ok, d, 0.0)
        nc = d.shape[1]
        scan.observe(
            d, label,
            lambda i, axis=axis, lo=lo, nc=nc: (
                f"state step (axis {axis})", int(lo[i // nc]), int(i % nc)),
        )
        if scan.witness is not None:
            break
    return scan.verdict()


def stochastically_increasing_differences_check(
    p: Kernel,
    tol: float = DEFAULT_TOL,
    max_upper_sets: int = 50_000,
    sample_seed: int = 0,
) -> OrderVerdict:
    """Does (s, a) -> p(s, a, B) have increasing differences for every upper
    set B of the state grid?

    1-D state grids are exact (thresholds).  On 2-D grids upper sets are
    staircases; all of them are enumerated while their count stays within
    `max_upper_sets`, otherwise a seeded random sample of staircases is
    used and the verdict is flagged `sampled`.
    """
    grid = p.state_grid
    scan = _Scan(tol)
    if grid.ndim == 1:
        upper = _upper_sums(p.rows)  # (s, a, threshold)
        pts = grid.points
        for t in range(grid.size):
            v = _table_id_verdict(upper[:, :, t], grid, None, tol,
                                  f"upper set [x >= {pts[t]:g}]")
            scan.merge(v, (float(pts[t]),))
            if scan.witness is not None:
                break
        return scan.verdict()

    n1, n2 = grid.shape
    rows4 = p.rows.reshape(p.rows.shape[0], p.rows.shape[1], n1, n2)
    suffix = np.zeros(rows4.shape[:2] + (n1, n2 + 1))
    suffix[..., :n2] = _upper_sums(rows4)
    total = comb(n1 + n2, n1)
    if total <= max_upper_sets:
        staircases = _all_staircases(n1, n2)
    else:
        rng = np.random.default_rng(sample_seed)
        draws = rng.integers(0, n2 + 1, size=(max_upper_sets, n1))
        staircases = np.sort(draws, axis=1)[:, ::-1]
        scan.sampled = True
    idx1 = np.arange(n1)
    for c in staircases:
        table = suffix[:, :, idx1, c].sum(axis=2)
        v = _table_id_verdict(table, grid, None, tol,
                              f"upper set (staircase {tuple(int(x) for x in c)})")
        scan.merge(v, tuple(int(x) for x in c))
        if scan.witness is not None:
            break
    return scan.verdict()


def _all_staircases(n1: int, n2: int):
    """All nonincreasing threshold sequences of length n1 over 0..n2."""
    out = []
    seq = [0] * n1

    def rec(i, cap):
        if i == n1:
            out.append(tuple(seq))
            return
        for c in range(cap, -1, -1):
            seq[i] = c
            rec(i + 1, c)

    rec(0, n2)
    return [np.array(c, int) for c in out]


def expanding_check(feasible, state_grid: Grid | None = None,
                    tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Feasible sets grow with the state: Gamma(s) a subset of Gamma(s')
    for every comparable s <= s' (adjacent steps suffice)."""
    f = np.asarray(feasible, bool)
    grid = state_grid if state_grid is not None else Grid((np.arange(f.shape[0], dtype=float),))
    scan = _Scan(tol)
    for axis, (lo, hi) in enumerate(_state_steps(grid)):
        lost = f[lo] & ~f[hi]
        if lost.any():
            i, a = map(int, np.argwhere(lost)[0])
            scan.witness = Witness(
                "feasibility expansion",
                (f"state step (axis {axis})", int(lo[i]), a), 1.0)
            break
    return scan.verdict()


def ascending_check(feasible, state_grid: Grid | None = None,
                    tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Strong-set-order monotonicity of the feasibility correspondence.

    For comparable states s <= s', b in Gamma(s) and b' in Gamma(s'):
    max{b, b'} must be feasible at s' and min{b, b'} at s.  Checked on
    adjacent comparable pairs; transitive because feasible sets are
    nonempty subsets of the action chain.
    """
    f = np.asarray(feasible, bool)
    grid = state_grid if state_grid is not None else Grid((np.arange(f.shape[0], dtype=float),))
    scan = _Scan(tol)
    if not f.any(axis=1).all():
        s = int(np.argmin(f.any(axis=1)))
        return OrderVerdict(False, Witness("nonempty feasible set", (s,), 1.0))
    for axis, (lo, hi) in enumerate(_state_steps(grid)):
        for s_lo, s_hi in zip(lo, hi):
            a_set, b_set = f[s_lo], f[s_hi]
            # b in Gamma(lo) above some b' in Gamma(hi), but b not in Gamma(hi)
            below_in_b = np.concatenate(([False], np.cumsum(b_set)[:-1] > 0))
            bad_max = a_set & ~b_set & below_in_b
            # b' in Gamma(hi) below some b in Gamma(lo), but b' not in Gamma(lo)
            above_in_a = np.concatenate((np.cumsum(a_set[::-1])[::-1][1:] > 0, [False]))
            bad_min = b_set & ~a_set & above_in_a
            if bad_max.any():
                i = int(np.argmax(bad_max))
                j = int(np.argmax(b_set))
                scan.witness = Witness(
                    "max selection feasible above",
                    (f"state step (axis {axis})", int(s_lo), j, i), 1.0)
                return scan.verdict()
            if bad_min.any():
                j = int(np.argmax(bad_min))
                i = int(np.argmax(a_set[::-1]))
                scan.witness = Witness(
                    "min selection feasible below",
                    (f"state step (axis {axis})", int(s_lo), j,
                     int(a_set.size - 1 - i)), 1.0)
                return scan.verdict()
    return scan.verdict()


def _reward_increasing_in_state(reward: np.ndarray, state_grid: Grid,
                                mask: np.ndarray, tol: float) -> OrderVerdict:
    scan = _Scan(tol)
    for axis, (lo, hi) in enumerate(_state_steps(state_grid)):
        d = reward[hi] - reward[lo]
        ok = mask[hi] & mask[lo]
        d = np.where(ok, d, 0.0)
        nc = d.shape[1]
        scan.observe(
            d, "reward nondecreasing in state",
            lambda i, axis=axis, lo=lo, nc=nc: (
                f"state step (axis {axis})", int(lo[i // nc]), int(i % nc)),
        )
        if scan.witness is not None:
            break
    return scan.verdict()


def monotone_policy_conditions_check(model: MdpModel,
                                     tol: float = DEFAULT_TOL) -> ConditionReport:
    """The standard complementarity bundle that makes optimal policies
    monotone in the state and in payoff-side parameters.

    Verifies: reward nondecreasing in the state and with increasing
    differences in (state, action); kernel monotone and with
    stochastically increasing differences; feasibility expanding and
    ascending.  Reward conditions are evaluated where the pairs involved
    are feasible.
    """
    conditions = (
        ("reward increasing in state",
         _reward_increasing_in_state(model.reward, model.state_grid,
                                     model.feasible, tol)),
        ("reward increasing differences",
         _table_id_verdict(model.reward, model.state_grid, model.feasible,
                           tol, "reward mixed difference")),
        ("kernel monotone", monotone_kernel_check(model.kernel, tol)),
        ("kernel stochastically increasing differences",
         stochastically_increasing_differences_check(model.kernel, tol)),
        ("feasibility expanding",
         expanding_check(model.feasible, model.state_grid, tol)),
        ("feasibility ascending",
         ascending_check(model.feasible, model.state_grid, tol)),
    )
    return ConditionReport(conditions)


def _increasing_along_axes(table: np.ndarray, label: str, tol: float) -> OrderVerdict:
    scan = _Scan(tol)
    for ax in range(table.ndim):
        d = np.diff(table, axis=ax)
        shape = d.shape
        scan.observe(
            d, f"{label} nondecreasing in axis {ax}",
            lambda i, shape=shape: tuple(int(x) for x in np.unravel_index(i, shape)),
        )
        if scan.witness is not None:
            break
    return scan.verdict()


def _jointly_convex(table: np.ndarray, axes_points: list[np.ndarray],
                    label: str, tol: float) -> OrderVerdict:
    z1, z2, z3 = grid_midpoint_triples(axes_points)
    scan = _Scan(tol)
    if z1[0].size:
        slack = 0.5 * (table[z1] + table[z3]) - table[z2]
        scan.observe(
            slack, f"{label} midpoint convexity",
            lambda i: tuple(int(ax[i]) for ax in z2),
        )
    return scan.verdict()


def _convex_increasing_in_state(reward: np.ndarray, pts: np.ndarray,
                                mask: np.ndarray, tol: float) -> tuple[OrderVerdict, OrderVerdict]:
    """Per-action checks that r(., a) is nondecreasing and slope-convex,
    restricted to contiguously feasible entries."""
    inc = _Scan(tol)
    cvx = _Scan(tol)
    for a in range(reward.shape[1]):
        col_ok = mask[:, a]
        col = np.where(col_ok, reward[:, a], np.nan)
        d = np.diff(col)
        fin = np.flatnonzero(np.isfinite(d))
        inc.observe(d[fin], "reward nondecreasing in state",
                    lambda i, a=a, fin=fin: (a, int(fin[i])))
        idx = np.flatnonzero(col_ok)
        if idx.size >= 3 and np.all(np.diff(idx) == 1):
            xs = pts[idx]
            cvx.observe(
                np.diff(np.diff(reward[idx, a]) / np.diff(xs)),
                "reward slope convexity", lambda i, a=a: (a, int(idx[i + 1])),
            )
    return inc.verdict(), cvx.verdict()


def transition_map_conditions_check(
    state_grid: Grid,
    action_grid: Grid,
    m_table,
    reward,
    feasible,
    noise_hi: DiscreteDistribution,
    noise_lo: DiscreteDistribution,
    tol: float = DEFAULT_TOL,
) -> ConditionReport:
    """Condition bundle under which a first-order upshift of the transition
    noise raises the optimal policy everywhere.

    m_table holds the successor map on (state, action, noise) grid values;
    it must be increasing, jointly midpoint-convex, and supermodular.  The
    reward must be convex and nondecreasing in the state with increasing
    differences, the feasible set state-independent, and the high noise
    law must first-order dominate the low one.
    """
    if state_grid.ndim != 1:
        raise ValueError("the transition-map bundle needs a 1-D state grid")
    m = np.asarray(m_table, float)
    r = np.asarray(reward, float)
    f = np.asarray(feasible, bool)
    if not noise_hi.grid.same_as(noise_lo.grid):
        raise ValueError("noise laws live on mismatched grids")
    expected = (state_grid.size, action_grid.size, noise_hi.grid.size)
    if m.shape != expected:
        raise ValueError(f"m_table must have shape {expected}, got {m.shape}")
    pts = [state_grid.points, action_grid.points, noise_hi.grid.points]
    state_independent = bool(np.all(f == f[0]))
    gamma_verdict = (
        OrderVerdict(True) if state_independent
        else OrderVerdict(False, Witness(
            "state-independent feasibility",
            tuple(int(x) for x in np.argwhere(f != f[0])[0]), 1.0))
    )
    r_inc, r_cvx = _convex_increasing_in_state(r, state_grid.points, f, tol)
    conditions = (
        ("map increasing", _increasing_along_axes(m, "map", tol)),
        ("map convex", _jointly_convex(m, pts, "map", tol)),
        ("map supermodular", supermodularity_check_3(m, tol)),
        ("reward increasing in state", r_inc),
        ("reward convex in state", r_cvx),
        ("reward increasing differences",
         _table_id_verdict(r, state_grid, f, tol, "reward mixed difference")),
        ("feasibility state-independent", gamma_verdict),
        ("noise dominance", fosd_compare(noise_hi, noise_lo, tol)),
    )
    return ConditionReport(conditions)
