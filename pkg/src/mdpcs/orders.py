"""Stochastic-order comparators and kernel property certificates.

Everything reduces to finitely many generator test functions:

* increasing functions on a grid are generated by upper-set indicators;
* convex functions on a 1-D grid by hinges (x - t)+ plus and minus the
  identity; increasing convex functions by hinges plus the identity.

On 2-D product grids the first-order comparison minimizes
mu2(U) - mu1(U) over all upper sets U exactly: upper sets are monotone
staircases, the objective separates across rows, and a small dynamic
program finds the minimizing staircase (returned as the witness).

Every check takes a tolerance (default 1e-9).  Violations not exceeding
the tolerance leave the verdict holding but are recorded in
`near_violation` so tolerance artifacts can be told apart from genuine
order failures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution, Grid, InducedKernel, Kernel

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Witness:
    """Where an order check failed: test function, location, magnitude."""

    test_function: str
    where: tuple
    magnitude: float

    def to_dict(self) -> dict:
        return {
            "test_function": self.test_function,
            "where": list(self.where),
            "magnitude": self.magnitude,
        }


@dataclass(frozen=True)
class OrderVerdict:
    holds: bool
    witness: Witness | None = None
    near_violation: float = 0.0
    sampled: bool = False

    def __post_init__(self):
        if self.holds and self.witness is not None:
            raise ValueError("a holding verdict cannot carry a witness")
        if not self.holds and self.witness is None:
            raise ValueError("a failing verdict must carry a witness")

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "near_violation": self.near_violation,
            "sampled": self.sampled,
        }


class _Scan:
    """Accumulates slack observations; want slack >= 0 up to tol everywhere."""

    def __init__(self, tol: float):
        self.tol = tol
        self.witness: Witness | None = None
        self.near = 0.0
        self.sampled = False

    def observe(self, slack, test_function: str, locate) -> None:
        """slack: array of lhs-rhs values; locate(i) -> witness coordinates."""
        s = np.asarray(slack, float).ravel()
        if s.size == 0:
            return
        if self.witness is None:
            viol = s < -self.tol
            if viol.any():
                i = int(np.argmax(viol))
                self.witness = Witness(test_function, locate(i), float(-s[i]))
                return
        self.near = max(self.near, min(float(-s.min()), self.tol))
        if self.near < 0:
            self.near = 0.0

    def merge(self, v: OrderVerdict, where: tuple) -> None:
        if not v.holds and self.witness is None:
            self.witness = Witness(v.witness.test_function, where, v.witness.magnitude)
        self.near = max(self.near, v.near_violation)
        self.sampled = self.sampled or v.sampled

    def verdict(self) -> OrderVerdict:
        if self.witness is not None:
            return OrderVerdict(False, self.witness, self.near, self.sampled)
        return OrderVerdict(True, None, max(self.near, 0.0), self.sampled)


def _upper_sums(diff: np.ndarray) -> np.ndarray:
    """Reversed cumulative sums along the last axis: mass on {x >= t}."""
    return np.flip(np.cumsum(np.flip(diff, -1), -1), -1)


def _staircase_min(diff2d: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Exact min of sum over upper sets of a signed 2-D mass table.

    Upper sets of the product order are staircases: per-row thresholds
    c[0] >= c[1] >= ... (threshold n2 means the row is empty).  Returns
    the minimum and the minimizing thresholds.
    """
    n1, n2 = diff2d.shape
    d = np.zeros((n1, n2 + 1))
    d[:, :n2] = _upper_sums(diff2d)
    best = d[0].copy()
    choice = np.zeros((n1, n2 + 1), dtype=int)
    for i in range(1, n1):
        sm = np.empty(n2 + 1)
        am = np.empty(n2 + 1, dtype=int)
        sm[n2], am[n2] = best[n2], n2
        for c in range(n2 - 1, -1, -1):
            if best[c] <= sm[c + 1]:
                sm[c], am[c] = best[c], c
            else:
                sm[c], am[c] = sm[c + 1], am[c + 1]
        choice[i] = am
        best = d[i] + sm
    c = int(np.argmin(best))
    total = float(best[c])
    thresholds = [0] * n1
    thresholds[-1] = c
    for i in range(n1 - 1, 0, -1):
        thresholds[i - 1] = int(choice[i][thresholds[i]])
    return total, tuple(thresholds)


def _fosd_scan(grid: Grid, mass2: np.ndarray, mass1: np.ndarray, scan: _Scan) -> None:
    diff = mass2 - mass1
    if grid.ndim == 1:
        pts = grid.points
        u = _upper_sums(diff)
        scan.observe(u, "upper-set indicator", lambda i: (float(pts[i]),))
    else:
        total, thresholds = _staircase_min(diff.reshape(grid.shape))
        scan.observe(np.array([total]), "upper-set indicator (staircase)",
                     lambda i: thresholds)


def _require_same_grid(mu2: DiscreteDistribution, mu1: DiscreteDistribution) -> Grid:
    if not mu2.grid.same_as(mu1.grid):
        raise ValueError("distributions live on mismatched grids")
    return mu2.grid


def fosd_compare(mu2: DiscreteDistribution, mu1: DiscreteDistribution,
                 tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Does mu2 first-order stochastically dominate mu1?

    True iff mu2(U) >= mu1(U) for every upper set U, equivalently iff
    every increasing function has weakly higher expectation under mu2.
    """
    grid = _require_same_grid(mu2, mu1)
    scan = _Scan(tol)
    _fosd_scan(grid, mu2.mass, mu1.mass, scan)
    return scan.verdict()


def _hinge_gaps(pts: np.ndarray, diff: np.ndarray) -> np.ndarray:
    """E[(X-t)+] differences at every grid threshold t."""
    hinges = np.maximum(pts[None, :] - pts[:, None], 0.0)
    return hinges @ diff


def cx_compare(mu2: DiscreteDistribution, mu1: DiscreteDistribution,
               tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Convex stochastic order on a 1-D grid: equal means and higher hinge
    expectations E[(X-t)+] at every grid threshold."""
    grid = _require_same_grid(mu2, mu1)
    if grid.ndim != 1:
        raise ValueError("the convex order comparison is 1-D only")
    pts = grid.points
    diff = mu2.mass - mu1.mass
    gap = float(pts @ diff)
    if abs(gap) > tol:
        return OrderVerdict(False, Witness("mean equality", (), abs(gap)))
    scan = _Scan(tol)
    scan.near = abs(gap)
    scan.observe(_hinge_gaps(pts, diff), "hinge (x-t)+",
                 lambda i: (float(pts[i]),))
    return scan.verdict()


def icx_compare(mu2: DiscreteDistribution, mu1: DiscreteDistribution,
                tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Increasing-convex order on a 1-D grid: higher hinge expectations at
    every grid threshold plus the mean inequality (the threshold below the
    grid minimum reduces to it)."""
    grid = _require_same_grid(mu2, mu1)
    if grid.ndim != 1:
        raise ValueError("the increasing-convex order comparison is 1-D only")
    pts = grid.points
    diff = mu2.mass - mu1.mass
    scan = _Scan(tol)
    scan.observe(np.array([float(pts @ diff)]), "mean (hinge below grid)",
                 lambda i: ())
    scan.observe(_hinge_gaps(pts, diff), "hinge (x-t)+",
                 lambda i: (float(pts[i]),))
    return scan.verdict()


_COMPARATORS = {"st": fosd_compare, "cx": cx_compare, "icx": icx_compare}


def distribution_compare(mu2: DiscreteDistribution, mu1: DiscreteDistribution,
                         order: str, tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Dispatch on order name: 'st', 'cx' or 'icx'."""
    try:
        cmp = _COMPARATORS[order]
    except KeyError:
        raise ValueError(f"unknown stochastic order {order!r}") from None
    return cmp(mu2, mu1, tol)


def kernel_compare(p2: Kernel, p1: Kernel, order: str,
                   feasible: np.ndarray | None = None,
                   tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Rowwise kernel dominance: p2(s,a,.) >= p1(s,a,.) in the given order
    at every (feasible) state-action pair."""
    if order not in _COMPARATORS:
        raise ValueError(f"unknown stochastic order {order!r}")
    if not (p2.state_grid.same_as(p1.state_grid)
            and p2.action_grid.same_as(p1.action_grid)):
        raise ValueError("kernels live on mismatched grids")
    ns, na = p2.state_grid.size, p2.action_grid.size
    if feasible is not None:
        feasible = np.asarray(feasible, bool)
        if feasible.shape != (ns, na):
            raise ValueError("feasibility mask shape mismatch")
    scan = _Scan(tol)
    grid = p2.state_grid
    for s in range(ns):
        for a in range(na):
            if feasible is not None and not feasible[s, a]:
                continue
            v = _row_compare(grid, p2.rows[s, a], p1.rows[s, a], order, tol)
            scan.merge(v, (s, a))
            if scan.witness is not None:
                return scan.verdict()
    return scan.verdict()


def _row_compare(grid: Grid, m2: np.ndarray, m1: np.ndarray, order: str,
                 tol: float) -> OrderVerdict:
    scan = _Scan(tol)
    if order == "st":
        _fosd_scan(grid, m2, m1, scan)
        return scan.verdict()
    pts = grid.points
    diff = m2 - m1
    gap = float(pts @ diff)
    if order == "cx":
        if abs(gap) > tol:
            return OrderVerdict(False, Witness("mean equality", (), abs(gap)))
        scan.near = abs(gap)
    else:
        scan.observe(np.array([gap]), "mean (hinge below grid)", lambda i: ())
    scan.observe(_hinge_gaps(pts, diff), "hinge (x-t)+", lambda i: (float(pts[i]),))
    return scan.verdict()


def _state_steps(grid: Grid):
    """Adjacent increasing steps (flat_lo, flat_hi) of the state order."""
    if grid.ndim == 1:
        n = grid.size
        lo = np.arange(n - 1)
        return [(lo, lo + 1)]
    n1, n2 = grid.shape
    flat = np.arange(n1 * n2).reshape(n1, n2)
    return [
        (flat[:-1, :].ravel(), flat[1:, :].ravel()),   # step in axis 0
        (flat[:, :-1].ravel(), flat[:, 1:].ravel()),   # step in axis 1
    ]


def monotone_kernel_check(p: Kernel, tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Is p(s,a,.) first-order nondecreasing along every coordinatewise
    increasing step in (s, a)?  Adjacent steps suffice by transitivity."""
    scan = _Scan(tol)
    grid = p.state_grid
    na = p.action_grid.size
    # action steps
    for s in range(grid.size):
        for a in range(na - 1):
            v = _row_compare(grid, p.rows[s, a + 1], p.rows[s, a], "st", tol)
            scan.merge(v, ("action step", s, a))
            if scan.witness is not None:
                return scan.verdict()
    # state steps
    for axis, (lo, hi) in enumerate(_state_steps(grid)):
        for s_lo, s_hi in zip(lo, hi):
            for a in range(na):
                v = _row_compare(grid, p.rows[s_hi, a], p.rows[s_lo, a], "st", tol)
                scan.merge(v, (f"state step (axis {axis})", int(s_lo), a))
                if scan.witness is not None:
                    return scan.verdict()
    return scan.verdict()


def axis_midpoint_triples(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All index triples i < j < k with pts[j] the exact midpoint of pts[i], pts[k]."""
    pts = np.asarray(pts, float)
    n = pts.size
    ii, jj, kk = [], [], []
    for i in range(n):
        for k in range(i + 2, n):
            mid = 0.5 * (pts[i] + pts[k])
            j = int(np.searchsorted(pts, mid))
            for cand in (j - 1, j):
                if 0 <= cand < n and abs(pts[cand] - mid) <= 1e-12 * max(1.0, abs(mid)):
                    ii.append(i)
                    jj.append(cand)
                    kk.append(k)
                    break
    return np.array(ii, int), np.array(jj, int), np.array(kk, int)


def grid_midpoint_triples(axes) -> tuple[tuple, tuple, tuple]:
    """Collinear grid triples (z1, mid, z3) of a product grid, z1 != z3.

    Enumerates every pair of grid points whose exact midpoint is itself a
    grid point.  Returns three index tuples (one index array per axis)
    suitable for fancy indexing into a table of the product shape.
    """
    from itertools import combinations, product as iterproduct

    d = len(axes)
    moving = [axis_midpoint_triples(np.asarray(ax, float)) for ax in axes]
    degs = [np.arange(len(np.asarray(ax))) for ax in axes]
    parts: list[list[list[np.ndarray]]] = [[[] for _ in range(d)] for _ in range(3)]
    for r in range(1, d + 1):
        for axes_moving in combinations(range(d), r):
            if any(moving[m][0].size == 0 for m in axes_moving):
                continue
            # one orientation per unordered triple: first moving axis ascends
            for signs in iterproduct(*([(1,)] + [(1, -1)] * (r - 1))):
                sign_of = dict(zip(axes_moving, signs))
                comps = []
                for ax in range(d):
                    if ax in sign_of:
                        i, j, k = moving[ax]
                        comps.append((i, j, k) if sign_of[ax] == 1 else (k, j, i))
                    else:
                        comps.append((degs[ax],) * 3)
                mesh = np.meshgrid(*[np.arange(c[0].size) for c in comps],
                                   indexing="ij")
                for ax in range(d):
                    sel = mesh[ax].ravel()
                    for leg in range(3):
                        parts[leg][ax].append(comps[ax][leg][sel])
    empty = np.array([], dtype=int)
    out = []
    for leg in range(3):
        out.append(tuple(
            np.concatenate(p) if p else empty for p in parts[leg]
        ))
    return out[0], out[1], out[2]


def convexity_preserving_check(p: Kernel, tol: float = DEFAULT_TOL,
                               feasible: np.ndarray | None = None) -> OrderVerdict:
    """Is (s,a) -> E[f | p(s,a,.)] midpoint-convex for every convex generator
    f (identity, negated identity, hinges at all grid thresholds)?

    1-D state grids only: hinges plus the signed identity generate the
    convex cone on the line.
    """
    if p.state_grid.ndim != 1:
        raise ValueError("convexity preservation is checked on 1-D state grids only")
    pts = p.state_grid.points
    apts = p.action_grid.points
    z1, z2, z3 = grid_midpoint_triples([pts, apts])
    si, ai = z1
    sj, aj = z2
    sk, ak = z3
    if feasible is not None:
        feasible = np.asarray(feasible, bool)
        ok = feasible[si, ai] & feasible[sj, aj] & feasible[sk, ak]
        si, sj, sk = si[ok], sj[ok], sk[ok]
        ai, aj, ak = ai[ok], aj[ok], ak[ok]
    scan = _Scan(tol)
    generators = [("identity", pts), ("negated identity", -pts)]
    generators += [(f"hinge (x-{t:g})+", np.maximum(pts - t, 0.0)) for t in pts]
    for name, f in generators:
        table = p.rows @ f
        slack = 0.5 * (table[si, ai] + table[sk, ak]) - table[sj, aj]
        scan.observe(
            slack, name,
            lambda i: ((float(pts[si[i]]), float(apts[ai[i]])),
                       (float(pts[sj[i]]), float(apts[aj[i]])),
                       (float(pts[sk[i]]), float(apts[ak[i]]))),
        )
        if scan.witness is not None:
            break
    return scan.verdict()


def _slope_convexity_slack(xs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Nonnegative iff the piecewise-linear extension of values is convex."""
    dx = np.diff(xs)
    slopes = np.diff(values) / dx
    return np.diff(slopes)


def d_preserving_check(P: InducedKernel, family: str,
                       tol: float = DEFAULT_TOL) -> OrderVerdict:
    """Does the induced chain map the test family into itself?

    family 'increasing': rows must be first-order nondecreasing in the
    state (adjacent steps; 1-D or 2-D grids).  family 'increasing-convex':
    for every generator (identity and hinges), s -> E[f | P(s,.)] must be
    nondecreasing and convex (1-D grids only).
    """
    grid = P.grid
    scan = _Scan(tol)
    if family == "increasing":
        for axis, (lo, hi) in enumerate(_state_steps(grid)):
            for s_lo, s_hi in zip(lo, hi):
                v = _row_compare(grid, P.rows[s_hi], P.rows[s_lo], "st", tol)
                scan.merge(v, (f"state step (axis {axis})", int(s_lo)))
                if scan.witness is not None:
                    return scan.verdict()
        return scan.verdict()
    if family != "increasing-convex":
        raise ValueError(f"unsupported test family {family!r}")
    if grid.ndim != 1:
        raise ValueError("the increasing-convex family needs a 1-D state grid")
    pts = grid.points
    generators = [("identity", pts)]
    generators += [(f"hinge (x-{t:g})+", np.maximum(pts - t, 0.0)) for t in pts]
    for name, f in generators:
        phi = P.rows @ f
        scan.observe(np.diff(phi), f"{name}: monotone leg",
                     lambda i: (float(pts[i]),))
        if scan.witness is not None:
            break
        scan.observe(_slope_convexity_slack(pts, phi), f"{name}: convex leg",
                     lambda i: (float(pts[i + 1]),))
        if scan.witness is not None:
            break
    return scan.verdict()
