"""Extremal stationary distributions of induced chains, and comparisons.

For a chain that preserves the increasing test family, the distribution
update is monotone in the first-order sense, so iterating it from the
point masses at the grid ends produces the least and greatest stationary
distributions (monotone iteration from the extremes of the lattice).
When the monotonicity precondition fails the same iterations still run,
but the outputs are only limits from below/above, flagged accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph, csr_matrix

from .core import DiscreteDistribution, InducedKernel, MdpModel
from .orders import (
    DEFAULT_TOL,
    OrderVerdict,
    _Scan,
    convexity_preserving_check,
    d_preserving_check,
    distribution_compare,
    kernel_compare,
)
from .solver import induced_kernel, policy_correspondence, policy_function, value_iterate
from .structure import ConditionReport
from .dynamics import (
    CheckReport,
    _policies_ordered_verdict,
    _policy_convex_verdict,
    _policy_monotone_verdict,
    _tie_notes,
)

DEFAULT_STATIONARY_TOL = 1e-10
DEFAULT_MAX_ITER = 10**5


@dataclass(frozen=True)
class StationaryPair:
    """Fixed points of the distribution update reached from the two ends.

    `extremal` records whether the monotone precondition held, in which
    case the pair really is the least/greatest stationary pair; otherwise
    the entries are just limits from below and above.
    """

    least: DiscreteDistribution
    greatest: DiscreteDistribution
    iterations: tuple[int, int]
    residual: tuple[float, float]
    extremal: bool

    @property
    def labels(self) -> tuple[str, str]:
        if self.extremal:
            return ("least", "greatest")
        return ("limit from below", "limit from above")

    def to_dict(self) -> dict:
        lo, hi = self.labels
        return {
            "extremal": self.extremal,
            lo.replace(" ", "-"): self.least.mass.tolist(),
            hi.replace(" ", "-"): self.greatest.mass.tolist(),
            "iterations": list(self.iterations),
            "residual": list(self.residual),
        }


def _tv(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(a - b).sum())


def _iterate_to_fixed_point(rows: np.ndarray, start: np.ndarray,
                            tol: float, max_iter: int):
    mass = start
    for it in range(1, max_iter + 1):
        nxt = mass @ rows
        nxt = nxt / nxt.sum()  # cancel fp drift; stochastic rows conserve mass
        res = _tv(mass, nxt)
        mass = nxt
        if res < tol:
            return mass, it, res
    raise RuntimeError(
        f"stationary iteration did not converge in {max_iter} steps "
        f"(last total-variation residual {res:.3e}, tolerance {tol:.3e})"
    )


def stationary_extremes(
    P: InducedKernel,
    tol: float = DEFAULT_STATIONARY_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> StationaryPair:
    """Iterate the distribution update from the bottom and top point masses
    until the total-variation residual drops below tol."""
    if P.grid.ndim != 1:
        raise ValueError("stationary comparisons are restricted to 1-D state grids")
    n = P.grid.size
    lo0 = np.zeros(n)
    lo0[0] = 1.0
    hi0 = np.zeros(n)
    hi0[-1] = 1.0
    lo, it_lo, res_lo = _iterate_to_fixed_point(P.rows, lo0, tol, max_iter)
    hi, it_hi, res_hi = _iterate_to_fixed_point(P.rows, hi0, tol, max_iter)
    monotone = d_preserving_check(P, "increasing").holds
    return StationaryPair(
        least=DiscreteDistribution(P.grid, lo),
        greatest=DiscreteDistribution(P.grid, hi),
        iterations=(it_lo, it_hi),
        residual=(res_lo, res_hi),
        extremal=monotone,
    )


def is_irreducible(P: InducedKernel, atol: float = 0.0) -> bool:
    """Single strongly connected communication class under positive moves."""
    adj = csr_matrix((P.rows > atol).astype(np.int8))
    ncomp, _ = csgraph.connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


def check_stationary_dominance(
    model2: MdpModel,
    model1: MdpModel,
    order: str = "st",
    tol: float = DEFAULT_TOL,
    stationary_tol: float = DEFAULT_STATIONARY_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    eps: float | None = None,
) -> CheckReport:
    """Extremal stationary distributions rise with the transition kernel.

    order 'st': both induced chains must preserve the increasing family,
    policies must be nondecreasing with the high one above the low one,
    and the kernels rowwise first-order ordered; the extremes are then
    compared in the first-order sense.  order 'cx': additionally both
    kernels convexity-preserving and both policies convex; the kernels are
    compared in the convex order and the extremes in the
    increasing-convex order.
    """
    if order not in ("st", "cx"):
        raise ValueError("order must be 'st' or 'cx'")
    if model2.state_grid.ndim != 1:
        raise ValueError("stationary comparisons are restricted to 1-D state grids")
    if not (model2.state_grid.same_as(model1.state_grid)
            and model2.action_grid.same_as(model1.action_grid)):
        raise ValueError("models must share state and action grids")
    eps = min(1e-10, tol / 10) if eps is None else eps
    solved = []
    for m in (model2, model1):
        V = value_iterate(m, eps=eps)
        G = policy_correspondence(m, V, tol=tol)
        solved.append((G, policy_function(G)))
    (G2, g2), (G1, g1) = solved
    P2 = induced_kernel(model2, g2)
    P1 = induced_kernel(model1, g1)

    conditions = [
        ("chain preserves increasing family (high)",
         d_preserving_check(P2, "increasing", tol)),
        ("chain preserves increasing family (low)",
         d_preserving_check(P1, "increasing", tol)),
        ("policy nondecreasing in state (high)", _policy_monotone_verdict(g2, tol)),
        ("policy nondecreasing in state (low)", _policy_monotone_verdict(g1, tol)),
        ("policy dominance", _policies_ordered_verdict(
            g2, g1, tol, "high policy above low policy")),
        ("kernel dominance", kernel_compare(
            model2.kernel, model1.kernel, order, model2.feasible, tol)),
    ]
    if order == "cx":
        conditions += [
            ("kernel convexity-preserving (high)",
             convexity_preserving_check(model2.kernel, tol)),
            ("kernel convexity-preserving (low)",
             convexity_preserving_check(model1.kernel, tol)),
            ("policy convex in state (high)", _policy_convex_verdict(g2, tol)),
            ("policy convex in state (low)", _policy_convex_verdict(g1, tol)),
        ]
    pre = ConditionReport(tuple(conditions))

    pair2 = stationary_extremes(P2, stationary_tol, max_iter)
    pair1 = stationary_extremes(P1, stationary_tol, max_iter)
    compare_order = "st" if order == "st" else "icx"
    scan = _Scan(tol)
    scan.merge(distribution_compare(pair2.least, pair1.least, compare_order, tol),
               ("least",))
    if scan.witness is None:
        scan.merge(
            distribution_compare(pair2.greatest, pair1.greatest, compare_order, tol),
            ("greatest",))
    notes = _tie_notes([model2, model1], [G2, G1])
    notes += tuple(
        f"{side} chain: {lab} iterations={it}, residual={res:.3e}"
        for side, pair in (("high", pair2), ("low", pair1))
        for lab, it, res in zip(pair.labels, pair.iterations, pair.residual)
    )
    return CheckReport("stationary-dominance", pre, scan.verdict(), notes)
