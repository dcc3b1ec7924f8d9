"""Domain types for finite discounted decision problems on grids.

States and actions live on ordered finite grids (1-D, or a 2-D product of
1-D axes with C-order flat indexing).  Distributions, transition kernels
and models are plain numpy arrays wrapped in frozen dataclasses that
validate their invariants on construction and freeze their buffers, so
every object is safe to share across threads.

Continuous successor states produced by transition maps are discretized
with `allocate_offgrid`, which splits mass between the two bracketing
grid points so the mean is preserved exactly.  Mean preservation matters:
it is what keeps convex-order structure intact under discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MASS_TOL = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Grid:
    """Ordered finite grid of real points; one or two axes.

    For 2-D product grids, flat index i maps to axis indices
    (i // n2, i % n2) where n2 is the length of the second axis.
    """

    axes: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ValueError(f"grids must have 1 or 2 axes, got {len(self.axes)}")
        frozen = []
        for ax in self.axes:
            ax = _frozen(ax)
            if ax.ndim != 1 or ax.size < 1:
                raise ValueError("each grid axis must be a nonempty 1-D array")
            if ax.size > 1 and not np.all(np.diff(ax) > 0):
                raise ValueError("grid axis points must be strictly increasing")
            if not np.all(np.isfinite(ax)):
                raise ValueError("grid points must be finite")
            frozen.append(ax)
        object.__setattr__(self, "axes", tuple(frozen))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.size for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def points(self) -> np.ndarray:
        """The single axis of a 1-D grid."""
        if self.ndim != 1:
            raise ValueError("points is defined for 1-D grids only")
        return self.axes[0]

    def coords(self) -> np.ndarray:
        """(size, ndim) array of point coordinates in flat order."""
        if self.ndim == 1:
            return self.axes[0][:, None]
        a0, a1 = self.axes
        return np.column_stack(
            [np.repeat(a0, a1.size), np.tile(a1, a0.size)]
        )

    def flat_index(self, multi: tuple[int, ...]) -> int:
        return int(np.ravel_multi_index(multi, self.shape))

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(k) for k in np.unravel_index(flat, self.shape))

    def index_of(self, value: float) -> int:
        """Flat index of an on-grid value (1-D grids)."""
        pts = self.points
        i = int(np.searchsorted(pts, value))
        if i < pts.size and pts[i] == value:
            return i
        raise ValueError(f"{value!r} is not a grid point")

    def same_as(self, other: "Grid") -> bool:
        return self.shape == other.shape and all(
            np.array_equal(a, b) for a, b in zip(self.axes, other.axes)
        )


def make_uniform_grid(lo: float, hi: float, n: int) -> Grid:
    """n equally spaced points from lo to hi inclusive."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    if n < 2:
        raise ValueError(f"need at least 2 points, got n={n}")
    return Grid((np.linspace(lo, hi, n),))


def product_grid(axis0, axis1) -> Grid:
    """2-D product grid from two 1-D point sequences."""
    return Grid((np.asarray(axis0, float), np.asarray(axis1, float)))


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over a grid (flat indexing)."""

    grid: Grid
    mass: np.ndarray

    def __post_init__(self):
        m = _frozen(self.mass)
        if m.shape != (self.grid.size,):
            raise ValueError(
                f"mass must have shape ({self.grid.size},), got {m.shape}"
            )
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        total = float(m.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"masses must sum to 1 within {MASS_TOL}, got {total!r}")
        object.__setattr__(self, "mass", m)

    def mean(self):
        """Coordinatewise mean; a float for 1-D grids."""
        mu = self.mass @ self.grid.coords()
        return float(mu[0]) if self.grid.ndim == 1 else mu

    def expect(self, values) -> float:
        """Expectation of a function given by its values in flat order."""
        return float(self.mass @ np.asarray(values, float).ravel())


def point_mass(grid: Grid, flat_index: int) -> DiscreteDistribution:
    m = np.zeros(grid.size)
    m[flat_index] = 1.0
    return DiscreteDistribution(grid, m)


def distribution_from_points(points, mass) -> DiscreteDistribution:
    """Convenience: 1-D distribution from point values and weights."""
    return DiscreteDistribution(Grid((np.asarray(points, float),)), mass)


def allocate_offgrid(grid: Grid, x: float) -> DiscreteDistribution:
    """Mean-preserving two-point allocation of a scalar onto a 1-D grid.

    Values at or beyond the grid boundary clamp to the boundary point
    (clamping keeps kernels built from increasing maps monotone).
    Interior values split between the bracketing neighbors with
    linear-interpolation weights, so the mean equals x exactly.
    """
    return DiscreteDistribution(grid, allocation_weights(grid, np.array([x]))[0])


def allocation_weights(grid: Grid, xs: np.ndarray) -> np.ndarray:
    """Vectorized allocate_offgrid: rows of mass, one per entry of xs."""
    if grid.ndim != 1:
        raise ValueError("off-grid allocation is defined on 1-D grids")
    pts = grid.points
    xs = np.asarray(xs, float).ravel()
    if not np.all(np.isfinite(xs)):
        raise ValueError("cannot allocate non-finite values")
    n = pts.size
    out = np.zeros((xs.size, n))
    if n == 1:
        out[:, 0] = 1.0
        return out
    xc = np.clip(xs, pts[0], pts[-1])
    hi = np.clip(np.searchsorted(pts, xc, side="left"), 1, n - 1)
    lo = hi - 1
    exact = pts[hi] == xc
    w = np.where(exact, 1.0, (xc - pts[lo]) / (pts[hi] - pts[lo]))
    rows = np.arange(xs.size)
    np.add.at(out, (rows, lo), 1.0 - w)
    np.add.at(out, (rows, hi), w)
    return out


@dataclass(frozen=True)
class Kernel:
    """Transition law p(s, a, .): one distribution over states per (s, a)."""

    state_grid: Grid
    action_grid: Grid
    rows: np.ndarray  # (n_states, n_actions, n_states)

    def __post_init__(self):
        if self.action_grid.ndim != 1:
            raise ValueError("action grids must be 1-D")
        r = _frozen(self.rows)
        ns, na = self.state_grid.size, self.action_grid.size
        if r.shape != (ns, na, ns):
            raise ValueError(f"rows must have shape {(ns, na, ns)}, got {r.shape}")
        if np.any(r < 0):
            raise ValueError("kernel rows must be nonnegative")
        bad = np.abs(r.sum(axis=2) - 1.0) > MASS_TOL
        if np.any(bad):
            s, a = map(int, np.argwhere(bad)[0])
            raise ValueError(f"kernel row at (s={s}, a={a}) does not sum to 1")
        object.__setattr__(self, "rows", r)

    def row(self, s: int, a: int) -> DiscreteDistribution:
        return DiscreteDistribution(self.state_grid, self.rows[s, a])


@dataclass(frozen=True)
class InducedKernel:
    """State-only chain P(s, .) = p(s, g(s), .) obtained by following a policy."""

    grid: Grid
    rows: np.ndarray  # (n_states, n_states)

    def __post_init__(self):
        r = _frozen(self.rows)
        n = self.grid.size
        if r.shape != (n, n):
            raise ValueError(f"rows must have shape {(n, n)}, got {r.shape}")
        if np.any(r < 0) or np.any(np.abs(r.sum(axis=1) - 1.0) > MASS_TOL):
            raise ValueError("induced kernel rows must be probability vectors")
        object.__setattr__(self, "rows", r)

    def row(self, s: int) -> DiscreteDistribution:
        return DiscreteDistribution(self.grid, self.rows[s])


def kernel_from_map(
    state_grid: Grid,
    action_grid: Grid,
    m,
    noise: DiscreteDistribution,
) -> Kernel:
    """Kernel with rows sum_e noise(e) * allocate_offgrid(state_grid, m(s, a, e)).

    `m` maps (state value, action value, noise value) to the successor
    state value; it may be scalar or numpy-broadcastable.  Successors are
    clamped to the state grid and split mean-preservingly.
    """
    if state_grid.ndim != 1:
        raise ValueError("kernel_from_map needs a 1-D state grid")
    sv = state_grid.points[:, None, None]
    av = action_grid.points[None, :, None]
    ev = noise.grid.points[None, None, :]
    try:
        vals = np.asarray(m(sv, av, ev), float)
        vals = np.broadcast_to(vals, (state_grid.size, action_grid.size, ev.size)).copy()
    except Exception:
        vals = np.vectorize(m, otypes=[float])(sv, av, ev)
    if not np.all(np.isfinite(vals)):
        s, a, e = map(int, np.argwhere(~np.isfinite(vals))[0])
        raise ValueError(f"transition map returned a non-finite value at (s={s}, a={a}, e={e})")
    ns, na, ne = vals.shape
    w = allocation_weights(state_grid, vals.reshape(-1)).reshape(ns, na, ne, ns)
    rows = np.einsum("e,saen->san", noise.mass, w)
    return Kernel(state_grid, action_grid, rows)


@dataclass(frozen=True)
class MdpModel:
    """A discounted decision problem: grids, rewards, feasibility, kernel, discount."""

    state_grid: Grid
    action_grid: Grid
    reward: np.ndarray  # (n_states, n_actions); may be NaN at infeasible pairs
    feasible: np.ndarray  # (n_states, n_actions) bool
    kernel: Kernel
    beta: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"discount factor must lie in (0, 1), got {self.beta}")
        ns, na = self.state_grid.size, self.action_grid.size
        r = _frozen(self.reward)
        f = _frozen(self.feasible, dtype=bool)
        if r.shape != (ns, na) or f.shape != (ns, na):
            raise ValueError(f"reward and feasible must have shape {(ns, na)}")
        if not f.any(axis=1).all():
            s = int(np.argmin(f.any(axis=1)))
            raise ValueError(f"state {s} has no feasible action")
        if not np.all(np.isfinite(r[f])):
            s, a = map(int, np.argwhere(f & ~np.isfinite(r))[0])
            raise ValueError(f"reward is not finite at feasible pair (s={s}, a={a})")
        if not (self.kernel.state_grid.same_as(self.state_grid)
                and self.kernel.action_grid.same_as(self.action_grid)):
            raise ValueError("kernel grids do not match model grids")
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "feasible", f)

    @property
    def n_states(self) -> int:
        return self.state_grid.size

    @property
    def n_actions(self) -> int:
        return self.action_grid.size


@dataclass(frozen=True)
class PolicyFunction:
    """One action per state, stored as action-grid indices."""

    grid: Grid
    action_grid: Grid
    indices: np.ndarray = field(repr=False)  # (n_states,) int

    def __post_init__(self):
        idx = _frozen(self.indices, dtype=int)
        if idx.shape != (self.grid.size,):
            raise ValueError(f"indices must have shape ({self.grid.size},)")
        if np.any(idx < 0) or np.any(idx >= self.action_grid.size):
            raise ValueError("policy indices out of action-grid range")
        object.__setattr__(self, "indices", idx)

    @property
    def values(self) -> np.ndarray:
        """Action values g(s) in state flat order."""
        return self.action_grid.points[self.indices]
