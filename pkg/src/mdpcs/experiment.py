"""Batch experiment runner: parse a config, build the instance family,
run the requested checks, and emit machine-readable reports.

The config is JSON with a documented schema (see README).  Runs are
bit-reproducible: no environment state enters the results, floats are
written with 17 significant digits, and the only nondeterministic values
(wall-clock timestamp and elapsed time) are isolated under the single
top-level report key "timing".
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import DiscreteDistribution, Grid, Kernel, MdpModel, point_mass, product_grid
from .dynamics import (
    check_initial_state_monotonicity,
    check_parameter_monotonicity,
    check_transition_monotonicity,
    trajectory,
)
from .models import (
    build_capital,
    build_pricing,
    build_randomwalk,
    build_savings,
    cara_utility,
    clamped_additive_map_table,
    crra_utility,
    HaraUtility,
    linear_demand_table,
    quadratic_utility,
)
from .solver import induced_kernel, policy_correspondence, policy_function, value_iterate
from .stationary import check_stationary_dominance
from .structure import monotone_policy_conditions_check, transition_map_conditions_check


class ConfigError(ValueError):
    """Invalid experiment config; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config error at {field}: {message}")


def _need(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return d[key]


def _number(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(x).__name__}")
    return float(x)


def _array(x, path: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(x, float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a numeric array") from None
    if arr.ndim != ndim:
        raise ConfigError(path, f"expected a {ndim}-D array, got {arr.ndim}-D")
    return arr


def _distribution(d, path: str) -> DiscreteDistribution:
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object with 'points' and 'mass'")
    pts = _array(_need(d, "points", path), f"{path}.points", 1)
    mass = _array(_need(d, "mass", path), f"{path}.mass", 1)
    try:
        return DiscreteDistribution(Grid((pts,)), mass)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _utility(d, path: str) -> HaraUtility:
    fam = _need(d, "family", path)
    try:
        if fam == "crra":
            return crra_utility(_number(_need(d, "sigma", path), f"{path}.sigma"))
        if fam == "cara":
            return cara_utility(_number(_need(d, "alpha", path), f"{path}.alpha"))
        if fam == "quadratic":
            return quadratic_utility(_number(_need(d, "bliss", path), f"{path}.bliss"))
        if fam == "hara":
            return HaraUtility(_number(_need(d, "a", path), f"{path}.a"),
                               _number(_need(d, "b", path), f"{path}.b"))
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
    raise ConfigError(f"{path}.family", f"unknown utility family {fam!r}")


@dataclass
class BuiltModel:
    model: MdpModel
    context: dict


def build_model_from_config(model_cfg: dict, path: str = "model") -> BuiltModel:
    if not isinstance(model_cfg, dict):
        raise ConfigError(path, "expected an object")
    builder = _need(model_cfg, "builder", path)
    params = _need(model_cfg, "params", path)
    if not isinstance(params, dict):
        raise ConfigError(f"{path}.params", "expected an object")
    p = f"{path}.params"
    beta = _number(_need(params, "beta", p), f"{p}.beta")
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"{p}.beta", f"discount factor must lie in (0, 1), got {beta}")
    try:
        if builder == "table":
            return _build_table(params, p, beta)
        if builder == "randomwalk":
            return _build_randomwalk_cfg(params, p, beta)
        if builder == "pricing":
            return _build_pricing_cfg(params, p, beta)
        if builder == "savings":
            return _build_savings_cfg(params, p, beta)
        if builder == "capital":
            return _build_capital_cfg(params, p, beta)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(p, str(e)) from None
    raise ConfigError(f"{path}.builder", f"unknown builder {builder!r}")


def _build_table(params, p, beta) -> BuiltModel:
    if "state_axes" in params:
        axes = params["state_axes"]
        if not isinstance(axes, list) or len(axes) != 2:
            raise ConfigError(f"{p}.state_axes", "expected two axes")
        state_grid = product_grid(_array(axes[0], f"{p}.state_axes[0]", 1),
                                  _array(axes[1], f"{p}.state_axes[1]", 1))
    else:
        state_grid = Grid((_array(_need(params, "state_points", p),
                                  f"{p}.state_points", 1),))
    action_grid = Grid((_array(_need(params, "action_points", p),
                               f"{p}.action_points", 1),))
    reward = _array(_need(params, "reward", p), f"{p}.reward", 2)
    rows = np.asarray(_need(params, "kernel", p), float)
    if rows.ndim != 3:
        raise ConfigError(f"{p}.kernel", "expected a 3-D array of rows")
    if "feasible" in params and params["feasible"] is not None:
        feasible = np.asarray(params["feasible"], bool)
    else:
        feasible = np.ones(reward.shape, dtype=bool)
    kernel = Kernel(state_grid, action_grid, rows)
    model = MdpModel(state_grid, action_grid, reward, feasible, kernel, beta)
    return BuiltModel(model, {})


def _build_randomwalk_cfg(params, p, beta) -> BuiltModel:
    state_grid = Grid((_array(_need(params, "state_points", p),
                              f"{p}.state_points", 1),))
    action_grid = Grid((_array(_need(params, "action_points", p),
                               f"{p}.action_points", 1),))
    noise = _distribution(_need(params, "noise", p), f"{p}.noise")
    model = build_randomwalk(
        state_grid, action_grid,
        _array(_need(params, "state_reward", p), f"{p}.state_reward", 1),
        _array(_need(params, "action_cost", p), f"{p}.action_cost", 1),
        noise, beta,
    )
    return BuiltModel(model, {"noise": noise})


def _build_pricing_cfg(params, p, beta) -> BuiltModel:
    reference_grid = Grid((_array(_need(params, "reference_points", p),
                                  f"{p}.reference_points", 1),))
    price_grid = Grid((_array(_need(params, "price_points", p),
                              f"{p}.price_points", 1),))
    demand_cfg = _need(params, "demand", p)
    if isinstance(demand_cfg, dict):
        fam = _need(demand_cfg, "family", f"{p}.demand")
        if fam != "linear":
            raise ConfigError(f"{p}.demand.family", f"unknown demand family {fam!r}")
        demand = linear_demand_table(
            reference_grid, price_grid,
            _number(_need(demand_cfg, "intercept", f"{p}.demand"), f"{p}.demand.intercept"),
            _number(_need(demand_cfg, "reference_slope", f"{p}.demand"),
                    f"{p}.demand.reference_slope"),
            _number(_need(demand_cfg, "price_slope", f"{p}.demand"),
                    f"{p}.demand.price_slope"),
        )
    else:
        demand = _array(demand_cfg, f"{p}.demand", 2)
    memory = _distribution(_need(params, "memory", p), f"{p}.memory")
    model = build_pricing(reference_grid, price_grid, demand, memory, beta)
    return BuiltModel(model, {"demand": demand, "memory": memory})


def _build_savings_cfg(params, p, beta) -> BuiltModel:
    income = _distribution(_need(params, "income", p), f"{p}.income")
    utility = _utility(_need(params, "utility", p), f"{p}.utility")
    n_actions = _need(params, "n_actions", p)
    if not isinstance(n_actions, int) or isinstance(n_actions, bool):
        raise ConfigError(f"{p}.n_actions", "expected an integer")
    refinement = params.get("state_refinement", 1)
    if not isinstance(refinement, int) or isinstance(refinement, bool) or refinement < 1:
        raise ConfigError(f"{p}.state_refinement", "expected a positive integer")
    model = build_savings(
        utility,
        _number(_need(params, "gross_return", p), f"{p}.gross_return"),
        income,
        _number(_need(params, "borrow_limit", p), f"{p}.borrow_limit"),
        _number(_need(params, "savings_cap", p), f"{p}.savings_cap"),
        beta,
        n_actions,
        refinement,
    )
    return BuiltModel(model, {"income": income, "utility": utility})


def _build_capital_cfg(params, p, beta) -> BuiltModel:
    cap_pts = _array(_need(params, "capital_points", p), f"{p}.capital_points", 1)
    shk_pts = _array(_need(params, "shock_points", p), f"{p}.shock_points", 1)
    cost_cfg = _need(params, "adjustment_cost", p)
    if isinstance(cost_cfg, dict):
        fam = _need(cost_cfg, "family", f"{p}.adjustment_cost")
        if fam != "quadratic":
            raise ConfigError(f"{p}.adjustment_cost.family",
                              f"unknown adjustment-cost family {fam!r}")
        scale = _number(_need(cost_cfg, "scale", f"{p}.adjustment_cost"),
                        f"{p}.adjustment_cost.scale")
        linear = _number(cost_cfg.get("linear", 0.0), f"{p}.adjustment_cost.linear")
        cost = scale * (cap_pts[None, :] - cap_pts[:, None]) ** 2 + linear * cap_pts[None, :]
    else:
        cost = _array(cost_cfg, f"{p}.adjustment_cost", 2)
    feasible = params.get("feasible")
    model = build_capital(
        cap_pts, shk_pts,
        _array(_need(params, "revenue", p), f"{p}.revenue", 2),
        cost,
        _array(_need(params, "shock_kernel", p), f"{p}.shock_kernel", 2),
        beta,
        None if feasible is None else np.asarray(feasible, bool),
    )
    return BuiltModel(model, {})


_AXIS_KINDS = ("discount", "payoff", "kernel", "initial-state")
_CHECK_NAMES = ("conditions", "map-conditions", "parameter",
                "initial-state", "transition", "stationary")


@dataclass
class ExperimentConfig:
    raw: dict
    model_cfg: dict
    axis: dict
    checks: list[str]
    horizon: int
    tol: float
    initial_state: object | None
    outputs: dict


def parse_config(cfg: dict) -> ExperimentConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "expected a JSON object")
    model_cfg = _need(cfg, "model", "<root>")
    axis = _need(cfg, "axis", "<root>")
    if not isinstance(axis, dict):
        raise ConfigError("axis", "expected an object")
    kind = _need(axis, "kind", "axis")
    if kind not in _AXIS_KINDS:
        raise ConfigError("axis.kind", f"unknown axis kind {kind!r}")
    if kind in ("discount", "payoff"):
        values = _need(axis, "values", "axis")
        if not isinstance(values, list) or len(values) < 2:
            raise ConfigError("axis.values", "expected a list of at least two values")
    if kind == "payoff":
        _need(axis, "state_term", "axis")
        _need(axis, "action_term", "axis")
    if kind == "kernel":
        order = _need(axis, "order", "axis")
        if order not in ("st", "cx"):
            raise ConfigError("axis.order", f"order must be 'st' or 'cx', got {order!r}")
        override = _need(axis, "override", "axis")
        if not isinstance(override, dict):
            raise ConfigError("axis.override", "expected an object of parameter overrides")
    if kind == "initial-state":
        _need(axis, "low", "axis")
        _need(axis, "high", "axis")
    checks = _need(cfg, "checks", "<root>")
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks", "expected a nonempty list")
    for c in checks:
        if c not in _CHECK_NAMES:
            raise ConfigError("checks", f"unknown check {c!r}")
    horizon = cfg.get("horizon", 20)
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        raise ConfigError("horizon", "expected a positive integer")
    tol = _number(cfg.get("tol", 1e-9), "tol")
    if tol <= 0:
        raise ConfigError("tol", "tolerance must be positive")
    outputs = cfg.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ConfigError("outputs", "expected an object")
    return ExperimentConfig(
        raw=cfg, model_cfg=model_cfg, axis=axis, checks=list(checks),
        horizon=horizon, tol=tol, initial_state=cfg.get("initial_state"),
        outputs=outputs,
    )


def _axis_models(ec: ExperimentConfig) -> tuple[list[MdpModel], BuiltModel, list[str]]:
    """Models along the parameter axis (ordered low to high) plus labels."""
    base = build_model_from_config(ec.model_cfg)
    kind = ec.axis["kind"]
    if kind == "discount":
        values = [_number(v, "axis.values") for v in ec.axis["values"]]
        if sorted(values) != values:
            raise ConfigError("axis.values", "discount values must be ascending")
        models = []
        for i, b in enumerate(values):
            if not 0.0 < b < 1.0:
                raise ConfigError(f"axis.values[{i}]",
                                  f"discount factor must lie in (0, 1), got {b}")
            models.append(_with_beta(base.model, b))
        return models, base, [f"beta={b:g}" for b in values]
    if kind == "payoff":
        values = [_number(v, "axis.values") for v in ec.axis["values"]]
        if sorted(values) != values:
            raise ConfigError("axis.values", "payoff values must be ascending")
        sterm = _array(ec.axis["state_term"], "axis.state_term", 1)
        aterm = _array(ec.axis["action_term"], "axis.action_term", 1)
        m = base.model
        if sterm.shape != (m.n_states,) or aterm.shape != (m.n_actions,):
            raise ConfigError("axis.state_term",
                              "payoff terms must match the state/action grids")
        add = sterm[:, None] + aterm[None, :]
        models = [_with_reward(m, m.reward + c * add) for c in values]
        return models, base, [f"c={c:g}" for c in values]
    if kind == "kernel":
        hi_params = dict(ec.model_cfg["params"])
        hi_params.update(ec.axis["override"])
        hi = build_model_from_config({"builder": ec.model_cfg["builder"],
                                      "params": hi_params}, "axis.override")
        return [base.model, hi.model], base, ["kernel-low", "kernel-high"]
    # initial-state: one model, two starting points
    return [base.model], base, ["initial-low", "initial-high"]


def _with_beta(m: MdpModel, beta: float) -> MdpModel:
    return MdpModel(m.state_grid, m.action_grid, m.reward, m.feasible, m.kernel, beta)


def _with_reward(m: MdpModel, reward: np.ndarray) -> MdpModel:
    return MdpModel(m.state_grid, m.action_grid, reward, m.feasible, m.kernel, m.beta)


def _state_index(grid: Grid, value, path: str) -> int:
    if grid.ndim == 1:
        try:
            return grid.index_of(_number(value, path))
        except ValueError as e:
            raise ConfigError(path, str(e)) from None
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(path, "2-D grids need a [value, value] pair")
    idx = []
    for ax, v in zip(grid.axes, value):
        j = int(np.searchsorted(ax, _number(v, path)))
        if j >= ax.size or ax[j] != v:
            raise ConfigError(path, f"{v!r} is not on the grid axis")
        idx.append(j)
    return grid.flat_index(tuple(idx))


def run_experiment(cfg: dict, jobs: int = 1,
                   tol: float | None = None,
                   horizon: int | None = None) -> dict:
    """Run all requested checks; returns the report dict (see `write_run`
    for the file-emitting wrapper).  The report's "exit_code" field is 0
    iff every requested comparison check's conclusion holds, 2 is never
    produced here (config errors raise ConfigError)."""
    started = time.perf_counter()
    ec = parse_config(cfg)
    if tol is not None:
        ec.tol = tol
    if horizon is not None:
        ec.horizon = horizon
    models, base, labels = _axis_models(ec)
    kind = ec.axis["kind"]

    report_checks: dict[str, dict] = {}
    conditions: dict[str, dict] = {}
    conclusions_ok = True

    for name in ec.checks:
        if name == "conditions":
            conditions["monotone-policy-conditions"] = (
                monotone_policy_conditions_check(base.model, ec.tol).to_dict())
            continue
        if name == "map-conditions":
            if "noise" not in base.context:
                raise ConfigError("checks",
                                  "'map-conditions' needs the randomwalk builder")
            if kind != "kernel":
                raise ConfigError("checks", "'map-conditions' needs a kernel axis")
            noise_lo = base.context["noise"]
            hi_model = models[1]
            noise_hi = DiscreteDistribution(
                noise_lo.grid,
                _array(ec.axis["override"]["noise"]["mass"],
                       "axis.override.noise.mass", 1))
            m_table = clamped_additive_map_table(
                base.model.state_grid, base.model.action_grid, noise_lo.grid)
            rep = transition_map_conditions_check(
                base.model.state_grid, base.model.action_grid, m_table,
                base.model.reward, base.model.feasible, noise_hi, noise_lo, ec.tol)
            conditions["transition-map-conditions"] = rep.to_dict()
            continue
        if name == "parameter":
            if kind not in ("discount", "payoff"):
                raise ConfigError("checks", "'parameter' needs a discount or payoff axis")
            rep = check_parameter_monotonicity(models, T=ec.horizon, tol=ec.tol)
        elif name == "initial-state":
            if kind != "initial-state":
                raise ConfigError("checks", "'initial-state' needs an initial-state axis")
            lo = _state_index(base.model.state_grid, ec.axis["low"], "axis.low")
            hi = _state_index(base.model.state_grid, ec.axis["high"], "axis.high")
            rep = check_initial_state_monotonicity(
                base.model, lo, hi, T=ec.horizon, tol=ec.tol)
        elif name == "transition":
            if kind != "kernel":
                raise ConfigError("checks", "'transition' needs a kernel axis")
            rep = check_transition_monotonicity(
                models[1], models[0], ec.axis["order"], T=ec.horizon, tol=ec.tol)
        elif name == "stationary":
            if kind != "kernel":
                raise ConfigError("checks", "'stationary' needs a kernel axis")
            rep = check_stationary_dominance(
                models[1], models[0], ec.axis["order"], tol=ec.tol)
        report_checks[name] = rep.to_dict()
        conclusions_ok = conclusions_ok and rep.conclusion.holds

    csv_text = _trajectories_csv(ec, models, labels, jobs)
    elapsed = time.perf_counter() - started
    report = {
        "schema": "mdpcs-report-v1",
        "tool_version": __version__,
        "config": cfg,
        "parameters": labels,
        "checks": report_checks,
        "conditions": conditions,
        "exit_code": 0 if conclusions_ok else 1,
        "timing": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "elapsed_seconds": elapsed,
        },
    }
    return {"report": report, "trajectories_csv": csv_text}


def _solve_policy(model: MdpModel, tol: float):
    V = value_iterate(model, eps=min(1e-10, tol / 10))
    g = policy_function(policy_correspondence(model, V, tol=tol))
    return induced_kernel(model, g), g


def _trajectories_csv(ec: ExperimentConfig, models, labels, jobs: int) -> str:
    kind = ec.axis["kind"]
    grid = models[0].state_grid
    if ec.initial_state is None:
        start = 0  # lowest state
    else:
        start = _state_index(grid, ec.initial_state, "initial_state")

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        solved = list(ex.map(lambda m: _solve_policy(m, ec.tol), models))

    runs = []
    if kind == "initial-state":
        P, g = solved[0]
        lo = _state_index(grid, ec.axis["low"], "axis.low")
        hi = _state_index(grid, ec.axis["high"], "axis.high")
        runs.append(trajectory(P, g, point_mass(grid, lo), ec.horizon))
        runs.append(trajectory(P, g, point_mass(grid, hi), ec.horizon))
    else:
        mu1 = point_mass(grid, start)
        for P, g in solved:
            runs.append(trajectory(P, g, mu1, ec.horizon))

    def fmt(x: float) -> str:
        return format(float(x), ".17g")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "param_id", "expected_decision", "mean_state"])
    for t in range(1, ec.horizon + 1):
        for pid, tr in enumerate(runs):
            mu = tr.distributions[t - 1]
            mean = mu.mean()
            mean_state = mean if isinstance(mean, float) else float(mean[0])
            writer.writerow([t, pid, fmt(tr.expected_decision[t - 1]), fmt(mean_state)])
    return buf.getvalue()


def write_run(cfg: dict, out_dir: Path, jobs: int = 1,
              tol: float | None = None, horizon: int | None = None) -> int:
    """Run the experiment and write report + trajectory files; returns the
    exit code (0 all conclusions hold, 1 some conclusion failed)."""
    result = run_experiment(cfg, jobs=jobs, tol=tol, horizon=horizon)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = cfg.get("outputs", {}) if isinstance(cfg, dict) else {}
    report_path = out_dir / outputs.get("report", "report.json")
    csv_path = out_dir / outputs.get("trajectories", "trajectories.csv")
    report = result["report"]
    report["trajectories_path"] = csv_path.name
    report_path.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    csv_path.write_text(result["trajectories_csv"], encoding="utf-8")
    return int(report["exit_code"])
