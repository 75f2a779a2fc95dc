"""Reporting on solved plans: cost breakdowns, chance audits, dispatch and
SOC tables, and carbon-tax sweeps.

Every number here is recomputed from the physical dispatch values; the
solver objective is never echoed back, which is what makes the breakdown a
meaningful cross-check of the model assembly.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MONEY_SCALE, annualization_factor
from .errors import InfeasibleSolutionError, InvalidParameterError, SolverError
from .milp import branch_and_bound, check_solution, extract_solution
from .model import assemble_model, max_substandard

_SOC_EPS = 1e-9  # below-target slack before a departure counts substandard


@dataclass
class CostBreakdown:
    """Annualized cost parts in money units (1e4 yuan); total is their sum."""

    fc_investment: float
    bess_investment: float
    gas_cost: float
    grid_cost: float
    carbon_from_elec: float
    carbon_from_gas: float
    soc_penalty: float
    total: float = field(init=False)

    def __post_init__(self):
        parts = (self.fc_investment, self.bess_investment, self.gas_cost,
                 self.grid_cost, self.carbon_from_elec, self.carbon_from_gas,
                 self.soc_penalty)
        for p in parts:
            if not (math.isfinite(p) and p >= 0.0):
                raise InvalidParameterError(f"cost part {p!r} must be "
                                            "finite and >= 0")
        self.total = float(sum(parts))

    def as_dict(self):
        return {
            "fc_investment": self.fc_investment,
            "bess_investment": self.bess_investment,
            "gas_cost": self.gas_cost,
            "grid_cost": self.grid_cost,
            "carbon_from_elec": self.carbon_from_elec,
            "carbon_from_gas": self.carbon_from_gas,
            "soc_penalty": self.soc_penalty,
            "total": self.total,
        }


def _finite_nonneg(arr, label, issues, mask=None):
    a = np.asarray(arr, dtype=float)
    sel = np.ones(a.shape, dtype=bool) if mask is None else mask
    bad = sel & ~(np.isfinite(a) & (a >= -1e-9))
    for idx in np.argwhere(bad)[:5]:
        issues.append(f"{label}{tuple(int(i) for i in idx)} = "
                      f"{float(a[tuple(idx)])!r}")


def cost_breakdown(solution, catalog, tariffs, m) -> CostBreakdown:
    """Recompute the annualized cost parts of a solved plan.

    m is the annualization factor. Dispatch quantities must be finite and
    nonnegative; anything else makes the costs meaningless and raises
    InfeasibleSolutionError with the offending entries.
    """
    issues = []
    if not (math.isfinite(solution.x_ess) and solution.x_ess >= -1e-9):
        issues.append(f"x_ess = {solution.x_ess!r}")
    for fc_id, units in solution.x_fc.items():
        if units < 0:
            issues.append(f"x_fc[{fc_id}] = {units}")
    _finite_nonneg(solution.grid, "grid", issues)
    _finite_nonneg(solution.fuel, "fuel", issues)
    _finite_nonneg(solution.shortfall, "shortfall", issues)
    win = ~np.isnan(solution.ev_ch)
    _finite_nonneg(np.nan_to_num(solution.ev_ch, nan=0.0), "ev_ch", issues,
                   mask=win)
    if issues:
        raise InfeasibleSolutionError(issues)

    fc_inv = sum(catalog.fc(fc_id).invest_cost * units
                 for fc_id, units in solution.x_fc.items())
    bess_inv = catalog.bess.invest_cost * max(float(solution.x_ess), 0.0)

    price = np.asarray(tariffs.elec_price)
    emis = np.asarray(tariffs.grid_emission)
    # the screen admits values down to -1e-9; clamp so the parts stay >= 0
    grid_kwh = np.maximum(solution.grid, 0.0)  # (N, T), one-hour steps
    fuel_kwh_all = np.maximum(solution.fuel, 0.0)
    short_kwh = np.maximum(solution.shortfall, 0.0)
    grid_cost = m * float(np.sum(grid_kwh * price[None, :])) / MONEY_SCALE
    carbon_elec = (m * tariffs.carbon_tax
                   * float(np.sum(grid_kwh * emis[None, :])) / MONEY_SCALE)

    gas_cost = 0.0
    carbon_gas = 0.0
    for i, fc in enumerate(catalog.fuel_cells):
        fuel_kwh = float(np.sum(fuel_kwh_all[:, :, i]))
        gas_cost += m * fc.fuel_price * fuel_kwh / MONEY_SCALE
        carbon_gas += m * tariffs.carbon_tax * fc.fuel_emission * fuel_kwh \
            / MONEY_SCALE

    soc_pen = (m * tariffs.soc_penalty * float(np.sum(short_kwh))
               / MONEY_SCALE)

    return CostBreakdown(
        fc_investment=float(fc_inv), bess_investment=float(bess_inv),
        gas_cost=float(gas_cost), grid_cost=float(grid_cost),
        carbon_from_elec=float(carbon_elec),
        carbon_from_gas=float(carbon_gas), soc_penalty=float(soc_pen))


@dataclass
class ChanceAudit:
    """Departure-SOC audit over all scenarios.

    worst_soc[s] is the lowest departure SOC in scenario s (1.0 when the
    scenario has no vehicles); substandard lists every (scenario, vehicle,
    soc) below target; count is the number of distinct substandard
    scenarios, capped by limit = floor(N * zeta) for a pass.
    """

    worst_soc: np.ndarray
    substandard: list
    count: int
    limit: int
    passed: bool

    def as_dict(self):
        return {
            "worst_soc": [float(v) for v in self.worst_soc],
            "substandard": [
                {"scenario": s, "ev": j, "soc": soc}
                for s, j, soc in self.substandard],
            "count": self.count,
            "limit": self.limit,
            "passed": self.passed,
        }


def chance_audit(solution, fleet, zeta, n_scenarios) -> ChanceAudit:
    """Audit departure SOCs against the chance-constraint budget.

    A departure is substandard when its SOC is more than 1e-9 below the
    fleet target; the audit passes when the number of scenarios containing
    one is at most floor(N * zeta).
    """
    n, n_ev = solution.e_dep.shape
    if n != n_scenarios:
        raise InvalidParameterError(
            f"solution has {n} scenarios, audit asked about {n_scenarios}")
    worst = np.ones(n)
    bad = []
    threshold = fleet.target_departure_soc - _SOC_EPS
    for s in range(n):
        for j in range(n_ev):
            soc = solution.e_dep[s, j] / fleet.capacity
            worst[s] = min(worst[s], soc)
            if soc < threshold:
                bad.append((s, j, float(soc)))
    bad_scen = sorted({s for s, _j, _v in bad})
    limit = max_substandard(n_scenarios, zeta)
    return ChanceAudit(worst_soc=worst, substandard=bad,
                       count=len(bad_scen), limit=limit,
                       passed=len(bad_scen) <= limit)


def select_extreme_scenario(scenario_set, which) -> int:
    """Scenario with the largest total electric or heat load; ties go to
    the lowest scenario id."""
    if which not in ("elec", "heat"):
        raise InvalidParameterError(f"which must be elec or heat, got "
                                    f"{which!r}")
    best, best_sum = 0, -np.inf
    for s, sc in enumerate(scenario_set.scenarios):
        tot = sum(sc.elec_load if which == "elec" else sc.heat_load)
        if tot > best_sum:
            best, best_sum = s, tot
    return best


def _check_scenario_id(solution, scenario_id):
    n = solution.grid.shape[0]
    if not 0 <= scenario_id < n:
        raise KeyError(f"scenario {scenario_id} not in [0, {n})")


def dispatch_table(solution, scenario_set, catalog, tariffs, scenario_id):
    """Hourly dispatch of one scenario as (header, rows).

    Fuel-cell output is reported on both ports (C_ge * fuel and
    C_gh * fuel). EV columns are None outside the parking window.
    """
    _check_scenario_id(solution, scenario_id)
    sc = scenario_set.scenarios[scenario_id]
    t_day = solution.grid.shape[1]
    n_ev = solution.ev_ch.shape[1]

    header = ["hour", "elec_load_kw", "heat_load_kw", "elec_price",
              "grid_kw", "pv_kw"]
    for fc in catalog.fuel_cells:
        header += [f"fc_{fc.fc_id}_elec_kw", f"fc_{fc.fc_id}_heat_kw"]
    header += ["bess_ch_kw", "bess_dis_kw", "bess_e_kwh",
               "tess_ch_kw", "tess_dis_kw", "tess_e_kwh"]
    for j in range(n_ev):
        header += [f"ev{j}_ch_kw", f"ev{j}_dis_kw"]

    rows = []
    s = scenario_id
    for t in range(t_day):
        row = [t, sc.elec_load[t], sc.heat_load[t], tariffs.elec_price[t],
               float(solution.grid[s, t]), float(solution.pv[s, t])]
        for i, fc in enumerate(catalog.fuel_cells):
            fuel = float(solution.fuel[s, t, i])
            row += [fc.gas_to_elec * fuel, fc.gas_to_heat * fuel]
        row += [float(solution.bess_ch[s, t]), float(solution.bess_dis[s, t]),
                float(solution.bess_e[s, t]), float(solution.tess_ch[s, t]),
                float(solution.tess_dis[s, t]), float(solution.tess_e[s, t])]
        for j in range(n_ev):
            ch = solution.ev_ch[s, j, t]
            dis = solution.ev_dis[s, j, t]
            row += [None if np.isnan(ch) else float(ch),
                    None if np.isnan(dis) else float(dis)]
        rows.append(row)
    return header, rows


def soc_table(solution, catalog, scenario_id):
    """State-of-charge trajectories of one scenario as (header, rows).

    T+1 rows: storage states are starts of hours 0..T-1 plus the wrapped
    start-of-day state at hour T. EV entries outside [arrive, depart] are
    None. A zero-capacity BESS reports None throughout.
    """
    _check_scenario_id(solution, scenario_id)
    s = scenario_id
    t_day = solution.grid.shape[1]
    n_ev = solution.ev_e.shape[1]
    header = ["hour", "bess_soc", "tess_soc"] + [f"ev{j}_soc"
                                                 for j in range(n_ev)]
    cap_b = float(solution.x_ess)
    cap_t = catalog.tess.capacity
    rows = []
    for t in range(t_day + 1):
        tw = t % t_day
        row = [t]
        row.append(None if cap_b <= 0.0
                   else float(solution.bess_e[s, tw]) / cap_b)
        row.append(None if cap_t <= 0.0
                   else float(solution.tess_e[s, tw]) / cap_t)
        for j in range(n_ev):
            e = solution.ev_e[s, j, t]
            row.append(None if np.isnan(e)
                       else float(e) / catalog.ev_fleet.capacity)
        rows.append(row)
    return header, rows


@dataclass
class SweepLevel:
    """One carbon-tax level of a sweep; failed levels carry an error and
    hold no breakdown."""

    carbon_tax: float  # yuan per ton
    status: str
    x_fc: dict = field(default_factory=dict)
    x_ess: float = 0.0
    substandard_count: int = 0
    breakdown: CostBreakdown = None
    n_nodes: int = 0
    wall_time: float = 0.0
    error: str = None


@dataclass
class SweepResult:
    levels: list
    notes: list = field(default_factory=list)


def sweep_carbon_tax(grid, catalog, tariffs, scenario_set, config,
                     tax_levels, **solver_kwargs) -> SweepResult:
    """Solve the plan at each carbon-tax level (yuan per ton).

    Scenarios and every other input stay fixed across levels. A level that
    fails keeps its error message and the sweep continues. Total cost must
    be non-decreasing in the tax over the successful levels (same feasible
    set, pointwise-larger objective); a violation is a solver defect and
    raises SolverError. Trend observations (fuel-cell mix, substandard
    counts) are reported in notes, never asserted.
    """
    if not tax_levels:
        raise InvalidParameterError("tax_levels must not be empty")
    m = annualization_factor(grid)
    levels = []
    for tax in tax_levels:
        tar = replace(tariffs, carbon_tax=float(tax) / 1000.0)
        try:
            model = assemble_model(grid, catalog, tar, scenario_set, config)
            bnb = branch_and_bound(model, **solver_kwargs)
            if bnb.status != "optimal":
                levels.append(SweepLevel(
                    carbon_tax=float(tax), status=bnb.status,
                    n_nodes=bnb.n_nodes, wall_time=bnb.wall_time,
                    error=f"solver ended {bnb.status}"))
                continue
            plan = extract_solution(bnb, model.var_index)
            report = check_solution(model, bnb.x)
            if not report.ok:
                raise SolverError("optimal solution failed verification: "
                                  f"{report.bad_rows[:3]}")
            audit = chance_audit(plan, catalog.ev_fleet, config.zeta,
                                 grid.n_scenarios)
            levels.append(SweepLevel(
                carbon_tax=float(tax), status="optimal", x_fc=plan.x_fc,
                x_ess=plan.x_ess, substandard_count=audit.count,
                breakdown=cost_breakdown(plan, catalog, tar, m),
                n_nodes=bnb.n_nodes, wall_time=bnb.wall_time))
        except (SolverError, InfeasibleSolutionError) as exc:
            levels.append(SweepLevel(carbon_tax=float(tax), status="error",
                                     error=str(exc)))

    good = [lv for lv in levels if lv.status == "optimal"]
    ordered = sorted(good, key=lambda lv: lv.carbon_tax)
    for a, b in zip(ordered, ordered[1:]):
        slack = 1e-6 * (1.0 + abs(b.breakdown.total))
        if b.breakdown.total < a.breakdown.total - slack:
            raise SolverError(
                f"total cost fell from {a.breakdown.total} at tax "
                f"{a.carbon_tax} to {b.breakdown.total} at tax "
                f"{b.carbon_tax}; must be non-decreasing")

    notes = []
    if len(ordered) >= 2:
        for fc in catalog.fuel_cells:
            counts = [lv.x_fc.get(fc.fc_id, 0) for lv in ordered]
            notes.append(f"{fc.fc_id} units across taxes: {counts}")
        notes.append("substandard scenarios across taxes: "
                     f"{[lv.substandard_count for lv in ordered]}")
    return SweepResult(levels=levels, notes=notes)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table_csv(path, header, rows):
    """Write (header, rows) as CSV; None becomes an empty cell and floats
    keep full precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_plan_summary(path, sweep, catalog):
    """Planning-result table: one row per tax level."""
    header = (["carbon_tax_yuan_per_ton"]
              + [f"fc_{fc.fc_id}_units" for fc in catalog.fuel_cells]
              + ["bess_kwh", "substandard_scenarios", "status"])
    rows = []
    for lv in sweep.levels:
        rows.append([lv.carbon_tax]
                    + [lv.x_fc.get(fc.fc_id, 0) for fc in catalog.fuel_cells]
                    + [lv.x_ess, lv.substandard_count, lv.status])
    write_table_csv(path, header, rows)


def write_cost_breakdown(path, sweep):
    """Cost table: one row per tax level, empty parts on failed levels."""
    parts = ["fc_investment", "bess_investment", "gas_cost", "grid_cost",
             "carbon_from_elec", "carbon_from_gas", "soc_penalty", "total"]
    header = ["carbon_tax_yuan_per_ton"] + parts + ["status"]
    rows = []
    for lv in sweep.levels:
        if lv.breakdown is None:
            rows.append([lv.carbon_tax] + [None] * len(parts) + [lv.status])
        else:
            d = lv.breakdown.as_dict()
            rows.append([lv.carbon_tax] + [d[p] for p in parts]
                        + [lv.status])
    write_table_csv(path, header, rows)


def write_audit_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class PlanCheck:
    """Semantic re-verification of a PlanSolution against raw scenario
    data: balances, storage chains, SOC windows, cyclic closure."""

    ok: bool
    max_residual: float
    issues: list = field(default_factory=list)


def verify_plan(solution, scenario_set, catalog, tariffs,
                tol=1e-6) -> PlanCheck:
    """Recheck a plan from physics, without the model or the solver.

    Electric balance residuals are scaled by (1 + max electric load); heat
    surplus must be >= -tol absolutely; storage dynamics, cyclic closure
    and SOC windows are checked to tol on energies.
    """
    issues = []
    worst = 0.0

    def resid(label, value, bar):
        # balance/chain residual: always counts toward max_residual
        nonlocal worst
        worst = max(worst, abs(value))
        if abs(value) > bar:
            issues.append(f"{label}: {value!r}")

    def flag(cond, label, value):
        # window/integrality check: counts only when violated
        if not cond:
            issues.append(f"{label}: {value!r}")

    bess, tess, fleet = catalog.bess, catalog.tess, catalog.ev_fleet
    n = scenario_set.grid.n_scenarios
    t_day = scenario_set.grid.hours_per_day
    max_e_load = max(max(sc.elec_load) for sc in scenario_set.scenarios)
    e_scale = 1.0 + max_e_load

    for s, sc in enumerate(scenario_set.scenarios):
        for t in range(t_day):
            supply = (solution.grid[s, t] + solution.pv[s, t]
                      - solution.bess_ch[s, t] / bess.eta_ch
                      + bess.eta_dis * solution.bess_dis[s, t])
            for i, fc in enumerate(catalog.fuel_cells):
                supply += fc.gas_to_elec * solution.fuel[s, t, i]
            for j in range(solution.ev_ch.shape[1]):
                ch = solution.ev_ch[s, j, t]
                if not np.isnan(ch):
                    supply -= ch / fleet.eta_ch
                    supply += fleet.eta_dis * solution.ev_dis[s, j, t]
            resid(f"elec balance s{s} t{t}",
                  (supply - sc.elec_load[t]) / e_scale, tol)

            heat = (- solution.tess_ch[s, t] / tess.eta_ch
                    + tess.eta_dis * solution.tess_dis[s, t])
            for i, fc in enumerate(catalog.fuel_cells):
                heat += fc.gas_to_heat * solution.fuel[s, t, i]
            surplus = heat - sc.heat_load[t]
            flag(surplus >= -tol, f"heat surplus s{s} t{t}", surplus)

        # storage chains with cyclic wrap: E(t+1) = E(t) + ch(t) - dis(t)
        for t in range(t_day):
            t_next = (t + 1) % t_day
            r_b = (solution.bess_e[s, t_next] - solution.bess_e[s, t]
                   - solution.bess_ch[s, t] + solution.bess_dis[s, t])
            resid(f"bess chain s{s} t{t}", r_b, tol)
            r_t = (solution.tess_e[s, t_next] - solution.tess_e[s, t]
                   - solution.tess_ch[s, t] + solution.tess_dis[s, t])
            resid(f"tess chain s{s} t{t}", r_t, tol)

        cap = solution.x_ess
        for t in range(t_day):
            e = solution.bess_e[s, t]
            flag(e >= bess.soc_min * cap - tol * (1 + cap),
                 f"bess soc low s{s} t{t}", e)
            flag(e <= bess.soc_max * cap + tol * (1 + cap),
                 f"bess soc high s{s} t{t}", e)

        for j in range(solution.ev_e.shape[1]):
            span = ~np.isnan(solution.ev_e[s, j])
            hours = np.flatnonzero(span)
            arrive, depart = int(hours[0]), int(hours[-1])
            for t in range(arrive, depart):
                r = (solution.ev_e[s, j, t + 1] - solution.ev_e[s, j, t]
                     - solution.ev_ch[s, j, t] + solution.ev_dis[s, j, t])
                resid(f"ev chain s{s} j{j} t{t}", r, tol)
            for t in range(arrive + 1, depart + 1):
                e = solution.ev_e[s, j, t]
                cap_ev = fleet.capacity
                flag(e >= fleet.soc_min * cap_ev - tol * (1 + cap_ev),
                     f"ev soc low s{s} j{j} t{t}", e)
                flag(e <= fleet.soc_max * cap_ev + tol * (1 + cap_ev),
                     f"ev soc high s{s} j{j} t{t}", e)
            # z=0 scenarios owe every EV its target at departure
            if solution.z[s] == 0:
                dep_soc = solution.e_dep[s, j] / fleet.capacity
                flag(dep_soc >= fleet.target_departure_soc
                     - tol * (1 + fleet.target_departure_soc),
                     f"departure soc s{s} j{j}", dep_soc)

    for fc_id, units in solution.x_fc.items():
        flag(abs(units - round(units)) <= tol, f"integral x_fc {fc_id}",
             float(units))
    for s in range(n):
        flag(solution.z[s] in (0, 1), f"binary z s{s}", float(solution.z[s]))

    return PlanCheck(ok=not issues, max_residual=worst, issues=issues)
