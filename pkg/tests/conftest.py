"""Shared fixtures: a four-hour two-day hub case and a raw-model builder."""
import os
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import sparse

import hubplan
from hubplan.core import (BessSpec, EquipmentCatalog, EvFleetSpec, EvRecord,
                          FcSpec, Scenario, ScenarioSet, TariffSet, TessSpec,
                          TimeGrid)
from hubplan.milp import branch_and_bound, extract_solution
from hubplan.model import MilpModel, ModelConfig, assemble_model


def make_model(obj, a, senses, rhs, lb, ub, kinds=None):
    """Assemble a MilpModel from dense pieces; all-continuous when kinds
    is omitted."""
    a = sparse.csr_matrix(np.asarray(a, dtype=float))
    m, n = a.shape
    if kinds is None:
        kinds = np.zeros(n, dtype=np.int8)
    return MilpModel(
        n_rows=m, n_cols=n, obj=np.asarray(obj, dtype=float), a_matrix=a,
        row_sense=np.asarray(senses, dtype=np.int8),
        rhs=np.asarray(rhs, dtype=float),
        row_names=[f"R{i}" for i in range(m)],
        col_lb=np.asarray(lb, dtype=float),
        col_ub=np.asarray(ub, dtype=float),
        col_kind=np.asarray(kinds, dtype=np.int8),
        col_names=[f"C{j}" for j in range(n)])


def tiny_case():
    """T=4, N=2, one PEM_gas type, BESS+TESS, one EV per day.

    Small enough to solve in well under a second yet exercising every
    constraint family, including a departure inside the day (scenario 0)
    and one at the day boundary (scenario 1).
    """
    grid = TimeGrid(hours_per_day=4, n_scenarios=2, planning_years=10,
                    discount_rate=0.06)
    fc = FcSpec(fc_id="PEM_gas", invest_cost=30.0, gas_to_elec=0.45,
                gas_to_heat=0.4, max_elec=6.0, max_heat=5.0,
                fuel_price=0.257, fuel_emission=0.22, max_units=10)
    bess = BessSpec(invest_cost=0.15, rate_fraction=0.25, eta_ch=0.95,
                    eta_dis=0.95, soc_min=0.1, soc_max=0.9,
                    lifetime_cycles=3000.0, max_capacity=200.0)
    tess = TessSpec(capacity=40.0, rate_fraction=0.25, eta_ch=0.9, eta_dis=0.9)
    fleet = EvFleetSpec(n_ev=1, capacity=40.0, charger_power=7.0,
                        discharge_rate_fraction=0.125, eta_ch=0.95,
                        eta_dis=0.95, soc_min=0.2, soc_max=1.0)
    catalog = EquipmentCatalog(fuel_cells=(fc,), bess=bess, tess=tess,
                               ev_fleet=fleet)
    tariffs = TariffSet(elec_price=(0.3, 1.0, 1.0, 0.3),
                        grid_emission=(0.6, 0.8, 0.8, 0.6),
                        carbon_tax=0.1, soc_penalty=2.0, grid_cap=100.0,
                        pv_cap=50.0)
    scen = ScenarioSet(grid=grid, scenarios=(
        Scenario(elec_load=(20.0, 30.0, 25.0, 15.0),
                 heat_load=(8.0, 12.0, 10.0, 6.0),
                 pv_avail=(0.0, 10.0, 12.0, 2.0),
                 ev_records=(EvRecord(0, 3, 0.4),)),
        Scenario(elec_load=(18.0, 35.0, 28.0, 12.0),
                 heat_load=(9.0, 14.0, 11.0, 5.0),
                 pv_avail=(0.0, 8.0, 15.0, 3.0),
                 ev_records=(EvRecord(1, 4, 0.5),)),
    ))
    config = ModelConfig(zeta=0.0, exclusivity_mode="relaxed")
    return SimpleNamespace(grid=grid, fc=fc, bess=bess, tess=tess,
                           fleet=fleet, catalog=catalog, tariffs=tariffs,
                           scen=scen, config=config)


@pytest.fixture(scope="session")
def tiny():
    return tiny_case()


@pytest.fixture(scope="session")
def tiny_solved(tiny):
    """The tiny case assembled and solved once for the whole session.

    Tests must treat the arrays as read-only and corrupt copies only.
    """
    model = assemble_model(tiny.grid, tiny.catalog, tiny.tariffs, tiny.scen,
                           tiny.config)
    sol = branch_and_bound(model)
    assert sol.status == "optimal"
    plan = extract_solution(sol, model.var_index)
    return SimpleNamespace(model=model, sol=sol, plan=plan)


@pytest.fixture(scope="session")
def data_dir():
    return os.path.join(os.path.dirname(hubplan.__file__), "data")
