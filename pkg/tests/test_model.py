"""MILP assembly: variable census, row coefficients, bounds, chance budget."""
import numpy as np
import pytest

from hubplan.core import (BessSpec, EquipmentCatalog, EvFleetSpec, EvRecord,
                          FcSpec, Scenario, ScenarioSet, TariffSet, TessSpec,
                          TimeGrid)
from hubplan.errors import InvalidParameterError
from hubplan.model import (BINARY, CONT, EQ, GE, INTEGER, LE, ModelConfig,
                           assemble_model, max_substandard)


def micro_case(n_ev=0):
    """N=1, T=2, one fuel-cell type; optionally one EV parked all day."""
    grid = TimeGrid(2, 1, 1, 0.0)
    fc = FcSpec("PEM_gas", 30.0, 0.45, 0.5, 6.0, 5.0, 0.257, 0.22, 10)
    bess = BessSpec(0.15, 0.25, 0.95, 0.95, 0.1, 0.9, 3000.0, 200.0)
    tess = TessSpec(40.0, 0.25, 0.9, 0.9)
    fleet = EvFleetSpec(n_ev, 40.0, 7.0, 0.125, 0.95, 0.95, 0.2, 1.0)
    catalog = EquipmentCatalog((fc,), bess, tess, fleet)
    tariffs = TariffSet((0.3, 1.0), (0.6, 0.8), 0.1, 2.0, 100.0, 50.0)
    recs = (EvRecord(0, 2, 0.5),) if n_ev else ()
    scen = ScenarioSet(grid, (Scenario((20.0, 30.0), (8.0, 12.0),
                                       (0.0, 10.0), recs),))
    return grid, catalog, tariffs, scen


def row(model, name):
    i = model.row_names.index(name)
    a = model.a_matrix.getrow(i)
    coeffs = {model.col_names[j]: v for j, v in zip(a.indices, a.data)}
    return model.row_sense[i], model.rhs[i], coeffs


def test_census_no_ev():
    m = assemble_model(*micro_case(0), ModelConfig(zeta=0.0))
    # per scenario-hour: grid, pv, fuel, bess ch/dis/E, tess ch/dis/E (9 each)
    # plus X_ess, X_fc and one Z
    assert m.n_cols == 21
    assert m.n_rows == 22


def test_census_one_ev():
    m = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    # adds ch/dis per parked hour, E over (arrive, depart], one shortfall
    assert m.n_cols == 28


def test_census_binary_mode():
    m = assemble_model(*micro_case(1),
                       ModelConfig(zeta=0.0, exclusivity_mode="binary"))
    assert m.n_cols == 34  # + Y for bess, tess, ev at each hour
    yb = [c for c in m.col_names if c.startswith("Y")]
    assert len(yb) == 6
    assert all(m.col_kind[m.col_names.index(c)] == BINARY for c in yb)


def test_elec_balance_row():
    m = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "EB0_0")
    assert sense == EQ and rhs == 20.0
    assert c["GR0_0"] == 1.0 and c["PV0_0"] == 1.0
    assert c["FU0_0_0"] == 0.45                      # electric coupling
    assert abs(c["BC0_0"] + 1 / 0.95) < 1e-12        # bus pays charge losses
    assert c["BD0_0"] == 0.95                        # bus gets net discharge
    assert abs(c["VC0_0_0"] + 1 / 0.95) < 1e-12
    assert c["VD0_0_0"] == 0.95


def test_heat_balance_row():
    m = assemble_model(*micro_case(0), ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "HB0_1")
    assert sense == GE and rhs == 12.0  # surplus heat is ventable
    assert c["FU0_1_0"] == 0.5
    assert abs(c["TC0_1"] + 1 / 0.9) < 1e-12
    assert c["TD0_1"] == 0.9


def test_fuel_cell_port_caps():
    m = assemble_model(*micro_case(0), ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "FE0_0_0")
    assert sense == LE and rhs == 0.0
    assert c == {"FU0_0_0": 0.45, "XFC0": -6.0}
    sense, rhs, c = row(m, "FH0_0_0")
    assert sense == LE and rhs == 0.0
    assert c == {"FU0_0_0": 0.5, "XFC0": -5.0}


def test_bess_rows():
    m = assemble_model(*micro_case(0), ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "BL0_0")   # soc_min * X <= E
    assert sense == LE and c == {"XESS": 0.1, "BE0_0": -1.0}
    sense, rhs, c = row(m, "BU0_1")   # E <= soc_max * X
    assert sense == LE and c == {"XESS": -0.9, "BE0_1": 1.0}
    sense, rhs, c = row(m, "BRC0_0")  # rate cap tracks installed capacity
    assert sense == LE and c == {"XESS": -0.25, "BC0_0": 1.0}
    # state chain is lossless (the bus carries the efficiencies) and cyclic:
    # row t couples E(t) to E(t-1) and the flows of hour t-1
    sense, rhs, c = row(m, "BS0_1")
    assert sense == EQ and rhs == 0.0
    assert c == {"BE0_1": 1.0, "BE0_0": -1.0, "BC0_0": -1.0, "BD0_0": 1.0}
    sense, rhs, c = row(m, "BS0_0")   # wrap: hour 0 follows the last hour
    assert c == {"BE0_0": 1.0, "BE0_1": -1.0, "BC0_1": -1.0, "BD0_1": 1.0}


def test_bess_lifetime_row():
    m = assemble_model(*micro_case(0), ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "BW0")
    assert sense == LE and rhs == 0.0
    # cycles spread over 365 * PP days, expressed per scenario day
    assert abs(c["XESS"] + 3000.0 / 365.0) < 1e-9
    assert c["BC0_0"] == 1.0 and c["BC0_1"] == 1.0


def test_tess_and_bounds():
    m = assemble_model(*micro_case(0), ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "TS0_1")
    assert sense == EQ
    assert c == {"TE0_1": 1.0, "TE0_0": -1.0, "TC0_0": -1.0, "TD0_0": 1.0}
    j = m.col_names.index("TC0_0")
    assert m.col_ub[j] == 0.25 * 40.0  # fixed capacity -> plain bound
    j = m.col_names.index("TE0_0")
    assert (m.col_lb[j], m.col_ub[j]) == (0.0, 40.0)
    j = m.col_names.index("PV0_0")
    assert m.col_ub[j] == 0.0           # no irradiance that hour
    j = m.col_names.index("PV0_1")
    assert m.col_ub[j] == 10.0          # min(availability, pv rating)
    j = m.col_names.index("GR0_0")
    assert m.col_ub[j] == 100.0


def test_ev_rows():
    m = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "VS0_1_0")   # arrival datum enters the rhs
    assert sense == EQ and rhs == 0.5 * 40.0
    assert c == {"VE0_1_0": 1.0, "VC0_0_0": -1.0, "VD0_0_0": 1.0}
    sense, rhs, c = row(m, "VS0_2_0")
    assert sense == EQ and rhs == 0.0
    assert c == {"VE0_2_0": 1.0, "VE0_1_0": -1.0, "VC0_1_0": -1.0,
                 "VD0_1_0": 1.0}
    sense, rhs, c = row(m, "SD0_0")     # departure target with slack
    assert sense == GE and rhs == 0.9 * 40.0
    assert c == {"VE0_2_0": 1.0, "SH0_0": 1.0}
    sense, rhs, c = row(m, "SZ0_0")     # slack only when flagged substandard
    assert sense == LE and rhs == 0.0
    assert c == {"SH0_0": 1.0, "Z0": -(0.9 - 0.2) * 40.0}
    j = m.col_names.index("VC0_0_0")
    assert m.col_ub[j] == 7.0
    j = m.col_names.index("VD0_0_0")
    assert m.col_ub[j] == 0.125 * 40.0
    j = m.col_names.index("VE0_1_0")
    assert (m.col_lb[j], m.col_ub[j]) == (0.2 * 40.0, 40.0)


def test_exclusivity_binary_rows():
    m = assemble_model(*micro_case(1),
                       ModelConfig(zeta=0.0, exclusivity_mode="binary"))
    sense, rhs, c = row(m, "BXC0_0")
    assert sense == LE and rhs == 0.0
    assert c == {"BC0_0": 1.0, "YB0_0": -50.0}
    sense, rhs, c = row(m, "BXD0_0")    # BD <= M * (1 - Y)
    assert sense == LE and rhs == 50.0
    assert c == {"BD0_0": 1.0, "YB0_0": 50.0}
    sense, rhs, c = row(m, "VXD0_0_0")
    assert sense == LE and rhs == 5.0
    assert c == {"VD0_0_0": 1.0, "YV0_0_0": 5.0}


def test_relaxed_mode_has_no_y():
    m = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    assert not any(c.startswith("Y") for c in m.col_names)
    assert not any(r.startswith(("BXC", "BXD", "TXC", "TXD", "VXC", "VXD"))
                   for r in m.row_names)


def test_objective_coefficients():
    m = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    obj = dict(zip(m.col_names, m.obj))
    w = 365.0  # PP=1, gamma=0, N=1
    assert obj["XESS"] == 0.15 and obj["XFC0"] == 30.0
    assert abs(obj["GR0_0"] - w * (0.3 + 0.1 * 0.6) / 1e4) < 1e-15
    assert abs(obj["GR0_1"] - w * (1.0 + 0.1 * 0.8) / 1e4) < 1e-15
    assert abs(obj["FU0_0_0"] - w * (0.257 + 0.1 * 0.22) / 1e4) < 1e-15
    assert abs(obj["SH0_0"] - w * 2.0 / 1e4) < 1e-15
    assert obj["PV0_1"] == 0.0 and obj["BC0_0"] == 0.0
    assert obj["BE0_0"] == 0.0 and obj["Z0"] == 0.0


def test_kinds():
    m = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    kind = dict(zip(m.col_names, m.col_kind))
    assert kind["XFC0"] == INTEGER
    assert kind["Z0"] == BINARY
    assert kind["XESS"] == CONT and kind["GR0_0"] == CONT


def test_chance_budget_row():
    grid, catalog, tariffs, scen = micro_case(1)
    m = assemble_model(grid, catalog, tariffs, scen, ModelConfig(zeta=0.0))
    sense, rhs, c = row(m, "CARD")
    assert sense == LE and rhs == 0.0 and c == {"Z0": 1.0}

    g20 = TimeGrid(2, 20, 1, 0.0)
    base = scen.scenarios[0]
    scen20 = ScenarioSet(g20, tuple(base for _ in range(20)))
    m20 = assemble_model(g20, catalog, tariffs, scen20,
                         ModelConfig(zeta=0.05))
    sense, rhs, c = row(m20, "CARD")
    assert rhs == 1.0 and len(c) == 20  # floor(20 * 0.05)


def test_max_substandard():
    assert max_substandard(100, 0.05) == 5
    assert max_substandard(10, 0.05) == 0
    assert max_substandard(20, 0.05) == 1
    assert max_substandard(2, 0.0) == 0
    assert max_substandard(99, 0.05) == 4
    # guard against float representation: 3 * (1/3) is just below 1
    assert max_substandard(3, 1.0 / 3.0) == 1


def test_model_config_validation():
    with pytest.raises(InvalidParameterError):
        ModelConfig(zeta=1.0)
    with pytest.raises(InvalidParameterError):
        ModelConfig(zeta=0.05, exclusivity_mode="none")


def test_assemble_deterministic():
    a = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    b = assemble_model(*micro_case(1), ModelConfig(zeta=0.0))
    assert a.col_names == b.col_names and a.row_names == b.row_names
    assert np.array_equal(a.obj, b.obj) and np.array_equal(a.rhs, b.rhs)
    assert np.array_equal(a.a_matrix.toarray(), b.a_matrix.toarray())


def test_var_index_lookup(tiny):
    from hubplan.model import K_GRID, K_VCH, K_XESS
    m = assemble_model(tiny.grid, tiny.catalog, tiny.tariffs, tiny.scen,
                       tiny.config)
    ix = m.var_index
    assert m.col_names[ix.col(K_XESS)] == "XESS"
    assert m.col_names[ix.col(K_GRID, 1, 2)] == "GR1_2"
    assert ix.has(K_VCH, 0, 0, 0)        # EV 0 parked at hour 0 in day 0
    assert not ix.has(K_VCH, 0, 3, 0)    # departed by hour 3
    assert ix.window(0, 0) == (0, 3)
    with pytest.raises(KeyError):
        ix.col(K_GRID, 9, 0)
