"""Best-first branch and bound over the bounded-variable simplex.

Nodes are ordered by (parent LP bound, creation id) and solved lazily at
pop time, so the tree explores the most promising bound first and the id
makes the order — and therefore the node count and incumbent — fully
deterministic. Branching picks the most fractional integer column, ties
to the lowest column id. A single rounding dive from the root supplies an
early incumbent; every incumbent must pass the independent checker before
it is accepted. No cuts, and no presolve beyond fixed columns never
pricing in and empty rows keeping their slack basic.
"""

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from ..errors import SolverError
from ..model import CONT
from .simplex import solve_lp
from .verify import check_solution


@dataclass
class BnbSolution:
    """Result of a branch-and-bound run.

    status is one of optimal, infeasible, gap_limit, node_limit; gap_limit
    covers hitting the wall-clock limit. objective is the incumbent value
    (inf when none was found), best_bound the proven lower bound, and x the
    incumbent column values with integer columns within int_tol of
    integers. gap is relative to max(1, |objective|).
    """

    status: str
    objective: float
    best_bound: float
    n_nodes: int
    x: np.ndarray
    gap: float
    wall_time: float


def _fractional(x, int_cols, int_tol):
    """Most fractional integer column and its distance to the nearest
    integer; (-1, 0.0) when all are within int_tol."""
    if int_cols.size == 0:
        return -1, 0.0
    vals = x[int_cols]
    dist = np.abs(vals - np.rint(vals))
    j = int(np.argmax(dist))
    if dist[j] <= int_tol:
        return -1, 0.0
    return int(int_cols[j]), float(dist[j])


def _dive(model, lb0, ub0, int_cols, feas_tol, opt_tol, int_tol, root_x):
    """Rounding dive from the root relaxation.

    Fixes the most fractional column to its nearest integer and re-solves;
    on infeasibility retries the other side once, abandoning the dive when
    both fail. Returns (x, objective) or (None, inf).
    """
    lb = lb0.copy()
    ub = ub0.copy()
    x = root_x
    for _ in range(int_cols.size):
        j, _d = _fractional(x, int_cols, int_tol)
        if j < 0:
            return x, None
        lo_try = float(np.rint(x[j]))
        lo_try = min(max(lo_try, lb[j]), ub[j])
        alt = lo_try + 1.0 if lo_try <= x[j] else lo_try - 1.0
        sol = None
        for fix in (lo_try, alt):
            if fix < lb[j] - 0.5 or fix > ub[j] + 0.5:
                continue
            lb_t, ub_t = lb.copy(), ub.copy()
            lb_t[j] = ub_t[j] = fix
            cand = solve_lp(model, feas_tol=feas_tol, opt_tol=opt_tol,
                            col_lb=lb_t, col_ub=ub_t)
            if cand.status == "optimal":
                lb, ub, sol = lb_t, ub_t, cand
                break
        if sol is None:
            return None, None
        x = sol.x
    j, _d = _fractional(x, int_cols, int_tol)
    if j < 0:
        return x, None
    return None, None


def branch_and_bound(model, feas_tol=1e-7, opt_tol=1e-7, int_tol=1e-6,
                     rel_gap=1e-6, max_nodes=100000,
                     time_limit_s=None) -> BnbSolution:
    """Minimize model over its integer marks.

    Returns status optimal once the relative gap between incumbent and
    best outstanding bound is at most rel_gap (or the tree is exhausted),
    infeasible when no integer point exists, node_limit/gap_limit when a
    limit strikes first — carrying the incumbent if any. LP failures
    (singular bases, iteration stalls) propagate as SolverError.
    """
    t0 = time.monotonic()
    int_cols = np.flatnonzero(model.col_kind != CONT)
    lb0 = model.col_lb.astype(float).copy()
    ub0 = model.col_ub.astype(float).copy()
    # integer bounds can be tightened to integers once, up front
    lb0[int_cols] = np.ceil(lb0[int_cols] - int_tol)
    ub0[int_cols] = np.floor(ub0[int_cols] + int_tol)

    inc_x = None
    inc_obj = np.inf

    def finish(status, bound, n_nodes):
        gap = _gap(inc_obj, bound)
        return BnbSolution(
            status=status, objective=float(inc_obj),
            best_bound=float(bound), n_nodes=n_nodes,
            x=inc_x if inc_x is None else inc_x.copy(), gap=gap,
            wall_time=time.monotonic() - t0)

    def _gap(obj, bound):
        if not np.isfinite(obj):
            return np.inf
        return max(0.0, (obj - bound) / max(1.0, abs(obj)))

    def accept(x, obj):
        nonlocal inc_x, inc_obj
        if obj >= inc_obj:
            return
        report = check_solution(model, x, feas_tol=10 * feas_tol,
                                int_tol=int_tol)
        if not report.ok:
            raise SolverError(
                "candidate incumbent failed independent verification: "
                f"{report.bad_rows[:3]} {report.bad_bounds[:3]} "
                f"{report.bad_integrality[:3]}")
        inc_x, inc_obj = x.copy(), float(obj)

    root = solve_lp(model, feas_tol=feas_tol, opt_tol=opt_tol,
                    col_lb=lb0, col_ub=ub0)
    if root.status == "infeasible":
        return finish("infeasible", np.inf, 1)
    if root.status != "optimal":
        raise SolverError(f"root relaxation ended {root.status}")

    j0, _ = _fractional(root.x, int_cols, int_tol)
    if j0 < 0:
        accept(root.x, root.objective)
        return finish("optimal", root.objective, 1)

    dive_x, _ = _dive(model, lb0, ub0, int_cols, feas_tol, opt_tol,
                      int_tol, root.x)
    if dive_x is not None:
        accept(dive_x, float(model.obj @ dive_x))

    next_id = 1
    heap = []
    for half in _split(lb0, ub0, j0, root.x[j0]):
        heapq.heappush(heap, (root.objective, next_id, half))
        next_id += 1
    n_nodes = 1

    while heap:
        bound_est, _nid, (lb, ub) = heapq.heappop(heap)
        # the heap is bound-ordered, so this is the weakest open bound; the
        # incumbent itself bounds whatever the open nodes still hide
        global_bound = min(bound_est, inc_obj)
        if _gap(inc_obj, global_bound) <= rel_gap:
            return finish("optimal", global_bound, n_nodes)
        if n_nodes >= max_nodes:
            return finish("node_limit", global_bound, n_nodes)
        if time_limit_s is not None and time.monotonic() - t0 > time_limit_s:
            return finish("gap_limit", global_bound, n_nodes)

        node = solve_lp(model, feas_tol=feas_tol, opt_tol=opt_tol,
                        col_lb=lb, col_ub=ub)
        n_nodes += 1
        if node.status == "infeasible":
            continue
        if node.status != "optimal":
            raise SolverError(f"node relaxation ended {node.status}")
        if _gap(inc_obj, node.objective) <= rel_gap:
            continue
        j, _d = _fractional(node.x, int_cols, int_tol)
        if j < 0:
            accept(node.x, node.objective)
            continue
        for half in _split(lb, ub, j, node.x[j]):
            heapq.heappush(heap, (node.objective, next_id, half))
            next_id += 1

    if inc_x is None:
        return finish("infeasible", np.inf, n_nodes)
    return finish("optimal", inc_obj, n_nodes)


def _split(lb, ub, j, xj):
    """Down and up children from branching column j at fractional xj."""
    down_lb, down_ub = lb.copy(), ub.copy()
    down_ub[j] = math.floor(xj)
    up_lb, up_ub = lb.copy(), ub.copy()
    up_lb[j] = math.ceil(xj)
    out = []
    if down_lb[j] <= down_ub[j]:
        out.append((down_lb, down_ub))
    if up_lb[j] <= up_ub[j]:
        out.append((up_lb, up_ub))
    return out
