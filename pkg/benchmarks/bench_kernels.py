"""Compare the jitted simplex kernels against the pure-numpy fallback.

Each backend runs in a fresh interpreter because the choice is pinned at
import time by HUBPLAN_PURE_NUMPY. The workload is the bundled case with a
small generated scenario set: repeated root-LP solves plus one full
branch-and-bound run.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --n 10 --repeat 5
"""
import argparse
import json
import os
import subprocess
import sys
import time
import warnings


def run_workload(n_scenarios, seed, repeat):
    import hubplan
    from hubplan.core import annualization_factor
    from hubplan.fileio import read_case, read_history
    from hubplan.milp import branch_and_bound, solve_lp
    from hubplan.model import ModelConfig, assemble_model
    from hubplan.scengen import generate_scenarios

    data = os.path.join(os.path.dirname(hubplan.__file__), "data")
    case = read_case(os.path.join(data, "case.json"))
    elec, heat, pv, ev = read_history(
        os.path.join(data, "history_loads.csv"),
        os.path.join(data, "history_ev.csv"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        scen, _ = generate_scenarios(case, elec, heat, pv, ev,
                                     n_scenarios=n_scenarios, seed=seed,
                                     n_ev=case.catalog.ev_fleet.n_ev)
    model = assemble_model(case.time_grid(n_scenarios), case.catalog,
                           case.tariffs, scen,
                           ModelConfig(zeta=0.05, exclusivity_mode="relaxed"))

    solve_lp(model)   # warm-up: jit compile / cache load
    t0 = time.perf_counter()
    for _ in range(repeat):
        lp = solve_lp(model)
    lp_s = (time.perf_counter() - t0) / repeat

    t0 = time.perf_counter()
    sol = branch_and_bound(model)
    bnb_s = time.perf_counter() - t0
    return {"backend": "numpy" if os.environ.get("HUBPLAN_PURE_NUMPY")
            else "numba",
            "rows": model.n_rows, "cols": model.n_cols,
            "lp_iters": lp.iterations, "lp_s": lp_s,
            "bnb_nodes": sol.n_nodes, "bnb_s": bnb_s,
            "objective": sol.objective}


def run_child(pure, args):
    env = dict(os.environ)
    if pure:
        env["HUBPLAN_PURE_NUMPY"] = "1"
    else:
        env.pop("HUBPLAN_PURE_NUMPY", None)
    cmd = [sys.executable, os.path.abspath(__file__), "--child",
           "--n", str(args.n), "--seed", str(args.seed),
           "--repeat", str(args.repeat)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout.splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=6, help="scenario count")
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3,
                    help="root-LP solves to average")
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        print(json.dumps(run_workload(args.n, args.seed, args.repeat)))
        return

    rows = [run_child(pure, args) for pure in (False, True)]
    if abs(rows[0]["objective"] - rows[1]["objective"]) \
            > 1e-9 * max(1.0, abs(rows[0]["objective"])):
        raise SystemExit("backends disagree on the optimum")
    print(f"model: {rows[0]['rows']} rows x {rows[0]['cols']} cols, "
          f"{args.n} scenarios")
    print(f"{'backend':<8} {'lp_s':>8} {'bnb_s':>8} {'nodes':>6}")
    for r in rows:
        print(f"{r['backend']:<8} {r['lp_s']:>8.3f} {r['bnb_s']:>8.2f} "
              f"{r['bnb_nodes']:>6}")
    print(f"speedup: lp {rows[1]['lp_s'] / rows[0]['lp_s']:.1f}x, "
          f"bnb {rows[1]['bnb_s'] / rows[0]['bnb_s']:.1f}x")


if __name__ == "__main__":
    main()
