#!/usr/bin/env python3
"""Solve a blackstart MPS file with HiGHS.

Usage: milp_solve.py MODEL.mps SOLUTION.sol [--time-limit SECONDS] [--scipy]

Uses the `highspy` bindings when installed, otherwise scipy's bundled HiGHS.
The scipy path runs with presolve disabled: the HiGHS release bundled with
scipy 1.15 reports a suboptimal point as optimal on some of these models
when presolve is on.

Reads the free-format dialect written by `blackstart export-mps` and writes
one `name value` line per column, preceded by a status sentinel
(`=optimal=`, `=feasible=` or `=infeasible=`). Exits nonzero on solver error.
"""

import argparse
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix


def read_mps(path):
    rows, senses, row_of = [], [], {}
    cols, col_of = [], {}
    cost, entries, rhs = [], [], {}
    lower, upper, integer = [], [], []
    offset = 0.0
    section = None
    with open(path) as fh:
        for raw in fh:
            if not raw.strip() or raw.startswith("*"):
                continue
            fields = raw.split()
            if not raw.startswith(" "):
                section = fields[0]
                continue
            if section == "ROWS":
                kind, name = fields
                if kind == "N":
                    continue
                row_of[name] = len(rows)
                rows.append(name)
                senses.append(kind)
            elif section == "COLUMNS":
                name, row, value = fields
                if name not in col_of:
                    col_of[name] = len(cols)
                    cols.append(name)
                    cost.append(0.0)
                    lower.append(0.0)
                    upper.append(np.inf)
                    integer.append(0)
                j = col_of[name]
                if row == "obj":
                    cost[j] = float(value)
                else:
                    entries.append((row_of[row], j, float(value)))
            elif section == "RHS":
                _, row, value = fields
                if row == "obj":
                    offset = -float(value)
                else:
                    rhs[row_of[row]] = float(value)
            elif section == "BOUNDS":
                kind, _, name = fields[:3]
                j = col_of[name]
                value = float(fields[3]) if len(fields) > 3 else None
                if kind == "BV":
                    lower[j], upper[j], integer[j] = 0.0, 1.0, 1
                elif kind in ("LO", "LI"):
                    lower[j] = value
                    integer[j] |= kind == "LI"
                elif kind in ("UP", "UI"):
                    upper[j] = value
                    integer[j] |= kind == "UI"
                elif kind == "MI":
                    lower[j] = -np.inf
                elif kind == "PL":
                    upper[j] = np.inf
                elif kind == "FX":
                    lower[j] = upper[j] = value
                elif kind == "FR":
                    lower[j], upper[j] = -np.inf, np.inf
                else:
                    raise ValueError(f"unsupported bound {kind}")
    m, n = len(rows), len(cols)
    b = np.array([rhs.get(i, 0.0) for i in range(m)])
    lo = np.where([s in ("G", "E") for s in senses], b, -np.inf) if m else b
    hi = np.where([s in ("L", "E") for s in senses], b, np.inf) if m else b
    if entries:
        i, j, v = zip(*entries)
        a = coo_matrix((v, (i, j)), shape=(m, n)).tocsr()
    else:
        a = coo_matrix((m, n)).tocsr()
    return {
        "cols": cols,
        "c": np.array(cost),
        "A": a,
        "lo": lo,
        "hi": hi,
        "lower": np.array(lower),
        "upper": np.array(upper),
        "integer": np.array(integer),
        "offset": offset,
    }


def write_solution(path, status, objective, names, values):
    with open(path, "w") as out:
        out.write(f"={status}=\n")
        if status == "infeasible":
            return
        out.write(f"# objective {objective!r}\n")
        for name, x in zip(names, values):
            out.write(f"{name} {float(x)!r}\n")


def solve_highspy(args, highspy):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    if args.time_limit:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.mps) == highspy.HighsStatus.kError:
        print("cannot read model", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        write_solution(args.sol, "infeasible", None, [], [])
        return 0
    solution = h.getSolution()
    if not solution.value_valid:
        print(f"solver failed: {h.modelStatusToString(status)}", file=sys.stderr)
        return 1
    verdict = "optimal" if status == highspy.HighsModelStatus.kOptimal else "feasible"
    names = h.getLp().col_names_
    write_solution(args.sol, verdict, h.getInfo().objective_function_value, names, solution.col_value)
    return 0


def solve_scipy(args):
    p = read_mps(args.mps)
    options = {"mip_rel_gap": 0.0, "disp": False, "presolve": False}
    if args.time_limit:
        options["time_limit"] = args.time_limit
    constraints = [LinearConstraint(p["A"], p["lo"], p["hi"])] if p["A"].shape[0] else []
    res = milp(
        p["c"],
        constraints=constraints,
        integrality=p["integer"],
        bounds=Bounds(p["lower"], p["upper"]),
        options=options,
    )
    if res.status == 2:
        write_solution(args.sol, "infeasible", None, [], [])
        return 0
    if res.x is None:
        print(f"solver failed: {res.message}", file=sys.stderr)
        return 1
    verdict = "optimal" if res.status == 0 else "feasible"
    write_solution(args.sol, verdict, res.fun + p["offset"], p["cols"], res.x)
    return 0


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("mps")
    parser.add_argument("sol")
    parser.add_argument("--time-limit", type=float, default=None)
    parser.add_argument("--scipy", action="store_true", help="force the scipy backend")
    args = parser.parse_args()
    if not args.scipy:
        try:
            import highspy
        except ImportError:
            pass
        else:
            return solve_highspy(args, highspy)
    return solve_scipy(args)


if __name__ == "__main__":
    sys.exit(main())
