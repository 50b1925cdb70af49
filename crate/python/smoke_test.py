#!/usr/bin/env python3
"""Smoke test for the `blackstart` extension module.

Build first:  cargo build --release -p blackstart-py
Then run:     python3 python/smoke_test.py

The built library (target/release/libblackstart_py.so) is copied into a
temporary directory as `blackstart.so` and imported from there.
"""

import importlib
import importlib.util
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SOLVER = f"{sys.executable} {ROOT}/scripts/milp_solve.py {{mps}} {{sol}}"


def import_module():
    lib = os.environ.get("BLACKSTART_PY_LIB")
    if lib is None:
        for profile in ("release", "debug"):
            for name in ("libblackstart_py.so", "libblackstart_py.dylib"):
                path = os.path.join(ROOT, "target", profile, name)
                if os.path.exists(path):
                    lib = path
                    break
            if lib:
                break
    if lib is None:
        sys.exit("extension not built; run `cargo build --release -p blackstart-py`")
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "blackstart.so"))
    sys.path.insert(0, tmp)
    return importlib.import_module("blackstart")


def have_solver():
    return any(importlib.util.find_spec(m) for m in ("highspy", "scipy"))


def case(bs, name):
    return bs.Case.load(os.path.join(ROOT, "cases", f"{name}.json"))


def main():
    bs = import_module()

    ring = case(bs, "t5_ring")
    print(ring)
    model = bs.encode(ring)
    assert model.n_variables > 0 and model.n_constraints > 0
    again = bs.Model.from_mps(model.to_mps())
    assert again.variable_names() == model.variable_names()
    assert again.constraint_names() == model.constraint_names()

    exact = bs.solve(ring, "enum", workers=2)
    assert exact.status == "optimal", exact
    report = bs.validate(ring, exact.schedule)
    assert report["pass"] and not report["violations"]

    if have_solver():
        milp = bs.solve(ring, "external", solver_cmd=SOLVER)
        assert milp.status == "optimal", milp
        assert abs(milp.objective - exact.objective) <= 1e-6 * max(1.0, abs(exact.objective))
        print(f"enumeration {exact.objective:.4f} == milp {milp.objective:.4f}")
    else:
        print("no MILP solver available; skipped external backend")

    rows, average = bs.gsus_table(ring, exact.schedule)
    print("gsus", rows, "average", average)
    assert all(m is None or m >= 0 for _, m in rows)

    chain = bs.energization_chain(ring, exact.schedule, ring.bus_ids[-1])
    steps = [s for _, _, s in chain]
    assert steps == sorted(steps, reverse=True), chain

    detected, total = bs.mutation_suite(ring, exact.schedule)
    assert detected == total and total > 0, (detected, total)

    csv = bs.restored_power_csv(ring, exact.schedule)
    assert csv.startswith("minute,generation_mw,storage_mw,system_mw")

    swapped = ring.battery_variant()
    twin = bs.solve(swapped, "enum")
    assert bs.gsus_table(swapped, twin.schedule) == (rows, average)

    table, averages = bs.sweep(ring, "fc_capacity", ["5", "15", "30"], backend="enum")
    assert len(averages) == 3 and all(a is not None for a in averages), table
    print(table)

    try:
        bs.Case.from_json("{}")
    except ValueError as e:
        print("rejected:", str(e).splitlines()[0])
    else:
        raise AssertionError("empty case accepted")

    print("ok")


if __name__ == "__main__":
    main()
