"""Smoke test for the tsvar Python module.

Build and run from the workspace root:

    cargo build --release -p tsvar-py --features extension-module
    cp target/release/libtsvar_py.so crates/py/python/tsvar.so
    python3 crates/py/python/smoke_test.py
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import tsvar  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    z = tsvar.TimeScale.naturals()
    assert z.sigma(3) == 4 and z.mu(3) == 1 and z.rho(0) == 0
    mixed = tsvar.TimeScale("union(interval(0,1), arith(2,1))")
    assert mixed.sigma(1) == 2 and mixed.mu(0.5) == 0
    assert not mixed.contains(1.5)

    assert tsvar.integrate(z, "t", 0, 3) == 3
    ray = tsvar.TimeScale("ray(0)")
    close(tsvar.integrate(ray, lambda t: math.exp(-t), 0, 5), 1 - math.exp(-5), 1e-6)
    est = tsvar.improper_integral(ray, "1", [10, 20, 30, 40, 50])
    assert est["kind"] == "diverges_plus", est

    try:
        tsvar.TimeScale("union(ray(0), ray(x))")
    except ValueError:
        pass
    else:
        raise AssertionError("bad DSL accepted")

    ids = tsvar.corpus_ids()
    assert {"ex-neg", "ex-pos", "lqr-z", "lqr-r"} <= set(ids), ids

    ex_neg = tsvar.Problem.corpus("ex-neg")
    r = ex_neg.verify("const")
    close(r["transversality"]["value"], 1.0, 1e-9)
    assert r["verdict"] == ex_neg.expected("const") == "el_fails_transversality"

    ex_pos = tsvar.Problem.corpus("ex-pos")
    assert ex_pos.residual("const")["sup_norm"] <= 1e-12
    assert ex_pos.verify("const")["verdict"] == "consistent"

    lqr = tsvar.Problem.from_json(tsvar.Problem.corpus("lqr-z").to_json())
    sol = lqr.solve(4)
    oracle = [34 / 34, 13 / 34, 5 / 34, 2 / 34, 1 / 34]
    for (t, x), want in zip(sol["trajectory"], oracle):
        close(x[0], want, 1e-6)

    pinned = ex_pos.solve(2, terminal=[1.0], h=1e-2)
    close(pinned["objective"], -2.0, 1e-9)

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
