"""Smoke test for the entcert extension module.

Build and install first:  pip install -e crates/python --no-build-isolation
Then run:                 python python/smoke_test.py
"""

import math
import os

import entcert


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    bell = entcert.PureState.named("bell")
    close(entcert.geometric_measure(bell), 0.5, 1e-9)
    close(entcert.ggm(entcert.PureState.cluster(4)), 0.5, 1e-9)
    coeffs = entcert.schmidt_coefficients(bell, [0])
    close(sum(c * c for c in coeffs), 1.0, 1e-12)

    zz = entcert.Observable.pauli([(1.0, "ZZ")], label="ZZ")
    close(zz.expectation(bell), 1.0, 1e-12)
    assert zz.spectral_range() == (-1.0, 1.0)

    proj = entcert.Observable([2, 2], [[0.5, 0, 0, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0.5, 0, 0, 0.5]], "P")
    ev = entcert.dual_value(proj, measure="geometric", audit_samples=2000)
    close(ev.value, 1 / math.sqrt(2), 1e-6)
    assert ev.samples_checked == 2000

    ops, values = entcert.scenario_record("bell", 0.3, d=3)
    close(values[0], 0.7, 1e-12)
    res = entcert.lower_bound(ops, values)
    assert res.status == "converged", res
    assert res.bound > 0.05 and len(res.slope) == 3
    scaled = entcert.lower_bound([o.scaled(2.0) for o in ops], [2 * v for v in values])
    close(scaled.bound, res.bound, 1e-6)

    zero = entcert.lower_bound(ops, [0.0, 0.0, 0.0])
    close(zero.bound, 0.0, 1e-12)
    assert entcert.lower_bound([zz], [1.5]).status == "infeasible_suspected"

    rows, threshold = entcert.sweep("bell", 0.6, 0.7, 0.05)
    assert [r[0] for r in rows] == [0.6, 0.65, 0.7]
    assert 0.6 <= threshold <= 0.7

    close(entcert.wc_threshold(4), 1 / 3, 1e-15)
    close(entcert.ww_threshold(), 4 / 15, 1e-15)

    record = os.path.join(os.path.dirname(__file__), "..", "crates", "cli", "tests", "data", "cluster4_experiment.json")
    obs, vals, sigmas, measure = entcert.load_record(record)
    assert measure == "ggm" and len(obs) == 4 and len(sigmas) == 4
    print(f"experimental record bound: {entcert.lower_bound(obs, vals, measure).bound:.4f}")

    try:
        entcert.Observable.pauli([(1.0, "ZQ")])
    except ValueError as e:
        assert "Pauli" in str(e) or "term" in str(e), e
    else:
        raise AssertionError("bad Pauli letter accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
