"""Smoke test for the Python bindings.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import json
import math

import hyperint


def close(a, b, tol):
    return max(abs(x - y) for x, y in zip(a, b)) < tol


def main():
    # lemniscate against its closed form Γ(1/4)² / (2√(2π))
    exact = math.gamma(0.25) ** 2 / (2 * math.sqrt(2 * math.pi))
    assert abs(hyperint.lemniscate() - exact) < 1e-13

    fam = hyperint.Family.from_json(json.dumps({"kind": "double_cover_k3"}), seed=3)
    assert fam.genus == 2, fam
    inst = hyperint.Instance.random(fam, 5)
    u, pts = inst.u, inst.points
    assert all(fam.surface_residual(p) < 1e-10 for p in pts)
    assert close(fam.points_to_u(pts), u, 1e-9)
    assert len(fam.branch_points(u)) in (5, 6)

    # one of the two sheets over each x is the point itself
    xs = [p[0] for p in pts]
    for sheet in (1.0, -1.0):
        lifted = fam.lift_points(u, xs, [sheet] * len(xs))
        assert all(fam.surface_residual(q) < 1e-10 for q in lifted)
    up = fam.lift_points(u, xs, [1.0] * len(xs))
    down = fam.lift_points(u, xs, [-1.0] * len(xs))
    for p, a, b in zip(pts, up, down):
        assert min(abs(p[1] - a[1]), abs(p[1] - b[1])) < 1e-9 * max(1.0, abs(p[1]))

    psi = fam.abel_jacobi(u, pts)
    assert len(psi) == 2
    assert fam.involutivity_residual(pts) < 1e-9
    assert fam.canonical_residual(u, pts) < 1e-6

    flow = fam.flow(pts, m=1, t=0.01, samples=4)
    assert len(flow["times"]) == 5
    du = max(abs(a - b) for row in flow["u"] for a, b in zip(row, flow["u"][0]))
    assert du < 1e-8
    for t, row in zip(flow["times"], flow["psi"]):
        assert abs(row[0] - flow["psi"][0][0] - t) < 1e-6
        assert abs(row[1] - flow["psi"][0][1]) < 1e-6

    neu = hyperint.Neumann([0.3, 1.1, 2.0, 3.4])
    q, p = neu.random_state(7)
    f = neu.integrals(q, p)
    assert abs(sum(f) - 1.0) < 1e-12
    h = neu.energy(q, p)
    assert abs(h - 0.5 * sum(c * v for c, v in zip([0.3, 1.1, 2.0, 3.4], f))) < 1e-12
    u_n = neu.spectral_u(q, p)
    assert abs(neu.hamiltonian_of_u(u_n) - h) < 1e-10
    xs = sorted(pt[0].real for pt in neu.separated_points(q, p))
    assert 0.3 <= xs[0] <= 1.1 <= xs[1] <= 2.0 <= xs[2] <= 3.4
    times, states = neu.integrate(q, p, 1.0, samples=5)
    f1 = neu.integrals(*states[-1])
    assert close(f, f1, 1e-9)

    report = hyperint.run(
        "verify",
        json.dumps({"family": {"kind": "rational_elliptic"}, "seed": 1,
                    "instance": {"count": 2}, "checks": ["roundtrip", "monodromy"]}),
    )
    assert report["summary"] == {"pass_count": 2, "fail_count": 0}, report["summary"]

    try:
        hyperint.run("verify", "{\"bogus\": 1}")
    except ValueError as e:
        assert "bogus" in str(e)
    else:
        raise AssertionError("config error not raised")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
