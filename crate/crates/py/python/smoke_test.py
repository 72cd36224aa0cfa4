"""Smoke test for the twistlab extension module.

Build and install with `maturin develop --release` from crates/py, or copy
target/release/libtwistlab_py.so to twistlab.so on PYTHONPATH, then run
`python crates/py/python/smoke_test.py` (or `pytest` on this file).
"""

import math

import twistlab


def test_random_exponent():
    r = twistlab.random_exponent(0.3)
    assert abs(r.value - 0.0547518) < 1e-6
    assert r.estimator == "quadrature"
    assert twistlab.random_exponent(0.0).value == 0.0
    small = twistlab.random_exponent_series(0.1, "small")
    assert abs(small - twistlab.random_exponent(0.1).value) < 0.01 * small


def test_montecarlo_matches_quadrature():
    mc = twistlab.random_exponent_montecarlo(3.0, 20000, 8, seed=5)
    r = twistlab.random_exponent(3.0).value
    assert abs(mc.value - r) < 5 * mc.std_error
    assert mc.kappa > 0


def test_rotations():
    g = twistlab.Rotation.haar(7)
    h = twistlab.Rotation([0.0, 0.0, 1.0], math.pi / 2)
    assert [round(x, 12) for x in h.apply([1.0, 0.0, 0.0])] == [0.0, 1.0, 0.0]
    v = g.compose(g.inverse()).apply([0.3, 0.4, 0.5])
    assert max(abs(a - b) for a, b in zip(v, [0.3, 0.4, 0.5])) < 1e-12
    assert 0.0 <= g.angle <= 2 * math.pi


def test_twist_preserves_height():
    f = twistlab.TwistFamily(0.7)
    p = f.apply([0.6, 0.0, 0.8])
    assert abs(p[2] - 0.8) < 1e-12


def test_fixed_points():
    pts = twistlab.find_fixed_points(0.3, 2.0, 0.5)
    assert len(pts) % 2 == 0 and len(pts) >= 2
    letters = [p.stability for p in pts]
    assert letters.count("E") - letters.count("H") + letters.count("R") == 2
    assert max(p.max_modulus for p in pts) <= twistlab.max_eigenvalue(0.5) + 1e-6


def test_orbit_averages():
    lam, sigma = twistlab.lambda_for_rotation(twistlab.Rotation.identity(), 2.0, 4, 1024)
    assert abs(lam) < 0.05 and sigma >= 0
    scan = twistlab.lambda_scan(1.0, 4, 4, 256)
    assert len(scan.cells) > 0 and scan.sigma_total >= scan.sigma_s2
    d = twistlab.diffused_exponent(1.0, 2 * math.pi, 2000, 4, 2)
    assert d.value > 0


def test_linear():
    a = [[2.0, 0.0], [0.0, 0.5]]
    assert abs(twistlab.avila_bochi(a) - math.log(1.25)) < 1e-12
    assert abs(twistlab.lambda_of_coset(a) - twistlab.avila_bochi(a)) < 1e-4
    e = twistlab.random_product_exponent([[[1, 0], [1, 1]], [[1, 1], [0, 1]]], 20000, 8)
    assert e.value > 3 * e.std_error


def test_errors_map_to_value_error():
    for bad in (lambda: twistlab.random_exponent(-1.0), lambda: twistlab.solve_kepler(7.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print("ok", name)
