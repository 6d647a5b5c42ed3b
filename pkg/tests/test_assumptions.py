import numpy as np
import pytest

from csimplex.assumptions import (
    AssumptionError,
    check_as2,
    check_as3,
    check_as4,
    default_resolution,
    find_epsilon,
    find_kappa,
    jury_condition_ricker2d,
    power_radius,
    run_assumption_checks,
    spectral_radius,
)
from csimplex.maps import (
    KolmogorovMap,
    atkinson_allen,
    beverton_holt,
    eval_F,
    leslie_gower,
    ricker1d,
    ricker2d,
)

RNG = np.random.default_rng(101)


def test_spectral_radius_trivial():
    assert spectral_radius(np.eye(3)) == pytest.approx(1.0)
    assert spectral_radius(np.zeros((4, 4))) == 0.0
    assert spectral_radius([[0.5, 0.25], [0.25, 0.5]]) == pytest.approx(0.75)


def test_spectral_radius_oracle_agreement():
    # dense eigensolve vs shifted power iteration on random nonnegative matrices
    for _ in range(1000):
        d = int(RNG.integers(1, 5))
        m = RNG.random((d, d))
        assert abs(spectral_radius(m, "eig") - spectral_radius(m, "power")) < 1e-10


def test_spectral_radius_input_validation():
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(ValueError):
        spectral_radius([[np.inf, 0.0], [0.0, 1.0]])


def test_power_radius_periodic_matrix():
    # the +I shift removes the period-2 obstruction
    assert power_radius(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)


def test_check_as2():
    assert check_as2(beverton_holt(), 1e-12).ok
    assert check_as2(ricker2d(0.7, 0.3, 1.2, 0.8), 1e-12).ok

    def f(x):
        return np.array([1.5 / (1.0 + x[0])])

    shifted = KolmogorovMap("shifted", 1, {}, f, None)
    res = check_as2(shifted, 1e-12)
    assert not res.ok
    assert res.max_deviation == pytest.approx(0.25)


def test_check_as3_modes():
    assert check_as3(ricker2d(0.5, 0.5, 0.5, 0.5), 1.1, 16).mode == "strict"
    assert check_as3(ricker2d(0.5, 0.5, 0.0, 0.0), 1.1, 16).mode == "weak"
    assert check_as3(beverton_holt(), 2.0, 64).mode == "strict"

    def f(x):
        return np.array([np.exp(1.0 - x[0] + 0.1 * x[1]), np.exp(1.0 - x[1])])

    bad = KolmogorovMap("mutualist", 2, {}, f, None)
    res = check_as3(bad, 1.0, 8)
    assert res.mode == "fail"
    assert res.worst_value > 0.0
    assert res.worst_entry == (0, 1)


def test_check_as4_examples():
    res = check_as4(ricker1d(0.5), 0.5, 64)
    assert res.ok
    assert res.max_rho == pytest.approx(0.75, abs=1e-12)
    assert res.argmax_point[0] == pytest.approx(1.5)

    res = check_as4(ricker1d(1.5), 0.1, 64)
    assert not res.ok
    assert res.max_rho > 1.0

    assert check_as4(ricker2d(0.5, 0.5, 0.5, 0.5), 0.05, 32).ok


def test_check_as4_monotone_in_kappa():
    kmap = ricker2d(0.5, 0.5, 0.5, 0.5)
    big = check_as4(kmap, 0.25, 24)
    small = check_as4(kmap, 0.1, 24)
    assert big.ok and small.ok
    assert small.max_rho <= big.max_rho + 1e-12


def test_jury_condition_examples():
    assert jury_condition_ricker2d(0.5, 0.5, 0.5, 0.5)
    assert not jury_condition_ricker2d(1.5, 1.5, 0.0, 0.0)
    assert not jury_condition_ricker2d(0.5, 0.5, 2.0, 2.0)


def test_jury_cross_validates_grid_check():
    # when the corner condition holds, the sampled spectral check passes too
    for _ in range(100):
        r, s = RNG.uniform(0.05, 0.95, 2)
        a, b = RNG.uniform(0.0, 1.5, 2)
        if jury_condition_ricker2d(r, s, a, b):
            res = check_as4(ricker2d(r, s, a, b), 0.0, 16, margin=0.0)
            assert res.max_rho < 1.0


def test_find_kappa_examples():
    assert find_kappa(beverton_holt(), 64, kappa_max=1.0) == 1.0
    assert find_kappa(atkinson_allen(0.5), 64, kappa_max=1.0) == 1.0
    kappa = find_kappa(ricker1d(0.5), 64, kappa_max=2.0)
    assert 0.0 < kappa < 1.0
    with pytest.raises(AssumptionError):
        find_kappa(ricker1d(1.5), 64, kappa_max=1.0)


def test_find_epsilon_examples():
    assert find_epsilon(beverton_holt(), 0.01) == 0.5
    assert find_epsilon(ricker1d(0.5), 0.01) == 0.5

    def f(x):
        return np.array([1.0])

    flat = KolmogorovMap("flat", 1, {}, f, None)
    with pytest.raises(AssumptionError):
        find_epsilon(flat, 0.01)


def test_epsilon_repeller_property():
    for kmap in [beverton_holt(), ricker2d(0.5, 0.5, 0.5, 0.5), leslie_gower()]:
        tol = 0.01
        eps = find_epsilon(kmap, tol)
        for _ in range(200):
            u = RNG.dirichlet(np.ones(kmap.dim))
            x = RNG.random() * eps * u
            if x.sum() == 0.0:
                continue
            assert eval_F(kmap, x).sum() >= (1.0 + tol) * x.sum() - 1e-12


def test_default_resolutions():
    assert default_resolution(1) == 64
    assert default_resolution(2) == 64
    assert default_resolution(3) == 24
    assert default_resolution(4) == 12


def test_run_assumption_checks_passing():
    report = run_assumption_checks(ricker2d(0.5, 0.5, 0.5, 0.5), resolution=24)
    assert report.passed
    assert report.as3_mode == "strict"
    assert report.kappa == 0.25
    assert report.epsilon == 0.5
    d = report.to_dict()
    assert d["passed"] is True
    import json

    json.dumps(d)  # report must be serializable as-is


def test_run_assumption_checks_weak_mode():
    report = run_assumption_checks(ricker2d(0.5, 0.5, 0.0, 0.0), resolution=24)
    assert report.passed
    assert report.as3_mode == "weak"


def test_run_assumption_checks_rejects_steep_ricker():
    report = run_assumption_checks(ricker1d(1.5), resolution=64)
    assert not report.passed
    assert not report.as4_ok
    assert report.as4_max_rho > 1.0
    assert report.as4_argmax[0] <= 1.0
    assert report.kappa is None
