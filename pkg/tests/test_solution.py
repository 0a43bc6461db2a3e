import math

import numpy as np
import pytest

from dampedwave.initial_data import SmoothBump, make_datum
from dampedwave.oracles import spectral_solve
from dampedwave.quadrature import QuadratureConvergenceError
from dampedwave.solution import (FieldSample, dimension_constants,
                                 error_decay_diagnostic, eval_dir2_u,
                                 eval_grad_u, eval_principal_general_n,
                                 eval_u, heat_eval, wave_factor)


def test_dimension_constants():
    c1 = dimension_constants(1)
    c2 = dimension_constants(2)
    c3 = dimension_constants(3)
    assert (c1.parity, c1.ell) == ("odd", 0)
    assert (c2.parity, c2.ell) == ("even", 1)
    assert (c3.parity, c3.ell) == ("odd", 1)
    assert c1.gamma == pytest.approx(0.5, rel=1e-15)
    assert c2.gamma == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-15)
    assert c3.gamma == pytest.approx(1.0 / (16.0 * math.pi), rel=1e-15)


def test_wave_factor_underflow_guard():
    assert wave_factor(10.0) == pytest.approx(math.exp(-5.0), rel=1e-15)
    assert wave_factor(2000.0) == 0.0


def test_sample_decomposition_identity(two_2d):
    # value = principal + wave_remainder holds exactly, not to tolerance.
    for x, t in (([0.2, 0.1], 3.0), ([1.0, -1.0], 12.0), ([6.0, 2.0], 7.5)):
        sample = eval_u(two_2d, np.array(x), t)
        assert isinstance(sample, FieldSample)
        assert sample.value == sample.principal + sample.wave_remainder


def test_small_time_recovers_datum(single_1d, two_2d):
    for datum, x in ((single_1d, np.array([0.2])),
                     (two_2d, np.array([0.3, 0.1]))):
        t = 0.01
        u = eval_u(datum, x, t).value
        f = datum.value(x)
        assert u == pytest.approx(f, abs=0.02 * max(1.0, abs(f)))


def test_pde_residual_under_fd(single_1d, two_2d):
    # u_tt - Lap u + u_t = 0 via central differences in t and x.
    h = 1e-3
    cases = ((single_1d, np.array([0.4]), 2.5),
             (two_2d, np.array([0.5, 0.2]), 3.0))
    for datum, x, t in cases:
        n = datum.dimension
        u0 = eval_u(datum, x, t).value
        utp = eval_u(datum, x, t + h).value
        utm = eval_u(datum, x, t - h).value
        u_tt = (utp - 2.0 * u0 + utm) / (h * h)
        u_t = (utp - utm) / (2.0 * h)
        lap = 0.0
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            lap += (eval_u(datum, x + e, t).value - 2.0 * u0
                    + eval_u(datum, x - e, t).value) / (h * h)
        residual = u_tt - lap + u_t
        scale = abs(u_tt) + abs(lap) + abs(u_t) + 1e-12
        assert abs(residual) / scale < 1e-3, (datum.dimension, residual)


def test_linearity_over_bumps():
    b1 = SmoothBump((-0.5,), 0.7, 1.0)
    b2 = SmoothBump((0.9,), 0.4, 0.6)
    both = make_datum([b1, b2], 1)
    first = make_datum([b1], 1)
    second = make_datum([b2], 1)
    for x, t in ((np.array([0.3]), 4.0), (np.array([-2.0]), 9.0)):
        s_both = eval_u(both, x, t)
        s1 = eval_u(first, x, t)
        s2 = eval_u(second, x, t)
        assert s_both.value == pytest.approx(s1.value + s2.value,
                                             rel=1e-13, abs=1e-16)


def test_translation_invariance():
    base = make_datum([SmoothBump((0.0, 0.0), 1.0, 1.0)], 2)
    moved = make_datum([SmoothBump((3.0, -2.0), 1.0, 1.0)], 2)
    shift = np.array([3.0, -2.0])
    for x, t in ((np.array([0.5, 0.2]), 6.0), (np.array([2.0, 1.0]), 11.0)):
        a = eval_u(base, x, t).value
        b = eval_u(moved, x + shift, t).value
        assert b == pytest.approx(a, rel=1e-12, abs=1e-18)


def test_gradient_matches_fd(two_2d):
    h = 1e-4
    for x, t in ((np.array([0.5, 0.1]), 3.0), (np.array([2.5, 1.0]), 8.0)):
        grad = eval_grad_u(two_2d, x, t)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (eval_u(two_2d, x + e, t).value
                  - eval_u(two_2d, x - e, t).value) / (2.0 * h)
            assert grad[i] == pytest.approx(fd, rel=5e-6, abs=1e-9)


def test_dir2_matches_fd(two_2d):
    rng = np.random.default_rng(6)

    def second_diff(x, t, w, h):
        return (eval_u(two_2d, x + h * w, t).value
                - 2.0 * eval_u(two_2d, x, t).value
                + eval_u(two_2d, x - h * w, t).value) / (h * h)

    for x, t in ((np.array([0.5, 0.1]), 3.0), (np.array([1.5, -0.5]), 7.0)):
        w = rng.normal(size=2)
        w /= np.linalg.norm(w)
        # Second derivatives at short times need more nodes than the default.
        d2 = eval_dir2_u(two_2d, x, t, w, order=128)
        coarse = second_diff(x, t, w, 1e-3)
        fine = second_diff(x, t, w, 5e-4)
        fd = (4.0 * fine - coarse) / 3.0
        assert d2 == pytest.approx(fd, rel=5e-6, abs=1e-10)


def test_radial_path_matches_direct(single_3d):
    single_2d = make_datum([SmoothBump((0.0, 0.0), 1.0, 1.0)], 2)
    for datum in (single_2d, single_3d):
        n = datum.dimension
        for dist, t in ((0.0, 6.0), (1.7, 6.0), (4.0, 9.0)):
            x = np.zeros(n)
            x[0] = dist
            direct = eval_u(datum, x, t).principal
            radial = eval_principal_general_n(datum, x, t)
            assert radial == pytest.approx(direct, rel=1e-9, abs=1e-16)


def test_radial_path_rejects_unsupported():
    d4 = make_datum([SmoothBump((0.0,) * 4, 1.0, 1.0)], 4)
    two = make_datum([SmoothBump((0.0,) * 4, 1.0, 1.0),
                      SmoothBump((3.0, 0.0, 0.0, 0.0), 0.5, 1.0)], 4)
    val = eval_principal_general_n(d4, np.zeros(4), 5.0)
    assert math.isfinite(val) and val != 0.0
    with pytest.raises(ValueError):
        eval_principal_general_n(two, np.zeros(4), 5.0)


def test_matches_spectral_oracle_3d(single_3d):
    t = 5.0
    run = spectral_solve(single_3d, t, 8.0, 64)
    rng = np.random.default_rng(7)
    # Grid nodes only: interpolation is exact there, so the comparison sees
    # pure solver disagreement.
    checked = 0
    worst = 0.0
    while checked < 40:
        x = np.array([ax[rng.integers(ax.size)] for ax in run.axes])
        if np.linalg.norm(x) > 6.5:
            continue
        exact = eval_u(single_3d, x, t).value
        oracle = float(run.interpolate(x[None, :])[0])
        worst = max(worst, abs(exact - oracle))
        checked += 1
    assert worst < 3e-4


def test_refinement_check_flags_underresolution(two_2d):
    x = np.array([0.5, 0.1])
    with pytest.raises(QuadratureConvergenceError):
        eval_grad_u(two_2d, x, 3.0, order=24, check=True)
    grad = eval_grad_u(two_2d, x, 3.0, order=96, check=True)
    assert np.all(np.isfinite(grad))


def test_heat_eval_matches_trapezoid(unit_1d):
    t = 2.0
    x = np.array([0.3])
    y = np.linspace(-1.0, 1.0, 40001)
    f = unit_1d.value(y[:, None])
    kern = np.exp(-((x[0] - y) ** 2) / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
    ref = float(np.trapezoid(f * kern, y))
    assert heat_eval(unit_1d, x, t) == pytest.approx(ref, rel=1e-8)


def test_heat_profile_limit(two_2d):
    # At large times the smeared field flattens toward a centered Gaussian
    # carrying the total mass; the spread of the datum enters at O(1/t).
    t = 4000.0
    x = np.array([0.4, 0.2])
    gauss = heat_eval(two_2d, x, t)
    closed = two_2d.mass / (4.0 * math.pi * t) * math.exp(
        -float((x - two_2d.centroid) @ (x - two_2d.centroid)) / (4.0 * t))
    assert gauss == pytest.approx(closed, rel=2e-3)


def test_wave_remainder_normalized_decay(unit_1d, two_2d):
    for datum in (unit_1d, two_2d):
        rows = error_decay_diagnostic(datum, [10.0, 20.0, 40.0, 80.0])
        values = [v for _, v in rows]
        assert all(v > 0.0 for v in values)
        for earlier, later in zip(values, values[1:]):
            assert later <= earlier * 1.2


def test_outside_light_cone_zero(single_1d):
    assert eval_u(single_1d, np.array([12.0]), 10.0).value == 0.0
    sample = eval_u(single_1d, np.array([12.0]), 10.0)
    assert sample.principal == 0.0 and sample.wave_remainder == 0.0
