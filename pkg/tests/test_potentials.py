import numpy as np
import pytest
from hypothesis import given, strategies as st

from conifold_forge.conifold import ModelPoint, make_cyl_chart, phi_apply, scale_action, smoothing_point
from conifold_forge.errors import FitFailureError, OutsideDomainError
from conifold_forge.jets import Jet, ddbar, jet_space
from conifold_forge.potentials import (
    F1_C0_EXACT,
    SmoothStep,
    co_integral,
    co_metric,
    co_resolution_profile,
    co_smoothing_coeffs,
    co_smoothing_jet,
    co_smoothing_potential,
    co_smoothing_value,
    cone_potential_jet,
    f1_asymptotics,
    f1_remainder,
    fly_cutoff,
    resolution_value,
    resolution_y,
)

from oracles import F1_C0_ORACLE, F1_TABLE, SMOOTHING_TABLE, random_link_frame

FACT = np.array([1.0, 1.0, 2.0, 6.0])


@pytest.mark.parametrize("key", sorted(SMOOTHING_TABLE))
def test_smoothing_potential_matches_quadrature_oracle(key):
    t, s = key
    want = np.array(SMOOTHING_TABLE[key])
    got = co_smoothing_coeffs(t, s, 3)[:4] * FACT
    assert np.allclose(got, want, rtol=1e-10, atol=0)


def test_smoothing_value_vanishes_on_cycle():
    assert co_smoothing_value(0.3, 0.3) == 0.0
    c = co_smoothing_coeffs(0.3, 0.3, 4)
    assert c[0] == 0.0 and c[1] > 0


def test_smoothing_domain_errors():
    with pytest.raises(OutsideDomainError):
        co_smoothing_potential(1.0, 0.5)
    with pytest.raises(OutsideDomainError, match="cone"):
        co_smoothing_potential(0.0, 0.5)


@given(st.floats(0.2, 3.0), st.floats(1.0001, 50.0), st.complex_numbers(min_magnitude=0.3, max_magnitude=2.0))
def test_smoothing_scaling(abs_t, ratio, lam):
    t0 = abs_t
    s = ratio * t0
    lhs = co_smoothing_value(abs(lam) ** 3 * t0, abs(lam) ** 3 * s)
    rhs = abs(lam) ** 2 * co_smoothing_value(t0, s)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_smoothing_large_radius_limit():
    s = 1e4
    assert co_smoothing_value(1.0, s) / (1.5 * s ** (2 / 3)) == pytest.approx(1.0, rel=1e-2)


def test_smoothing_approaches_cone_monotonically():
    s = 2.0
    ts = [0.5, 0.2, 0.1, 0.05, 0.01, 1e-4, 1e-6]
    gaps = np.array([abs(co_smoothing_value(t, s) - 1.5 * s ** (2 / 3)) for t in ts])
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 1e-3
    # the gap closes like |t|^(2/3)
    rate = gaps[-3:] / np.array(ts[-3:]) ** (2 / 3)
    assert np.ptp(rate) < 0.05 * rate.mean()


def test_quadrature_node_doubling():
    for T in (0.3, 2.0, 9.0):
        assert co_integral(T, 24) == pytest.approx(co_integral(T, 48), rel=1e-10)


def test_cone_potential_reference_value():
    p = smoothing_point(np.array([1, 1j, 0, 0]) / np.sqrt(2))
    ch = make_cyl_chart(p)
    assert cone_potential_jet(ch, None, 2).value == pytest.approx(1.0)
    g = ddbar(cone_potential_jet(ch, None, 2) * 1.5, 3).value
    assert np.linalg.eigvalsh(g)[0] > 0


def test_cone_potential_homogeneity():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a, b = random_link_frame(rng)
        z = rng.uniform(0.3, 2.0) * (a + 1j * b)
        lam = complex(*rng.uniform(0.3, 2.0, 2))
        p = smoothing_point(z)
        q = scale_action(lam, p)
        r2p = cone_potential_jet(make_cyl_chart(p), None, 0).value
        r2q = cone_potential_jet(make_cyl_chart(q), None, 0).value
        assert r2q == pytest.approx(abs(lam) ** 2 * r2p, rel=1e-12)


def test_metric_is_positive_on_vanishing_cycle():
    rng = np.random.default_rng(1)
    t = 0.2
    for _ in range(20):
        a, b = random_link_frame(rng)
        z = np.sqrt(t) * a  # |z|^2 = |t| with sum z^2 = t
        g = co_metric(t, make_cyl_chart(ModelPoint(z, t)), None, 0).value
        assert np.linalg.eigvalsh(g)[0] > 0


def test_chart_jets_satisfy_conjugation_symmetry():
    t = 0.1
    rng = np.random.default_rng(2)
    a, b = random_link_frame(rng)
    z = phi_apply(t, 0.8 * (a + 1j * b))
    f = co_smoothing_jet(t, make_cyl_chart(ModelPoint(z, t)), None, 4)
    for i, e in enumerate(f.space.exps):
        j = f.space.index[tuple(np.concatenate([e[3:], e[:3]]))]
        assert f.coef[i] == pytest.approx(np.conj(f.coef[j]), abs=1e-12)


def test_resolution_root_and_origin():
    assert resolution_y(1.0, 0.0) == 0.0
    assert resolution_value(1.0, 0.0) == 0.0
    x = np.geomspace(1e-3, 1e4, 30)
    y = resolution_y(1.0, x)
    assert np.all(y >= 0)
    assert np.allclose((y**3 + 6 * y**2) / x**2, 1.0, rtol=1e-12)
    with pytest.raises(OutsideDomainError):
        resolution_y(1.0, -1.0)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_resolution_scaling(a):
    x = np.linspace(0.0, 10.0, 41)
    assert np.allclose(resolution_value(a, x), a * a * resolution_value(1.0, x / a**3), rtol=1e-10, atol=1e-14)


def test_resolution_small_x_slope():
    x = 1e-4
    _, y = co_resolution_profile(1.0, x, 2)
    assert y.value.real / (x / np.sqrt(6)) == pytest.approx(1.0, abs=1e-3)


def test_resolution_jet_derivative_is_y_over_x():
    for x in (0.0, 0.5, 20.0):
        f, y = co_resolution_profile(1.0, x, 3)
        if x > 0:
            assert f.coef[1].real == pytest.approx(y.value.real / x, rel=1e-12)
        else:
            assert f.coef[1].real == pytest.approx(1 / np.sqrt(6), rel=1e-12)


@pytest.mark.parametrize("x", sorted(F1_TABLE))
def test_f1_matches_quadrature_oracle(x):
    val, rem = F1_TABLE[x]
    assert resolution_value(1.0, x) == pytest.approx(val, rel=1e-12)
    assert f1_remainder(x) == pytest.approx(rem, abs=1e-9)


def test_f1_constant_closed_form():
    assert F1_C0_EXACT == pytest.approx(F1_C0_ORACLE, rel=1e-15)


def test_f1_asymptotics_fit():
    res = f1_asymptotics(np.geomspace(1e3, 1e7, 41), F1_C0_EXACT)
    assert res.cauchy < 1e-4
    assert -0.8 <= res.exponent <= -0.55
    with pytest.raises(FitFailureError):
        f1_asymptotics([1e3, 1e4])


def test_smoothstep_jet_matches_values():
    st_ = SmoothStep(1.0, 2.0)
    assert st_(0.5) == 1.0 and st_(2.5) == 0.0
    x0, h = 1.3, 1e-5
    c = st_.coeffs(x0, 2)
    assert c[1] == pytest.approx((st_(x0 + h) - st_(x0 - h)) / (2 * h), rel=1e-7)


def test_cutoff_profile_coefficients():
    R = 100.0
    prof = fly_cutoff(R)
    tol = 10 / R**2
    assert prof.a == pytest.approx(-250, rel=tol)
    assert prof.b == pytest.approx(75, rel=tol)
    assert prof.c == pytest.approx(75 * R**-8, rel=tol)
    assert prof.d == pytest.approx(-150 * R**-4, rel=tol)
    assert prof.min_v >= -1e-12
    assert prof.min_div >= -350 / R**4


def test_cutoff_profile_plateaus():
    prof = fly_cutoff(30.0)
    assert np.allclose(prof.v([1.0, 3.0, 4.9]), 1.0)
    assert np.allclose(prof.v([30.0**2, 2000.0]), 0.0)
    s0, s1 = prof.knots
    raw = prof.v(np.array([s0, s1]), mollified=False)
    assert raw[0] == pytest.approx(1.0) and raw[1] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(OutsideDomainError):
        fly_cutoff(5.0)


def test_cutoff_jet_is_consistent():
    prof = fly_cutoff(20.0)
    s0, h = 40.0, 1e-4
    c = prof.coeffs(s0, 2)
    assert c[1] == pytest.approx(prof.v(s0)[0], rel=1e-10)
    fd = (prof.coeffs(s0 + h, 0)[0] - prof.coeffs(s0 - h, 0)[0]) / (2 * h)
    assert c[1] == pytest.approx(fd, rel=1e-6)
