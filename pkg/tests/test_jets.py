import numpy as np
import pytest
from hypothesis import given, strategies as st

from conifold_forge.jets import (
    Jet,
    ddbar,
    det3,
    expm,
    inv,
    jet_space,
    jexp,
    jlog,
    jsqrt,
    matmul,
    stack,
)

SP = jet_space(6, 4)
coords = st.floats(-0.6, 0.6, allow_nan=False)
base6 = st.lists(coords, min_size=6, max_size=6)


def _vars(base):
    return Jet.variables(SP, np.asarray(base, dtype=complex))


def _fd_partial(f, base, var, h=1e-5):
    e = np.zeros(6, dtype=complex)
    e[var] = h
    b = np.asarray(base, dtype=complex)
    return (f(b + e) - f(b - e)) / (2 * h)


def test_space_sizes():
    assert jet_space(6, 4).size == 210
    assert jet_space(6, 5).size == 462
    assert jet_space(1, 4).size == 5


def test_variable_jets_have_unit_slope():
    w = _vars([0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    for i, x in enumerate(w):
        d = np.zeros(6, dtype=int)
        d[i] = 1
        assert x.partial(d) == 1
        assert x.value == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5, 0.6][i])


def test_power_second_mixed_partial():
    w = _vars([0.3, 0.1j, 0.2, 0.3, -0.1j, 0.2])
    f = (w[0] * w[3] + w[1] * w[4] + 1.0) ** (2 / 3)
    s = 1 + 0.09 + 0.01
    want = 2 / 3 * s ** (-1 / 3) - 2 / 9 * s ** (-4 / 3) * 0.09
    assert f.d(0).d(3).value == pytest.approx(want, rel=1e-14)


@given(base6)
def test_product_rule(base):
    w = _vars(base)
    f = w[0] * w[3] + w[1] ** 2
    g = jexp(w[2] * w[5]) + 2.0
    lhs = (f * g).d(1)
    rhs = f.d(1) * g.truncate(3) + f.truncate(3) * g.d(1)
    assert np.allclose(lhs.coef, rhs.coef, atol=1e-12)


@given(base6)
def test_exp_log_inverse(base):
    w = _vars(base)
    x = w[0] * w[3] + w[1] * w[4] + 1.5
    assert np.allclose(jlog(jexp(x)).coef, x.coef, atol=1e-12)
    assert np.allclose((jsqrt(x) * jsqrt(x)).coef, x.coef, atol=1e-12)


@given(base6, st.integers(0, 5))
def test_first_partial_matches_finite_difference(base, var):
    def f_num(b):
        return np.exp(b[0] * b[3]) * (1.7 + b[1] * b[4] + b[2] ** 2) ** 0.5

    w = _vars(base)
    f = jexp(w[0] * w[3]) * (w[1] * w[4] + w[2] ** 2 + 1.7) ** 0.5
    d = np.zeros(6, dtype=int)
    d[var] = 1
    assert f.partial(d) == pytest.approx(_fd_partial(f_num, base, var), rel=1e-7, abs=1e-9)


@given(base6)
def test_conjugation_symmetry_of_real_potentials(base):
    b = np.asarray(base[:3]) + 1j * np.asarray(base[3:])
    w = Jet.variables(SP, np.concatenate([b, np.conj(b)]))
    f = jlog(w[0] * w[3] + w[1] * w[4] + w[2] * w[5] + 1.0)
    # d^a dbar^b f = conj(d^b dbar^a f)
    for a, bb in [((1, 0, 0), (0, 1, 0)), ((2, 0, 0), (0, 0, 1)), ((1, 1, 0), (0, 1, 1))]:
        lhs = f.partial(a + bb)
        rhs = np.conj(f.partial(bb + a))
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_bar_swaps_variables():
    b = np.array([0.2 + 0.1j, -0.3j, 0.4])
    w = Jet.variables(SP, np.concatenate([b, np.conj(b)]))
    f = w[0] * w[0] * w[4]
    fb = f.bar()
    assert fb.value == pytest.approx(np.conj(f.value))
    assert fb.partial((0, 1, 0, 2, 0, 0)) == pytest.approx(np.conj(f.partial((2, 0, 0, 0, 1, 0))))


def test_matrix_inverse_and_determinant():
    rng = np.random.default_rng(3)
    w = _vars(rng.uniform(-0.3, 0.3, 6))
    A = Jet.constant(SP, np.eye(3) * 2) + stack([stack([w[i] * w[j + 3] for j in range(3)]) for i in range(3)])
    eye = Jet.constant(SP, np.eye(3, dtype=complex))
    assert np.allclose(matmul(A, inv(A)).coef, eye.coef, atol=1e-12)
    assert det3(A).value == pytest.approx(np.linalg.det(A.value))


def test_matrix_exponential_value():
    from scipy.linalg import expm as sexpm

    rng = np.random.default_rng(4)
    M = rng.normal(size=(3, 3)) * 0.3
    w = _vars(np.zeros(6))
    X = Jet.constant(SP, M) + Jet.constant(SP, np.eye(3)) * w[0]
    assert np.allclose(expm(X).value, sexpm(M), atol=1e-12)


def test_compose_univariate_series():
    w = _vars([0.2, 0, 0, 0, 0, 0])
    x = w[0]
    # exp(x) about 0.2 via its Taylor series
    c = np.exp(0.2) / np.array([1, 1, 2, 6, 24])
    assert np.allclose(x.compose(c).coef, jexp(x).coef, atol=1e-14)


def test_ddbar_of_quadratic_is_identity():
    w = _vars(np.zeros(6))
    f = w[0] * w[3] + w[1] * w[4] + w[2] * w[5]
    assert np.allclose(ddbar(f, 3).value, np.eye(3))


def test_truncate_and_derivative_orders():
    w = _vars(np.zeros(6))
    f = w[0] ** 3
    assert f.order == 4
    assert f.d(0).order == 3
    assert f.truncate(2).order == 2
    assert f.d(0).d(0).d(0).value == pytest.approx(6.0)
