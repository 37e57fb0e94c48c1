from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conifold_forge.conifold import ModelPoint, make_cyl_chart
from conifold_forge.errors import NotASquareError, OrderError, ShapeError, SingularMetricError
from conifold_forge.forms import (
    PQForm,
    adjugate,
    contract,
    d_residual,
    ddbar_11,
    from_hermitian,
    from_p22,
    i_ddbar,
    is_positive_22,
    norm_22,
    p_from_t,
    sqrt_22,
    sqrt_22_variation,
    square_11,
    t_from_p,
    to_hermitian,
    variation_trace,
    wedge,
    wedge_11,
    wedge_11_general,
    wedge_jet,
)
from conifold_forge.jets import Jet, ddbar, jet_space, jlog
from conifold_forge.potentials import cone_potential_jet, norm2_jet

from oracles import (
    ext_wedge,
    metric_form_dict,
    p_matrix_from_dict,
    pq_to_dict,
    random_hermitian_pd,
    random_link_frame,
)

seeds = st.integers(0, 2**31 - 1)


def _random_form(rng, p, q):
    from itertools import permutations

    c = rng.normal(size=(3,) * (p + q)) + 1j * rng.normal(size=(3,) * (p + q))
    out = np.zeros_like(c)
    for pi in permutations(range(p)):
        for qi in permutations(range(q)):
            sgn = np.linalg.det(np.eye(p)[list(pi)]) * np.linalg.det(np.eye(q)[list(qi)]) if p + q else 1
            out = out + sgn * np.transpose(c, list(pi) + [p + i for i in qi])
    return PQForm(p, q, out)


bidegrees = st.sampled_from([((1, 0), (0, 1)), ((1, 1), (1, 1)), ((2, 1), (0, 1)), ((1, 1), (1, 2)), ((1, 0), (1, 1))])


@given(seeds, bidegrees)
def test_wedge_matches_generic_exterior_algebra(seed, degs):
    rng = np.random.default_rng(seed)
    (pa, qa), (pb, qb) = degs
    a, b = _random_form(rng, pa, qa), _random_form(rng, pb, qb)
    got = pq_to_dict(pa + pb, qa + qb, wedge(a, b).coef)
    want = ext_wedge(pq_to_dict(pa, qa, a.coef), pq_to_dict(pb, qb, b.coef))
    keys = set(got) | set(want)
    assert all(abs(got.get(k, 0) - want.get(k, 0)) < 1e-10 for k in keys)


@given(seeds)
def test_wedge_graded_commutative_and_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = _random_form(rng, 1, 0), _random_form(rng, 1, 1), _random_form(rng, 0, 1)
    ab = wedge(a, b)
    ba = wedge(b, a)
    assert np.allclose(ab.coef, (-1) ** (a.degree * b.degree) * ba.coef)
    assert np.allclose(wedge(ab, c).coef, wedge(a, wedge(b, c)).coef)


def test_wedge_degree_overflow():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeError):
        wedge(_random_form(rng, 2, 2), _random_form(rng, 2, 0))


@given(seeds)
def test_metric_square_matches_oracle_and_adjugate(seed):
    G = random_hermitian_pd(np.random.default_rng(seed), 3, 50.0)
    w = metric_form_dict(G)
    P_oracle = p_matrix_from_dict(ext_wedge(w, w))
    assert np.allclose(P_oracle, adjugate(G), atol=1e-10)
    assert np.allclose(wedge(from_hermitian(G), from_hermitian(G)).to_p22(), P_oracle, atol=1e-10)
    assert np.allclose(adjugate(G), np.linalg.det(G) * np.linalg.inv(G))


def test_identity_square_pattern():
    P = wedge(from_hermitian(np.eye(3)), from_hermitian(np.eye(3))).to_p22()
    assert np.allclose(P, np.eye(3))
    assert np.allclose(sqrt_22(P), np.eye(3))


@given(seeds)
def test_trace_identity_against_top_form(seed):
    rng = np.random.default_rng(seed)
    G = random_hermitian_pd(rng, 3)
    B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    B = B + B.conj().T
    w, b = metric_form_dict(G), metric_form_dict(B)
    w2 = ext_wedge(w, w)
    top = ext_wedge(w2, w)[(0, 1, 2, 3, 4, 5)]
    mixed = ext_wedge(w2, b)[(0, 1, 2, 3, 4, 5)]
    assert mixed / top == pytest.approx(np.trace(np.linalg.solve(G, B)) / 3, rel=1e-10)
    assert np.allclose(wedge_11(G, B), p_matrix_from_dict(ext_wedge(w, b)), atol=1e-10)


@given(seeds)
def test_sqrt_roundtrips(seed):
    rng = np.random.default_rng(seed)
    G = random_hermitian_pd(rng, 3, 1e3)
    assert np.allclose(sqrt_22(square_11(G)), G, rtol=1e-10, atol=1e-10 * np.abs(G).max())
    P = random_hermitian_pd(rng, 3, 1e3)
    assert np.allclose(square_11(sqrt_22(P)), P, rtol=1e-10, atol=1e-10 * np.abs(P).max())


def test_sqrt_rejects_indefinite():
    with pytest.raises(NotASquareError) as info:
        sqrt_22(np.diag([1.0, 2.0, -0.5]))
    assert info.value.eigenvalue == pytest.approx(-0.5)
    assert not is_positive_22(np.diag([1.0, 0.0, 1.0]))
    assert is_positive_22(np.eye(3))


def test_p_representation_roundtrip(rng):
    P = random_hermitian_pd(rng, 3)
    assert np.allclose(p_from_t(t_from_p(P)), P)
    form = from_p22(P)
    assert form.is_real()
    assert np.allclose(form.to_p22(), P)


def test_hermitian_form_roundtrip(rng):
    G = random_hermitian_pd(rng, 3)
    w = from_hermitian(G)
    assert w.is_real()
    assert np.allclose(to_hermitian(w), G)
    assert np.allclose(w.conj().coef, w.coef)


def test_norm_of_metric_square():
    rng = np.random.default_rng(5)
    G = random_hermitian_pd(rng, 3)
    assert norm_22(adjugate(G), G) == pytest.approx(np.sqrt(3.0))


def test_contraction_of_metric_times_identity(rng):
    G = random_hermitian_pd(rng, 3)
    F = np.einsum("kj,ab->jkab", G, np.eye(2))  # F_{j kbar} = g_{kbar j} Id
    assert np.allclose(contract(G, F), 3 * np.eye(2))
    F2 = rng.normal(size=(3, 3, 2, 2))
    assert np.allclose(contract(G, 2 * F + F2), 2 * contract(G, F) + contract(G, F2))
    with pytest.raises(SingularMetricError):
        contract(np.diag([1.0, 0.0, 1.0]), F)


def test_variation_zero_and_finite_difference(rng):
    G = random_hermitian_pd(rng, 3)
    assert np.allclose(sqrt_22_variation(G, np.zeros((3, 3, 3, 3))), 0)
    D = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    D = D + D.conj().T
    P = adjugate(G)
    h = 1e-4

    def at(e):
        return sqrt_22(P + e * D)

    fd = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h)
    dG = sqrt_22_variation(G, t_from_p(D))
    assert np.linalg.norm(dG - fd) / np.linalg.norm(fd) < 1e-6
    # split into theta and its conjugate gives the same answer
    assert np.allclose(sqrt_22_variation(G, 0.5 * t_from_p(D), 0.5 * t_from_p(D)), dG)
    lhs, rhs = variation_trace(G, dG, t_from_p(D))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def _cone_chart(rng):
    a, b = random_link_frame(rng)
    return make_cyl_chart(ModelPoint(rng.uniform(0.5, 2.0) * (a + 1j * b), 0j))


def test_radial_form_inequality():
    rng = np.random.default_rng(7)
    for _ in range(100):
        ch = _cone_chart(rng)
        r2 = cone_potential_jet(ch, None, 2)
        G = ddbar(r2, 3).value
        d = np.array([r2.d(j).value for j in range(3)])
        db = np.array([r2.d(3 + k).value for k in range(3)])
        a_dd = 1j * G.T
        a_rad = 1j * np.outer(d, db)
        assert np.allclose(wedge_11_general(a_dd, a_dd), adjugate(G))
        diff = 0.5 * r2.value.real * wedge_11_general(a_dd, a_dd) - wedge_11_general(a_rad, a_dd)
        ev = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
        assert ev[0] >= -1e-12 * np.abs(diff).max()


def test_square_of_ddbar_r3_is_nonnegative():
    rng = np.random.default_rng(8)
    for _ in range(20):
        ch = _cone_chart(rng)
        r3 = norm2_jet(ch, None, 2) ** 0.5
        G = ddbar(r3, 3).value
        ev = np.linalg.eigvalsh(square_11(G))
        assert ev[0] >= -1e-12 * abs(ev).max()


def test_i_ddbar_of_quadratic():
    sp = jet_space(6, 2)
    w = Jet.variables(sp, np.zeros(6))
    f = w[0] * w[3] + w[1] * w[4] + w[2] * w[5]
    assert np.allclose(to_hermitian(i_ddbar(f)), np.eye(3))
    with pytest.raises(OrderError):
        i_ddbar(f.truncate(1))


def _potential_field(rho):
    def fld(chart, w, order):
        b = np.concatenate([w, np.conj(w)])
        ws = Jet.variables(jet_space(6, order + 2), b)
        g = ddbar(rho(ws), 3)
        return wedge_jet(g, g)

    return fld


def test_d_residual_of_closed_forms():
    def rho(ws):
        s = ws[0] * ws[3] + ws[1] * ws[4] + ws[2] * ws[5]
        return jlog(s + 1.0) + s * s * 0.3 + ws[0] * ws[0] * ws[4] * ws[5] + ws[3] * ws[3] * ws[1] * ws[2]

    fld = _potential_field(rho)
    chart = SimpleNamespace(scale=1.0)
    w0 = np.array([0.1 + 0.2j, -0.3, 0.05j])
    assert d_residual(fld, chart, w0) < 1e-12
    assert d_residual(fld, chart, w0, mode="fd") < 1e-6


def test_d_residual_detects_nonclosed_form():
    ch = _cone_chart(np.random.default_rng(9))

    def fld(chart, w, order):
        r2 = cone_potential_jet(chart, w, order + 2)
        g = ddbar(r2, 3)
        r = r2.truncate(order) ** 0.5
        return wedge_jet(g, g) * r

    assert d_residual(fld, ch) > 1e-2
    assert d_residual(fld, ch, mode="fd") > 1e-2


def test_ddbar_11_of_exact_form_matches_square():
    # i d dbar (rho i d dbar rho) = (i d dbar rho)^2 + i d rho ^ dbar rho ^ ...; check closedness only
    sp = jet_space(6, 5)
    w = Jet.variables(sp, np.array([0.1, 0.2j, -0.1, 0.1, -0.2j, -0.1]))
    s = w[0] * w[3] + w[1] * w[4] + w[2] * w[5] + 1.0
    theta = ddbar(jlog(s), 3)
    P = ddbar_11(theta * s)
    assert P.order == 1
    from conifold_forge.forms import divergence_22

    dh, dah = divergence_22(P)
    assert np.max(np.abs(dh)) < 1e-12 and np.max(np.abs(dah)) < 1e-12
