"""Scalar Kaehler potentials, their jets, and cutoff profiles.

Three families of potentials live here: the cone potential ``r^2``, the
smoothing potentials ``f_t(|z|^2)`` and the resolution potentials
``f_a(r^3)``.  Each can be evaluated as a univariate jet in its radial
argument or composed with a chart jet to give mixed partials in ``w`` and
``wbar``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import lgamma

import numpy as np
from scipy.linalg import solve as lin_solve

from .conifold import Chart
from .errors import FitFailureError, OutsideDomainError, SolveError
from .jets import Jet, jet_space, jlog, ddbar

CBRT_HALF = 2.0 ** (-1.0 / 3.0)


# radial building blocks
def norm2_jet(chart: Chart, w0=None, order: int = 4) -> Jet:
    """Jet of ``|z(w)|^2`` with ``w`` and ``wbar`` independent."""
    z = chart.embed_jet(w0, order)
    return (z * z.bar()).sum(0)


def cone_potential_jet(chart: Chart, w0=None, order: int = 4) -> Jet:
    """Jet of ``r^2 = |z|^(4/3)`` through the chart embedding."""
    return norm2_jet(chart, w0, order) ** (2.0 / 3.0)


# smoothing potentials
def _series_coeffs(a_log, u0: float, order: int, mmax: int) -> np.ndarray:
    """Taylor coefficients at ``u0`` of ``sum_m exp(a_log(m)) u^m``."""
    out = np.zeros(order + 1)
    for k in range(order + 1):
        ms = np.arange(k, mmax)
        if u0 == 0.0:
            out[k] = np.exp(a_log(k))
            continue
        logs = np.array(
            [a_log(m) + lgamma(m + 1) - lgamma(k + 1) - lgamma(m - k + 1) + (m - k) * np.log(u0) for m in ms]
        )
        top = logs.max()
        out[k] = np.exp(top) * np.sum(np.exp(logs - top))
    return out


def _cosh_sqrt_log(m: int) -> float:
    return -lgamma(2 * m + 1)


def _e_log(m: int) -> float:
    return (2 * m + 3) * np.log(2.0) - lgamma(2 * m + 4)


def _nterms(u0: float) -> int:
    return int(3.0 * np.sqrt(u0) + 60)


def _e_of_tau(tau: np.ndarray) -> np.ndarray:
    """``(sinh 2 tau - 2 tau) / tau^3`` without cancellation at small tau."""
    tau = np.asarray(tau, dtype=float)
    out = np.empty_like(tau)
    small = tau < 1.0
    u = tau[small] ** 2
    acc = np.zeros_like(u)
    for m in range(24, -1, -1):
        acc = acc * u + np.exp(_e_log(m))
    out[small] = acc
    big = ~small
    tb = tau[big]
    out[big] = (np.sinh(2 * tb) - 2 * tb) / tb**3
    return out


def co_integral(T: float, nodes: int = 24, panel: float = 0.5) -> float:
    """``int_0^T (sinh 2 tau - 2 tau)^(1/3) d tau`` by composite Gauss-Legendre.

    The integrand equals ``tau * E(tau^2)^(1/3)`` with ``E`` entire and
    positive, so it is analytic and the rule converges geometrically.
    """
    if T <= 0.0:
        return 0.0
    npanel = max(1, int(np.ceil(T / panel)))
    x, wts = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, T, npanel + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    tau = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = tau * np.cbrt(_e_of_tau(tau))
    return float(np.sum((half[:, None] * wts[None, :]).ravel() * vals))


def _arccosh_ratio(s: float, a: float) -> float:
    """``arccosh(s/a)`` accurate near the vanishing cycle."""
    e = max(s - a, 0.0) / a
    return float(np.log1p(e + np.sqrt(e * (e + 2.0))))


def _check_smoothing_args(t: complex, s: float):
    if t == 0:
        raise OutsideDomainError("t = 0 is the cone: use cone_potential_jet instead")
    if s < abs(t) * (1 - 1e-14):
        raise OutsideDomainError(f"s = {s} lies below |t| = {abs(t)}")


@lru_cache(maxsize=4096)
def _co_coeffs_cached(abs_t: float, s: float, order: int, nodes: int) -> tuple:
    T0 = _arccosh_ratio(s, abs_t)
    u0 = T0 * T0
    mmax = _nterms(u0) + order
    c_coef = _series_coeffs(_cosh_sqrt_log, u0, order, mmax)
    e_coef = _series_coeffs(_e_log, u0, max(order - 1, 0), mmax)
    sp1 = jet_space(1, order)
    eps = Jet.variables(sp1, [0.0])[0]
    target = eps * (1.0 / abs_t)  # x - x0 as a series in s - s0
    delta = Jet.constant(sp1, 0.0)
    for _ in range(order + 1):
        resid = delta.compose(c_coef) - c_coef[0] - target
        delta = delta - resid * (1.0 / c_coef[1])
    # Taylor coefficients of F(u) = 1/2 int_0^u E^(1/3) at u0
    f_coef = np.zeros(order + 1, dtype=complex)
    if order >= 1:
        spe = jet_space(1, order - 1)
        e_jet = Jet(spe, e_coef.astype(complex))
        g = (e_jet ** (1.0 / 3.0)).coef * 0.5
        for k in range(1, order + 1):
            f_coef[k] = g[k - 1] / k
    out = delta.compose(f_coef).coef.real * CBRT_HALF * abs_t ** (2.0 / 3.0)
    out[0] = CBRT_HALF * abs_t ** (2.0 / 3.0) * co_integral(T0, nodes)
    return tuple(out)


def co_smoothing_coeffs(t: complex, s: float, order: int = 4, nodes: int = 24) -> np.ndarray:
    """Normalized Taylor coefficients of ``f_t`` in ``s`` at ``s``.

    Derivatives come from exact series manipulation in ``u = arccosh(s/|t|)^2``
    (in which every ingredient is entire); only the value uses quadrature.
    """
    _check_smoothing_args(t, s)
    return np.array(_co_coeffs_cached(float(abs(t)), float(s), int(order), int(nodes)))


def co_smoothing_potential(t: complex, s: float, order: int = 4, nodes: int = 24) -> Jet:
    """Jet of ``f_t`` in the variable ``s`` at ``s``.

    ``f_t(s) = 2^(-1/3) |t|^(2/3) int_0^{arccosh(s/|t|)} (sinh 2 tau - 2 tau)^(1/3) d tau``.

    Raises
    ------
    OutsideDomainError
        For ``s < |t|`` or ``t = 0``.
    """
    c = co_smoothing_coeffs(t, s, order, nodes)
    return Jet(jet_space(1, order), c.astype(complex))


def co_smoothing_value(t: complex, s: float, nodes: int = 24) -> float:
    _check_smoothing_args(t, s)
    T = _arccosh_ratio(s, abs(t))
    return CBRT_HALF * abs(t) ** (2.0 / 3.0) * co_integral(T, nodes)


def co_smoothing_jet(t: complex, chart: Chart, w0=None, order: int = 4) -> Jet:
    """Jet of ``f_t(|z|^2)`` through the chart embedding."""
    s = norm2_jet(chart, w0, order)
    s0 = float(s.value.real)
    return s.compose(co_smoothing_coeffs(t, s0, order))


def metric_potential_jet(t: complex, chart: Chart, w0=None, order: int = 4) -> Jet:
    """Kaehler potential of ``g_co,t`` (``(3/2) r^2`` when ``t = 0``)."""
    if t == 0:
        return cone_potential_jet(chart, w0, order) * 1.5
    return co_smoothing_jet(t, chart, w0, order)


def co_metric(t: complex, chart: Chart, w0=None, order: int = 2) -> Jet:
    """Hermitian matrix jet ``g[k, j] = d_j dbar_k phi`` of ``g_co,t``."""
    return ddbar(metric_potential_jet(t, chart, w0, order + 2), 3)


def ambient_cone_metric(z: Jet, zb: Jet, scale: float = 1.0) -> Jet:
    """Ambient 4x4 Hessian of ``(3/2) |z|^(4/3)`` as a jet, rows antiholomorphic.

    ``G[b, a] = F'(s) delta_ab + F''(s) zbar_a z_b`` with ``F = (3/2) s^(2/3)``.
    """
    s = (z * zb).sum(0)
    f1 = s ** (-1.0 / 3.0)
    f2 = s ** (-4.0 / 3.0) * (-1.0 / 3.0)
    g = _scalar_times(f2, _outer(z, zb)) + _scalar_times(f1, Jet.constant(z.space, np.eye(4)))
    return g * scale


def _outer(z: Jet, zb: Jet) -> Jet:
    """``O[b, a] = z_b * zbar_a``."""
    rows = [zb * z[b] for b in range(4)]
    return Jet(z.space, np.stack([r.coef for r in rows], axis=0))


def _scalar_times(f: Jet, m: Jet) -> Jet:
    fb = Jet(f.space, np.broadcast_to(f.coef, m.shape + (f.space.size,)))
    return fb * m


# resolution potentials
def resolution_y(a: float, x) -> np.ndarray:
    """Nonnegative root ``y`` of ``y^3 + 6 a^2 y^2 = x^2`` (``y = x f_a'(x)``)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise OutsideDomainError("resolution potential needs x >= 0")
    a2 = a * a
    y = np.minimum(np.cbrt(x * x), x / np.sqrt(6 * a2))
    for _ in range(100):
        f = y**3 + 6 * a2 * y**2 - x * x
        fp = 3 * y**2 + 12 * a2 * y
        step = np.where(fp > 0, f / np.where(fp > 0, fp, 1.0), 0.0)
        y = y - step
        if np.all(np.abs(step) <= 1e-16 * np.maximum(y, 1e-300)):
            break
    return y


def resolution_value(a: float, x) -> np.ndarray:
    """``f_a(x) = (3/2) y - 3 a^2 log(1 + y / (6 a^2))`` with ``f_a(0) = 0``.

    This is the exact antiderivative of ``y/x``: substituting
    ``x = y sqrt(y + 6 a^2)`` turns ``dx/x`` into a rational form in ``y``.
    """
    y = resolution_y(a, x)
    return 1.5 * y - 3 * a * a * np.log1p(y / (6 * a * a))


def resolution_jet(a: float, x: Jet) -> tuple[Jet, Jet]:
    """Jets of ``f_a`` and of ``y = x f_a'`` composed with a jet ``x``."""
    x0 = float(x.value.real)
    y0 = float(resolution_y(a, x0))
    a2 = a * a
    dp = 3 * y0 * y0 + 12 * a2 * y0
    y = Jet.constant(x.space, y0)
    if dp == 0:
        raise OutsideDomainError("resolution jets need x > 0")
    for _ in range(x.order + 1):
        resid = y * y * y + y * y * (6 * a2) - x * x
        y = y - resid * (1.0 / dp)
    f = y * 1.5 - jlog(y * (1.0 / (6 * a2)) + 1.0) * (3 * a2)
    return f, y


def co_resolution_profile(a: float, x: float, order: int = 4) -> tuple[Jet, Jet]:
    """Univariate jets in ``x`` of ``f_a`` and ``x f_a'`` at ``x``."""
    if a <= 0:
        raise OutsideDomainError("resolution parameter a must be positive")
    if x < 0:
        raise OutsideDomainError("resolution potential needs x >= 0")
    sp1 = jet_space(1, order)
    if x == 0:
        # y = x / sqrt(6 a^2 + y) is analytic at 0; expand by fixed point
        xv = Jet.variables(sp1, [0.0])[0]
        y = xv * (1.0 / np.sqrt(6 * a * a))
        for _ in range(order + 1):
            y = xv * (y + 6 * a * a) ** -0.5
        f = y * 1.5 - jlog(y * (1.0 / (6 * a * a)) + 1.0) * (3 * a * a)
        return f, y
    xv = Jet.variables(sp1, [x])[0]
    return resolution_jet(a, xv)


F1_C0_EXACT = 3.0 * np.log(6.0) - 3.0


@dataclass(frozen=True)
class F1Asymptotics:
    c0: float
    exponent: float
    remainders: np.ndarray
    cauchy: float


def f1_remainder(x) -> np.ndarray:
    """``f_1(x) - (3/2) x^(2/3) + 2 log x``."""
    x = np.asarray(x, dtype=float)
    return resolution_value(1.0, x) - 1.5 * x ** (2.0 / 3.0) + 2.0 * np.log(x)


def f1_asymptotics(x_grid, c0: float | None = None) -> F1Asymptotics:
    """Fit the constant and the leading correction exponent of ``f_1``.

    Parameters
    ----------
    x_grid : array_like
        Sample abscissae in ``[1e3, 1e7]``.
    c0 : float, optional
        Reference constant.  When omitted, the remainder at the largest
        grid point is used.

    Returns
    -------
    F1Asymptotics
        ``c0``, the fitted exponent of ``|remainder - c0|``, the raw
        remainders, and the largest Cauchy difference over the top decade.
    """
    from .analysis import fit_decay

    x = np.sort(np.asarray(x_grid, dtype=float))
    if x.size < 6 or x[0] < 1e3 * (1 - 1e-12) or x[-1] > 1e7 * (1 + 1e-12):
        raise FitFailureError("grid must have at least 6 points inside [1e3, 1e7]")
    rem = f1_remainder(x)
    c0_hat = float(rem[-1]) if c0 is None else float(c0)
    top = x >= x[-1] / 10
    cauchy = float(np.max(np.abs(np.diff(rem[top])))) if top.sum() > 1 else float("inf")
    dev = np.abs(rem - c0_hat)
    mask = dev > 0
    if c0 is None:
        mask[-1] = False
    fit = fit_decay(x[mask], dev[mask])
    return F1Asymptotics(c0_hat, fit.slope, rem, cauchy)


# smooth steps
def _smoothstep_poly(deg_smooth: int = 4) -> np.polynomial.Polynomial:
    """Polynomial ``p`` on [0,1] with p(0)=0, p(1)=1 and vanishing derivatives to ``deg_smooth``."""
    n = deg_smooth
    # p(x) = x^(n+1) * sum_k binom(n+k, k) (1-x)^k, the standard smoothstep
    from math import comb

    P = np.polynomial.Polynomial
    x = P([0, 1])
    acc = P([0])
    for k in range(n + 1):
        acc = acc + comb(n + k, k) * (1 - x) ** k
    return x ** (n + 1) * acc


@dataclass(frozen=True)
class SmoothStep:
    """Decreasing cutoff equal to 1 on ``[0, lo]`` and 0 on ``[hi, inf)``."""

    lo: float = 1.0
    hi: float = 2.0
    smooth: int = 5
    poly: np.polynomial.Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "poly", _smoothstep_poly(self.smooth))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        return 1.0 - self.poly(y)

    def coeffs(self, x: float, order: int) -> np.ndarray:
        """Normalized Taylor coefficients at ``x``."""
        out = np.zeros(order + 1)
        out[0] = float(self(x))
        if self.lo < x < self.hi:
            width = self.hi - self.lo
            y = (x - self.lo) / width
            d = self.poly
            fact = 1.0
            for k in range(1, order + 1):
                d = d.deriv()
                fact *= k
                out[k] = -d(y) / width**k / fact
        return out

    def jet(self, x: Jet) -> Jet:
        return x.compose(self.coeffs(float(x.value.real), x.order))


# cutoff profile for the balanced gluing
@lru_cache(maxsize=16)
def _bump_rule(width: float, nodes: int = 64):
    """Nodes and weights of the normalized C-infinity bump on ``[-width/2, width/2]``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = width / 2
    y = half * x
    with np.errstate(divide="ignore", over="ignore"):
        phi = np.where(np.abs(x) < 1, np.exp(-1.0 / (1 - x * x)), 0.0)
    wts = w * phi
    wts = wts / wts.sum()
    return y, wts


@dataclass(frozen=True)
class CutoffProfile:
    """The cutoff ``chi`` with ``chi' = v`` used by the balanced gluing.

    ``v = 1`` on ``[0, 5]``, ``a s^-3 + b s^-2 + c s^2 + d`` on
    ``[5, R^2 - 1]`` and ``0`` afterwards; the mollified profile averages
    shifted copies of ``v`` against a bump of width ``width`` sampled at
    Gauss-Legendre nodes, so its jets are mutually consistent.
    """

    R: float
    a: float
    b: float
    c: float
    d: float
    width: float = 0.1
    nodes: int = 64
    min_v: float = 0.0
    min_div: float = 0.0

    @property
    def knots(self) -> tuple[float, float]:
        return 5.0, self.R**2 - 1.0

    def _raw_coeffs(self, s: float, order: int) -> np.ndarray:
        """Taylor coefficients of the unmollified ``chi`` at ``s`` (orders 0..order)."""
        s0, s1 = self.knots
        out = np.zeros(order + 1)
        a, b, c, d = self.a, self.b, self.c, self.d
        if s <= s0:
            out[0] = s
            if order >= 1:
                out[1] = 1.0
            return out
        if s >= s1:
            out[0] = self._chi_mid(s1)
            return out
        out[0] = self._chi_mid(s)
        # v and its derivatives
        for k in range(1, order + 1):
            m = k - 1
            dv = (
                a * _fall(-3, m) * s ** (-3 - m)
                + b * _fall(-2, m) * s ** (-2 - m)
                + c * _fall(2, m) * s ** (2 - m)
                + (d if m == 0 else 0.0)
            )
            out[k] = dv / _factorial(k)
        return out

    def _chi_mid(self, s: float) -> float:
        s0 = 5.0
        a, b, c, d = self.a, self.b, self.c, self.d

        def prim(x):
            return -a / (2 * x * x) - b / x + c * x**3 / 3 + d * x

        return s0 + prim(s) - prim(s0)

    def coeffs(self, s: float, order: int) -> np.ndarray:
        """Taylor coefficients of the mollified ``chi`` at ``s``."""
        y, wts = _bump_rule(self.width, self.nodes)
        acc = np.zeros(order + 1)
        for yi, wi in zip(y, wts):
            acc += wi * self._raw_coeffs(s - yi, order)
        return acc

    def chi(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.array([self.coeffs(si, 0)[0] for si in s])

    def _raw_v_array(self, s: np.ndarray, m: int) -> np.ndarray:
        """``m``-th derivative of the unmollified ``v`` on an array."""
        s0, s1 = self.knots
        a, b, c, d = self.a, self.b, self.c, self.d
        mid = (
            a * _fall(-3, m) * s ** (-3.0 - m)
            + b * _fall(-2, m) * s ** (-2.0 - m)
            + c * _fall(2, m) * s ** (2.0 - m)
            + (d if m == 0 else 0.0)
        )
        left = 1.0 if m == 0 else 0.0
        return np.where(s <= s0, left, np.where(s >= s1, 0.0, mid))

    def _v_array(self, s: np.ndarray, m: int, mollified: bool) -> np.ndarray:
        if not mollified:
            return self._raw_v_array(s, m)
        y, wts = _bump_rule(self.width, self.nodes)
        return np.einsum("n,ns->s", wts, self._raw_v_array(s[None, :] - y[:, None], m))

    def v(self, s, mollified: bool = True) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return self._v_array(s, 0, mollified)

    def divergence(self, s, mollified: bool = True) -> np.ndarray:
        """``(1/s^2) d/ds (s^2 v)``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return self._v_array(s, 1, mollified) + 2 * self._v_array(s, 0, mollified) / s

    def jet(self, x: Jet) -> Jet:
        return x.compose(self.coeffs(float(x.value.real), x.order))


def _fall(p: float, m: int) -> float:
    out = 1.0
    for i in range(m):
        out *= p - i
    return out


def _factorial(k: int) -> float:
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


def fly_cutoff(R: float, width: float = 0.1, nodes: int = 64, samples: int = 4000) -> CutoffProfile:
    """Solve the C^1 matching conditions for the cutoff profile.

    Raises
    ------
    SolveError
        If the matching system is singular.
    OutsideDomainError
        If ``R < 10``.
    """
    if R < 10:
        raise OutsideDomainError("cutoff profile needs R >= 10")
    s0, s1 = 5.0, R * R - 1.0

    def rows(s):
        val = [s**-3, s**-2, s**2, 1.0]
        der = [-3 * s**-4, -2 * s**-3, 2 * s, 0.0]
        return val, der

    v0, d0 = rows(s0)
    v1, d1 = rows(s1)
    A = np.array([v0, d0, v1, d1])
    rhs = np.array([1.0, 0.0, 0.0, 0.0])
    # column scaling keeps the system well conditioned for large R
    scale = np.array([s0**3, s0**2, s1**-2, 1.0])
    As = A * scale[None, :]
    if np.linalg.cond(As) > 1e14:
        raise SolveError("cutoff matching system is singular")
    sol = lin_solve(As, rhs) * scale
    prof = CutoffProfile(float(R), *map(float, sol), width=width, nodes=nodes)
    grid = np.unique(np.concatenate([np.linspace(4.0, R * R, samples), np.geomspace(4.0, R * R, samples)]))
    vmin = float(np.min(prof.v(grid)))
    dmin = float(np.min(prof.divergence(grid)))
    return CutoffProfile(float(R), *map(float, sol), width=width, nodes=nodes, min_v=vmin, min_div=dmin)


# metric helpers used across modules
def fs_potential_jet(x: Jet, xb: Jet) -> Jet:
    """``log(1 + |x|^2)``, the Fubini-Study potential in the base chart."""
    return jlog(x * xb + 1.0)
