"""Measurement harness: sampling on ``V_t``, Monte Carlo volume integrals,
weighted norms and log-log decay fits.

Fields follow one calling convention throughout the package:
``field(chart, w, order) -> Jet`` with ``w`` a chart point and ``order``
the requested jet order.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .conifold import Chart, ModelPoint, _phi_jacobian, make_cyl_chart, phi_apply
from .errors import EvaluationError, FitFailureError, OutsideDomainError
from .jets import Jet
from .potentials import co_metric

Field = Callable[[Chart, np.ndarray, int], Jet]

LINK_VOLUME = 8.0 * np.pi**3  # area(S^3) * area(S^2)


# regression
@dataclass(frozen=True)
class DecayFit:
    """Least squares line through ``(log x, log y)``.

    ``halfwidth`` is the 95% confidence half-width of the slope; fits with
    ``r2 < 0.9`` are flagged.
    """

    x: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float
    r2: float
    halfwidth: float

    @property
    def flagged(self) -> bool:
        return self.r2 < 0.9

    def predict(self, x) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_decay(x, y, min_points: int = 6, min_decades: float = 1.5) -> DecayFit:
    """Power-law fit ``y ~ C x^slope``.

    Raises
    ------
    FitFailureError
        With fewer than ``min_points`` positive samples or an abscissa span
        below ``min_decades`` decades.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.abs(np.asarray(y, dtype=float).ravel())
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < min_points:
        raise FitFailureError(f"need at least {min_points} positive samples, got {x.size}")
    span = np.log10(x.max() / x.min())
    if span < min_decades * (1 - 1e-9):
        raise FitFailureError(f"abscissa spans {span:.2f} decades, need {min_decades}")
    lx, ly = np.log(x), np.log(y)
    res = stats.linregress(lx, ly)
    if not np.isfinite(res.slope):
        raise FitFailureError("degenerate regression")
    q = stats.t.ppf(0.975, x.size - 2) if x.size > 2 else np.inf
    return DecayFit(x, y, float(res.slope), float(res.intercept), float(res.rvalue**2), float(q * res.stderr))


# sampling
@dataclass(frozen=True)
class Samples:
    """Points of ``V_t`` with Monte Carlo weights for ``dvol`` of ``g_co,t``."""

    t: complex
    r1: float
    r2: float
    points: list
    weights: np.ndarray
    radii: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.points)


def _link_frame(rng: np.random.Generator):
    a = rng.normal(size=4)
    a /= np.linalg.norm(a)
    b = rng.normal(size=4)
    b -= a * (a @ b)
    b /= np.linalg.norm(b)
    return a, b


def _cone_norm2(t: complex, R: float) -> tuple[float, float]:
    """``|z0|^2`` with ``|Phi_t(z0)|^2 = R^3`` and its derivative in ``R``."""
    S = R**3
    at = abs(t)
    if at == 0:
        return S, 3 * R**2
    root = np.sqrt(max(S * S - at * at, 0.0))
    s0 = 0.5 * (S + root)
    ds = 0.5 * (1 + S / root) * 3 * R**2 if root > 0 else np.inf
    return s0, ds


def link_point(t: complex, R: float, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Point of ``V_t`` with radius ``R`` over the link direction ``(a, b)``."""
    s0, _ = _cone_norm2(t, R)
    z0 = np.sqrt(s0 / 2) * (a + 1j * b)
    return phi_apply(t, z0) if t != 0 else z0


def volume_density(t: complex, R: float, a: np.ndarray, b: np.ndarray) -> float:
    """Density of ``dvol(g_co,t)`` in ``dR x d(link)`` with the link measure normalized to 1.

    The six parametrization tangents are mapped into the chart at the
    image point and the Gram determinant of the Riemannian metric
    ``2 Re g(X, Y)`` is taken.
    """
    s0, ds0 = _cone_norm2(t, R)
    c = np.sqrt(s0 / 2)
    z0 = c * (a + 1j * b)
    basis = np.linalg.svd(np.stack([a, b]))[2][2:]  # two unit vectors orthogonal to a, b
    dirs = []
    for e in [b, basis[0], basis[1]]:
        dirs.append(c * (e + 1j * (-(b @ e) * a)))
    for e in basis:
        dirs.append(c * (1j * e))
    dirs.append(ds0 / (2 * np.sqrt(2 * s0)) * (a + 1j * b))
    V = np.stack(dirs, axis=1)  # 4 x 6
    if t != 0:
        jac = _phi_jacobian(t, z0)
        V = jac[:4, :4] @ V + jac[:4, 4:] @ np.conj(V)
        z = phi_apply(t, z0)
    else:
        z = z0
    chart = make_cyl_chart(ModelPoint(z, t))
    X = V[list(chart.keep)] / chart.znorm  # 3 x 6 holomorphic components
    G = co_metric(t, chart, None, 0).value
    gram = 2 * np.real(np.einsum("ka,kj,jb->ab", X.conj(), G, X))
    return float(np.sqrt(max(np.linalg.det(gram), 0.0)) * LINK_VOLUME)


def sample_region(t: complex, r1: float, r2: float, n: int, seed: int = 0) -> Samples:
    """Sample ``n`` points of ``V_t`` with radius in ``[r1, r2]``.

    Link directions are uniform, the radius is log-uniform and the cone
    point is pushed to ``V_t`` by ``Phi_t``.  Weights are the volume
    density divided by the sampling density, so ``mean(f * w)``
    estimates ``int f dvol``.

    Raises
    ------
    OutsideDomainError
        If ``r1^3 < |t|`` or ``r1 > r2``.
    """
    if r1 <= 0 or r2 < r1:
        raise OutsideDomainError("need 0 < r1 <= r2")
    if r1**3 < abs(t) * (1 - 1e-12):
        raise OutsideDomainError("annulus reaches inside the vanishing cycle")
    rng = np.random.default_rng(seed)
    logspan = np.log(r2 / r1)
    pts, wts, radii = [], [], []
    for _ in range(n):
        a, b = _link_frame(rng)
        R = r1 * np.exp(rng.uniform() * logspan) if logspan > 0 else r1
        z = link_point(t, R, a, b)
        dens = 1.0 / (R * logspan) if logspan > 0 else 1.0
        pts.append(ModelPoint(z, t))
        wts.append(volume_density(t, R, a, b) / dens)
        radii.append(R)
    return Samples(complex(t), r1, r2, pts, np.array(wts), np.array(radii), seed)


def annulus_volume(t: complex, r1: float, r2: float, nodes: int = 64) -> float:
    """Deterministic annulus volume by Gauss-Legendre quadrature in ``log R``.

    The density depends on the radius only (the metric is invariant under
    real orthogonal transformations, which act transitively on link
    frames), so a one dimensional rule suffices.
    """
    a = np.array([1.0, 0, 0, 0])
    b = np.array([0, 1.0, 0, 0])
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = np.log(r1), np.log(r2)
    if abs(t) > 0 and r1**3 <= abs(t) * (1 + 1e-12):
        # sqrt type endpoint behaviour at the cycle: substitute R^3 = |t| + u^2
        u_hi = np.sqrt(r2**3 - abs(t))
        u = 0.5 * u_hi * (x + 1)
        R = (abs(t) + u * u) ** (1 / 3)
        dR = 2 * u / (3 * R**2)
        vals = np.array([volume_density(t, Ri, a, b) for Ri in R])
        return float(0.5 * u_hi * np.sum(w * vals * dR))
    lr = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    R = np.exp(lr)
    vals = np.array([volume_density(t, Ri, a, b) * Ri for Ri in R])
    return float(0.5 * (hi - lo) * np.sum(w * vals))


def mc_integral(values, weights) -> tuple[float, float]:
    """Importance weighted mean with a jackknife standard error.

    Raises
    ------
    EvaluationError
        If any weighted sample is not finite; the message lists the indices.
    """
    f = np.asarray(values, dtype=float) * np.asarray(weights, dtype=float)
    bad = np.flatnonzero(~np.isfinite(f))
    if bad.size:
        raise EvaluationError(f"non-finite samples at indices {bad.tolist()[:20]}")
    n = f.size
    if n < 2:
        raise EvaluationError("need at least two samples")
    mean = float(f.mean())
    loo = (f.sum() - f) / (n - 1)
    se = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    return mean, se


# weighted norms
@dataclass(frozen=True)
class WeightedNormSpec:
    """Parameters of the weighted norm ``C^{k,a}_beta`` on an annulus."""

    k: int = 0
    a: float = 0.5
    beta: float = 0.0
    r1: float = 0.1
    r2: float = 1.0
    samples: int = 200
    pairs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.k not in (0, 1, 2):
            raise ValueError("k must be 0, 1 or 2")
        if not 0 < self.a < 1:
            raise ValueError("Hoelder exponent must lie in (0, 1)")
        if self.beta > 0:
            raise ValueError("weight beta must be <= 0")
        if self.r1 <= 0 or self.r2 < self.r1:
            raise ValueError("need 0 < r1 <= r2")


def _tensor_norm(blocks: Sequence[tuple[np.ndarray, str]], g: np.ndarray, H: np.ndarray) -> float:
    """Norm of endomorphism valued covariant tensors.

    Each block is ``(T, kinds)`` with ``T`` of shape ``(3,)*len(kinds) + (n, n)``
    and ``kinds`` a string of ``'h'``/``'a'`` marking holomorphic and
    antiholomorphic form slots.
    """
    ginv = np.linalg.inv(g)
    hinv = np.linalg.inv(H)
    total = 0.0
    for T, kinds in blocks:
        # endomorphism part: Tr(A B^dagger) with B^dagger = H^-1 B^* H
        X = T
        Y = np.einsum("pq,...rq,rs->...ps", hinv, T.conj(), H)  # adjoints
        m = len(kinds)
        letters_x = "ijkl"[:m]
        letters_y = "mnop"[:m]
        mats, subs = [], []
        for s, kind in enumerate(kinds):
            q = ginv if kind == "h" else ginv.T
            mats.append(q)
            subs.append(letters_x[s] + letters_y[s])
        expr = ",".join(subs + [letters_x + "ab", letters_y + "ba"]) + "->"
        total += float(np.einsum(expr, *mats, X, Y).real)
    return float(np.sqrt(max(total, 0.0)))


def covariant_derivatives(h: Jet, H: Jet, g: Optional[Jet], k: int) -> list[list[tuple[np.ndarray, str]]]:
    """Blocks of ``nabla^i h`` for ``i <= k`` at the base point.

    The endomorphism factor uses the Chern connection of ``H``; form slots
    use the Chern connection of ``g`` (needed only for ``k = 2``).
    """
    from .curvature import connection_jet
    from .jets import matmul, stack

    out = [[(h.value, "")]]
    if k == 0:
        return out
    A = connection_jet(H.truncate(k))  # order k - 1

    def cov_h(x: Jet, j: int) -> Jet:
        a = A[j].truncate(x.order - 1)
        return x.d(j) + matmul(a, x.truncate(x.order - 1)) - matmul(x.truncate(x.order - 1), a)

    hk = h.truncate(k)
    d1 = stack([cov_h(hk, j) for j in range(3)], axis=0)
    d1b = stack([hk.d(3 + j) for j in range(3)], axis=0)
    out.append([(d1.value, "h"), (d1b.value, "a")])
    if k == 1:
        return out
    Gam = connection_jet(g.truncate(1)).value  # Gam[i, l, j]
    a0 = A.value if A.order == 0 else A.truncate(0).value

    def comm(a, x):
        return a @ x - x @ a

    hh = np.stack([np.stack([d1[j].d(i).value + comm(a0[i], d1[j].value) for j in range(3)]) for i in range(3)])
    hh -= np.einsum("ilj,lab->ijab", Gam, d1.value)
    ah = np.stack([np.stack([d1[j].d(3 + i).value for j in range(3)]) for i in range(3)])
    ha = np.stack([np.stack([d1b[j].d(i).value + comm(a0[i], d1b[j].value) for j in range(3)]) for i in range(3)])
    aa = np.stack([np.stack([d1b[j].d(3 + i).value for j in range(3)]) for i in range(3)])
    aa -= np.einsum("ilj,lab->ijab", Gam.conj(), d1b.value)
    out.append([(hh, "hh"), (ah, "ah"), (ha, "ha"), (aa, "aa")])
    return out


def _sample_charts(spec: WeightedNormSpec, t: complex):
    r1 = max(spec.r1, abs(t) ** (1 / 3) * (1 + 1e-9))
    smp = sample_region(t, r1, spec.r2, spec.samples, spec.seed)
    return smp, [make_cyl_chart(p) for p in smp.points]


def weighted_norm(
    hfield: Field,
    spec: WeightedNormSpec,
    gfield: Field,
    Hfield: Field,
    t: complex = 0j,
    rescaled: bool = False,
    holder: bool = True,
) -> float:
    """Sampled ``C^{k,a}_beta`` norm of an endomorphism field on an annulus.

    ``sum_i sup r^(-beta+i) |nabla^i h|`` over the sample points plus the
    Hoelder seminorm of ``nabla^k h`` over point pairs inside one chart at
    separations ``[0.1, 0.5] rhat`` (transport approximated by the chart
    trivialization along straight segments).

    With ``rescaled=True`` every chart evaluates ``rhat^(-beta) |nabla^i h|``
    in the metric ``rhat^-2 g`` at a random off-center point; this is the
    alternative annulus form of the same norm.
    """
    _, charts = _sample_charts(spec, t)
    rng = np.random.default_rng(spec.seed + 1)
    sups = np.zeros(spec.k + 1)
    for ch in charts:
        if rescaled:
            d = rng.normal(size=3) + 1j * rng.normal(size=3)
            w = d / np.linalg.norm(d) * np.sqrt(ch.rho) * rng.uniform(0, 0.9)
        else:
            w = np.zeros(3, dtype=complex)
        order = spec.k + (1 if spec.k else 0)
        g = gfield(ch, w, max(order, 1))
        H = Hfield(ch, w, max(order, 1))
        h = hfield(ch, w, spec.k)
        blocks = covariant_derivatives(h, H, g, spec.k)
        if rescaled:
            gs = g.value / ch.scale**2
            for i, b in enumerate(blocks):
                sups[i] = max(sups[i], ch.scale ** (-spec.beta) * _tensor_norm(b, gs, H.value))
        else:
            r = ModelPoint(ch.embed(w), t).r
            for i, b in enumerate(blocks):
                sups[i] = max(sups[i], r ** (-spec.beta + i) * _tensor_norm(b, g.value, H.value))
    total = float(sups.sum())
    if holder and spec.pairs > 0:
        total += holder_seminorm(hfield, spec, gfield, Hfield, t, charts)
    return total


def holder_seminorm(hfield: Field, spec: WeightedNormSpec, gfield: Field, Hfield: Field, t: complex, charts=None) -> float:
    """Weighted Hoelder seminorm of ``nabla^k h`` over same-chart pairs."""
    if charts is None:
        _, charts = _sample_charts(spec, t)
    rng = np.random.default_rng(spec.seed + 2)
    best = 0.0
    for ch in charts[: spec.pairs]:
        g0 = gfield(ch, np.zeros(3, dtype=complex), 0).value
        d = rng.normal(size=3) + 1j * rng.normal(size=3)
        dist_unit = np.sqrt(2 * np.real(d.conj() @ g0 @ d))  # length of the segment along d
        sep = rng.uniform(0.1, 0.5) * ch.scale
        dw = d * sep / dist_unit
        while np.sum(np.abs(dw / 2) ** 2) >= ch.rho:
            dw *= 0.5
        dist = float(np.sqrt(2 * np.real(dw.conj() @ g0 @ dw)))
        vals = []
        for w in (dw / 2, -dw / 2):
            order = spec.k + (1 if spec.k else 0)
            g = gfield(ch, w, max(order, 1))
            H = Hfield(ch, w, max(order, 1))
            blocks = covariant_derivatives(hfield(ch, w, spec.k), H, g, spec.k)[-1]
            vals.append(blocks)
        H0 = Hfield(ch, np.zeros(3, dtype=complex), 0).value
        diff = [(b1[0] - b2[0], b1[1]) for b1, b2 in zip(vals[0], vals[1])]
        val = _tensor_norm(diff, g0, H0) / dist**spec.a
        best = max(best, ch.scale ** (-spec.beta + spec.k + spec.a) * val)
    return float(best)


__all__ = [
    "DecayFit",
    "Field",
    "Samples",
    "WeightedNormSpec",
    "annulus_volume",
    "covariant_derivatives",
    "fit_decay",
    "holder_seminorm",
    "link_point",
    "mc_integral",
    "sample_region",
    "volume_density",
    "weighted_norm",
]
