"""Gluing constructions on the local models.

* The balanced (2,2)-form on the resolved conifold obtained by grafting a
  scaled cone form onto a Calabi-Yau model near the zero section.
* The approximate Hermitian-Yang-Mills metric ``H_t`` on the smoothing
  that interpolates between ``g_co,t`` near the vanishing cycle and the
  pulled back model metric ``H_0`` farther out.
* The linearized operator ``L_t``, the functional ``F(u)`` and the
  theta-perturbed balanced metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm as expm_matrix

from .conifold import RESOLUTION, Chart, ModelPoint, phi_inverse_jet, resolution_to_cone
from .curvature import chern_curvature, connection_jet, curvature_jet, endo_norm, lambda_contract
from .errors import DegeneratePointError, OutsideDomainError, PerturbationTooLargeError
from .forms import adjugate, ddbar_11, norm_22, sqrt_22, wedge_jet, wedge_11
from .jets import Jet, ddbar, det3, expm, inv, jet_space, jsqrt, matmul, stack
from .potentials import (
    SmoothStep,
    ambient_cone_metric,
    co_metric,
    fly_cutoff,
    fs_potential_jet,
    _scalar_times,
)

N = 3


# configuration
@dataclass(frozen=True)
class GlueConfig:
    """Parameters shared by both gluing constructions.

    ``alpha`` defaults to ``1 / (1 + lam/3)`` so that the two error terms
    in the transition annulus balance.
    """

    R: float = 100.0
    C0: Optional[float] = None
    t: complex = 1e-2
    lam: float = 1.0 / 3.0
    alpha: Optional[float] = None
    c: float = 1.0
    amplitude: float = 1.0
    kappa: float = 0.1
    eps: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lam must lie in (0, 1)")
        a = self.alpha_eff
        if not 0 < a < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.R < 10:
            raise OutsideDomainError("gluing scale R must be at least 10")

    @property
    def alpha_eff(self) -> float:
        return 1.0 / (1.0 + self.lam / 3.0) if self.alpha is None else float(self.alpha)

    def tail(self) -> "SyntheticTail":
        return SyntheticTail(self.lam, self.amplitude, self.seed)

    @property
    def CR2(self) -> float:
        return self.R**-3.0

    def with_(self, **kw) -> "GlueConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return GlueConfig(**d)


@dataclass(frozen=True)
class SyntheticTail:
    """Trace-free Hermitian perturbation ``E_0 = amplitude r^(lam-1) B`` of the cone metric.

    ``B`` is a fixed 4x4 Hermitian trace-free matrix of unit Frobenius
    norm drawn from ``seed``.  Measured in ``g_co,0`` the tail has size
    ``~ amplitude r^lam``.
    """

    lam: float = 1.0 / 3.0
    amplitude: float = 1.0
    seed: int = 0

    @cached_property
    def B(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = m + m.conj().T
        m -= np.trace(m) / 4 * np.eye(4)
        return m / np.linalg.norm(m)

    def ambient(self, z: Jet, zb: Jet) -> Jet:
        """Jet of the ambient Hermitian form ``E_0[b, a]`` at the point ``z``."""
        s = (z * zb).sum(0)
        f = s ** ((self.lam - 1.0) / 3.0) * self.amplitude
        return _scalar_times(f, Jet.constant(z.space, self.B))

    def decay_ratio(self, z: np.ndarray) -> float:
        """``|E_0|_{g_co,0} / r^lam`` at an ambient cone point (for bound checks)."""
        from .conifold import ModelPoint, make_cyl_chart

        ch = make_cyl_chart(ModelPoint(z, 0j))
        zj = ch.embed_jet(None, 0)
        F = ch.frame()
        E = F.conj().T @ self.ambient(zj, zj.bar()).value @ F
        g = co_metric(0j, ch, None, 0).value
        ginv = np.linalg.inv(g)
        return float(np.sqrt(abs(np.trace(ginv @ E @ ginv @ E.conj().T))) / ch.scale**self.lam)


# standard fields
def co_metric_field(t: complex) -> Callable:
    """``g_co,t`` in the calling convention ``field(chart, w, order)``."""

    def fld(chart: Chart, w, order: int) -> Jet:
        return co_metric(t, chart, w, order)

    return fld


def frame_jet(chart: Chart, w, order: int) -> Jet:
    """Holomorphic frame ``F[a, j] = d z^a / d w^j`` as a jet."""
    z = chart.embed_jet(w, order + 1)
    return stack([z.d(j) for j in range(N)], axis=-1)


def _pullback_herm(F: Jet, M: Jet) -> Jet:
    """``F^H M F`` for a holomorphic frame jet ``F`` (rows antiholomorphic)."""
    return matmul(matmul(F.bar().T, M), F)


def tensor_field(chart: Chart, w, order: int, B: np.ndarray, power: float) -> Jet:
    """``r^power F^H B F``: pulled back constant Hermitian form with radial weight."""
    z = chart.embed_jet(w, order)
    s = (z * z.bar()).sum(0)
    base = _pullback_herm(frame_jet(chart, w, order), Jet.constant(z.space, B))
    return _scalar_times(s ** (power / 3.0), base)


# HYM gluing on the smoothing
def glue_cutoff() -> SmoothStep:
    """``zeta`` with ``zeta = 1`` on ``[0, 1]`` and ``0`` on ``[2, inf)``."""
    return SmoothStep(1.0, 2.0)


def region_hym(cfg: GlueConfig, norm2: float) -> str:
    a = abs(cfg.t) ** cfg.alpha_eff
    if norm2 <= a:
        return "inner"
    if norm2 < 2 * a:
        return "transition"
    return "outer"


def model_metric_pullback(cfg: GlueConfig, tail: Optional[SyntheticTail], chart: Chart, w, order: int) -> Jet:
    """``K_t = [(Phi_t^-1)^* H_0]^{1,1}`` as a Hermitian matrix jet in the chart."""
    t = cfg.t
    z = chart.embed_jet(w, order + 1)
    zb = z.bar()
    if abs(t) == 0:
        psi, psib = z, zb
    else:
        if float(np.sum(np.abs(z.value) ** 2)) <= abs(t) * (1 + 1e-12):
            raise OutsideDomainError("model pullback is undefined on the vanishing cycle")
        psi, psib = phi_inverse_jet(t, z, zb)
    M0 = ambient_cone_metric(psi, psib) * cfg.c
    if tail is not None and tail.amplitude != 0:
        M0 = M0 + tail.ambient(psi, psib)
    M0 = M0.truncate(order)
    dpsi = stack([psi.d(j) for j in range(N)], axis=-1)  # [a, j]
    dpsib = stack([psib.d(j) for j in range(N)], axis=-1)
    dbpsi = stack([psi.d(N + k) for k in range(N)], axis=-1)  # [a, k]
    dbpsib = stack([psib.d(N + k) for k in range(N)], axis=-1)
    first = matmul(matmul(dbpsib.T, M0), dpsi)
    second = matmul(matmul(dbpsi.T, M0.T), dpsib)
    return first + second


def glued_hym_metric(cfg: GlueConfig, tail: Optional[SyntheticTail], chart: Chart, w=None, order: int = 2) -> Jet:
    """The glued metric ``H_t = chi g_co,t + (1 - chi) K_t`` as a jet.

    ``chi = zeta(|z|^2 |t|^-alpha)``.  In the pure regions the unused piece
    is not evaluated, so ``H_t`` is exactly ``g_co,t`` inside the inner
    region and exactly ``K_t`` beyond the transition annulus.

    Raises
    ------
    OutsideDomainError
        On or inside the vanishing cycle.
    """
    w = np.zeros(3, dtype=complex) if w is None else np.asarray(w, dtype=complex)
    t = cfg.t
    z = chart.embed_jet(w, order)
    s = (z * z.bar()).sum(0)
    s0 = float(s.value.real)
    if s0 < abs(t) * (1 - 1e-12):
        raise OutsideDomainError("point lies inside the vanishing cycle")
    scale = abs(t) ** (-cfg.alpha_eff)
    chi = glue_cutoff().jet(s * scale)
    x = s0 * scale
    if x <= 1.0:
        return co_metric(t, chart, w, order)
    K = model_metric_pullback(cfg, tail, chart, w, order)
    if x >= 2.0:
        return K
    g = co_metric(t, chart, w, order)
    return _scalar_times(chi, g) + _scalar_times(1.0 - chi, K)


def glued_hym_field(cfg: GlueConfig, tail: Optional[SyntheticTail]) -> Callable:
    def fld(chart: Chart, w, order: int) -> Jet:
        return glued_hym_metric(cfg, tail, chart, w, order)

    return fld


def hym_transition_value(cfg: GlueConfig, tail: Optional[SyntheticTail], chart: Chart) -> float:
    """``r^2 |i Lambda F_{H_t}|`` at a chart center with ``g = g_co,t``."""
    H = glued_hym_metric(cfg, tail, chart, None, 2)
    g = co_metric(cfg.t, chart, None, 0)
    e = lambda_contract(g.value, chern_curvature(H).curvature)
    return chart.scale**2 * endo_norm(e, H.value)


# linearized operator and functional
def _covariant(h: Jet, A: Jet, j: int) -> Jet:
    o = h.order - 1
    a = A[j].truncate(o)
    hh = h.truncate(o)
    return h.d(j) + matmul(a, hh) - matmul(hh, a)


def linearized_operator(g: Jet, H: Jet, h: Jet) -> np.ndarray:
    """``L h = g^{j kbar} dbar_k nabla_j h + 1/2 [i Lambda F_H, h]`` at the base point.

    ``H`` and ``h`` need jets of order 2; ``g`` only its value.
    """
    A = connection_jet(H.truncate(2))  # order 1
    ginv = np.linalg.inv(g.value)
    lap = np.zeros(h.shape, dtype=complex)
    for j in range(N):
        dj = _covariant(h.truncate(2), A, j)
        for k in range(N):
            lap = lap + ginv[j, k] * dj.d(N + k).value
    e = lambda_contract(g.value, curvature_jet(H.truncate(2)).value)
    hv = h.value
    return lap + 0.5 * (e @ hv - hv @ e)


def hym_functional(u: Jet, H: Jet, g: Jet) -> np.ndarray:
    """``F(u) = e^(u/2) (i Lambda F_{H e^u}) e^(-u/2)`` at the base point."""
    Hu = matmul(H.truncate(u.order), expm(u))
    e = lambda_contract(g.value, chern_curvature(Hu).curvature)
    u0 = u.value
    return expm_matrix(0.5 * u0) @ e @ expm_matrix(-0.5 * u0)


def bump_endomorphism_field(t: complex, S: np.ndarray, r_in: float, r_out: float, Hfield: Callable) -> Callable:
    """Hermitian test field ``psi(|z|^2) H^-1 (F^H S F)`` supported in an annulus.

    ``psi`` is a smooth bump that vanishes outside ``r_in < r < r_out``.
    """
    lo, hi = r_in**3, r_out**3
    mid = 0.5 * (lo + hi)
    up = SmoothStep(lo, mid)
    down = SmoothStep(mid, hi)

    def fld(chart: Chart, w, order: int) -> Jet:
        z = chart.embed_jet(w, order)
        s = (z * z.bar()).sum(0)
        psi = (1.0 - up.jet(s)) * down.jet(s)
        H = Hfield(chart, w, order)
        base = _pullback_herm(frame_jet(chart, w, order), Jet.constant(z.space, S))
        return _scalar_times(psi, matmul(inv(H), base))

    return fld


# theta-perturbed metric
def sqrt_22_jet(P: Jet) -> Jet:
    """``G = det(P)^(1/2) P^-1`` applied to a (2,2) coefficient jet."""
    return _scalar_times(jsqrt(det3(P)), inv(P))


def theta_perturbed_metric(G: np.ndarray, P_theta: np.ndarray, smallness: float = 0.01) -> np.ndarray:
    """Square root of ``omega^2 + theta + conj(theta)``.

    Parameters
    ----------
    G : ndarray
        Metric ``omega`` as a Hermitian matrix.
    P_theta : ndarray
        Coefficient matrix of the real (2,2)-form ``theta + conj(theta)``.
    smallness : float
        Largest admissible ``|theta + conj(theta)|_g``.

    Raises
    ------
    PerturbationTooLargeError
        If the perturbation is not small.
    """
    size = norm_22(P_theta, G)
    if size > smallness * (1 + 1e-12):
        raise PerturbationTooLargeError(f"|theta| = {size:.3e} exceeds {smallness}")
    return sqrt_22(adjugate(G) + P_theta)


def synthetic_theta(t: complex, chart: Chart, w, order: int, G: Jet, B: np.ndarray, amp: float = 0.5) -> Jet:
    """``amp |t|^(2/3) omega ^ beta`` with ``beta = r^-1 F^H B F`` of unit size."""
    beta = tensor_field(chart, w, order, B, -1.0)
    return wedge_jet(G.truncate(order), beta) * (amp * abs(t) ** (2.0 / 3.0))


# FLY balanced form on the resolution
@dataclass(frozen=True)
class ResolutionChart:
    """The coordinates ``(x, u, v)`` of one patch of the resolved conifold."""

    center: ModelPoint
    scale: float = field(init=False)

    def __post_init__(self):
        if self.center.variety != RESOLUTION:
            raise ValueError("resolution chart needs a resolution point")
        object.__setattr__(self, "scale", self.center.r)

    def jets(self, w=None, order: int = 4) -> list[Jet]:
        w = np.zeros(3, dtype=complex) if w is None else np.asarray(w, dtype=complex)
        u, v = self.center.fiber
        base = np.array([self.center.base, u, v]) + w
        return Jet.variables(jet_space(6, order), np.concatenate([base, np.conj(base)]))


def region_fly(R: float, r: float) -> str:
    if r < 1.0 / R:
        return "inner"
    if r < 2.0 / R:
        return "transition"
    if r < 1.0:
        return "middle"
    return "outer"


@dataclass
class FlyModel:
    """Model data for the balanced gluing on the resolution.

    ``omega_CY = i d dbar (log(1 + |x|^2) + phi)`` with
    ``phi = h1 + r^3 + eps (1 + |x|^2) Re(u vbar)`` and the pluriharmonic
    correction ``h1 = kappa Re(u xbar)``, which satisfies
    ``p^* omega_FS ^ i d dbar h1 = 0``.
    """

    cfg: GlueConfig
    C0: float = 1.0

    def __post_init__(self):
        self.sigma = SmoothStep(1.0, 8.0)
        self.cutoff = fly_cutoff(self.cfg.R)

    def _scalars(self, chart: ResolutionChart, w, order: int) -> dict:
        x, u, v, xb, ub, vb = chart.jets(w, order)
        nx = x * xb + 1.0
        r3 = nx * (u * ub + v * vb)
        k, e = self.cfg.kappa, self.cfg.eps
        h1 = (u * xb + ub * x) * (0.5 * k)
        phi = h1 + r3 + nx * (u * vb + ub * v) * (0.5 * e)
        return {"r3": r3, "h1": h1, "phi": phi, "fs": fs_potential_jet(x, xb)}

    def omega_cy(self, chart: ResolutionChart, w, order: int) -> Jet:
        sc = self._scalars(chart, w, order + 2)
        return ddbar(sc["fs"] + sc["phi"], N)

    def omega_co0(self, chart: ResolutionChart, w, order: int) -> Jet:
        sc = self._scalars(chart, w, order + 2)
        return ddbar(sc["r3"] ** (2.0 / 3.0), N) * 1.5

    def gamma(self, chart: ResolutionChart, w, order: int) -> Jet:
        """Matrix jet of the (1,1)-form ``Gamma_R``."""
        sc = self._scalars(chart, w, order + 2)
        R = self.cfg.R
        sig = self.sigma.jet(sc["r3"] * R**3).truncate(order)
        phi, h1, fs = sc["phi"], sc["h1"], sc["fs"]
        dd_fs = ddbar(fs, N)
        dd_sum = ddbar(phi + h1, N)
        dd_h1 = ddbar(h1, N)
        diff = (phi - h1).truncate(order)
        inner = _scalar_times(diff, dd_fs * 2.0 + dd_sum) + _scalar_times(h1.truncate(order), dd_h1)
        return _scalar_times(sig, inner)

    def psi_R(self, chart: ResolutionChart, w, order: int) -> Jet:
        """P-jet of ``Psi_R = omega_CY^2 - i d dbar Gamma_R``."""
        cy = self.omega_cy(chart, w, order)
        return wedge_jet(cy, cy) - ddbar_11(self.gamma(chart, w, order + 2))

    def cone_term(self, chart: ResolutionChart, w, order: int) -> Jet:
        """P-jet of ``C_R^2 i d dbar (chi(R^2 r^2) R^2 i d dbar r^2)``."""
        sc = self._scalars(chart, w, order + 4)
        R = self.cfg.R
        r2 = sc["r3"] ** (2.0 / 3.0)
        chi = self.cutoff.jet(r2.truncate(order + 2) * R**2)
        inner = _scalar_times(chi, ddbar(r2, N)) * R**2
        return ddbar_11(inner) * self.cfg.CR2

    def glued(self, chart: ResolutionChart, w, order: int) -> Jet:
        return self.psi_R(chart, w, order) + self.cone_term(chart, w, order) * self.C0

    def field(self) -> Callable:
        def fld(chart, w, order):
            return self.glued(chart, w, order)

        return fld


def relative_min_eig(P: np.ndarray, ref: np.ndarray) -> float:
    """Smallest eigenvalue of ``P`` relative to a positive reference ``ref``."""
    ev, U = np.linalg.eigh(0.5 * (ref + ref.conj().T))
    s = U / np.sqrt(ev)
    m = s.conj().T @ P @ s
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])


@dataclass(frozen=True)
class FlyEvaluation:
    """Glued form at one point with its region and positivity margins."""

    P: np.ndarray
    region: str
    margin: float
    rel_margin: float
    r: float


def fly_glued_form(model: FlyModel, p: ModelPoint) -> FlyEvaluation:
    """Evaluate the glued (2,2)-form and its positivity at a resolution point.

    ``margin`` is the smallest eigenvalue of the coefficient matrix and
    ``rel_margin`` the smallest eigenvalue relative to ``omega_co,0^2``.

    Raises
    ------
    DegeneratePointError
        On the zero section, where ``omega_co,0`` degenerates.
    """
    if p.r < 1e-8:
        raise DegeneratePointError("the zero section is excluded")
    ch = ResolutionChart(p)
    P = model.glued(ch, None, 0).value
    ref = adjugate(model.omega_co0(ch, None, 0).value)
    ev = np.linalg.eigvalsh(0.5 * (P + P.conj().T))
    return FlyEvaluation(P, region_fly(model.cfg.R, p.r), float(ev[0]), relative_min_eig(P, ref), p.r)


def transition_constant(model: FlyModel, p: ModelPoint) -> float:
    """``max(0, -lambda_min(Psi_R / omega_co,0^2)) / R``: the local lower-bound constant."""
    ch = ResolutionChart(p)
    P = model.psi_R(ch, None, 0).value
    ref = adjugate(model.omega_co0(ch, None, 0).value)
    return max(0.0, -relative_min_eig(P, ref)) / model.cfg.R


def sample_resolution(R_lo: float, R_hi: float, n: int, seed: int = 0, xscale: float = 0.5) -> list[ModelPoint]:
    """Resolution points with ``r`` log-uniform in ``[R_lo, R_hi)``."""
    from .conifold import resolution_point

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        x = xscale * (rng.normal() + 1j * rng.normal())
        d = rng.normal(size=2) + 1j * rng.normal(size=2)
        d /= np.linalg.norm(d)
        r = R_lo * (R_hi / R_lo) ** rng.uniform()
        rho = np.sqrt(r**3 / (1 + abs(x) ** 2))
        out.append(resolution_point(x, rho * d[0], rho * d[1]))
    return out


FLY_REGIONS = {
    "inner": lambda R: (0.05 / R, 1.0 / R),
    "transition": lambda R: (1.0 / R, 2.0 / R),
    "middle": lambda R: (2.0 / R, 1.0),
    "outer": lambda R: (1.0, 3.0),
}


def measure_transition_constant(cfg: GlueConfig, n: int = 200, seed: int = 0) -> float:
    model = FlyModel(cfg, 1.0)
    lo, hi = FLY_REGIONS["transition"](cfg.R)
    pts = sample_resolution(lo, hi * (1 - 1e-9), n, seed)
    return max(transition_constant(model, p) for p in pts)


# out-of-scope pieces of the fixed point argument
def quadratic_remainder(*_args, **_kwargs):
    """Quadratic part ``Q`` of the HYM functional.

    Not implemented: it only enters the contraction mapping argument for a
    global solve on the compact threefold, which these local models do not
    attempt.
    """
    raise NotImplementedError("Q requires the global solve, which is out of scope")


def nonlinear_map(*_args, **_kwargs):
    """Fixed point map ``N = -L^-1 (F(0) + Q)``; not implemented (global solve)."""
    raise NotImplementedError("N requires the global inverse of L_t, which is out of scope")


def inverse_linearized(*_args, **_kwargs):
    """Inverse of ``L_t`` on weighted spaces; not implemented (global solve)."""
    raise NotImplementedError("L_t^-1 requires a global elliptic solve, which is out of scope")
