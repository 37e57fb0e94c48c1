"""Chern connection and curvature of Hermitian metrics given as jets.

Metrics are Hermitian matrix jets ``H[k, j] = H_{kbar j}`` in six chart
variables ``(w, wbar)``.  Endomorphisms act on column vectors; the
``H``-adjoint of ``A`` is ``H^-1 A^* H`` and ``<A, B>_H = Tr(A B^dagger)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import OrderError, SingularMetricError
from .forms import adjugate, ddbar_11, norm_11, norm_22, p_from_x
from .jets import Jet, inv, jet_space, jlog, det3, matmul, stack

N = 3


@dataclass(frozen=True)
class CurvatureData:
    """Chern connection and curvature at one point.

    Attributes
    ----------
    connection : ndarray
        ``A[j] = H^-1 d_j H``, shape ``(3, n, n)``.
    curvature : ndarray
        ``F[j, k] = F_{j kbar}`` as ``n x n`` endomorphisms, shape ``(3, 3, n, n)``.
    metric : ndarray
        Value of ``H`` at the point.
    tag : str
        Free-form label of the source metric.
    """

    connection: np.ndarray
    curvature: np.ndarray
    metric: np.ndarray
    tag: str = ""

    def symmetry_residual(self) -> float:
        """``max |F_{j kbar}^dagger - F_{k jbar}|`` relative to ``max |F|``."""
        h = self.metric
        hinv = np.linalg.inv(h)
        F = self.curvature
        adj = np.einsum("ab,kjcb,cd->jkad", hinv, F.conj(), h)
        scale = max(1.0, float(np.max(np.abs(F))))
        return float(np.max(np.abs(adj - F)) / scale)


@dataclass(frozen=True)
class TorsionData:
    """``T[r, i, j] = A_i^r_j - A_j^r_i``."""

    T: np.ndarray

    def norm(self, g: np.ndarray) -> float:
        """Norm with two lower indices raised by ``g`` and one lowered."""
        ginv = np.linalg.inv(g)
        # |T|^2 = g_{rbar s} g^{i kbar} g^{j lbar} T^s_ij conj(T^r_kl)
        val = np.einsum("rs,ik,jl,sij,rkl->", g, ginv, ginv, self.T, self.T.conj())
        return float(np.sqrt(abs(val.real)))


def _check_positive(h: np.ndarray, what: str = "metric"):
    herm = 0.5 * (h + h.conj().T)
    ev = np.linalg.eigvalsh(herm)
    if ev[0] <= 0 or not np.all(np.isfinite(ev)):
        raise SingularMetricError(f"{what} is not positive definite (min eigenvalue {ev[0]:.3e})")


def connection_jet(H: Jet) -> Jet:
    """``A[j] = H^-1 d_j H`` as a jet of one order less."""
    if H.order < 1:
        raise OrderError("connection needs a metric jet of order >= 1")
    _check_positive(H.value)
    hinv = inv(H).truncate(H.order - 1)
    return stack([matmul(hinv, H.d(j)) for j in range(N)], axis=0)


def curvature_jet(H: Jet) -> Jet:
    """``F[j, k] = -dbar_k (H^-1 d_j H)`` as a jet of two orders less."""
    if H.order < 2:
        raise OrderError("curvature needs a metric jet of order >= 2")
    A = connection_jet(H)
    rows = [stack([-A[j].d(N + k) for k in range(N)], axis=0) for j in range(N)]
    return stack(rows, axis=0)


def chern_curvature(H: Jet, tag: str = "") -> CurvatureData:
    """Chern connection and curvature at the base point of a metric jet.

    Raises
    ------
    SingularMetricError
        If ``H`` is not positive definite at the base point.
    OrderError
        If the jet has order below 2.
    """
    F = curvature_jet(H)
    A = connection_jet(H.truncate(1))
    return CurvatureData(A.value, F.value, H.value, tag)


def ricci_jet(g: Jet) -> Jet:
    """``Ric[k, j] = -d_j dbar_k log det g``; the result has two orders less."""
    if g.order < 2:
        raise OrderError("Ricci form needs a metric jet of order >= 2")
    _check_positive(g.value)
    ld = jlog(det3(g))
    rows = []
    for k in range(N):
        dk = ld.d(N + k)
        rows.append(stack([-dk.d(j) for j in range(N)], axis=0))
    return stack(rows, axis=0)


def ricci_form(g: Jet) -> np.ndarray:
    """Hermitian matrix ``Ric[k, j]`` of the Ricci form at the base point."""
    return ricci_jet(g).value


def ricci_from_curvature(curv: CurvatureData) -> np.ndarray:
    """``Ric[k, j] = Tr F_{j kbar}`` (second code path)."""
    return np.einsum("jkaa->kj", curv.curvature)


def torsion(g: Jet) -> TorsionData:
    """Torsion of the Chern connection of ``g`` at the base point."""
    A = connection_jet(g.truncate(1)).value  # A[i, r, j]
    return TorsionData(np.einsum("irj->rij", A) - np.einsum("jri->rij", A))


def endo_norm(a: np.ndarray, h: np.ndarray) -> float:
    """``sqrt(Tr(A A^dagger))`` with the ``h``-adjoint."""
    adj = np.linalg.solve(h, a.conj().T @ h)
    return float(np.sqrt(abs(np.trace(a @ adj).real)))


def lambda_contract(g: np.ndarray, F: np.ndarray) -> np.ndarray:
    """``i Lambda F = g^{j kbar} F_{j kbar}``."""
    _check_positive(g, "contraction metric")
    ginv = np.linalg.inv(g)
    return np.einsum("jk,jk...->...", ginv, F)


def hym_residual(g: Jet, H: Jet) -> tuple[np.ndarray, float]:
    """``i Lambda_g F_H`` at the base point and its ``(H, g)`` norm."""
    curv = chern_curvature(H)
    e = lambda_contract(g.value, curv.curvature)
    return e, endo_norm(e, H.value)


def anomaly_residual(g: Jet, H: Jet, alpha_prime: float = 1.0) -> float:
    """``|i d dbar omega - (alpha'/4)(Tr Rm ^ Rm - Tr F ^ F)|_g`` at the base point.

    ``Rm`` is the Chern curvature of ``g`` viewed as a metric on the
    tangent bundle; both jets need order at least 2.
    """
    if g.order < 2 or H.order < 2:
        raise OrderError("anomaly residual needs jets of order >= 2")
    ddw = ddbar_11(g.truncate(2)).value
    Rm = chern_curvature(g).curvature
    F = chern_curvature(H).curvature
    x = np.einsum("srab,jkba->srjk", Rm, Rm) - np.einsum("srab,jkba->srjk", F, F)
    total = ddw - 0.25 * alpha_prime * p_from_x(x)
    return norm_22(total, g.value)


# gradient inequality for fractional powers
def _whiten(hhat: np.ndarray) -> np.ndarray:
    """``L`` with ``Hhat = L^* L`` so that ``Hhat``-adjoints become plain adjoints after ``L A L^-1``."""
    _check_positive(hhat, "Hhat")
    c = np.linalg.cholesky(0.5 * (hhat + hhat.conj().T))  # Hhat = c c^*
    return c.conj().T


def power_derivative(lam: np.ndarray, x: np.ndarray, sigma: float) -> np.ndarray:
    """Frechet derivative of ``h -> h^sigma`` at ``diag(lam)`` along ``x`` (eigenbasis)."""
    la, lb = lam[:, None], lam[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = (la**sigma - lb**sigma) / (la - lb)
    close = np.abs(la - lb) <= 1e-12 * np.maximum(la, lb)
    dd = np.where(close, sigma * np.maximum(la, lb) ** (sigma - 1), dd)
    return dd * x


def uy_inequality_margin(
    hhat: np.ndarray,
    H: np.ndarray,
    g: np.ndarray,
    sigma: float,
    dh: np.ndarray,
) -> float:
    """Pointwise margin of the gradient inequality for fractional powers.

    ``g^{j kbar} <h^-1 D_j h, D_k h^sigma> - |h^(-sigma/2) D h^sigma|^2``
    with ``h = Hhat^-1 H`` and all pairings taken with ``Hhat``.

    Parameters
    ----------
    hhat, H : ndarray
        Hermitian positive definite ``n x n`` matrices.
    g : ndarray
        Hermitian positive definite ``m x m`` base metric ``g[k, j]``.
    sigma : float
        Exponent in ``(0, 1]``.
    dh : ndarray
        ``D_j h`` for ``j < m``, shape ``(m, n, n)``.  The antiholomorphic
        derivatives are the ``Hhat``-adjoints and are not needed.

    Returns
    -------
    float
        The margin, which is nonnegative up to round-off.
    """
    if not 0 < sigma <= 1:
        raise ValueError("sigma must lie in (0, 1]")
    _check_positive(H, "H")
    _check_positive(g, "g")
    L = _whiten(hhat)
    Linv = np.linalg.inv(L)
    hw = L @ np.linalg.solve(hhat, H) @ Linv
    hw = 0.5 * (hw + hw.conj().T)
    lam, U = np.linalg.eigh(hw)
    if lam[0] <= 0:
        raise SingularMetricError("h is not positive")
    ginv = np.linalg.inv(g)
    X = np.einsum("ab,jbc,cd->jad", U.conj().T @ L, dh, Linv @ U)
    A = X / lam[None, :, None]  # h^-1 X
    B = np.stack([power_derivative(lam, x, sigma) for x in X])
    C = B * lam[None, :, None] ** (-sigma / 2)
    first = np.einsum("jk,jab,kab->", ginv, A, B.conj())
    second = np.einsum("jk,jab,kab->", ginv, C, C.conj())
    return float((first - second).real)


# finite-difference fallback
def _wirtinger_matrix(n: int = N) -> np.ndarray:
    """Rows map real partials ``(d_x1.., d_y1..)`` to ``(d_w, d_wbar)``."""
    T = np.zeros((2 * n, 2 * n), dtype=complex)
    for a in range(n):
        T[a, a], T[a, n + a] = 0.5, -0.5j
        T[n + a, a], T[n + a, n + a] = 0.5, 0.5j
    return T


def finite_difference_jet(
    func: Callable[[np.ndarray], np.ndarray],
    w0,
    step: float = 1e-3,
    richardson: bool = True,
) -> Jet:
    """Order-2 jet of a tensor valued function of ``w`` by central differences.

    Parameters
    ----------
    func : callable
        Maps a chart point ``w`` (3 complex numbers) to an array.
    step : float
        Difference step in chart units.
    richardson : bool
        Combine steps ``h`` and ``h/2`` to cancel the leading error.
    """
    w0 = np.asarray(w0, dtype=complex)
    n = w0.size
    f0 = np.asarray(func(w0), dtype=complex)

    def real_dir(i):
        e = np.zeros(n, dtype=complex)
        e[i % n] = 1.0 if i < n else 1.0j
        return e

    def ev(vec):
        return np.asarray(func(w0 + vec), dtype=complex)

    def derivs(h):
        grad = np.zeros((2 * n,) + f0.shape, dtype=complex)
        hess = np.zeros((2 * n, 2 * n) + f0.shape, dtype=complex)
        cache = {}
        for i in range(2 * n):
            ei = real_dir(i)
            fp, fm = ev(h * ei), ev(-h * ei)
            cache[i] = (fp, fm)
            grad[i] = (fp - fm) / (2 * h)
            hess[i, i] = (fp - 2 * f0 + fm) / h**2
        for i in range(2 * n):
            for j in range(i + 1, 2 * n):
                ei, ej = real_dir(i), real_dir(j)
                val = (ev(h * (ei + ej)) - ev(h * (ei - ej)) - ev(h * (ej - ei)) + ev(-h * (ei + ej))) / (4 * h * h)
                hess[i, j] = hess[j, i] = val
        return grad, hess

    g1, h1 = derivs(step)
    if richardson:
        g2, h2 = derivs(step / 2)
        grad = (4 * g2 - g1) / 3
        hess = (4 * h2 - h1) / 3
    else:
        grad, hess = g1, h1
    T = _wirtinger_matrix(n)
    cgrad = np.einsum("ai,i...->a...", T, grad)
    chess = np.einsum("ai,bj,ij...->ab...", T, T, hess)
    space = jet_space(2 * n, 2)
    coef = np.zeros(f0.shape + (space.size,), dtype=complex)
    coef[..., 0] = f0
    for a in range(2 * n):
        e = [0] * (2 * n)
        e[a] = 1
        coef[..., space.index[tuple(e)]] = cgrad[a]
        for b in range(a, 2 * n):
            e2 = [0] * (2 * n)
            e2[a] += 1
            e2[b] += 1
            fac = 0.5 if a == b else 1.0
            coef[..., space.index[tuple(e2)]] = chess[a, b] * fac
    return Jet(space, coef)


def metric_norm(g: np.ndarray) -> float:
    """``|g|_g = sqrt(3)``; kept for symmetry with the relative Ricci measure."""
    return norm_11(g, g)


__all__ = [
    "CurvatureData",
    "TorsionData",
    "adjugate",
    "anomaly_residual",
    "chern_curvature",
    "connection_jet",
    "curvature_jet",
    "endo_norm",
    "finite_difference_jet",
    "hym_residual",
    "lambda_contract",
    "metric_norm",
    "power_derivative",
    "ricci_form",
    "ricci_from_curvature",
    "ricci_jet",
    "torsion",
    "uy_inequality_margin",
]
