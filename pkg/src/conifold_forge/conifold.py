"""Points, holomorphic cylindrical charts and the maps between conifold models.

Smoothings are ``V_t = {z in C^4 : sum z_i^2 = t}``; ``t = 0`` is the cone.
The resolution is described in the base chart ``x`` of P^1 with fiber
coordinates ``(u, v)``.  The cone radius is ``r = |z|^(2/3)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegeneratePointError,
    IllConditionedChartError,
    InvalidScaleError,
    OutsideDomainError,
    ShapeError,
)
from .jets import Jet, jet_space

SMOOTHING = "smoothing"
RESOLUTION = "resolution"

RHO_DEFAULT = 0.125
CHART_C0 = 1.0e3
TIP_RADIUS = 1.0e-8


@dataclass(frozen=True)
class ModelPoint:
    """A point of ``V_t`` or of the resolved conifold.

    For resolution points ``coords`` holds the image on the cone under the
    contraction map and ``base``/``fiber`` hold the chart coordinates.
    """

    coords: np.ndarray
    t: complex = 0j
    variety: str = SMOOTHING
    base: Optional[complex] = None
    fiber: Optional[tuple] = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=complex).reshape(4)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "t", complex(self.t))

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.coords, self.coords).real)

    @property
    def r(self) -> float:
        if self.variety == RESOLUTION:
            u, v = self.fiber
            return float(((1 + abs(self.base) ** 2) * (abs(u) ** 2 + abs(v) ** 2)) ** (1 / 3))
        return self.norm2 ** (1 / 3)

    def residual(self) -> float:
        """Defining-equation residual ``|sum z_i^2 - t|``."""
        return float(abs(np.sum(self.coords**2) - self.t))


def cone_radius(z) -> np.ndarray:
    """``r(z) = |z|^(2/3)`` for arrays of points (last axis of length 4)."""
    z = np.asarray(z)
    return np.sum(np.abs(z) ** 2, axis=-1) ** (1 / 3)


def smoothing_point(z, t: complex = 0j, check: bool = True) -> ModelPoint:
    p = ModelPoint(z, t)
    if check and p.residual() > 1e-12 * max(1.0, p.norm2):
        raise OutsideDomainError(f"point is not on V_t (residual {p.residual():.3e})")
    return p


def resolution_to_cone(x, u, v) -> np.ndarray:
    """Contraction map of the resolution onto the cone, normalized so |z|^2 = r^3."""
    a, b, c, d = u, v, u * x, v * x
    s = np.sqrt(2.0)
    return np.array([(a + d) / s, (a - d) / (1j * s), (b - c) / s, (b + c) / (1j * s)])


def resolution_point(x: complex, u: complex, v: complex) -> ModelPoint:
    z = resolution_to_cone(complex(x), complex(u), complex(v))
    return ModelPoint(z, 0j, RESOLUTION, complex(x), (complex(u), complex(v)))


def resolution_r3(x, u, v):
    return (1 + np.abs(x) ** 2) * (np.abs(u) ** 2 + np.abs(v) ** 2)


# charts
@dataclass(frozen=True)
class Chart:
    """Holomorphic cylindrical coordinates ``w -> z(w)`` around a center.

    ``w_i = (z_i - zhat_i) / |zhat|`` over the kept indices; the eliminated
    coordinate is recovered from the defining equation on the branch that
    is continuous at ``w = 0``.
    """

    center: ModelPoint
    eliminated: int
    rho: float = RHO_DEFAULT
    c0: float = CHART_C0
    keep: tuple = field(init=False)
    scale: float = field(init=False)
    znorm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "keep", tuple(i for i in range(4) if i != self.eliminated))
        object.__setattr__(self, "znorm", float(np.sqrt(self.center.norm2)))
        object.__setattr__(self, "scale", self.center.r)

    @property
    def t(self) -> complex:
        return self.center.t

    def embed(self, w) -> np.ndarray:
        """Numeric embedding for arrays of chart points (last axis 3)."""
        w = np.asarray(w, dtype=complex)
        zc = self.center.coords
        z = np.empty(w.shape[:-1] + (4,), dtype=complex)
        for n, i in enumerate(self.keep):
            z[..., i] = zc[i] + self.znorm * w[..., n]
        q = self.t - np.sum(z[..., list(self.keep)] ** 2, axis=-1)
        ze = zc[self.eliminated]
        z[..., self.eliminated] = ze * np.sqrt(q / ze**2)
        return z

    def inverse(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        zc = self.center.coords
        return (z[..., list(self.keep)] - zc[list(self.keep)]) / self.znorm

    def frame(self, w=None) -> np.ndarray:
        """Columns ``dz/dw_i`` (shape ``(..., 4, 3)``)."""
        if w is None:
            w = np.zeros(3)
        z = self.embed(w)
        f = np.zeros(np.shape(z)[:-1] + (4, 3), dtype=complex)
        for n, i in enumerate(self.keep):
            f[..., i, n] = self.znorm
            f[..., self.eliminated, n] = -z[..., i] * self.znorm / z[..., self.eliminated]
        return f

    def embed_jet(self, w0=None, order: int = 4) -> Jet:
        """Jet of the holomorphic embedding ``z(w)`` at ``w0`` in six variables."""
        space = jet_space(6, order)
        w0 = np.zeros(3) if w0 is None else np.asarray(w0, dtype=complex)
        base = np.concatenate([w0, np.conj(w0)])
        ws = Jet.variables(space, base)
        zc = self.center.coords
        comps = [None] * 4
        for n, i in enumerate(self.keep):
            comps[i] = ws[n] * self.znorm + zc[i]
        q = -(comps[self.keep[0]] ** 2 + comps[self.keep[1]] ** 2 + comps[self.keep[2]] ** 2) + self.t
        ze = zc[self.eliminated]
        comps[self.eliminated] = (q * (1 / ze**2)) ** 0.5 * ze
        coef = np.stack([c.coef for c in comps], axis=0)
        return Jet(space, coef)


def make_cyl_chart(p: ModelPoint, rho: float = RHO_DEFAULT) -> Chart:
    """Holomorphic cylindrical chart centered at ``p``.

    Raises
    ------
    DegeneratePointError
        If ``p`` is within ``1e-8`` of the cone tip.
    IllConditionedChartError
        If the eliminated coordinate is too small for a stable branch.
    """
    if p.variety != SMOOTHING:
        raise ShapeError("cylindrical charts live on the smoothing family")
    if p.r < TIP_RADIUS:
        raise DegeneratePointError("cone tip cannot be a chart center")
    mod = np.abs(p.coords)
    elim = int(np.argmax(mod))
    if mod[elim] < 1e-8 * np.sqrt(p.norm2):
        raise IllConditionedChartError("eliminated coordinate too small")
    return Chart(p, elim, rho)


# maps
def phi_apply(t: complex, z) -> np.ndarray:
    """``Phi_t(z) = z + t conj(z) / (2 |z|^2)`` on arrays (last axis 4)."""
    z = np.asarray(z, dtype=complex)
    s = np.sum(np.abs(z) ** 2, axis=-1, keepdims=True)
    if np.any(s <= abs(t) / 2):
        raise OutsideDomainError("Phi_t needs |z|^2 > |t|/2")
    return z + t * np.conj(z) / (2 * s)


def phi_map(t: complex, p: ModelPoint) -> ModelPoint:
    """Map a cone point into ``V_t``."""
    return ModelPoint(phi_apply(t, p.coords), t)


def _phi_jacobian(t: complex, z0: np.ndarray) -> np.ndarray:
    s = np.vdot(z0, z0).real
    zb = np.conj(z0)
    a = np.eye(4) - t * np.outer(zb, zb) / (2 * s**2)
    b = t * np.eye(4) / (2 * s) - t * np.outer(zb, z0) / (2 * s**2)
    return np.block([[a, b], [np.conj(b), np.conj(a)]])


def phi_inverse(t: complex, z, tol: float = 1e-15, maxiter: int = 60) -> np.ndarray:
    """Invert ``Phi_t`` by Newton iteration in ``(z, conj z)`` variables."""
    z = np.asarray(z, dtype=complex)
    if z.ndim > 1:
        return np.stack([phi_inverse(t, zi, tol, maxiter) for zi in z.reshape(-1, 4)]).reshape(z.shape)
    s = np.vdot(z, z).real
    z0 = z - t * np.conj(z) / (2 * s)
    for _ in range(maxiter):
        f = phi_apply(t, z0) - z
        if np.max(np.abs(f)) <= tol * max(1.0, np.sqrt(s)):
            break
        jac = _phi_jacobian(t, z0)
        step = np.linalg.solve(jac, -np.concatenate([f, np.conj(f)]))
        z0 = z0 + step[:4]
    return z0


def phi_inverse_jet(t: complex, z: Jet, zb: Jet) -> tuple[Jet, Jet]:
    """Jets of ``Phi_t^{-1}`` composed with a point jet.

    ``z`` and ``zb`` are jets of the target point and its conjugate.  The
    fixed point iteration uses the Jacobian at the base point and gains one
    order per sweep.
    """
    z0 = phi_inverse(t, z.value)
    jinv = np.linalg.inv(_phi_jacobian(t, z0))
    x = Jet.constant(z.space, z0)
    xb = Jet.constant(z.space, np.conj(z0))
    tb = np.conj(t)
    for _ in range(z.order + 1):
        s = (x * xb).sum(0)
        inv2s = (s * 2.0).reciprocal()
        fz = x + xb * inv2s * t - z
        fzb = xb + x * inv2s * tb - zb
        f = Jet(z.space, np.concatenate([fz.coef, fzb.coef], axis=0))
        step = f.lin(lambda c: -np.einsum("ab,bm->am", jinv, c))
        x = x + step[0:4]
        xb = xb + step[4:8]
    return x, xb


def principal_root(lam: complex, num: int, den: int) -> complex:
    """``lam**(num/den)`` on the principal branch of ``lam**(1/den)``."""
    return complex(np.exp(np.log(complex(lam)) / den)) ** num


def scale_action(lam: complex, p: ModelPoint) -> ModelPoint:
    """The C* action ``S_lambda``.

    ``(z, t) -> (lambda^(3/2) z, lambda^3 t)`` on the smoothing family and
    ``(x, u, v) -> (x, lambda^(3/2) u, lambda^(3/2) v)`` on the resolution,
    with ``lambda^(1/2)`` on the principal branch.
    """
    lam = complex(lam)
    if lam == 0:
        raise InvalidScaleError("scale parameter must be nonzero")
    l32 = principal_root(lam, 3, 2)
    if p.variety == RESOLUTION:
        u, v = p.fiber
        return resolution_point(p.base, l32 * u, l32 * v)
    return ModelPoint(l32 * p.coords, lam**3 * p.t)


# complex structure and (1,1) projection
def complex_structure(n: int = 3) -> np.ndarray:
    """Standard ``J`` on ``R^(2n)`` with coordinates ``(x_1..x_n, y_1..y_n)``."""
    j = np.zeros((2 * n, 2 * n))
    j[n:, :n] = np.eye(n)
    j[:n, n:] = -np.eye(n)
    return j


def project_11(a: np.ndarray, j: Optional[np.ndarray] = None) -> np.ndarray:
    """``J``-invariant part ``(A + J^T A J) / 2`` of a real symmetric 2-tensor."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise ShapeError("expected a square real tensor of even size")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ShapeError("tensor is not symmetric")
    if j is None:
        j = complex_structure(a.shape[0] // 2)
    return 0.5 * (a + j.T @ a @ j)


def real_to_hermitian(a: np.ndarray) -> np.ndarray:
    """Hermitian matrix ``H[k, j] = A(d_j, dbar_k)`` of a real symmetric tensor.

    Only the (1,1) part of ``A`` contributes.
    """
    n = a.shape[0] // 2
    e = np.concatenate([np.eye(n), -1j * np.eye(n)], axis=0) / 2  # d_j in real basis
    return np.conj(e).T @ a @ e


def hermitian_to_real(h: np.ndarray) -> np.ndarray:
    """Real symmetric tensor ``2 Re(H[k, j] X^j conj(Y^k))`` of a Hermitian matrix."""
    n = h.shape[0]
    c = np.concatenate([np.eye(n), 1j * np.eye(n)], axis=1)  # dz as row functional
    m = c.conj().T @ h @ c  # conj(dz^k) H_{kj} dz^j
    return 2 * m.real
