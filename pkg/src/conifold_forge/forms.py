"""Pointwise exterior algebra of (p,q)-forms on a complex threefold.

Conventions
-----------
* Hermitian matrices are stored with the antiholomorphic index first:
  ``G[k, j] = g_{kbar j}`` and the metric form is ``i g_{kbar j} dz^j ^ dzbar^k``.
* A general (p,q)-form is stored as a coefficient array ``C[I, J]`` that is
  antisymmetric in the ``p`` holomorphic and the ``q`` antiholomorphic
  indices and represents ``1/(p! q!) C[I,J] dz^I ^ dzbar^J``.
* A (2,2)-form is canonically a 3x3 matrix ``P`` with
  ``P[l, m] = -1/2 (-1)^(l+m) T[s, r, j, k]`` where ``T`` holds the
  interleaved components ``1/4 T[s,r,j,k] dz^s ^ dzbar^r ^ dz^j ^ dzbar^k``,
  ``{s < j}`` is the complement of ``l`` and ``{r < k}`` the complement of
  ``m``.  With this choice ``omega^2`` has ``P = adj(G) = det(G) G^-1``.

Most helpers accept trailing extra axes so that they act on jet
coefficient arrays as well as on plain values.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import factorial
from typing import Callable, Optional

import numpy as np

from .errors import NotASquareError, OrderError, ShapeError, SingularMetricError
from .jets import Jet, ddbar

N = 3
_PAIRS = {0: (1, 2), 1: (0, 2), 2: (0, 1)}  # complement of each index


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _alt(arr: np.ndarray, axes: tuple) -> np.ndarray:
    """Antisymmetrize over the given axes (average over permutations)."""
    if len(axes) <= 1:
        return arr
    out = np.zeros_like(arr)
    perms = list(permutations(range(len(axes))))
    for p in perms:
        order = list(range(arr.ndim))
        for a, b in zip(axes, p):
            order[a] = axes[b]
        out = out + _perm_sign(p) * np.transpose(arr, order)
    return out / len(perms)


@dataclass(frozen=True)
class PQForm:
    """A pointwise (p,q)-form in a chart frame."""

    p: int
    q: int
    coef: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=complex)
        if c.shape != (N,) * (self.p + self.q):
            raise ShapeError(f"expected shape {(N,) * (self.p + self.q)}, got {c.shape}")
        object.__setattr__(self, "coef", c)

    @property
    def degree(self) -> int:
        return self.p + self.q

    def __add__(self, other: "PQForm") -> "PQForm":
        if (self.p, self.q) != (other.p, other.q):
            raise ShapeError("cannot add forms of different bidegree")
        return PQForm(self.p, self.q, self.coef + other.coef)

    def __sub__(self, other: "PQForm") -> "PQForm":
        return self + other * -1.0

    def __mul__(self, c) -> "PQForm":
        return PQForm(self.p, self.q, self.coef * c)

    __rmul__ = __mul__

    def conj(self) -> "PQForm":
        """Complex conjugate form, of bidegree (q,p)."""
        axes = list(range(self.p, self.p + self.q)) + list(range(self.p))
        sign = (-1) ** (self.p * self.q)
        return PQForm(self.q, self.p, sign * np.conj(np.transpose(self.coef, axes)))

    def is_real(self, tol: float = 1e-12) -> bool:
        if self.p != self.q:
            return False
        c = self.conj()
        return bool(np.max(np.abs(c.coef - self.coef)) <= tol * max(1.0, np.max(np.abs(self.coef))))

    def to_p22(self) -> np.ndarray:
        if (self.p, self.q) != (2, 2):
            raise ShapeError("P-representation needs a (2,2)-form")
        return p_from_t(-np.transpose(self.coef, (0, 2, 1, 3)))


def from_hermitian(g: np.ndarray) -> PQForm:
    """The (1,1)-form ``i g_{kbar j} dz^j ^ dzbar^k``."""
    return PQForm(1, 1, 1j * np.asarray(g).T)


def to_hermitian(form: PQForm) -> np.ndarray:
    if (form.p, form.q) != (1, 1):
        raise ShapeError("expected a (1,1)-form")
    return (-1j * form.coef).T


def from_p22(P: np.ndarray) -> PQForm:
    t = t_from_p(P)
    return PQForm(2, 2, -np.transpose(t, (0, 2, 1, 3)))


def wedge(a: PQForm, b: PQForm) -> PQForm:
    """Exterior product; raises for total degree above 6 or bidegree overflow."""
    p, q = a.p + b.p, a.q + b.q
    if p > N or q > N:
        raise ShapeError("degree overflow in wedge product")
    outer = np.multiply.outer(a.coef, b.coef)
    # reorder axes to (I, K, J, L)
    ia = list(range(a.p))
    ja = list(range(a.p, a.p + a.q))
    ib = list(range(a.degree, a.degree + b.p))
    jb = list(range(a.degree + b.p, a.degree + b.degree))
    arr = np.transpose(outer, ia + ib + ja + jb)
    arr = _alt(arr, tuple(range(p)))
    arr = _alt(arr, tuple(range(p, p + q)))
    sign = (-1) ** (a.q * b.p)
    fac = factorial(p) * factorial(q) / (factorial(a.p) * factorial(b.p) * factorial(a.q) * factorial(b.q))
    return PQForm(p, q, sign * fac * arr)


# (2,2) representation
def t_from_x(x: np.ndarray) -> np.ndarray:
    """Interleaved antisymmetric components of ``sum X[s,r,j,k] dz^s dzbar^r dz^j dzbar^k``."""
    return x - np.swapaxes(x, 0, 2) - np.swapaxes(x, 1, 3) + np.transpose(x, (2, 3, 0, 1) + tuple(range(4, x.ndim)))


def p_from_t(t: np.ndarray) -> np.ndarray:
    """Square-root representation ``P`` of interleaved components ``T`` (trailing axes kept)."""
    out = np.zeros((N, N) + t.shape[4:], dtype=complex)
    for l in range(N):
        s, j = _PAIRS[l]
        for m in range(N):
            r, k = _PAIRS[m]
            out[l, m] = -0.5 * (-1) ** (l + m) * t[s, r, j, k]
    return out


def p_from_x(x: np.ndarray) -> np.ndarray:
    out = np.zeros((N, N) + x.shape[4:], dtype=complex)
    for l in range(N):
        s, j = _PAIRS[l]
        for m in range(N):
            r, k = _PAIRS[m]
            tv = x[s, r, j, k] - x[j, r, s, k] - x[s, k, j, r] + x[j, k, s, r]
            out[l, m] = -0.5 * (-1) ** (l + m) * tv
    return out


def t_from_p(P: np.ndarray) -> np.ndarray:
    t = np.zeros((N, N, N, N) + P.shape[2:], dtype=complex)
    for l in range(N):
        s, j = _PAIRS[l]
        for m in range(N):
            r, k = _PAIRS[m]
            v = -2.0 * (-1) ** (l + m) * P[l, m]
            t[s, r, j, k] = v
            t[j, r, s, k] = -v
            t[s, k, j, r] = -v
            t[j, k, s, r] = v
    return t


def adjugate(g: np.ndarray) -> np.ndarray:
    """Adjugate of a 3x3 matrix (works on trailing batch axes)."""
    a = np.asarray(g)
    out = np.empty_like(a, dtype=complex)
    for i in range(N):
        for j in range(N):
            r = [x for x in range(N) if x != j]
            c = [x for x in range(N) if x != i]
            minor = a[r[0], c[0]] * a[r[1], c[1]] - a[r[0], c[1]] * a[r[1], c[0]]
            out[i, j] = (-1) ** (i + j) * minor
    return out


def square_11(g: np.ndarray) -> np.ndarray:
    """``P`` of ``omega^2`` for the metric ``G``."""
    return adjugate(g)


def wedge_11(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """``P`` of ``omega_1 ^ omega_2`` for two Hermitian matrices."""
    return 0.5 * (adjugate(g1 + g2) - adjugate(g1) - adjugate(g2))


def wedge_11_general(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``P`` of ``alpha ^ beta`` for (1,1) coefficient arrays ``alpha = a[s, r] dz^s dzbar^r``."""
    x = np.einsum("sr...,jk...->srjk...", a, b)
    return p_from_x(x)


def is_positive_22(P: np.ndarray, rel_tol: float = 1e-10) -> bool:
    P = np.asarray(P)
    herm = 0.5 * (P + P.conj().T)
    if np.max(np.abs(P - herm)) > 1e-10 * max(1.0, np.max(np.abs(P))):
        return False
    ev = np.linalg.eigvalsh(herm)
    return bool(ev[0] > rel_tol * abs(np.trace(herm)))


def sqrt_22(P: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """The positive ``G`` with ``omega_G^2 = P``: ``G = det(P)^(1/2) P^-1``.

    Raises
    ------
    NotASquareError
        If ``P`` is not Hermitian positive definite.
    """
    P = np.asarray(P, dtype=complex)
    herm = 0.5 * (P + P.conj().T)
    ev = np.linalg.eigvalsh(herm)
    if np.max(np.abs(P - herm)) > 1e-10 * max(1.0, np.max(np.abs(P))) or ev[0] <= rel_tol * abs(ev.sum()):
        raise NotASquareError(f"(2,2)-form is not positive (min eigenvalue {ev[0]:.3e})", float(ev[0]))
    detp = float(np.prod(ev))
    return np.sqrt(detp) * np.linalg.inv(herm)


def sqrt_22_variation(eta: np.ndarray, dpsi: np.ndarray, dpsi_bar: Optional[np.ndarray] = None) -> np.ndarray:
    """Derivative of the square root along a variation of the (2,2)-form.

    If ``eta^2 = omega^2 + theta + conj(theta)``, then for a derivation
    ``nabla`` that kills ``omega^2``::

        nabla eta_{kbar j} = -1/2 eta^{s rbar} nabla Psi_{s rbar j kbar}
                             + 1/8 (eta^{p qbar} eta^{s rbar} nabla Psi_{s rbar p qbar}) eta_{kbar j}

    with ``Psi = theta + conj(theta)`` in interleaved components ``T``.

    Parameters
    ----------
    eta : ndarray
        Hermitian matrix ``eta[k, j]``.
    dpsi, dpsi_bar : ndarray
        Interleaved components of ``nabla theta`` and ``nabla conj(theta)``,
        shape ``(3, 3, 3, 3)``; when ``dpsi_bar`` is omitted ``dpsi`` is
        taken to be the full variation.
    """
    try:
        einv = np.linalg.inv(eta)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("eta is singular") from exc
    d = dpsi if dpsi_bar is None else dpsi + dpsi_bar
    first = -0.5 * np.einsum("sr,srjk->kj", einv, d)
    trace = np.einsum("pq,sr,srpq->", einv, einv, d)
    return first + 0.125 * trace * eta


def variation_trace(eta: np.ndarray, deta: np.ndarray, dpsi: np.ndarray) -> tuple[complex, complex]:
    """Both sides of ``-4 eta^{s rbar} nabla eta_{rbar s} = 1/2 eta^{j kbar} eta^{s rbar} nabla Psi_{s rbar j kbar}``."""
    einv = np.linalg.inv(eta)
    lhs = -4.0 * np.einsum("sr,rs->", einv, deta)
    rhs = 0.5 * np.einsum("jk,sr,srjk->", einv, einv, dpsi)
    return complex(lhs), complex(rhs)


# contraction and norms
def contract(g: np.ndarray, F: np.ndarray) -> np.ndarray:
    """``g^{j kbar} F_{j kbar}`` for an array ``F[j, k, ...]``.

    Raises
    ------
    SingularMetricError
        If ``g`` is singular or not positive definite.
    """
    g = np.asarray(g)
    ev = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    if ev[0] <= 0:
        raise SingularMetricError("contraction metric is not positive definite")
    ginv = np.linalg.inv(g)  # ginv[j, k] = g^{j kbar}
    return np.einsum("jk,jk...->...", ginv, F)


def norm_11(a: np.ndarray, g: np.ndarray) -> float:
    """``|A|_g`` of a Hermitian (1,1) tensor ``A[k, j]``."""
    e = inv_sqrt_herm(g)
    return float(np.linalg.norm(e @ a @ e))


def norm_22(P: np.ndarray, g: np.ndarray) -> float:
    """Norm of a (2,2)-form in a ``g``-orthonormal frame (``omega^2`` has norm sqrt 3)."""
    s = sqrt_herm(g)
    detg = float(np.linalg.det(g).real)
    return float(np.linalg.norm(s @ P @ s) / detg)


def sqrt_herm(g: np.ndarray) -> np.ndarray:
    ev, v = np.linalg.eigh(0.5 * (g + g.conj().T))
    return (v * np.sqrt(ev)) @ v.conj().T


def inv_sqrt_herm(g: np.ndarray) -> np.ndarray:
    ev, v = np.linalg.eigh(0.5 * (g + g.conj().T))
    return (v / np.sqrt(ev)) @ v.conj().T


# operators on jets
def i_ddbar(jet: Jet) -> PQForm:
    """The real (1,1)-form ``i d dbar f`` at the base point of a scalar jet."""
    if jet.order < 2:
        raise OrderError("i_ddbar needs a jet of order >= 2")
    return from_hermitian(ddbar(jet, N).value)


def ddbar_11(theta: Jet) -> Jet:
    """``P`` jet of ``i d dbar Theta`` for a (1,1)-form ``Theta = i theta[k, j] dz^j dzbar^k``.

    The input is the Hermitian-matrix jet ``theta[k, j]``; the output has two
    fewer orders.
    """
    if theta.order < 2:
        raise OrderError("need a jet of order >= 2")
    h = ddbar(theta, N)  # h[r, s, k, j] = d_s dbar_r theta[k, j]
    # X[s, r, j, k] = (i d_s dbar_r theta[k, j]) * i
    return h.lin(lambda c: p_from_x(-np.transpose(c, (1, 0, 3, 2, 4))))


def wedge_jet(a: Jet, b: Jet) -> Jet:
    """``P`` jet of ``omega_a ^ omega_b`` for Hermitian matrix jets."""
    a, b = a._coerce(b)
    x = _outer4(a, b)  # a[r, s] b[k, j] with (i)(i) = -1
    return x.lin(lambda c: p_from_x(-np.transpose(c, (1, 0, 3, 2, 4))))


def _outer4(a: Jet, b: Jet) -> Jet:
    ii, jj, red = a.space.mult_tables()
    from .jets import _reduce

    prod = np.einsum("rsp,kjp->rskjp", a.coef[..., ii], b.coef[..., jj])
    return Jet(a.space, _reduce(prod, red))


def divergence_22(P: Jet) -> tuple[np.ndarray, np.ndarray]:
    """Components of ``d`` of a (2,2)-form at the base point.

    Returns ``(sum_l d_l P[l, m], sum_m dbar_m P[l, m])``; both vanish
    exactly when the form is closed.
    """
    if P.order < 1:
        raise OrderError("closedness needs a jet of order >= 1")
    dh = sum(P.d(l)[l] for l in range(N))
    dah = sum(P.d(N + m)[:, m] for m in range(N))
    return dh.value, dah.value


def d_residual(
    field: Callable[..., Jet],
    chart,
    w0=None,
    mode: str = "jet",
    step: Optional[float] = None,
) -> float:
    """Size of ``d`` of a real (2,2)-form field at a chart point.

    Parameters
    ----------
    field : callable
        ``field(chart, w0, order)`` returning the ``P`` matrix jet at ``w0``.
    chart : object
        Chart (or any object with a ``scale`` attribute) passed through.
    mode : {"jet", "fd"}
        Automatic jets, or fourth order central differences with one
        Richardson step.
    step : float, optional
        Difference step in chart units (default ``1e-4``; chart coordinates
        are already normalized by the scale).

    Returns
    -------
    float
        Max modulus over the 5-form components.
    """
    w0 = np.zeros(3, dtype=complex) if w0 is None else np.asarray(w0, dtype=complex)
    if mode == "jet":
        dh, dah = divergence_22(field(chart, w0, 1))
        return float(max(np.max(np.abs(dh)), np.max(np.abs(dah))))
    h = 1e-4 if step is None else step

    def value(w):
        return field(chart, w, 0).value

    def fd(var, hh):
        e = np.zeros(3, dtype=complex)
        e[var % N] = 1.0
        # d/dw = (d/dx - i d/dy)/2 and d/dwbar = (d/dx + i d/dy)/2
        sgn = -1j if var < N else 1j

        def cd(vec):
            return (-value(w0 + 2 * hh * vec) + 8 * value(w0 + hh * vec) - 8 * value(w0 - hh * vec) + value(w0 - 2 * hh * vec)) / (12 * hh)

        return 0.5 * (cd(e) + sgn * cd(1j * e))

    def rich(var):
        return (16 * fd(var, h / 2) - fd(var, h)) / 15

    dh = sum(rich(l)[l] for l in range(N))
    dah = sum(rich(N + m)[:, m] for m in range(N))
    return float(max(np.max(np.abs(dh)), np.max(np.abs(dah))))
