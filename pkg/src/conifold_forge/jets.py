"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores every mixed partial derivative of a (tensor valued)
function up to a fixed total order at one base point.  The variables are
treated as independent complex variables, so a chart on a complex
threefold uses six of them, ``w1, w2, w3, wb1, wb2, wb3``, with the barred
ones standing for the conjugate coordinates.  Propagating jets through
arithmetic is higher order forward mode differentiation: every product
carries all derivative orders at once, which is what nesting first order
dual numbers four deep would produce, without the redundant copies.

Coefficients are normalized Taylor coefficients ``c_a = d^a f / a!``.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from math import factorial
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp


class JetSpace:
    """Monomial bookkeeping for ``nvar`` variables up to total degree ``order``.

    Monomials are listed by increasing degree, so the space of a lower
    order is a prefix of the space of a higher one.  Use :func:`jet_space`
    to obtain cached instances.
    """

    def __init__(self, nvar: int, order: int):
        self.nvar = nvar
        self.order = order
        exps = [np.zeros(nvar, dtype=int)]
        for deg in range(1, order + 1):
            for combo in combinations_with_replacement(range(nvar), deg):
                e = np.zeros(nvar, dtype=int)
                for v in combo:
                    e[v] += 1
                exps.append(e)
        self.exps = np.array(exps, dtype=int).reshape(-1, nvar)
        self.size = len(self.exps)
        self.deg = self.exps.sum(axis=1)
        self.index = {tuple(e): i for i, e in enumerate(self.exps)}
        self._mult = None
        self._deriv = {}
        self._bar = None

    def prefix(self, order: int) -> int:
        """Number of monomials of degree at most ``order``."""
        return int(np.count_nonzero(self.deg <= order))

    def mult_tables(self):
        if self._mult is None:
            ii, jj, kk = [], [], []
            for i, ei in enumerate(self.exps):
                for j, ej in enumerate(self.exps):
                    if self.deg[i] + self.deg[j] <= self.order:
                        ii.append(i)
                        jj.append(j)
                        kk.append(self.index[tuple(ei + ej)])
            ii, jj, kk = (np.array(a, dtype=np.intp) for a in (ii, jj, kk))
            red = sp.csr_matrix(
                (np.ones(len(kk)), (np.arange(len(kk)), kk)),
                shape=(len(kk), self.size),
            )
            self._mult = (ii, jj, red.T.tocsr())
        return self._mult

    def deriv_tables(self, var: int):
        """Source indices and factors for differentiating along ``var``."""
        if var not in self._deriv:
            low = jet_space(self.nvar, self.order - 1)
            src = np.empty(low.size, dtype=np.intp)
            fac = np.empty(low.size)
            for b, e in enumerate(low.exps):
                up = e.copy()
                up[var] += 1
                src[b] = self.index[tuple(up)]
                fac[b] = up[var]
            self._deriv[var] = (src, fac)
        return self._deriv[var]

    def bar_perm(self) -> np.ndarray:
        """Permutation swapping holomorphic and antiholomorphic variables."""
        if self._bar is None:
            if self.nvar % 2:
                raise ValueError("conjugation needs an even number of variables")
            n = self.nvar // 2
            swapped = np.concatenate([self.exps[:, n:], self.exps[:, :n]], axis=1)
            self._bar = np.array([self.index[tuple(e)] for e in swapped], dtype=np.intp)
        return self._bar


@lru_cache(maxsize=None)
def jet_space(nvar: int, order: int) -> JetSpace:
    if order < 0:
        raise ValueError("jet order must be nonnegative")
    return JetSpace(nvar, order)


class Jet:
    """Tensor valued truncated Taylor expansion.

    Parameters
    ----------
    space : JetSpace
        Monomial space (number of variables and order).
    coef : ndarray
        Complex array of shape ``shape + (space.size,)``; the trailing axis
        indexes monomials.
    """

    __slots__ = ("space", "coef")
    __array_priority__ = 1000

    def __init__(self, space: JetSpace, coef):
        self.space = space
        self.coef = np.asarray(coef, dtype=complex)

    # construction
    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        value = np.asarray(value, dtype=complex)
        coef = np.zeros(value.shape + (space.size,), dtype=complex)
        coef[..., 0] = value
        return cls(space, coef)

    @classmethod
    def variables(cls, space: JetSpace, base) -> list["Jet"]:
        """One jet per variable, each with value ``base[i]`` and unit slope."""
        out = []
        for i in range(space.nvar):
            coef = np.zeros(space.size, dtype=complex)
            coef[0] = base[i]
            if space.order >= 1:
                coef[1 + i] = 1.0
            out.append(cls(space, coef))
        return out

    # basic properties
    @property
    def shape(self) -> tuple:
        return self.coef.shape[:-1]

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def value(self) -> np.ndarray:
        return self.coef[..., 0]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, nvar={self.space.nvar})"

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.space, self.coef[key + (slice(None),)])

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        low = jet_space(self.space.nvar, order)
        return Jet(low, self.coef[..., : low.size])

    def partial(self, multi_index: Sequence[int]) -> np.ndarray:
        """Actual partial derivative ``d^a f`` (not the Taylor coefficient)."""
        a = tuple(int(x) for x in multi_index)
        scale = np.prod([factorial(x) for x in a])
        return self.coef[..., self.space.index[a]] * scale

    def lin(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Jet":
        """Apply a linear map acting on the leading (tensor) axes.

        ``fn`` receives the coefficient array with the monomial axis last and
        must leave that axis in place.
        """
        return Jet(self.space, fn(self.coef))

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space.nvar != self.space.nvar:
                raise ValueError("jets over different variable sets")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(self.space, other)

    def __add__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            coef = self.coef.copy() if np.ndim(other) == 0 else np.broadcast_to(
                self.coef, np.broadcast_shapes(self.shape, np.shape(other)) + (self.space.size,)
            ).copy()
            coef[..., 0] += other
            return Jet(self.space, coef)
        a, b = self._coerce(other)
        return Jet(a.space, a.coef + b.coef)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.space, -self.coef)

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.space, self.coef * np.asarray(other)[..., None])
        a, b = self._coerce(other)
        ii, jj, red = a.space.mult_tables()
        prod = a.coef[..., ii] * b.coef[..., jj]
        return Jet(a.space, _reduce(prod, red))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.space, self.coef / np.asarray(other)[..., None])
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, p) -> "Jet":
        if isinstance(p, (int, np.integer)) and 0 <= p <= 8:
            out = Jet.constant(self.space, np.ones(self.shape))
            for _ in range(int(p)):
                out = out * self
            return out
        return self.compose(power_coeffs(self.value, p, self.order))

    def reciprocal(self) -> "Jet":
        return self.compose(power_coeffs(self.value, -1, self.order))

    def compose(self, c: np.ndarray) -> "Jet":
        """Evaluate ``sum_k c_k (self - self.value)^k`` (univariate composition).

        ``c`` has shape ``self.shape + (order + 1,)`` or ``(order + 1,)`` and
        holds the normalized Taylor coefficients of the outer function at
        the base value.
        """
        c = np.asarray(c, dtype=complex)
        n = self - self.value
        out = Jet.constant(self.space, c[..., self.order] * np.ones(self.shape))
        for k in range(self.order - 1, -1, -1):
            out = out * n + c[..., k]
        return out

    # calculus
    def d(self, var: int) -> "Jet":
        """Derivative along variable ``var``; the order drops by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.space.deriv_tables(var)
        low = jet_space(self.space.nvar, self.order - 1)
        return Jet(low, self.coef[..., src] * fac)

    def bar(self) -> "Jet":
        """Jet of the conjugate function ``conj(f)`` (swaps w and wbar)."""
        perm = self.space.bar_perm()
        return Jet(self.space, np.conj(self.coef[..., perm]))

    # tensor helpers
    @property
    def T(self) -> "Jet":
        return Jet(self.space, np.swapaxes(self.coef, -2, -3))

    @property
    def H(self) -> "Jet":
        """Conjugate transpose of a matrix valued jet (as a function)."""
        return self.bar().T

    def trace(self) -> "Jet":
        return Jet(self.space, np.trace(self.coef, axis1=-3, axis2=-2))

    def sum(self, axis) -> "Jet":
        axis = _lead_axis(axis, len(self.shape))
        return Jet(self.space, self.coef.sum(axis=axis))

    def real_part(self) -> "Jet":
        """Jet of ``Re f`` (requires even ``nvar``)."""
        return (self + self.bar()) * 0.5


def _lead_axis(axis, ndim):
    if isinstance(axis, tuple):
        return tuple(a if a >= 0 else a - 1 for a in axis)
    return axis if axis >= 0 else axis - 1


def _reduce(prod: np.ndarray, red: sp.csr_matrix) -> np.ndarray:
    flat = prod.reshape(-1, prod.shape[-1])
    out = (red @ flat.T).T
    return np.asarray(out).reshape(prod.shape[:-1] + (red.shape[0],))


# univariate coefficient generators
def power_coeffs(a0, p, order: int) -> np.ndarray:
    """Taylor coefficients of ``x**p`` at ``a0`` (principal branch)."""
    a0 = np.asarray(a0, dtype=complex)
    out = np.empty(a0.shape + (order + 1,), dtype=complex)
    binom = 1.0 + 0j
    for k in range(order + 1):
        out[..., k] = binom * a0 ** (p - k)
        binom = binom * (p - k) / (k + 1)
    return out


def exp_coeffs(a0, order: int) -> np.ndarray:
    a0 = np.asarray(a0, dtype=complex)
    e = np.exp(a0)
    return np.stack([e / factorial(k) for k in range(order + 1)], axis=-1)


def log_coeffs(a0, order: int) -> np.ndarray:
    a0 = np.asarray(a0, dtype=complex)
    terms = [np.log(a0)]
    for k in range(1, order + 1):
        terms.append((-1) ** (k + 1) / (k * a0**k))
    return np.stack(terms, axis=-1)


def jexp(x: Jet) -> Jet:
    return x.compose(exp_coeffs(x.value, x.order))


def jlog(x: Jet) -> Jet:
    return x.compose(log_coeffs(x.value, x.order))


def jsqrt(x: Jet) -> Jet:
    return x ** 0.5


# matrix valued jets
def matmul(a: Jet, b: Jet) -> Jet:
    """Matrix product over the last two tensor axes."""
    if not isinstance(a, Jet):
        return Jet(b.space, np.einsum("...ij,...jkm->...ikm", np.asarray(a, dtype=complex), b.coef))
    if not isinstance(b, Jet):
        return Jet(a.space, np.einsum("...ijm,...jk->...ikm", a.coef, np.asarray(b, dtype=complex)))
    a, b = a._coerce(b)
    ii, jj, red = a.space.mult_tables()
    prod = np.einsum("...ijp,...jkp->...ikp", a.coef[..., ii], b.coef[..., jj])
    return Jet(a.space, _reduce(prod, red))


def inv(a: Jet) -> Jet:
    """Inverse of a square matrix valued jet by a terminating Neumann series."""
    a0inv = np.linalg.inv(a.value)
    nil = a - a.value
    step = matmul(-a0inv, nil)
    out = Jet.constant(a.space, a0inv)
    term = out
    for _ in range(a.order):
        term = matmul(step, term)
        out = out + term
    return out


def det3(a: Jet) -> Jet:
    """Determinant of a 3x3 matrix valued jet."""
    return (
        a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
        - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
        + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0])
    )


def expm(a: Jet, terms: int = 18) -> Jet:
    """Matrix exponential of a jet by scaling and squaring of the Taylor series."""
    norm = float(np.max(np.abs(a.value))) if a.value.size else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm + 1e-300))) + 1) if norm > 0.5 else 0
    x = a * (0.5**squarings)
    n = a.shape[-1]
    ident = np.broadcast_to(np.eye(n), a.shape).astype(complex)
    out = Jet.constant(a.space, ident)
    term = out
    for k in range(1, terms + 1):
        term = matmul(term, x) * (1.0 / k)
        out = out + term
    for _ in range(squarings):
        out = matmul(out, out)
    return out


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    order = min(j.order for j in jets)
    js = [j.truncate(order) for j in jets]
    ax = axis if axis >= 0 else axis - 1
    return Jet(js[0].space, np.stack([j.coef for j in js], axis=ax))


def d_matrix(x: Jet, nhol: int) -> tuple[Jet, Jet]:
    """Stack holomorphic and antiholomorphic first derivatives.

    Returns ``(D, Db)`` with a new leading axis of length ``nhol`` holding
    the derivatives along ``w_j`` and ``wb_j`` respectively.
    """
    d = stack([x.d(j) for j in range(nhol)], axis=0)
    db = stack([x.d(nhol + j) for j in range(nhol)], axis=0)
    return d, db


def ddbar(x: Jet, nhol: int) -> Jet:
    """Mixed second derivatives ``M[k, j] = d_j dbar_k x`` (antiholomorphic index first)."""
    rows = []
    for k in range(nhol):
        xk = x.d(nhol + k)
        rows.append(stack([xk.d(j) for j in range(nhol)], axis=0))
    return stack(rows, axis=0)
