"""Independent reference computations used by the tests.

Nothing here calls into the package; values are either computed from
first principles with mpmath or scipy, or frozen from such runs.
"""

from itertools import permutations

import numpy as np
from scipy.linalg import fractional_matrix_power

# mpmath (40 digits): f_t(s), f_t'(s), f_t''(s), f_t'''(s) from the integral
# definition and the differentiated integrand.
SMOOTHING_TABLE = {
    (0.1, 0.3): (0.32448859415894398043, 1.4375821775044203904, -1.3586279824915102091, 4.9364773095149319727),
    (1.0, 2.0): (0.80280372894466035316, 0.74483443086298857217, -0.095995900424139964923, 0.046963865363525970453),
    (0.1, 8.0): (5.632399706137971075, 0.49989382724292519049, -0.020805611518062816703, 0.003461615993386442758),
    (1.0, 1e4): (694.52858677610469167, 0.046415886958583446856, -1.5471959719158646907e-6, 2.0629273867455630319e-10),
    (0.5, 0.6): (0.10796557308006474539, 1.0596353852524490958, -0.38219888187923848249, 0.51484700833236841233),
}

# mpmath quadrature of y(x)/x with y from root finding: f_1(x) and the
# remainder f_1(x) - (3/2) x^(2/3) + 2 log x.
F1_TABLE = {
    1e3: (138.50016777121256917, 2.315678329176843277),
    1e5: (3210.9986784340426282, 2.3724943161575023613),
    1e7: (69593.971462033226145, 2.3751491434593986399),
}
F1_C0_ORACLE = 2.3752784076841650024  # limit of the remainder


def levi_civita_square(g: np.ndarray) -> np.ndarray:
    """Coefficients of the (2,2)-form ``omega^2`` by brute-force permutation sums.

    Returns ``Q[l, m]`` = coefficient in front of the basis element that
    omits ``dz_m`` and ``dzbar_l``, normalized so that ``Q = det(g) g^-1``
    (the cofactor transpose).  Computed from ``2 sum_sigma,tau sgn ...``.
    """
    n = 3
    Q = np.zeros((n, n), dtype=complex)
    for l in range(n):
        for m in range(n):
            rows = [i for i in range(n) if i != l]
            cols = [j for j in range(n) if j != m]
            acc = 0.0
            for p in permutations(range(2)):
                sgn = 1 if p == (0, 1) else -1
                acc += sgn * g[rows[0], cols[p[0]]] * g[rows[1], cols[p[1]]]
            Q[l, m] = (-1) ** (l + m) * acc
    return Q.T  # cofactor transpose = adjugate


def frechet_power(h: np.ndarray, x: np.ndarray, s: float) -> np.ndarray:
    """Directional derivative of ``h -> h^s`` along ``x`` from the block-matrix identity."""
    n = len(h)
    big = np.block([[h, x], [np.zeros((n, n)), h]])
    return fractional_matrix_power(big, s)[:n, n:]


def uy_margin_oracle(hhat, H, g, sigma, dh) -> float:
    """Gradient-inequality margin assembled from scipy fractional powers."""
    h = np.linalg.solve(hhat, H)

    def adj(A):
        return np.linalg.solve(hhat, A.conj().T @ hhat)

    gi = np.linalg.inv(g)
    B = [frechet_power(h, x, sigma) for x in dh]
    A = [np.linalg.solve(h, x) for x in dh]
    hm = fractional_matrix_power(h, -sigma / 2)
    m = len(dh)
    first = sum(gi[j, k] * np.trace(A[j] @ adj(B[k])) for j in range(m) for k in range(m))
    second = sum(gi[j, k] * np.trace(hm @ B[j] @ adj(hm @ B[k])) for j in range(m) for k in range(m))
    return float((first - second).real)


def central_difference(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


def random_hermitian_pd(rng, n, cond=10.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(a)
    ev = np.exp(rng.uniform(0, np.log(cond), n))
    return (q * ev) @ q.conj().T


def random_link_frame(rng):
    a = rng.normal(size=4)
    a /= np.linalg.norm(a)
    b = rng.normal(size=4)
    b -= a * (a @ b)
    b /= np.linalg.norm(b)
    return a, b


# generic exterior algebra on dz_0..dz_2, dzbar_0..dzbar_2 (generators 0..5)
def _sort_sign(idx):
    idx = list(idx)
    if len(set(idx)) < len(idx):
        return 0, None
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


def ext_wedge(a: dict, b: dict) -> dict:
    """Wedge of forms stored as ``{sorted generator tuple: coefficient}``."""
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            sign, key = _sort_sign(ka + kb)
            if sign:
                out[key] = out.get(key, 0) + sign * va * vb
    return out


def pq_to_dict(p: int, q: int, coef: np.ndarray) -> dict:
    """Forms ``1/(p!q!) C[I,J] dz^I ^ dzbar^J`` as generator dictionaries."""
    from itertools import combinations

    out = {}
    for I in combinations(range(3), p):
        for J in combinations(range(3), q):
            v = coef[I + J]
            if v != 0:
                out[I + tuple(3 + j for j in J)] = v
    return out


def metric_form_dict(G: np.ndarray) -> dict:
    """``i G[k, j] dz^j ^ dzbar^k``."""
    return {(j, 3 + k): 1j * G[k, j] for j in range(3) for k in range(3)}


def p_matrix_from_dict(form: dict) -> np.ndarray:
    """Square-root coefficient matrix ``P[l, m]`` of a (2,2)-form dictionary."""
    pairs = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
    P = np.zeros((3, 3), dtype=complex)
    for l in range(3):
        s, j = pairs[l]
        for m in range(3):
            r, k = pairs[m]
            c = form.get((s, j, 3 + r, 3 + k), 0)
            P[l, m] = 0.5 * (-1) ** (l + m) * c
    return P
