"""Named numerical checks of the local-model estimates.

Every check takes a :class:`RunConfig` and returns an
:class:`ExperimentReport`.  Reports carry the parameters they used, the
per-sample rows written to CSV, fitted exponents and the tolerances that
decide pass/fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .analysis import fit_decay, link_point, mc_integral, sample_region, WeightedNormSpec, weighted_norm
from .conifold import ModelPoint, _phi_jacobian, make_cyl_chart, phi_apply, principal_root, scale_action
from .curvature import (
    anomaly_residual,
    finite_difference_jet,
    hym_residual,
    ricci_form,
    uy_inequality_margin,
)
from .forms import (
    adjugate,
    from_hermitian,
    norm_11,
    sqrt_22,
    sqrt_22_variation,
    square_11,
    t_from_p,
    wedge,
)
from .gluing import (
    FLY_REGIONS,
    FlyModel,
    GlueConfig,
    ResolutionChart,
    SyntheticTail,
    _scalar_times,
    bump_endomorphism_field,
    co_metric_field,
    fly_glued_form,
    glued_hym_field,
    glued_hym_metric,
    hym_transition_value,
    linearized_operator,
    measure_transition_constant,
    sample_resolution,
    tensor_field,
)
from .forms import d_residual
from .jets import Jet, expm, inv, matmul
from .potentials import F1_C0_EXACT, co_metric, co_smoothing_coeffs, f1_asymptotics, fly_cutoff

SCHEMA = 1


# configuration
@dataclass
class RunConfig:
    """Flat ``key = value`` settings shared by all checks.

    Documented keys: ``t``, ``R``, ``alpha``, ``lambda``, ``c``, ``d``,
    ``amplitude``, ``seed``, ``samples_per_decade``, ``mode`` and
    ``tol.<name>`` overrides.  Missing keys fall back to per-check defaults.
    """

    values: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def parse(cls, text: str, seed: Optional[int] = None) -> "RunConfig":
        vals = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {n}: expected key = value")
            k, v = (p.strip() for p in line.split("=", 1))
            if not k:
                raise ValueError(f"line {n}: empty key")
            vals[k] = v
        s = int(vals.pop("seed", 0)) if seed is None else int(seed)
        vals.pop("seed", None)
        return cls(vals, s)

    def real(self, key: str, default: float) -> float:
        return float(self.values[key]) if key in self.values else float(default)

    def cplx(self, key: str, default: complex) -> complex:
        return complex(self.values[key].replace(" ", "")) if key in self.values else complex(default)

    def integer(self, key: str, default: int) -> int:
        return int(self.values[key]) if key in self.values else int(default)

    def text(self, key: str, default: str) -> str:
        return self.values.get(key, default)

    def tol(self, name: str, default: float) -> float:
        return self.real(f"tol.{name}", default)


# reports
@dataclass
class ExperimentReport:
    """Outcome of one named check."""

    name: str
    anchor: str
    criterion: int
    parameters: dict
    measured: dict
    exponents: dict
    tolerances: dict
    passed: bool
    columns: list
    rows: list
    wall_time: float = 0.0
    plot: Optional[dict] = None
    notes: str = ""

    def summary(self) -> dict:
        """JSON-ready summary without the wall time, so reruns compare byte for byte."""
        return {
            "anchor": self.anchor,
            "criterion": self.criterion,
            "parameters": _plain(self.parameters),
            "measured": _plain(self.measured),
            "exponents": _plain(self.exponents),
            "tolerances": _plain(self.tolerances),
            "passed": bool(self.passed),
            "rows": len(self.rows),
            "plot": _plain(self.plot),
            "notes": self.notes,
        }


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _exp(fit, expected, lo=None, hi=None) -> dict:
    out = {"value": fit.slope, "halfwidth": fit.halfwidth, "r2": fit.r2, "expected": expected}
    if lo is not None:
        out["lo"], out["hi"] = lo, hi
    return out


def _link_dirs(rng: np.random.Generator, n: int):
    out = []
    for _ in range(n):
        a = rng.normal(size=4)
        a /= np.linalg.norm(a)
        b = rng.normal(size=4)
        b -= a * (a @ b)
        b /= np.linalg.norm(b)
        out.append((a, b))
    return out


def _rand_herm(rng, n, cond=10.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(a)
    ev = np.exp(rng.uniform(0, np.log(cond), n))
    return (q * ev) @ q.conj().T


# 1. Ricci-flatness
def check_ricci(cfg: RunConfig) -> ExperimentReport:
    n = cfg.integer("samples", 200)
    t = cfg.cplx("t", 0.1)
    mode = cfg.text("mode", "jet")
    tol = cfg.tol("ricci", 1e-6 if mode == "jet" else 1e-4)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for fam, tt, lo, hi in (("cone", 0j, 0.1, 10.0), ("smoothing", t, abs(t) ** (1 / 3) * (1 + 1e-9), 2.0)):
        for (a, b) in _link_dirs(rng, n):
            R = lo * (hi / lo) ** rng.uniform()
            ch = make_cyl_chart(ModelPoint(link_point(tt, R, a, b), tt))
            if mode == "fd":
                g = finite_difference_jet(lambda w, ch=ch, tt=tt: co_metric(tt, ch, w, 0).value, np.zeros(3))
            else:
                g = co_metric(tt, ch, None, 2)
            ric = ricci_form(g)
            rel = norm_11(ric, g.value) / norm_11(g.value, g.value)
            rows.append([fam, R, rel])
    worst = max(r[2] for r in rows)
    return ExperimentReport(
        "ricci", "Ricci-flat cone and smoothing metrics", 1,
        {"t": t, "samples": n, "mode": mode, "seed": cfg.seed},
        {"max_relative_ricci": worst}, {}, {"max_relative_ricci": tol},
        worst <= tol, ["family", "r", "relative_ricci"], rows,
    )


# 2. scaling identities
def check_scaling(cfg: RunConfig) -> ExperimentReport:
    n = cfg.integer("samples", 100)
    t = cfg.cplx("t", 0.05 + 0.08j)
    tol = cfg.tol("scaling", 1e-10)
    rng = np.random.default_rng(cfg.seed)
    lam = principal_root(t, -1, 3)
    lam_inv = principal_root(t, 1, 3)
    rows = []
    for (a, b) in _link_dirs(rng, n):
        R = abs(t) ** (1 / 3) * (1.01 + 3 * rng.uniform())
        p = ModelPoint(link_point(t, R, a, b), t)
        q = scale_action(lam, p)
        q = ModelPoint(q.coords, 1.0)
        ch, chq = make_cyl_chart(p), make_cyl_chart(q)
        Gt = co_metric(t, ch, None, 0).value
        G1 = co_metric(1.0, chq, None, 0).value * abs(t) ** (2 / 3)
        e_metric = np.linalg.norm(Gt - G1) / np.linalg.norm(Gt)
        z0 = link_point(0j, R, a, b)
        p0 = scale_action(lam, ModelPoint(z0, 0j))
        p1 = ModelPoint(phi_apply(1.0, p0.coords), 1.0)
        lhs = scale_action(lam_inv, p1).coords
        rhs = phi_apply(t, z0)
        e_phi = np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)
        rows.append([R, e_metric, e_phi])
    em = max(r[1] for r in rows)
    ep = max(r[2] for r in rows)
    return ExperimentReport(
        "scaling", "C* scaling of the smoothing family", 2,
        {"t": t, "samples": n, "seed": cfg.seed},
        {"max_metric_error": em, "max_phi_error": ep}, {},
        {"max_metric_error": tol, "max_phi_error": tol},
        em <= tol and ep <= tol, ["r", "metric_error", "phi_error"], rows,
    )


# 3. decay of the diffeomorphism pullback
def _ambient_metric(t: complex, z: np.ndarray) -> np.ndarray:
    s = float(np.vdot(z, z).real)
    if t == 0:
        f1, f2 = s ** (-1 / 3), -(s ** (-4 / 3)) / 3
    else:
        c = co_smoothing_coeffs(t, s, 2)
        f1, f2 = c[1], 2 * c[2]
    return f1 * np.eye(4) + f2 * np.outer(z, np.conj(z))


def pullback_deviation(t: complex, z0: np.ndarray) -> float:
    """``|Phi_t^* g_co,t - g_co,0|`` in ``g_co,0`` at a cone point, as a full real 2-tensor.

    Both metrics are written on the six real chart directions at ``z0``;
    the (2,0) part of the pullback is kept.
    """
    ch = make_cyl_chart(ModelPoint(z0, 0j))
    F = ch.frame()
    V = np.concatenate([F, 1j * F], axis=1)
    J = _phi_jacobian(t, z0)
    X = J[:4, :4] @ V + J[:4, 4:] @ np.conj(V)
    z = phi_apply(t, z0)
    G0 = 2 * np.real(V.conj().T @ _ambient_metric(0j, z0).conj() @ V)
    Gt = 2 * np.real(X.conj().T @ _ambient_metric(t, z).conj() @ X)
    Li = np.linalg.inv(np.linalg.cholesky(G0))
    return float(np.linalg.norm(Li @ (Gt - G0) @ Li.T))


def check_phi_decay(cfg: RunConfig) -> ExperimentReport:
    t = cfg.cplx("t", 1e-3)
    lo, hi = cfg.real("r_min_factor", 10.0) * abs(t) ** (1 / 3), cfg.real("r_max", 10**1.5)
    ndir = cfg.integer("directions", 4)
    rng = np.random.default_rng(cfg.seed)
    dirs = _link_dirs(rng, ndir)
    rows = []
    rs = np.geomspace(lo, hi, 12)
    sup_r = []
    for r in rs:
        vals = [pullback_deviation(t, link_point(0j, r, a, b)) for a, b in dirs]
        sup_r.append(max(vals))
        rows.append(["r", r, t.real if t.imag == 0 else abs(t), max(vals)])
    r_fix = cfg.real("r_fixed", 1.0)
    ts = np.geomspace(1e-4, 1e-2, 9)
    sup_t = []
    for tt in ts:
        vals = [pullback_deviation(tt * t / abs(t), link_point(0j, r_fix, a, b)) for a, b in dirs]
        sup_t.append(max(vals))
        rows.append(["t", r_fix, tt, max(vals)])
    fr = fit_decay(rs, sup_r)
    ft = fit_decay(ts, sup_t)
    ok = -3.3 <= fr.slope <= -2.7 and 0.85 <= ft.slope <= 1.15
    return ExperimentReport(
        "phi-decay", "decay of the pullback metric to the cone", 3,
        {"t": t, "r_min": lo, "r_max": hi, "r_fixed": r_fix, "directions": ndir, "seed": cfg.seed},
        {"constant": float(np.median(np.array(sup_r) * rs**3 / abs(t)))},
        {"r": _exp(fr, -3.0, -3.3, -2.7), "t": _exp(ft, 1.0, 0.85, 1.15)},
        {"r_exponent": [-3.3, -2.7], "t_exponent": [0.85, 1.15]},
        ok, ["sweep", "r", "t", "deviation"], rows,
        plot={"x": "r", "y": "deviation", "filter": ["sweep", "r"], "slopes": [-3.0], "fit": fr.slope,
              "xlabel": "r", "ylabel": "|pullback - cone metric|"},
    )


# 4. cutoff profile
def check_cutoff(cfg: RunConfig) -> ExperimentReport:
    R = cfg.real("R", 100.0)
    prof = fly_cutoff(R)
    rel = cfg.tol("cutoff", 10.0 / R**2)
    targets = {"a": -250.0, "b": 75.0, "c": 75.0 * R**-8, "d": -150.0 * R**-4}
    got = {"a": prof.a, "b": prof.b, "c": prof.c, "d": prof.d}
    errs = {k: abs(got[k] - targets[k]) / abs(targets[k]) for k in targets}
    grid = np.geomspace(4.0, R * R, 400)
    v = prof.v(grid)
    div = prof.divergence(grid)
    rows = [[s, vi, di] for s, vi, di in zip(grid, v, div)]
    div_floor = -350.0 / R**4
    ok = all(e <= rel for e in errs.values()) and prof.min_v >= -1e-12 and prof.min_div >= div_floor
    return ExperimentReport(
        "cutoff", "cutoff profile for the balanced gluing", 4,
        {"R": R, "seed": cfg.seed},
        {**got, **{f"rel_err_{k}": e for k, e in errs.items()}, "min_v": prof.min_v, "min_divergence": prof.min_div},
        {}, {"relative": rel, "min_v": -1e-12, "min_divergence": div_floor},
        ok, ["s", "v", "divergence"], rows,
    )


# 5. balanced gluing on the resolution
def check_glue_balanced(cfg: RunConfig) -> ExperimentReport:
    R = cfg.real("R", 100.0)
    n = cfg.integer("samples", 200)
    nd = cfg.integer("d_samples", 50)
    gc = GlueConfig(R=R, seed=cfg.seed)
    C = measure_transition_constant(gc, n, cfg.seed)
    C0 = 3.0 * C
    model = FlyModel(gc, C0)
    dtol = cfg.tol("d_residual", 1e-6)
    rows = []
    stats = {}
    for k, (reg, span) in enumerate(FLY_REGIONS.items()):
        lo, hi = span(R)
        pts = sample_resolution(lo, hi * (1 - 1e-9), n, cfg.seed + 10 + k)
        evals = [fly_glued_form(model, p) for p in pts]
        dres = [d_residual(model.field(), ResolutionChart(p)) for p in pts[:nd]]
        for i, e in enumerate(evals):
            rows.append([reg, e.r, e.margin, e.rel_margin, dres[i] if i < nd else float("nan")])
        stats[reg] = (min(e.rel_margin for e in evals), max(dres))
    ok = all(m > 0 for m, _ in stats.values()) and all(d <= dtol for _, d in stats.values())
    meas = {"transition_constant": C, "C0": C0}
    for reg, (m, d) in stats.items():
        meas[f"min_rel_margin_{reg}"] = m
        meas[f"max_d_residual_{reg}"] = d
    return ExperimentReport(
        "glue-balanced", "positivity and closedness of the glued balanced form", 5,
        {"R": R, "samples": n, "d_samples": nd, "kappa": gc.kappa, "eps": gc.eps, "seed": cfg.seed},
        meas, {}, {"min_rel_margin": 0.0, "d_residual": dtol},
        ok, ["region", "r", "margin", "rel_margin", "d_residual"], rows,
    )


# 6. glued HYM metric
def _glue_cfg(cfg: RunConfig, lam: float, t: complex) -> GlueConfig:
    kw = {"t": t, "lam": lam, "amplitude": cfg.real("amplitude", 1.0), "c": cfg.real("c", 1.0), "seed": cfg.seed}
    if "alpha" in cfg.values:
        kw["alpha"] = cfg.real("alpha", 0.9)
    return GlueConfig(**kw)


def check_hym_inner(cfg: RunConfig) -> ExperimentReport:
    t = cfg.cplx("t", 1e-2)
    n = cfg.integer("samples", 40)
    tol = cfg.tol("hym_inner", 1e-10)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for lam in (1 / 3, 1 / 2):
        gc = _glue_cfg(cfg, lam, t)
        tail = gc.tail()
        top = abs(t) ** gc.alpha_eff
        for (a, b) in _link_dirs(rng, n):
            s = abs(t) * (1 + 1e-6) + (top - abs(t)) * rng.uniform()
            ch = make_cyl_chart(ModelPoint(link_point(t, s ** (1 / 3), a, b), t))
            g = co_metric(t, ch, None, 2)
            H = glued_hym_metric(gc, tail, ch, None, 2)
            _, res = hym_residual(g, H)
            rows.append([lam, s, res])
    worst = max(r[2] for r in rows)
    return ExperimentReport(
        "hym-inner", "glued bundle metric inside the gluing annulus", 6,
        {"t": t, "samples": n, "amplitude": cfg.real("amplitude", 1.0), "seed": cfg.seed},
        {"max_residual": worst}, {}, {"max_residual": tol},
        worst <= tol, ["lambda", "norm2", "residual"], rows,
    )


def _hym_sweep(cfg: RunConfig, lam: float, ts, ratios, tail_on: bool, dirs):
    sups = []
    rows = []
    for t in ts:
        gc = _glue_cfg(cfg, lam, t)
        tail = gc.tail() if tail_on else None
        best = 0.0
        for (a, b) in dirs:
            for f in ratios:
                R = (f * abs(t) ** gc.alpha_eff) ** (1 / 3)
                ch = make_cyl_chart(ModelPoint(link_point(t, R, a, b), t))
                best = max(best, hym_transition_value(gc, tail, ch))
        sups.append(best)
        rows.append([lam, t, gc.alpha_eff, best])
    return np.array(sups), rows


def check_hym_transition(cfg: RunConfig) -> ExperimentReport:
    ts = np.geomspace(1e-2, 1e-3, 6)
    ratios = np.linspace(1.02, 1.98, cfg.integer("radii", 5))
    dirs = _link_dirs(np.random.default_rng(cfg.seed), cfg.integer("directions", 8))
    rel = cfg.tol("hym_transition", 0.2)
    rows, exps, ok = [], {}, True
    for lam in (1 / 3, 1 / 2):
        sups, r = _hym_sweep(cfg, lam, ts, ratios, True, dirs)
        rows += r
        alpha = _glue_cfg(cfg, lam, ts[0]).alpha_eff
        target = lam * alpha / 3
        fit = fit_decay(ts, sups, min_decades=1.0)
        key = f"lambda={lam:.4f}"
        exps[key] = _exp(fit, target, target * (1 - rel), target * (1 + rel))
        ok &= abs(fit.slope - target) <= rel * target
    return ExperimentReport(
        "hym-transition", "bundle metric residual in the gluing annulus", 6,
        {"t": list(ts), "ratios": list(ratios), "directions": len(dirs),
         "amplitude": cfg.real("amplitude", 1.0), "seed": cfg.seed},
        {}, exps, {"relative_exponent": rel}, ok,
        ["lambda", "t", "alpha", "sup_residual"], rows,
        plot={"x": "t", "y": "sup_residual", "group": "lambda",
              "slopes": [v["expected"] for v in exps.values()], "xlabel": "|t|", "ylabel": "sup r^2 |Lambda F|"},
    )


def check_hym_outer(cfg: RunConfig) -> ExperimentReport:
    ts = np.geomspace(1e-2, 1e-3, 6)
    ratios = np.linspace(2.05, 4.0, cfg.integer("radii", 5))
    dirs = _link_dirs(np.random.default_rng(cfg.seed), cfg.integer("directions", 8))
    rel = cfg.tol("hym_outer", 0.2)
    rows, exps, ok = [], {}, True
    for lam in (1 / 3, 1 / 2):
        sups, r = _hym_sweep(cfg, lam, ts, ratios, False, dirs)
        rows += r
        alpha = _glue_cfg(cfg, lam, ts[0]).alpha_eff
        target = 1 - alpha
        fit = fit_decay(ts, sups, min_decades=1.0)
        key = f"lambda={lam:.4f}"
        exps[key] = _exp(fit, target, target * (1 - rel), target * (1 + rel))
        exps[key]["second_order"] = 2 * (1 - alpha)
        ok &= abs(fit.slope - target) <= rel * target
    return ExperimentReport(
        "hym-outer", "residual of the pulled back cone metric off the annulus", 6,
        {"t": list(ts), "ratios": list(ratios), "directions": len(dirs), "seed": cfg.seed},
        {}, exps, {"relative_exponent": rel}, ok,
        ["lambda", "t", "alpha", "sup_residual"], rows,
        plot={"x": "t", "y": "sup_residual", "group": "lambda",
              "slopes": [v["expected"] for v in exps.values()], "xlabel": "|t|", "ylabel": "sup r^2 |Lambda F|"},
        notes="the (1,1) part of the pullback agrees with g_co,t to first order in t, "
        "so the zero-tail residual decays like |t|^(2(1-alpha))",
    )


# 7. square-root algebra
def check_sqrt_roundtrip(cfg: RunConfig) -> ExperimentReport:
    n = cfg.integer("samples", 1000)
    tol = cfg.tol("sqrt", 1e-10)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(n):
        G = _rand_herm(rng, 3, 100.0)
        W = wedge(from_hermitian(G), from_hermitian(G)).to_p22()
        e1 = np.linalg.norm(sqrt_22(W) - G) / np.linalg.norm(G)
        P = _rand_herm(rng, 3, 100.0)
        e2 = np.linalg.norm(square_11(sqrt_22(P)) - P) / np.linalg.norm(P)
        rows.append([i, e1, e2])
    w1 = max(r[1] for r in rows)
    w2 = max(r[2] for r in rows)
    return ExperimentReport(
        "sqrt-roundtrip", "square roots of positive (2,2)-forms", 7,
        {"samples": n, "seed": cfg.seed},
        {"max_metric_roundtrip": w1, "max_form_roundtrip": w2}, {}, {"roundtrip": tol},
        max(w1, w2) <= tol, ["draw", "metric_roundtrip", "form_roundtrip"], rows,
    )


def check_variation(cfg: RunConfig) -> ExperimentReport:
    n = cfg.integer("samples", 200)
    tol = cfg.tol("variation", 1e-6)
    h = cfg.real("step", 1e-3)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(n):
        G = _rand_herm(rng, 3, 10.0)
        P = adjugate(G)
        D = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        D = 0.5 * (D + D.conj().T)
        dG = sqrt_22_variation(G, t_from_p(D))

        def at(e):
            return sqrt_22(P + e * D)

        fd = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h)
        rows.append([i, np.linalg.norm(dG - fd) / np.linalg.norm(fd)])
    worst = max(r[1] for r in rows)
    return ExperimentReport(
        "variation", "first variation of the (2,2) square root", 7,
        {"samples": n, "step": h, "seed": cfg.seed},
        {"max_relative_error": worst}, {}, {"relative_error": tol},
        worst <= tol, ["draw", "relative_error"], rows,
    )


# 8. fractional-power gradient inequality
def check_uy(cfg: RunConfig) -> ExperimentReport:
    n = cfg.integer("samples", 1000)
    tol = cfg.tol("uy", -1e-8)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(n):
        r = int(rng.integers(2, 5))
        Hh = _rand_herm(rng, r, 50.0)
        H = _rand_herm(rng, r, 50.0)
        g = _rand_herm(rng, 3, 10.0)
        sigma = float(rng.uniform(0.05, 1.0))
        dh = rng.normal(size=(3, r, r)) + 1j * rng.normal(size=(3, r, r))
        m = uy_inequality_margin(Hh, H, g, sigma, dh)
        rows.append([i, r, sigma, m])
    worst = min(r[3] for r in rows)
    return ExperimentReport(
        "uy", "gradient inequality for fractional powers of endomorphisms", 8,
        {"samples": n, "seed": cfg.seed},
        {"min_margin": worst}, {}, {"min_margin": tol},
        worst >= tol, ["draw", "rank", "sigma", "margin"], rows,
    )


# 9. linearized operator
def check_linearized(cfg: RunConfig) -> ExperimentReport:
    t = cfg.cplx("t", 1e-2)
    nfields = cfg.integer("fields", 5)
    n = cfg.integer("samples", 300)
    r_in, r_out = 1.05 * abs(t) ** (1 / 3), 2.5 * abs(t) ** (1 / 3)
    gc = _glue_cfg(cfg, 1 / 3, t)
    Hfield = glued_hym_field(gc, gc.tail())
    gfield = co_metric_field(t)
    rng = np.random.default_rng(cfg.seed)
    smp = sample_region(t, r_in, r_out, n, cfg.seed)
    charts = [make_cyl_chart(p) for p in smp.points]
    id_err, herm_err = 0.0, 0.0
    rows = []
    results = []
    for k in range(nfields):
        S = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        S = 0.5 * (S + S.conj().T)
        hf = bump_endomorphism_field(t, S, r_in, r_out, Hfield)
        vals = []
        for i, ch in enumerate(charts):
            g = gfield(ch, None, 0)
            H = Hfield(ch, None, 2)
            h = hf(ch, None, 2)
            L = linearized_operator(g, H, h)
            if k == 0:
                one = Jet.constant(H.space, np.eye(3, dtype=complex))
                id_err = max(id_err, float(np.max(np.abs(linearized_operator(g, H, one)))))
            HL = H.value @ L
            scale = max(np.linalg.norm(HL), 1e-300)
            herm_err = max(herm_err, float(np.linalg.norm(HL - HL.conj().T) / scale))
            vals.append(np.trace(L).real)
            rows.append([k, smp.radii[i], smp.weights[i], vals[-1]])
        mean, se = mc_integral(np.array(vals), smp.weights)
        absmean, _ = mc_integral(np.abs(vals), smp.weights)
        results.append((mean, se, absmean))
    id_tol = cfg.tol("identity", 1e-10)
    herm_tol = cfg.tol("hermitian", 1e-8)
    ok_int = all(abs(m) <= 3 * s for m, s, _ in results)
    meas = {"identity_error": id_err, "hermitian_error": herm_err}
    for k, (m, s, am) in enumerate(results):
        meas[f"integral_{k}"] = m
        meas[f"stderr_{k}"] = s
        meas[f"abs_integral_{k}"] = am
    return ExperimentReport(
        "linearized", "linearized bundle metric operator", 9,
        {"t": t, "fields": nfields, "samples": n, "r_in": r_in, "r_out": r_out, "seed": cfg.seed},
        meas, {}, {"identity": id_tol, "hermitian": herm_tol, "integral_sigmas": 3.0},
        id_err <= id_tol and herm_err <= herm_tol and ok_int,
        ["field", "r", "weight", "trace_L"], rows,
    )


# 10. anomaly residual
def _anomaly_pair(t: complex, ch, B: np.ndarray, lam: float, amp: float):
    g = co_metric(t, ch, None, 2)
    if amp == 0:
        return g, g
    s = matmul(inv(g), tensor_field(ch, None, 2, B, lam - 1.0)) * (amp * abs(t) ** lam)
    return g, matmul(g, expm(s))


def check_anomaly(cfg: RunConfig) -> ExperimentReport:
    lam = cfg.real("lambda", 1 / 3)
    amp = cfg.real("amplitude", 1.0)
    n = cfg.integer("samples", 50)
    rng = np.random.default_rng(cfg.seed)
    B = SyntheticTail(lam, amp, cfg.seed).B
    rows = []
    t0 = cfg.cplx("t", 0.1)
    pure = 0.0
    for (a, b) in _link_dirs(rng, n):
        R = abs(t0) ** (1 / 3) * (1.01 + 9 * rng.uniform())
        ch = make_cyl_chart(ModelPoint(link_point(t0, R, a, b), t0))
        g = co_metric(t0, ch, None, 2)
        c = float(rng.uniform(0.5, 3.0))
        v = anomaly_residual(g, g * c)
        pure = max(pure, v)
        rows.append(["pure", t0.real, R, v])
    t_fit = 1e-8
    a, b = _link_dirs(rng, 1)[0]
    rs = np.geomspace(5 * t_fit ** (1 / 3), 1.0, 10)
    vals = []
    for R in rs:
        ch = make_cyl_chart(ModelPoint(link_point(t_fit, R, a, b), t_fit))
        v = anomaly_residual(*_anomaly_pair(t_fit, ch, B, lam, amp))
        vals.append(v)
        rows.append(["radial", t_fit, R, v])
    fit = fit_decay(rs, vals)
    r_fix = 0.5
    pair = []
    for tt in (1e-3, 5e-4):
        ch = make_cyl_chart(ModelPoint(link_point(tt, r_fix, a, b), tt))
        pair.append(anomaly_residual(*_anomaly_pair(tt, ch, B, lam, amp)))
        rows.append(["ratio", tt, r_fix, pair[-1]])
    ratio = pair[0] / pair[1]
    expect = 2.0**lam
    pure_tol = cfg.tol("anomaly_pure", 1e-6)
    ok = pure <= pure_tol and fit.slope <= -3.5 and abs(ratio / expect - 1) <= 0.25
    return ExperimentReport(
        "anomaly", "anomaly residual with a decaying bundle perturbation", 10,
        {"lambda": lam, "amplitude": amp, "t_pure": t0, "t_radial": t_fit, "r_fixed": r_fix, "seed": cfg.seed},
        {"pure_residual": pure, "t_ratio": ratio, "expected_ratio": expect},
        {"r": _exp(fit, lam - 4.0, None, None)},
        {"pure_residual": pure_tol, "r_exponent_max": -3.5, "ratio_relative": 0.25},
        ok, ["kind", "t", "r", "residual"], rows,
        plot={"x": "r", "y": "residual", "filter": ["kind", "radial"], "slopes": [lam - 4.0], "fit": fit.slope,
              "xlabel": "r", "ylabel": "anomaly residual"},
    )


# 11. f_1 asymptotics
def check_f1_asym(cfg: RunConfig) -> ExperimentReport:
    spd = cfg.integer("samples_per_decade", 10)
    x = np.geomspace(1e3, 1e7, 4 * spd + 1)
    res = f1_asymptotics(x, F1_C0_EXACT)
    ctol = cfg.tol("f1_cauchy", 1e-4)
    rows = [[xi, ri] for xi, ri in zip(x, res.remainders)]
    ok = res.cauchy < ctol and -0.8 <= res.exponent <= -0.55
    return ExperimentReport(
        "f1-asym", "large-radius expansion of the resolution potential", 11,
        {"x_min": 1e3, "x_max": 1e7, "samples_per_decade": spd, "seed": cfg.seed},
        {"c0": res.c0, "cauchy": res.cauchy, "remainder_at_max": float(res.remainders[-1])},
        {"correction": {"value": res.exponent, "expected": -2.0 / 3.0, "lo": -0.8, "hi": -0.55}},
        {"cauchy": ctol, "exponent": [-0.8, -0.55]},
        ok, ["x", "remainder"], rows,
    )


# weighted norms (supporting the linearized-operator analysis)
def _radial_identity(beta: float):
    def fld(chart, w, order):
        z = chart.embed_jet(w, order)
        s = (z * z.bar()).sum(0)
        return _scalar_times(s ** (beta / 3.0), Jet.constant(z.space, np.eye(3, dtype=complex)))

    return fld


def check_norms(cfg: RunConfig) -> ExperimentReport:
    t = cfg.cplx("t", 1e-3)
    beta = cfg.real("beta", -0.5)
    n = cfg.integer("samples", 60)
    gfield = co_metric_field(t)
    spec0 = WeightedNormSpec(k=0, beta=beta, r1=0.2, r2=1.0, samples=n, pairs=0, seed=cfg.seed)
    v0 = weighted_norm(_radial_identity(beta), spec0, gfield, gfield, t, holder=False)
    S = np.diag([1.0, -1.0, 0.5, -0.5]).astype(complex)
    hf = bump_endomorphism_field(t, S, 0.25, 0.9, gfield)
    spec1 = WeightedNormSpec(k=1, beta=beta, r1=0.2, r2=1.0, samples=n, pairs=n // 2, seed=cfg.seed)
    std = weighted_norm(hf, spec1, gfield, gfield, t)
    resc = weighted_norm(hf, spec1, gfield, gfield, t, rescaled=True)
    ratio = resc / std
    tol = cfg.tol("norm_identity", 1e-10)
    ok = abs(v0 - np.sqrt(3.0)) <= tol and 0.25 <= ratio <= 4.0
    rows = [["identity", v0], ["standard", std], ["rescaled", resc]]
    return ExperimentReport(
        "norms", "weighted Hoelder norms on annuli", 9,
        {"t": t, "beta": beta, "samples": n, "seed": cfg.seed},
        {"identity_norm": v0, "standard": std, "rescaled": resc, "ratio": ratio}, {},
        {"identity_norm": tol, "ratio": [0.25, 4.0]}, ok, ["quantity", "value"], rows,
    )


CHECKS: dict[str, Callable[[RunConfig], ExperimentReport]] = {
    "ricci": check_ricci,
    "scaling": check_scaling,
    "phi-decay": check_phi_decay,
    "cutoff": check_cutoff,
    "glue-balanced": check_glue_balanced,
    "hym-inner": check_hym_inner,
    "hym-transition": check_hym_transition,
    "hym-outer": check_hym_outer,
    "sqrt-roundtrip": check_sqrt_roundtrip,
    "variation": check_variation,
    "uy": check_uy,
    "linearized": check_linearized,
    "anomaly": check_anomaly,
    "f1-asym": check_f1_asym,
    "norms": check_norms,
}


def run_check(name: str, cfg: RunConfig) -> ExperimentReport:
    """Run one registered check and stamp its wall time."""
    if name not in CHECKS:
        raise KeyError(name)
    start = time.perf_counter()
    rep = CHECKS[name](cfg)
    rep.wall_time = time.perf_counter() - start
    return rep


__all__ = ["CHECKS", "ExperimentReport", "RunConfig", "SCHEMA", "pullback_deviation", "run_check"]
