"""Verification studies over the solver.

Each study takes a parsed Config, runs the solver over a parameter ladder
and returns a StudyReport carrying the measured table, an optional rate
fit and named pass/fail verdicts.  Reports are pure functions of the
config: rows are sorted by the ladder parameter (descending) and runs may
execute concurrently without changing the output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import build_scenario, default_config
from .errors import InvalidParams
from .grid import Grid
from .model import Controls
from .norms import alpha_error, contdep_lhs, contdep_rhs, fit_rate
from .potentials import SplitPotential, YosidaParams
from .stepper import run

MONOTONE_SLACK = 1e-12  # relative slack when checking nonincreasing ladders
MONOTONE_FLOOR = 1e-13  # absolute floor; increases at roundoff level are ties


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    threshold: str
    observed: float


@dataclass
class StudyReport:
    study: str
    digest: str
    columns: list
    rows: list
    fit: object = None
    verdicts: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)

    def summary(self):
        parts = [f"{self.study}: {'pass' if self.passed else 'FAIL'}"]
        if self.fit is not None:
            parts.append(f"slope={self.fit.slope:.3f}")
        for v in self.verdicts:
            mark = "ok" if v.passed else "FAIL"
            parts.append(f"{v.name}={mark}")
        return " ".join(parts)


@dataclass(frozen=True)
class SeparationReport:
    r_min: float
    r_max: float
    xi_sup: float
    margin: float
    epsilon: float


def _run_tasks(tasks, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return [f.result() for f in [ex.submit(t) for t in tasks]]
    return [t() for t in tasks]


def _run_scenario(sc, params=None, scheme=None, controls=None):
    return run(
        params if params is not None else sc.params,
        sc.potential,
        controls if controls is not None else sc.controls,
        sc.init,
        sc.grid,
        sc.T,
        scheme if scheme is not None else sc.scheme,
    )


def _nonincreasing(values):
    worst = 0.0
    for a, b in zip(values, values[1:]):
        if b - a <= MONOTONE_FLOOR:
            continue
        scale = max(abs(a), abs(b), 1e-300)
        worst = max(worst, (b - a) / scale)
    return worst <= MONOTONE_SLACK, worst


def sweep_alpha(cfg, jobs=1):
    """Vanishing-inertia convergence: run an alpha ladder against the
    alpha = 0 limit and fit the decay rate of the error composite.

    The comparison estimate is only available for a proliferation rate that
    is constant in phi (and positive, so the limit operator stays
    invertible); other shapes are refused.
    """
    sc = build_scenario(cfg)
    prolif = sc.params.proliferation
    if prolif.kind != "constant" or not prolif.p0 > 0.0:
        raise InvalidParams(
            "the vanishing-inertia study needs a constant, strictly positive "
            f"proliferation rate; got kind={prolif.kind!r} with p0={prolif.p0}"
        )
    alphas = sorted((float(a) for a in cfg["study.alphas"]), reverse=True)
    if not alphas or any(a <= 0.0 for a in alphas):
        raise InvalidParams("study.alphas must be a nonempty positive ladder")

    t_limit = _run_scenario(sc, params=replace(sc.params, alpha=0.0))
    tasks = [
        (lambda a=a: _run_scenario(sc, params=replace(sc.params, alpha=a)))
        for a in alphas
    ]
    trajs = _run_tasks(tasks, jobs)

    rows = []
    for a, t_a in sorted(zip(alphas, trajs), key=lambda p: -p[0]):
        e = alpha_error(t_a, t_limit)
        rows.append((a, e.mu_weighted, e.conv_mu_linf_v, e.phi_linf_h,
                     e.phi_l2_v, e.sigma_l2_h, e.conv_sigma_linf_v, e.composite))
    composites = [r[-1] for r in rows]
    fit = fit_rate([(r[0], r[-1]) for r in rows])
    mono_ok, mono_worst = _nonincreasing(composites)
    verdicts = [
        Verdict("composite_nonincreasing", mono_ok,
                f"relative increase <= {MONOTONE_SLACK}", mono_worst),
        Verdict("rate_slope", fit.slope >= 0.24, ">= 0.24", fit.slope),
    ]
    return StudyReport(
        study="sweep-alpha",
        digest=cfg.digest(),
        columns=["alpha", "err_mu_weighted", "err_conv_mu_linfV", "err_phi_linfH",
                 "err_phi_l2V", "err_sigma_l2H", "err_conv_sigma_linfV", "composite"],
        rows=rows,
        fit=fit,
        verdicts=verdicts,
    )


def sweep_eps(cfg, jobs=1):
    """Yosida self-consistency: halve the regularisation weight at fixed
    alpha > 0 and track the Cauchy differences d(eps) = |w_eps - w_eps/2|
    in the sup-in-time discrete L2 norm for phi, mu and sigma."""
    sc = build_scenario(cfg)
    if not sc.params.alpha > 0.0:
        raise InvalidParams("the eps sweep compares runs at a fixed alpha > 0")
    ladder = sorted((float(e) for e in cfg["study.epsilons"]), reverse=True)
    if not ladder or any(e <= 0.0 for e in ladder):
        raise InvalidParams("study.epsilons must be a nonempty positive ladder")
    if len(ladder) == 1:
        return StudyReport(
            study="sweep-eps", digest=cfg.digest(),
            columns=["epsilon", "d_phi", "d_mu", "d_sigma", "max_abs_phi"],
            rows=[],
            notes=["single-rung ladder: differences not applicable"],
        )

    eps_all = sorted({e for e in ladder} | {0.5 * e for e in ladder}, reverse=True)
    tasks = [
        (lambda e=e: _run_scenario(sc, scheme=replace(sc.scheme, eps=e)))
        for e in eps_all
    ]
    trajs = dict(zip(eps_all, _run_tasks(tasks, jobs)))

    def sup_diff(ta, tb, name):
        return max(
            sc.grid.h_norm(a - b)
            for a, b in zip(ta.series(name), tb.series(name))
        )

    rows = []
    for e in ladder:
        ta, tb = trajs[e], trajs[0.5 * e]
        max_abs_phi = max(float(np.max(np.abs(u))) for u in ta.series("phi"))
        rows.append((e, sup_diff(ta, tb, "phi"), sup_diff(ta, tb, "mu"),
                     sup_diff(ta, tb, "sigma"), max_abs_phi))

    verdicts = []
    for j, name in ((1, "d_phi"), (2, "d_mu"), (3, "d_sigma")):
        ok, worst = _nonincreasing([r[j] for r in rows])
        verdicts.append(Verdict(f"{name}_nonincreasing", ok,
                                f"relative increase <= {MONOTONE_SLACK}", worst))
    return StudyReport(
        study="sweep-eps", digest=cfg.digest(),
        columns=["epsilon", "d_phi", "d_mu", "d_sigma", "max_abs_phi"],
        rows=rows, verdicts=verdicts,
    )


@dataclass(frozen=True)
class _ScaledBump:
    """Control plus delta times a perturbation, for the dependence study."""

    base: object
    bump: object
    delta: float

    def sample(self, t, grid):
        return self.base.sample(t, grid) + self.delta * self.bump.sample(t, grid)


def contdep(cfg, jobs=1):
    """Continuous dependence on the controls: scale one perturbation pair
    down a delta ladder and compare the trajectory distance against the
    control distance; their ratio should stay within a fixed band."""
    from .config import control_spec

    sc = build_scenario(cfg)
    bump1 = control_spec(cfg, "study.perturb_u1")
    bump2 = control_spec(cfg, "study.perturb_u2")
    if bump1.kind == "zero" and bump2.kind == "zero":
        raise InvalidParams(
            "the dependence study needs a nonzero control perturbation; set "
            "study.perturb_u1.* or study.perturb_u2.*"
        )
    deltas = sorted((float(d) for d in cfg["study.deltas"]), reverse=True)
    if not deltas or any(d <= 0.0 for d in deltas):
        raise InvalidParams("study.deltas must be a nonempty positive ladder")

    base_traj = _run_scenario(sc)
    nsteps = int(round(sc.T / sc.scheme.dt))

    def perturbed(delta):
        return Controls(
            u1=_ScaledBump(sc.controls.u1, bump1, delta),
            u2=_ScaledBump(sc.controls.u2, bump2, delta),
        )

    tasks = [
        (lambda d=d: _run_scenario(sc, controls=perturbed(d))) for d in deltas
    ]
    trajs = _run_tasks(tasks, jobs)

    rows = []
    for d, t_d in zip(deltas, trajs):
        lhs = contdep_lhs(t_d, base_traj)
        rhs = contdep_rhs(sc.grid, sc.scheme.dt, nsteps, perturbed(d), sc.controls)
        if rhs == 0.0:
            raise InvalidParams(
                "control perturbation vanishes on the sampling schedule; the "
                "dependence ratio is undefined"
            )
        rows.append((d, lhs, rhs, lhs / rhs))
    ratios = [r[3] for r in rows]
    spread = max(ratios) / min(ratios)
    lhs_ok, lhs_worst = _nonincreasing([r[1] for r in rows])
    verdicts = [
        Verdict("ratio_spread", spread <= 2.0, "<= 2", spread),
        Verdict("lhs_decreases", lhs_ok,
                f"relative increase <= {MONOTONE_SLACK}", lhs_worst),
    ]
    return StudyReport(
        study="contdep", digest=cfg.digest(),
        columns=["delta", "lhs", "rhs", "ratio"],
        rows=rows, verdicts=verdicts,
    )


def separation(cfg):
    """Strict separation of the logarithmic phase field from +-1.

    Runs the configured scenario, reports the phase range, the sup of the
    selection xi and the distance (margin) to the obstacle values, then
    repeats with eps halved: a genuinely separated solution keeps its
    margin (within 10 percent) and its xi sup (within 5 percent growth)
    under the refinement.
    """
    sc = build_scenario(cfg)
    if sc.potential.kind != "logarithmic":
        raise InvalidParams(
            "the separation study applies to the logarithmic potential only, "
            f"got {sc.potential.kind!r}"
        )

    def measure(eps):
        t = _run_scenario(sc, scheme=replace(sc.scheme, eps=eps))
        r_min = min(float(np.min(u)) for u in t.series("phi"))
        r_max = max(float(np.max(u)) for u in t.series("phi"))
        xi_sup = max(float(np.max(np.abs(u))) for u in t.series("xi"))
        return SeparationReport(
            r_min=r_min, r_max=r_max, xi_sup=xi_sup,
            margin=min(1.0 + r_min, 1.0 - r_max), epsilon=eps,
        )

    eps = sc.scheme.eps
    base = measure(eps)
    halved = measure(0.5 * eps)
    margin_shift = abs(halved.margin - base.margin) / max(base.margin, 1e-300)
    xi_growth = (halved.xi_sup - base.xi_sup) / max(base.xi_sup, 1e-300)
    verdicts = [
        Verdict("margin", base.margin >= 1e-3, ">= 1e-3", base.margin),
        Verdict("margin_stable", margin_shift <= 0.10, "<= 0.10", margin_shift),
        Verdict("xi_sup_stable", xi_growth <= 0.05, "<= 0.05", xi_growth),
    ]
    rows = [
        (r.r_min, r.r_max, r.xi_sup, r.margin, r.epsilon) for r in (base, halved)
    ]
    return StudyReport(
        study="separation", digest=cfg.digest(),
        columns=["r_min", "r_max", "xi_sup", "margin", "epsilon"],
        rows=rows, verdicts=verdicts,
    )


# -- invariant battery -----------------------------------------------------


def _conservation_config(cfg):
    """Conservation scenario (P = 0, no sources, chi = 1) at the solver
    tolerances of the caller's config."""
    return default_config().with_updates({
        "grid.n": [64],
        "time.T": 0.25,
        "time.dt": 1e-3,
        "potential.kind": "regular",
        "model.P.kind": "constant",
        "model.P.p0": 0.0,
        "model.chi": 1.0,
        "init.phi0.kind": "cosine_bump",
        "init.phi0.amplitude": 0.5,
        "init.phi0.mode": 1,
        "init.mu0.kind": "cosine_bump",
        "init.mu0.amplitude": 0.2,
        "init.mu0.mode": 2,
        "init.mu0_prime.kind": "cosine_bump",
        "init.mu0_prime.amplitude": 0.1,
        "init.mu0_prime.mode": 1,
        "init.sigma0.kind": "cosine_bump",
        "init.sigma0.amplitude": 0.3,
        "init.sigma0.mode": 1,
        "solver.cg_tol": cfg["solver.cg_tol"],
        "solver.newton_tol": cfg["solver.newton_tol"],
        "solver.newton_max_iter": cfg["solver.newton_max_iter"],
    })


def conservation_drift(cfg):
    """Largest drift of alpha*integral(v) + integral(phi) and of
    integral(sigma) over the conservation run."""
    sc = build_scenario(_conservation_config(cfg))
    t = _run_scenario(sc)
    combined = sc.params.alpha * t.mass_v + t.mass_phi
    drift_mass = float(np.max(np.abs(combined - combined[0])))
    drift_sigma = float(np.max(np.abs(t.mass_sigma - t.mass_sigma[0])))
    return drift_mass, drift_sigma, t


def dt_order(cfg, dts=(4e-3, 2e-3, 1e-3, 5e-4), dt_ref=1.25e-4, n=32, T=0.2):
    """Observed self-convergence order of phi at the final time."""
    base = default_config().with_updates({
        "grid.n": [n], "time.T": T, "time.dt": dt_ref,
        "potential.kind": "regular",
        "potential.epsilon": 1e-3,  # pinned so the ladder only varies dt
        "init.phi0.kind": "cosine_bump", "init.phi0.amplitude": 0.4,
        "init.mu0.kind": "cosine_bump", "init.mu0.amplitude": 0.2,
        "init.mu0.mode": 2,
        "init.mu0_prime.kind": "cosine_bump", "init.mu0_prime.amplitude": 0.1,
        "init.sigma0.kind": "cosine_bump", "init.sigma0.amplitude": 0.3,
        "controls.u2.kind": "sinusoid", "controls.u2.amplitude": 0.2,
        "controls.u2.omega": 3.0,
        "solver.cg_tol": cfg["solver.cg_tol"],
        "solver.newton_tol": cfg["solver.newton_tol"],
    })
    sc_ref = build_scenario(base)
    phi_ref = _run_scenario(sc_ref).final.phi
    pts = []
    for dt in dts:
        sc = build_scenario(base.with_updates({"time.dt": dt}))
        phi = _run_scenario(sc).final.phi
        pts.append((dt, sc.grid.h_norm(phi - phi_ref)))
    return fit_rate(pts), pts


def yosida_battery(seed=0, npoints=1000, eps_ladder=(1e-1, 1e-2, 1e-3)):
    """Worst violation of the envelope, Lipschitz, domination and
    monotone-convergence properties over a random point battery."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for pot in (SplitPotential.regular(), SplitPotential.logarithmic(2.0),
                SplitPotential.obstacle(1.0)):
        wide = rng.uniform(-3.0, 3.0, npoints)
        inner = rng.uniform(-1.0, 1.0, npoints) * (1.0 - 1e-3)
        pts = wide if pot.kind == "regular" else np.concatenate([
            inner, np.clip(wide, -1.0, 1.0)])
        strict = wide if pot.kind == "regular" else inner
        gaps_prev = None
        for eps in sorted(eps_ladder, reverse=True):
            yp = YosidaParams(eps)
            x = np.asarray(pot.resolvent(pts, yp))
            lo, hi = pot.domain
            worst = max(worst, float(np.max(np.maximum(lo - x, x - hi), initial=0.0)))
            env = np.asarray(pot.moreau(pts, yp))
            f1 = np.asarray(pot.f1(pts))
            worst = max(worst, float(np.max(-env, initial=0.0)))
            worst = max(worst, float(np.max(env - f1, initial=0.0)))
            y = np.asarray(pot.yosida_prime(pts, yp))
            worst = max(worst, abs(float(pot.yosida_prime(0.0, yp))))
            # Lipschitz 1/eps on sorted pairs
            order = np.argsort(pts)
            ps, ys = pts[order], y[order]
            dy = np.abs(np.diff(ys)) - np.abs(np.diff(ps)) / eps
            worst = max(worst, float(np.max(dy, initial=0.0)))
            ms = np.asarray(pot.minimal_section(strict))
            ys2 = np.asarray(pot.yosida_prime(strict, yp))
            worst = max(worst, float(np.max(np.abs(ys2) - np.abs(ms), initial=0.0)))
            gaps = np.abs(ms - ys2)
            if gaps_prev is not None:
                worst = max(worst, float(np.max(gaps - gaps_prev, initial=0.0)))
            gaps_prev = gaps
    return worst


def operator_identities(seed=0):
    """Worst relative defect of summation by parts and Laplacian symmetry
    on the acceptance grids, plus the eigenpair error against a dense
    eigendecomposition on a tiny grid."""
    rng = np.random.default_rng(seed)
    worst_ident = 0.0
    for g in (Grid(64), Grid((16, 16))):
        u = rng.standard_normal(g.ncells)
        v = rng.standard_normal(g.ncells)
        a = g.inner(-g.laplacian(u), v)
        b = g.face_form(u, v)
        c = g.inner(u, -g.laplacian(v))
        scale = max(abs(a), abs(b), abs(c), 1.0)
        worst_ident = max(worst_ident, abs(a - b) / scale, abs(a - c) / scale)

    g = Grid(8)
    dense = np.column_stack([
        g.laplacian(np.eye(g.ncells)[:, j].copy()) for j in range(g.ncells)
    ])
    evals, evecs = np.linalg.eigh(dense)
    h, L = g.h[0], g.length[0]
    x = g.coordinates()[0]
    worst_eig = 0.0
    for k in range(g.ncells):
        lam = -(4.0 / h**2) * np.sin(k * np.pi * h / (2.0 * L)) ** 2
        j = int(np.argmin(np.abs(evals - lam)))
        worst_eig = max(worst_eig, abs(evals[j] - lam))
        mode = np.cos(k * np.pi * x / L)
        worst_eig = max(worst_eig, float(np.max(np.abs(
            g.laplacian(mode) - lam * mode))))
    return worst_ident, worst_eig


def invariant_suite(cfg, seed=0):
    """Aggregate structural checks: operator identities, the Yosida
    battery, conservation over a full run and the dt self-convergence
    order, all at the caller's solver tolerances."""
    worst_ident, worst_eig = operator_identities(seed)
    worst_yosida = yosida_battery(seed)
    drift_mass, drift_sigma, _ = conservation_drift(cfg)
    fit, _ = dt_order(cfg)
    verdicts = [
        Verdict("operator_identities", worst_ident <= 1e-12, "<= 1e-12", worst_ident),
        Verdict("laplacian_eigenpairs", worst_eig <= 1e-10, "<= 1e-10", worst_eig),
        Verdict("yosida_battery", worst_yosida <= 1e-10, "<= 1e-10", worst_yosida),
        Verdict("conservation_mass", drift_mass <= 1e-8, "<= 1e-8", drift_mass),
        Verdict("conservation_sigma", drift_sigma <= 1e-8, "<= 1e-8", drift_sigma),
        Verdict("dt_order", 0.8 <= fit.slope <= 1.2, "in [0.8, 1.2]", fit.slope),
    ]
    rows = [(v.name, v.observed, v.threshold, "pass" if v.passed else "fail")
            for v in verdicts]
    return StudyReport(
        study="check", digest=cfg.digest(),
        columns=["check", "observed", "threshold", "verdict"],
        rows=rows, verdicts=verdicts,
    )
