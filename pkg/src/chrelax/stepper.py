"""Time integration of the relaxed tumour-growth system.

One step advances (mu, v, phi, sigma) by backward Euler substeps in the
order phi -> mu -> sigma, with sources sampled at the new time level and
the smooth potential part F2' lagged at the old phase:

  phase     tau (phi' - phi)/dt - lap phi' + F1'_eps(phi')
                = mu + chi sigma - F2'(phi)
  potential alpha (v' - v)/dt + (phi' - phi)/dt - lap mu' + P(phi') mu'
                = P(phi')(sigma + chi (1 - phi')) - h(phi') u1,
            with mu' = mu + dt v'  (for alpha = 0 the inertial term is
            dropped and mu' solves the stationary equation directly)
  nutrient  (sigma' - sigma)/dt - lap sigma' + P(phi') sigma'
                = -chi lap phi' - P(phi')(chi (1 - phi') - mu') + u2

Every substep is a symmetric positive definite solve: the phase step by a
damped Newton iteration whose Jacobian tau/dt - lap + diag(F1''_eps) is
SPD, the other two by preconditioned conjugate gradients.  The linear
substeps are solved in increment form (unknown minus its previous value),
which keeps the absolute residual, and with it the drift of the conserved
quantities, far below the relative CG tolerance.

Integrating the potential substep over the box gives the discrete mass
identity

  alpha d/dt integral(v) + d/dt integral(phi)
      = integral(P(phi')(sigma + chi(1 - phi') - mu') - h(phi') u1),

exact up to the CG residual because the Laplacian integrates to zero in
flux form.  With P = 0 and u1 = 0 the quantity alpha*integral(v) +
integral(phi) is conserved, and integral(sigma) likewise; the acceptance
suite checks both to 1e-8 over full runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChRelaxError, InvalidParams, NewtonDivergence
from .model import State, eval_control, initial_state, validate
from .potentials import YosidaParams


@dataclass(frozen=True)
class SchemeConfig:
    """Discretisation controls for one run."""

    dt: float
    eps: float
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    cg_tol: float = 1e-10
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise InvalidParams(f"dt must be positive, got {self.dt}")
        if not self.eps > 0.0:
            raise InvalidParams(f"eps must be positive, got {self.eps}")
        if self.record_every < 1:
            raise InvalidParams("record_every must be at least 1")

    @property
    def yosida(self):
        return YosidaParams(self.eps)


@dataclass
class Trajectory:
    """Recorded output of one run.

    ``snapshots`` holds the state at t = 0, every record_every-th step and
    the final time; the mass diagnostics cover every step.
    """

    grid: object
    dt: float
    record_every: int
    alpha: float
    times: np.ndarray = None
    snapshots: list = field(default_factory=list)
    step_times: np.ndarray = None
    mass_phi: np.ndarray = None
    mass_sigma: np.ndarray = None
    mass_v: np.ndarray = None
    max_newton_iters: int = 0
    accumulators: dict = field(default_factory=dict)

    def series(self, name):
        """List of one field's snapshots through time."""
        return [getattr(s, name) for s in self.snapshots]

    @property
    def final(self):
        return self.snapshots[-1]

    def schedule_key(self):
        return (self.grid.n, self.grid.length, self.dt, self.record_every,
                len(self.snapshots))


def step_phi(state, params, potential, scheme, grid):
    """Implicit phase update; returns (phi_next, xi_next, newton_iters).

    Solves tau (x - phi)/dt - lap x + F1'_eps(x) = g with
    g = mu + chi sigma - F2'(phi) by damped Newton; the residual is
    measured in the discrete L2 norm.
    """
    dt, tau = scheme.dt, params.tau
    yp = scheme.yosida
    g = state.mu + params.chi * state.sigma - potential.f2_prime(state.phi)
    lapdiag = grid.laplacian_diag()

    x = state.phi.copy()

    def residual(z):
        return tau * (z - state.phi) / dt - grid.laplacian(z) + np.asarray(
            potential.yosida_prime(z, yp)
        ) - g

    r = residual(x)
    rnorm = grid.h_norm(r)
    for it in range(scheme.newton_max_iter):
        if rnorm <= scheme.newton_tol:
            return x, np.asarray(potential.yosida_prime(x, yp)), it
        curv = np.asarray(potential.yosida_curvature(x, yp))

        def jac(w, c=curv):
            return tau / dt * w - grid.laplacian(w) + c * w

        delta = grid.solve_spd(
            jac, -r, tol=scheme.cg_tol, diag=tau / dt + lapdiag + curv
        )
        s = 1.0
        while True:
            xn = x + s * delta
            rn = residual(xn)
            rn_norm = grid.h_norm(rn)
            if np.isfinite(rn_norm) and (rn_norm <= rnorm or s < 2.0**-30):
                break
            s *= 0.5
        x, r, rnorm = xn, rn, rn_norm
    if rnorm <= scheme.newton_tol:
        return x, np.asarray(potential.yosida_prime(x, yp)), scheme.newton_max_iter
    raise NewtonDivergence(
        f"phase step stalled at residual {rnorm:.3e}",
        residual=rnorm,
        iterations=scheme.newton_max_iter,
    )


def step_mu(state, phi_next, params, scheme, u1, grid):
    """Implicit potential update with inertia; returns (mu_next, v_next).

    The unknown is the increment of v in the SPD system
    (alpha + dt^2 P) v' - dt^2 lap v' = alpha v - (phi' - phi)
        + dt lap mu + dt [P (sigma + chi(1 - phi') - mu) - h u1].
    """
    if not params.alpha > 0.0:
        raise InvalidParams("step_mu needs alpha > 0; use step_mu_limit instead")
    dt, alpha = scheme.dt, params.alpha
    P = params.proliferation(phi_next)
    H = params.truncation(phi_next)
    mu_pred = state.mu + dt * state.v
    rhs = (
        -(phi_next - state.phi)
        + dt * grid.laplacian(mu_pred)
        + dt * (P * (state.sigma + params.chi * (1.0 - phi_next) - mu_pred) - H * u1)
    )

    def apply(w):
        return (alpha + dt * dt * P) * w - dt * dt * grid.laplacian(w)

    diag = alpha + dt * dt * (P + grid.laplacian_diag())
    dv = grid.solve_spd(apply, rhs, tol=scheme.cg_tol, diag=diag)
    v_next = state.v + dv
    return state.mu + dt * v_next, v_next


def step_mu_limit(state, phi_next, params, scheme, u1, grid):
    """Potential update of the parabolic limit (alpha = 0); returns mu_next.

    Solves (-lap + P) mu' = P (sigma + chi(1 - phi')) - h u1 - (phi' - phi)/dt,
    warm started at the previous mu.  P must be bounded away from zero or
    the operator degenerates on constants.
    """
    dt = scheme.dt
    P = params.proliferation(phi_next)
    pmin = float(np.min(P))
    if not pmin > 0.0:
        raise InvalidParams(
            f"limit potential step needs min P(phi) > 0, got {pmin}"
        )
    H = params.truncation(phi_next)
    b = (
        P * (state.sigma + params.chi * (1.0 - phi_next))
        - H * u1
        - (phi_next - state.phi) / dt
    )

    def apply(w):
        return -grid.laplacian(w) + P * w

    rhs = b - apply(state.mu)
    diag = grid.laplacian_diag() + P
    dmu = grid.solve_spd(apply, rhs, tol=scheme.cg_tol, diag=diag)
    return state.mu + dmu


def step_sigma(state, phi_next, mu_next, params, scheme, u2, grid):
    """Implicit nutrient update; returns sigma_next.

    Increment form of
    (1 + dt P) sigma' - dt lap sigma' = sigma + dt [-chi lap phi'
        - P (chi(1 - phi') - mu') + u2].
    """
    dt = scheme.dt
    P = params.proliferation(phi_next)
    rhs = dt * (
        grid.laplacian(state.sigma - params.chi * phi_next)
        - P * (state.sigma + params.chi * (1.0 - phi_next) - mu_next)
        + u2
    )

    def apply(w):
        return (1.0 + dt * P) * w - dt * grid.laplacian(w)

    diag = 1.0 + dt * (P + grid.laplacian_diag())
    dsig = grid.solve_spd(apply, rhs, tol=scheme.cg_tol, diag=diag)
    return state.sigma + dsig


def run(params, potential, controls, init, grid, T, scheme):
    """Integrate from t = 0 to t = T; returns a Trajectory.

    T must be an integer number of steps.  Substep failures propagate with
    the failing step index attached.  The run is deterministic: identical
    inputs produce bit-identical trajectories.
    """
    problems = validate(params, potential, init, controls, grid)
    if problems:
        raise InvalidParams("; ".join(problems))
    nsteps = int(round(T / scheme.dt))
    if nsteps < 1 or abs(nsteps * scheme.dt - T) > 1e-9 * max(T, scheme.dt):
        raise InvalidParams(
            f"horizon T = {T} is not an integer multiple of dt = {scheme.dt}"
        )

    state = initial_state(init, potential, scheme.yosida, grid)
    traj = Trajectory(grid=grid, dt=scheme.dt, record_every=scheme.record_every,
                      alpha=params.alpha)
    mass_phi = np.empty(nsteps + 1)
    mass_sigma = np.empty(nsteps + 1)
    mass_v = np.empty(nsteps + 1)
    rec_times = [0.0]
    traj.snapshots.append(state.copy())
    mass_phi[0] = grid.integrate(state.phi)
    mass_sigma[0] = grid.integrate(state.sigma)
    mass_v[0] = grid.integrate(state.v)

    acc = {}
    for name in ("mu", "v", "phi", "sigma"):
        u = getattr(state, name)
        acc[f"max_h_{name}"] = grid.h_norm(u)
        acc[f"max_v_{name}"] = grid.v_norm(u)
        acc[f"l2t_v_{name}"] = 0.0

    for n in range(nsteps):
        t_next = (n + 1) * scheme.dt
        try:
            u1 = eval_control(controls.u1, t_next, grid)
            u2 = eval_control(controls.u2, t_next, grid)
            phi_next, xi_next, iters = step_phi(state, params, potential, scheme, grid)
            if params.alpha > 0.0:
                mu_next, v_next = step_mu(state, phi_next, params, scheme, u1, grid)
            else:
                mu_next = step_mu_limit(state, phi_next, params, scheme, u1, grid)
                v_next = np.zeros_like(mu_next)
            sigma_next = step_sigma(state, phi_next, mu_next, params, scheme, u2, grid)
        except ChRelaxError as e:
            head = e.args[0] if e.args else e.__class__.__name__
            e.args = (f"step {n + 1} (t = {t_next:.6g}): {head}",) + e.args[1:]
            raise
        state = State(mu=mu_next, v=v_next, phi=phi_next, sigma=sigma_next,
                      xi=xi_next, t=t_next)
        traj.max_newton_iters = max(traj.max_newton_iters, iters)
        mass_phi[n + 1] = grid.integrate(state.phi)
        mass_sigma[n + 1] = grid.integrate(state.sigma)
        mass_v[n + 1] = grid.integrate(state.v)
        for name in ("mu", "v", "phi", "sigma"):
            u = getattr(state, name)
            hn, vn = grid.h_norm(u), grid.v_norm(u)
            acc[f"max_h_{name}"] = max(acc[f"max_h_{name}"], hn)
            acc[f"max_v_{name}"] = max(acc[f"max_v_{name}"], vn)
            acc[f"l2t_v_{name}"] += scheme.dt * vn * vn
        if (n + 1) % scheme.record_every == 0 or n + 1 == nsteps:
            traj.snapshots.append(state)
            rec_times.append(t_next)

    traj.times = np.array(rec_times)
    traj.step_times = scheme.dt * np.arange(nsteps + 1)
    traj.mass_phi = mass_phi
    traj.mass_sigma = mass_sigma
    traj.mass_v = mass_v
    traj.accumulators = {
        k: (float(np.sqrt(v)) if k.startswith("l2t") else float(v))
        for k, v in acc.items()
    }
    return traj
