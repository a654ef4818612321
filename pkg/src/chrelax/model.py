"""Model data for the relaxed tumour-growth system.

The evolving state couples the chemical potential mu (with its time
derivative v while the inertial term is active), the phase field phi, the
nutrient sigma, and the selection xi of the convex part's subdifferential
that the phase step produced.  Proliferation P(phi) and the source
truncation h(phi) are nonnegative, bounded, Lipschitz shape functions;
controls u1 (medication) and u2 (nutrient supply) are bounded space-time
sources given by small closed-form presets so runs stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams
from .grid import Grid
from .potentials import SplitPotential, YosidaParams


@dataclass(frozen=True)
class ProliferationSpec:
    """P(phi): ``constant`` p0 >= 0, or ``ramp`` p0 * clamp((1+phi)/2, 0, 1)."""

    kind: str = "constant"
    p0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "ramp"):
            raise InvalidParams(f"unknown proliferation kind {self.kind!r}")
        if self.kind == "constant" and self.p0 < 0.0:
            raise InvalidParams("constant proliferation rate must be nonnegative")
        if self.kind == "ramp" and not self.p0 > 0.0:
            raise InvalidParams("ramp proliferation scale must be positive")

    def __call__(self, phi):
        if self.kind == "constant":
            return np.full_like(phi, self.p0)
        return self.p0 * np.clip(0.5 * (1.0 + phi), 0.0, 1.0)

    @property
    def lipschitz(self):
        return 0.0 if self.kind == "constant" else 0.5 * self.p0

    @property
    def lower_bound(self):
        """Infimum of P over all phi."""
        return self.p0 if self.kind == "constant" else 0.0


@dataclass(frozen=True)
class TruncationSpec:
    """h(phi) multiplying the medication source; ``ramp``, ``one`` or ``zero``."""

    kind: str = "ramp"

    def __post_init__(self):
        if self.kind not in ("ramp", "one", "zero"):
            raise InvalidParams(f"unknown truncation kind {self.kind!r}")

    def __call__(self, phi):
        if self.kind == "ramp":
            return np.clip(0.5 * (1.0 + phi), 0.0, 1.0)
        if self.kind == "one":
            return np.ones_like(phi)
        return np.zeros_like(phi)


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the evolution system.

    alpha scales the inertial term of the chemical potential (alpha = 0
    selects the parabolic limit stepper), tau the phase relaxation time,
    chi the chemotaxis strength.
    """

    alpha: float = 0.01
    tau: float = 1.0
    chi: float = 1.0
    proliferation: ProliferationSpec = field(default_factory=ProliferationSpec)
    truncation: TruncationSpec = field(default_factory=TruncationSpec)


@dataclass(frozen=True)
class ControlSpec:
    """Closed-form source preset, sampled on the grid at a given time.

    kinds: ``zero``; ``constant`` (value); ``gaussian_pulse`` (amplitude,
    center, width, active on [t_on, t_off]); ``sinusoid`` (amplitude,
    cosine spatial mode, cos(omega t) in time).
    """

    kind: str = "zero"
    value: float = 0.0
    amplitude: float = 1.0
    center: tuple = (0.5, 0.5)
    width: float = 0.1
    t_on: float = 0.0
    t_off: float = np.inf
    mode: int = 1
    omega: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "gaussian_pulse", "sinusoid"):
            raise InvalidParams(f"unknown control kind {self.kind!r}")
        if self.kind == "gaussian_pulse" and not self.width > 0.0:
            raise InvalidParams("gaussian_pulse needs a positive width")

    def sample(self, t, grid):
        if self.kind == "zero":
            return grid.field(0.0)
        if self.kind == "constant":
            return grid.field(self.value)
        coords = grid.coordinates()
        if self.kind == "gaussian_pulse":
            if not (self.t_on <= t <= self.t_off):
                return grid.field(0.0)
            q = np.zeros(grid.ncells)
            for x, c in zip(coords, self.center):
                q += (x - c) ** 2
            return self.amplitude * np.exp(-q / (2.0 * self.width**2))
        out = np.full(grid.ncells, self.amplitude * np.cos(self.omega * t))
        for x, L in zip(coords, grid.length):
            out *= np.cos(self.mode * np.pi * x / L)
        return out


def eval_control(spec, t, grid):
    """Sample a control (anything with a ``sample`` method) at time t."""
    return spec.sample(t, grid)


@dataclass(frozen=True)
class Controls:
    u1: ControlSpec = field(default_factory=ControlSpec)
    u2: ControlSpec = field(default_factory=ControlSpec)


@dataclass(frozen=True)
class FieldSpec:
    """Initial-field preset: ``constant``, ``cosine_bump`` (value plus
    amplitude times a product of per-axis cosines, Neumann compatible) or
    ``tanh_interface`` (profile along the first axis between levels lo
    and hi)."""

    kind: str = "constant"
    value: float = 0.0
    amplitude: float = 1.0
    mode: int = 1
    center: float = 0.5
    width: float = 0.1
    lo: float = -0.9
    hi: float = 0.9

    def __post_init__(self):
        if self.kind not in ("constant", "cosine_bump", "tanh_interface"):
            raise InvalidParams(f"unknown initial-field kind {self.kind!r}")
        if self.kind == "tanh_interface" and not self.width > 0.0:
            raise InvalidParams("tanh_interface needs a positive width")

    def build(self, grid):
        if self.kind == "constant":
            return grid.field(self.value)
        coords = grid.coordinates()
        if self.kind == "cosine_bump":
            out = np.full(grid.ncells, self.amplitude)
            for x, L in zip(coords, grid.length):
                out *= np.cos(self.mode * np.pi * x / L)
            return out + self.value
        x = coords[0]
        return self.lo + (self.hi - self.lo) * 0.5 * (
            1.0 + np.tanh((x - self.center) / self.width)
        )


@dataclass(frozen=True)
class InitialData:
    mu0: FieldSpec = field(default_factory=FieldSpec)
    mu0_prime: FieldSpec = field(default_factory=FieldSpec)
    phi0: FieldSpec = field(default_factory=FieldSpec)
    sigma0: FieldSpec = field(default_factory=FieldSpec)


@dataclass
class State:
    """All evolving fields at one time level."""

    mu: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    sigma: np.ndarray
    xi: np.ndarray
    t: float

    def copy(self):
        return State(
            self.mu.copy(), self.v.copy(), self.phi.copy(), self.sigma.copy(),
            self.xi.copy(), self.t,
        )


def validate(params, potential, init, controls, grid):
    """Cross-check a run setup; returns a list of violation strings.

    An empty list means the setup satisfies every structural hypothesis the
    scheme needs (positivity of tau and chi, admissible initial phase range
    for the constrained potentials, a strictly positive proliferation rate
    whenever the parabolic limit is requested).
    """
    problems = []
    if not params.tau > 0.0:
        problems.append(f"tau must be positive, got {params.tau}")
    if not params.chi > 0.0:
        problems.append(f"chi must be positive, got {params.chi}")
    if params.alpha < 0.0:
        problems.append(f"alpha must be nonnegative, got {params.alpha}")
    if params.alpha == 0.0 and not params.proliferation.lower_bound > 0.0:
        problems.append(
            "the limit stepper (alpha = 0) needs a proliferation rate bounded "
            "away from zero; use a constant P with p0 > 0"
        )
    fields = {
        "mu0": init.mu0.build(grid),
        "mu0_prime": init.mu0_prime.build(grid),
        "phi0": init.phi0.build(grid),
        "sigma0": init.sigma0.build(grid),
    }
    for name, u in fields.items():
        if not np.all(np.isfinite(u)):
            problems.append(f"initial field {name} is not finite everywhere")
    phi0 = fields["phi0"]
    if potential.kind == "logarithmic":
        m = float(np.max(np.abs(phi0)))
        if m >= 1.0:
            problems.append(
                "phi0 reaches the boundary of the admissible phase interval; the "
                "logarithmic potential needs |phi0| strictly below 1 (its convex "
                f"part has empty subdifferential at +-1), got max |phi0| = {m}"
            )
    if potential.kind == "obstacle":
        m = float(np.max(np.abs(phi0)))
        if m > 1.0:
            problems.append(
                f"phi0 must stay inside [-1, 1] for the obstacle potential, "
                f"got max |phi0| = {m}"
            )
    return problems


def initial_state(init, potential, yp, grid):
    """Assemble the t = 0 state; xi starts as the Yosida derivative at phi0."""
    phi0 = init.phi0.build(grid)
    return State(
        mu=init.mu0.build(grid),
        v=init.mu0_prime.build(grid),
        phi=phi0,
        sigma=init.sigma0.build(grid),
        xi=np.asarray(potential.yosida_prime(phi0, yp)),
        t=0.0,
    )
