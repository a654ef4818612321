"""Double-well potentials split into a convex part plus a smooth perturbation.

Every potential is handled as F = F1 + F2 where F1 is convex, lower
semicontinuous, nonnegative with F1(0) = 0, and F2 has a globally Lipschitz
derivative.  Three kinds are built in:

``regular``
    F(r) = (1 - r^2)^2 / 4 on all of R, split as F1(r) = r^4 / 4 and
    F2(r) = 1/4 - r^2 / 2.

``logarithmic``
    F(r) = (1 + r) ln(1 + r) + (1 - r) ln(1 - r) - k1 r^2 on [-1, 1]
    (with 0 ln 0 := 0, so F1(+-1) = 2 ln 2) and +infinity outside.
    F1 is the entropy term, F2(r) = -k1 r^2, and k1 > 1 so that F is a
    genuine double well.

``obstacle``
    F(r) = k2 (1 - r^2) on [-1, 1], +infinity outside.  F1 is the
    indicator function of [-1, 1], F2(r) = k2 (1 - r^2), k2 > 0.

The implicit phase step never needs F1' itself, only its Yosida
regularisation F1'_eps, which is single valued and globally Lipschitz with
constant 1/eps.  It is evaluated through the resolvent r -> x solving

    x + eps * s(x) = r,      s = the monotone section generating dF1,

which for the regular kind is a scalar cubic, for the logarithmic kind a
scalar transcendental equation solved by safeguarded Newton, and for the
obstacle kind the projection onto [-1, 1].  All operations act pointwise
and accept floats or numpy arrays of any shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, NewtonDivergence, OutsideSubdifferentialDomain

LOG2X2 = 2.0 * np.log(2.0)

KINDS = ("regular", "logarithmic", "obstacle")


@dataclass(frozen=True)
class YosidaParams:
    """Regularisation weight plus the scalar Newton solve controls."""

    epsilon: float
    newton_tol: float = 1e-12
    newton_max_iter: int = 100

    def __post_init__(self):
        if not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
            raise InvalidParams(f"epsilon must be positive and finite, got {self.epsilon}")
        if not (self.newton_tol > 0.0):
            raise InvalidParams("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise InvalidParams("newton_max_iter must be at least 1")


def _as_array(r):
    return np.asarray(r, dtype=float)


def _like(r, out):
    # scalar in, scalar out
    if np.ndim(r) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SplitPotential:
    """One double well F = F1 + F2 with its convex-analysis toolbox.

    Use the ``regular()``, ``logarithmic(k1)`` and ``obstacle(k2)``
    constructors; the well-shape constraints (k1 > 1, k2 > 0) are checked
    there and invalid parameters are rejected immediately.
    """

    kind: str
    k1: float = 2.0
    k2: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown potential kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "logarithmic" and not self.k1 > 1.0:
            raise InvalidParams(f"logarithmic potential needs k1 > 1, got k1 = {self.k1}")
        if self.kind == "obstacle" and not self.k2 > 0.0:
            raise InvalidParams(f"obstacle potential needs k2 > 0, got k2 = {self.k2}")

    # -- constructors -------------------------------------------------

    @staticmethod
    def regular():
        return SplitPotential("regular")

    @staticmethod
    def logarithmic(k1=2.0):
        return SplitPotential("logarithmic", k1=float(k1))

    @staticmethod
    def obstacle(k2=1.0):
        return SplitPotential("obstacle", k2=float(k2))

    # -- domains and constants ----------------------------------------

    @property
    def domain(self):
        """Effective domain of F1 as a (lo, hi) pair."""
        if self.kind == "regular":
            return (-np.inf, np.inf)
        return (-1.0, 1.0)

    @property
    def f2_lipschitz(self):
        """Global Lipschitz constant of F2'."""
        if self.kind == "regular":
            return 1.0
        if self.kind == "logarithmic":
            return 2.0 * self.k1
        return 2.0 * self.k2

    @property
    def growth_coefficients(self):
        """(c1, c2) with |F2(r)| <= c1 + c2 r^2 for all r."""
        if self.kind == "regular":
            return (0.25, 0.5)
        if self.kind == "logarithmic":
            return (0.0, self.k1)
        return (self.k2, self.k2)

    # -- plain values --------------------------------------------------

    def f1(self, r):
        """Convex part.  +infinity outside the effective domain."""
        a = _as_array(r)
        if self.kind == "regular":
            return _like(r, 0.25 * a**4)
        inside = np.abs(a) <= 1.0
        if self.kind == "obstacle":
            out = np.where(inside, 0.0, np.inf)
            return _like(r, out)
        b = np.clip(a, -1.0, 1.0)
        # 0 ln 0 := 0 at the endpoints
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(1.0 + b > 0.0, (1.0 + b) * np.log1p(b), 0.0) + np.where(
                1.0 - b > 0.0, (1.0 - b) * np.log1p(-b), 0.0
            )
        out = np.where(inside, val, np.inf)
        return _like(r, out)

    def f2(self, r):
        a = _as_array(r)
        if self.kind == "regular":
            return _like(r, 0.25 - 0.5 * a * a)
        if self.kind == "logarithmic":
            return _like(r, -self.k1 * a * a)
        return _like(r, self.k2 * (1.0 - a * a))

    def f2_prime(self, r):
        a = _as_array(r)
        if self.kind == "regular":
            return _like(r, -a)
        if self.kind == "logarithmic":
            return _like(r, -2.0 * self.k1 * a)
        return _like(r, -2.0 * self.k2 * a)

    # -- resolvent and Yosida machinery ---------------------------------

    def resolvent(self, r, yp):
        """x solving x + eps * dF1(x) ∋ r, the proximal point of r.

        Nonexpansive in r; the result lies in the closure of the effective
        domain of F1.
        """
        a = _as_array(r)
        eps = yp.epsilon
        if self.kind == "obstacle":
            return _like(r, np.clip(a, -1.0, 1.0))
        if self.kind == "regular":
            return _like(r, _solve_cubic(a, eps, yp.newton_tol, yp.newton_max_iter))
        return _like(r, _solve_entropy(a, eps, yp.newton_tol, yp.newton_max_iter))

    def yosida_prime(self, r, yp):
        """F1'_eps(r) = (r - resolvent(r)) / eps, Lipschitz with constant 1/eps."""
        a = _as_array(r)
        x = _as_array(self.resolvent(a, yp))
        if self.kind == "regular":
            # identical to (r - x)/eps through the defining equation, but
            # evaluating the section at x avoids cancellation for small eps
            return _like(r, x**3)
        if self.kind == "logarithmic":
            interior = np.abs(x) < 1.0
            xs = np.where(interior, x, 0.0)
            val = np.where(interior, np.log1p(xs) - np.log1p(-xs), (a - x) / yp.epsilon)
            return _like(r, val)
        return _like(r, (a - x) / yp.epsilon)

    def yosida_curvature(self, r, yp):
        """Pointwise derivative of F1'_eps, used in the phase-step Jacobian.

        Lies in [0, 1/eps]; for the obstacle kind it is the two-valued
        slope of the piecewise-linear Yosida derivative (0 inside the
        interval, 1/eps outside).
        """
        a = _as_array(r)
        eps = yp.epsilon
        if self.kind == "obstacle":
            return _like(r, np.where(np.abs(a) <= 1.0, 0.0, 1.0 / eps))
        x = _as_array(self.resolvent(a, yp))
        if self.kind == "regular":
            c = 3.0 * x * x
            return _like(r, c / (1.0 + eps * c))
        gap = np.maximum(1.0 - x * x, 0.0)
        return _like(r, 2.0 / (gap + 2.0 * eps))

    def moreau(self, r, yp):
        """Moreau envelope F1_eps(r) = F1(J(r)) + |r - J(r)|^2 / (2 eps).

        Satisfies 0 <= F1_eps <= F1 and converges to F1 monotonically as
        eps decreases.
        """
        a = _as_array(r)
        x = _as_array(self.resolvent(a, yp))
        base = 0.0 if self.kind == "obstacle" else _as_array(self.f1(x))
        return _like(r, base + 0.5 * (a - x) ** 2 / yp.epsilon)

    def minimal_section(self, r):
        """Element of minimal norm of dF1(r).

        Defined only on the domain of the subdifferential: everywhere for
        the regular kind, the open interval (-1, 1) for the logarithmic
        kind, the closed interval [-1, 1] for the obstacle kind (where the
        minimal element is 0).
        """
        a = _as_array(r)
        if self.kind == "regular":
            return _like(r, a**3)
        if self.kind == "obstacle":
            if np.any(np.abs(a) > 1.0):
                raise OutsideSubdifferentialDomain(
                    "obstacle subdifferential is empty outside [-1, 1]"
                )
            return _like(r, np.zeros_like(a))
        if np.any(np.abs(a) >= 1.0):
            raise OutsideSubdifferentialDomain(
                "logarithmic subdifferential is empty outside (-1, 1)"
            )
        return _like(r, np.log1p(a) - np.log1p(-a))


# -- scalar solves, vectorised over flat arrays -------------------------


def _solve_cubic(r, eps, tol, max_iter):
    """Root of x + eps x^3 = r.  Newton from x0 = r is monotone here."""
    x = np.array(r, dtype=float, copy=True)
    f = eps * x**3  # residual at x0 = r
    for _ in range(max_iter):
        if np.all(np.abs(f) <= tol):
            return x
        x = x - f / (1.0 + 3.0 * eps * x * x)
        f = x + eps * x**3 - r
    slack = 8.0 * np.spacing(np.abs(x) + eps * np.abs(x) ** 3 + np.abs(r))
    if np.all(np.abs(f) <= np.maximum(tol, slack)):
        return x
    raise NewtonDivergence(
        "resolvent Newton stalled for the regular kind",
        residual=float(np.max(np.abs(f))),
        iterations=max_iter,
    )


def _entropy_slope(x):
    return np.log1p(x) - np.log1p(-x)


def _solve_entropy(r_in, eps, tol, max_iter):
    """Root of x + eps ln((1+x)/(1-x)) = r on (-1, 1), safeguarded Newton.

    Far outside the well (|r| much larger than 1) the root is within a few
    ulp of +-1 and is taken from the asymptotic form 1 - x = 2 exp(-(r-x)/eps)
    instead of iterating on a collapsed bracket.
    """
    shape = np.shape(r_in)
    r = np.asarray(r_in, dtype=float).reshape(-1)
    edge = 1.0 - 1e-13
    gedge = edge + eps * _entropy_slope(edge)

    x = np.clip(r, -0.9, 0.9)
    lo = np.full_like(r, -edge)
    hi = np.full_like(r, edge)

    tail_hi = r >= gedge
    tail_lo = r <= -gedge
    if np.any(tail_hi):
        x[tail_hi] = 1.0 - 2.0 * np.exp(-(r[tail_hi] - 1.0) / eps)
    if np.any(tail_lo):
        x[tail_lo] = -1.0 + 2.0 * np.exp((r[tail_lo] + 1.0) / eps)
    active = ~(tail_hi | tail_lo)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f = np.where(active, x + eps * _entropy_slope(x) - r, 0.0)
        for _ in range(max_iter):
            conv = (np.abs(f) <= tol) | (hi - lo <= 4.0 * np.spacing(np.abs(x) + 1.0))
            if np.all(conv | ~active):
                break
            work = active & ~conv
            below = work & (f < 0.0)
            above = work & (f > 0.0)
            lo[below] = x[below]
            hi[above] = x[above]
            gp = 1.0 + eps * 2.0 / np.maximum(1.0 - x * x, 1e-300)
            step = np.where(work, f / gp, 0.0)
            xn = x - step
            bad = work & ((xn <= lo) | (xn >= hi) | ~np.isfinite(xn))
            xn[bad] = 0.5 * (lo[bad] + hi[bad])
            x = np.where(work, xn, x)
            f = np.where(active, x + eps * _entropy_slope(x) - r, 0.0)
        else:
            conv = (np.abs(f) <= tol) | (hi - lo <= 4.0 * np.spacing(np.abs(x) + 1.0))
            if not np.all(conv | ~active):
                bad = active & ~conv
                raise NewtonDivergence(
                    "resolvent Newton stalled for the logarithmic kind",
                    residual=float(np.max(np.abs(f[bad]))),
                    iterations=max_iter,
                )
    return x.reshape(shape)
