"""Cell-centred finite-difference grid on a box with no-flux boundaries.

Fields are flat float64 arrays of length ``grid.ncells`` in row-major cell
order; cell centres sit at (i + 1/2) h per axis.  The Laplacian is the
standard 3/5-point stencil in flux form with mirror ghost cells, so
boundary fluxes vanish identically and ``integrate(laplacian(u)) == 0`` up
to roundoff.  The discrete inner product carries the cell volume, and the
face-based gradient form satisfies the summation-by-parts identity

    inner(-laplacian(u), v) == face_form(u, v)

exactly, which is what the energy bookkeeping in the stepper relies on.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .errors import CgNoConvergence, GridMismatch, InvalidParams


class Grid:
    """Uniform cell-centred grid in one or two space dimensions."""

    def __init__(self, n, length=1.0):
        n = (int(n),) if np.ndim(n) == 0 else tuple(int(k) for k in n)
        if len(n) not in (1, 2):
            raise InvalidParams(f"grid must be 1- or 2-dimensional, got shape {n}")
        if any(k < 2 for k in n):
            raise InvalidParams(f"need at least 2 cells per axis, got {n}")
        length = (
            tuple(float(length) for _ in n)
            if np.ndim(length) == 0
            else tuple(float(L) for L in length)
        )
        if len(length) != len(n):
            raise InvalidParams("length must give one extent per axis")
        if any(not (L > 0.0) for L in length):
            raise InvalidParams(f"box lengths must be positive, got {length}")
        self.n = n
        self.length = length
        self.dim = len(n)
        self.h = tuple(L / k for L, k in zip(length, n))
        self.ncells = int(np.prod(n))
        self.cell_volume = float(np.prod(self.h))

    def __repr__(self):
        return f"Grid(n={self.n}, length={self.length})"

    def __eq__(self, other):
        return (
            isinstance(other, Grid) and self.n == other.n and self.length == other.length
        )

    def __hash__(self):
        return hash((self.n, self.length))

    # -- fields ---------------------------------------------------------

    def field(self, fill=0.0):
        return np.full(self.ncells, float(fill))

    def coordinates(self):
        """Per-axis centre coordinates, each as a flat array over cells."""
        axes = [(np.arange(k) + 0.5) * h for k, h in zip(self.n, self.h)]
        if self.dim == 1:
            return (axes[0],)
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        return (X.reshape(-1), Y.reshape(-1))

    def check(self, *fields):
        for u in fields:
            if not isinstance(u, np.ndarray) or u.shape != (self.ncells,):
                raise GridMismatch(
                    f"expected a flat field with {self.ncells} cells, got shape "
                    f"{getattr(u, 'shape', None)}"
                )

    # -- operators --------------------------------------------------------

    def laplacian(self, u):
        """Mirror-ghost Neumann Laplacian in flux form."""
        self.check(u)
        a = u.reshape(self.n)
        out = np.zeros_like(a)
        for ax, h in enumerate(self.h):
            flux = np.diff(a, axis=ax)
            flux /= h * h
            lo = [slice(None)] * self.dim
            hi = [slice(None)] * self.dim
            lo[ax] = slice(None, -1)
            hi[ax] = slice(1, None)
            # each interior flux enters two cells with opposite sign, so the
            # divergence telescopes and boundary fluxes never appear
            out[tuple(lo)] += flux
            out[tuple(hi)] -= flux
        return out.reshape(-1)

    def inner(self, u, v):
        self.check(u, v)
        return self.cell_volume * float(u @ v)

    def h_norm(self, u):
        self.check(u)
        return float(np.sqrt(self.cell_volume) * np.linalg.norm(u))

    def integrate(self, u):
        self.check(u)
        return self.cell_volume * float(np.sum(u))

    def face_form(self, u, v):
        """Bilinear gradient form over interior faces; equals
        inner(-laplacian(u), v) by summation by parts."""
        self.check(u, v)
        a = u.reshape(self.n)
        b = v.reshape(self.n)
        total = 0.0
        for ax, h in enumerate(self.h):
            du = np.diff(a, axis=ax) / h
            dv = np.diff(b, axis=ax) / h
            total += self.cell_volume * float(np.sum(du * dv))
        return total

    def grad_energy(self, u):
        return self.face_form(u, u)

    def v_norm(self, u):
        """Discrete H1 norm, sqrt(h_norm^2 + grad_energy)."""
        self.check(u)
        return float(np.sqrt(self.h_norm(u) ** 2 + self.grad_energy(u)))

    # -- linear solves ------------------------------------------------------

    def solve_spd(self, apply, rhs, tol=1e-10, max_iter=None, diag=None):
        """Preconditioned conjugate gradients for an SPD operator.

        ``apply`` maps a field to a field and must be symmetric positive
        definite in the discrete inner product.  Stops when the residual
        has dropped below ``tol`` relative to ``rhs``; ``diag`` enables
        Jacobi preconditioning.  Raises CgNoConvergence when the budget
        (default 10 * ncells + 50 iterations) runs out.
        """
        self.check(rhs)
        if max_iter is None:
            max_iter = 10 * self.ncells + 50
        bnorm = math.sqrt(float(rhs @ rhs))
        if bnorm == 0.0:
            return np.zeros_like(rhs)
        target_sq = (tol * bnorm) ** 2
        x = np.zeros_like(rhs)
        r = rhs.copy()
        z = r / diag if diag is not None else r
        p = z.copy()
        rz = float(r @ z)
        rr = float(r @ r)
        for it in range(max_iter):
            Ap = apply(p)
            pAp = float(p @ Ap)
            if not np.isfinite(pAp) or pAp <= 0.0:
                raise CgNoConvergence(
                    f"operator lost positive definiteness (p.Ap = {pAp})",
                    residual=math.sqrt(rr) / bnorm,
                    iterations=it,
                )
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            rr = float(r @ r)
            if rr <= target_sq:
                return x
            z = r / diag if diag is not None else r
            rz_new = rr if diag is None else float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise CgNoConvergence(
            f"conjugate gradients did not reach tol {tol} in {max_iter} iterations",
            residual=math.sqrt(rr) / bnorm,
            iterations=max_iter,
        )

    def laplacian_diag(self):
        """Diagonal of -laplacian, for Jacobi preconditioning."""
        diag = np.zeros(self.n)
        for ax, h in enumerate(self.h):
            d = np.full(self.n[ax], 2.0)
            d[0] = d[-1] = 1.0  # mirror ghosts drop one neighbour
            shape = [1] * self.dim
            shape[ax] = self.n[ax]
            diag += d.reshape(shape) / h**2
        return diag.reshape(-1)

    # -- I/O -----------------------------------------------------------------

    def dump_field(self, u, path):
        """Write one field as CSV with 17 significant digits per value."""
        self.check(u)
        coords = self.coordinates()
        header = ["x", "value"] if self.dim == 1 else ["x", "y", "value"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(self.ncells):
                row = [f"{c[i]:.17g}" for c in coords]
                row.append(f"{u[i]:.17g}")
                w.writerow(row)

    def load_field(self, path):
        """Read a field previously written by dump_field."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        expected = ["x", "value"] if self.dim == 1 else ["x", "y", "value"]
        if rows and rows[0] != expected:
            raise GridMismatch(f"unexpected field header {rows[0]!r}")
        vals = np.array([float(row[-1]) for row in rows[1:]])
        if vals.shape != (self.ncells,):
            raise GridMismatch(
                f"field file holds {vals.size} cells, grid has {self.ncells}"
            )
        return vals
