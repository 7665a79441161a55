"""Damped Newton minimisation for smooth convex objectives."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass
class NewtonInfo:
    converged: bool = False
    iterations: int = 0
    residual: float = np.inf
    energies: list = field(default_factory=list)
    steepest_descent_steps: int = 0


def newton_minimize(energy, gradient, hessian, x0, tol, max_iter, ls_factor=0.5, ls_max_steps=30,
                    c_armijo=1e-4):
    """Minimise ``energy`` from ``x0`` with Armijo-backtracked Newton steps.

    Stops when ``||grad|| <= tol * (1 + |energy|)``. If the Newton direction
    is not a descent direction the step falls back to steepest descent.
    """
    x = np.array(x0, dtype=float)
    info = NewtonInfo()
    F = energy(x)
    info.energies.append(F)
    for it in range(max_iter + 1):
        g = gradient(x)
        gnorm = float(np.linalg.norm(g))
        info.residual = gnorm
        info.iterations = it
        if gnorm <= tol * (1.0 + abs(F)):
            info.converged = True
            break
        if it == max_iter:
            break
        H = hessian(x)
        try:
            d = spla.spsolve(sp.csc_matrix(H), -g) if sp.issparse(H) else np.linalg.solve(H, -g)
        except (RuntimeError, np.linalg.LinAlgError):
            d = np.full_like(g, np.nan)
        slope = float(g @ d)
        if not np.all(np.isfinite(d)) or slope >= 0:
            d = -g
            slope = -gnorm**2
            info.steepest_descent_steps += 1
        # energies near convergence differ by less than their rounding error
        noise = 1e-13 * (1.0 + abs(F))
        alpha = 1.0
        for _ in range(ls_max_steps):
            x_new = x + alpha * d
            F_new = energy(x_new)
            if np.isfinite(F_new) and F_new <= F + c_armijo * alpha * slope + noise:
                break
            alpha *= ls_factor
        else:
            # no acceptable step: we are at the resolution limit of the energy
            break
        x, F = x_new, F_new
        info.energies.append(F)
    return x, info
