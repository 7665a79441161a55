"""Exact distribution functions of P1 fields and the quantities built on them.

For a piecewise-linear field the super-level area of one triangle is a
quadratic in ``t`` between consecutive vertex values, so the global
distribution function ``mu(t) = |{u > t}|`` is piecewise quadratic with
breakpoints at the distinct nodal values. It is stored per interval in
local form::

    mu(t) = c_j + b_j (t - t_j) + a_j (t - t_j)**2,   t_j <= t < t_{j+1}

which avoids the cancellation a global ``a t^2 + b t + c`` form suffers
when two vertex values nearly coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .errors import ContractError, ParameterError

__all__ = [
    "DistributionFunction",
    "LorentzParams",
    "distribution_function_nodal",
    "distribution_function_p1",
    "exterior_boundary_integral",
    "hardy_littlewood_rhs",
    "lorentz_norm",
    "product_integral",
    "quantile",
]

_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)
_GL16_X = 0.5 * (_GL16_X + 1.0)
_GL16_W = 0.5 * _GL16_W


@dataclass(frozen=True, eq=False)
class DistributionFunction:
    """Right-continuous, non-increasing, piecewise-quadratic ``mu``.

    ``breakpoints`` has length M+1 with ``breakpoints[0] == 0`` and
    ``breakpoints[-1] == max_value``; ``coeffs`` has shape (M, 3) holding
    ``(c, b, a)`` per interval. ``mu(t) = 0`` for ``t >= max_value``.
    """

    breakpoints: np.ndarray
    coeffs: np.ndarray
    total_mass: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        co = np.asarray(self.coeffs, dtype=float).reshape(-1, 3)
        if bp.ndim != 1 or len(bp) != len(co) + 1:
            raise ContractError("need one more breakpoint than pieces")
        if bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
            raise ContractError("breakpoints must start at 0 and increase strictly")
        for arr in (bp, co):
            arr.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", co)

    @property
    def max_value(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def left_limits(self) -> np.ndarray:
        """mu(t_{j+1}^-) for every piece."""
        c, b, a = self.coeffs.T
        h = self.widths
        return c + h * (b + h * a)

    @property
    def values_at_breakpoints(self) -> np.ndarray:
        """mu(t_j) for j = 0..M (the last one is 0)."""
        return np.append(self.coeffs[:, 0], 0.0)

    def jumps(self) -> np.ndarray:
        """Downward jump mu(t_j^-) - mu(t_j) at breakpoints t_1..t_M."""
        return self.left_limits - self.values_at_breakpoints[1:]

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        j = np.searchsorted(self.breakpoints, t, side="right") - 1
        return t, j

    def __call__(self, t):
        t, j = self._locate(t)
        out = np.zeros_like(t)
        inside = (j >= 0) & (j < self.n_pieces)
        jj = j[inside]
        x = t[inside] - self.breakpoints[jj]
        c, b, a = self.coeffs[jj].T
        out[inside] = c + x * (b + x * a)
        out[t < 0] = self.total_mass
        return out if out.ndim else float(out)

    def derivative(self, t):
        t, j = self._locate(t)
        out = np.zeros_like(t)
        inside = (j >= 0) & (j < self.n_pieces)
        jj = j[inside]
        x = t[inside] - self.breakpoints[jj]
        out[inside] = self.coeffs[jj, 1] + 2.0 * self.coeffs[jj, 2] * x
        return out if out.ndim else float(out)

    def integral(self) -> float:
        """int_0^inf mu(t) dt (exact)."""
        c, b, a = self.coeffs.T
        h = self.widths
        return float(np.sum(h * (c + h * (b / 2.0 + h * a / 3.0))))

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[:-1] + self.breakpoints[1:])

    def global_coefficients(self) -> np.ndarray:
        """(a, b, c) per piece with mu(t) = a t^2 + b t + c."""
        c, b, a = self.coeffs.T
        t0 = self.breakpoints[:-1]
        return np.stack([a, b - 2 * a * t0, c - b * t0 + a * t0 * t0], axis=1)

    def table(self) -> np.ndarray:
        """(t_j, mu(t_j)) rows, one per breakpoint."""
        return np.stack([self.breakpoints, self.values_at_breakpoints], axis=1)

    def power_integral_of_quantile(self, p: float) -> float:
        """int_0^{|Omega_0|} u*(s)^p ds, computed as the Stieltjes integral of t^p against -d mu."""
        t0 = self.breakpoints[:-1]
        h = self.widths
        x = h[:, None] * _GL16_X[None]
        dmu = -(self.coeffs[:, 1:2] + 2.0 * self.coeffs[:, 2:3] * x)
        cont = np.sum(h[:, None] * _GL16_W * (t0[:, None] + x) ** p * dmu)
        jump = np.sum(self.breakpoints[1:] ** p * self.jumps())
        return float(cont + jump)


@dataclass(frozen=True)
class LorentzParams:
    P: float
    q: float

    def __post_init__(self):
        if not self.P > 0 or not 0 < self.q < np.inf:
            raise ParameterError(f"Lorentz exponents need P > 0 and 0 < q < inf, got ({self.P}, {self.q})")


def _expand(starts, stops):
    """Pairs (row, j) with starts[row] <= j < stops[row]."""
    counts = np.maximum(stops - starts, 0)
    rows = np.repeat(np.arange(len(starts)), counts)
    offsets = np.cumsum(counts) - counts
    j = starts[rows] + np.arange(counts.sum()) - offsets[rows]
    return rows, j


def distribution_function_nodal(mesh, nodal) -> DistributionFunction:
    """Exact mu for the P1 interpolant of vertex values ``nodal`` over all triangles of ``mesh``."""
    nodal = np.asarray(nodal, dtype=float)
    scale = max(1.0, float(np.abs(nodal).max(initial=0.0)))
    if nodal.size and nodal.min() < -1e-12 * scale:
        raise ContractError(f"field takes negative value {nodal.min():.3e}")
    nodal = np.maximum(nodal, 0.0)
    bp = np.unique(np.concatenate([[0.0], nodal]))
    M = len(bp) - 1
    v = np.sort(nodal[mesh.triangles], axis=1)
    A = mesh.areas
    i1, i2, i3 = (np.searchsorted(bp, v[:, k]) for k in range(3))
    v1, v2, v3 = v.T

    c = np.zeros(M + 1)
    np.add.at(c, 0, A.sum())
    np.add.at(c, i1, -A)
    c = np.cumsum(c)[:M]
    b = np.zeros(M)
    a = np.zeros(M)

    rows, j = _expand(i1, i2)
    if rows.size:
        Ar, D = A[rows], (v2[rows] - v1[rows]) * (v3[rows] - v1[rows])
        s0 = bp[j] - v1[rows]
        np.add.at(c, j, Ar - Ar * s0 * s0 / D)
        np.add.at(b, j, -2.0 * Ar * s0 / D)
        np.add.at(a, j, -Ar / D)
    rows, j = _expand(i2, i3)
    if rows.size:
        Ar, D = A[rows], (v3[rows] - v1[rows]) * (v3[rows] - v2[rows])
        r0 = v3[rows] - bp[j]
        np.add.at(c, j, Ar * r0 * r0 / D)
        np.add.at(b, j, -2.0 * Ar * r0 / D)
        np.add.at(a, j, Ar / D)
    return DistributionFunction(bp, np.stack([c, b, a], axis=1), float(A.sum()))


def distribution_function_p1(field) -> DistributionFunction:
    return distribution_function_nodal(field.mesh, field.nodal)


def _solve_piece(c, b, a, s, h):
    """Smallest x in [0, h] with c + b x + a x^2 = s on pieces where the crossing exists."""
    q0 = c - s
    disc = np.maximum(b * b - 4.0 * a * q0, 0.0)
    sq = np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        qq = -0.5 * (b + np.where(b >= 0, sq, -sq))
        r1 = np.where(a != 0, qq / a, np.inf)
        r2 = np.where(qq != 0, q0 / qq, np.inf)
        lin = np.where(b != 0, -q0 / b, np.inf)
    r1 = np.where(a == 0, lin, r1)
    r2 = np.where(a == 0, lin, r2)
    tol = 1e-12 * np.maximum(h, 1e-300)
    ok1 = (r1 >= -tol) & (r1 <= h + tol)
    ok2 = (r2 >= -tol) & (r2 <= h + tol)
    x = np.where(ok1 & ok2, np.minimum(r1, r2), np.where(ok1, r1, np.where(ok2, r2, np.nan)))
    bad = ~np.isfinite(x)
    if np.any(bad):
        # rounding left no admissible root: bisect on the monotone piece
        lo, hi = np.zeros(bad.sum()), h[bad]
        cb, bb, ab, sb = c[bad], b[bad], a[bad], s[bad]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = cb + mid * (bb + mid * ab) >= sb
            lo, hi = np.where(above, mid, lo), np.where(above, hi, mid)
        x[bad] = hi
    return np.clip(x, 0.0, h)


def quantile(df: DistributionFunction, s):
    """Decreasing rearrangement u*(s) = inf{t >= 0 : mu(t) < s} for 0 < s <= |Omega_0|."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr <= 0) or np.any(s_arr > df.total_mass * (1 + 1e-12)):
        raise ParameterError(f"s must lie in (0, {df.total_mass}]")
    mu_at = df.values_at_breakpoints
    # first breakpoint where mu drops below s
    J = np.searchsorted(-mu_at, -s_arr, side="right")
    out = np.zeros_like(s_arr)
    has_piece = J > 0
    j = J[has_piece] - 1
    bp = df.breakpoints
    left = df.left_limits[j]
    sj = s_arr[has_piece]
    flat = left >= sj
    res = np.where(flat, bp[np.minimum(j + 1, len(bp) - 1)], 0.0)
    cross = ~flat
    if np.any(cross):
        jc = j[cross]
        c, b, a = df.coeffs[jc].T
        res[cross] = bp[jc] + _solve_piece(c, b, a, sj[cross], df.widths[jc])
    out[has_piece] = res
    return out if np.ndim(s) else float(out[0])


def lorentz_norm(df: DistributionFunction, params: LorentzParams) -> float:
    """P^(1/q) (int_0^inf t^q mu(t)^(q/P) dt/t)^(1/q), 16-point Gauss per piece."""
    P, q = float(params.P), float(params.q)
    if df.n_pieces == 0:
        return 0.0
    t0 = df.breakpoints[:-1]
    h = df.widths
    x = h[:, None] * _GL16_X[None]
    tt = t0[:, None] + x
    mu = np.maximum(df(tt), 0.0)
    w = h[:, None] * _GL16_W
    integrand = tt ** (q - 1.0) * mu ** (q / P)
    # first piece: Gauss-Jacobi with weight t^(q-1) on [0, h] takes the endpoint factor exactly
    xj, wj = roots_jacobi(16, 0.0, q - 1.0)
    t_first = 0.5 * h[0] * (xj + 1.0)
    first = (0.5 * h[0]) ** q * np.sum(wj * np.maximum(df(t_first), 0.0) ** (q / P))
    total = first + np.sum((w * integrand)[1:])
    return float(P ** (1.0 / q) * total ** (1.0 / q))


def exterior_boundary_integral(field, t):
    """int over {u > t} of the exterior boundary of 1/u, exact for the linear trace."""
    mesh = field.mesh
    nodal = field.nodal
    edges = mesh.exterior_edges()
    L = mesh.exterior_edge_lengths()
    lo = np.minimum(nodal[edges[:, 0]], nodal[edges[:, 1]])
    hi = np.maximum(nodal[edges[:, 0]], nodal[edges[:, 1]])
    return _edge_log_integral(lo, hi, L, t)


def _edge_log_integral(lo, hi, L, t):
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(ts)
    span = hi - lo
    for k, tk in enumerate(ts):
        contrib = hi > tk
        a_hat = np.maximum(lo[contrib], tk)
        if np.any(a_hat <= 0):
            raise ContractError("field is not positive on a contributing exterior edge")
        b = hi[contrib]
        x = (b - a_hat) / a_hat
        phi = np.where(x > 1e-8, np.log1p(x) / np.where(x > 1e-8, x, 1.0), 1.0 - x / 2.0 + x * x / 3.0)
        sp_ = span[contrib]
        frac = np.where(sp_ > 0, (b - a_hat) / np.where(sp_ > 0, sp_, 1.0), 1.0)
        out[k] = float(np.sum(L[contrib] * frac * phi / a_hat))
    return out if np.ndim(t) else float(out[0])


def product_integral(mesh, h, g) -> float:
    """Exact int h g over Omega_0 for P1 fields given by vertex values."""
    H = np.asarray(h, dtype=float)[mesh.triangles]
    G = np.asarray(g, dtype=float)[mesh.triangles]
    local = (H * G).sum(axis=1) + H.sum(axis=1) * G.sum(axis=1)
    return float(mesh.areas @ local) / 12.0


def hardy_littlewood_rhs(df_h: DistributionFunction, df_g: DistributionFunction) -> float:
    """int_0^{|Omega|} h*(s) g*(s) ds by composite quadrature between the quantiles' kinks."""
    total = min(df_h.total_mass, df_g.total_mass)
    knots = [np.array([0.0, total])]
    for df in (df_h, df_g):
        knots += [df.values_at_breakpoints, df.left_limits]
    s = np.unique(np.clip(np.concatenate(knots), 0.0, total))
    s = s[np.concatenate([[True], np.diff(s) > 1e-15 * total])]
    lo, hi = s[:-1], s[1:]
    # smoothstep substitution flattens the sqrt-type endpoint behaviour of u*
    y = _GL16_X
    ramp = y * y * (3.0 - 2.0 * y)
    dramp = 6.0 * y * (1.0 - y)
    nodes = lo[:, None] + (hi - lo)[:, None] * ramp[None]
    weights = (hi - lo)[:, None] * (_GL16_W * dramp)[None]
    nodes = np.clip(nodes, total * 1e-300, total)
    vals = quantile(df_h, nodes.ravel()) * quantile(df_g, nodes.ravel())
    return float(np.sum(weights.ravel() * vals))
