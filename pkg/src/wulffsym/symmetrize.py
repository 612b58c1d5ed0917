"""Symmetrization with respect to mixed volumes and inequality harnesses.

The order-(k-1) symmetrand of an admissible field u replaces each sublevel
set by the Wulff ball with the same (k-1)-th mixed volume: tabulate
t -> zeta_{k-1}(sublevel t), invert to the radial profile
rho(r) = sup{t <= 0 : zeta(t) <= r}, and read u*(x) = rho(F*(x)). The
harnesses quantify, at desk scale, that this symmetrization

* does not increase the k-Hessian energy (Polya-Szego margins),
* does not increase its p-generalized variants,
* does not decrease L^p norms,
* dominates the radial solution of the symmetrized Hessian equation
  (comparison principle), and
* realizes the sharp constants of the associated Sobolev embeddings.
"""

import math
from dataclasses import dataclass

import numpy as np

from .anisotropy import Norm, wulff_volume
from .bodies import af_margins, mean_radius, sample_many
from .errors import DomainError, InputError, ModelError, NumericError
from .field_ops import (
    generalized_integral,
    hessian_integral,
    level_grid,
    lp_norm,
    polar_grid,
    sk_field_batch,
)
from .fields import Field
from .quad import panel_cumulative
from .radial import (
    MonotoneProfile,
    radial_energy,
    radial_hessian_integral,
    rearrange,
    solve_radial,
)

_ZETA_SLACK = 1e-8


@dataclass(frozen=True, eq=False)
class SymmetrizationResult:
    order: int                      # energy order k; radii match zeta_{k-1}
    zeta: MonotoneProfile           # t -> zeta_{k-1}(sublevel t)
    rho: MonotoneProfile            # r -> symmetrand profile value
    outer_radius: float
    diagnostics: dict


@dataclass(frozen=True, eq=False)
class PsMarginResult:
    lhs: float
    rhs: float
    margin: float
    lhs_coarea: float | None
    symmetrization: SymmetrizationResult


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    radii: np.ndarray
    margins: np.ndarray
    min_margin: float


@dataclass(frozen=True, eq=False)
class SobolevMarginResult:
    constant: float
    energy: float
    norm_power: float
    margin: float


class _LevelData:
    """Shared per-level sampling results for one (norm, field, k)."""

    def __init__(self, norm, u, k, level_count, rays):
        n = u.dim
        if not 1 <= k <= n:
            raise DomainError(f"order k={k} outside [1, {n}]")
        levels = level_grid(u, level_count)
        samples = sample_many(norm, u, levels, rays=rays)
        keep = [i for i, s in enumerate(samples) if s is not None]
        if len(keep) < max(8, level_count // 4):
            raise NumericError("too many degenerate levels in the grid")
        self.skipped = len(samples) - len(keep)
        self.levels = levels[keep]
        self.samples = [samples[i] for i in keep]
        self.zeta = np.array([mean_radius(s, k - 1) for s in self.samples])
        self.af_min = float(min(np.min(af_margins(s)) for s in self.samples))
        # surface integrals of S_{k-1} F(grad u)^k F(nu), the coarea
        # integrand of the k-Hessian energy
        self.coarea_g = np.array([
            float(np.sum(s.weights * s.curvatures[k - 1]
                         * s.gradient_norms ** k * s.f_of_nu))
            for s in self.samples])


def zeta_profile(norm: Norm, u: Field, k: int, level_count: int = 200,
                 rays: int | None = None) -> MonotoneProfile:
    """Tabulate t -> zeta_{k-1}(sublevel t) on a uniform level grid.

    Decreasing runs beyond tolerance are rejected (not repaired): they
    signal non-quasi-convex data or insufficient resolution.
    """
    data = _LevelData(norm, u, k, level_count, rays)
    return _zeta_from_data(data)


def _zeta_from_data(data: _LevelData) -> MonotoneProfile:
    t, z = data.levels, data.zeta
    drop = np.diff(z)
    slack = _ZETA_SLACK * (1.0 + float(np.max(z)))
    if np.min(drop, initial=0.0) < -slack:
        worst = float(np.min(drop))
        raise ModelError(
            f"mean-radius profile decreases by {-worst:.3e}; the field is "
            "not quasi-convex or the sampling resolution is too low")
    deriv = np.maximum(_three_point_slopes(t, z), 0.0)
    return MonotoneProfile(t, z, "increasing", deriv,
                           {"skipped_levels": data.skipped,
                            "af_min_margin": data.af_min})


def symmetrand(norm: Norm, u: Field, k: int, level_count: int = 200,
               rays: int | None = None) -> SymmetrizationResult:
    """Build the order-(k-1) symmetrand of u (profile representation)."""
    data = _LevelData(norm, u, k, level_count, rays)
    zeta = _zeta_from_data(data)
    return _invert_zeta(zeta, u.min_value, k)


def _three_point_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second-order derivative estimates on a non-uniform grid."""
    d = np.empty_like(y)
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    d[1:-1] = (-h2 / (h1 * (h1 + h2)) * y[:-2]
               + (h2 - h1) / (h1 * h2) * y[1:-1]
               + h1 / (h2 * (h1 + h2)) * y[2:])
    a1, a2 = x[1] - x[0], x[2] - x[0]
    d[0] = (-(a1 + a2) / (a1 * a2) * y[0]
            + a2 / (a1 * (a2 - a1)) * y[1]
            - a1 / (a2 * (a2 - a1)) * y[2])
    b1, b2 = x[-1] - x[-2], x[-1] - x[-3]
    d[-1] = ((b1 + b2) / (b1 * b2) * y[-1]
             - b2 / (b1 * (b2 - b1)) * y[-2]
             + b1 / (b2 * (b2 - b1)) * y[-3])
    return d


def _invert_zeta(zeta: MonotoneProfile, min_value: float,
                 k: int) -> SymmetrizationResult:
    t, z = zeta.r, zeta.values
    # right-continuous sup-inversion: on plateaus of zeta keep the largest
    # level, then interpolate between the surviving nodes
    keep = np.concatenate([np.diff(z) > 0.0, [True]])
    zk, tk = z[keep], t[keep]
    # below the first sampled level the profile is completed by the
    # quadratic stub m + (t0 - m)(r/r0)^2: admissible fields vanish
    # quadratically at their minimum, and a linear ramp would leave an
    # O(delta) kink there
    frac = np.array([0.0, 0.25, 0.5, 0.75])
    stub_r = frac * zk[0]
    stub_v = min_value + (tk[0] - min_value) * frac ** 2
    stub_d = 2.0 * (tk[0] - min_value) * frac / zk[0]
    radii = np.concatenate([stub_r, zk])
    values = np.concatenate([stub_v, tk])
    # slope of the inverse map, differentiated in the radius variable
    # (exact for quadratic profiles, unlike 1 / (centered dzeta/dt))
    deriv = np.concatenate([stub_d,
                            np.maximum(_three_point_slopes(zk, tk), 0.0)])
    rho = MonotoneProfile(radii, values, "increasing", deriv,
                          dict(zeta.meta))
    return SymmetrizationResult(order=k, zeta=zeta, rho=rho,
                                outer_radius=float(zk[-1]),
                                diagnostics=dict(zeta.meta))


def ps_margin(norm: Norm, u: Field, k: int, level_count: int = 200,
              rays: int | None = None, panels: int | None = None,
              cross_check: bool = True) -> PsMarginResult:
    """Hessian-energy drop under symmetrization; margin must be >= 0.

    The left side is the direct volume quadrature, cross-checked against
    the coarea form computed from the same level samples; the right side
    is the closed radial energy of the symmetrand profile.
    """
    data = _LevelData(norm, u, k, level_count, rays)
    sym = _invert_zeta(_zeta_from_data(data), u.min_value, k)
    lhs = hessian_integral(norm, u, k, panels)
    lhs_coarea = None
    if cross_check:
        from .quad import trapezoid

        lhs_coarea = trapezoid(data.coarea_g, data.levels) / k
        spread = abs(lhs - lhs_coarea) / (1.0 + abs(lhs))
        if spread > 5e-3:
            raise NumericError(
                f"direct and coarea energies disagree: {spread:.2e}")
    kappa = wulff_volume(norm)
    rhs = radial_hessian_integral(sym.rho, u.dim, k, kappa)
    return PsMarginResult(lhs, rhs, lhs - rhs, lhs_coarea, sym)


def ps_margin_p(norm: Norm, u: Field, k: int, p: float,
                level_count: int = 200, rays: int | None = None) -> PsMarginResult:
    """Generalized p-energy drop under symmetrization."""
    if p < 1.0:
        raise DomainError("exponent p must be >= 1")
    sym = symmetrand(norm, u, k, level_count, rays)
    lhs = generalized_integral(norm, u, k, p)
    kappa = wulff_volume(norm)
    rhs = radial_energy(sym.rho, u.dim, k, p, kappa)
    return PsMarginResult(lhs, rhs, lhs - rhs, None, sym)


def lp_compare(norm: Norm, u: Field, k: int, p: float,
               level_count: int = 200, rays: int | None = None,
               panels: int | None = None):
    """(||u||_p, ||u*||_p); symmetrization does not decrease L^p norms.

    p = inf compares the minima, which agree exactly.
    """
    sym = symmetrand(norm, u, k, level_count, rays)
    if p == math.inf:
        return abs(u.min_value), abs(float(sym.rho(0.0)))
    if p < 1.0:
        raise DomainError("p must be >= 1 (or inf)")
    lhs = lp_norm(u, p, panels)
    kappa = wulff_volume(norm)
    n = u.dim
    rho = sym.rho
    grid = np.linspace(0.0, sym.outer_radius, 4096)
    mass = panel_cumulative(
        lambda s: np.abs(rho(s)) ** p * s ** (n - 1.0), grid)[-1]
    rhs = (n * kappa * float(mass)) ** (1.0 / p)
    return lhs, rhs


def comparison_margin(norm: Norm, u: Field, f, k: int,
                      level_count: int = 200, rays: int | None = None,
                      solver_nodes: int = 4096) -> ComparisonResult:
    """Pointwise gap between the symmetrand and the radial solution.

    Requires S_k[u] <= f on a verification grid (violations raise with
    the worst point); then u*_{k-1} dominates the radial solution of
    S_k[v] = f* on the Wulff ball with matching mixed volume, and the
    returned margin profile rho - v must be nonnegative.
    """
    pts, _ = polar_grid(u, norm=norm)
    sk_vals = sk_field_batch(norm, u, pts, k)
    f_vals = np.asarray(f(pts), dtype=float)
    slack = 1e-9 * (1.0 + np.abs(f_vals))
    bad = sk_vals > f_vals + slack
    if np.any(bad):
        worst = int(np.argmax(sk_vals - f_vals))
        raise InputError(
            "S_k[u] exceeds the source at "
            f"x={pts[worst].tolist()}: {sk_vals[worst]:.6g} > "
            f"{f_vals[worst]:.6g}")
    sym = symmetrand(norm, u, k, level_count, rays)
    kappa = wulff_volume(norm)
    f_star = rearrange(f, u, kappa, norm=norm)
    v = solve_radial(f_star, sym.outer_radius, u.dim, k, nodes=solver_nodes)
    margins = sym.rho(v.r) - v.values
    return ComparisonResult(v.r, margins, float(np.min(margins)))


def sobolev_constant(norm: Norm, k: int, p: float) -> float:
    """Sharp constant of ||u||_q^p <= C * I_{k,p}, q = np/(n-k+1-p).

    Finite only for p < n - k + 1 (the borderline and beyond are out of
    range); at p = 1 the leading factor is 0^0 = 1 by continuity.
    """
    n = norm.dim
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    if p < 1.0:
        raise DomainError("exponent p must be >= 1")
    if p >= n - k + 1:
        raise DomainError(
            f"p={p} >= n-k+1={n - k + 1}: borderline/Morrey range is not "
            "covered")
    kappa = wulff_volume(norm)
    lead = ((p - 1.0) / (n - k + 1.0 - p)) ** (p - 1.0)
    s = k - 1.0 + p
    gammas = (math.gamma(n * p / s)
              / (math.gamma(n / s) * math.gamma(1.0 + n * (p - 1.0) / s)
                 * kappa))
    return lead / (k * math.comb(n, k)) * gammas ** (s / n)


def sobolev_margin(norm: Norm, u: Field, k: int, p: float,
                   panels: int | None = None) -> SobolevMarginResult:
    """Slack C * I_{k,p}[u] - ||u||_q^p of the sharp Sobolev inequality."""
    n = u.dim
    c = sobolev_constant(norm, k, p)
    q = n * p / (n - k + 1.0 - p)
    energy = generalized_integral(norm, u, k, p)
    norm_power = lp_norm(u, q, panels) ** p
    return SobolevMarginResult(c, energy, norm_power,
                               c * energy - norm_power)
