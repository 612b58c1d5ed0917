"""Radial machinery: profiles, radial Hessian energies, the radial solver,
and the decreasing rearrangement.

For u(x) = v(r) with r the dual-norm radius, the k-Hessian operator has
the closed form

    S_k[u] = C(n-1, k-1) (v''/r) (v'/r)^{k-1} + C(n-1, k) (v'/r)^k,

its energy integral over the Wulff ball of radius r0 is
kappa_n C(n,k) * int_0^{r0} r^{n-k} v'(r)^{k+1} dr, and the constant-
source Dirichlet problem S_k = f solves in closed double-integral form.
Rearrangement converts an integrable density on a domain into the
radially decreasing profile with identical level-set volumes.
"""

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DomainError, InputError
from .fields import Field
from .quad import panel_cumulative

_MONOTONE_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class MonotoneProfile:
    """A tabulated monotone function of one nonnegative variable.

    Evaluation interpolates linearly and extends constantly beyond the
    tabulated range (plateau convention at both ends). ``derivative``
    holds nodewise slope estimates when the producer can supply them.
    """

    r: np.ndarray
    values: np.ndarray
    direction: str  # "increasing" | "decreasing"
    derivative: np.ndarray | None = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.shape[0] < 2:
            raise InputError("profile needs matching 1-d abscissae/values")
        if np.any(np.diff(r) <= 0.0):
            raise InputError("abscissae must be strictly increasing")
        d = np.diff(v)
        slack = _MONOTONE_SLACK * (1.0 + np.max(np.abs(v)))
        if self.direction == "increasing":
            bad = np.min(d, initial=0.0) < -slack
        elif self.direction == "decreasing":
            bad = np.max(d, initial=0.0) > slack
        else:
            raise InputError(f"unknown direction {self.direction!r}")
        if bad:
            raise InputError(f"values are not {self.direction}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.r, self.values)

    def derivative_at(self, x):
        if self.derivative is None:
            raise DomainError("profile carries no derivative estimates")
        return np.interp(np.asarray(x, dtype=float), self.r, self.derivative)

    @property
    def support(self):
        return float(self.r[0]), float(self.r[-1])


def profile_from_callable(fn, grid, dfn=None, direction="increasing",
                          meta=None) -> MonotoneProfile:
    """Tabulate a callable (and optionally its derivative) on a grid."""
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(fn(grid), dtype=float)
    deriv = None
    if dfn is not None:
        deriv = np.asarray(dfn(grid), dtype=float)
    return MonotoneProfile(grid, vals, direction, deriv, meta or {})


def radial_sk(vp: float, vpp: float, r: float, n: int, k: int) -> float:
    """S_k of a radial field from the profile derivatives at radius r.

    Equals C(n-1,k-1) v'' (v'/r)^{k-1} + C(n-1,k) (v'/r)^k, the expansion
    of S_k((v'/r) I + (v''- v'/r)/r * x (grad r)^T) in mixed
    discriminants; only two of them survive because the rank-one slot
    kills every term with two or more copies.
    """
    if r <= 0.0:
        raise DomainError("radial formula needs r > 0; see radial_sk_origin")
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    a = vp / r
    return (math.comb(n - 1, k - 1) * vpp * a ** (k - 1)
            + math.comb(n - 1, k) * a ** k)


def radial_sk_origin(vpp0: float, n: int, k: int) -> float:
    """Limit of the radial S_k at the center, C(n,k) v''(0)^k."""
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    return math.comb(n, k) * vpp0 ** k


def _derivative_on_grid(profile: MonotoneProfile) -> np.ndarray:
    if profile.derivative is not None:
        return profile.derivative
    r, v = profile.r, profile.values
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (r[2:] - r[:-2])
    d[0] = (v[1] - v[0]) / (r[1] - r[0])
    d[-1] = (v[-1] - v[-2]) / (r[-1] - r[-2])
    return d


def radial_energy(profile: MonotoneProfile, n: int, k: int, p: float,
                  kappa_n: float) -> float:
    """n kappa_n C(n-1,k-1) * int r^{n-k} v'(r)^p dr over the profile.

    v' is interpolated linearly between nodewise estimates; each panel is
    integrated by a fixed Gauss rule.
    """
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    deriv = np.abs(_derivative_on_grid(profile))
    r = profile.r

    def integrand(s):
        return s ** (n - k) * np.interp(s, r, deriv) ** p

    total = panel_cumulative(integrand, r)[-1]
    return n * kappa_n * math.comb(n - 1, k - 1) * float(total)


def radial_hessian_integral(profile: MonotoneProfile, n: int, k: int,
                            kappa_n: float) -> float:
    """kappa_n C(n,k) * int_0^{r0} r^{n-k} v'(r)^{k+1} dr.

    The profile must describe v with v(r0) = 0 at its outer end; the
    integral is the Hessian energy of the radial field v(F*(x)).
    """
    scale = 1.0 + float(np.max(np.abs(profile.values)))
    if abs(profile.values[-1]) > 1e-6 * scale:
        raise DomainError("profile must vanish at its outer radius")
    return radial_energy(profile, n, k, k + 1.0, kappa_n) / k


def solve_radial(f_star: MonotoneProfile, outer_radius: float, n: int, k: int,
                 nodes: int = 4096) -> MonotoneProfile:
    """Radial solution of the k-Hessian equation with source f_star.

    v(r) = -(n / C(n,k))^{1/k} * int_r^R (s^{k-n} G(s))^{1/k} ds with
    G(s) = int_0^s f_star(t) t^{n-1} dt; the returned increasing profile
    carries the analytic v' and the meta key "vpp" with v''.
    """
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    if outer_radius <= 0.0:
        raise DomainError("outer radius must be positive")
    if np.any(f_star.values < 0.0):
        raise InputError("source profile must be nonnegative")
    r = np.linspace(0.0, outer_radius, nodes)
    # the k-th root amplifies interpolation error of the inner integral
    # near the center, so tabulate it on an 8x refined grid
    r_fine = np.linspace(0.0, outer_radius, 8 * (nodes - 1) + 1)
    cum_fine = panel_cumulative(lambda s: f_star(s) * s ** (n - 1.0), r_fine)
    clipped = int(np.sum(cum_fine < 0.0))
    if clipped:
        warnings.warn(f"clipped {clipped} negative cumulative values")
        cum_fine = np.maximum(cum_fine, 0.0)
    cum = np.interp(r, r_fine, cum_fine)

    coeff = (n / math.comb(n, k)) ** (1.0 / k)

    def phi(s):
        g = np.maximum(np.interp(s, r_fine, cum_fine), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(s > 0.0, (s ** float(k - n) * g) ** (1.0 / k), 0.0)
        return coeff * val

    big_phi = panel_cumulative(phi, r)
    v = big_phi - big_phi[-1]
    vp = phi(r)
    # v'' = v' * (G'/G - (n-k)/r)/k with G' = f r^{n-1}; at r = 0 the limit
    # is (f(0)/C(n,k))^{1/k}
    vpp = np.empty_like(vp)
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = (vp[1:] * (f_star(r[1:]) * r[1:] ** (n - 1.0)
                              / np.maximum(cum[1:], 1e-300)
                              - (n - k) / r[1:]) / k)
    vpp[1:] = np.where(cum[1:] > 0.0, interior, 0.0)
    vpp[0] = (float(f_star(0.0)) / math.comb(n, k)) ** (1.0 / k)
    return MonotoneProfile(r, v, "increasing", vp,
                           {"vpp": vpp, "clipped": clipped})


def rearrange(f, u: Field, kappa_n: float, rays: int | None = None,
              radial_nodes: int | None = None, norm=None) -> MonotoneProfile:
    """Radially decreasing rearrangement of a density over {u < 0}.

    Samples f on the boundary-fitted polar quadrature grid of the domain,
    sorts by value (stable, descending), and matches cumulative volumes:
    the profile value at radius (V/kappa_n)^{1/n} is the density at
    cumulative volume V. The radial node count bounds the value
    resolution (the profile is a staircase for radial densities), so it
    is kept much finer than the angular one. ``norm`` speeds up
    radial-profile fields.
    """
    from .field_ops import polar_grid

    if rays is None:
        rays = 256 if u.dim == 2 else 64
    if radial_nodes is None:
        radial_nodes = 2048 if u.dim == 2 else 512
    pts, w = polar_grid(u, norm=norm, rays=rays, radial_nodes=radial_nodes)
    fv = np.asarray(f(pts), dtype=float)
    if np.any(fv < -1e-12):
        raise InputError("rearrangement needs a nonnegative density")
    fv = np.maximum(fv, 0.0)
    order = np.argsort(-fv, kind="stable")
    vols = np.cumsum(w[order])
    radii = (vols / kappa_n) ** (1.0 / u.dim)
    return MonotoneProfile(radii, fv[order], "decreasing",
                           meta={"total_volume": float(vols[-1])})
