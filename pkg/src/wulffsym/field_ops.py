"""Anisotropic Hessian operators and energy integrals of admissible fields.

The anisotropic Hessian matrix of u under a norm F is

    A_ij = sum_l (F^2/2)_{il}(grad u) u_{lj},

the 0-matrix by convention where grad u = 0 (non-euclidean F), and the
plain Hessian for the euclidean norm. S_k of A is the anisotropic
k-Hessian operator; S_k of (F_{il} u_{lj}) evaluated on a level set is the
k-th anisotropic mean curvature of that level set. Energy integrals are
taken over {u < 0} by tensor Gauss-Legendre quadrature on the bounding
box with the domain indicator, or through the coarea decomposition over
sampled level sets.
"""

import warnings

import numpy as np

from .anisotropy import Norm, eval_jet, half_sq_hessian
from .errors import CapabilityError, DegenerateLevelError, DomainError, NumericError
from .fields import Field, FieldJet
from .invariants import sk as sk_matrix
from .quad import box_gauss_grid, chunked, trapezoid

_GRAD_FLOOR = 1e-150
_CHUNK = 1 << 17


def default_panels(dim: int) -> int:
    return 400 if dim <= 2 else 96


def aniso_hessian(norm: Norm, jet: FieldJet) -> np.ndarray:
    """Anisotropic Hessian matrix at one point, from a field jet."""
    g = np.asarray(jet.gradient, dtype=float)
    h = np.asarray(jet.hessian, dtype=float)
    return aniso_hessian_batch(norm, g[None, :], h[None, :, :])[0]


def aniso_hessian_batch(norm: Norm, grads, hesses):
    grads = np.asarray(grads, dtype=float)
    hesses = np.asarray(hesses, dtype=float)
    if norm.family == "euclidean":
        return hesses.copy()
    live = np.sum(grads * grads, axis=-1) > _GRAD_FLOOR
    out = np.zeros_like(hesses)
    if np.any(live):
        w = half_sq_hessian(norm, grads[live])
        out[live] = w @ hesses[live]
    return out


def _sk_stack(mats, k: int):
    """S_k over a stack of small matrices (dimension <= 3)."""
    mats = np.asarray(mats, dtype=float)
    n = mats.shape[-1]
    if n > 3:
        raise CapabilityError("stacked invariants are implemented for n <= 3")
    if not 0 <= k <= n:
        raise DomainError(f"order k={k} outside [0, {n}]")
    if k == 0:
        return np.ones(mats.shape[:-2])
    tr = np.trace(mats, axis1=-2, axis2=-1)
    if k == 1:
        return tr
    tr2 = np.einsum("...ij,...ji->...", mats, mats)
    if k == 2:
        return 0.5 * (tr * tr - tr2)
    return np.linalg.det(mats)


def _newton_stack(mats, k: int):
    """Newton transformation over a stack (dimension <= 3, 1 <= k <= n)."""
    mats = np.asarray(mats, dtype=float)
    n = mats.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f"order k={k} outside [1, {n}]")
    eye = np.eye(n)
    t = np.broadcast_to(eye, mats.shape).copy()
    for j in range(2, k + 1):
        s = _sk_stack(mats, j - 1)
        t = s[..., None, None] * eye - t @ np.swapaxes(mats, -1, -2)
    return t


def sk_field(norm: Norm, u: Field, x, k: int) -> float:
    """S_k of the anisotropic Hessian of u at a point."""
    jet = u.jet(np.asarray(x, dtype=float))
    return sk_matrix(aniso_hessian(norm, jet), k)


def sk_field_batch(norm: Norm, u: Field, pts, k: int):
    _, grads, hesses = u.jets(pts)
    return _sk_stack(aniso_hessian_batch(norm, grads, hesses), k)


def level_curvature(norm: Norm, u: Field, x, k: int) -> float:
    """k-th anisotropic mean curvature of the level set of u through x."""
    primary, _ = level_curvature_both(norm, u, x, k)
    return primary


def level_curvature_both(norm: Norm, u: Field, x, k: int):
    """Both evaluation routes of the level-set curvature at one point.

    Returns (S_k of the curvature matrix (F_il u_lj),
             the Newton-transform route sum_ij S_{k+1}^{ij} u_j F_i / F^{k+1});
    the two agree analytically, their spread measures numerical error.
    """
    x = np.asarray(x, dtype=float)
    _, grads, hesses = u.jets(x[None, :])
    if np.linalg.norm(grads[0]) < 1e-10:
        raise DegenerateLevelError("level set is degenerate: grad u ~ 0")
    a, b = curvature_batch(norm, grads, hesses, k)
    return float(a[0]), float(b[0])


def curvature_batch(norm: Norm, grads, hesses, k: int):
    """Vectorized level-set curvature, both routes, for sampling loops."""
    n = grads.shape[-1]
    if not 0 <= k <= n - 1:
        raise DomainError(f"curvature order k={k} outside [0, {n - 1}]")
    fv, fg, fh = eval_jet(norm, grads)
    curv_matrix = fh @ hesses
    primary = _sk_stack(curv_matrix, k)
    a = aniso_hessian_batch(norm, grads, hesses)
    t = _newton_stack(a, k + 1)
    alt = np.einsum("...ij,...j,...i->...", t, grads, fg) / fv ** (k + 1)
    return primary, alt


def domain_grid(u: Field, panels: int | None = None):
    """Quadrature nodes and weights on the bounding box of the domain."""
    if panels is None:
        panels = default_panels(u.dim)
    return box_gauss_grid(u.bounding_box, panels)


def _integrate_over_domain(u: Field, integrand, panels: int | None = None):
    """Sum integrand(pts, vals, grads, hesses) * w over {u < 0}, chunked."""
    pts, w = domain_grid(u, panels)
    total = []
    for lo, hi in chunked(pts.shape[0], _CHUNK):
        vals, grads, hesses = u.jets(pts[lo:hi])
        inside = vals < 0.0
        if not np.any(inside):
            continue
        contrib = integrand(pts[lo:hi][inside], vals[inside],
                            grads[inside], hesses[inside])
        if not np.all(np.isfinite(contrib)):
            raise NumericError("non-finite integrand in volume quadrature")
        total.append(float(np.sum(contrib * w[lo:hi][inside])))
    return float(np.sum(total))


def hessian_integral(norm: Norm, u: Field, k: int,
                     panels: int | None = None) -> float:
    """Energy integral of (-u) times S_k of the anisotropic Hessian."""

    def integrand(pts, vals, grads, hesses):
        a = aniso_hessian_batch(norm, grads, hesses)
        return -vals * _sk_stack(a, k)

    return _integrate_over_domain(u, integrand, panels)


def polar_integral(norm: Norm, u: Field, integrand, rays: int | None = None,
                   radial_nodes: int = 48) -> float:
    """Integrate over {u < 0} in polar form around the anchor.

    The domain is star-shaped about the anchor, so the integral splits
    into rays with exactly known lengths; Gauss nodes along each ray give
    spectral accuracy for smooth integrands, unlike the indicator
    quadrature whose boundary band limits integrands that do not vanish
    on the boundary.
    """
    from . import bodies

    grid = bodies._DirectionGrid(u.dim, rays or bodies.default_rays(u.dim))
    s = bodies.boundary_radii(norm, u, grid)
    rho, wr = np.polynomial.legendre.leggauss(radial_nodes)
    rho = 0.5 * (rho + 1.0)
    wr = 0.5 * wr
    n = u.dim
    total = []
    dir_chunk = max(1, _CHUNK // radial_nodes)
    for lo, hi in chunked(grid.count, dir_chunk):
        r = s[lo:hi, None] * rho[None, :]
        pts = (u.anchor + r[..., None] * grid.omega[lo:hi, None, :])
        vals = integrand(pts.reshape(-1, n)).reshape(r.shape)
        if not np.all(np.isfinite(vals)):
            raise NumericError("non-finite integrand in polar quadrature")
        radial = (vals * r ** (n - 1)) @ wr * s[lo:hi]
        total.append(float(np.sum(radial * grid.solid[lo:hi])))
    return float(np.sum(total))


def generalized_integral(norm: Norm, u: Field, k: int, p: float,
                         rays: int | None = None,
                         radial_nodes: int = 48) -> float:
    """Integral of sum_ij S_k^{ij} F^{p-k} F_i u_j over the domain.

    Reduces to k times the Hessian integral at p = k + 1 and to the
    F-Dirichlet energy of exponent p at k = 1. The integrand does not
    vanish on the boundary, so it is integrated in polar form.
    """
    if p < 1.0:
        raise DomainError("exponent p must be >= 1")

    def integrand(pts):
        _, grads, hesses = u.jets(pts)
        gn2 = np.sum(grads * grads, axis=-1)
        live = gn2 > 1e-28
        out = np.zeros(gn2.shape)
        if np.any(live):
            g, h = grads[live], hesses[live]
            fv, fg, _ = eval_jet(norm, g)
            a = aniso_hessian_batch(norm, g, h)
            t = _newton_stack(a, k)
            pair = np.einsum("...ij,...j,...i->...", t, g, fg)
            out[live] = fv ** (p - k) * pair
        return out

    return polar_integral(norm, u, integrand, rays=rays,
                          radial_nodes=radial_nodes)


def level_grid(u: Field, count: int = 200) -> np.ndarray:
    """Level grid on (m + delta, 0], avoiding the degenerate bottom.

    The bottom fifth is quadratically refined: mean radii of sublevel
    sets grow like sqrt(t - m) there, so uniform levels leave radius
    gaps of order sqrt(step) that dominate the symmetrand interpolation
    error; quadratic spacing equidistributes the radii instead.
    """
    m = u.min_value
    delta = 1e-3 * abs(m)
    split = m + 0.1 * abs(m)
    n_bot = max(8, count // 5)
    n_top = count - n_bot
    j = np.arange(n_bot) / n_bot
    bottom = (m + delta) + (split - (m + delta)) * j ** 2
    top = np.linspace(split, 0.0, n_top)
    return np.concatenate([bottom, top])


def hessian_integral_coarea(norm: Norm, u: Field, k: int,
                            levels=200, rays: int | None = None) -> float:
    """Hessian integral through the coarea decomposition over level sets.

    (1/k) * integral over t of the surface integral of
    S_{k-1}(curvatures) F(grad u)^k F(normal) over each level set.
    """
    from . import bodies

    if k < 1:
        raise DomainError("coarea route needs k >= 1")
    grid = level_grid(u, levels) if np.isscalar(levels) else np.asarray(levels)
    samples = bodies.sample_many(norm, u, grid, rays=rays)
    ts, gs = [], []
    for t, sample in zip(grid, samples):
        if sample is None:
            warnings.warn(f"skipping degenerate level t={t:.6g}")
            continue
        ts.append(t)
        gs.append(float(np.sum(
            sample.weights * sample.curvatures[k - 1]
            * sample.gradient_norms ** k * sample.f_of_nu)))
    if len(ts) < 2:
        raise NumericError("too few valid levels for the coarea integral")
    return trapezoid(np.asarray(gs), np.asarray(ts)) / k


def lp_norm(u: Field, p: float, panels: int | None = None) -> float:
    """L^p norm of u over its domain (u <= 0 inside)."""
    if p < 1.0:
        raise DomainError("p must be >= 1")

    def integrand(pts, vals, grads, hesses):
        return (-vals) ** p

    return _integrate_over_domain(u, integrand, panels) ** (1.0 / p)


def domain_volume(u: Field, panels: int | None = None) -> float:
    """Volume of {u < 0} by the same indicator quadrature."""

    def integrand(pts, vals, grads, hesses):
        return np.ones(vals.shape)

    return _integrate_over_domain(u, integrand, panels)


def _ray_lengths(u: Field, norm: Norm | None, grid):
    from . import bodies

    if norm is not None and u.radial_profile is not None:
        return bodies.boundary_radii(norm, u, grid)
    return bodies._shoot_generic(u, grid, np.array([0.0]))[0]


def domain_volume_polar(u: Field, norm: Norm | None = None,
                        rays: int | None = None) -> float:
    """Volume of {u < 0} from exact ray lengths, spectrally accurate."""
    from . import bodies

    grid = bodies._DirectionGrid(u.dim, rays or bodies.default_rays(u.dim))
    s = _ray_lengths(u, norm, grid)
    return float(np.sum(grid.solid * s ** u.dim) / u.dim)


def polar_grid(u: Field, norm: Norm | None = None, rays: int | None = None,
               radial_nodes: int = 48):
    """Boundary-fitted quadrature grid of {u < 0} (points, weights).

    Nodes lie on Gauss points along exactly-solved rays from the anchor,
    so no point is misclassified; weights include the polar Jacobian.
    """
    from . import bodies

    grid = bodies._DirectionGrid(u.dim, rays or bodies.default_rays(u.dim))
    s = _ray_lengths(u, norm, grid)
    rho, wr = np.polynomial.legendre.leggauss(radial_nodes)
    rho = 0.5 * (rho + 1.0)
    wr = 0.5 * wr
    r = s[:, None] * rho[None, :]
    pts = u.anchor + r[..., None] * grid.omega[:, None, :]
    w = grid.solid[:, None] * wr[None, :] * r ** (u.dim - 1) * s[:, None]
    return pts.reshape(-1, u.dim), w.reshape(-1)
