"""Strongly convex norms, their polar (dual) norms, and Wulff-ball volume.

Three closed families are supported:

* ``euclidean``      F(xi) = |xi|
* ``ellipsoid``      F(xi) = sqrt(xi^T M xi) for a fixed SPD matrix M
* ``regularized_p``  F(xi) = (sum_i (xi_i^2 + eps |xi|^2)^{p/2})^{1/p}

Every family provides analytic value / gradient / Hessian jets away from
the origin. The dual norm F*(x) = sup_{xi != 0} <xi, x> / F(xi) has closed
forms for the first two families; for ``regularized_p`` it is computed by
maximizing over the unit F-sphere (damped Newton on the stationarity
system, with a projected-gradient-ascent fallback started from a
deterministic low-discrepancy direction set). All entry points accept
single vectors of shape (n,) or batches of shape (..., n).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapabilityError, DomainError, NumericError
from .quad import gauss_legendre, unit_ball_volume

FAMILIES = ("euclidean", "ellipsoid", "regularized_p")

_DUAL_TOL = 1e-12
_DUAL_RESTARTS = 64


@dataclass(frozen=True, eq=False)
class Norm:
    """A strongly convex norm; build instances through the factory helpers."""

    family: str
    dim: int
    matrix: np.ndarray | None = None
    matrix_inv: np.ndarray | None = None
    exponent: float | None = None
    smoothing: float = 1e-2

    def __repr__(self):
        if self.family == "ellipsoid":
            return f"Norm(ellipsoid, n={self.dim})"
        if self.family == "regularized_p":
            return (f"Norm(regularized_p, n={self.dim}, p={self.exponent}, "
                    f"eps={self.smoothing})")
        return f"Norm(euclidean, n={self.dim})"


def euclidean_norm(dim: int) -> Norm:
    if dim < 1:
        raise DomainError("dimension must be >= 1")
    return Norm("euclidean", dim)


def ellipsoid_norm(matrix) -> Norm:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("ellipsoid norm needs a square matrix")
    m = 0.5 * (m + m.T)
    if np.min(np.linalg.eigvalsh(m)) <= 0.0:
        raise DomainError("ellipsoid norm needs a positive definite matrix")
    return Norm("ellipsoid", m.shape[0], matrix=m, matrix_inv=np.linalg.inv(m))


def regularized_p_norm(dim: int, p: float, eps: float = 1e-2) -> Norm:
    if dim < 1:
        raise DomainError("dimension must be >= 1")
    if not 1.0 < p < math.inf:
        raise DomainError("exponent must lie in (1, inf)")
    if eps <= 0.0:
        raise DomainError("smoothing must be positive")
    return Norm("regularized_p", dim, exponent=float(p), smoothing=float(eps))


def _check_nonzero(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 1:
        raise DomainError("empty vector")
    if np.any(np.sum(x * x, axis=-1) == 0.0):
        raise DomainError("norm jets are undefined at the origin")
    return x


def eval_jet(norm: Norm, xi):
    """Return (F(xi), grad F(xi), hess F(xi)); batched over leading axes."""
    xi = _check_nonzero(xi)
    n = norm.dim
    if xi.shape[-1] != n:
        raise DomainError(f"expected vectors of length {n}")
    eye = np.eye(n)
    if norm.family == "euclidean":
        v = np.sqrt(np.sum(xi * xi, axis=-1))
        g = xi / v[..., None]
        h = (eye - g[..., :, None] * g[..., None, :]) / v[..., None, None]
        return v, g, h
    if norm.family == "ellipsoid":
        m = norm.matrix
        mx = xi @ m
        v = np.sqrt(np.sum(xi * mx, axis=-1))
        g = mx / v[..., None]
        h = (m / v[..., None, None]
             - mx[..., :, None] * mx[..., None, :] / v[..., None, None] ** 3)
        return v, g, h
    return _reg_p_jet(norm, xi)


def _reg_p_jet(norm: Norm, xi):
    p, eps = norm.exponent, norm.smoothing
    n = norm.dim
    sq = xi * xi
    q = sq + eps * np.sum(sq, axis=-1, keepdims=True)
    qa = q ** (0.5 * p - 1.0)          # q^{p/2-1}
    qb = q ** (0.5 * p - 2.0)          # q^{p/2-2}
    big_g = np.sum(q * qa, axis=-1)    # sum q^{p/2}
    t1 = np.sum(qa, axis=-1, keepdims=True)
    u = np.sum(qb, axis=-1, keepdims=True)
    value = big_g ** (1.0 / p)
    b = qa + eps * t1
    h_vec = xi * b
    scale1 = big_g ** (1.0 / p - 1.0)
    grad = scale1[..., None] * h_vec
    eye = np.eye(n)
    diag = b + (p - 2.0) * sq * qb
    dh = (diag[..., :, None] * eye
          + (p - 2.0) * eps * (xi * qb)[..., :, None] * xi[..., None, :]
          + (p - 2.0) * eps * xi[..., :, None] * (xi * (qb + eps * u))[..., None, :])
    hess = ((1.0 - p) * (big_g ** (1.0 / p - 2.0))[..., None, None]
            * h_vec[..., :, None] * h_vec[..., None, :]
            + scale1[..., None, None] * dh)
    return value, grad, hess


def half_sq_hessian(norm: Norm, xi):
    """Hessian of F^2/2, equal to gradF x gradF + F * hessF."""
    v, g, h = eval_jet(norm, xi)
    return g[..., :, None] * g[..., None, :] + v[..., None, None] * h


def dual_jet(norm: Norm, x):
    """Return (F*(x), grad F*(x)) of the polar norm; batched."""
    x = _check_nonzero(x)
    if norm.family == "euclidean":
        v = np.sqrt(np.sum(x * x, axis=-1))
        return v, x / v[..., None]
    if norm.family == "ellipsoid":
        mi = norm.matrix_inv
        mx = x @ mi
        v = np.sqrt(np.sum(x * mx, axis=-1))
        return v, mx / v[..., None]
    flat = x.reshape(-1, norm.dim)
    val, grad = _dual_numeric(norm, flat)
    return val.reshape(x.shape[:-1]), grad.reshape(x.shape)


def dual_hessian(norm: Norm, x):
    """Hessian of the polar norm; closed form or implicit differentiation."""
    x = _check_nonzero(x)
    n = norm.dim
    eye = np.eye(n)
    if norm.family == "euclidean":
        v = np.sqrt(np.sum(x * x, axis=-1))
        g = x / v[..., None]
        return (eye - g[..., :, None] * g[..., None, :]) / v[..., None, None]
    if norm.family == "ellipsoid":
        mi = norm.matrix_inv
        mx = x @ mi
        v = np.sqrt(np.sum(x * mx, axis=-1))
        return (mi / v[..., None, None]
                - mx[..., :, None] * mx[..., None, :] / v[..., None, None] ** 3)
    # implicit differentiation of the maximizer: with xi* = grad F*(x) and
    # lam = F*(x), solve (lam hessF + gradF x gradF) D = I - gradF x xi*
    lam, xistar = dual_jet(norm, x)
    _, g, h = eval_jet(norm, xistar)
    aug = lam[..., None, None] * h + g[..., :, None] * g[..., None, :]
    rhs = eye - g[..., :, None] * xistar[..., None, :]
    d = np.linalg.solve(aug, rhs)
    return 0.5 * (d + np.swapaxes(d, -1, -2))


def _dual_numeric(norm: Norm, x):
    """Damped Newton on the stationarity system of the dual sup."""
    n = norm.dim
    p = norm.exponent
    scale = np.sqrt(np.sum(x * x, axis=-1))
    # start at the plain p-norm maximizer, a good guess for small smoothing
    xi = np.sign(x) * np.abs(x) ** (1.0 / (p - 1.0))
    bad = np.sum(xi * xi, axis=-1) == 0.0
    if np.any(bad):
        xi[bad] = x[bad]
    xi = xi / eval_jet(norm, xi)[0][..., None]
    lam = np.sum(xi * x, axis=-1)
    res = np.full(x.shape[0], np.inf)
    for _ in range(80):
        v, g, h = eval_jet(norm, xi)
        r1 = lam[:, None] * g - x
        r2 = v - 1.0
        res = np.maximum(np.max(np.abs(r1), axis=-1), np.abs(r2)) / (1.0 + scale)
        live = res > _DUAL_TOL
        if not np.any(live):
            break
        jac = np.zeros((x.shape[0], n + 1, n + 1))
        jac[:, :n, :n] = lam[:, None, None] * h
        jac[:, :n, n] = g
        jac[:, n, :n] = g
        rhs = np.concatenate([-r1, -r2[:, None]], axis=-1)
        try:
            step = np.linalg.solve(jac[live], rhs[live][..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        # damped update: halve the step for rows whose residual would grow
        alpha = np.ones(step.shape[0])
        xi_live = xi[live]
        lam_live = lam[live]
        res_live = res[live]
        for _ in range(12):
            cand_xi = xi_live + alpha[:, None] * step[:, :n]
            cand_lam = lam_live + alpha * step[:, n]
            vv, gg, _ = eval_jet(norm, cand_xi)
            rr1 = cand_lam[:, None] * gg - x[live]
            rr = np.maximum(np.max(np.abs(rr1), axis=-1), np.abs(vv - 1.0))
            rr = rr / (1.0 + scale[live])
            worse = rr > res_live
            if not np.any(worse):
                break
            alpha[worse] *= 0.5
        xi[live] = xi_live + alpha[:, None] * step[:, :n]
        lam[live] = lam_live + alpha * step[:, n]
    if np.any(res > _DUAL_TOL * 100.0):
        idx = np.nonzero(res > _DUAL_TOL * 100.0)[0]
        for i in idx:
            xi[i] = _dual_ascent(norm, x[i])
        res_chk = _dual_residual(norm, xi[idx], x[idx])
        if np.any(res_chk > 1e-8):
            raise NumericError(
                "dual maximization did not converge; worst residual "
                f"{float(np.max(res_chk)):.3e}")
    xi = xi / eval_jet(norm, xi)[0][..., None]
    return np.sum(xi * x, axis=-1), xi


def _dual_residual(norm, xi, x):
    v, g, _ = eval_jet(norm, xi)
    lam = np.sum(xi * x, axis=-1)
    r1 = np.max(np.abs(lam[:, None] * g - x), axis=-1)
    r2 = np.abs(v - 1.0)
    return np.maximum(r1, r2) / (1.0 + np.sqrt(np.sum(x * x, axis=-1)))


def _restart_directions(dim: int, count: int) -> np.ndarray:
    if dim == 2:
        theta = 2.0 * math.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    if dim == 3:
        # Fibonacci sphere
        i = np.arange(count) + 0.5
        phi = math.pi * (1.0 + math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    rng = np.random.default_rng(0)
    d = rng.normal(size=(count, dim))
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _dual_ascent(norm: Norm, x):
    """Projected gradient ascent of <xi, x> on the unit F-sphere.

    Runs all restarts of the deterministic direction set in lockstep and
    keeps the best maximizer; step-size convergence threshold 1e-12.
    """
    dirs = _restart_directions(norm.dim, _DUAL_RESTARTS)
    xi = dirs / eval_jet(norm, dirs)[0][..., None]
    eta = np.full(xi.shape[0], 0.5)
    obj = np.sum(xi * x, axis=-1)
    for _ in range(500):
        _, g, _ = eval_jet(norm, xi)
        grad = x[None, :] - obj[:, None] * g
        cand = xi + eta[:, None] * grad
        cand = cand / eval_jet(norm, cand)[0][..., None]
        new_obj = np.sum(cand * x, axis=-1)
        better = new_obj >= obj
        step = np.max(np.abs(cand - xi), axis=-1)
        xi = np.where(better[:, None], cand, xi)
        obj = np.where(better, new_obj, obj)
        eta = np.where(better, np.minimum(eta * 1.3, 4.0), eta * 0.5)
        if np.max(np.where(better, step, 0.0)) < _DUAL_TOL and np.all(eta < 1e-14):
            break
        if np.all(eta < 1e-16):
            break
    best = int(np.argmax(obj))
    return xi[best]


@lru_cache(maxsize=None)
def wulff_volume(norm: Norm) -> float:
    """Volume of the unit Wulff ball, the unit ball of the dual norm.

    Closed form for the euclidean and ellipsoid families in any dimension;
    polar-coordinate quadrature with r(direction) = 1/F*(direction) for
    regularized_p in dimensions 2 and 3.
    """
    n = norm.dim
    if norm.family == "euclidean":
        return unit_ball_volume(n)
    if norm.family == "ellipsoid":
        return unit_ball_volume(n) * math.sqrt(np.linalg.det(norm.matrix))
    if n == 2:
        count = 2048
        theta = 2.0 * math.pi * np.arange(count) / count
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        r = 1.0 / dual_jet(norm, dirs)[0]
        return float(np.sum(r * r) * (math.pi / count))
    if n == 3:
        nc, nphi = 128, 256
        c, wc = gauss_legendre(-1.0, 1.0, nc)
        phi = 2.0 * math.pi * np.arange(nphi) / nphi
        s = np.sqrt(1.0 - c * c)
        dirs = np.stack([
            np.outer(s, np.cos(phi)),
            np.outer(s, np.sin(phi)),
            np.broadcast_to(c[:, None], (nc, nphi)).copy(),
        ], axis=-1)
        r = 1.0 / dual_jet(norm, dirs.reshape(-1, 3))[0].reshape(nc, nphi)
        dphi = 2.0 * math.pi / nphi
        return float(np.sum(wc @ (r ** 3)) * dphi / 3.0)
    raise CapabilityError(
        f"no numeric Wulff-volume path for family {norm.family} in n={n}")
