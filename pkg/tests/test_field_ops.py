import math

import numpy as np
import pytest

from wulffsym.anisotropy import (
    ellipsoid_norm,
    euclidean_norm,
    eval_jet,
    regularized_p_norm,
)
from wulffsym.errors import DegenerateLevelError, DomainError
from wulffsym.field_ops import (
    _newton_stack,
    _sk_stack,
    aniso_hessian,
    aniso_hessian_batch,
    curvature_batch,
    domain_volume,
    generalized_integral,
    hessian_integral,
    hessian_integral_coarea,
    level_curvature,
    lp_norm,
    sk_field,
    sk_field_batch,
)
from wulffsym.fields import FieldJet, quadratic_ellipsoid, radial_power
from wulffsym.invariants import newton_transform, sigma_k, sk


def rand_sym(rng, n):
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def interior_points(rng, u, count):
    box = u.bounding_box
    pts = rng.uniform(box[:, 0], box[:, 1], size=(20 * count, u.dim))
    vals, grads, _ = u.jets(pts)
    keep = (vals < -1e-3) & (np.linalg.norm(grads, axis=-1) > 1e-3)
    return pts[keep][:count]


class TestStackKernels:
    def test_sk_stack_matches_reference(self):
        rng = np.random.default_rng(0)
        for n in (2, 3):
            mats = rng.normal(size=(40, n, n))
            for k in range(n + 1):
                got = _sk_stack(mats, k)
                want = np.array([sk(m, k) for m in mats])
                assert np.allclose(got, want, atol=1e-12)

    def test_newton_stack_matches_reference(self):
        rng = np.random.default_rng(1)
        for n in (2, 3):
            mats = rng.normal(size=(25, n, n))
            for k in range(1, n + 1):
                got = _newton_stack(mats, k)
                want = np.stack([newton_transform(m, k) for m in mats])
                assert np.allclose(got, want, atol=1e-12)


class TestAnisoHessian:
    def test_euclidean_returns_plain_hessian(self):
        rng = np.random.default_rng(2)
        h = rand_sym(rng, 3)
        jet = FieldJet(0.0, rng.normal(size=3), h)
        assert np.array_equal(aniso_hessian(euclidean_norm(3), jet), h)

    def test_zero_gradient_convention(self):
        norm = ellipsoid_norm(np.diag([4.0, 1.0]))
        jet = FieldJet(0.0, np.zeros(2), np.eye(2))
        assert np.array_equal(aniso_hessian(norm, jet), np.zeros((2, 2)))

    @pytest.mark.parametrize("family", ["ellipsoid", "regularized_p"])
    def test_dual_square_field_gives_identity(self, family):
        # u = F*(x)^2 / 2 has anisotropic Hessian equal to the identity
        if family == "ellipsoid":
            norm = ellipsoid_norm(np.array([[4.0, 0.5], [0.5, 1.0]]))
        else:
            norm = regularized_p_norm(2, 3.0)
        u = radial_power(norm, a=2.0)
        rng = np.random.default_rng(3)
        pts = rng.uniform(-0.4, 0.4, size=(100, 2)) + 0.05
        _, grads, hesses = u.jets(pts)
        a = aniso_hessian_batch(norm, grads, hesses)
        assert np.max(np.abs(a - np.eye(2))) < 1e-10


class TestSkField:
    def test_dual_square_gives_binomial(self):
        for norm in (euclidean_norm(2), ellipsoid_norm(np.diag([4.0, 1.0])),
                     regularized_p_norm(2, 3.0)):
            u = radial_power(norm, a=2.0)
            x = np.array([0.3, -0.2])
            for k in range(1, 3):
                assert sk_field(norm, u, x, k) == pytest.approx(
                    math.comb(2, k), rel=1e-9)

    def test_euclidean_laplacian(self):
        norm = euclidean_norm(3)
        u = radial_power(norm, a=2.0)
        assert sk_field(norm, u, np.array([0.1, 0.2, -0.3]), 1) == (
            pytest.approx(3.0, rel=1e-10))

    def test_finsler_laplacian_matches_divergence(self):
        # k = 1 equals div(grad(F^2/2)(grad u)) by finite differences
        norm = ellipsoid_norm(np.array([[2.0, 0.3], [0.3, 1.0]]))
        u = quadratic_ellipsoid(2, axes=[1.4, 0.9])
        rng = np.random.default_rng(4)
        pts = interior_points(rng, u, 20)
        h = 1e-5
        for x in pts:
            fd = 0.0
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                gp = u.jets((x + e)[None])[1][0]
                gm = u.jets((x - e)[None])[1][0]
                vp = eval_jet(norm, gp)
                vm = eval_jet(norm, gm)
                fd += (vp[0] * vp[1][j] - vm[0] * vm[1][j]) / (2.0 * h)
            assert sk_field(norm, u, x, 1) == pytest.approx(fd, abs=1e-6)

    def test_batch_matches_scalar(self):
        norm = regularized_p_norm(2, 1.5)
        u = quadratic_ellipsoid(2, axes=[2.0, 1.0])
        rng = np.random.default_rng(5)
        pts = interior_points(rng, u, 10)
        batch = sk_field_batch(norm, u, pts, 2)
        for i, x in enumerate(pts):
            assert batch[i] == pytest.approx(sk_field(norm, u, x, 2),
                                             rel=1e-12)


class TestLevelCurvature:
    def test_wulff_sphere_curvatures(self):
        # u = F*(x): every anisotropic principal curvature on {F* = t} is 1/t
        for norm in (euclidean_norm(2), ellipsoid_norm(np.diag([4.0, 1.0])),
                     regularized_p_norm(2, 3.0)):
            u = radial_power(norm, a=2.0)
            rng = np.random.default_rng(6)
            pts = interior_points(rng, u, 15)
            _, grads, hesses = u.jets(pts)
            # for a = 2, grad u = F* grad F*, so the level through x is the
            # Wulff sphere of radius F*(x)
            from wulffsym.anisotropy import dual_jet
            fv, _ = dual_jet(norm, pts)
            n = 2
            for k in range(n):
                vals, alts = curvature_batch(norm, grads, hesses, k)
                want = math.comb(n - 1, k) / fv ** k
                assert np.allclose(vals, want, rtol=1e-8)
                assert np.allclose(alts, want, rtol=1e-8)

    def test_euclidean_sphere_mean_curvature(self):
        norm = euclidean_norm(3)
        u = radial_power(norm, a=2.0)
        x = np.array([0.3, 0.0, 0.4])  # radius 0.5
        # grad u = x, the level set is the sphere of radius 0.5
        val = level_curvature(norm, u, x, 1)
        assert val == pytest.approx((3 - 1) / 0.5, rel=1e-10)

    def test_both_routes_agree_on_random_quadratics(self):
        rng = np.random.default_rng(7)
        norm = ellipsoid_norm(np.array([[4.0, 0.8], [0.8, 1.0]]))
        u = quadratic_ellipsoid(2, axes=[1.7, 0.8])
        pts = interior_points(rng, u, 100)
        _, grads, hesses = u.jets(pts)
        for k in range(0, 2):
            vals, alts = curvature_batch(norm, grads, hesses, k)
            assert np.max(np.abs(vals - alts) / (1.0 + np.abs(vals))) < 1e-8

    def test_degenerate_gradient_rejected(self):
        norm = euclidean_norm(2)
        u = quadratic_ellipsoid(2)
        with pytest.raises(DegenerateLevelError):
            level_curvature(norm, u, np.zeros(2), 1)

    def test_order_bounds(self):
        norm = euclidean_norm(2)
        u = quadratic_ellipsoid(2)
        with pytest.raises(DomainError):
            level_curvature(norm, u, np.array([0.3, 0.1]), 2)


class TestHessianIntegral:
    def test_disc_closed_forms(self):
        norm = euclidean_norm(2)
        u = quadratic_ellipsoid(2)
        assert hessian_integral(norm, u, 1) == pytest.approx(
            math.pi / 2.0, rel=1e-5)
        assert hessian_integral(norm, u, 2) == pytest.approx(
            math.pi / 4.0, rel=1e-5)

    def test_ellipse_closed_form(self):
        norm = euclidean_norm(2)
        u = quadratic_ellipsoid(2, axes=[2.0, 1.0])
        assert hessian_integral(norm, u, 1) == pytest.approx(
            5.0 * math.pi / 8.0, rel=1e-5)

    def test_coarea_agreement(self):
        norm = euclidean_norm(2)
        disc = quadratic_ellipsoid(2)
        ellipse = quadratic_ellipsoid(2, axes=[2.0, 1.0])
        for u, k, want in ((disc, 1, math.pi / 2), (disc, 2, math.pi / 4),
                           (ellipse, 1, 5 * math.pi / 8)):
            direct = hessian_integral(norm, u, k)
            coarea = hessian_integral_coarea(norm, u, k)
            assert coarea == pytest.approx(want, rel=1e-3)
            assert coarea == pytest.approx(direct, rel=1e-3)

    def test_euclidean_reduction_reference(self):
        # under the euclidean norm S_k of the operator equals the classical
        # Hessian invariant from the symmetric eigenvalue path
        norm = euclidean_norm(2)
        u = quadratic_ellipsoid(2, axes=[1.5, 0.8])
        rng = np.random.default_rng(8)
        pts = interior_points(rng, u, 30)
        _, _, hesses = u.jets(pts)
        for k in range(0, 3):
            got = sk_field_batch(norm, u, pts, k)
            want = np.array([sigma_k(np.linalg.eigvalsh(h), k)
                             for h in hesses])
            assert np.allclose(got, want, atol=1e-12)


class TestGeneralizedIntegral:
    def test_reduces_to_hessian_integral(self):
        # the two sides agree only after integration by parts, so each
        # carries its own quadrature error
        norm = ellipsoid_norm(np.diag([4.0, 1.0]))
        u = quadratic_ellipsoid(2, axes=[2.0, 1.0])
        for k in (1, 2):
            lhs = generalized_integral(norm, u, k, k + 1.0)
            rhs = k * hessian_integral(norm, u, k)
            assert lhs == pytest.approx(rhs, rel=2e-4)

    def test_reduces_to_dirichlet_energy(self):
        # I_{1,2,F} is the F-Dirichlet energy; for this ellipse and norm
        # the closed form is int (x^2/4 + y^2) = pi
        norm = ellipsoid_norm(np.diag([4.0, 1.0]))
        u = quadratic_ellipsoid(2, axes=[2.0, 1.0])
        assert generalized_integral(norm, u, 1, 2.0) == pytest.approx(
            math.pi, rel=1e-8)

    def test_dirichlet_energy_general_exponent(self):
        norm = ellipsoid_norm(np.diag([4.0, 1.0]))
        u = quadratic_ellipsoid(2, axes=[2.0, 1.0])
        p = 3.0

        def dirichlet(pts):
            grads = u.jets(pts)[1]
            return eval_jet(norm, grads)[0] ** p

        from wulffsym.field_ops import polar_integral
        want = polar_integral(norm, u, dirichlet)
        assert generalized_integral(norm, u, 1, p) == pytest.approx(
            want, rel=1e-10)

    def test_radial_closed_form(self):
        # u = (r^a - R^a)/a radial: the energy integral has the closed form
        # n kappa C(n-1,k-1) / (n - k + (a-1)p + 1)
        from wulffsym.anisotropy import wulff_volume
        norm = ellipsoid_norm(np.diag([4.0, 1.0]))
        a, k, p = 3.0, 2, 2.5
        u = radial_power(norm, a=a)
        kap = wulff_volume(norm)
        n = 2
        expo = n - k + (a - 1.0) * p
        want = n * kap * math.comb(n - 1, k - 1) / (expo + 1.0)
        got = generalized_integral(norm, u, k, p)
        assert got == pytest.approx(want, rel=1e-4)


class TestIdentities:
    def test_split_identity(self):
        # S_k(F F_il u_lj) = (1/F) sum S_{k+1}^{ij} u_j F_i
        rng = np.random.default_rng(9)
        norm = ellipsoid_norm(np.array([[3.0, 0.4], [0.4, 1.0]]))
        u = quadratic_ellipsoid(2, axes=[1.2, 0.9])
        pts = interior_points(rng, u, 50)
        _, grads, hesses = u.jets(pts)
        fv, fg, fh = eval_jet(norm, grads)
        b = fv[:, None, None] * (fh @ hesses)
        for k in range(0, 2):
            lhs = _sk_stack(b, k)
            a = aniso_hessian_batch(norm, grads, hesses)
            t = _newton_stack(a, k + 1)
            rhs = np.einsum("...ij,...j,...i->...", t, grads, fg) / fv
            assert np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs))) < 1e-9

    def test_decomposition_identity(self):
        # S_k[u] = S_k(curv) F^k + (1/F) sum S_k^ures F_i u_l A_lj
        rng = np.random.default_rng(10)
        norm = regularized_p_norm(2, 3.0)
        u = quadratic_ellipsoid(2, axes=[1.5, 1.0])
        pts = interior_points(rng, u, 50)
        _, grads, hesses = u.jets(pts)
        fv, fg, _ = eval_jet(norm, grads)
        a = aniso_hessian_batch(norm, grads, hesses)
        for k in (1, 2):
            sk_vals = _sk_stack(a, k)
            curv, _ = curvature_batch(norm, grads, hesses, k) if k <= 1 else (
                None, None)
            if curv is None:
                fh = eval_jet(norm, grads)[2]
                curv = _sk_stack(fh @ hesses, k)
            t = _newton_stack(a, k)
            corr = np.einsum("...ij,...i,...l,...lj->...",
                             t, fg, grads, a) / fv
            rhs = curv * fv ** k + corr
            assert np.max(np.abs(sk_vals - rhs) / (1.0 + np.abs(sk_vals))) < 1e-9

    def test_divergence_free_rows(self):
        # columns of the Newton transform of A are divergence free in x;
        # central differences of sum_j d_j S_k^{ij} decay at second order
        norm = ellipsoid_norm(np.array([[2.0, 0.5], [0.5, 1.2]]))

        def cubic_field(pts):
            x, y = pts[..., 0], pts[..., 1]
            v = 0.5 * (1.3 * x * x + 0.8 * y * y - 1.0) + 0.05 * x * y * y
            gx = 1.3 * x + 0.05 * y * y
            gy = 0.8 * y + 0.1 * x * y
            g = np.stack([gx, gy], axis=-1)
            h = np.empty(pts.shape + (2,))
            h[..., 0, 0] = 1.3
            h[..., 0, 1] = 0.1 * y
            h[..., 1, 0] = 0.1 * y
            h[..., 1, 1] = 0.8 + 0.1 * x
            return v, g, h

        def newton_at(x, k):
            _, g, h = cubic_field(x[None])
            a = aniso_hessian_batch(norm, g, h)
            return _newton_stack(a, k)[0]

        x0 = np.array([0.4, 0.3])
        for k in (1, 2):
            divs = []
            for h in (1e-3, 5e-4):
                div = np.zeros(2)
                for j in range(2):
                    e = np.zeros(2)
                    e[j] = h
                    div += (newton_at(x0 + e, k)[:, j]
                            - newton_at(x0 - e, k)[:, j]) / (2.0 * h)
                divs.append(np.max(np.abs(div)))
            # second-order decay (factor ~4 per halving) or already at the
            # roundoff floor
            assert divs[1] < max(0.3 * divs[0], 1e-8)


class TestAuxiliaries:
    def test_domain_volume(self):
        # indicator quadrature: the boundary band limits accuracy to O(h)
        u = quadratic_ellipsoid(2, axes=[2.0, 1.0])
        assert domain_volume(u) == pytest.approx(2.0 * math.pi, rel=2e-3)

    def test_lp_norm_disc(self):
        # integral of ((1 - |x|^2)/2)^2 over the unit disc = pi/6... times:
        # int (1-r^2)^2/4 r dr dtheta = 2pi * (1/24) = pi/12
        u = quadratic_ellipsoid(2)
        want = (math.pi / 12.0) ** 0.5
        assert lp_norm(u, 2.0) == pytest.approx(want, rel=1e-5)
