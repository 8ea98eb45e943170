"""Dirichlet-Neumann operator: oracles, properties, diagnostics."""

import numpy as np
import pytest
import sympy as sp

from stripwaves.dn import (DNFactory, approximate_extension,
                           capillary_laplacian, commutator_diagnostic,
                           dn_apply, dn_extension, dn_principal, dn_residual,
                           dn_shape_derivative, dn_time_commutator,
                           eta_symbol, extension_defect, principal_symbol,
                           surface_metric, surface_velocity)
from stripwaves.errors import AdmissibilityViolation
from stripwaves.fields import (SurfaceField, from_function,
                               random_band_limited, zeros)
from stripwaves.grid import SpectralGrid
from stripwaves.params import ScaleParams
from stripwaves.spectral import (apply_symbol, apply_symbol_reference, inner,
                                 l2_norm, poisson_weight, scaled_gradient,
                                 sobolev_norm)


@pytest.fixture
def factory(grid, params):
    return DNFactory(grid, params)


@pytest.fixture
def ctx_wavy(factory, grid):
    zeta = from_function(grid, lambda X, Y: 0.05 * np.sin(X))
    return factory.context(zeta)


class TestDNApply:
    def test_constant_potential(self, factory, grid, ctx_wavy):
        c = from_function(grid, lambda X, Y: 0 * X + 3.0)
        assert np.max(np.abs(dn_apply(ctx_wavy, c).values)) < 1e-12

    def test_flat_tanh_oracle(self, factory, grid, params):
        ctx = factory.context(zeros(grid))
        for k in (1, 3, 5):
            psi = from_function(grid, lambda X, Y: np.cos(k * X))
            lam = params.sqrt_mu * k
            expected = lam * np.tanh(lam) * np.cos(k * grid.X)
            out = dn_apply(ctx, psi)
            assert np.max(np.abs(out.values - expected)) < 1e-12

    def test_self_adjointness(self, ctx_wavy, grid):
        u = random_band_limited(grid, 1, kmax=5)
        v = random_band_limited(grid, 2, kmax=5)
        s1 = inner(u, dn_apply(ctx_wavy, v))
        s2 = inner(v, dn_apply(ctx_wavy, u))
        assert abs(s1 - s2) <= 1e-9 * l2_norm(u) * l2_norm(v)

    def test_positivity_and_ratio(self, ctx_wavy, grid, params):
        pw = poisson_weight(grid, params)
        for seed in range(8):
            u = random_band_limited(grid, 100 + seed, kmax=5)
            quad = inner(u, dn_apply(ctx_wavy, u)) / params.epsilon
            assert quad >= 0
            pu = np.fft.ifft2(pw * np.fft.fft2(u.values)).real
            pn = l2_norm(SurfaceField(pu, grid)) ** 2
            assert 0.1 < quad / pn < 10.0

    def test_cauchy_schwarz(self, ctx_wavy, grid):
        u = random_band_limited(grid, 31, kmax=5)
        v = random_band_limited(grid, 32, kmax=5)
        guu = inner(u, dn_apply(ctx_wavy, u))
        gvv = inner(v, dn_apply(ctx_wavy, v))
        guv = abs(inner(u, dn_apply(ctx_wavy, v)))
        assert guv <= np.sqrt(guu * gvv) * (1 + 1e-8)

    def test_zero_mean(self, ctx_wavy, grid):
        psi = random_band_limited(grid, 41, kmax=5)
        out = dn_apply(ctx_wavy, psi)
        assert abs(np.mean(out.values)) < 1e-9 * l2_norm(psi)

    def test_green_identity_strip_energy(self, ctx_wavy, grid, params):
        # (phi, G psi) equals the strip energy of the two extensions
        from stripwaves.elliptic import strip_energy
        psi = random_band_limited(grid, 51, kmax=4)
        phi = random_band_limited(grid, 52, kmax=4)
        upsi = dn_extension(ctx_wavy, psi)
        uphi = dn_extension(ctx_wavy, phi)
        lhs = inner(phi, dn_apply(ctx_wavy, psi))
        rhs = strip_energy(ctx_wavy.transform, upsi.values, uphi.values)
        assert abs(lhs - rhs) < 1e-7 * max(abs(lhs), 1.0)

    def test_bottom_topography(self, factory, grid, params):
        # a bottom bump changes the operator (and stays self-adjoint)
        b = from_function(grid, lambda X, Y: 0.3 * np.cos(X))
        fac_b = DNFactory(grid, params, b=b)
        ctx_b = fac_b.context(zeros(grid))
        psi = from_function(grid, lambda X, Y: np.cos(X))
        flat = dn_apply(factory.context(zeros(grid)), psi)
        bumpy = dn_apply(ctx_b, psi)
        assert np.max(np.abs(flat.values - bumpy.values)) > 1e-4
        u = random_band_limited(grid, 61, kmax=5)
        v = random_band_limited(grid, 62, kmax=5)
        assert abs(inner(u, dn_apply(ctx_b, v))
                   - inner(v, dn_apply(ctx_b, u))) \
            <= 1e-9 * l2_norm(u) * l2_norm(v)

    def test_admissibility_propagates(self, factory, grid):
        bad = from_function(grid, lambda X, Y: -12.0 + 0 * X)
        with pytest.raises(AdmissibilityViolation):
            factory.context(bad)


class TestPrincipal:
    def test_flat_reduction(self, factory, grid, params):
        ctx = factory.context(zeros(grid))
        psi = from_function(grid, lambda X, Y: np.cos(4 * X))
        out = dn_principal(ctx, psi)
        expected = params.sqrt_mu * 4 * np.cos(4 * grid.X)
        assert np.max(np.abs(out.values - expected)) < 1e-12

    def test_two_quantization_paths(self, ctx_wavy, grid, params):
        psi = from_function(grid, lambda X, Y: np.cos(8 * X))
        sym = principal_symbol(ctx_wavy)
        fast = apply_symbol(sym, psi, params)
        slow = apply_symbol_reference(sym, psi, params)
        assert np.max(np.abs(fast.values - slow.values)) < 1e-10

    def test_symbol_homogeneity(self, ctx_wavy):
        defect = principal_symbol(ctx_wavy).homogeneity_defect()
        assert defect < 10.0

    def test_flat_residual_closed_form(self, factory, grid, params):
        ctx = factory.context(zeros(grid))
        k = 3
        psi = from_function(grid, lambda X, Y: np.cos(k * X))
        lam = params.sqrt_mu * k
        expected = lam * (np.tanh(lam) - 1.0) * np.cos(k * grid.X)
        out = dn_residual(ctx, psi)
        assert np.max(np.abs(out.values - expected)) < 1e-12

    def test_residual_high_mode_decay(self, factory, grid, params):
        # |R| on a single mode cos(kx) decays once sqrt(eps) k >= 2
        ctx = factory.context(zeros(grid))
        norms = []
        for k in (7, 10, 13):
            psi = from_function(grid, lambda X, Y: np.cos(k * X))
            norms.append(l2_norm(dn_residual(ctx, psi)))
        assert norms[0] > norms[1] > norms[2]

    def test_residual_scaling_sweep(self):
        grid = SpectralGrid(8 * np.pi, 8 * np.pi, 48, 24, 12)
        zeta = from_function(grid, lambda X, Y: 0.05 * np.sin(X / 4.0))
        psi = random_band_limited(grid, 5, kmax=4)
        ratios = []
        for eps in (0.2, 0.1, 0.05):
            p = ScaleParams.standard(eps, 0.5)
            ctx = DNFactory(grid, p).context(zeta)
            r = dn_residual(ctx, psi)
            ratios.append(sobolev_norm(r, 0, "h_eps", p) / np.sqrt(eps))
        assert max(ratios) / min(ratios) < 2.0


class TestShapeDerivative:
    def test_zero_direction(self, ctx_wavy, grid):
        psi = random_band_limited(grid, 71, kmax=4)
        out = dn_shape_derivative(ctx_wavy, psi, zeros(grid))
        assert np.max(np.abs(out.values)) < 1e-12

    def test_constant_potential(self, ctx_wavy, grid):
        c = from_function(grid, lambda X, Y: 0 * X + 2.0)
        h = random_band_limited(grid, 72, kmax=4)
        out = dn_shape_derivative(ctx_wavy, c, h)
        assert np.max(np.abs(out.values)) < 1e-11

    def test_taylor_remainder_ratio(self, factory, grid, params):
        # products of (psi, h, zeta-harmonics) must stay inside the band
        # for the discrete derivative to match the continuum formula
        zeta = from_function(grid, lambda X, Y: 0.05 * np.sin(X))
        ctx = factory.context(zeta)
        psi = random_band_limited(grid, 73, kmax=3)
        h = random_band_limited(grid, 74, kmax=3)
        g0 = dn_apply(ctx, psi)
        dG = dn_shape_derivative(ctx, psi, h, g0)
        rems = []
        for delta in (1e-3, 5e-4):
            zd = SurfaceField(zeta.values + delta * h.values, grid)
            gd = dn_apply(factory.context(zd), psi)
            rems.append(l2_norm(gd - g0 - delta * dG))
        assert 3.5 < rems[0] / rems[1] < 4.5

    def test_velocity_fields_flat(self, factory, grid, params):
        # flat surface: Z = G psi and v = grad psi
        ctx = factory.context(zeros(grid))
        psi = from_function(grid, lambda X, Y: np.cos(2 * X))
        Z, v1, v2 = surface_velocity(ctx, psi)
        g = dn_apply(ctx, psi)
        assert np.allclose(Z.values, g.values, atol=1e-13)
        px, py = scaled_gradient(psi, params)
        assert np.allclose(v1.values, px.values, atol=1e-13)
        assert np.allclose(v2.values, py.values, atol=1e-13)


class TestCapillaryOperator:
    def test_constant_coefficient(self, grid, params):
        a = from_function(grid, lambda X, Y: 0 * X + 1.7)
        f = from_function(grid, lambda X, Y: np.cos(2 * X + Y))
        out = capillary_laplacian(a, f, params, power=1)
        ksq = 4.0 + params.epsilon * 1.0
        assert np.allclose(out.values, ksq * f.values, atol=1e-11)

    def test_constant_field(self, grid, params):
        a = random_band_limited(grid, 81, kmax=4)
        f = from_function(grid, lambda X, Y: 0 * X + 5.0)
        out = capillary_laplacian(a, f, params, power=2)
        assert np.max(np.abs(out.values)) < 1e-11

    def test_pointwise_symbolic_oracle(self, grid):
        # a = 0.1 sin x, f = cos 2x, k = 1, eps = 0.1: evaluate the
        # displayed operator term-by-term with sympy at sample points
        params = ScaleParams.standard(0.1, 0.5)
        eps = params.epsilon
        x = sp.symbols("x", real=True)
        a_s = sp.Rational(1, 10) * sp.sin(x)
        f_s = sp.cos(2 * x)
        ax = sp.diff(a_s, x)
        rho2 = 1 + eps ** 3 * ax ** 2
        # d(a) f = |D|^2 f - eps^3 (ax^2 Dx^2 f) / rho2, y-independent
        expr = -sp.diff(f_s, x, 2) - eps ** 3 * ax ** 2 \
            * (-sp.diff(f_s, x, 2)) / rho2
        oracle = sp.lambdify(x, expr, "numpy")

        a = from_function(grid, lambda X, Y: 0.1 * np.sin(X))
        f = from_function(grid, lambda X, Y: np.cos(2 * X))
        out = capillary_laplacian(a, f, params, power=1)
        rng = np.random.default_rng(3)
        for _ in range(5):
            i, j = rng.integers(grid.Nx), rng.integers(grid.Ny)
            assert abs(out.values[i, j] - oracle(grid.x[i])) < 1e-10

    def test_metric_factor(self, grid, params):
        zeta = from_function(grid, lambda X, Y: 0.2 * np.sin(X))
        rho = surface_metric(zeta, params)
        assert np.all(rho.values >= 1.0)
        expected = np.sqrt(1.0 + params.epsilon ** 3
                           * (0.2 * np.cos(grid.X)) ** 2)
        assert np.allclose(rho.values, expected, atol=1e-12)


class TestCommutators:
    def test_flat_multipliers_commute(self, factory, grid):
        ctx = factory.context(zeros(grid))
        u = random_band_limited(grid, 91, kmax=5)
        rep = commutator_diagnostic(ctx, u, k=1, which="raw")
        assert rep["norm"] < 1e-10

    def test_constant_field(self, ctx_wavy, grid):
        u = from_function(grid, lambda X, Y: 0 * X + 2.0)
        rep = commutator_diagnostic(ctx_wavy, u, k=1, which="raw")
        assert rep["norm"] < 1e-10

    def test_scaling_sweep(self):
        grid = SpectralGrid(8 * np.pi, 8 * np.pi, 48, 24, 12)
        zeta = from_function(grid, lambda X, Y: 0.05 * np.sin(X / 4.0))
        u = random_band_limited(grid, 15, kmax=4)
        raw, wtd = [], []
        for eps in (0.2, 0.1, 0.05):
            p = ScaleParams.standard(eps, 0.5)
            ctx = DNFactory(grid, p).context(zeta)
            raw.append(commutator_diagnostic(ctx, u, 1, "raw")["ratio"])
            wtd.append(commutator_diagnostic(ctx, u, 1,
                                             "rho_weighted")["ratio"])
        assert max(raw) / min(raw) < 2.0
        assert max(wtd) / min(wtd) < 2.0

    def test_time_commutator(self, factory, grid, params):
        u = random_band_limited(grid, 95, kmax=4)
        z1 = from_function(grid, lambda X, Y: 0.05 * np.sin(X))
        ctx1 = factory.context(z1)
        assert dn_time_commutator(ctx1, ctx1, u)["quad"] == 0.0
        zero = zeros(grid)
        assert dn_time_commutator(ctx1, factory.context(
            from_function(grid, lambda X, Y: 0.06 * np.sin(X))),
            zero)["quad"] == 0.0
        # dt-refinement: the ratio is stable as the surface step shrinks
        ratios = []
        for dt in (1e-2, 5e-3):
            z2 = SurfaceField(z1.values * (1.0 + dt), grid)
            rep = dn_time_commutator(ctx1, factory.context(z2), u)
            ratios.append(rep["ratio"])
        assert abs(ratios[0] - ratios[1]) < 0.1 * abs(ratios[0])


class TestApproximateExtension:
    def test_eta_symbols_flat(self, factory, grid, params):
        # with sigma = 0: eta_pm = +- sqrt(mu)|xi|
        ctx = factory.context(zeros(grid))
        sym = eta_symbol(ctx, -0.5, sign=+1)
        val = sym.values(1.0, 2.0, extra_axis=False)
        expected = params.sqrt_mu * np.hypot(1.0, 2.0)
        assert np.allclose(val, expected, atol=1e-13)
        assert sym.homogeneity_defect() < 1.0 + 1e-9

    def test_flat_extension_profile(self, factory, params):
        # flat approximate extension is exp(z sqrt(mu)|k|) per mode, which
        # differs from the cosh profile by the bottom reflection only
        g = SpectralGrid(2 * np.pi, 2 * np.pi, 16, 8, 8)
        ctx = DNFactory(g, params).context(zeros(g))
        u = from_function(g, lambda X, Y: np.cos(3 * X))
        appr = approximate_extension(ctx, u, n_quad=8)
        lam = params.sqrt_mu * 3
        for j, z in enumerate(g.z):
            expected = np.exp(lam * z) * np.cos(3 * g.X)
            assert np.max(np.abs(appr.values[:, :, j] - expected)) < 1e-10

    def test_defect_small_for_gentle_surface(self, params):
        g = SpectralGrid(2 * np.pi, 2 * np.pi, 16, 8, 10)
        zeta = from_function(g, lambda X, Y: 0.05 * np.sin(X))
        ctx = DNFactory(g, params).context(zeta)
        u = from_function(g, lambda X, Y: np.cos(3 * X))
        rep = extension_defect(ctx, u)
        # the construction matches the true extension away from the
        # bottom reflection; the energy gap stays well below 100%
        assert rep["relative"] < 0.5
        assert rep["defect_vertical"] <= rep["defect_energy"] + 1e-12
