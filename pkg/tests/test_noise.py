"""Tests for the transport-noise model.

Hand-derived reference values, frozen before implementation:

  * Shell N=1, gamma=1 on the integer lattice: modes with 1 <= |k| <= 2
    have |k|^2 in {1, 2, 4}, four modes each, so 12 modes total and
    Lambda^2 = 4*1 + 4*(1/2) + 4*(1/4) = 7, giving zeta_(1,0) = 7^{-1/2}.
  * The coefficient direction at k=(1,0) is k_perp/|k| = (0,1).
  * Mean of ||dV||_{L2}^2 / dt: the increment has coefficient
    sqrt(2 kappa) zeta_k a_k dW^k at mode k with E|dW^k|^2 = 2 dt, so
    Parseval gives (2 pi)^2 * 2 kappa * sum zeta^2 * 2 = 4 kappa (2 pi)^2.
  * The scalar Ito corrector equals kappa*lap(c) exactly for any shell,
    because sum_k zeta_k^2 (a_k . l)^2 = |l|^2 / 2 by the 90-degree
    rotation symmetry of the shell.  The brute-force oracle below builds
    the corrector from the real noise fields 2 a_k cos(k.x), -2 a_k sin(k.x)
    scaled by sqrt(2 kappa) zeta_k, as (1/2) sum_j (v_j . grad)^2 c.
  * One plain Euler step c -> c + dt*kappa*lap(c) + div(dV c) changes
    E||c||^2 by exactly kappa^2 dt^2 ||lap c||^2 when no dealiasing loss
    occurs, since E||div(dV c)||^2 = 2 kappa dt ||grad c||^2 cancels the
    cross term's dissipation at first order.
"""

import numpy as np
import pytest

from npns.errors import ConfigError, InvalidFieldError
from npns.noise import (
    NoiseBasis,
    NoiseSpec,
    build_noise_basis,
    concentration_corrector,
    corrector_bound_report,
    corrector_residual,
    sample_increment,
    velocity_corrector,
    velocity_corrector_direct,
)
from npns.spectral import (
    Grid,
    divergence,
    gradient,
    l2_norm,
    laplacian,
    leray_project,
    perp_gradient,
    random_band_scalar,
    to_physical,
    to_spectral,
)


def shell_basis(m=32, kappa=1.0, n=1, gamma=1.0):
    return build_noise_basis(NoiseSpec(kappa=kappa, shell=n, gamma=gamma), Grid(m))


class TestNoiseSpec:
    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            NoiseSpec(kappa=-1.0, shell=1)
        with pytest.raises(ConfigError):
            NoiseSpec(kappa=1.0, shell=0)
        with pytest.raises(ConfigError):
            NoiseSpec(kappa=1.0, shell=1, gamma=0.0)

    def test_shell_must_fit_dealias_radius(self):
        # m=32 keeps modes up to 10; 2N=12 does not fit
        with pytest.raises(ConfigError):
            build_noise_basis(NoiseSpec(kappa=1.0, shell=6), Grid(32))
        build_noise_basis(NoiseSpec(kappa=1.0, shell=5), Grid(32))


class TestBasisConstruction:
    def test_smallest_shell_by_hand(self):
        basis = shell_basis()
        assert basis.modes.shape[0] == 12
        assert abs(basis.lambda_val - np.sqrt(7.0)) < 1e-14
        idx = basis.mode_index(1, 0)
        assert abs(basis.zeta[idx] - 7.0 ** -0.5) < 1e-14
        assert np.allclose(basis.a[idx], [0.0, 1.0])

    def test_weights_sum_to_one(self):
        for n, gamma in ((1, 1.0), (3, 1.5), (5, 0.7)):
            basis = shell_basis(m=64, n=n, gamma=gamma)
            assert abs(np.sum(basis.zeta**2) - 1.0) < 1e-13

    def test_directions_are_unit_and_orthogonal(self):
        basis = shell_basis(m=64, n=4)
        dots = np.sum(basis.a * basis.modes, axis=1)
        norms = np.sum(basis.a**2, axis=1)
        assert np.max(np.abs(dots)) < 1e-14
        assert np.max(np.abs(norms - 1.0)) < 1e-14

    def test_conjugate_pair_symmetry(self):
        # a_{-k} = a_k and zeta_{-k} = zeta_k make the sampled field real
        basis = shell_basis(m=64, n=3)
        for i, k in enumerate(basis.modes):
            j = basis.mode_index(-k[0], -k[1])
            assert np.allclose(basis.a[j], basis.a[i])
            assert basis.zeta[j] == basis.zeta[i]

    def test_shell_bounds(self):
        basis = shell_basis(m=64, n=4)
        mag = np.sqrt(np.sum(basis.modes.astype(float) ** 2, axis=1))
        assert np.all(mag >= 4.0 - 1e-12)
        assert np.all(mag <= 8.0 + 1e-12)


class TestIncrements:
    def test_increment_field_structure(self):
        basis = shell_basis(m=32, kappa=2.0, n=2)
        grid = basis.grid
        rng = np.random.default_rng(42)
        for _ in range(5):
            dv = sample_increment(basis, 1e-2, rng)
            # realness: to_physical validates conjugate symmetry
            to_physical(dv, grid)
            assert l2_norm(divergence(dv, grid), grid) < 1e-12 * l2_norm(dv, grid)
            mag2 = grid.k_squared
            outside = (mag2 < 4.0 - 1e-9) | (mag2 > 16.0 + 1e-9)
            assert np.max(np.abs(dv[:, outside])) == 0.0

    def test_increment_energy_matches_closed_form(self):
        kappa = 0.8
        basis = shell_basis(m=8, kappa=kappa, n=1)
        grid = basis.grid
        rng = np.random.default_rng(7)
        dt = 2e-3
        draws = 100_000
        total = 0.0
        for _ in range(draws):
            dv = sample_increment(basis, dt, rng)
            total += np.sum(np.abs(dv) ** 2)
        mean = (2.0 * np.pi) ** 2 * total / draws / dt
        expected = 4.0 * kappa * (2.0 * np.pi) ** 2
        assert abs(mean / expected - 1.0) < 0.02

    def test_zero_kappa_increment_is_zero(self):
        basis = shell_basis(m=32, kappa=0.0, n=1)
        rng = np.random.default_rng(0)
        dv = sample_increment(basis, 1e-3, rng)
        assert np.max(np.abs(dv)) == 0.0


def real_noise_fields(basis):
    """Physical-space real noise fields, two per conjugate pair.

    For pair representative k these are sqrt(2 kappa) zeta_k * 2 a_k cos(k.x)
    and -sqrt(2 kappa) zeta_k * 2 a_k sin(k.x); independent oracle used for
    brute-force corrector sums.
    """
    grid = basis.grid
    kappa = basis.spec.kappa
    fields = []
    for k, zeta, a in zip(basis.pair_modes, basis.pair_zeta, basis.pair_a):
        phase = k[0] * grid.x1 + k[1] * grid.x2
        amp = np.sqrt(2.0 * kappa) * zeta * 2.0
        fields.append(np.stack([amp * a[0] * np.cos(phase), amp * a[1] * np.cos(phase)]))
        fields.append(np.stack([-amp * a[0] * np.sin(phase), -amp * a[1] * np.sin(phase)]))
    return fields


def advect_physical(v_phys, f_hat, grid):
    """v . grad(f) for physical v and spectral f, alias-free by band margin."""
    g = gradient(f_hat, grid)
    gx = to_physical(g[0], grid, check=False)
    gy = to_physical(g[1], grid, check=False)
    return to_spectral(v_phys[0] * gx + v_phys[1] * gy, grid)


class TestConcentrationCorrector:
    def test_equals_kappa_laplacian(self):
        basis = shell_basis(m=32, kappa=0.7)
        grid = basis.grid
        c = random_band_scalar(grid, np.random.default_rng(3), 5)
        out = concentration_corrector(c, grid, 0.7)
        assert np.max(np.abs(out - 0.7 * laplacian(c, grid))) < 1e-14

    def test_matches_brute_force_sum(self):
        # (1/2) sum_j (v_j . grad)^2 c over the real noise fields
        kappa = 0.7
        basis = shell_basis(m=32, kappa=kappa, n=1)
        grid = basis.grid
        c = random_band_scalar(grid, np.random.default_rng(5), 5)
        acc = np.zeros_like(c)
        for v in real_noise_fields(basis):
            once = advect_physical(v, c, grid)
            acc += advect_physical(v, once, grid)
        oracle = 0.5 * acc
        out = concentration_corrector(c, grid, kappa)
        scale = np.max(np.abs(out))
        assert np.max(np.abs(out - oracle)) < 1e-8 * scale


def random_divfree(grid, rng, kmax):
    return perp_gradient(random_band_scalar(grid, rng, kmax), grid)


class TestVelocityCorrector:
    def test_fast_matches_literal(self):
        basis = shell_basis(m=32, kappa=1.3, n=1)
        grid = basis.grid
        rng = np.random.default_rng(11)
        for _ in range(3):
            u = random_divfree(grid, rng, 8)
            fast = velocity_corrector(u, basis)
            direct = velocity_corrector_direct(u, basis)
            scale = max(np.max(np.abs(fast)), 1e-300)
            assert np.max(np.abs(fast - direct)) < 1e-10 * scale

    def test_linear(self):
        basis = shell_basis(m=32, n=2)
        grid = basis.grid
        rng = np.random.default_rng(13)
        u = random_divfree(grid, rng, 6)
        v = random_divfree(grid, rng, 6)
        lhs = velocity_corrector(u + 2.0 * v, basis)
        rhs = velocity_corrector(u, basis) + 2.0 * velocity_corrector(v, basis)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(lhs))

    def test_output_divergence_free_and_projected(self):
        basis = shell_basis(m=32, n=2)
        grid = basis.grid
        u = random_divfree(grid, np.random.default_rng(17), 6)
        s = velocity_corrector(u, basis)
        assert l2_norm(divergence(s, grid), grid) < 1e-12 * l2_norm(s, grid)
        assert np.max(np.abs(leray_project(s, grid) - s)) < 1e-13 * np.max(np.abs(s))

    def test_rejects_divergent_input(self):
        basis = shell_basis(m=32, n=1)
        grid = basis.grid
        w = np.stack(
            [
                random_band_scalar(grid, np.random.default_rng(19), 4),
                random_band_scalar(grid, np.random.default_rng(20), 4),
            ]
        )
        with pytest.raises(InvalidFieldError):
            velocity_corrector(w, basis)

    def test_preserves_hermitian_symmetry(self):
        basis = shell_basis(m=32, n=2)
        u = random_divfree(basis.grid, np.random.default_rng(23), 6)
        s = velocity_corrector(u, basis)
        to_physical(s, basis.grid)  # raises on symmetry violation


class TestCorrectorResidual:
    def test_residual_definition(self):
        basis = shell_basis(m=32, kappa=2.0, n=2)
        grid = basis.grid
        u = random_divfree(grid, np.random.default_rng(29), 6)
        res = corrector_residual(u, basis)
        expected = velocity_corrector(u, basis) - 0.5 * laplacian(u, grid)
        assert np.max(np.abs(res - expected)) < 1e-12 * np.max(np.abs(expected))

    def test_bound_report_zero_input(self):
        basis = shell_basis(m=32, n=2)
        u = np.zeros((2, 32, 32), dtype=complex)
        assert corrector_bound_report(u, basis, s=1.0, alpha=1.0) == 0.0

    def test_residual_shrinks_with_shell_index(self):
        # same velocity field, growing shell: the normalized defect against
        # (kappa/4)*lap stays bounded and the raw defect shrinks
        grid = Grid(96)
        u = random_divfree(grid, np.random.default_rng(31), 6)
        errs = []
        for n in (4, 8, 16):
            basis = build_noise_basis(NoiseSpec(kappa=1.0, shell=n), grid)
            res = corrector_residual(u, basis)
            errs.append(l2_norm(res, grid))
        assert errs[1] < errs[0]
        assert errs[2] < errs[1]


class TestOneStepEnergyBalance:
    def test_mean_energy_change_is_second_order(self):
        # Euler step with corrector drift + transport increment; expectation
        # of the L2 energy change must equal kappa^2 dt^2 ||lap c||^2
        kappa = 1.0
        basis = shell_basis(m=32, kappa=kappa, n=1)
        grid = basis.grid
        c = random_band_scalar(grid, np.random.default_rng(37), 3)
        c /= l2_norm(c, grid)
        rng = np.random.default_rng(41)
        lap_c = laplacian(c, grid)
        c_phys = to_physical(c, grid)
        for dt in (0.1, 0.05):
            base = c + dt * kappa * lap_c
            deltas = np.empty(3000)
            for i in range(deltas.size):
                dv = sample_increment(basis, dt, rng)
                dvx = to_physical(dv[0], grid, check=False)
                dvy = to_physical(dv[1], grid, check=False)
                flux = np.stack(
                    [to_spectral(dvx * c_phys, grid), to_spectral(dvy * c_phys, grid)]
                )
                cp = base + divergence(flux, grid)
                deltas[i] = l2_norm(cp, grid) ** 2 - l2_norm(c, grid) ** 2
            expected = (kappa * dt) ** 2 * l2_norm(lap_c, grid) ** 2
            stderr = np.std(deltas) / np.sqrt(deltas.size)
            assert abs(np.mean(deltas) - expected) < 4.0 * stderr
            # and the change really is O(dt^2), not O(dt)
            assert abs(np.mean(deltas)) < 10.0 * expected
