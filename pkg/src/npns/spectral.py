"""Spectral core: grid, transforms, and Fourier-side operators.

Fields live on the 2*pi-periodic square, sampled on an M x M collocation
grid.  A spectral scalar is a complex (M, M) array of Fourier coefficients
f_k in numpy fft layout, under the convention

    f(x) = sum_k f_k exp(i k.x),   f_k = (2*pi)^-2 int f(x) exp(-i k.x) dx,

so coefficients relate to numpy transforms by f_k = fft2(samples) / M^2.
Vector fields stack two scalars along a leading axis, shape (2, M, M).
All operators are pure functions; Grid holds only precomputed read-only
wavenumber arrays, so instances can be shared freely across threads.
"""

import numpy as np

from .errors import ConfigError, InvalidFieldError, SolvabilityError

HERMITIAN_TOL = 1e-10
MEAN_TOL = 1e-10
DIV_TOL = 1e-8


class Grid:
    """Collocation grid and precomputed wavenumber arrays.

    Args:
        m: number of collocation points per direction, even and >= 8.
    """

    def __init__(self, m):
        if m % 2 != 0 or m < 8:
            raise ConfigError(f"grid resolution must be even and >= 8, got {m}")
        self.m = m
        k = np.concatenate([np.arange(0, m // 2), np.arange(-m // 2, 0)])
        self.kx = k.reshape(m, 1).astype(float)
        self.ky = k.reshape(1, m).astype(float)
        self.k_squared = self.kx**2 + self.ky**2
        self.k_squared_safe = self.k_squared.copy()
        self.k_squared_safe[0, 0] = 1.0
        # Nyquist wavenumber zeroed for odd derivatives so that real fields
        # stay real under differentiation
        self.kx_diff = self.kx.copy()
        self.kx_diff[m // 2, 0] = 0.0
        self.ky_diff = self.ky.copy()
        self.ky_diff[0, m // 2] = 0.0
        self.dealias_radius = m // 3
        self.dealias_mask = (np.abs(self.kx) <= self.dealias_radius) & (
            np.abs(self.ky) <= self.dealias_radius
        )
        x = 2.0 * np.pi * np.arange(m) / m
        self.x1 = x.reshape(m, 1) * np.ones((1, m))
        self.x2 = np.ones((m, 1)) * x.reshape(1, m)
        neg = (-np.arange(m)) % m
        self._neg = neg
        self._neg_ix = np.ix_(neg, neg)
        for arr in (
            self.kx, self.ky, self.k_squared, self.k_squared_safe,
            self.kx_diff, self.ky_diff, self.dealias_mask, self.x1, self.x2,
        ):
            arr.setflags(write=False)

    def __repr__(self):
        return f"Grid(m={self.m})"


def hermitian_defect(f_hat, grid):
    """Max deviation of f from conjugate symmetry f(-k) = conj(f(k))."""
    mirrored = f_hat[..., grid._neg_ix[0], grid._neg_ix[1]]
    return np.max(np.abs(f_hat - np.conj(mirrored)))


def require_hermitian(f_hat, grid):
    scale = max(np.max(np.abs(f_hat)), 1e-300)
    defect = hermitian_defect(f_hat, grid)
    if defect > HERMITIAN_TOL * scale:
        raise InvalidFieldError(
            f"field is not conjugate-symmetric: defect {defect:.3e} "
            f"exceeds {HERMITIAN_TOL:.0e} * {scale:.3e}"
        )


def to_physical(f_hat, grid, check=True):
    """Inverse transform to collocation samples. Accepts leading batch axes."""
    if f_hat.shape[-2:] != (grid.m, grid.m):
        raise InvalidFieldError(
            f"field shape {f_hat.shape} does not match grid m={grid.m}"
        )
    if check:
        require_hermitian(f_hat, grid)
    return np.fft.ifft2(f_hat).real * grid.m**2


def to_spectral(f_phys, grid):
    """Forward transform of real collocation samples.

    The result is projected onto the conjugate-symmetric subspace, so the
    coefficients of a real field are exactly Hermitian rather than merely
    Hermitian up to FFT rounding.  Every linear operator in this module
    commutes exactly with that symmetry, which keeps evolved states exactly
    real even when a field collapses to the rounding floor (for instance a
    velocity whose forcing is a pure gradient).
    """
    g = np.fft.fft2(f_phys) / grid.m**2
    reflected = np.conj(np.take(np.take(g, grid._neg, axis=-2), grid._neg, axis=-1))
    return 0.5 * (g + reflected)


def gradient(f_hat, grid):
    """Spectral gradient of a scalar, returned as a (2, M, M) vector."""
    return np.stack([1j * grid.kx_diff * f_hat, 1j * grid.ky_diff * f_hat])


def perp_gradient(psi_hat, grid):
    """Rotated gradient (-d2 psi, d1 psi); always divergence-free."""
    return np.stack([-1j * grid.ky_diff * psi_hat, 1j * grid.kx_diff * psi_hat])


def divergence(v_hat, grid):
    return 1j * grid.kx_diff * v_hat[0] + 1j * grid.ky_diff * v_hat[1]


def require_divergence_free(v_hat, grid):
    """Raise unless k.v_k vanishes at the working precision."""
    div = grid.kx * v_hat[0] + grid.ky * v_hat[1]
    scale = max(np.max(np.abs(v_hat)), 1e-300)
    worst = np.max(np.abs(div))
    if worst > DIV_TOL * scale * grid.m:
        raise InvalidFieldError(
            f"expected a divergence-free field; max |k . v_k| = {worst:.3e} "
            f"against coefficient scale {scale:.3e}"
        )


def laplacian(f_hat, grid):
    return -grid.k_squared * f_hat


def leray_project(v_hat, grid):
    """Project a vector field onto divergence-free fields; mode 0 passes through.

    The output is assembled as k-perp times a stream coefficient rather
    than by subtracting the gradient part, so its divergence vanishes at
    the scale of the output itself even when the projection cancels the
    input almost completely.
    """
    stream = (grid.kx * v_hat[1] - grid.ky * v_hat[0]) / grid.k_squared_safe
    out = np.stack([-grid.ky * stream, grid.kx * stream])
    out[:, 0, 0] = v_hat[:, 0, 0]
    return out


def poisson_solve(rho_hat, grid):
    """Solve -lap(phi) = rho for zero-mean rho; the solution has zero mean."""
    mean = abs(rho_hat[0, 0])
    if mean > MEAN_TOL:
        raise SolvabilityError(
            f"Poisson right-hand side has mean coefficient {mean:.3e}; "
            "a periodic solution needs a zero-mean source"
        )
    phi = rho_hat / grid.k_squared_safe
    phi[0, 0] = 0.0
    return phi


def dealias(f_hat, grid):
    """Zero every mode with max(|k1|, |k2|) beyond the two-thirds radius."""
    return f_hat * grid.dealias_mask


def l2_norm(f_hat, grid):
    """L2 norm by Parseval; vector input sums component norms squared."""
    return 2.0 * np.pi * np.sqrt(np.sum(np.abs(f_hat) ** 2))


def sobolev_norm(f_hat, grid, s):
    """H^s norm with weight (1+|k|^2)^s; components of a vector are summed."""
    weight = (1.0 + grid.k_squared) ** s
    return 2.0 * np.pi * np.sqrt(np.sum(weight * np.abs(f_hat) ** 2))


def lp_norm(f_hat, grid, p):
    """L^p norm by collocation quadrature, p in {1, 2, 3, inf}."""
    if p not in (1, 2, 3, np.inf):
        raise ConfigError(f"unsupported Lebesgue exponent {p}")
    f = to_physical(f_hat, grid)
    if np.ndim(f) == 3:
        mag = np.sqrt(np.sum(f**2, axis=0))
    else:
        mag = np.abs(f)
    if p == np.inf:
        return float(np.max(mag))
    cell = (2.0 * np.pi / grid.m) ** 2
    return float((np.sum(mag**p) * cell) ** (1.0 / p))


def inner_product(f_hat, g_hat, grid):
    """Real L2 pairing of two fields (scalar or vector alike)."""
    return float(
        (2.0 * np.pi) ** 2 * np.real(np.sum(f_hat * np.conj(g_hat)))
    )


def mean_value(f_hat):
    """Spatial mean, i.e. the mode-0 coefficient."""
    return float(np.real(f_hat[..., 0, 0]))


def random_band_scalar(grid, rng, kmax, zero_mean=True):
    """Random real scalar supported on modes with max(|k1|,|k2|) <= kmax."""
    if kmax > grid.m // 2 - 1:
        raise ConfigError(f"band limit {kmax} too large for grid m={grid.m}")
    g = rng.normal(size=(grid.m, grid.m)) + 1j * rng.normal(size=(grid.m, grid.m))
    band = (np.abs(grid.kx) <= kmax) & (np.abs(grid.ky) <= kmax)
    g = g * band
    f = 0.5 * (g + np.conj(g[grid._neg_ix]))
    if zero_mean:
        f[0, 0] = 0.0
    else:
        f[0, 0] = f[0, 0].real
    return f
