"""Fourier-shell transport noise: basis, increments, Ito correctors.

The driving field is W(t,x) = sqrt(2 kappa) sum_k zeta_k a_k e^{i k.x} W^k(t)
over the lattice shell N <= |k| <= 2N, with complex Brownian motions paired
by conjugation, conj(W^k) = W^{-k}.  The weights zeta_k = |k|^{-gamma} /
Lambda_N are normalized so that sum_k zeta_k^2 = 1, and the directions
a_k = +/- k_perp / |k| are chosen constant on conjugate pairs (a_{-k} = a_k),
which is exactly the condition that makes every sampled field real.

Correctors: for scalars the Ito-Stratonovich drift is kappa*lap(c) exactly,
for any shell, by the 90-degree rotation symmetry of the lattice shell.  For
the velocity the corrector is

    S(u) = 2 kappa sum_k zeta_k^2 P[sigma_k . grad P(sigma_{-k} . grad u)],

where P is the Leray projection.  In Fourier variables S is diagonal: mode l
is multiplied by the 2x2 block

    B_l = -2 kappa sum_k zeta_k^2 (a_k . l)^2 P_l P_{l-k},

which this module precomputes once per basis.  As the shell index grows,
S(u) approaches (kappa/4) lap(u); the residual S(u) - (kappa/4) lap(u) is
what enters the drift next to the exactly-integrated (nu + kappa/4) lap(u).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .spectral import (
    gradient,
    laplacian,
    leray_project,
    require_divergence_free,
    sobolev_norm,
)


@dataclass(frozen=True)
class NoiseSpec:
    """Transport-noise parameters: intensity, shell index, spectral slope."""

    kappa: float
    shell: int
    gamma: float = 1.0

    def __post_init__(self):
        if self.kappa < 0.0:
            raise ConfigError(f"noise intensity must be >= 0, got {self.kappa}")
        if int(self.shell) != self.shell or self.shell < 1:
            raise ConfigError(f"shell index must be an integer >= 1, got {self.shell}")
        if self.gamma <= 0.0:
            raise ConfigError(f"spectral slope must be > 0, got {self.gamma}")


class NoiseBasis:
    """Enumerated shell modes with weights, directions, and cached operators."""

    def __init__(self, spec, grid, modes, zeta, a, lambda_val):
        self.spec = spec
        self.grid = grid
        self.modes = modes
        self.zeta = zeta
        self.a = a
        self.lambda_val = lambda_val
        self._index = {(int(k[0]), int(k[1])): i for i, k in enumerate(modes)}
        # conjugate-pair representatives: k1 > 0, or k1 = 0 and k2 > 0
        rep = (modes[:, 0] > 0) | ((modes[:, 0] == 0) & (modes[:, 1] > 0))
        self.pair_modes = modes[rep]
        self.pair_zeta = zeta[rep]
        self.pair_a = a[rep]
        m = grid.m
        self._rows_pos = self.pair_modes[:, 0] % m
        self._cols_pos = self.pair_modes[:, 1] % m
        self._rows_neg = (-self.pair_modes[:, 0]) % m
        self._cols_neg = (-self.pair_modes[:, 1]) % m
        self._blocks = None

    def mode_index(self, k1, k2):
        return self._index[(int(k1), int(k2))]

    def corrector_blocks(self):
        """Per-mode 2x2 blocks of the velocity corrector, computed lazily."""
        if self._blocks is None:
            self._blocks = _build_corrector_blocks(self)
        return self._blocks


def build_noise_basis(spec, grid):
    """Enumerate the shell and attach weights; validates against the grid."""
    n = int(spec.shell)
    if 2 * n > grid.dealias_radius:
        raise ConfigError(
            f"shell reaches |k| = {2 * n} but the grid only keeps modes up "
            f"to {grid.dealias_radius}; increase the resolution"
        )
    span = np.arange(-2 * n, 2 * n + 1)
    k1, k2 = np.meshgrid(span, span, indexing="ij")
    mag2 = k1**2 + k2**2
    keep = (mag2 >= n * n) & (mag2 <= 4 * n * n)
    modes = np.stack([k1[keep], k2[keep]], axis=1)
    if modes.shape[0] == 0:
        raise ConfigError(f"empty noise shell for N = {n}")
    mag = np.sqrt(np.sum(modes.astype(float) ** 2, axis=1))
    raw = mag ** (-spec.gamma)
    lambda_val = float(np.sqrt(np.sum(raw**2)))
    zeta = raw / lambda_val
    # a_k = k_perp/|k| on the positive half-lattice, -k_perp/|k| on the
    # other half, so that a is even under k -> -k
    positive = (modes[:, 0] > 0) | ((modes[:, 0] == 0) & (modes[:, 1] > 0))
    sign = np.where(positive, 1.0, -1.0)
    perp = np.stack([-modes[:, 1].astype(float), modes[:, 0].astype(float)], axis=1)
    a = sign[:, None] * perp / mag[:, None]
    return NoiseBasis(spec, grid, modes, zeta, a, lambda_val)


def sample_increment(basis, dt, rng):
    """Draw one Wiener increment field, returned as spectral coefficients.

    Each conjugate pair consumes two independent N(0, dt) variates; the
    coefficient at mode k is sqrt(2 kappa) zeta_k a_k (xi1 + i xi2) and the
    one at -k is its conjugate, so the field is real and divergence-free.
    """
    grid = basis.grid
    npairs = basis.pair_modes.shape[0]
    xi = rng.normal(scale=np.sqrt(dt), size=(npairs, 2))
    amp = np.sqrt(2.0 * basis.spec.kappa) * basis.pair_zeta
    coef = amp * (xi[:, 0] + 1j * xi[:, 1])
    dv = np.zeros((2, grid.m, grid.m), dtype=complex)
    for comp in range(2):
        vals = basis.pair_a[:, comp] * coef
        dv[comp, basis._rows_pos, basis._cols_pos] = vals
        dv[comp, basis._rows_neg, basis._cols_neg] = np.conj(vals)
    return dv


def concentration_corrector(c_hat, grid, kappa):
    """Ito drift correction for a transported scalar: exactly kappa*lap(c)."""
    return kappa * laplacian(c_hat, grid)


def _leray_components(mx, my):
    """Entries of the projection I - m m^T / |m|^2, identity at m = 0."""
    m2 = mx**2 + my**2
    safe = np.where(m2 == 0.0, 1.0, m2)
    pxx = 1.0 - mx * mx / safe
    pxy = -mx * my / safe
    pyy = 1.0 - my * my / safe
    zero = m2 == 0.0
    pxx = np.where(zero, 1.0, pxx)
    pyy = np.where(zero, 1.0, pyy)
    pxy = np.where(zero, 0.0, pxy)
    return pxx, pxy, pyy


def _build_corrector_blocks(basis):
    grid = basis.grid
    kappa = basis.spec.kappa
    lx = np.broadcast_to(grid.kx, (grid.m, grid.m))
    ly = np.broadcast_to(grid.ky, (grid.m, grid.m))
    qxx, qxy, qyy = _leray_components(lx, ly)
    b11 = np.zeros((grid.m, grid.m))
    b12 = np.zeros((grid.m, grid.m))
    b21 = np.zeros((grid.m, grid.m))
    b22 = np.zeros((grid.m, grid.m))
    for k, zeta, a in zip(basis.modes, basis.zeta, basis.a):
        w = 2.0 * kappa * zeta**2 * (a[0] * lx + a[1] * ly) ** 2
        pxx, pxy, pyy = _leray_components(lx - float(k[0]), ly - float(k[1]))
        b11 -= w * (qxx * pxx + qxy * pxy)
        b12 -= w * (qxx * pxy + qxy * pyy)
        b21 -= w * (qxy * pxx + qyy * pxy)
        b22 -= w * (qxy * pxy + qyy * pyy)
    return b11, b12, b21, b22


def velocity_corrector(u_hat, basis):
    """Apply the velocity Ito corrector S via precomputed per-mode blocks."""
    require_divergence_free(u_hat, basis.grid)
    b11, b12, b21, b22 = basis.corrector_blocks()
    return np.stack(
        [b11 * u_hat[0] + b12 * u_hat[1], b21 * u_hat[0] + b22 * u_hat[1]]
    )


def velocity_corrector_direct(u_hat, basis):
    """Literal per-mode sum for S, evaluated through physical space.

    Kept as the independent reference route for the fast block form; only
    suitable for fields whose band leaves room for the two shell shifts.
    """
    require_divergence_free(u_hat, basis.grid)
    grid = basis.grid
    kappa = basis.spec.kappa
    acc = np.zeros_like(u_hat)
    for k, zeta, a in zip(basis.modes, basis.zeta, basis.a):
        phase = np.exp(-1j * (k[0] * grid.x1 + k[1] * grid.x2))
        inner = []
        for comp in range(2):
            g = gradient(u_hat[comp], grid)
            directional = a[0] * np.fft.ifft2(g[0]) + a[1] * np.fft.ifft2(g[1])
            inner.append(np.fft.fft2(phase * directional * grid.m**2) / grid.m**2)
        inner = leray_project(np.stack(inner), grid)
        outer = []
        for comp in range(2):
            g = gradient(inner[comp], grid)
            directional = a[0] * np.fft.ifft2(g[0]) + a[1] * np.fft.ifft2(g[1])
            outer.append(
                np.fft.fft2(np.conj(phase) * directional * grid.m**2) / grid.m**2
            )
        acc += 2.0 * kappa * zeta**2 * leray_project(np.stack(outer), grid)
    return acc


def corrector_residual(u_hat, basis):
    """S(u) - (kappa/4) lap(u), the part of the drift not integrated exactly."""
    require_divergence_free(u_hat, basis.grid)
    grid = basis.grid
    b11, b12, b21, b22 = basis.corrector_blocks()
    shift = 0.25 * basis.spec.kappa * grid.k_squared
    return np.stack(
        [
            (b11 + shift) * u_hat[0] + b12 * u_hat[1],
            b21 * u_hat[0] + (b22 + shift) * u_hat[1],
        ]
    )


def corrector_bound_report(u_hat, basis, s, alpha):
    """Ratio of the corrector defect to its theoretical envelope.

    Returns ||S(u) - (kappa/4) lap u||_{H^{s-2-alpha}} divided by
    kappa ||u||_{H^s} / N^alpha; zero for zero input.
    """
    grid = basis.grid
    denom_norm = sobolev_norm(u_hat, grid, s)
    if denom_norm == 0.0:
        return 0.0
    res = corrector_residual(u_hat, basis)
    numer = sobolev_norm(res, grid, s - 2.0 - alpha)
    scale = basis.spec.kappa * denom_norm / float(basis.spec.shell) ** alpha
    return float(numer / scale)
