"""Uniform space-time lattices and the Fourier conventions used everywhere.

The spatial domain is the periodic box [-L, L)^d sampled at N points per
axis; the conjugate frequency lattice carries spacing pi/L.  All kernel
synthesis in this package goes through :func:`synthesize` /
:func:`analyze`, which fix one normalization of the transform pair

    f(x) = (2 pi)^{-d} Int F(lam) e^{i(lam,x)} dlam,
    F(lam) = Int f(x) e^{-i(lam,x)} dx,

discretized so that the discrete spectrum of a synthesized field equals
the sampled transform exactly (no hidden scale factors).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Raised for inconsistent lattice parameters or mismatched grids."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform spatial lattice plus a uniform partition of [0, T].

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    half_extent : float
        Half width L of the periodic box [-L, L)^dim.
    points_per_dim : int
        Even number N of lattice points per axis.
    time_horizon : float
        Final time T > 0.
    time_steps : int
        Number M of uniform steps, giving the partition t_i = i T / M.
    """

    dim: int
    half_extent: float
    points_per_dim: int
    time_horizon: float
    time_steps: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if self.points_per_dim % 2 != 0 or self.points_per_dim < 4:
            raise GridError("points_per_dim must be an even integer >= 4")
        if self.half_extent <= 0:
            raise GridError("half_extent must be positive")
        if self.time_horizon <= 0 or self.time_steps < 1:
            raise GridError("need time_horizon > 0 and time_steps >= 1")

    # -- spatial lattice -------------------------------------------------
    @property
    def dx(self) -> float:
        return 2.0 * self.half_extent / self.points_per_dim

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.dim

    def axis(self) -> np.ndarray:
        """Centered coordinates (-L, ..., L - dx) along one axis."""
        N = self.points_per_dim
        return (np.arange(N) - N // 2) * self.dx

    def mesh(self):
        """Tuple of centered coordinate arrays, meshgrid'ed for dim == 2."""
        if self.dim == 1:
            return (self.axis(),)
        x = self.axis()
        return tuple(np.meshgrid(x, x, indexing="ij"))

    # -- frequency lattice -----------------------------------------------
    def freq_axis(self) -> np.ndarray:
        """FFT-ordered frequencies along one axis (spacing pi / L)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_dim, d=self.dx)

    def freq_mesh(self):
        k = self.freq_axis()
        if self.dim == 1:
            return (k,)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    def freq_norm(self) -> np.ndarray:
        """|lam| on the FFT-ordered frequency lattice."""
        if self.dim == 1:
            return np.abs(self.freq_axis())
        kx, ky = self.freq_mesh()
        return np.hypot(kx, ky)

    def nyquist_mask(self) -> np.ndarray:
        """Boolean mask of modes containing a Nyquist component on any axis.

        The Nyquist frequency -N/2 has no positive partner on an even
        lattice, so odd multipliers are zeroed there to keep synthesized
        fields real.
        """
        N = self.points_per_dim
        hit = np.arange(N) == N // 2  # fftfreq puts -N/2 at index N//2
        if self.dim == 1:
            return hit
        return hit[:, None] | hit[None, :]

    # -- time partition ---------------------------------------------------
    @property
    def dt(self) -> float:
        return self.time_horizon / self.time_steps

    def times(self) -> np.ndarray:
        return np.arange(self.time_steps + 1) * self.dt

    def gaps(self) -> np.ndarray:
        """Distinct positive time gaps representable on the partition."""
        return np.arange(1, self.time_steps + 1) * self.dt

    def shape(self) -> tuple:
        return (self.points_per_dim,) * self.dim

    def refine(self, space: int = 2, time: int = 2) -> "SpaceTimeGrid":
        """Same domain with space/time resolution multiplied as given."""
        return SpaceTimeGrid(self.dim, self.half_extent,
                             self.points_per_dim * space,
                             self.time_horizon, self.time_steps * time)

    def compatible(self, other: "SpaceTimeGrid") -> bool:
        return self == other

    def require_compatible(self, other: "SpaceTimeGrid"):
        if self != other:
            raise GridError("operands live on different grids")


# ---------------------------------------------------------------------------
# transform helpers
# ---------------------------------------------------------------------------

def synthesize(grid: SpaceTimeGrid, spectrum: np.ndarray,
               require_real: bool = True, tol: float = 1e-9) -> np.ndarray:
    """Centered field samples from FFT-ordered transform samples.

    Implements f(x_j) = (2 pi)^{-d} sum_k F(lam_k) e^{i(lam_k, x_j)} dlam^d,
    which reduces to ifftn up to the factor dx^{-d}.
    """
    vals = np.fft.fftshift(np.fft.ifftn(spectrum)) / grid.cell_volume
    if require_real:
        resid = np.abs(vals.imag).max()
        scale = max(np.abs(vals.real).max(), 1.0)
        if resid > tol * scale:
            raise GridError(
                f"imaginary residue {resid:.3e} above tolerance; "
                "spectrum is not Hermitian")
        return np.ascontiguousarray(vals.real)
    return vals


def analyze(grid: SpaceTimeGrid, values: np.ndarray) -> np.ndarray:
    """FFT-ordered transform samples of a centered field (inverse of synthesize)."""
    return np.fft.fftn(np.fft.ifftshift(values)) * grid.cell_volume


def convolve(grid: SpaceTimeGrid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Discrete (circular) convolution with cell-volume weight."""
    out = np.fft.ifftn(np.fft.fftn(np.fft.ifftshift(f)) *
                       np.fft.fftn(np.fft.ifftshift(g))) * grid.cell_volume
    return np.fft.fftshift(out.real)


def interior_mask(grid: SpaceTimeGrid, margin: float = 0.1) -> np.ndarray:
    """Mask selecting points away from the outer `margin` fraction of the box.

    Periodization bias concentrates near the boundary; probe sets and bulk
    norms stay inside this mask.
    """
    x = grid.axis()
    keep = np.abs(x) <= (1.0 - margin) * grid.half_extent
    if grid.dim == 1:
        return keep
    return keep[:, None] & keep[None, :]
