"""Channel geometry and the wall-weighted tangential derivative family.

The domain is a 3D channel, periodic in x and y, with solid walls at z = 0
and z = lz.  Scalars (pressure, director components) live at cell centers
(i+1/2)h; velocity components live on the faces normal to their direction
(standard staggered arrangement):

    u : x-normal faces, shape (nx, ny, nz),   u[i,j,k] at (i*hx,   yc_j, zc_k)
    v : y-normal faces, shape (nx, ny, nz),   v[i,j,k] at (xc_i, j*hy,   zc_k)
    w : z-normal faces, shape (nx, ny, nz+1), w[i,j,k] at (xc_i, yc_j, k*hz)

w[..., 0] and w[..., nz] sit on the walls and carry the impermeability
condition exactly.

The tangential derivative family is: plain d/dx and d/dy, plus the weighted
normal derivative phi(zeta) * d/dz where zeta = min(z, lz - z) is the
distance to the nearest wall and phi(s) = s/(1+s).  phi vanishes linearly at
both walls, so the weighted derivative stays bounded for fields that are
merely bounded in the normal direction near the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

M_MAX = 4  # largest tangential-derivative order the diagnostics support


@dataclass(frozen=True)
class ChannelGrid:
    nx: int
    ny: int
    nz: int
    lx: float
    ly: float
    lz: float

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def hz(self) -> float:
        return self.lz / self.nz

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy * self.hz

    @property
    def shape(self):
        return (self.nx, self.ny, self.nz)

    def x_centers(self):
        return (np.arange(self.nx) + 0.5) * self.hx

    def y_centers(self):
        return (np.arange(self.ny) + 0.5) * self.hy

    def z_centers(self):
        return (np.arange(self.nz) + 0.5) * self.hz

    def x_faces(self):
        return np.arange(self.nx) * self.hx

    def y_faces(self):
        return np.arange(self.ny) * self.hy

    def z_faces(self):
        return np.arange(self.nz + 1) * self.hz


def make_grid(config) -> ChannelGrid:
    for name in ("nx", "ny", "nz"):
        n = getattr(config, name)
        if not isinstance(n, (int, np.integer)):
            raise ConfigError(f"{name} must be an integer, got {n!r}")
        if n < 4:
            raise ConfigError(f"{name} too small: need at least 4 cells, got {n}")
    for name in ("lx", "ly", "lz"):
        if getattr(config, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    return ChannelGrid(config.nx, config.ny, config.nz,
                       float(config.lx), float(config.ly), float(config.lz))


def conormal_weight(z, grid: ChannelGrid):
    """Wall-distance weight phi(min(z, lz-z)), phi(s) = s/(1+s).

    Accepts scalars or arrays of z coordinates in [0, lz]; values outside
    the channel are rejected.  The result lies in [0, 1) and vanishes
    exactly on both walls.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0) or np.any(z > grid.lz):
        raise ConfigError(f"z out of channel range [0, {grid.lz}]")
    zeta = np.minimum(z, grid.lz - z)
    out = zeta / (1.0 + zeta)
    return float(out) if out.ndim == 0 else out


def _dz_centered(f, hz):
    """Second-order d/dz on cell-centered data along the last axis.

    Central differences inside, one-sided three-point stencils on the first
    and last interior layers (no ghost values are assumed).
    """
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * hz)
    out[..., 0] = (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) / (2.0 * hz)
    out[..., -1] = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * hz)
    return out


def conormal_derivative(f: np.ndarray, axis: int, grid: ChannelGrid) -> np.ndarray:
    """One member of the tangential family on a cell-centered field.

    axis 0, 1: periodic central d/dx, d/dy.
    axis 2:    phi(zeta) * d/dz with the one-sided closure of _dz_centered.

    The three operators commute pairwise to round-off: the x/y shifts
    commute with each other, and the z stencil plus its z-only weight is
    translation invariant in x and y.
    """
    f = np.asarray(f)
    if f.shape[-3:] != grid.shape:
        raise ConfigError(f"field shape {f.shape} does not end in {grid.shape}")
    if axis == 0:
        return (np.roll(f, -1, axis=-3) - np.roll(f, 1, axis=-3)) / (2.0 * grid.hx)
    if axis == 1:
        return (np.roll(f, -1, axis=-2) - np.roll(f, 1, axis=-2)) / (2.0 * grid.hy)
    if axis == 2:
        w = conormal_weight(grid.z_centers(), grid)
        return w * _dz_centered(f, grid.hz)
    raise ConfigError(f"axis must be 0, 1 or 2, got {axis}")
