"""Spatial operators: ghost fills, curl, Laplacians, advection, director terms.

Analytic targets are manufactured trigonometric profiles; the elastic stress
is cross-checked against a symbolically computed reference (sympy), built
from the same continuum formula but evaluated by a completely separate code
path.
"""

import numpy as np
import pytest
import sympy as sp

from lcflow import ChannelGrid, InitialConditionSpec, SimConfig, SimulationError, SlipMatrixB, init_state
from lcflow.diagnostics import kinetic_energy, viscous_dissipation
from lcflow.fields import State, zero_face_field
from lcflow.integrator import step
from lcflow.operators import (
    advect_center,
    advect_face,
    curl_center,
    director_gradient,
    director_source,
    elastic_stress,
    fill_ghosts_navier_slip,
    fill_ghosts_neumann,
    grad_sq_director,
    laplacian_center,
    velocity_gradient_center,
)

B0 = SlipMatrixB(0.0, 0.0, 0.0)


def _grid(nx=8, ny=8, nz=16, lx=1.0, ly=1.0, lz=1.0):
    return ChannelGrid(nx, ny, nz, lx, ly, lz)


def _random_solenoidal(grid, amplitude=0.3, seed=1):
    return init_state(grid, InitialConditionSpec("random-solenoidal",
                                                 amplitude=amplitude, seed=seed)).u


def _shear_state(grid, profile):
    """u = (profile(z), 0, 0) with a rest director."""
    u = zero_face_field(grid)
    u.x[:] = profile(grid.z_centers())
    d = np.zeros((3,) + grid.shape)
    d[2] = 1.0
    return State(u, np.zeros(grid.shape), d, 0.0)


# ------------------------------------------------------------- ghost fills


def test_slip_matrix_basics():
    assert B0.is_zero
    B = SlipMatrixB(1.0, 0.5, 2.0)
    assert not B.is_zero
    bu, bv = B.apply(np.array(2.0), np.array(3.0))
    assert bu == 2.0 * 1.0 + 3.0 * 0.5
    assert bv == 2.0 * 0.5 + 3.0 * 2.0


def test_free_slip_ghosts_reflect():
    grid = _grid()
    u = _random_solenoidal(grid)
    xg, yg = fill_ghosts_navier_slip(u, B0, grid)
    assert np.array_equal(xg[..., 0], u.x[..., 0])
    assert np.array_equal(xg[..., -1], u.x[..., -1])
    assert np.array_equal(yg[..., 0], u.y[..., 0])


def test_zero_field_keeps_zero_ghosts():
    grid = _grid()
    u = zero_face_field(grid)
    xg, yg = fill_ghosts_navier_slip(u, SlipMatrixB(1.0, 0.3, 2.0), grid)
    assert np.max(np.abs(xg)) == 0.0 and np.max(np.abs(yg)) == 0.0


def test_robin_ghost_satisfies_discrete_condition():
    # the ghost is defined by (u0 - ug)/hz = b*(u0 + ug)/2 + cross terms;
    # with a diagonal friction the relation must hold to round-off
    grid = _grid(nz=12)
    b = 0.8
    u = _random_solenoidal(grid, seed=5)
    xg, _ = fill_ghosts_navier_slip(u, SlipMatrixB(b, 0.0, b), grid)
    ug, u0 = xg[..., 0], u.x[..., 0]
    lhs = (u0 - ug) / grid.hz
    rhs = b * (u0 + ug) / 2.0
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))
    # closed form: ug = u0 * (1 - b hz/2) / (1 + b hz/2)
    a11 = (1.0 - grid.hz * b / 2.0) / (1.0 + grid.hz * b / 2.0)
    assert np.max(np.abs(ug - a11 * u0)) <= 1e-13


def test_robin_ghost_tracks_smooth_extension():
    # For a profile that satisfies the slip condition at both walls the
    # ghost value tracks the analytic continuation at third order in hz.
    b = 1.0
    errs = []
    for nz in (16, 32, 64):
        grid = _grid(nx=4, ny=4, nz=nz)
        U = lambda z: np.sin(np.pi * z / grid.lz) + np.pi / (b * grid.lz)
        u = zero_face_field(grid)
        u.x[:] = U(grid.z_centers())
        xg, _ = fill_ghosts_navier_slip(u, SlipMatrixB(b, 0.0, b), grid)
        errs.append(max(np.max(np.abs(xg[..., 0] - U(-grid.hz / 2))),
                        np.max(np.abs(xg[..., -1] - U(grid.lz + grid.hz / 2)))))
    assert errs[0] / errs[1] > 6.0
    assert errs[1] / errs[2] > 6.0
    assert errs[2] < 1e-5


def test_neumann_ghosts_reflect():
    grid = _grid()
    rng = np.random.default_rng(0)
    f = rng.standard_normal(grid.shape)
    ext = fill_ghosts_neumann(f, grid)
    assert ext.shape == grid.shape[:2] + (grid.nz + 2,)
    assert np.array_equal(ext[..., 0], f[..., 0])
    assert np.array_equal(ext[..., -1], f[..., -1])
    with pytest.raises(Exception, match="z-layers"):
        fill_ghosts_neumann(f[..., :-1], grid)


# -------------------------------------------------------------------- curl


def test_curl_of_uniform_flow_vanishes():
    grid = _grid()
    u = zero_face_field(grid)
    u.x += 1.0
    u.y += -2.0
    om = curl_center(u, B0, grid)
    assert np.max(np.abs(om)) == 0.0


def test_curl_shear_profile():
    # u = (sin(pi z/lz), 0, 0): omega = (0, (pi/lz) cos(pi z/lz), 0).  The
    # profile violates the free-slip condition at the walls, so the ghost
    # closure is O(1) wrong on the first/last layer; the interior converges
    # at second order and the wall layers stay bounded.
    errs = []
    for nz in (32, 64):
        grid = _grid(nx=4, ny=4, nz=nz)
        zc = grid.z_centers()
        u = zero_face_field(grid)
        u.x[:] = np.sin(np.pi * zc / grid.lz)
        om = curl_center(u, B0, grid)
        want = (np.pi / grid.lz) * np.cos(np.pi * zc / grid.lz)
        err = np.abs(om[1] - want)
        assert np.max(np.abs(om[0])) == 0.0 and np.max(np.abs(om[2])) == 0.0
        assert np.max(err[..., [0, -1]]) <= np.pi / grid.lz
        errs.append(np.max(err[..., 1:-1]))
    assert 3.4 <= errs[0] / errs[1] <= 4.6


def test_curl_compatible_profile_full_grid():
    # cos(pi z/lz) has zero wall slope, so reflection ghosts are consistent
    # and the error is second order on every layer including the walls
    errs = []
    for nz in (32, 64):
        grid = _grid(nx=4, ny=4, nz=nz)
        zc = grid.z_centers()
        u = zero_face_field(grid)
        u.x[:] = np.cos(np.pi * zc / grid.lz)
        om = curl_center(u, B0, grid)
        want = -(np.pi / grid.lz) * np.sin(np.pi * zc / grid.lz)
        errs.append(np.max(np.abs(om[1] - want)))
    assert 3.4 <= errs[0] / errs[1] <= 4.6
    assert errs[1] < 2e-3


def test_curl_of_gradient_vanishes():
    # discrete gradients are curl-free to round-off: the averaged cross
    # differences in the center-sampled curl cancel exactly on a gradient
    from lcflow import discrete_gradient
    for n in (16, 32):
        grid = _grid(nx=n, ny=4, nz=n)
        xc = grid.x_centers()[:, None, None]
        zc = grid.z_centers()[None, None, :]
        chi = np.sin(2 * np.pi * xc / grid.lx) * np.cos(np.pi * zc / grid.lz) \
            * np.ones(grid.shape)
        g = discrete_gradient(chi, grid)
        om = curl_center(g, B0, grid)
        scale = max(np.max(np.abs(g.x)), np.max(np.abs(g.z))) / grid.hz
        assert np.max(np.abs(om)) <= 1e-13 * scale


# -------------------------------------------------------------- laplacians


def test_laplacian_center_constant():
    grid = _grid()
    assert np.max(np.abs(laplacian_center(np.full(grid.shape, 3.3), grid))) == 0.0


def test_laplacian_center_periodic_mode():
    # cos(2 pi x/lx) is an exact eigenvector of the discrete stencil; the
    # mismatch with the continuum eigenvalue -(2 pi/lx)^2 is k^4 h^2/12
    for nx in (16, 32):
        grid = _grid(nx=nx, ny=4, nz=4)
        k = 2 * np.pi / grid.lx
        xc = grid.x_centers()[:, None, None]
        f = np.cos(k * xc) * np.ones(grid.shape)
        got = laplacian_center(f, grid)
        err = np.max(np.abs(got + k ** 2 * f))
        assert err <= 1.2 * k ** 4 * grid.hx ** 2 / 12.0


def test_laplacian_center_wall_mode():
    # cos(pi z/lz) is compatible with the reflective closure, so the error
    # is uniformly second order including the first and last layers
    errs = []
    for nz in (16, 32):
        grid = _grid(nx=4, ny=4, nz=nz)
        k = np.pi / grid.lz
        zc = grid.z_centers()[None, None, :]
        f = np.cos(k * zc) * np.ones(grid.shape)
        err = np.abs(laplacian_center(f, grid) + k ** 2 * f)
        assert np.max(err[..., [0, -1]]) <= 1.2 * k ** 4 * grid.hz ** 2 / 12.0
        errs.append(np.max(err))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


# --------------------------------------------------------------- advection


def test_advect_by_zero_velocity():
    grid = _grid()
    u = zero_face_field(grid)
    rng = np.random.default_rng(1)
    f = rng.standard_normal(grid.shape)
    assert np.max(np.abs(advect_center(u, f, grid))) == 0.0
    g = _random_solenoidal(grid)
    a = advect_face(u, g, grid)
    assert np.max(np.abs(a.x)) == 0.0 and np.max(np.abs(a.z)) == 0.0


def test_advect_constant_scalar():
    # transporting a constant by a discretely solenoidal field leaves only
    # c/2 * div(u), which is round-off here
    grid = _grid(nx=12, ny=10, nz=14)
    u = _random_solenoidal(grid)
    f = np.full(grid.shape, 2.0)
    assert np.max(np.abs(advect_center(u, f, grid))) <= 1e-12


def test_advect_center_skew_symmetry():
    grid = ChannelGrid(12, 10, 14, 1.0, 1.3, 0.9)
    u = _random_solenoidal(grid)
    rng = np.random.default_rng(4)
    f = rng.standard_normal(grid.shape)
    ip = np.sum(f * advect_center(u, f, grid)) * grid.cell_volume
    norm = np.sum(f * f) * grid.cell_volume
    assert abs(ip) <= 1e-10 * norm


def test_advect_face_skew_symmetry():
    grid = ChannelGrid(12, 10, 14, 1.0, 1.3, 0.9)
    u = _random_solenoidal(grid, seed=1)
    g = _random_solenoidal(grid, amplitude=0.5, seed=9)
    a = advect_face(u, g, grid)
    ip = (np.sum(g.x * a.x) + np.sum(g.y * a.y)
          + np.sum(g.z[:, :, 1:-1] * a.z[:, :, 1:-1])) * grid.cell_volume
    norm = (np.sum(g.x ** 2) + np.sum(g.y ** 2)
            + np.sum(g.z[:, :, 1:-1] ** 2)) * grid.cell_volume
    assert abs(ip) <= 1e-10 * norm


# ----------------------------------------------------------- director terms


def test_elastic_stress_of_uniform_director():
    grid = _grid()
    d = np.zeros((3,) + grid.shape)
    d[2] = 1.0
    assert np.max(np.abs(elastic_stress(d, grid))) == 0.0


def test_elastic_stress_z_only_profile():
    # a director that varies only in z produces stress only in the z slot
    grid = _grid(nz=24)
    beta = 0.5 * np.cos(np.pi * grid.z_centers() / grid.lz)
    d = np.stack([np.broadcast_to(np.sin(beta), grid.shape),
                  np.zeros(grid.shape),
                  np.broadcast_to(np.cos(beta), grid.shape)])
    sig = elastic_stress(d, grid)
    assert np.max(np.abs(sig[0])) == 0.0
    assert np.max(np.abs(sig[1])) == 0.0
    assert np.max(np.abs(sig[2])) > 0.1


def test_elastic_stress_against_symbolic_reference():
    # independent reference: sigma_i = sum_j d_i(d_j) * lap(d_j) computed
    # symbolically for a twist angle modulated in x and z, with zero wall
    # slope so the reflective closure is uniformly second order
    x, z = sp.symbols("x z")
    b = 0.4
    beta = b * sp.cos(sp.pi * z) * sp.cos(2 * sp.pi * x)
    d_sym = (sp.sin(beta), sp.Integer(0), sp.cos(beta))
    lap_sym = [sp.diff(dj, x, 2) + sp.diff(dj, z, 2) for dj in d_sym]
    fs = [sp.lambdify((x, z), sum(sp.diff(d_sym[j], v) * lap_sym[j] for j in range(3)), "numpy")
          for v in (x, sp.Symbol("y"), z)]

    errs, scale = [], 1.0
    for n in (16, 32):
        grid = _grid(nx=n, ny=4, nz=n)
        xc = grid.x_centers()[:, None, None]
        zc = grid.z_centers()[None, None, :]
        ones = np.ones(grid.shape)
        beta_n = b * np.cos(np.pi * zc) * np.cos(2 * np.pi * xc) * ones
        d = np.stack([np.sin(beta_n), np.zeros(grid.shape), np.cos(beta_n)])
        got = elastic_stress(d, grid)
        want = np.stack([np.broadcast_to(f(xc, zc) * ones, grid.shape) for f in fs])
        errs.append(np.max(np.abs(got - want)))
        scale = np.max(np.abs(want))
    assert 3.2 <= errs[0] / errs[1] <= 4.8
    assert errs[1] <= 0.02 * scale


def test_director_gradient_layout():
    # out[i, c] = d_i(d_c): check on a linear-in-x component
    grid = _grid()
    d = np.zeros((3,) + grid.shape)
    d[2] = 1.0
    d[0] = 0.1 * np.sin(2 * np.pi * grid.x_centers() / grid.lx)[:, None, None]
    g = director_gradient(d, grid)
    assert g.shape == (3, 3) + grid.shape
    assert np.max(np.abs(g[1])) == 0.0 and np.max(np.abs(g[2])) == 0.0
    assert np.max(np.abs(g[0, 1])) == 0.0
    assert np.max(np.abs(g[0, 0])) > 0.1


def test_director_source_constant_director():
    grid = _grid()
    d = np.zeros((3,) + grid.shape)
    d[2] = 1.0
    assert np.max(np.abs(director_source(d, grid))) == 0.0
    assert np.max(np.abs(grad_sq_director(d, grid))) == 0.0


def test_director_source_geodesic_profile():
    # d = (sin(pi z/lz), 0, cos(pi z/lz)): Delta d + |grad d|^2 d = 0, i.e.
    # the source equals (pi/lz)^2 d.  The profile has nonzero wall slope,
    # so only the interior converges at second order.
    errs = []
    for nz in (32, 64):
        grid = _grid(nx=4, ny=4, nz=nz)
        beta = np.pi * grid.z_centers() / grid.lz
        d = np.stack([np.broadcast_to(np.sin(beta), grid.shape),
                      np.zeros(grid.shape),
                      np.broadcast_to(np.cos(beta), grid.shape)])
        src = director_source(d, grid)
        want = (np.pi / grid.lz) ** 2 * d
        err = np.abs(src - want)
        assert np.max(err[..., [0, -1]]) <= 2.0 * (np.pi / grid.lz) ** 2
        errs.append(np.max(err[..., 2:-2]))
    assert 3.4 <= errs[0] / errs[1] <= 4.6


def test_director_source_compatible_profile_full_grid():
    # beta = 0.7 cos(pi z/lz) has zero wall slope, so the reflective closure
    # is consistent and the error against the symbolic continuum value
    # |grad d|^2 d is second order on the whole grid
    z = sp.symbols("z")
    beta_sym = 0.7 * sp.cos(sp.pi * z)
    d_sym = (sp.sin(beta_sym), sp.Integer(0), sp.cos(beta_sym))
    gsq_sym = sum(sp.diff(dj, z) ** 2 for dj in d_sym)
    src_sym = [gsq_sym * dj for dj in d_sym]
    fs = [sp.lambdify(z, s, "numpy") for s in src_sym]

    errs = []
    for nz in (32, 64):
        grid = _grid(nx=4, ny=4, nz=nz)
        zc = grid.z_centers()
        beta = 0.7 * np.cos(np.pi * zc / grid.lz)
        d = np.stack([np.broadcast_to(np.sin(beta), grid.shape),
                      np.zeros(grid.shape),
                      np.broadcast_to(np.cos(beta), grid.shape)])
        src = director_source(d, grid)
        want = np.stack([np.broadcast_to(np.asarray(f(zc), dtype=float), grid.shape)
                         for f in fs])
        errs.append(np.max(np.abs(src - want)))
    assert 3.4 <= errs[0] / errs[1] <= 4.6


def test_director_source_demands_unit_length():
    grid = _grid()
    d = np.zeros((3,) + grid.shape)
    d[2] = 1.1
    with pytest.raises(SimulationError, match="unit director"):
        director_source(d, grid)


# ------------------------------------------------------- velocity gradient


def test_velocity_gradient_linear_shear():
    # u = (z, 0, 0): the only nonzero entry is d_z u_x = 1, exactly, since
    # every stencil in the gradient is exact on linear data
    grid = _grid(nz=12)
    u = zero_face_field(grid)
    u.x[:] = grid.z_centers()
    gu = velocity_gradient_center(u, grid)
    assert gu.shape == (3, 3) + grid.shape
    assert np.max(np.abs(gu[2, 0] - 1.0)) <= 1e-12
    mask = np.ones((3, 3), dtype=bool)
    mask[2, 0] = False
    for i, j in zip(*np.nonzero(mask)):
        assert np.max(np.abs(gu[i, j])) <= 1e-12


# -------------------------------------------------------- energy invariant


def test_free_slip_shear_decays_viscously():
    # With B = 0 and a rest director, a pure shear mode loses kinetic energy
    # only through the viscous term: over 10 explicit steps the energy drop
    # matches the trapezoid quadrature of eps*||curl u||^2 within 1%.
    grid = _grid(nx=8, ny=8, nz=32)
    st = _shear_state(grid, lambda z: 0.3 * np.cos(np.pi * z / grid.lz))
    cfg = SimConfig(nx=grid.nx, ny=grid.ny, nz=grid.nz, eps=0.05, dt=2e-4,
                    t_final=1.0, adaptive_dt=False, visc_implicit=False)
    e0 = kinetic_energy(st.u, grid)
    drained = 0.0
    for _ in range(10):
        nxt = step(st, cfg, grid, B0, cfg.dt)
        drained += cfg.dt * 0.5 * (viscous_dissipation(st.u, cfg.eps, B0, grid)
                                   + viscous_dissipation(nxt.u, cfg.eps, B0, grid))
        st = nxt
    de = e0 - kinetic_energy(st.u, grid)
    assert de > 0.0
    assert abs(de - drained) <= 0.01 * drained
