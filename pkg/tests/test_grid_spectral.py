"""Grid/field plumbing and Fourier multiplier algebra."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekwave.errors import GridError, ZeroModeError, ComponentError
from ekwave.grid import Field, FourierGrid
from ekwave.spectral import (
    MultiplierSymbol,
    apply_multiplier,
    bilinear_B,
    bilinear_B_exact,
    divergence,
    gradient,
    helmholtz_split,
    semigroup,
    symbol_h,
    u_inverse,
    u_operator,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def random_scalar(grid, seed=0, complex_kind=False):
    r = rng(seed)
    vals = r.standard_normal(grid.shape)
    if complex_kind:
        vals = vals + 1j * r.standard_normal(grid.shape)
    return Field.scalar(grid, vals)


def random_vector(grid, seed=0):
    r = rng(seed)
    return Field.vector(grid, r.standard_normal((grid.dim,) + grid.shape))


def mean_free(f):
    return Field.scalar(f.grid, f.values - np.mean(f.values))


# ---------------------------------------------------------------------------
# grid / field invariants
# ---------------------------------------------------------------------------

def test_grid_rejects_small_or_odd_axes():
    with pytest.raises(GridError):
        FourierGrid(4, 2 * np.pi)
    with pytest.raises(GridError):
        FourierGrid(48, 2 * np.pi)   # not a power of two
    with pytest.raises(GridError):
        FourierGrid(16, -1.0)


def test_wavenumber_lattice_closed_under_negation():
    # k in [-N/2, N/2); every mode except the unpaired Nyquist frequency
    # has its negative on the lattice
    g = FourierGrid((16, 32), (2 * np.pi, 4 * np.pi))
    for k in g.wavenumbers:
        interior = k[k > k.min()]
        assert set(np.round(-interior, 12)) == set(np.round(interior, 12))


@settings(deadline=None, max_examples=20)
@given(seed=st.integers(0, 2**31 - 1), logn=st.integers(3, 6))
def test_round_trip_physical_spectral(seed, logn):
    g = FourierGrid(2**logn, 2 * np.pi)
    f = random_scalar(g, seed)
    back = g.ifft(f.spectral, real=True)
    assert np.max(np.abs(back - f.values)) <= 1e-12 * max(1.0, np.max(np.abs(f.values)))


def test_real_field_spectrum_hermitian():
    g = FourierGrid(32, 2 * np.pi)
    f = random_scalar(g, 3)
    spec = f.spectral[0]
    # F(-k) == conj(F(k))
    flipped = np.conj(np.roll(spec[::-1], 1))
    assert np.max(np.abs(spec - flipped)) <= 1e-10 * np.max(np.abs(spec))


# ---------------------------------------------------------------------------
# linear multipliers
# ---------------------------------------------------------------------------

def test_h_on_zero_field_is_zero():
    g = FourierGrid(16, 2 * np.pi)
    z = Field.zeros(g)
    out = apply_multiplier(z, MultiplierSymbol("H"))
    assert np.all(out.values == 0.0)


def test_u_on_single_mode_sqrt2():
    # |xi0| = sqrt(2) on a d=2 unit-spacing lattice: mode (1, 1)
    g = FourierGrid((16, 16), (2 * np.pi, 2 * np.pi))
    x = g.meshgrid()
    f = Field.scalar(g, np.exp(1j * (x[0] + x[1])))
    out = u_operator(f)
    # U = sqrt(2)/sqrt(2+2) = 1/sqrt(2)
    assert np.max(np.abs(out.values - f.values / np.sqrt(2.0))) <= 1e-12


def test_q_is_identity_on_gradients():
    g = FourierGrid((32, 32), (2 * np.pi, 2 * np.pi))
    f = random_scalar(g, 5)
    gf = gradient(f)
    qgf = apply_multiplier(gf, MultiplierSymbol("Q"))
    assert np.max(np.abs(qgf.data - gf.data)) <= 1e-11 * np.max(np.abs(gf.data))


def test_uinv_rejects_nonzero_mean():
    g = FourierGrid(16, 2 * np.pi)
    f = Field.scalar(g, np.ones(g.shape))
    with pytest.raises(ZeroModeError):
        u_inverse(f)


def test_uinv_u_identity_on_mean_free():
    g = FourierGrid(64, 2 * np.pi)
    f = mean_free(random_scalar(g, 8))
    out = u_inverse(u_operator(f))
    assert np.max(np.abs(out.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))


def test_projectors_require_vector_fields():
    g = FourierGrid((16, 16), (2 * np.pi, 2 * np.pi))
    with pytest.raises(ComponentError):
        apply_multiplier(random_scalar(g), MultiplierSymbol("P"))


# ---------------------------------------------------------------------------
# Helmholtz decomposition
# ---------------------------------------------------------------------------

def test_helmholtz_gradient_is_potential():
    g = FourierGrid((32, 32), (2 * np.pi, 2 * np.pi))
    u = gradient(random_scalar(g, 1))
    sol, pot = helmholtz_split(u)
    assert np.max(np.abs(sol.data)) <= 1e-12 * np.max(np.abs(u.data))
    assert np.max(np.abs(pot.data - u.data)) <= 1e-12 * np.max(np.abs(u.data))


def test_helmholtz_perp_gradient_is_solenoidal():
    g = FourierGrid((32, 32), (2 * np.pi, 2 * np.pi))
    f = random_scalar(g, 2)
    gf = gradient(f)
    u = Field.vector(g, np.stack([-gf.data[1], gf.data[0]]))
    sol, pot = helmholtz_split(u)
    assert np.max(np.abs(pot.data)) <= 1e-12 * np.max(np.abs(u.data))
    assert np.max(np.abs(sol.data - u.data)) <= 1e-12 * np.max(np.abs(u.data))


def test_helmholtz_completeness_idempotence_orthogonality():
    g = FourierGrid((32, 32), (2 * np.pi, 2 * np.pi))
    u = random_vector(g, 7)
    scale = np.max(np.abs(u.data))
    sol, pot = helmholtz_split(u)
    mean = np.mean(u.data, axis=tuple(range(1, u.data.ndim)))
    recon = sol.data + pot.data + mean.reshape((-1,) + (1,) * g.dim)
    assert np.max(np.abs(recon - u.data)) <= 1e-12 * scale
    sol2, _ = helmholtz_split(sol)
    _, pot2 = helmholtz_split(pot)
    assert np.max(np.abs(sol2.data - sol.data)) <= 1e-12 * scale
    assert np.max(np.abs(pot2.data - pot.data)) <= 1e-12 * scale
    # mutual annihilation
    _, qp = helmholtz_split(sol)
    ps, _ = helmholtz_split(pot)
    assert np.max(np.abs(qp.data)) <= 1e-12 * scale
    assert np.max(np.abs(ps.data)) <= 1e-12 * scale
    assert np.max(np.abs(divergence(sol).values)) <= 1e-10 * scale


# ---------------------------------------------------------------------------
# semigroup e^{itH}
# ---------------------------------------------------------------------------

def test_semigroup_t0_identity_and_unitarity():
    g = FourierGrid(64, 2 * np.pi)
    f = random_scalar(g, 4, complex_kind=True)
    out0 = semigroup(f, 0.0)
    assert np.max(np.abs(out0.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))
    out = semigroup(f, 1.7)
    assert abs(out.l2norm() - f.l2norm()) <= 1e-12 * f.l2norm()


def test_semigroup_single_mode_phase():
    g = FourierGrid(16, 2 * np.pi)
    x = g.meshgrid()[0]
    f = Field.scalar(g, np.exp(1j * x))
    out = semigroup(f, 1.0)
    expected = np.exp(1j * np.sqrt(3.0)) * f.values   # H(1) = sqrt(3)
    assert np.max(np.abs(out.values - expected)) <= 1e-12


@settings(deadline=None, max_examples=15)
@given(t1=st.floats(-5, 5), t2=st.floats(-5, 5))
def test_semigroup_group_law(t1, t2):
    g = FourierGrid(16, 2 * np.pi)
    f = random_scalar(g, 9, complex_kind=True)
    a = semigroup(semigroup(f, t1), t2)
    b = semigroup(f, t1 + t2)
    assert np.max(np.abs(a.values - b.values)) <= 1e-12 * np.max(np.abs(f.values))


# ---------------------------------------------------------------------------
# bilinear pseudo-product B
# ---------------------------------------------------------------------------

def test_bilinear_zero_strength():
    g = FourierGrid(16, 2 * np.pi)
    f = random_scalar(g, 1)
    h = random_scalar(g, 2)
    out = bilinear_B(f, h, 0.0)
    assert np.max(np.abs(out.values)) == 0.0


def test_bilinear_matches_exact_double_sum():
    g = FourierGrid(16, 2 * np.pi)
    f = random_scalar(g, 11)
    h = random_scalar(g, 12)
    quad = bilinear_B(f, h, -1.0)
    exact = bilinear_B_exact(f, h, -1.0)
    scale = np.max(np.abs(exact.values))
    assert np.max(np.abs(quad.values - exact.values)) <= 1e-6 * scale


def test_bilinear_symmetric():
    g = FourierGrid(32, 2 * np.pi)
    f = random_scalar(g, 21)
    h = random_scalar(g, 22)
    ab = bilinear_B(f, h, -0.5)
    ba = bilinear_B(h, f, -0.5)
    assert np.max(np.abs(ab.values - ba.values)) <= 1e-10 * np.max(np.abs(ab.values))


def test_bilinear_cancellation_identity():
    # 2 B[f, lap g] + 2 B[(lap - 2) f, g] = -strength * f * g
    g = FourierGrid(32, 2 * np.pi)
    strength = -1.0
    f = random_scalar(g, 31)
    h = random_scalar(g, 32)
    lap = lambda q: Field.from_spectral(g, -g.k_squared * q.spectral, real=True)
    lhs = (2.0 * bilinear_B(f, lap(h), strength).values
           + 2.0 * bilinear_B(lap(f) + (-2.0) * f, h, strength).values)
    rhs = -strength * f.values * h.values
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * max(1.0, np.max(np.abs(rhs)))


def test_bilinear_2d_vectors_match_exact():
    g = FourierGrid((16, 16), (2 * np.pi, 2 * np.pi))
    f = random_vector(g, 41)
    h = random_vector(g, 42)
    quad = bilinear_B(f, h, -1.0)
    exact = bilinear_B_exact(f, h, -1.0)
    scale = np.max(np.abs(exact.values))
    assert np.max(np.abs(quad.values - exact.values)) <= 1e-6 * scale
