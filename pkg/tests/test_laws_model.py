"""Constitutive laws and state-representation conversions."""

import numpy as np
import pytest

from ekwave.errors import NormalizationError, VacuumError
from ekwave.grid import Field, FourierGrid
from ekwave.laws import ConstitutiveLaws
from ekwave.spectral import gradient, proj_p_spec
from ekwave.states import (
    EKState,
    from_extended,
    from_psi,
    invert_normal_form,
    normal_form,
    normal_form_correction,
    to_extended,
    to_psi,
)
from ekwave.initial_data import InitialDataSpec, generate_initial_data


QUANTUM = ConstitutiveLaws.quantum()


def small_state(grid, amplitude, seed=11, laws=QUANTUM):
    return generate_initial_data(InitialDataSpec(amplitude=amplitude), grid, laws, seed)


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------

def test_normalization_enforced():
    assert abs(QUANTUM.a(1.0) - 1.0) <= 1e-12
    assert abs(QUANTUM.dg(1.0) - 2.0) <= 1e-12
    with pytest.raises(NormalizationError):
        # g' (1) = 1 != 2
        ConstitutiveLaws(K=lambda r: 1.0 / r, dK=lambda r: -1.0 / r**2,
                         g=lambda r: r - 1.0, dg=lambda r: np.ones_like(r))
    with pytest.raises(NormalizationError):
        # a(1) = sqrt(2) != 1
        ConstitutiveLaws(K=lambda r: 2.0 / r, dK=lambda r: -2.0 / r**2,
                         g=lambda r: r**2 - 1.0, dg=lambda r: 2.0 * r)


def test_primitive_closed_forms():
    assert abs(QUANTUM.l_of_rho(np.e) - 1.0) <= 1e-12          # ln rho
    constant = ConstitutiveLaws.constant()
    assert abs(constant.l_of_rho(4.0) - 2.0) <= 1e-12          # 2(sqrt(4) - 1)
    linear = ConstitutiveLaws.linear()
    assert abs(linear.l_of_rho(1.5) - 0.5) <= 1e-12            # rho - 1
    for laws in (QUANTUM, constant, linear):
        assert laws.l_of_rho(1.0) == 0.0


def test_primitive_monotone_and_invertible():
    rho = np.geomspace(0.2, 5.0, 40)
    for laws in (QUANTUM, ConstitutiveLaws.constant(), ConstitutiveLaws.linear(),
                 ConstitutiveLaws.polynomial([1.0, 0.3, -0.1])):
        l = laws.l_of_rho(rho)
        assert np.all(np.diff(l) > 0)
        back = laws.rho_of_l(l)
        assert np.max(np.abs(back - rho)) <= 1e-9 * np.max(rho)


def test_normal_form_strengths():
    assert abs(QUANTUM.strength - (-1.0)) <= 1e-10
    assert abs(ConstitutiveLaws.constant().strength - (-0.5)) <= 1e-10
    assert abs(ConstitutiveLaws.linear().strength) <= 1e-10


# ---------------------------------------------------------------------------
# (rho, u) <-> (l, w, u)
# ---------------------------------------------------------------------------

def test_to_extended_constant_state():
    g = FourierGrid(32, 2 * np.pi)
    s = EKState(Field.scalar(g, np.ones(g.shape)), Field.zeros(g, g.dim), 0.0)
    ext = to_extended(s, QUANTUM)
    assert np.max(np.abs(ext.l.values)) <= 1e-14
    assert np.max(np.abs(ext.w.data)) <= 1e-14


def test_extended_round_trip():
    g = FourierGrid(64, 2 * np.pi)
    s = small_state(g, 0.08, seed=3)
    ext = to_extended(s, QUANTUM)
    ext.validate()
    back = from_extended(ext, QUANTUM)
    assert np.max(np.abs(back.rho.values - s.rho.values)) <= 1e-10
    assert np.max(np.abs(back.u.data - s.u.data)) <= 1e-10


def test_to_extended_vacuum_error():
    g = FourierGrid(32, 2 * np.pi)
    rho = np.full(g.shape, 1.0)
    rho[0] = 1e-9
    s = EKState(Field.scalar(g, rho), Field.zeros(g, g.dim), 0.0)
    with pytest.raises(VacuumError):
        to_extended(s, QUANTUM)


# ---------------------------------------------------------------------------
# dispersive variable
# ---------------------------------------------------------------------------

def test_psi_zero_for_solenoidal_velocity():
    g = FourierGrid((32, 32), (2 * np.pi, 2 * np.pi))
    f = Field.scalar(g, np.sin(g.meshgrid()[0]))
    gf = gradient(f)
    u = Field.vector(g, np.stack([-gf.data[1], gf.data[0]]))   # div-free
    ext = to_extended(EKState(Field.scalar(g, np.ones(g.shape)), u, 0.0), QUANTUM)
    d = to_psi(ext)
    assert np.max(np.abs(d.psi.data)) <= 1e-12


def test_psi_equals_gradient_velocity():
    g = FourierGrid(64, 2 * np.pi)
    f = Field.scalar(g, 0.05 * np.sin(2 * g.meshgrid()[0]))
    u = gradient(f)
    ext = to_extended(EKState(Field.scalar(g, np.ones(g.shape)), u, 0.0), QUANTUM)
    d = to_psi(ext)
    assert np.max(np.abs(d.psi.data.real - u.data)) <= 1e-12
    assert np.max(np.abs(d.psi.data.imag)) <= 1e-12


def test_psi_round_trip():
    g = FourierGrid(64, 2 * np.pi)
    ext = to_extended(small_state(g, 0.05, seed=7), QUANTUM)
    back = from_psi(to_psi(ext))
    assert np.max(np.abs(back.w.data - ext.w.data)) <= 1e-10
    assert np.max(np.abs(back.u.data - ext.u.data)) <= 1e-10
    assert np.max(np.abs(back.l.values - ext.l.values)) <= 1e-10


def test_psi_imaginary_part_is_potential():
    g = FourierGrid((32, 32), (2 * np.pi, 2 * np.pi))
    ext = to_extended(small_state(g, 0.05, seed=19), QUANTUM)
    d = to_psi(ext)
    im_spec = g.fft(d.psi.data.imag)
    p_part = proj_p_spec(g, im_spec)
    assert np.max(np.abs(p_part)) <= 1e-10 * max(np.max(np.abs(im_spec)), 1.0)


# ---------------------------------------------------------------------------
# normal form
# ---------------------------------------------------------------------------

def test_normal_form_zero_state():
    g = FourierGrid(32, 2 * np.pi)
    s = EKState(Field.scalar(g, np.ones(g.shape)), Field.zeros(g, g.dim), 0.0)
    d = normal_form(to_extended(s, QUANTUM), QUANTUM)
    assert np.max(np.abs(d.psi_normal.data)) <= 1e-14


def test_normal_form_trivial_for_linear_law():
    # K = rho gives a(rho) = rho, a'(1) = 1, so the B-symbol strength is 0
    linear = ConstitutiveLaws.linear()
    g = FourierGrid(64, 2 * np.pi)
    ext = to_extended(small_state(g, 0.05, seed=23, laws=linear), linear)
    corr = normal_form_correction(ext, linear)
    assert np.max(np.abs(corr.data)) <= 1e-14


def test_normal_form_correction_is_quadratic():
    g = FourierGrid(256, 2 * np.pi)
    norms = []
    for eps in (0.02, 0.01):
        ext = to_extended(small_state(g, eps, seed=5), QUANTUM)
        norms.append(normal_form_correction(ext, QUANTUM).l2norm())
    ratio = norms[0] / norms[1]
    assert 3.7 <= ratio <= 4.3


def test_normal_form_correction_is_gradient():
    g = FourierGrid(64, 2 * np.pi)
    ext = to_extended(small_state(g, 0.05, seed=13), QUANTUM)
    corr = normal_form_correction(ext, QUANTUM)
    p_part = proj_p_spec(g, corr.spectral)
    assert np.max(np.abs(p_part)) <= 1e-10 * max(np.max(np.abs(corr.spectral)), 1e-30)


def test_normal_form_inversion_round_trip():
    g = FourierGrid(128, 2 * np.pi)
    ext = to_extended(small_state(g, 0.05, seed=29), QUANTUM)
    d = normal_form(ext, QUANTUM)
    back, iterations = invert_normal_form(d, QUANTUM)
    assert iterations < 50
    assert np.max(np.abs(back.w.data - ext.w.data)) <= 1e-9
    assert np.max(np.abs(back.u.data - ext.u.data)) <= 1e-9
