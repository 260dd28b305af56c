"""Wave-function solver, Madelung transforms and the vacuum-formation run.

The wave equation integrated here is

    i dpsi/dt + lap psi = g(|psi|^2) psi / 2,

with far-field modulus 1 (psi - 1 is the dynamical variable).  Under
psi = sqrt(rho) e^{i phi} it is the quantum-capillarity fluid with
pressure g and fluid velocity 2*grad(phi); see :func:`fluid_state`.
The conjugation symmetry psi -> conj(psi(-t)) is exact for the splitting
scheme and is the engine of the finite-time vacuum construction: run
forward from a datum with an isolated zero, conjugate, run forward
again, and the zero re-forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import List, Optional

import numpy as np

from .errors import ComponentError, VacuumError
from .grid import Field, FourierGrid
from .laws import ConstitutiveLaws
from .spectral import div_spec, grad_spec
from .states import EKState

VACUUM_THRESHOLD = 1e-6


@dataclass
class WaveFunction:
    psi: Field
    time: float = 0.0

    def __post_init__(self):
        if not self.psi.is_scalar:
            raise ComponentError("wave function must be a scalar field")
        if not np.all(np.isfinite(self.psi.data)):
            raise FloatingPointError("non-finite wave function samples")

    @property
    def grid(self):
        return self.psi.grid

    def density(self):
        return np.abs(self.psi.values) ** 2

    def renormalized_mass(self):
        """integral of (|psi|^2 - 1); finite for far-field-1 states."""
        return float(self.grid.integrate(self.density() - 1.0))

    def conjugate(self):
        return WaveFunction(Field.scalar(self.grid, np.conj(self.psi.values)), self.time)


def gp_step(w: WaveFunction, dt: float, laws: ConstitutiveLaws) -> WaveFunction:
    """One Strang step: half phase rotation, exact dispersion, half phase."""
    grid = w.grid
    psi = w.psi.values.astype(complex)
    phase = np.exp(-1j * (dt / 4.0) * laws.g(np.abs(psi) ** 2))
    psi = psi * phase
    psi = grid.ifft(grid.fft(psi) * np.exp(-1j * dt * grid.k_squared))
    psi = psi * np.exp(-1j * (dt / 4.0) * laws.g(np.abs(psi) ** 2))
    return WaveFunction(Field.scalar(grid, psi), w.time + dt)


def gp_evolve(w: WaveFunction, t: float, dt: float, laws: ConstitutiveLaws) -> WaveFunction:
    n = int(round(t / dt))
    for _ in range(n):
        w = gp_step(w, dt, laws)
    return w


# ---------------------------------------------------------------------------
# Madelung transforms
# ---------------------------------------------------------------------------

def madelung(rho: Field, phi_phase: Field, time: float = 0.0) -> WaveFunction:
    """psi = sqrt(rho) e^{i phi}."""
    if not (rho.is_scalar and phi_phase.is_scalar):
        raise ComponentError("madelung expects scalar density and phase")
    psi = np.sqrt(rho.values) * np.exp(1j * phi_phase.values)
    return WaveFunction(Field.scalar(rho.grid, psi), time)


def inverse_madelung(w: WaveFunction, threshold: float = VACUUM_THRESHOLD):
    """(rho, u) = (|psi|^2, Im(conj(psi) grad psi) / |psi|^2).

    For a plane wave e^{ikx} this returns u = k, the phase gradient.
    Raises once |psi|^2 dips to the vacuum threshold, where the map is
    singular.
    """
    grid = w.grid
    rho = w.density()
    if float(np.min(rho)) <= threshold:
        raise VacuumError(f"min |psi|^2 = {np.min(rho):.3e} at or below {threshold:.1e}")
    gpsi = grid.ifft(grad_spec(grid, w.psi.spectral[0]))
    u = np.imag(np.conj(w.psi.values)[None] * gpsi) / rho[None]
    return Field.scalar(grid, rho), Field.vector(grid, u)


def fluid_state(w: WaveFunction, threshold: float = VACUUM_THRESHOLD) -> EKState:
    """Fluid variables matched to the capillary system's velocity.

    For this normalization of the nonlinearity the continuity equation
    closes with twice the phase gradient, so the fluid velocity is 2u
    with u the inverse-transform velocity.
    """
    rho, u = inverse_madelung(w, threshold)
    return EKState(rho=rho, u=2.0 * u, time=w.time)


# ---------------------------------------------------------------------------
# vacuum-formation experiment
# ---------------------------------------------------------------------------

@dataclass
class BlowupReport:
    second_derivative: float = float("nan")
    predicted: float = float("nan")
    first_derivative_max: float = float("nan")
    quadratic_coefficient: float = float("nan")
    alpha: float = float("nan")
    forward_time: float = float("nan")
    vacuum_time: float = float("nan")
    min_density_at_vacuum: float = float("nan")
    grad_u_history: List[float] = dataclass_field(default_factory=list)
    grad_u_times: List[float] = dataclass_field(default_factory=list)
    characteristic_residual: float = float("nan")
    notes: List[str] = dataclass_field(default_factory=list)


def gaussian_notch(grid: FourierGrid, width: float = 1.0) -> WaveFunction:
    """psi0 = 1 - exp(-|x - x_c|^2 / (2 width^2)), real with one zero."""
    x = grid.meshgrid()
    centered = [x[i] - grid.lengths[i] / 2.0 for i in range(grid.dim)]
    r2 = sum(c * c for c in centered)
    vals = 1.0 - np.exp(-r2 / (2.0 * width**2))
    return WaveFunction(Field.scalar(grid, vals.astype(complex)))


def _center_index(grid):
    return tuple(n // 2 for n in grid.shape)


def _fourier_eval(grid, spec_scalar, x):
    """Evaluate a one-dimensional band-limited field at an arbitrary point."""
    k = grid.wavenumbers[0]
    return np.real(np.sum(spec_scalar * np.exp(1j * k * x)) / grid.npoints)


def _second_derivative_density(w0, dt_fd, dt, laws, idx):
    # |psi|^2 is even in t for real data; 5-point centered stencil collapses
    # to the forward samples
    f = []
    for h in (dt_fd, 2.0 * dt_fd):
        n = max(1, int(round(h / dt)))
        wt = gp_evolve(w0, h, h / n, laws)
        f.append(float(np.abs(wt.psi.values[idx]) ** 2))
    f0 = float(np.abs(w0.psi.values[idx]) ** 2)
    return (-2.0 * f[1] + 32.0 * f[0] - 30.0 * f0) / (12.0 * dt_fd**2)


def blowup_experiment(w0: WaveFunction, laws: ConstitutiveLaws, *,
                      dt: float = 1e-4, forward_time: float = 0.25,
                      dt_fd: float = 1e-3, vacuum_threshold: float = VACUUM_THRESHOLD,
                      admissible_floor: float = 1e-3,
                      track_offset: float = 1.0) -> BlowupReport:
    """Measure the quadratic vacuum-filling rate and re-form the vacuum.

    Steps: (i) check d|psi|^2/dt vanishes at t = 0 for real data;
    (ii) measure d^2|psi|^2/dt^2 at the zero and compare with twice the
    squared Laplacian of the datum there; (iii) fit the quadratic growth
    of the density at the zero; (iv) run forward, conjugate and run
    forward again until the density re-forms a vacuum; (v) along the
    backward (conjugated) run, track max|grad u| and the characteristic
    identity rho(t, X(t)) = rho0(X(0)) exp(-int div u).
    """
    grid = w0.grid
    report = BlowupReport()
    vals0 = w0.psi.values
    if float(np.max(np.abs(vals0.imag))) > 1e-12:
        raise ComponentError("the construction requires a real initial datum")
    idx = _center_index(grid)
    if abs(vals0[idx]) > 1e-10:
        raise ComponentError("initial datum must vanish at the domain center")
    lap0 = grid.ifft(-grid.k_squared * w0.psi.spectral[0])
    lap_center = complex(lap0[idx])
    if abs(lap_center) < 1e-8:
        raise ComponentError("Laplacian of the datum must not vanish at the zero")
    report.predicted = 2.0 * abs(lap_center) ** 2

    # (i) first derivative of the density at t = 0 (centered difference;
    # psi(-t) = conj(psi(t)) for real data)
    n_fd = max(1, int(round(dt_fd / dt)))
    w_plus = gp_evolve(w0, dt_fd, dt_fd / n_fd, laws)
    d_plus = np.abs(w_plus.psi.values) ** 2
    d_minus = np.abs(np.conj(w_plus.psi.values)) ** 2
    report.first_derivative_max = float(np.max(np.abs(d_plus - d_minus))) / (2.0 * dt_fd)

    # (ii) second derivative, Richardson-extrapolated once
    coarse = _second_derivative_density(w0, dt_fd, dt, laws, idx)
    fine = _second_derivative_density(w0, dt_fd / 2.0, dt, laws, idx)
    report.second_derivative = (4.0 * fine - coarse) / 3.0

    # alpha: infimum of the measured second derivative near the zero
    neighborhood = []
    for shift in (-1, 0, 1):
        jdx = tuple((i + shift) % n for i, n in zip(idx, grid.shape))
        coarse_j = _second_derivative_density(w0, dt_fd, dt, laws, jdx)
        fine_j = _second_derivative_density(w0, dt_fd / 2.0, dt, laws, jdx)
        neighborhood.append((4.0 * fine_j - coarse_j) / 3.0)
    report.alpha = float(min(neighborhood))

    # (iii) quadratic fit of the density at the zero on a small window
    ts = np.linspace(2 * dt_fd, 20 * dt_fd, 10)
    w = w0
    t_prev = 0.0
    samples = []
    for t in ts:
        n = max(1, int(round((t - t_prev) / dt)))
        w = gp_evolve(w, t - t_prev, (t - t_prev) / n, laws)
        t_prev = t
        samples.append(float(np.abs(w.psi.values[idx]) ** 2))
    report.quadratic_coefficient = float(
        np.sum(np.asarray(samples) * ts**2) / np.sum(ts**4)
    )

    # (iv) forward run, conjugate, forward again until vacuum.  The datum
    # starts at vacuum, which fills in quadratically; only a *return* to
    # vacuum after filling invalidates the configuration.
    nsteps = int(round(forward_time / dt))
    w = w0
    filled = False
    for _ in range(nsteps):
        w = gp_step(w, dt, laws)
        min_rho_fwd = float(np.min(np.abs(w.psi.values) ** 2))
        if min_rho_fwd > 100.0 * vacuum_threshold:
            filled = True
        elif filled and min_rho_fwd <= vacuum_threshold:
            raise VacuumError("forward run returned to vacuum; configuration invalid")
    if not filled:
        raise VacuumError("forward run never filled the vacuum; configuration invalid")
    report.forward_time = w.time
    back = WaveFunction(Field.scalar(grid, np.conj(w.psi.values)), 0.0)

    # (v) backward run with monitoring
    x0 = (grid.lengths[0] / 2.0 + track_offset) % grid.lengths[0] if grid.dim == 1 else None
    x_track = x0
    div_integral = 0.0
    rho0_at_x0 = None
    prev_u = prev_div = None
    track_active = grid.dim == 1
    last_rho_at_x = float("nan")
    for i in range(2 * nsteps):
        rho_now = np.abs(back.psi.values) ** 2
        min_rho = float(np.min(rho_now))
        if min_rho <= vacuum_threshold:
            report.vacuum_time = back.time
            report.min_density_at_vacuum = min_rho
            break
        if min_rho > admissible_floor:
            try:
                state = fluid_state(back, threshold=admissible_floor * 0.5)
            except VacuumError:
                state = None
            if state is not None:
                gmax = 0.0
                for j in range(grid.dim):
                    gu = grid.ifft(grad_spec(grid, state.u.spectral[j]), real=True)
                    gmax = max(gmax, float(np.max(np.abs(gu))))
                report.grad_u_history.append(gmax)
                report.grad_u_times.append(back.time)
                if track_active:
                    u_spec = state.u.spectral[0]
                    div_spec_arr = div_spec(grid, state.u.spectral)
                    u_here = _fourier_eval(grid, u_spec, x_track)
                    div_here = _fourier_eval(grid, div_spec_arr, x_track)
                    if rho0_at_x0 is None:
                        rho0_at_x0 = _fourier_eval(grid, grid.fft(rho_now), x_track)
                    if prev_u is not None:
                        # Heun update of the particle path and trapezoid
                        # accumulation of the divergence along it
                        x_pred = x_track + dt * prev_u
                        u_pred = _fourier_eval(grid, u_spec, x_pred)
                        x_track = (x_track + 0.5 * dt * (prev_u + u_pred)) % grid.lengths[0]
                        div_new = _fourier_eval(grid, div_spec_arr, x_track)
                        div_integral += 0.5 * dt * (prev_div + div_new)
                        div_here = div_new
                        u_here = _fourier_eval(grid, u_spec, x_track)
                    prev_u, prev_div = u_here, div_here
                    last_rho_at_x = _fourier_eval(grid, grid.fft(rho_now), x_track)
        back = gp_step(back, dt, laws)
    else:
        report.notes.append("backward run did not reach the vacuum threshold")

    if track_active and rho0_at_x0 is not None and np.isfinite(last_rho_at_x):
        expected = rho0_at_x0 * np.exp(-div_integral)
        report.characteristic_residual = abs(last_rho_at_x - expected) / abs(rho0_at_x0)
    else:
        report.notes.append("characteristic tracking not computed")
    return report
