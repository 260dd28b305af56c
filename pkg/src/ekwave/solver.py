"""Time integration of the capillary-fluid dynamics.

The working unknowns are the complex dispersive variable
``psi = Q u + i U^{-1} w``, the solenoidal velocity ``P u`` and the mean
of ``l`` -- together a lossless encoding of the extended state.  The
default scheme is Strang splitting: the linear half-waves ``e^{i dt H/2}``
are applied exactly in Fourier space, and the remaining quadratic
tendencies are advanced with classical RK4.  A plain RK4 scheme on the
full right-hand side and a primitive-variable (rho, u) integrator
(one-dimensional only) are kept as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import List, Optional, Tuple

import numpy as np

from .errors import ComponentError, StabilityError, VacuumError
from .grid import Field, FourierGrid
from .laws import ConstitutiveLaws
from .spectral import (
    div_spec,
    grad_spec,
    inverse_grad_spec,
    proj_p_spec,
    proj_q_spec,
    symbol_h,
    symbol_u,
    symbol_u_inv,
)
from .states import EKState, ExtendedState, from_extended, to_extended

RK4_STABILITY = 2.8


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    scheme: str = "strang"
    dealias: bool = True
    rho_min_stop: float = 1e-3
    criterion_cap: float = 1e3
    norm_blow_cap: float = 1e6
    snapshot_stride: int = 100
    check_stability: bool = True

    def __post_init__(self):
        if self.dt < 0:
            raise StabilityError("dt must be nonnegative")
        if self.scheme not in ("strang", "rk4"):
            raise StabilityError(f"unknown scheme {self.scheme!r}")


@dataclass
class Trajectory:
    times: List[float] = dataclass_field(default_factory=list)
    states: List[ExtendedState] = dataclass_field(default_factory=list)
    termination: str = ""
    min_rho_history: List[float] = dataclass_field(default_factory=list)
    criterion_history: List[float] = dataclass_field(default_factory=list)

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self):
        return self.times[-1]


# ---------------------------------------------------------------------------
# tendencies
# ---------------------------------------------------------------------------

class _Work:
    """Physical-space reconstruction of one (psi, Pu, lmean) triple."""

    __slots__ = ("qu", "qu_spec", "w", "w_spec", "l", "rho", "a", "gp",
                 "pu", "u", "divqu")

    def __init__(self, grid, laws, psi_spec, pu_spec, lmean):
        psi_phys = grid.ifft(psi_spec)
        self.qu = psi_phys.real.copy()
        self.qu_spec = grid.fft(self.qu)
        self.w_spec = grid.fft(psi_phys.imag) * symbol_u(grid)
        self.w = grid.ifft(self.w_spec, real=True)
        l_spec = inverse_grad_spec(grid, self.w_spec)
        l_spec[(0,) * grid.dim] = lmean * grid.npoints
        self.l = grid.ifft(l_spec, real=True)
        self.rho = laws.rho_of_l(self.l)
        laws.check_density(self.rho, "tendency evaluation")
        self.a = laws.a(self.rho)
        # pressure slope with respect to the potential variable:
        # d g(rho(l)) / dl = g'(rho) drho/dl = g'(rho) rho / a(rho)
        self.gp = laws.dg(self.rho) * self.rho / self.a
        self.pu = grid.ifft(pu_spec, real=True)
        self.u = self.pu + self.qu
        self.divqu = grid.ifft(div_spec(grid, self.qu_spec), real=True)


def _dealias_fft(grid, phys, on):
    spec = grid.fft(phys)
    return spec * grid.dealias_mask if on else spec


def nonlinear_tendencies(grid: FourierGrid, laws: ConstitutiveLaws,
                         psi_spec, pu_spec, lmean, dealias=True):
    """Quadratic-and-higher tendencies of (psi, Pu, mean l).

    The linear half-wave part ``i H psi`` is excluded; it is applied
    exactly by the splitting.  Returns ``(dpsi, dPu, dlmean)`` with the
    field tendencies in spectral form.
    """
    work = _Work(grid, laws, psi_spec, pu_spec, lmean)
    u_dot_w = np.sum(work.u * work.w, axis=0)

    # potential equation: full dl = -u.w - a div(Qu); linear part -div(Qu)
    dl_full = -u_dot_w - work.a * work.divqu
    dlmean = float(np.mean(dl_full))
    nl_l = -u_dot_w + (1.0 - work.a) * work.divqu
    dw_nl = grad_spec(grid, _dealias_fft(grid, nl_l, dealias))

    # advective coupling through the solenoidal part
    dpu_grad = np.stack([grid.ifft(grad_spec(grid, pu_spec[j]), real=True)
                         for j in range(grid.dim)], axis=1)
    dqu_grad = np.stack([grid.ifft(grad_spec(grid, work.qu_spec[j]), real=True)
                         for j in range(grid.dim)], axis=1)
    adv = (np.einsum("i...,ji...->j...", work.u, dpu_grad)
           + np.einsum("i...,ji...->j...", work.pu, dqu_grad))
    adv_spec = _dealias_fft(grid, adv, dealias)

    quad = 0.5 * (np.sum(work.qu * work.qu, axis=0) - np.sum(work.w * work.w, axis=0))
    n_spec = proj_q_spec(grid, adv_spec) + grad_spec(grid, _dealias_fft(grid, quad, dealias))

    divw = grid.ifft(div_spec(grid, work.w_spec), real=True)
    stiff_spec = grad_spec(grid, _dealias_fft(grid, (work.a - 1.0) * divw, dealias))
    relax_spec = _dealias_fft(grid, (2.0 - work.gp) * work.w, dealias)

    dqu_nl = proj_q_spec(grid, -n_spec + stiff_spec + relax_spec)
    dpsi = dqu_nl + 1j * symbol_u_inv(grid) * dw_nl
    dpu = -proj_p_spec(grid, adv_spec)
    return dpsi, dpu, dlmean


def rhs_extended(s: ExtendedState, laws: ConstitutiveLaws, dealias=True):
    """Full tendencies (dl, dw, du) of the extended formulation.

    ``dw`` is computed as the spectral gradient of ``dl``, so the
    gradient structure of w is preserved exactly at the level of the
    right-hand side.
    """
    grid = s.grid
    psi_spec, pu_spec, lmean = encode(s)
    dpsi, dpu, _ = nonlinear_tendencies(grid, laws, psi_spec, pu_spec, lmean, dealias)

    work = _Work(grid, laws, psi_spec, pu_spec, lmean)
    dl_full = -np.sum(work.u * work.w, axis=0) - work.a * work.divqu
    if dealias:
        dl_spec = _dealias_fft(grid, dl_full, True)
        dl_full = grid.ifft(dl_spec, real=True)
    else:
        dl_spec = grid.fft(dl_full)
    dw_spec = grad_spec(grid, dl_spec[0] if dl_spec.ndim > grid.dim else dl_spec)

    # full Qu tendency: add the linear (Laplacian - 2) w part to the
    # nonlinear piece carried in Re(dpsi)
    lin_qu = -(grid.k_squared + 2.0) * work.w_spec
    dqu_spec = grid.fft(grid.ifft(dpsi).real)
    du_spec = dqu_spec + lin_qu + dpu

    dl = Field.from_spectral(grid, dl_spec if dl_spec.ndim > grid.dim else dl_spec[None],
                             real=True)
    dw = Field.from_spectral(grid, dw_spec, real=True)
    du = Field.from_spectral(grid, du_spec, real=True)
    return dl, dw, du


def rho_tendency(s: EKState):
    """d(rho)/dt = -div(rho u) in divergence form; the mean vanishes exactly."""
    grid = s.rho.grid
    flux = s.rho.values * s.u.data
    return Field.from_spectral(grid, -div_spec(grid, grid.fft(flux))[None], real=True)


# ---------------------------------------------------------------------------
# encoding between ExtendedState and the solver unknowns
# ---------------------------------------------------------------------------

def encode(s: ExtendedState):
    grid = s.grid
    u_spec = s.u.spectral
    qu_spec = proj_q_spec(grid, u_spec)
    pu_spec = proj_p_spec(grid, u_spec)
    psi_spec = qu_spec + 1j * symbol_u_inv(grid) * s.w.spectral
    return psi_spec, pu_spec, float(s.l.mean()[0])


def decode(grid, psi_spec, pu_spec, lmean, time):
    psi_phys = grid.ifft(psi_spec)
    qu_spec = proj_q_spec(grid, grid.fft(psi_phys.real))
    w_spec = proj_q_spec(grid, grid.fft(psi_phys.imag) * symbol_u(grid))
    l_spec = inverse_grad_spec(grid, w_spec)
    l_spec[(0,) * grid.dim] = lmean * grid.npoints
    l = Field.from_spectral(grid, l_spec[None], real=True)
    w = Field.from_spectral(grid, grad_spec(grid, l_spec), real=True)
    u = Field.from_spectral(grid, proj_p_spec(grid, pu_spec) + qu_spec, real=True)
    return ExtendedState(l=l, w=w, u=u, time=time)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def stability_bound(s: ExtendedState, laws: ConstitutiveLaws, scheme="strang"):
    """Heuristic admissible time step for the RK4 substeps.

    The advective rate is ``max|u| k_max``; the capillary coefficient
    deviation contributes ``max|a - 1| k_max^2``; a plain RK4 scheme must
    additionally resolve the full dispersion rate ``max H``.
    """
    grid = s.grid
    kmax = float(np.max(grid.k_magnitude[grid.dealias_mask]))
    rho = laws.rho_of_l(s.l.values)
    a = laws.a(rho)
    gp = laws.dg(rho)
    rate = (float(np.max(np.abs(s.u.data))) * kmax
            + float(np.max(np.abs(a - 1.0))) * kmax**2
            + float(np.max(np.abs(2.0 - gp)))
            + 1e-12)
    if scheme == "rk4":
        rate += kmax * np.sqrt(2.0 + kmax**2)
    return RK4_STABILITY / rate


def _rk4(grid, laws, psi, pu, lmean, dt, dealias, include_linear=False):
    h = symbol_h(grid) if include_linear else None

    def f(p, q, m):
        dp, dq, dm = nonlinear_tendencies(grid, laws, p, q, m, dealias)
        if include_linear:
            dp = dp + 1j * h * p
        return dp, dq, dm

    k1 = f(psi, pu, lmean)
    k2 = f(psi + 0.5 * dt * k1[0], pu + 0.5 * dt * k1[1], lmean + 0.5 * dt * k1[2])
    k3 = f(psi + 0.5 * dt * k2[0], pu + 0.5 * dt * k2[1], lmean + 0.5 * dt * k2[2])
    k4 = f(psi + dt * k3[0], pu + dt * k3[1], lmean + dt * k3[2])
    psi = psi + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    pu = pu + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    lmean = lmean + (dt / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return psi, pu, lmean


def step_encoded(grid, laws, cfg, psi, pu, lmean):
    dt = cfg.dt
    if dt == 0.0:
        return psi, pu, lmean
    if cfg.scheme == "strang":
        half = np.exp(1j * (dt / 2.0) * symbol_h(grid))
        psi = psi * half
        psi, pu, lmean = _rk4(grid, laws, psi, pu, lmean, dt, cfg.dealias)
        psi = psi * half
    else:
        psi, pu, lmean = _rk4(grid, laws, psi, pu, lmean, dt, cfg.dealias,
                              include_linear=True)
    # enforce the representation invariants: Re psi potential, Im psi
    # potential, Pu solenoidal
    psi_phys = grid.ifft(psi)
    psi = (proj_q_spec(grid, grid.fft(psi_phys.real))
           + 1j * proj_q_spec(grid, grid.fft(psi_phys.imag)))
    pu = proj_p_spec(grid, pu)
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(pu)) and np.isfinite(lmean)):
        raise FloatingPointError("non-finite values after step")
    return psi, pu, lmean


def step(s: ExtendedState, cfg: SolverConfig, laws: ConstitutiveLaws) -> ExtendedState:
    """Advance one time step, returning a valid extended state."""
    grid = s.grid
    if cfg.check_stability and cfg.dt > 0:
        bound = stability_bound(s, laws, cfg.scheme)
        if cfg.dt > bound:
            raise StabilityError(f"dt = {cfg.dt:.3e} exceeds estimated bound {bound:.3e}")
    psi, pu, lmean = encode(s)
    psi, pu, lmean = step_encoded(grid, laws, cfg, psi, pu, lmean)
    return decode(grid, psi, pu, lmean, s.time + cfg.dt)


def simulate(s0: EKState, cfg: SolverConfig, laws: ConstitutiveLaws) -> Trajectory:
    """Integrate to t_end with vacuum and continuation-criterion monitors.

    The monitors implement the two continuation conditions: the running
    minimum of rho against ``rho_min_stop`` and the time integral of
    ``max|lap rho| + max|grad u|`` against ``criterion_cap``.
    """
    grid = s0.grid
    ext = to_extended(s0, laws)
    if cfg.check_stability and cfg.dt > 0:
        bound = stability_bound(ext, laws, cfg.scheme)
        if cfg.dt > bound:
            raise StabilityError(f"dt = {cfg.dt:.3e} exceeds estimated bound {bound:.3e}")
    psi, pu, lmean = encode(ext)
    traj = Trajectory()
    t = ext.time
    criterion = 0.0
    nsteps = int(round((cfg.t_end - t) / cfg.dt)) if cfg.dt > 0 else 0

    def record(i):
        state = decode(grid, psi, pu, lmean, t)
        traj.times.append(t)
        traj.states.append(state)

    def monitor_values():
        w_spec = grid.fft(grid.ifft(psi).imag) * symbol_u(grid)
        l_spec = inverse_grad_spec(grid, w_spec)
        l_spec[(0,) * grid.dim] = lmean * grid.npoints
        lphys = grid.ifft(l_spec, real=True)
        rho = laws.rho_of_l(lphys)
        lap_rho = grid.ifft(-grid.k_squared * grid.fft(rho), real=True)
        u_spec = proj_p_spec(grid, pu) + proj_q_spec(grid, grid.fft(grid.ifft(psi).real))
        gmax = 0.0
        for j in range(grid.dim):
            gu = grid.ifft(grad_spec(grid, u_spec[j]), real=True)
            gmax = max(gmax, float(np.max(np.abs(gu))))
        return float(np.min(rho)), float(np.max(np.abs(lap_rho))) + gmax

    record(0)
    min_rho, rate = monitor_values()
    traj.min_rho_history.append(min_rho)
    traj.criterion_history.append(criterion)
    if min_rho <= cfg.rho_min_stop:
        traj.termination = "vacuum"
        return traj

    for i in range(1, nsteps + 1):
        try:
            psi, pu, lmean = step_encoded(grid, laws, cfg, psi, pu, lmean)
        except (FloatingPointError, VacuumError):
            traj.termination = "non_finite"
            record(i)
            return traj
        t += cfg.dt
        min_rho, new_rate = monitor_values()
        criterion += 0.5 * (rate + new_rate) * cfg.dt
        rate = new_rate
        if i % cfg.snapshot_stride == 0 or i == nsteps:
            record(i)
            traj.min_rho_history.append(min_rho)
            traj.criterion_history.append(criterion)
        if min_rho <= cfg.rho_min_stop:
            if traj.times[-1] != t:
                record(i)
                traj.min_rho_history.append(min_rho)
                traj.criterion_history.append(criterion)
            traj.termination = "vacuum"
            return traj
        if criterion >= cfg.criterion_cap:
            if traj.times[-1] != t:
                record(i)
                traj.min_rho_history.append(min_rho)
                traj.criterion_history.append(criterion)
            traj.termination = "criterion_cap"
            return traj
    traj.termination = "reached_t_end"
    return traj


# ---------------------------------------------------------------------------
# normal-form residual
# ---------------------------------------------------------------------------

def normal_form_residual(s: ExtendedState, laws: ConstitutiveLaws) -> Field:
    """Residual of the transformed w-equation; cubic in the amplitude.

    With ``w1 = w - grad(B[w,w] - B[Qu,Qu])`` the quadratic terms of the
    w-equation collapse into a divergence, leaving

        d/dt w1 + lap Qu - grad div((1-a) Qu) + grad(Pu . w)

    of cubic order.  The time derivative of w1 is expanded through the
    bilinearity of B using the full tendencies of the untransformed
    system.
    """
    from .spectral import bilinear_B

    grid = s.grid
    dl, dw, du = rhs_extended(s, laws)
    dw_spec = dw.spectral
    du_spec = du.spectral
    dqu_spec = proj_q_spec(grid, du_spec)
    pu_spec = proj_p_spec(grid, s.u.spectral)
    qu_spec = proj_q_spec(grid, s.u.spectral)
    qu = Field.from_spectral(grid, qu_spec, real=True)
    pu = Field.from_spectral(grid, pu_spec, real=True)
    dqu = Field.from_spectral(grid, dqu_spec, real=True)
    dw_f = Field.from_spectral(grid, dw_spec, real=True)

    b_w = bilinear_B(s.w, dw_f, laws.strength)
    b_q = bilinear_B(qu, dqu, laws.strength)
    dw1_spec = dw_spec - grad_spec(grid, 2.0 * (b_w.spectral[0] - b_q.spectral[0]))

    rho = laws.rho_of_l(s.l.values)
    a = laws.a(rho)
    lap_qu = -grid.k_squared * qu_spec
    one_minus_a_qu = grid.fft((1.0 - a)[None] * grid.ifft(qu_spec, real=True))
    graddiv = grad_spec(grid, div_spec(grid, one_minus_a_qu))
    pu_dot_w = np.sum(pu.data * s.w.data, axis=0)
    grad_puw = grad_spec(grid, grid.fft(pu_dot_w))

    res_spec = dw1_spec + lap_qu - graddiv + grad_puw
    return Field.from_spectral(grid, res_spec, real=True)


# ---------------------------------------------------------------------------
# lifespan experiment
# ---------------------------------------------------------------------------

def lifespan_experiment(eps, delta_list, grid, laws, cfg, seed, T_max,
                        envelope_C=1.3, envelope_k=1, envelope_p=np.inf,
                        band_limit=4.0, sample_stride=5):
    """T_obs(delta) table for seeded data with solenoidal size delta.

    The observation time is the first firing among: the transport-norm
    envelope (W^{envelope_k, envelope_p} norm of Pu exceeding
    ``envelope_C`` times its initial value; skipped when delta = 0), the
    vacuum monitor and the continuation-criterion cap.  Runs reaching
    ``T_max`` are censored.  Every delta reuses the same seed, so the
    sweep varies only the solenoidal amplitude.
    """
    from .diagnostics import NormSpec, norm as field_norm
    from .initial_data import InitialDataSpec, generate_initial_data

    nspec = NormSpec(envelope_k, envelope_p)
    rows = []
    for delta in delta_list:
        ids = InitialDataSpec(amplitude=eps, solenoidal=float(delta),
                              band_limit=band_limit)
        s0 = generate_initial_data(ids, grid, laws, seed)
        ext = to_extended(s0, laws)
        psi, pu, lmean = encode(ext)
        pu_field = Field.from_spectral(grid, pu, real=True)
        transport0 = field_norm(pu_field, nspec)
        t = 0.0
        criterion = 0.0
        prev_rate = None
        T_obs, censored, reason = float(T_max), True, "censored"
        nsteps = int(round(T_max / cfg.dt))
        for i in range(1, nsteps + 1):
            try:
                psi, pu, lmean = step_encoded(grid, laws, cfg, psi, pu, lmean)
            except (FloatingPointError, VacuumError):
                T_obs, censored, reason = t, False, "non_finite"
                break
            t = i * cfg.dt
            if i % sample_stride and i != nsteps:
                continue
            w_spec = grid.fft(grid.ifft(psi).imag) * symbol_u(grid)
            l_spec = inverse_grad_spec(grid, w_spec)
            l_spec[(0,) * grid.dim] = lmean * grid.npoints
            rho = laws.rho_of_l(grid.ifft(l_spec, real=True))
            lap_rho = grid.ifft(-grid.k_squared * grid.fft(rho), real=True)
            u_spec = proj_p_spec(grid, pu) + proj_q_spec(grid, grid.fft(grid.ifft(psi).real))
            gmax = 0.0
            for j in range(grid.dim):
                gu = grid.ifft(grad_spec(grid, u_spec[j]), real=True)
                gmax = max(gmax, float(np.max(np.abs(gu))))
            rate = float(np.max(np.abs(lap_rho))) + gmax
            if prev_rate is not None:
                criterion += 0.5 * (prev_rate + rate) * cfg.dt * sample_stride
            prev_rate = rate
            if float(np.min(rho)) <= cfg.rho_min_stop:
                T_obs, censored, reason = t, False, "vacuum"
                break
            if criterion >= cfg.criterion_cap:
                T_obs, censored, reason = t, False, "criterion_cap"
                break
            if delta > 0:
                transport = field_norm(Field.from_spectral(grid, pu, real=True), nspec)
                if transport > envelope_C * transport0:
                    T_obs, censored, reason = t, False, "envelope"
                    break
        rows.append({"delta": float(delta), "T_obs": float(T_obs),
                     "censored": censored, "reason": reason,
                     "product": float(T_obs) * float(delta)})
    return rows


# ---------------------------------------------------------------------------
# primitive-variable cross-check (one-dimensional)
# ---------------------------------------------------------------------------

def rhs_primitive(s: EKState, laws: ConstitutiveLaws, dealias=True):
    """(d rho, d u) of the primitive formulation; one-dimensional only."""
    grid = s.rho.grid
    if grid.dim != 1:
        raise ComponentError("primitive integration is a one-dimensional cross-check")
    laws.check_density(s.rho.values, "primitive tendency")
    rho = s.rho.values
    u = s.u.data[0]

    def ddx(phys):
        spec = grid.fft(phys)
        if dealias:
            spec = spec * grid.dealias_mask
        return grid.ifft(1j * grid.kaxis_diff(0) * spec, real=True)

    flux = rho * u
    spec_flux = grid.fft(flux)
    if dealias:
        spec_flux = spec_flux * grid.dealias_mask
    drho = grid.ifft(-1j * grid.kaxis_diff(0) * spec_flux, real=True)

    drho_dx = ddx(rho)
    lap_rho = grid.ifft(-grid.k_squared * grid.fft(rho), real=True)
    K = laws.K(rho)
    dK = laws.dK(rho)
    capillary = K * lap_rho + 0.5 * dK * drho_dx**2
    du = -u * ddx(u) - laws.dg(rho) * drho_dx + ddx(capillary)
    if dealias:
        du = grid.ifft(grid.fft(du) * grid.dealias_mask, real=True)
    return drho, du


def step_primitive(s: EKState, dt: float, laws: ConstitutiveLaws, dealias=True) -> EKState:
    """Classical RK4 step of the primitive system; conserves mass exactly."""
    grid = s.rho.grid

    def f(rho, u):
        state = EKState(Field.scalar(grid, rho), Field.vector(grid, u[None]), s.time)
        return rhs_primitive(state, laws, dealias)

    rho, u = s.rho.values, s.u.data[0]
    k1 = f(rho, u)
    k2 = f(rho + 0.5 * dt * k1[0], u + 0.5 * dt * k1[1])
    k3 = f(rho + 0.5 * dt * k2[0], u + 0.5 * dt * k2[1])
    k4 = f(rho + dt * k3[0], u + dt * k3[1])
    rho = rho + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    u = u + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return EKState(Field.scalar(grid, rho), Field.vector(grid, u[None]), s.time + dt)
