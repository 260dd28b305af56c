"""State representations and the lossless conversions between them.

Three equivalent descriptions of the same flow are used:

* ``EKState``: primitive density/velocity pair (rho, u);
* ``ExtendedState``: (l, w, u) with ``w = grad l`` and ``l`` the
  capillarity primitive of rho;
* ``DispersiveVariable``: complex ``psi = Q u + i U^{-1} w`` (plus the
  untouched solenoidal part and the mean of l), optionally after the
  quadratic change of unknown ``w -> w1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ComponentError, NormalFormError
from .grid import Field
from .laws import ConstitutiveLaws
from .spectral import (
    bilinear_B,
    grad_spec,
    inverse_grad_spec,
    proj_p_spec,
    proj_q_spec,
    symbol_u,
    u_inverse,
)

GRADIENT_TOL = 1e-10


@dataclass
class EKState:
    """Primitive variables: positive density and velocity."""

    rho: Field
    u: Field
    time: float = 0.0

    def __post_init__(self):
        if not self.rho.is_scalar:
            raise ComponentError("rho must be a scalar field")
        if self.u.ncomp != self.u.grid.dim:
            raise ComponentError("u must be a vector field")

    @property
    def grid(self):
        return self.rho.grid


@dataclass
class ExtendedState:
    """(l, w, u) with w = grad l; w is mean-free and curl-free by construction."""

    l: Field
    w: Field
    u: Field
    time: float = 0.0

    @property
    def grid(self):
        return self.l.grid

    def gradient_residual(self):
        """Relative size of w - grad l and of P w (both should be round-off)."""
        grid = self.grid
        gl = grad_spec(grid, self.l.spectral[0])
        scale = max(float(np.max(np.abs(self.w.spectral))), 1e-300)
        mismatch = float(np.max(np.abs(self.w.spectral - gl))) / scale
        pw = float(np.max(np.abs(proj_p_spec(grid, self.w.spectral)))) / scale
        return max(mismatch, pw)

    def validate(self, tol=GRADIENT_TOL):
        res = self.gradient_residual()
        if res > tol:
            raise ComponentError(f"w is not the gradient of l (residual {res:.3e})")


@dataclass
class DispersiveVariable:
    """psi = Q u + i U^{-1} w with the solenoidal part and mean(l) carried along.

    ``psi_normal`` holds the transformed variable with ``w1`` in place of
    ``w`` when the normal form has been applied; ``iterations`` records
    fixed-point diagnostics of the inverse transform when relevant.
    """

    psi: Field
    pu: Field
    lmean: float
    time: float = 0.0
    psi_normal: Optional[Field] = None
    iterations: int = 0

    @property
    def grid(self):
        return self.psi.grid


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def to_extended(s: EKState, laws: ConstitutiveLaws) -> ExtendedState:
    """Map (rho, u) to (l, w, u); errors below the vacuum floor."""
    laws.check_density(s.rho.values, "to_extended")
    grid = s.grid
    lvals = laws.l_of_rho(s.rho.values)
    l = Field.scalar(grid, lvals)
    w = Field.from_spectral(grid, grad_spec(grid, l.spectral[0]), real=True)
    return ExtendedState(l=l, w=w, u=s.u, time=s.time)


def from_extended(s: ExtendedState, laws: ConstitutiveLaws) -> EKState:
    rho = Field.scalar(s.grid, laws.rho_of_l(s.l.values))
    return EKState(rho=rho, u=s.u, time=s.time)


def split_velocity(s: ExtendedState):
    """(Pu, Qu) as fields; mean velocity is carried by neither projector."""
    grid = s.grid
    spec = s.u.spectral
    qu = proj_q_spec(grid, spec)
    pu = proj_p_spec(grid, spec)
    return (Field.from_spectral(grid, pu, real=s.u.is_real),
            Field.from_spectral(grid, qu, real=s.u.is_real))


def to_psi(s: ExtendedState) -> DispersiveVariable:
    """Assemble the complex dispersive variable from an extended state."""
    grid = s.grid
    pu, qu = split_velocity(s)
    uinv_w = u_inverse(s.w)
    psi = Field(grid, qu.data + 1j * uinv_w.data)
    return DispersiveVariable(psi=psi, pu=pu, lmean=float(s.l.mean()[0]), time=s.time)


def from_psi(d: DispersiveVariable) -> ExtendedState:
    """Reconstruct (l, w, u) from psi, the solenoidal part and mean(l)."""
    grid = d.grid
    qu_spec = np.real(grid.ifft(d.psi.spectral)).copy()
    qu_spec = grid.fft(qu_spec)
    im_spec = grid.fft(np.imag(grid.ifft(d.psi.spectral)))
    w_spec = im_spec * symbol_u(grid)
    lspec = inverse_grad_spec(grid, w_spec)
    lspec[(0,) * grid.dim] = d.lmean * grid.npoints
    l = Field.from_spectral(grid, lspec[None], real=True)
    w = Field.from_spectral(grid, grad_spec(grid, lspec), real=True)
    u = Field.from_spectral(grid, d.pu.spectral + qu_spec, real=True)
    return ExtendedState(l=l, w=w, u=u, time=d.time)


# ---------------------------------------------------------------------------
# normal form
# ---------------------------------------------------------------------------

def _w1_from_w(grid, w_spec, qu_corr_spec, laws):
    """w1 spectrum = w - grad(B[w, w]) + (precomputed grad B[Qu, Qu])."""
    w = Field.from_spectral(grid, w_spec, real=True)
    bww = bilinear_B(w, w, laws.strength)
    corr = grad_spec(grid, bww.spectral[0]) - qu_corr_spec
    return w_spec - corr


def normal_form(s: ExtendedState, laws: ConstitutiveLaws) -> DispersiveVariable:
    """Replace w by ``w1 = w - grad(B[w,w] - B[Qu,Qu])`` inside psi."""
    grid = s.grid
    d = to_psi(s)
    if laws.strength == 0.0:
        d.psi_normal = d.psi
        return d
    pu, qu = split_velocity(s)
    bqq = bilinear_B(qu, qu, laws.strength)
    qu_corr = grad_spec(grid, bqq.spectral[0])
    w1_spec = _w1_from_w(grid, s.w.spectral, qu_corr, laws)
    w1 = Field.from_spectral(grid, w1_spec, real=True)
    uinv_w1 = u_inverse(w1)
    d.psi_normal = Field(grid, qu.data + 1j * uinv_w1.data)
    return d


def invert_normal_form(d: DispersiveVariable, laws: ConstitutiveLaws,
                       tol: float = 1e-10, max_iter: int = 50):
    """Recover w from w1 by fixed-point iteration; contracts for small data.

    Returns ``(state, iterations)``.
    """
    if d.psi_normal is None:
        raise NormalFormError("dispersive variable carries no normal-form component")
    grid = d.grid
    spec = d.psi_normal.spectral
    qu_spec = grid.fft(np.real(grid.ifft(spec)))
    w1_spec = grid.fft(np.imag(grid.ifft(spec))) * symbol_u(grid)
    if laws.strength == 0.0:
        w_spec = w1_spec
        iters = 0
    else:
        qu = Field.from_spectral(grid, qu_spec, real=True)
        bqq = bilinear_B(qu, qu, laws.strength)
        qu_corr = grad_spec(grid, bqq.spectral[0])
        w_spec = w1_spec.copy()
        scale = max(float(np.max(np.abs(w1_spec))) / grid.npoints, 1e-300)
        iters = 0
        for iters in range(1, max_iter + 1):
            w_field = Field.from_spectral(grid, w_spec, real=True)
            bww = bilinear_B(w_field, w_field, laws.strength)
            new_spec = w1_spec + grad_spec(grid, bww.spectral[0]) - qu_corr
            step = float(np.max(np.abs(new_spec - w_spec))) / grid.npoints
            w_spec = new_spec
            if step <= tol * max(scale, 1.0):
                break
        else:
            raise NormalFormError(
                f"fixed-point inversion did not contract within {max_iter} iterations"
            )
    lspec = inverse_grad_spec(grid, w_spec)
    lspec[(0,) * grid.dim] = d.lmean * grid.npoints
    l = Field.from_spectral(grid, lspec[None], real=True)
    w = Field.from_spectral(grid, grad_spec(grid, lspec), real=True)
    u = Field.from_spectral(grid, d.pu.spectral + qu_spec, real=True)
    out = ExtendedState(l=l, w=w, u=u, time=d.time)
    return out, iters


def normal_form_correction(s: ExtendedState, laws: ConstitutiveLaws) -> Field:
    """w1 - w as a field (a perfect gradient, quadratic in the amplitude)."""
    grid = s.grid
    if laws.strength == 0.0:
        return Field.zeros(grid, grid.dim)
    _, qu = split_velocity(s)
    bqq = bilinear_B(qu, qu, laws.strength)
    w = s.w
    bww = bilinear_B(w, w, laws.strength)
    corr = grad_spec(grid, bww.spectral[0] - bqq.spectral[0])
    return Field.from_spectral(grid, -corr, real=True)
