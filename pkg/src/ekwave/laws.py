"""Constitutive laws for the capillary fluid: K(rho), g(rho) and derived functions.

The derived quantities are ``a(rho) = sqrt(rho K(rho))`` and the primitive

    l(rho) = int_1^rho sqrt(K(r)/r) dr,

which carries the density into the variable whose gradient is
``w = sqrt(K/rho) grad rho``.  Construction enforces the normalization
``a(1) = 1`` and ``g'(1) = 2``; the linearized dispersion relation is
then the same for every admissible law.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from .errors import NormalizationError, VacuumError

RHO_FLOOR = 1e-6
RHO_CEIL = 1e6
_NORM_TOL = 1e-12


def _derivative(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


class ConstitutiveLaws:
    """Capillarity/pressure pair with the derived a(rho) and primitive l(rho).

    Parameters are callables acting elementwise on arrays.  ``kind`` tags
    the capillarity for closed-form shortcuts: "quantum" (K = 1/rho,
    l = ln rho), "constant" (K = K0, l = 2 sqrt(K0) (sqrt(rho) - 1)),
    "linear" (K = rho, l = rho - 1) or "custom".
    """

    def __init__(self, K, dK, g, dg, kind="custom", K0=1.0,
                 rho_floor=RHO_FLOOR, rho_ceil=RHO_CEIL):
        self.K = K
        self.dK = dK
        self.g = g
        self.dg = dg
        self.kind = kind
        self.K0 = float(K0)
        self.rho_floor = float(rho_floor)
        self.rho_ceil = float(rho_ceil)

        a1 = float(self.a(np.asarray(1.0)))
        g1 = float(self.dg(np.asarray(1.0)))
        if abs(a1 - 1.0) > _NORM_TOL:
            raise NormalizationError(f"a(1) = {a1!r}, expected 1")
        if abs(g1 - 2.0) > _NORM_TOL:
            raise NormalizationError(f"g'(1) = {g1!r}, expected 2")

    # -- factories ------------------------------------------------------
    @classmethod
    def quantum(cls, g=None, dg=None):
        """K = 1/rho (a == 1, l = ln rho); the wave-function correspondence."""
        g, dg = _default_pressure(g, dg)
        return cls(lambda r: 1.0 / r, lambda r: -1.0 / r**2, g, dg, kind="quantum")

    @classmethod
    def constant(cls, K0=1.0, g=None, dg=None):
        """Constant capillarity; normalization requires K0 = 1."""
        g, dg = _default_pressure(g, dg)
        K0 = float(K0)
        return cls(lambda r: np.full_like(np.asarray(r, dtype=float), K0),
                   lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                   g, dg, kind="constant", K0=K0)

    @classmethod
    def linear(cls, g=None, dg=None):
        """K = rho (a = rho, a'(1) = 1: the pseudo-product strength vanishes)."""
        g, dg = _default_pressure(g, dg)
        return cls(lambda r: np.asarray(r, dtype=float),
                   lambda r: np.ones_like(np.asarray(r, dtype=float)),
                   g, dg, kind="linear")

    @classmethod
    def polynomial(cls, K_coeffs, g_coeffs=None):
        """K and g as polynomials in (rho - 1), low-order coefficient first."""
        kp = np.asarray(K_coeffs, dtype=float)
        dkp = np.polynomial.polynomial.polyder(kp) if kp.size > 1 else np.zeros(1)

        def K(r):
            return np.polynomial.polynomial.polyval(np.asarray(r) - 1.0, kp)

        def dK(r):
            return np.polynomial.polynomial.polyval(np.asarray(r) - 1.0, dkp)

        if g_coeffs is None:
            g, dg = _default_pressure(None, None)
        else:
            gp = np.asarray(g_coeffs, dtype=float)
            dgp = np.polynomial.polynomial.polyder(gp)

            def g(r):
                return np.polynomial.polynomial.polyval(np.asarray(r) - 1.0, gp)

            def dg(r):
                return np.polynomial.polynomial.polyval(np.asarray(r) - 1.0, dgp)

        return cls(K, dK, g, dg, kind="custom")

    @classmethod
    def by_name(cls, name, **kwargs):
        table = {"quantum": cls.quantum, "constant": cls.constant, "linear": cls.linear,
                 "polynomial": cls.polynomial}
        if name not in table:
            raise NormalizationError(f"unknown constitutive law {name!r}")
        return table[name](**kwargs)

    # -- derived quantities ---------------------------------------------
    def check_density(self, rho, context="density"):
        m = float(np.min(rho))
        if not np.isfinite(m) or m <= self.rho_floor:
            raise VacuumError(f"{context}: min rho = {m:.3e} at or below floor {self.rho_floor:.1e}")
        if float(np.max(rho)) >= self.rho_ceil:
            raise VacuumError(f"{context}: max rho above ceiling {self.rho_ceil:.1e}")

    def a(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.sqrt(rho * self.K(rho))

    def da(self, rho):
        """a'(rho) = (K + rho K') / (2 a)."""
        rho = np.asarray(rho, dtype=float)
        return (self.K(rho) + rho * self.dK(rho)) / (2.0 * self.a(rho))

    @property
    def strength(self):
        """a'(1) - 1, the coefficient of the bilinear normal-form symbol."""
        return float(self.da(np.asarray(1.0))) - 1.0

    def sqrt_K_over_rho(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.sqrt(self.K(rho) / rho)

    def l_of_rho(self, rho):
        """The primitive int_1^rho sqrt(K/r) dr, elementwise."""
        rho = np.asarray(rho, dtype=float)
        if self.kind == "quantum":
            return np.log(rho)
        if self.kind == "constant":
            return 2.0 * np.sqrt(self.K0) * (np.sqrt(rho) - 1.0)
        if self.kind == "linear":
            return rho - 1.0
        return _gauss_primitive(lambda s: np.sqrt(self.K(s) / s), rho)

    def rho_of_l(self, l):
        """Inverse of the primitive (l is strictly increasing in rho)."""
        l = np.asarray(l, dtype=float)
        if self.kind == "quantum":
            return np.exp(l)
        if self.kind == "constant":
            return (1.0 + l / (2.0 * np.sqrt(self.K0))) ** 2
        if self.kind == "linear":
            return 1.0 + l
        flat = l.ravel()
        out = np.empty_like(flat)
        cache = {}

        def bracket(key):
            # expand geometrically from rho = 1; stops early where K(rho)
            # turns nonpositive (the law's admissible window ends there)
            lo = hi = 1.0
            factor = 2.0
            while True:
                nxt = hi * factor if key > 0 else lo / factor
                if not (self.rho_floor <= nxt <= self.rho_ceil):
                    raise VacuumError("primitive inversion left the admissible density window")
                with np.errstate(invalid="ignore"):
                    val = self.l_of_rho(np.asarray(nxt))
                if not np.isfinite(val):
                    # stepped past the edge of the admissible window
                    # (K turned nonpositive); creep toward it instead
                    factor = np.sqrt(factor)
                    if factor - 1.0 < 1e-12:
                        raise VacuumError("primitive value unreachable: capillarity "
                                          "vanishes before the target density")
                    continue
                if key > 0:
                    hi = nxt
                    if val >= key:
                        return lo, hi
                    lo = hi
                else:
                    lo = nxt
                    if val <= key:
                        return lo, hi
                    hi = lo

        for i, li in enumerate(flat):
            key = float(li)
            if key not in cache:
                if key == 0.0:
                    cache[key] = 1.0
                else:
                    lo, hi = bracket(key)
                    cache[key] = optimize.brentq(
                        lambda r: float(self.l_of_rho(np.asarray(r))) - key, lo, hi,
                    )
            out[i] = cache[key]
        return out.reshape(l.shape)

    def G(self, rho):
        """Pressure potential int_1^rho (g(s) - g(1)) ds for the energy."""
        rho = np.asarray(rho, dtype=float)
        g1 = float(self.g(np.asarray(1.0)))
        return _gauss_primitive(lambda s: np.asarray(self.g(s)) - g1, rho)


_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _gauss_primitive(fn, rho):
    """int_1^rho fn(s) ds, vectorized over rho via fixed-order Gauss-Legendre.

    Exact for smooth integrands at the chosen order; avoids a Python
    loop over grid points.
    """
    rho = np.asarray(rho, dtype=float)
    half = (rho - 1.0) / 2.0
    mid = (rho + 1.0) / 2.0
    acc = np.zeros_like(rho)
    for xi, wi in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
        acc += wi * np.asarray(fn(mid + half * xi))
    return half * acc


def _default_pressure(g, dg):
    if g is None:
        return (lambda r: np.asarray(r, dtype=float) ** 2 - 1.0,
                lambda r: 2.0 * np.asarray(r, dtype=float))
    if dg is None:
        return g, lambda r: _derivative(g, np.asarray(r, dtype=float))
    return g, dg
