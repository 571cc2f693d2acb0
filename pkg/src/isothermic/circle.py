"""Closed-form Darboux transforms of uniformly sampled, multiply covered circles.

The curve is ``f_m = j r exp(2 pi i m / M)`` taken ``rho`` times around, with
constant polarisation ``1/mu = alpha |1 - exp(2 pi i / M)|^2``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import quat as Q
from .errors import NonRealS, TanPole, TransformBlowUp
from .polarised import DiscreteCurve, PolarisedDomain1D, RiccatiState
from .quat import Quaternion


@dataclass(frozen=True)
class CircleSpec:
    r: float = 1.0
    M: int = 12
    rho: int = 1
    alpha: float | None = None  # None means arc-length polarisation, alpha = r**2

    def __post_init__(self):
        if self.M <= 2:
            raise ValueError("M must exceed 2")
        if self.r <= 0:
            raise ValueError("radius must be positive")
        if self.rho < 1:
            raise ValueError("rho must be a positive integer")
        if self.alpha is None:
            object.__setattr__(self, "alpha", float(self.r) ** 2)
        elif self.alpha == 0:
            raise ValueError("alpha must be nonzero")

    @property
    def period(self) -> int:
        return self.rho * self.M

    @property
    def mu(self) -> float:
        return 1.0 / (self.alpha * abs(1 - cmath.exp(2j * math.pi / self.M)) ** 2)


def circle_point(spec: CircleSpec, m: int) -> Quaternion:
    z = spec.r * cmath.exp(2j * math.pi * m / spec.M)
    # j z = Re(z) j - Im(z) k
    return Quaternion(0.0, 0.0, z.real, -z.imag)


def circle_points(spec: CircleSpec, m) -> np.ndarray:
    return Q.j_complex(spec.r * np.exp(2j * np.pi * np.asarray(m) / spec.M))


def circle_curve(spec: CircleSpec) -> DiscreteCurve:
    """The closed curve on ``rho * M`` vertices, periodic with that period."""
    P = spec.period
    dom = PolarisedDomain1D.constant(P, spec.mu, period=P)
    return DiscreteCurve(dom, circle_points(spec, np.arange(P)))


def _cot_tan_sq(k: int, rho: int, M: int) -> float:
    if 2 * k % (rho * M) == 0 and (2 * k // (rho * M)) % 2 == 1:
        raise TanPole(f"k / (rho M) = {k}/{rho * M} hits a pole of tan")
    return (math.tan(k * math.pi / (rho * M)) / math.tan(math.pi / M)) ** 2


def resonance_value(M: int, rho: int, k: int, alpha: float = 1.0) -> float:
    """``(1 / 4 alpha) (1 - cot^2(pi/M) tan^2(k pi / rho M))``."""
    return (1.0 - _cot_tan_sq(k, rho, M)) / (4.0 * alpha)


def resonance_nu(spec: CircleSpec, k: int) -> float:
    return resonance_value(spec.M, spec.rho, k, spec.alpha)


def resonance_points(spec: CircleSpec) -> dict[int, float]:
    """Resonance values for modes ``k = 1 .. floor(rho M / 2)``, skipping tan poles."""
    out = {}
    for k in range(1, spec.period // 2 + 1):
        try:
            out[k] = resonance_nu(spec, k)
        except TanPole:
            continue
    return out


def s_value(spec: CircleSpec, nu: float) -> complex:
    """``sqrt(1 - 4 nu alpha)`` on the principal branch."""
    return cmath.sqrt(1.0 - 4.0 * nu * spec.alpha)


def explicit_basis(spec: CircleSpec, nu: float, m) -> tuple:
    """The four scalar solutions ``(a0+, a0-, a1+, a1-)`` evaluated at ``m``."""
    s = s_value(spec, nu)
    e = cmath.exp(2j * math.pi / spec.M)
    m = np.asarray(m)
    a0p = (0.5 * ((1 + s) / e + (1 - s))) ** m
    a0m = (0.5 * ((1 - s) / e + (1 + s))) ** m
    a1p = (0.5 * (e * (1 - s) + (1 + s))) ** m
    a1m = (0.5 * (e * (1 + s) + (1 - s))) ** m
    return a0p, a0m, a1p, a1m


def general_solution_a(spec: CircleSpec, nu: float, m: int, c) -> Quaternion:
    """``a = a0+ c0 + a0- c1 + j (a1+ c2 + a1- c3)`` for complex constants ``c``."""
    c0, c1, c2, c3 = (complex(v) for v in c)
    a0p, a0m, a1p, a1m = (complex(v) for v in explicit_basis(spec, nu, m))
    arr = Q.from_complex(a0p * c0 + a0m * c1) + Q.j_complex(a1p * c2 + a1m * c3)
    return Quaternion.from_array(arr)


def _real_s(spec: CircleSpec, nu: float) -> float:
    radicand = 1.0 - 4.0 * nu * spec.alpha
    if radicand < 0:
        raise NonRealS(f"1 - 4 nu alpha = {radicand:.6g} < 0")
    return math.sqrt(radicand)


def circle_state(spec: CircleSpec, nu: float, cplus, cminus, m: int) -> RiccatiState:
    """Riccati state at ``m`` for ``a = a0+ c+ + a0- c-`` (needs real ``s``).

    ``b`` follows from ``b_m = -(f_m - f_{m+1})^-1 (a_m - a_{m+1})``.
    """
    _real_s(spec, nu)
    cp, cm = Q.as_quat_array(cplus), Q.as_quat_array(cminus)

    def a_at(n):
        a0p, a0m, _, _ = explicit_basis(spec, nu, n)
        return Q.qmul(Q.from_complex(a0p), cp) + Q.qmul(Q.from_complex(a0m), cm)

    a_m, a_n = a_at(m), a_at(m + 1)
    df = circle_points(spec, m) - circle_points(spec, m + 1)
    b_m = -Q.qmul(Q.qinv(df), a_m - a_n)
    return RiccatiState.from_arrays(a_m, b_m)


def _modes(spec: CircleSpec, k: int):
    th = k * math.pi / spec.period
    sp = math.sin((spec.rho + k) * math.pi / spec.period)
    sm = math.sin((spec.rho - k) * math.pi / spec.period)
    return th, sp, sm


def resonant_alpha_beta(M: int, rho: int, k: int, cplus, cminus, m):
    """``alpha_m`` and ``beta_m`` of the resonant circle solution (vectorised in ``m``)."""
    th = k * math.pi / (rho * M)
    sp = math.sin((rho + k) * math.pi / (rho * M))
    sm = math.sin((rho - k) * math.pi / (rho * M))
    m = np.asarray(m, dtype=float)
    em = Q.from_complex(np.exp(-1j * th * m))
    ep = Q.from_complex(np.exp(1j * th * m))
    cp, cm = Q.as_quat_array(cplus), Q.as_quat_array(cminus)
    al = Q.qmul(em, cp) + Q.qmul(ep, cm)
    be = Q.qmul(Q.as_quat_array(Q.J), sp * Q.qmul(em, cp) + sm * Q.qmul(ep, cm))
    return al, be


def resonant_state_arrays(spec: CircleSpec, k: int, cplus, cminus, m):
    """Closed-form ``(a_m, b_m)`` at the resonance point of mode ``k`` (vectorised)."""
    th, _, _ = _modes(spec, k)
    M = spec.M
    m = np.asarray(m, dtype=float)
    growth = Q.from_complex((np.exp(-1j * math.pi / M) * math.cos(math.pi / M) / math.cos(th)) ** m)
    al, be = resonant_alpha_beta(M, spec.rho, k, cplus, cminus, m)
    a = Q.qmul(growth, al)
    b = Q.qmul(growth, be) / (2 * spec.r * math.sin(math.pi / M) * math.cos(th))
    return a, b


def resonant_state(spec: CircleSpec, k: int, cplus, cminus, m: int = 0) -> RiccatiState:
    return RiccatiState.from_arrays(*resonant_state_arrays(spec, k, cplus, cminus, m))


def closed_circle_darboux(spec: CircleSpec, k: int, c2: complex, m) -> np.ndarray:
    """Closed Darboux transform in the j,k-plane with ``c+ = j`` and ``c- = j c2``.

    Vectorised over ``m``; returns quaternion arrays of shape ``shape(m) + (4,)``.
    """
    th, sp, sm = _modes(spec, k)
    m_arr = np.asarray(m, dtype=float)
    e = np.exp(1j * th * m_arr)
    num = sp * c2 / e + sm * e
    den = sm * c2 / e + sp * e
    small = np.abs(den) <= Q.TOL_ZERO * np.maximum(np.abs(num), 1.0)
    if np.any(small):
        bad = np.argwhere(np.atleast_1d(small))[0]
        raise TransformBlowUp(int(np.atleast_1d(m_arr)[bad[0]]))
    z = spec.r * np.exp(2j * math.pi * m_arr / spec.M) * num / den
    return -Q.j_complex(z)


def closed_circle_darboux_point(spec: CircleSpec, k: int, c2: complex, m: int) -> Quaternion:
    return Quaternion.from_array(closed_circle_darboux(spec, k, c2, m))
