"""Explicit surface families: cylinders and their bubbletons, cmc bubbletons,
homogeneous tori and their closed isothermic Darboux transforms.

Every closed form here has a generic counterpart in :mod:`isothermic.surface`
(the Riccati sweep), and the test-suite checks that the two agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import quat as Q
from .circle import CircleSpec, resonance_value, resonant_alpha_beta, resonant_state
from .errors import (
    CmcWindowViolated,
    ImaginaryC2,
    NegativeNuRequired,
    NoMatching,
    NoRoot,
    TransformBlowUp,
    ZeroDivisor,
)
from .polarised import RiccatiState
from .surface import Check, IsothermicNet, christoffel, verify_darboux_pair


def _ring(M: int, m) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(m, dtype=float) / M)


def _chord2(M: int) -> float:
    """``|1 - exp(2 pi i / M)|^2``."""
    return abs(1 - np.exp(2j * np.pi / M)) ** 2


# ---------------------------------------------------------------------------
# surfaces of revolution and cylinders


def surface_of_revolution(p_profile, q_profile, M: int, rho: int = 1, n_origin: int = 0) -> IsothermicNet:
    """``f = i q_n + j p_n exp(2 pi i m / M)`` on ``rho M + 1`` columns.

    Labels: ``1/mu_m = |1 - exp(2 pi i / M)|^2`` and
    ``1/mu_n = -((p_n - p_{n+1})^2 + (q_n - q_{n+1})^2) / (p_n p_{n+1})``.
    The net is ``M``-periodic in ``m``.
    """
    p = np.asarray(p_profile, dtype=float)
    q = np.asarray(q_profile, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("profiles must be 1D sequences of equal length")
    if np.any(p <= 0):
        raise ValueError("p_n must be positive")
    if M <= 2:
        raise ValueError("M must exceed 2")
    m = np.arange(rho * M + 1)
    pts = Q.from_complex(1j * q)[None, :, :] + Q.j_complex(p[None, :] * _ring(M, m)[:, None])
    mu_m = np.full(len(m) - 1, 1.0 / _chord2(M))
    mu_n = -(p[:-1] * p[1:]) / (np.diff(p) ** 2 + np.diff(q) ** 2)
    return IsothermicNet.from_arrays(pts, mu_m, mu_n, period_m=M, origin=(0, n_origin))


def revolution_cross_ratio(p_n, p_n1, q_n, q_n1, M: int) -> float:
    """Closed-form cross-ratio of a quad of a surface of revolution."""
    return -p_n * p_n1 / ((p_n - p_n1) ** 2 + (q_n - q_n1) ** 2) * _chord2(M)


def circular_cylinder(M: int, N: int, n_min: int, n_max: int, rho: int = 1) -> IsothermicNet:
    """``f = i n/N + j exp(2 pi i m / M)`` for ``n_min <= n <= n_max``; ``mu_n = -N^2``."""
    n = np.arange(n_min, n_max + 1)
    return surface_of_revolution(np.ones(len(n)), n / N, M, rho, n_origin=n_min)


def cylinder_resonance(M: int, rho: int, k: int) -> float:
    return resonance_value(M, rho, k, 1.0)


@dataclass(frozen=True)
class CylinderSpec:
    M: int
    N: int
    rho: int = 1
    k: int = 2
    n_min: int = 0
    n_max: int = 5

    def __post_init__(self):
        if self.M <= 2:
            raise ValueError("M must exceed 2")
        if self.N == 0:
            raise ValueError("N must be nonzero")
        if self.n_max < self.n_min:
            raise ValueError("n_max must not be below n_min")
        cylinder_resonance(self.M, self.rho, self.k)

    @property
    def nu(self) -> float:
        return cylinder_resonance(self.M, self.rho, self.k)

    @property
    def period(self) -> int:
        return self.rho * self.M

    @property
    def theta(self) -> float:
        return self.k * math.pi / self.period

    def circle(self) -> CircleSpec:
        return CircleSpec(1.0, self.M, self.rho, 1.0)

    def net(self) -> IsothermicNet:
        return circular_cylinder(self.M, self.N, self.n_min, self.n_max, self.rho)

    def lattice(self):
        """Lattice indices ``(m, n)`` of the stored grid, each of shape ``(rho M + 1, n rows)``."""
        return np.meshgrid(np.arange(self.period + 1), np.arange(self.n_min, self.n_max + 1), indexing="ij")


def bubbleton_constants(c2) -> tuple[np.ndarray, np.ndarray]:
    """``c+ = j`` and ``c- = j c2``."""
    j = Q.as_quat_array(Q.J)
    return j, Q.qmul(j, Q.from_complex(complex(c2)))


def bubbleton_init(spec: CylinderSpec, c2) -> RiccatiState:
    """Riccati state at the lattice origin for the bubbleton with constant ``c2``."""
    cp, cm = bubbleton_constants(c2)
    return resonant_state(spec.circle(), spec.k, cp, cm, 0)


def bubbleton_closed_form(spec: CylinderSpec, c2: float, m, n) -> np.ndarray:
    """Closed-form bubbleton ``fhat = f + (T0 + j T1) / C``, vectorised over ``(m, n)``."""
    nu = spec.nu
    if not nu < 0:
        raise NegativeNuRequired(f"closed form needs nu < 0 at the resonance point, got {nu:.6g}")
    M, N, rho, k = spec.M, spec.N, spec.rho, spec.k
    th = spec.theta
    sp = math.sin((rho + k) * math.pi / (rho * M))
    sm = math.sin((rho - k) * math.pi / (rho * M))
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    m, n = np.broadcast_arrays(m, n)
    sq = math.sqrt(-nu)
    e = np.exp(1j * th * m)
    A = e + c2 / e
    B = e * sp + sm * c2 / e
    dc = math.cos(2 * math.pi / M) - math.cos(2 * k * math.pi / (rho * M))
    # (N -+ sqrt(-nu))^n divided by N^n keeps large |n| in range; C, T0, T1 are all quadratic in these
    Pm = (1 - sq / N) ** n
    Pp = (1 + sq / N) ** n
    C = 2 * (Pm + Pp) ** 2 * np.abs(B) ** 2 + (Pm - Pp) ** 2 * np.abs(A) ** 2 * dc
    T0 = 1j / sq * (Pm**2 - Pp**2) * (2 * np.abs(B) ** 2 + np.abs(A) ** 2 * dc)
    T1 = -16 * _ring(M, m) * Pm * Pp * math.sin(math.pi / M) * math.cos(th) * A * np.conj(B)
    scale = np.maximum.reduce([np.abs(Pm), np.abs(Pp), np.ones_like(Pm)]) ** 2 * np.maximum(np.abs(B) ** 2, 1.0)
    if np.any(np.abs(C) <= Q.TOL_ZERO * scale):
        bad = np.argwhere(np.atleast_1d(np.abs(C) <= Q.TOL_ZERO * scale))[0]
        raise TransformBlowUp(tuple(int(v) for v in bad))
    f = Q.from_complex(1j * n / N) + Q.j_complex(_ring(M, m))
    return f + (Q.from_complex(T0 / C) + Q.j_complex(T1 / C))


def bubbleton_net(spec: CylinderSpec, c2: float) -> IsothermicNet:
    """Closed-form bubbleton over the grid of ``spec.net()``, labelled as the cylinder."""
    base = spec.net()
    m, n = spec.lattice()
    return base.with_points(bubbleton_closed_form(spec, c2, m, n)).with_periods(None, None)


# ---------------------------------------------------------------------------
# cmc bubbletons


def cmc_spectral_window(nu: float) -> bool:
    """True iff ``nu > 1/4`` or ``nu < 0``, where cmc Darboux transforms of the cylinder exist."""
    return nu > 0.25 or nu < 0


def cmc_initial_c2(M: int, rho: int, k: int) -> tuple[float, float]:
    """Both sign branches of ``c2`` making the bubbleton cmc, positive branch first."""
    if k == rho:
        raise CmcWindowViolated("cmc window violated: k = rho gives nu = 0")
    nu = cylinder_resonance(M, rho, k)
    if not cmc_spectral_window(nu):
        raise CmcWindowViolated(f"cmc window violated: nu = {nu:.6g} lies in [0, 1/4]")
    radicand = math.cos(2 * math.pi / M) - math.cos(2 * k * math.pi / (rho * M))
    if radicand < 0:
        raise ImaginaryC2(f"cos(2 pi/M) - cos(2 k pi / rho M) = {radicand:.6g} < 0")
    c2 = math.sqrt(radicand) / (math.sqrt(2) * math.sin((rho - k) * math.pi / (rho * M)))
    return c2, -c2


def cylinder_parallel(spec: CylinderSpec) -> IsothermicNet:
    """The parallel cmc surface ``i n/N - j exp(2 pi i m / M)`` of the unit cylinder (``H = 1/2``)."""
    base = spec.net()
    m, n = spec.lattice()
    pts = Q.from_complex(1j * n / spec.N) - Q.j_complex(_ring(spec.M, m))
    return base.with_points(pts)


def parallel_cmc_surface(net: IsothermicNet) -> IsothermicNet:
    """Christoffel transform translated so that ``f* - f`` averages to zero over one ``m``-period.

    For a cylinder over a circle this is exactly the parallel cmc surface.
    """
    P = net.domain.period_m
    if P is None:
        raise ValueError("need an m-periodic net to fix the translation")
    star = christoffel(net)
    shift = (net.points[:P] - star.points[:P]).mean(axis=(0, 1))
    return star.with_points(star.points + shift)


def cmc_verify(
    net: IsothermicNet,
    net_hat: IsothermicNet,
    H: float,
    nu: float,
    net_star: IsothermicNet | None = None,
    tol: float = 1e-9,
) -> list[Check]:
    """Parallel distance of ``(f, f*)``, Darboux law of ``(f, f*)`` at ``H^2``,
    and ``|fhat - f*|^2 = (1 - H^2 / nu) / H^2`` at every vertex."""
    star = parallel_cmc_surface(net) if net_star is None else net_star
    parallel = np.abs(Q.qnorm2(star.points - net.points) - 1.0 / H**2)
    target = (1.0 - H**2 / nu) / H**2
    cmc = np.abs(Q.qnorm2(net_hat.points - star.points) - target)
    pair = verify_darboux_pair(net, star, H**2, tol)
    return [
        Check.from_residuals("cmc parallel distance", parallel, tol, net.origin),
        *[Check(f"cmc parallel {c.name}", c.residual, c.tol, c.worst, c.residuals) for c in pair],
        Check.from_residuals("cmc distance", cmc, tol, net.origin),
    ]


# ---------------------------------------------------------------------------
# homogeneous tori


def _x(k: int, rho: int, M: int) -> float:
    return (math.tan(k * math.pi / (rho * M)) / math.tan(math.pi / M)) ** 2


def torus_pq(k1: int, rho1: int, k2: int, rho2: int, M: int, N: int) -> tuple[float, float, float]:
    """Radii ``(p, q)`` and common spectral parameter so both circle families resonate."""
    x1 = _x(k1, rho1, M)
    x2 = _x(k2, rho2, N)
    if x1 == x2:
        raise NoMatching("both resonance conditions coincide; no radii")
    p2 = (1 - x1) / (x2 - x1)
    q2 = (1 - x2) / (x1 - x2)
    if not (0 < p2 < 1 and 0 < q2 < 1):
        raise NoMatching(f"p^2 = {p2:.6g}, q^2 = {q2:.6g} not both in (0, 1)")
    return math.sqrt(p2), math.sqrt(q2), (x2 - x1) / 4


def torus_nu_pair(k1: int, rho1: int, k2: int, rho2: int, M: int, N: int) -> tuple[float, float]:
    """The resonance values of the m-circle and n-circle separately; equal at matched radii."""
    p, q, _ = torus_pq(k1, rho1, k2, rho2, M, N)
    nu1 = (1 - _x(k1, rho1, M)) / (4 * p * p)
    nu2 = -(1 - _x(k2, rho2, N)) / (4 * q * q)
    return nu1, nu2


@dataclass(frozen=True)
class TorusSpec:
    M: int
    N: int
    k1: int
    rho1: int
    k2: int
    rho2: int
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        if self.M <= 2 or self.N <= 2:
            raise ValueError("M and N must exceed 2")
        if self.p is None or self.q is None:
            p, q, _ = torus_pq(self.k1, self.rho1, self.k2, self.rho2, self.M, self.N)
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "q", q)
        if not (self.p > 0 and self.q > 0) or abs(self.p**2 + self.q**2 - 1) > 1e-12:
            raise ValueError("need p, q > 0 with p^2 + q^2 = 1")

    @property
    def nu(self) -> float:
        return (_x(self.k2, self.rho2, self.N) - _x(self.k1, self.rho1, self.M)) / 4

    @property
    def period_m(self) -> int:
        return self.rho1 * self.M

    @property
    def period_n(self) -> int:
        return self.rho2 * self.N

    @property
    def theta1(self) -> float:
        return self.k1 * math.pi / self.period_m

    @property
    def theta2(self) -> float:
        return self.k2 * math.pi / self.period_n

    def circle(self) -> CircleSpec:
        """The m-curve at ``n = 0``, a circle of radius ``p`` translated by the real ``q``."""
        return CircleSpec(self.p, self.M, self.rho1, self.p**2)

    def lattice(self):
        return np.meshgrid(np.arange(self.period_m + 1), np.arange(self.period_n + 1), indexing="ij")


def homogeneous_torus(spec: TorusSpec) -> IsothermicNet:
    """``q exp(2 pi i n / N) + j p exp(2 pi i m / M)`` on ``(rho1 M + 1) x (rho2 N + 1)`` vertices."""
    m, n = spec.lattice()
    pts = Q.from_complex(spec.q * _ring(spec.N, n)) + Q.j_complex(spec.p * _ring(spec.M, m))
    mu_m = np.full(spec.period_m, 1.0 / (spec.p**2 * _chord2(spec.M)))
    mu_n = np.full(spec.period_n, -1.0 / (spec.q**2 * _chord2(spec.N)))
    return IsothermicNet.from_arrays(pts, mu_m, mu_n, period_m=spec.M, period_n=spec.N)


def torus_init(spec: TorusSpec, cplus, cminus) -> RiccatiState:
    return resonant_state(spec.circle(), spec.k1, cplus, cminus, 0)


def torus_closed_form(spec: TorusSpec, cplus, cminus, m, n) -> np.ndarray:
    """Closed-form isothermic torus ``fhat = f + a b^-1``, vectorised over ``(m, n)``.

    The growth factors of ``a`` and ``b`` cancel in ``a b^-1`` and are never formed.
    """
    M, N = spec.M, spec.N
    p, q = spec.p, spec.q
    th1, th2 = spec.theta1, spec.theta2
    r2 = spec.rho2
    s2p = math.sin((r2 + spec.k2) * math.pi / (r2 * N))
    s2m = math.sin((r2 - spec.k2) * math.pi / (r2 * N))
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    m, n = np.broadcast_arrays(m, n)
    al, be = resonant_alpha_beta(M, spec.rho1, spec.k1, cplus, cminus, m)
    K = q / p * math.sin(math.pi / N) * math.cos(th2) / (math.sin(math.pi / M) * math.cos(th1))
    gp = s2m * al + K * be
    gm = s2p * al + K * be
    ep = Q.from_complex(np.exp(1j * th2 * n))
    em = Q.from_complex(np.exp(-1j * th2 * n))
    num = Q.qmul(ep, gp) - Q.qmul(em, gm)
    den = Q.qmul(ep, s2p * gp) - Q.qmul(em, s2m * gm)
    scale = np.maximum(Q.qabs(num), Q.qabs(den))
    small = Q.qabs(den) <= Q.TOL_ZERO * np.maximum(scale, 1e-300)
    if np.any(small):
        i = tuple(int(v) for v in np.argwhere(np.atleast_1d(small))[0])
        raise TransformBlowUp(i)
    left = Q.from_complex(np.exp(1j * math.pi * (n / N - m / M)))
    right = Q.from_complex(np.exp(1j * math.pi * (n / N + m / M)))
    ab = Q.qmul(Q.qmul(Q.qmul(left, num), Q.qinv(den, scale)), right)
    f = Q.from_complex(q * _ring(N, n)) + Q.j_complex(p * _ring(M, m))
    return f - 2 * q * math.sin(math.pi / N) * math.cos(th2) * ab


def torus_net(spec: TorusSpec, cplus, cminus) -> IsothermicNet:
    base = homogeneous_torus(spec)
    m, n = spec.lattice()
    return base.with_points(torus_closed_form(spec, cplus, cminus, m, n)).with_periods(None, None)


def s3_constants(c_real: float, r2: float) -> tuple[np.ndarray, np.ndarray]:
    """``c+ = c_real + j r2`` and ``c- = 1``."""
    return np.array([c_real, 0.0, r2, 0.0]), np.array([1.0, 0.0, 0.0, 0.0])


def s3_defect(spec: TorusSpec, c_real: float, r2: float) -> float:
    """``|fhat_00|^2 - 1`` for ``c+ = c_real + j r2``, ``c- = 1``; NaN where the transform is infinite."""
    st = torus_init(spec, *s3_constants(c_real, r2))
    f0 = Q.Quaternion(spec.q, 0.0, spec.p, 0.0)
    try:
        return st.point(f0).norm2() - 1.0
    except ZeroDivisor:
        return math.nan


def s3_initial_roots(
    spec: TorusSpec,
    c_real: float,
    lo: float = -10.0,
    hi: float = 10.0,
    step: float = 0.05,
    xtol: float = 1e-14,
) -> list[float]:
    """All sign changes of :func:`s3_defect` on a grid over ``[lo, hi]``, refined by Brent's method."""
    grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    vals = np.array([s3_defect(spec, c_real, r) for r in grid])
    roots = []
    for i in range(len(grid) - 1):
        g0, g1 = vals[i], vals[i + 1]
        if not (np.isfinite(g0) and np.isfinite(g1)):
            continue
        if g0 == 0.0:
            roots.append(float(grid[i]))
        elif g0 * g1 < 0:
            roots.append(float(brentq(lambda r: s3_defect(spec, c_real, r), grid[i], grid[i + 1], xtol=xtol)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def s3_initial_solver(spec: TorusSpec, c_real: float, index: int = -1, **scan) -> float:
    """One root ``r2`` of :func:`s3_defect`; ``index`` selects among roots in increasing order.

    The default picks the largest root.
    """
    roots = s3_initial_roots(spec, c_real, **scan)
    if not roots:
        raise NoRoot(f"no sign change of |fhat_00|^2 - 1 for c_real = {c_real}")
    try:
        return roots[index]
    except IndexError:
        raise NoRoot(f"only {len(roots)} roots found, index {index} requested") from None


# ---------------------------------------------------------------------------
# continuum limits


def continuum_limit(k: int, rho: int) -> float:
    return (rho**2 - k**2) / (4 * rho**2)


def torus_continuum_limit(k1: int, rho1: int, k2: int, rho2: int) -> float:
    return (k2**2 / rho2**2 - k1**2 / rho1**2) / 4


def torus_radii_limits(k1: int, rho1: int, k2: int, rho2: int) -> tuple[float, float]:
    """Limits of ``1 - 4 nu p^2`` and ``1 + 4 nu q^2``."""
    return k1**2 / rho1**2, k2**2 / rho2**2


def torus_radii_terms(spec: TorusSpec) -> tuple[float, float]:
    nu = spec.nu
    return 1 - 4 * nu * spec.p**2, 1 + 4 * nu * spec.q**2


def convergence_table(k: int, rho: int, sizes=(40, 80, 160, 320)) -> list[dict]:
    limit = continuum_limit(k, rho)
    rows = []
    for M in sizes:
        nu = cylinder_resonance(M, rho, k)
        rows.append({"M": M, "nu": nu, "limit": limit, "error": abs(nu - limit)})
    return rows


def torus_convergence_table(k1: int, rho1: int, k2: int, rho2: int, sizes=(40, 80, 160, 320)) -> list[dict]:
    nu_lim = torus_continuum_limit(k1, rho1, k2, rho2)
    r1_lim, r2_lim = torus_radii_limits(k1, rho1, k2, rho2)
    rows = []
    for M in sizes:
        spec = TorusSpec(M, M, k1, rho1, k2, rho2)
        t1, t2 = torus_radii_terms(spec)
        rows.append({
            "M": M,
            "N": M,
            "nu": spec.nu,
            "nu_error": abs(spec.nu - nu_lim),
            "radius_m_error": abs(t1 - r1_lim),
            "radius_n_error": abs(t2 - r2_lim),
        })
    return rows
