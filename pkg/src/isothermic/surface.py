"""Discrete isothermic nets on a rectangular lattice.

A net stores its vertices as an array ``(m_count, n_count, 4)``.  Edge labels
are edge-labelled by construction: ``mu_m[m]`` belongs to every edge
``(m, n) -- (m + 1, n)`` and ``mu_n[n]`` to every edge ``(m, n) -- (m, n + 1)``.
Quads are oriented as ``(i, j, k, l) = ((m,n), (m+1,n), (m+1,n+1), (m,n+1))``.

Periodic nets are stored unrolled: a net with period ``P`` in ``m`` keeps at
least ``P + 1`` columns so that the seam quads are checked like any other.
``origin`` is the lattice index of the stored vertex ``[0, 0]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import quat as Q
from .errors import (
    Degenerate,
    FlatnessViolation,
    NoBianchiQuad,
    NotIsothermic,
    TransformBlowUp,
    ZeroDivisor,
)
from .polarised import (
    DiscreteCurve,
    PolarisedDomain1D,
    RiccatiState,
    blowup_mask,
    darboux_residuals,
    darboux_transform_curve,
    proportionality_residual,
    qmat_identity,
    qmat_mul,
    r_matrices,
    riccati_arrays,
)

TOL_ISO = 1e-10
TOL_CONSISTENCY = 1e-9


@dataclass(frozen=True)
class Check:
    """Outcome of one residual check; passes iff the max residual is below ``tol``."""

    name: str
    residual: float
    tol: float
    worst: tuple | None = None
    residuals: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_residuals(cls, name: str, residuals, tol: float, origin=(0, 0)) -> "Check":
        res = np.asarray(residuals, dtype=float)
        if res.size == 0:
            return cls(name, 0.0, tol, None, res)
        # NaN counts as the worst possible residual
        filled = np.where(np.isnan(res), np.inf, res)
        flat = int(np.argmax(filled))
        idx = np.unravel_index(flat, res.shape)
        worst = tuple(int(i) + int(o) for i, o in zip(idx, tuple(origin) + (0,) * len(idx)))
        return cls(name, float(filled.reshape(-1)[flat]), tol, worst, res)

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tol)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "tol": self.tol,
            "passed": self.passed,
            "worst": list(self.worst) if self.worst is not None else None,
        }


@dataclass(frozen=True)
class PolarisedDomain2D:
    m_count: int
    n_count: int
    mu_m: np.ndarray
    mu_n: np.ndarray
    period_m: int | None = None
    period_n: int | None = None
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.m_count < 1 or self.n_count < 1:
            raise ValueError("vertex counts must be positive")
        for name, count in (("mu_m", self.m_count), ("mu_n", self.n_count)):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if len(arr) != count - 1:
                raise ValueError(f"{name} needs {count - 1} labels, got {len(arr)}")
            if np.any(arr == 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} labels must be finite and nonzero")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name, count, labels in (("period_m", self.m_count, self.mu_m), ("period_n", self.n_count, self.mu_n)):
            P = getattr(self, name)
            if P is None:
                continue
            if not 0 < P < count:
                raise ValueError(f"{name} must satisfy 0 < period < vertex count")
            if not np.allclose(labels[P:], labels[: len(labels) - P], rtol=1e-12, atol=0):
                raise ValueError(f"labels are not {name}-periodic")
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))


@dataclass(frozen=True)
class IsothermicNet:
    domain: PolarisedDomain2D
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        d = self.domain
        if pts.shape != (d.m_count, d.n_count, 4):
            raise ValueError(f"expected points of shape {(d.m_count, d.n_count, 4)}, got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_arrays(cls, points, mu_m, mu_n, period_m=None, period_n=None, origin=(0, 0)) -> "IsothermicNet":
        pts = np.asarray(points, dtype=float)
        dom = PolarisedDomain2D(pts.shape[0], pts.shape[1], mu_m, mu_n, period_m, period_n, origin)
        return cls(dom, pts)

    @property
    def shape(self) -> tuple[int, int]:
        return self.domain.m_count, self.domain.n_count

    @property
    def origin(self) -> tuple[int, int]:
        return self.domain.origin

    def index(self, m: int, n: int) -> tuple[int, int]:
        """Storage index of lattice vertex ``(m, n)``."""
        i, j = m - self.origin[0], n - self.origin[1]
        if not (0 <= i < self.domain.m_count and 0 <= j < self.domain.n_count):
            raise IndexError(f"lattice vertex {(m, n)} outside the net")
        return i, j

    def at(self, m: int, n: int) -> Q.Quaternion:
        return Q.Quaternion.from_array(self.points[self.index(m, n)])

    def with_points(self, points) -> "IsothermicNet":
        return IsothermicNet(self.domain, points)

    def with_periods(self, period_m=None, period_n=None) -> "IsothermicNet":
        return IsothermicNet(replace(self.domain, period_m=period_m, period_n=period_n), self.points)

    def m_curve(self, n: int) -> DiscreteCurve:
        """The m-curvature line through lattice row ``n``."""
        _, j = self.index(self.origin[0], n)
        d = self.domain
        return DiscreteCurve(PolarisedDomain1D(d.m_count, d.mu_m, None), self.points[:, j])

    def n_curve(self, m: int) -> DiscreteCurve:
        i, _ = self.index(m, self.origin[1])
        d = self.domain
        return DiscreteCurve(PolarisedDomain1D(d.n_count, d.mu_n, None), self.points[i, :])


def _quad_corners(pts):
    return pts[:-1, :-1], pts[1:, :-1], pts[1:, 1:], pts[:-1, 1:]


def _safe_inv(q, scale):
    """Inverse with degenerate entries mapped to NaN instead of raising."""
    n2 = Q.qnorm2(q)
    bad = ~(n2 > (Q.TOL_ZERO * scale) ** 2)
    n2 = np.where(bad, np.nan, n2)
    return Q.qconj(q) / n2[..., None]


def _safe_cross_ratio(fi, fj, fk, fl):
    scale = np.maximum(np.maximum.reduce([Q.qabs(fi), Q.qabs(fj), Q.qabs(fk), Q.qabs(fl)]), 1e-300)
    return Q.qmul(Q.qmul(fi - fj, _safe_inv(fj - fk, scale)), Q.qmul(fk - fl, _safe_inv(fl - fi, scale)))


def quad_cross_ratios(net: IsothermicNet) -> np.ndarray:
    return _safe_cross_ratio(*_quad_corners(net.points))


def verify_isothermic(net: IsothermicNet, tol: float = TOL_ISO) -> Check:
    """Per-quad ``|cr - mu_n / mu_m| / max(1, |mu_n / mu_m|)``; degenerate quads count as failures."""
    d = net.domain
    target = d.mu_n[None, :] / d.mu_m[:, None]
    res = Q.real_part_residual(quad_cross_ratios(net), target) / np.maximum(1.0, np.abs(target))
    return Check.from_residuals("isothermic", res, tol, net.origin)


def edge_form(net: IsothermicNet) -> tuple[np.ndarray, np.ndarray]:
    """``omega`` on the m-edges and n-edges, oriented in increasing index.

    Raises :class:`ZeroDivisor` on a degenerate edge.
    """
    pts = net.points
    d = net.domain
    scale = max(float(Q.qabs(pts).max()), 1e-300)
    om = Q.qinv(pts[:-1] - pts[1:], scale) / d.mu_m[:, None, None]
    on = Q.qinv(pts[:, :-1] - pts[:, 1:], scale) / d.mu_n[None, :, None]
    return om, on


def _closure_sums(net: IsothermicNet):
    om, on = edge_form(net)
    # omega_ij + omega_jk + omega_kl + omega_li with omega_ji = -omega_ij
    total = om[:, :-1] + on[1:, :] - om[:, 1:] - on[:-1, :]
    size = np.maximum.reduce([Q.qabs(om[:, :-1]), Q.qabs(on[1:, :]), Q.qabs(om[:, 1:]), Q.qabs(on[:-1, :])])
    return Q.qabs(total), size


def one_form_closure(net: IsothermicNet, tol: float = TOL_ISO) -> Check:
    """Per-quad norm of ``omega_ij + omega_jk + omega_kl + omega_li`` (absolute)."""
    res, _ = _closure_sums(net)
    return Check.from_residuals("closure", res, tol, net.origin)


def christoffel(net: IsothermicNet, base=None, tol: float = 1e-9) -> IsothermicNet:
    """Dual net integrating ``omega`` from storage vertex ``[0, 0]`` (placed at ``base``, default 0).

    Raises :class:`NotIsothermic` if the closure residual, relative to the
    size of the edge form on the quad, reaches ``tol``.
    """
    res, size = _closure_sums(net)
    rel = res / np.maximum(size, 1e-300)
    if rel.size and not rel.max() < tol:
        worst = np.unravel_index(int(np.argmax(np.where(np.isnan(rel), np.inf, rel))), rel.shape)
        raise NotIsothermic(f"edge form not closed at quad {tuple(int(v) for v in worst)}: {float(rel.max()):.3g}")
    om, on = edge_form(net)
    mc, nc = net.shape
    out = np.zeros((mc, nc, 4))
    out[0, 0] = 0.0 if base is None else Q.as_quat_array(base)
    out[1:, 0] = out[0, 0] - np.cumsum(om[:, 0], axis=0)
    out[:, 1:] = out[:, :1] - np.cumsum(on, axis=1)
    d = net.domain
    pm, pn = d.period_m, d.period_n
    scale = max(1.0, float(np.abs(out).max()))
    if pm is not None and np.abs(out[pm:] - out[: mc - pm]).max() > 1e-9 * scale:
        pm = None
    if pn is not None and np.abs(out[:, pn:] - out[:, : nc - pn]).max() > 1e-9 * scale:
        pn = None
    return IsothermicNet(replace(d, period_m=pm, period_n=pn), out)


# ---------------------------------------------------------------------------
# Darboux transforms


def _default_start(net: IsothermicNet) -> tuple[int, int]:
    try:
        return net.index(0, 0)
    except IndexError:
        return 0, 0


def riccati_grid(net: IsothermicNet, nu: float, init: RiccatiState, start=None):
    """Riccati states over the whole grid, normalised to unit norm.

    The sweep runs along the start row in ``m`` (both directions) and then
    along every column in ``n`` (both directions), columns in parallel.
    ``start`` is a storage index and defaults to the lattice origin.
    """
    pts = net.points
    d = net.domain
    mc, nc = net.shape
    i0, j0 = _default_start(net) if start is None else start
    A = np.empty((mc, nc, 4))
    B = np.empty((mc, nc, 4))

    def norm(a, b):
        s = np.sqrt(Q.qnorm2(a) + Q.qnorm2(b))[..., None]
        return a / s, b / s

    A[i0, j0], B[i0, j0] = norm(*init.arrays())
    for i in range(i0, mc - 1):
        A[i + 1, j0], B[i + 1, j0] = norm(*riccati_arrays(pts[i, j0], pts[i + 1, j0], d.mu_m[i], nu, A[i, j0], B[i, j0]))
    for i in range(i0, 0, -1):
        A[i - 1, j0], B[i - 1, j0] = norm(*riccati_arrays(pts[i, j0], pts[i - 1, j0], d.mu_m[i - 1], nu, A[i, j0], B[i, j0]))
    for j in range(j0, nc - 1):
        A[:, j + 1], B[:, j + 1] = norm(*riccati_arrays(pts[:, j], pts[:, j + 1], d.mu_n[j], nu, A[:, j], B[:, j]))
    for j in range(j0, 0, -1):
        A[:, j - 1], B[:, j - 1] = norm(*riccati_arrays(pts[:, j], pts[:, j - 1], d.mu_n[j - 1], nu, A[:, j], B[:, j]))
    return A, B


def quad_consistency(net: IsothermicNet, nu: float, A, B) -> Check:
    """Transport the state at ``i`` to ``k`` via ``j`` and via ``l``; compare projectively.

    Both results are also compared with the stored state at ``k``.
    """
    pts = net.points
    d = net.domain
    fi, fj, fk, fl = _quad_corners(pts)
    mu_m = d.mu_m[:, None]
    mu_n = d.mu_n[None, :]
    ai, bi = A[:-1, :-1], B[:-1, :-1]
    aj, bj = riccati_arrays(fi, fj, mu_m, nu, ai, bi)
    ak1, bk1 = riccati_arrays(fj, fk, mu_n, nu, aj, bj)
    al, bl = riccati_arrays(fi, fl, mu_n, nu, ai, bi)
    ak2, bk2 = riccati_arrays(fl, fk, mu_m, nu, al, bl)
    ak, bk = A[1:, 1:], B[1:, 1:]
    res = np.maximum.reduce([
        proportionality_residual(ak1, bk1, ak2, bk2),
        proportionality_residual(ak, bk, ak1, bk1),
        proportionality_residual(ak, bk, ak2, bk2),
    ])
    return Check.from_residuals("quad consistency", res, TOL_CONSISTENCY, net.origin)


def darboux_surface(
    net: IsothermicNet,
    nu: float,
    init: RiccatiState,
    start=None,
    tol: float = TOL_CONSISTENCY,
) -> IsothermicNet:
    """Darboux transform ``fhat = f + a b^-1`` over the whole net.

    ``init`` is the state at ``start`` (storage index, default the lattice
    origin).  Raises :class:`TransformBlowUp` with the lattice vertex when
    ``b`` vanishes and :class:`FlatnessViolation` when transport around some
    quad fails to close to ``tol``.  The result carries the same labels and
    no period metadata; periodicity has to be checked, not assumed.
    """
    A, B = riccati_grid(net, nu, init, start)
    bad = blowup_mask(A, B)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise TransformBlowUp((int(i) + net.origin[0], int(j) + net.origin[1]))
    if net.shape[0] > 1 and net.shape[1] > 1:
        chk = quad_consistency(net, nu, A, B)
        if not chk.residual < tol:
            raise FlatnessViolation(chk.worst, chk.residual)
    fhat = net.points + Q.qmul(A, Q.qinv(B))
    return IsothermicNet(replace(net.domain, period_m=None, period_n=None), fhat)


def verify_darboux_pair(net: IsothermicNet, net_hat: IsothermicNet, nu: float, tol: float = TOL_ISO) -> list[Check]:
    """``cr(f_i, f_j, fhat_j, fhat_i) = nu / mu_ij`` on every m-edge and n-edge."""
    f, g = net.points, net_hat.points
    d = net.domain
    cr_m = _safe_cross_ratio(f[:-1], f[1:], g[1:], g[:-1])
    cr_n = _safe_cross_ratio(f[:, :-1], f[:, 1:], g[:, 1:], g[:, :-1])
    tm = nu / d.mu_m[:, None]
    tn = nu / d.mu_n[None, :]
    res_m = Q.real_part_residual(cr_m, tm) / np.maximum(1.0, np.abs(tm))
    res_n = Q.real_part_residual(cr_n, tn) / np.maximum(1.0, np.abs(tn))
    return [
        Check.from_residuals("darboux m-edges", res_m, tol, net.origin),
        Check.from_residuals("darboux n-edges", res_n, tol, net.origin),
    ]


def verify_flatness(net: IsothermicNet, lam: float, tol: float = TOL_ISO) -> Check:
    """Per-quad ``r_il r_lk r_kj r_ji`` compared with a real multiple of the identity."""
    d = net.domain
    fi, fj, fk, fl = _quad_corners(net.points)
    mu_m = d.mu_m[:, None]
    mu_n = d.mu_n[None, :]
    P = r_matrices(fi, fj, mu_m, lam)
    P = qmat_mul(r_matrices(fj, fk, mu_n, lam), P)
    P = qmat_mul(r_matrices(fk, fl, mu_m, lam), P)
    P = qmat_mul(r_matrices(fl, fi, mu_n, lam), P)
    s = P[..., 0, 0, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        res = Q.qabs(P / s[..., None, None, None] - qmat_identity()).max(axis=(-1, -2))
    return Check.from_residuals("flatness", res, tol, net.origin)


def verify_periodicity(net_hat: IsothermicNet, direction: str, period: int, tol: float = 1e-9) -> list[Check]:
    """Closure ``|fhat(+period) - fhat|`` over the full grid, and along the origin line alone."""
    pts = net_hat.points
    axis = {"m": 0, "n": 1}[direction]
    count = pts.shape[axis]
    if not 0 < period < count:
        raise ValueError(f"need more than {period} vertices in direction {direction}")
    diff = np.take(pts, range(period, count), axis=axis) - np.take(pts, range(count - period), axis=axis)
    res = Q.qabs(diff)
    i0, j0 = _default_start(net_hat)
    line = res[:, j0] if axis == 0 else res[i0, :]
    origin = net_hat.origin
    line_origin = (origin[0],) if axis == 0 else (origin[1],)
    return [
        Check.from_residuals(f"periodic {direction} (grid)", res, tol, origin),
        Check.from_residuals(f"periodic {direction} (origin line)", line, tol, line_origin),
    ]


def s3_check(net: IsothermicNet, tol: float = 1e-9) -> list[Check]:
    """``||f|^2 - 1|`` over the grid and at the origin vertex alone."""
    res = np.abs(Q.qnorm2(net.points) - 1.0)
    i0, j0 = _default_start(net)
    return [
        Check.from_residuals("s3 (grid)", res, tol, net.origin),
        Check.from_residuals("s3 (origin vertex)", res[i0, j0], tol, ()),
    ]


# ---------------------------------------------------------------------------
# permutability


@dataclass(frozen=True)
class BianchiQuad:
    f1: DiscreteCurve
    f2: DiscreteCurve
    f12: DiscreteCurve
    checks: list


def fourth_point(f, f1, f2, ratio: float) -> np.ndarray:
    """The ``x`` with ``cr(f, f1, x, f2) = ratio`` (real ``ratio``).

    From ``(f - f1)(f1 - x)^-1 (x - f2)(f2 - f)^-1 = ratio`` one gets
    ``x = (f1 y + f2)(1 + y)^-1`` with ``y = ratio (f - f1)^-1 (f2 - f)``.
    """
    f, f1, f2 = (Q.as_quat_array(v) for v in (f, f1, f2))
    scale = max(Q.qabs(f), Q.qabs(f1), Q.qabs(f2), 1e-300)
    y = ratio * Q.qmul(Q.qinv(f - f1, scale), f2 - f)
    one = np.array([1.0, 0.0, 0.0, 0.0])
    return Q.qmul(Q.qmul(f1, y) + f2, Q.qinv(one + y, max(1.0, float(Q.qabs(y)))))


def _open_transform(c: DiscreteCurve, nu: float, init: RiccatiState, which: str) -> DiscreteCurve:
    if nu == 0:
        raise Degenerate(f"{which}: spectral parameter 0 gives a constant transform, not a polarised curve")
    try:
        return darboux_transform_curve(c, nu, init)
    except ZeroDivisor as exc:
        raise Degenerate(f"{which}: transform has coinciding consecutive points") from exc


def permutability_check(
    f: DiscreteCurve,
    nu1: float,
    nu2: float,
    init1: RiccatiState,
    init2: RiccatiState,
    tol: float = 1e-9,
) -> BianchiQuad:
    """Build ``f12`` from ``f1`` and check it is also a Darboux transform of ``f2``.

    The start point of ``f12`` is fixed by the Bianchi quad condition
    ``cr(f_0, f1_0, f12_0, f2_0) = nu2 / nu1``, which is equivalent to the
    first-edge condition on the ``f2`` side.  That condition is then checked
    explicitly and raises :class:`NoBianchiQuad` if it fails.
    """
    if nu1 == nu2:
        raise ValueError("spectral parameters must differ")
    f1 = _open_transform(f, nu1, init1, "f1")
    f2 = _open_transform(f, nu2, init2, "f2")
    n = len(f1)
    x0 = fourth_point(f.point_array(0), f1.points[0], f2.points[0], nu2 / nu1)
    f12 = _open_transform(f1, nu2, RiccatiState.from_arrays(x0 - f1.points[0], [1.0, 0, 0, 0]), "f12")
    f21 = _open_transform(f2, nu1, RiccatiState.from_arrays(x0 - f2.points[0], [1.0, 0, 0, 0]), "f21")

    mu0 = f.domain.label(0, 1)
    first = Q.real_part_residual(
        Q.qcross_ratio(f2.points[0], f2.points[1], f12.points[1], f12.points[0]), nu1 / mu0
    ) / max(1.0, abs(nu1 / mu0))
    if not float(first) < tol:
        raise NoBianchiQuad(f"first-edge condition on the f2 side fails: residual {float(first):.3g}")

    base = DiscreteCurve(PolarisedDomain1D(n, f1.domain.mu), np.array([f.point_array(m) for m in range(n)]))
    fam_1 = darboux_residuals(base, f1, nu1)
    fam_2 = darboux_residuals(base, f2, nu2)
    fam_12 = darboux_residuals(f1, f12, nu2)
    fam_21 = darboux_residuals(f2, f12, nu1)
    bianchi = Q.real_part_residual(Q.qcross_ratio(base.points, f1.points, f12.points, f2.points), nu2 / nu1)
    sym = Q.qabs(f12.points - f21.points)
    checks = [
        Check.from_residuals("f1 over f", fam_1, tol),
        Check.from_residuals("f2 over f", fam_2, tol),
        Check.from_residuals("f12 over f1", fam_12, tol),
        Check.from_residuals("f12 over f2", fam_21, tol),
        Check.from_residuals("bianchi quad", bianchi, tol),
        Check.from_residuals("f12 symmetric", sym, tol),
    ]
    return BianchiQuad(f1, f2, f12, checks)
