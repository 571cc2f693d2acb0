"""Discrete polarised curves in H.

Edge differences follow ``dX_ij = X_i - X_j`` everywhere; an oriented edge
``(i, j)`` joins neighbouring vertices.  The connections ``D(lam)`` and
``r(lam)`` of an edge ``(i, j)`` map the fibre over ``i`` to the fibre over
``j``.  A Riccati state ``(a, b)`` is a section in the ``D``-gauge and
represents the point ``f + a b^-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat as Q
from .errors import Degenerate, NotPeriodic, TransformBlowUp, ZeroDivisor
from .quat import Quaternion

TOL_CLOSE = 1e-9


# ---------------------------------------------------------------------------
# 2x2 quaternionic matrices


def qmat_mul(A, B) -> np.ndarray:
    """Product of quaternionic matrices stored as arrays (..., 2, 2, 4)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    out = np.empty(np.broadcast_shapes(A.shape, B.shape))
    for r in range(2):
        for c in range(2):
            out[..., r, c, :] = Q.qmul(A[..., r, 0, :], B[..., 0, c, :]) + Q.qmul(A[..., r, 1, :], B[..., 1, c, :])
    return out


def qmat_apply(A, a, b):
    """Apply (..., 2, 2, 4) matrices to column pairs ``(a, b)``."""
    A = np.asarray(A, dtype=float)
    return (
        Q.qmul(A[..., 0, 0, :], a) + Q.qmul(A[..., 0, 1, :], b),
        Q.qmul(A[..., 1, 0, :], a) + Q.qmul(A[..., 1, 1, :], b),
    )


def qmat_identity(shape=()) -> np.ndarray:
    out = np.zeros(tuple(shape) + (2, 2, 4))
    out[..., 0, 0, 0] = 1.0
    out[..., 1, 1, 0] = 1.0
    return out


def _complex_block(q) -> np.ndarray:
    # left multiplication by q on H = C + jC (right complex structure)
    q = np.asarray(q, dtype=float)
    p1 = q[..., 0] + 1j * q[..., 1]
    p2 = q[..., 2] - 1j * q[..., 3]
    return np.array([[p1, -np.conj(p2)], [p2, np.conj(p1)]])


@dataclass(frozen=True)
class QMatrix2:
    """A 2x2 matrix with quaternion entries acting on ``H^2`` from the left."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.shape != (2, 2, 4):
            raise ValueError(f"QMatrix2 needs shape (2, 2, 4), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_entries(cls, m00, m01, m10, m11) -> "QMatrix2":
        return cls(np.array([[Q.as_quat_array(m00), Q.as_quat_array(m01)], [Q.as_quat_array(m10), Q.as_quat_array(m11)]]))

    @classmethod
    def identity(cls) -> "QMatrix2":
        return cls(qmat_identity())

    def entry(self, r: int, c: int) -> Quaternion:
        return Quaternion.from_array(self.data[r, c])

    @property
    def m00(self):
        return self.entry(0, 0)

    @property
    def m01(self):
        return self.entry(0, 1)

    @property
    def m10(self):
        return self.entry(1, 0)

    @property
    def m11(self):
        return self.entry(1, 1)

    def __matmul__(self, other: "QMatrix2") -> "QMatrix2":
        return QMatrix2(qmat_mul(self.data, other.data))

    def __mul__(self, s):
        if isinstance(s, (int, float)):
            return QMatrix2(self.data * s)
        return NotImplemented

    __rmul__ = __mul__

    def apply(self, a, b) -> tuple[Quaternion, Quaternion]:
        x, y = qmat_apply(self.data, Q.as_quat_array(a), Q.as_quat_array(b))
        return Quaternion.from_array(x), Quaternion.from_array(y)

    def max_norm(self) -> float:
        return float(Q.qabs(self.data).max())

    def to_complex(self) -> np.ndarray:
        """4x4 complex matrix of the action on ``H^2 = C^4`` (right complex scalars)."""
        out = np.zeros((4, 4), dtype=complex)
        for r in range(2):
            for c in range(2):
                out[2 * r:2 * r + 2, 2 * c:2 * c + 2] = _complex_block(self.data[r, c])
        return out


def invariant_lines(M: QMatrix2, tol: float = 1e-9) -> list[tuple[Quaternion | None, complex]]:
    """Quaternionic eigenlines of ``M`` as ``(x, multiplier)`` pairs.

    A line is given by its affine coordinate ``x``, meaning ``(x, 1) H`` is
    invariant, or ``None`` for the line ``(1, 0) H``.  The multiplier is a
    complex representative (nonnegative imaginary part) of the conjugacy
    class of quaternions ``h`` with ``M v = v h``.  For a projectively
    trivial ``M`` every line is invariant and the result is not meaningful.
    """
    vals, vecs = np.linalg.eig(M.to_complex())
    found: list[tuple[np.ndarray, np.ndarray, complex]] = []
    for idx in range(4):
        v = vecs[:, idx]
        # H^2 coordinates: component r is v[2r] + j v[2r+1]
        top = Q.from_complex(v[0]) + Q.j_complex(v[1])
        bot = Q.from_complex(v[2]) + Q.j_complex(v[3])
        if any(proportionality_residual(t, b, top, bot) < tol for t, b, _ in found):
            continue
        lam = complex(vals[idx].real, abs(vals[idx].imag))
        found.append((top, bot, lam))
    out: list[tuple[Quaternion | None, complex]] = []
    for top, bot, lam in found:
        if Q.qabs(bot) <= 1e-12 * max(Q.qabs(top), 1e-300):
            out.append((None, lam))
        else:
            out.append((Quaternion.from_array(Q.qmul(top, Q.qinv(bot))), lam))
    return out


# ---------------------------------------------------------------------------
# domains and curves


@dataclass(frozen=True)
class PolarisedDomain1D:
    """A chain of ``vertex_count`` vertices with nonzero edge labels ``mu``.

    ``mu[e]`` labels the edge ``(e, e + 1)``.  When ``period`` is set the
    labels repeat with that period and edges beyond the stored vertices are
    read modulo the period.
    """

    vertex_count: int
    mu: np.ndarray
    period: int | None = None

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if self.vertex_count < 1:
            raise ValueError("vertex_count must be positive")
        if np.any(mu == 0) or not np.all(np.isfinite(mu)):
            raise ValueError("edge labels must be finite and nonzero")
        if self.period is None:
            if len(mu) != self.vertex_count - 1:
                raise ValueError(f"open chain with {self.vertex_count} vertices needs {self.vertex_count - 1} labels, got {len(mu)}")
        else:
            P = self.period
            if not 0 < P <= self.vertex_count:
                raise ValueError("period must satisfy 0 < period <= vertex_count")
            if len(mu) < P:
                raise ValueError("periodic domain needs at least one label per edge of a period")
            if not np.allclose(mu, mu[np.arange(len(mu)) % P], rtol=1e-12, atol=0):
                raise ValueError("edge labels are not periodic")

    @classmethod
    def constant(cls, vertex_count: int, mu: float, period: int | None = None) -> "PolarisedDomain1D":
        n_edges = vertex_count - 1 if period is None else max(vertex_count - 1, period)
        return cls(vertex_count, np.full(n_edges, float(mu)), period)

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def label(self, i: int, j: int) -> float:
        """Label of the unoriented edge ``{i, j}``."""
        lo = min(i, j)
        if abs(i - j) != 1:
            raise ValueError(f"({i}, {j}) is not an edge")
        if self.period is not None:
            return float(self.mu[lo % self.period])
        if not 0 <= lo < len(self.mu):
            raise IndexError(f"edge ({i}, {j}) outside the domain")
        return float(self.mu[lo])


@dataclass(frozen=True)
class RiccatiState:
    a: Quaternion
    b: Quaternion

    def __post_init__(self):
        if self.a.norm2() == 0.0 and self.b.norm2() == 0.0:
            raise Degenerate("Riccati state (0, 0) is not a projective point")

    @classmethod
    def from_point(cls, f: Quaternion, fhat: Quaternion) -> "RiccatiState":
        """State with ``f + a b^-1 = fhat``."""
        return cls(fhat - f, Quaternion(1.0))

    @classmethod
    def from_arrays(cls, a, b) -> "RiccatiState":
        return cls(Quaternion.from_array(a), Quaternion.from_array(b))

    def point(self, f: Quaternion) -> Quaternion:
        scale = max(abs(self.a), abs(self.b))
        return f + Q.mul(self.a, Q.inv(self.b, scale))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a.to_array(), self.b.to_array()


def proportionality_residual(a1, b1, a2, b2) -> np.ndarray:
    """Relative distance of ``(a2, b2)`` from the right-H-line of ``(a1, b1)``.

    Uses the least-squares right factor ``h`` with ``(a1 h, b1 h) ~ (a2, b2)``.
    """
    n1 = Q.qnorm2(a1) + Q.qnorm2(b1)
    h = (Q.qmul(Q.qconj(a1), a2) + Q.qmul(Q.qconj(b1), b2)) / n1[..., None]
    err = Q.qnorm2(Q.qmul(a1, h) - a2) + Q.qnorm2(Q.qmul(b1, h) - b2)
    return np.sqrt(err / (Q.qnorm2(a2) + Q.qnorm2(b2)))


@dataclass(frozen=True)
class DiscreteCurve:
    domain: PolarisedDomain1D
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.shape != (self.domain.vertex_count, 4):
            raise ValueError(f"expected {self.domain.vertex_count} points of shape (4,), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        diffs = pts[1:] - pts[:-1]
        if len(diffs):
            scale = max(Q.qabs(pts).max(), 1e-300)
            if np.any(Q.qabs(diffs) <= Q.TOL_ZERO * scale):
                raise ZeroDivisor("consecutive curve points coincide")
        P = self.domain.period
        if P is not None and self.domain.vertex_count > P:
            tail = pts[P:]
            if np.abs(tail - pts[: len(tail)]).max() > TOL_CLOSE * max(1.0, np.abs(pts).max()):
                raise ValueError("stored points do not repeat with the domain period")

    @classmethod
    def from_quaternions(cls, domain: PolarisedDomain1D, points) -> "DiscreteCurve":
        return cls(domain, np.array([Q.as_quat_array(p) for p in points]))

    def __len__(self):
        return self.domain.vertex_count

    def point_array(self, m: int) -> np.ndarray:
        P = self.domain.period
        if P is not None:
            return self.points[m % P]
        if not 0 <= m < len(self.points):
            raise IndexError(f"vertex {m} outside the curve")
        return self.points[m]

    def point(self, m: int) -> Quaternion:
        return Quaternion.from_array(self.point_array(m))

    def df(self, i: int, j: int) -> np.ndarray:
        return self.point_array(i) - self.point_array(j)

    def dual_df(self, i: int, j: int) -> np.ndarray:
        """``df*_ij = (1 / mu_ij) df_ij^-1``."""
        fi = self.point_array(i)
        fj = self.point_array(j)
        scale = max(Q.qabs(fi), Q.qabs(fj), 1e-300)
        return Q.qinv(fi - fj, scale) / self.domain.label(i, j)


def _edge(edge) -> tuple[int, int]:
    if isinstance(edge, (int, np.integer)):
        return int(edge), int(edge) + 1
    i, j = edge
    if abs(i - j) != 1:
        raise ValueError(f"{edge!r} is not an edge")
    return int(i), int(j)


# ---------------------------------------------------------------------------
# operations


def dual_curve(c: DiscreteCurve, base=None) -> DiscreteCurve:
    """Dual curve with ``f*_i - f*_j = (1/mu_ij) (f_i - f_j)^-1`` and ``f*_0 = base`` (default 0)."""
    n = c.domain.vertex_count
    P = c.domain.period
    count = n if P is None or n > P else P + 1
    out = np.zeros((count, 4))
    out[0] = 0.0 if base is None else Q.as_quat_array(base)
    for m in range(count - 1):
        out[m + 1] = out[m] - c.dual_df(m, m + 1)
    if P is not None:
        closes = np.abs(out[P] - out[0]).max() <= TOL_CLOSE * max(1.0, np.abs(out).max())
        if closes:
            dom = c.domain
            return DiscreteCurve(dom, out[:n])
    mu = np.array([c.domain.label(m, m + 1) for m in range(count - 1)])
    return DiscreteCurve(PolarisedDomain1D(count, mu), out)


def connection_D(c: DiscreteCurve, lam: float, edge) -> QMatrix2:
    """``D(lam)_ji = Id + [[0, df_ij], [lam df*_ij, 0]]``."""
    i, j = _edge(edge)
    M = qmat_identity()
    M[0, 1] = c.df(i, j)
    M[1, 0] = lam * c.dual_df(i, j)
    return QMatrix2(M)


def r_matrices(fi, fj, mu, lam) -> np.ndarray:
    """Vectorised ``r(lam)_ji`` for edges ``fi -> fj`` with labels ``mu``."""
    fi = np.asarray(fi, dtype=float)
    fj = np.asarray(fj, dtype=float)
    mu = np.asarray(mu, dtype=float)
    scale = np.maximum(np.maximum(Q.qabs(fi), Q.qabs(fj)), 1e-300)
    w = Q.qinv(fi - fj, scale) / mu[..., None]
    fjw = Q.qmul(fj, w)
    out = qmat_identity(np.broadcast_shapes(fi.shape[:-1], fj.shape[:-1], mu.shape))
    out[..., 0, 0, :] += lam * fjw
    out[..., 0, 1, :] -= lam * Q.qmul(fjw, fi)
    out[..., 1, 0, :] += lam * w
    out[..., 1, 1, :] -= lam * Q.qmul(w, fi)
    return out


def connection_r(c: DiscreteCurve, lam: float, edge) -> QMatrix2:
    """``r(lam)_ji = Id + lam [[f_j df*, -f_j df* f_i], [df*, -df* f_i]]``."""
    i, j = _edge(edge)
    return QMatrix2(r_matrices(c.point_array(i), c.point_array(j), c.domain.label(i, j), lam))


def projection_onto(fi, fj) -> np.ndarray:
    """Projection of ``H^2`` onto the line ``(fi, 1) H`` along ``(fj, 1) H``."""
    fi = Q.as_quat_array(fi)
    fj = Q.as_quat_array(fj)
    g = Q.qinv(fi - fj, max(Q.qabs(fi), Q.qabs(fj), 1e-300))
    out = np.empty(np.broadcast_shapes(fi.shape, fj.shape)[:-1] + (2, 2, 4))
    out[..., 0, 0, :] = Q.qmul(fi, g)
    out[..., 0, 1, :] = -Q.qmul(Q.qmul(fi, g), fj)
    out[..., 1, 0, :] = g
    out[..., 1, 1, :] = -Q.qmul(g, fj)
    return out


def connection_r_projective(c: DiscreteCurve, lam: float, edge) -> QMatrix2:
    """The same connection written as ``pi_i + ((mu_ij - lam) / mu_ij) pi_j``."""
    i, j = _edge(edge)
    fi, fj = c.point_array(i), c.point_array(j)
    mu = c.domain.label(i, j)
    return QMatrix2(projection_onto(fi, fj) + (mu - lam) / mu * projection_onto(fj, fi))


def riccati_arrays(fi, fj, mu, nu, a, b):
    """One step ``a_j = a_i + df_ij b_i``, ``b_j = b_i + nu df*_ij a_i`` (vectorised)."""
    fi = np.asarray(fi, dtype=float)
    fj = np.asarray(fj, dtype=float)
    df = fi - fj
    scale = np.maximum(np.maximum(Q.qabs(fi), Q.qabs(fj)), 1e-300)
    dual = Q.qinv(df, scale) / np.asarray(mu, dtype=float)[..., None]
    return a + Q.qmul(df, b), b + nu * Q.qmul(dual, a)


def riccati_step(c: DiscreteCurve, nu: float, edge, state: RiccatiState) -> RiccatiState:
    i, j = _edge(edge)
    a, b = riccati_arrays(c.point_array(i), c.point_array(j), c.domain.label(i, j), nu, *state.arrays())
    return RiccatiState.from_arrays(a, b)


def blowup_mask(a, b) -> np.ndarray:
    return Q.qabs(b) <= Q.TOL_ZERO * np.sqrt(Q.qnorm2(a) + Q.qnorm2(b))


def darboux_transform_curve(c: DiscreteCurve, nu: float, init: RiccatiState, n_vertices: int | None = None) -> DiscreteCurve:
    """Darboux transform ``fhat = f + a b^-1`` swept from vertex 0.

    By default the sweep covers the stored vertices, plus the closing vertex
    of a periodic curve so that closure can be inspected.  The result lives
    on an open chain carrying the same edge labels.
    """
    P = c.domain.period
    if n_vertices is None:
        n_vertices = c.domain.vertex_count if P is None else max(c.domain.vertex_count, P + 1)
    a, b = init.arrays()
    out = np.empty((n_vertices, 4))
    mu = np.empty(max(n_vertices - 1, 0))
    for m in range(n_vertices):
        if blowup_mask(a, b):
            raise TransformBlowUp(m)
        f = c.point_array(m)
        out[m] = f + Q.qmul(a, Q.qinv(b, np.sqrt(Q.qnorm2(a) + Q.qnorm2(b))))
        if m == n_vertices - 1:
            break
        mu[m] = c.domain.label(m, m + 1)
        a, b = riccati_arrays(f, c.point_array(m + 1), mu[m], nu, a, b)
        norm = np.sqrt(Q.qnorm2(a) + Q.qnorm2(b))
        a, b = a / norm, b / norm
    return DiscreteCurve(PolarisedDomain1D(n_vertices, mu), out)


def darboux_residuals(f: DiscreteCurve, fhat: DiscreteCurve, nu: float) -> np.ndarray:
    """``|cr(f_i, f_j, fhat_j, fhat_i) - nu / mu_ij|`` on edges ``(m, m + 1)``."""
    n = min(len(f), len(fhat)) if f.domain.period is None else len(fhat)
    idx = np.arange(n - 1)
    fi = np.array([f.point_array(m) for m in idx])
    fj = np.array([f.point_array(m + 1) for m in idx])
    gi = fhat.points[idx]
    gj = fhat.points[idx + 1]
    mu = np.array([f.domain.label(m, m + 1) for m in idx])
    cr = Q.qcross_ratio(fi, fj, gj, gi)
    return Q.real_part_residual(cr, nu / mu)


def monodromy_matrix(c: DiscreteCurve, nu: float, start: int = 0) -> QMatrix2:
    """Ordered product of ``r(nu)`` over one period starting at ``start``; the first edge acts first."""
    P = c.domain.period
    if P is None:
        raise NotPeriodic("monodromy needs a periodic curve")
    M = qmat_identity()
    for m in range(start, start + P):
        R = r_matrices(c.point_array(m), c.point_array(m + 1), c.domain.label(m, m + 1), nu)
        M = qmat_mul(R, M)
    return QMatrix2(M)


def resonance_residual(M: QMatrix2) -> float:
    s = float(M.data[0, 0, 0])
    if M.max_norm() <= Q.TOL_ZERO:
        raise Degenerate("monodromy matrix is numerically zero")
    if s == 0.0:
        return np.inf
    return float(Q.qabs(M.data / s - qmat_identity()).max())


def is_resonance(M: QMatrix2, tol: float = 1e-9) -> bool:
    """True iff ``M`` is a nonzero real multiple of the identity (relative ``tol``)."""
    return resonance_residual(M) < tol
