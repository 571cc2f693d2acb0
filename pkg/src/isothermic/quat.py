"""Quaternion algebra and the quaternionic cross-ratio.

Two layers live here.  :class:`Quaternion` is a small immutable value type
used for scalar work and in the public API.  The ``q*`` functions operate on
``numpy`` arrays whose last axis holds ``(w, x, y, z)`` and broadcast over the
leading axes; every net-level computation in the package goes through them.

Basis convention: ``i*j = k``, ``j*k = i``, ``k*i = j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroDivisor

# relative threshold below which a difference/denominator counts as zero
TOL_ZERO = 1e-13


@dataclass(frozen=True, slots=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_complex(cls, c: complex) -> "Quaternion":
        """Embed ``re + im*1j`` as ``re + im*i``."""
        c = complex(c)
        return cls(c.real, c.imag, 0.0, 0.0)

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected shape (4,), got {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def to_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __iter__(self):
        return iter((self.w, self.x, self.y, self.z))

    def __add__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)
        if isinstance(other, (int, float)):
            return Quaternion(self.w + other, self.x, self.y, self.z)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __sub__(self, other):
        if isinstance(other, (Quaternion, int, float)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return mul(self, other)
        if isinstance(other, (int, float)):
            return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)
        return NotImplemented

    def __rmul__(self, other):
        # only reached for real scalars; reals are central so side is irrelevant
        if isinstance(other, (int, float)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion(self.w / other, self.x / other, self.y / other, self.z / other)
        # q / p is ambiguous for quaternions; use mul(q, inv(p)) explicitly
        return NotImplemented

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self) -> float:
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def __abs__(self) -> float:
        return math.sqrt(self.norm2())

    def inv(self) -> "Quaternion":
        return inv(self)

    @property
    def real(self) -> float:
        return self.w

    @property
    def imag(self) -> "Quaternion":
        return Quaternion(0.0, self.x, self.y, self.z)

    def isclose(self, other, tol: float = 1e-12) -> bool:
        return abs(self - other) <= tol


ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p q``."""
    return Quaternion(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )


def inv(q: Quaternion, scale: float = 1.0) -> Quaternion:
    """Return ``q^-1 = conj(q) / |q|^2``.

    Raises :class:`ZeroDivisor` when ``|q| <= TOL_ZERO * scale``.
    """
    n2 = q.norm2()
    if not n2 > (TOL_ZERO * scale) ** 2:
        raise ZeroDivisor(f"cannot invert {q!r}")
    return Quaternion(q.w / n2, -q.x / n2, -q.y / n2, -q.z / n2)


def cross_ratio(fi: Quaternion, fj: Quaternion, fk: Quaternion, fl: Quaternion) -> Quaternion:
    """``(fi - fj)(fj - fk)^-1 (fk - fl)(fl - fi)^-1``, in exactly this order."""
    scale = max(abs(fi), abs(fj), abs(fk), abs(fl), 1e-300)
    a = fi - fj
    b = inv(fj - fk, scale)
    c = fk - fl
    d = inv(fl - fi, scale)
    return mul(mul(a, b), mul(c, d))


# ---------------------------------------------------------------------------
# array kernels, last axis = (w, x, y, z)


def as_quat_array(q) -> np.ndarray:
    """Coerce a Quaternion, real, complex, or array-like into a float array (..., 4)."""
    if isinstance(q, Quaternion):
        return q.to_array()
    if isinstance(q, (int, float)):
        return np.array([float(q), 0.0, 0.0, 0.0])
    if isinstance(q, complex):
        return np.array([q.real, q.imag, 0.0, 0.0])
    a = np.asarray(q)
    if np.iscomplexobj(a):
        return from_complex(a)
    a = np.asarray(a, dtype=float)
    if a.shape[-1:] != (4,):
        raise ValueError(f"last axis must have length 4, got shape {a.shape}")
    return a


def from_complex(z) -> np.ndarray:
    """Embed complex values ``re + im*1j`` as ``re + im*i``."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (4,))
    out[..., 0] = z.real
    out[..., 1] = z.imag
    return out


def j_complex(z) -> np.ndarray:
    """``j * z`` for complex ``z``; equals ``conj(z) * j`` and lies in span{j, k}."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (4,))
    # j (u + v i) = u j + v j i = u j - v k
    out[..., 2] = z.real
    out[..., 3] = -z.imag
    return out


def qmul(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def qconj(q) -> np.ndarray:
    q = np.array(q, dtype=float)
    q[..., 1:] *= -1.0
    return q


def qnorm2(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.einsum("...i,...i->...", q, q)


def qabs(q) -> np.ndarray:
    return np.sqrt(qnorm2(q))


def qinv(q, scale=1.0) -> np.ndarray:
    """Elementwise inverse; raises :class:`ZeroDivisor` naming the first bad index."""
    q = np.asarray(q, dtype=float)
    n2 = qnorm2(q)
    thresh = (TOL_ZERO * np.asarray(scale, dtype=float)) ** 2
    bad = ~(n2 > thresh)
    if np.any(bad):
        idx = tuple(int(v) for v in np.argwhere(bad)[0]) if bad.ndim else ()
        raise ZeroDivisor(f"cannot invert quaternion at index {idx}")
    return qconj(q) / n2[..., None]


def qcross_ratio(fi, fj, fk, fl) -> np.ndarray:
    """Vectorised :func:`cross_ratio`."""
    fi, fj, fk, fl = (np.asarray(v, dtype=float) for v in (fi, fj, fk, fl))
    scale = np.maximum.reduce([qabs(fi), qabs(fj), qabs(fk), qabs(fl)])
    scale = np.maximum(scale, 1e-300)
    left = qmul(fi - fj, qinv(fj - fk, scale))
    right = qmul(fk - fl, qinv(fl - fi, scale))
    return qmul(left, right)


def real_part_residual(q, target) -> np.ndarray:
    """Distance from ``q`` to the real number ``target`` (as a quaternion)."""
    q = np.asarray(q, dtype=float)
    d = q.copy()
    d[..., 0] -= target
    return qabs(d)
