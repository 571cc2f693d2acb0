"""Quad-mesh export and import (OBJ, optional ASCII PLY).

Vertices are written m-fastest.  A direction carrying a period is written
with one period of vertices and closed by index wrap-around, so no seam
vertex is duplicated.  The grid layout goes into ``#`` header lines so that
:func:`read_obj` can rebuild the lattice.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import quat as Q
from .errors import ParseError, PoleHit
from .surface import IsothermicNet

POLE_TOL = 1e-9


def stereographic(points) -> np.ndarray:
    """Projection of ``S^3`` from ``-1``: ``(x, y, z) / (1 + w)``."""
    pts = np.asarray(points, dtype=float)
    w = pts[..., 0]
    bad = w <= -1 + POLE_TOL
    if np.any(bad):
        raise PoleHit(tuple(int(v) for v in np.argwhere(bad)[0]))
    return pts[..., 1:] / (1 + w)[..., None]


def inverse_stereographic(xyz) -> np.ndarray:
    xyz = np.asarray(xyz, dtype=float)
    r2 = np.einsum("...i,...i->...", xyz, xyz)
    out = np.empty(xyz.shape[:-1] + (4,))
    out[..., 0] = (1 - r2) / (1 + r2)
    out[..., 1:] = 2 * xyz / (1 + r2)[..., None]
    return out


def _coords(net: IsothermicNet, projection: str) -> np.ndarray:
    if projection == "stereographic":
        return stereographic(net.points)
    if projection != "none":
        raise ValueError(f"unknown projection {projection!r}")
    w = np.abs(net.points[..., 0])
    if np.any(w >= 1e-9):
        raise ValueError("net leaves Im H; export it with projection='stereographic'")
    return net.points[..., 1:]


@dataclass(frozen=True)
class MeshLayout:
    m_count: int
    n_count: int
    wrap_m: bool
    wrap_n: bool

    def quads(self) -> np.ndarray:
        """Zero-based ``(i, j, k, l)`` vertex indices, m fastest."""
        mq = self.m_count if self.wrap_m else self.m_count - 1
        nq = self.n_count if self.wrap_n else self.n_count - 1
        jj, ii = np.meshgrid(np.arange(nq), np.arange(mq), indexing="ij")
        i1 = (ii + 1) % self.m_count
        j1 = (jj + 1) % self.n_count

        def vid(i, j):
            return i + self.m_count * j

        return np.stack([vid(ii, jj), vid(i1, jj), vid(i1, j1), vid(ii, j1)], axis=-1).reshape(-1, 4)


def _layout(net: IsothermicNet) -> MeshLayout:
    d = net.domain
    mc = d.period_m if d.period_m is not None else d.m_count
    nc = d.period_n if d.period_n is not None else d.n_count
    return MeshLayout(mc, nc, d.period_m is not None, d.period_n is not None)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def obj_text(net: IsothermicNet, projection: str = "none") -> str:
    lay = _layout(net)
    xyz = _coords(net, projection)[: lay.m_count, : lay.n_count]
    lines = [
        "# isothermic quad mesh",
        f"# grid {lay.m_count} {lay.n_count}",
        f"# wrap {int(lay.wrap_m)} {int(lay.wrap_n)}",
        f"# origin {net.origin[0]} {net.origin[1]}",
        f"# projection {projection}",
    ]
    # m fastest: transpose to (n, m)
    for x, y, z in xyz.transpose(1, 0, 2).reshape(-1, 3):
        lines.append(f"v {x:.17g} {y:.17g} {z:.17g}")
    for a, b, c, d in lay.quads() + 1:
        lines.append(f"f {a} {b} {c} {d}")
    return "\n".join(lines) + "\n"


def export_obj(net: IsothermicNet, path, projection: str = "none") -> Path:
    _atomic_write(path, obj_text(net, projection))
    return Path(path)


def export_ply(net: IsothermicNet, path, projection: str = "none") -> Path:
    lay = _layout(net)
    xyz = _coords(net, projection)[: lay.m_count, : lay.n_count].transpose(1, 0, 2).reshape(-1, 3)
    quads = lay.quads()
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(xyz)}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {len(quads)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in xyz]
    lines += [f"4 {a} {b} {c} {d}" for a, b, c, d in quads]
    _atomic_write(path, "\n".join(lines) + "\n")
    return Path(path)


@dataclass(frozen=True)
class ObjMesh:
    layout: MeshLayout
    vertices: np.ndarray
    faces: np.ndarray
    origin: tuple[int, int]
    projection: str

    def grid(self) -> np.ndarray:
        """Quaternion vertices ``(m, n, 4)``; wrapped directions get the seam appended."""
        lay = self.layout
        xyz = self.vertices.reshape(lay.n_count, lay.m_count, 3).transpose(1, 0, 2)
        if self.projection == "stereographic":
            pts = inverse_stereographic(xyz)
        else:
            pts = np.concatenate([np.zeros(xyz.shape[:-1] + (1,)), xyz], axis=-1)
        if lay.wrap_m:
            pts = np.concatenate([pts, pts[:1]], axis=0)
        if lay.wrap_n:
            pts = np.concatenate([pts, pts[:, :1]], axis=1)
        return pts


def parse_obj(text: str) -> ObjMesh:
    header: dict[str, list[str]] = {}
    verts, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        tag = parts[0]
        try:
            if tag == "#":
                if len(parts) >= 2:
                    header[parts[1]] = parts[2:]
            elif tag == "v":
                if len(parts) != 4:
                    raise ValueError
                verts.append([float(v) for v in parts[1:]])
            elif tag == "f":
                if len(parts) != 5:
                    raise ValueError
                faces.append([int(v.split("/")[0]) - 1 for v in parts[1:]])
            else:
                raise ParseError(f"unsupported OBJ record {tag!r}", lineno)
        except ValueError:
            raise ParseError(f"malformed {tag!r} record", lineno) from None
    if not verts:
        raise ParseError("mesh has no vertices")
    if "grid" not in header:
        raise ParseError("missing '# grid m n' header; cannot rebuild the lattice")
    try:
        mc, nc = (int(v) for v in header["grid"])
        wm, wn = (bool(int(v)) for v in header.get("wrap", ["0", "0"]))
        origin = tuple(int(v) for v in header.get("origin", ["0", "0"]))
    except ValueError:
        raise ParseError("malformed grid header") from None
    projection = (header.get("projection") or ["none"])[0]
    if mc * nc != len(verts):
        raise ParseError(f"grid {mc} x {nc} does not match {len(verts)} vertices")
    layout = MeshLayout(mc, nc, wm, wn)
    fa = np.array(faces, dtype=int).reshape(-1, 4)
    if fa.size and (fa.min() < 0 or fa.max() >= len(verts)):
        raise ParseError("face index out of range")
    return ObjMesh(layout, np.array(verts), fa, origin, projection)


def read_obj(path) -> ObjMesh:
    return parse_obj(Path(path).read_text(encoding="utf-8"))


def net_from_mesh(mesh: ObjMesh) -> IsothermicNet:
    """Rebuild a net, reading the labels off the quad cross-ratios.

    The labels are fixed up to a common factor; ``mu_m[0] = 1`` pins it.
    Then ``mu_n[n] = Re cr(quad (0, n))`` and ``mu_m[m] = mu_n[0] / Re cr(quad (m, 0))``.
    """
    pts = mesh.grid()
    mc, nc = pts.shape[:2]
    if mc < 2 or nc < 2:
        raise ParseError("need at least one quad to read off labels")
    col = Q.qcross_ratio(pts[0, :-1], pts[1, :-1], pts[1, 1:], pts[0, 1:])[:, 0]
    mu_n = col.copy()
    row = Q.qcross_ratio(pts[:-1, 0], pts[1:, 0], pts[1:, 1], pts[:-1, 1])[:, 0]
    mu_m = mu_n[0] / row
    lay = mesh.layout
    return IsothermicNet.from_arrays(
        pts,
        mu_m,
        mu_n,
        period_m=lay.m_count if lay.wrap_m else None,
        period_n=lay.n_count if lay.wrap_n else None,
        origin=mesh.origin,
    )
