"""Curved quadrilateral meshes for the benchmark configurations.

Config A gets uniform square meshes M_k (h = 1/k). Configs B/C get
structured meshes built from four blocks: a graded boundary-layer band on
the conductor side of the interface, a geometric transition shell, a core
(axis rectangle plus an O-grid patch), and the elliptic annulus between the
two ellipses. Curved elements carry tensor geometry nodes of degree 4
interpolating the exact offset/blend maps; straight elements are bilinear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import gll_points
from .geometry import CONFIG_PARAMS
from .physics import MU0, OMEGA_DEFAULT, skin_depth

__all__ = [
    "QuadMesh",
    "MeshGenerationError",
    "square_mesh_A",
    "layered_mesh_B",
    "mesh_for",
    "write_mesh",
    "read_mesh",
]

TAG_DIELECTRIC = "dielectric"
TAG_CONDUCTOR = "conductor"

FACET_OUTER = "outer"
FACET_AXIS = "axis"
FACET_INTERFACE = "interface"

_AXIS_TOL = 1e-12


class MeshGenerationError(RuntimeError):
    pass


def _corner_locals(g: int) -> tuple[int, int, int, int]:
    n1 = g + 1
    return 0, g, g * n1 + g, g * n1


def _face_locals(g: int, face: int) -> np.ndarray:
    """Local tensor indices along face 0..3 (j=0, i=g, j=g, i=0)."""
    n1 = g + 1
    i = np.arange(n1)
    if face == 0:
        return i
    if face == 1:
        return i * n1 + g
    if face == 2:
        return g * n1 + i
    if face == 3:
        return i * n1
    raise ValueError(face)


@dataclass
class QuadMesh:
    """Conforming curved quad mesh with subdomain and boundary labels.

    Element geometry nodes are stored in tensor order (index j*(g+1)+i for
    local coordinates (u_i, v_j)); the four corners are the tensor corners.
    """

    nodes: np.ndarray
    elem_nodes: list
    elem_geomdeg: np.ndarray
    elem_tag: list
    facets: list = field(default_factory=list)  # (elem, face, tag)
    name: str = ""

    @property
    def n_elements(self) -> int:
        return len(self.elem_nodes)

    def corner_ids(self, e: int) -> tuple[int, int, int, int]:
        g = int(self.elem_geomdeg[e])
        c = _corner_locals(g)
        ids = self.elem_nodes[e]
        return tuple(int(ids[k]) for k in c)

    def face_node_ids(self, e: int, face: int) -> np.ndarray:
        g = int(self.elem_geomdeg[e])
        return self.elem_nodes[e][_face_locals(g, face)]

    def face_corner_key(self, e: int, face: int) -> tuple[int, int]:
        c = self.corner_ids(e)
        pairs = [(c[0], c[1]), (c[1], c[2]), (c[3], c[2]), (c[0], c[3])]
        a, b = pairs[face]
        return (a, b) if a < b else (b, a)

    def facet_adjacency(self) -> dict:
        """Map facet key -> list of (elem, face)."""
        adj: dict[tuple[int, int], list] = {}
        for e in range(self.n_elements):
            for face in range(4):
                adj.setdefault(self.face_corner_key(e, face), []).append((e, face))
        return adj


class _NodeRegistry:
    """Deduplicates geometry nodes by exact coordinate values.

    Shared points across blocks are generated by the same expressions, so
    they collide bitwise; mesh conformity is asserted after generation.
    """

    def __init__(self):
        self.coords: list[tuple[float, float]] = []
        self._index: dict[tuple[float, float], int] = {}

    def add(self, r: float, z: float) -> int:
        if abs(r) < _AXIS_TOL:
            r = 0.0
        key = (r, z)
        idx = self._index.get(key)
        if idx is None:
            idx = len(self.coords)
            self.coords.append(key)
            self._index[key] = idx
        return idx

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


class _MeshBuilder:
    def __init__(self, name: str = ""):
        self.reg = _NodeRegistry()
        self.elem_nodes: list[np.ndarray] = []
        self.geomdeg: list[int] = []
        self.tags: list[str] = []
        self.name = name

    def add_element(self, gen, geomdeg: int, tag: str):
        """gen(u, v) -> (r, z) on [0,1]^2, counterclockwise orientation."""
        pts = gll_points(geomdeg)
        ids = np.empty((geomdeg + 1) ** 2, dtype=np.int64)
        k = 0
        for v in pts:
            for u in pts:
                r, z = gen(float(u), float(v))
                ids[k] = self.reg.add(r, z)
                k += 1
        self.elem_nodes.append(ids)
        self.geomdeg.append(geomdeg)
        self.tags.append(tag)

    def finish(self) -> QuadMesh:
        mesh = QuadMesh(
            nodes=self.reg.array(),
            elem_nodes=self.elem_nodes,
            elem_geomdeg=np.asarray(self.geomdeg, dtype=np.int64),
            elem_tag=list(self.tags),
            name=self.name,
        )
        _tag_facets(mesh)
        return mesh


def _tag_facets(mesh: QuadMesh):
    adj = mesh.facet_adjacency()
    facets = []
    for key, owners in adj.items():
        if len(owners) == 1:
            (e, face) = owners[0]
            ids = mesh.face_node_ids(e, face)
            rvals = mesh.nodes[ids, 0]
            tag = FACET_AXIS if np.all(np.abs(rvals) < _AXIS_TOL) else FACET_OUTER
            facets.append((e, face, tag))
        elif len(owners) == 2:
            (e1, f1), (e2, f2) = owners
            if mesh.elem_tag[e1] != mesh.elem_tag[e2]:
                cond = (e1, f1) if mesh.elem_tag[e1] == TAG_CONDUCTOR else (e2, f2)
                facets.append((cond[0], cond[1], FACET_INTERFACE))
        else:
            raise MeshGenerationError(f"facet {key} shared by {len(owners)} elements")
    facets.sort()
    mesh.facets = facets


# ---------------------------------------------------------------------------
# Configuration A: uniform square meshes

def square_mesh_A(k: int) -> QuadMesh:
    """Uniform squares of side 1/k on [0,2]x[-2,2]; conductor [0,1]x[-1,1]."""
    if k < 1:
        raise ValueError("refinement index k must be >= 1")
    b = _MeshBuilder(name=f"A:M{k}")
    nr, nz = 2 * k, 4 * k
    node_id = np.empty((nr + 1, nz + 1), dtype=np.int64)
    for j in range(nz + 1):
        for i in range(nr + 1):
            node_id[i, j] = b.reg.add(i / k, j / k - 2.0)
    for j in range(nz):
        for i in range(nr):
            ids = np.array(
                [node_id[i, j], node_id[i + 1, j], node_id[i, j + 1], node_id[i + 1, j + 1]],
                dtype=np.int64,
            )
            tag = TAG_CONDUCTOR if (i < k and k <= j < 3 * k) else TAG_DIELECTRIC
            b.elem_nodes.append(ids)
            b.geomdeg.append(1)
            b.tags.append(tag)
    return b.finish()


# ---------------------------------------------------------------------------
# Configurations B/C: layered spheroidal meshes

GEOM_DEG_CURVED = 4
_NR_CORE = 3      # radial cells of the axis rectangle (top/bottom path cells)
_NZ_CORE = 4      # vertical cells of the axis rectangle (even: z=0 grid line)
_NS_OGRID = 3     # rows of the O-grid patch between rectangle and core curve
_GRADING_RATIO = 0.5
_BAND_FACTOR = 3.0  # band total thickness = 3 * ell(sigma_max)


def _lin(a, b, t):
    # Exact endpoints so shared nodes generated from either side of a facet
    # collide bitwise in the node registry.
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    return a + t * (b - a)


def _ellipse_point(a, c, phi):
    return (a * math.sin(phi), c * math.cos(phi))


def _inward_normal(a, c, phi):
    # Tangent of phi -> (a sin, c cos) is (a cos, -c sin); inward is (T_z, -T_r).
    dr, dz = a * math.cos(phi), -c * math.sin(phi)
    sp = math.hypot(dr, dz)
    return (dz / sp, -dr / sp)


def _graded_thicknesses(total: float, n: int, ratio: float) -> list[float]:
    """n layer thicknesses summing to `total`, thinnest first, growth 1/ratio."""
    weights = [(1.0 / ratio) ** i for i in range(n)]
    s = sum(weights)
    return [total * w / s for w in weights]


def _geometric_fill(base: float, total: float, max_layers: int = 8) -> list[float]:
    """Geometric layer thicknesses starting near `base` summing to `total`."""
    if total <= base:
        return [total]
    n = 2
    while n < max_layers and base * (2.0 ** (n + 1) - 2.0) < total:
        n += 1
    lo, hi = 1.0001, 8.0
    for _ in range(80):
        g = 0.5 * (lo + hi)
        s = base * sum(g ** m for m in range(1, n + 1))
        if s < total:
            lo = g
        else:
            hi = g
    g = 0.5 * (lo + hi)
    t = [base * g ** m for m in range(1, n + 1)]
    scale = total / sum(t)
    return [x * scale for x in t]


def layered_mesh_B(
    config: str,
    n_layers: int,
    sigma_max: float,
    omega: float = OMEGA_DEFAULT,
    mu0: float = MU0,
) -> QuadMesh:
    """Boundary-layer mesh M_{n_layers} for configs B1/B2/C1/C2.

    The conductor side of the interface carries `n_layers` quadrilateral
    layers inside a band of total thickness 3*ell(sigma_max), geometrically
    graded toward the interface with ratio 0.5. Elliptic facets carry
    geometry degree 4.
    """
    if config not in ("B1", "B2", "C1", "C2"):
        raise ValueError(f"layered_mesh_B does not handle config {config!r}")
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    p = CONFIG_PARAMS[config]
    a, bb, c, d = p["a"], p["b"], p["c"], p["d"]
    shell_conductor = config.startswith("C")

    ell = skin_depth(omega, mu0, sigma_max)
    t_band = _BAND_FACTOR * ell
    kmax = a / c**2  # max meridian curvature of the inner ellipse
    t_core = min(0.35 * c, 0.7 / kmax)
    if t_band >= min(t_core, 1.0 / kmax):
        raise MeshGenerationError(
            f"skin band thickness {t_band:.4g} exceeds the normal-coordinate "
            f"validity range (limit {min(t_core, 1.0 / kmax):.4g})"
        )

    # Depth levels inside the inner ellipse (h measured from the interface).
    if shell_conductor:
        inner_h = [0.0, 0.5 * t_core, t_core]
    else:
        inner_h = [0.0]
        for t in _graded_thicknesses(t_band, n_layers, _GRADING_RATIO):
            inner_h.append(inner_h[-1] + t)
        for t in _geometric_fill(inner_h[-1] - inner_h[-2], t_core - t_band):
            inner_h.append(inner_h[-1] + t)
        inner_h[-1] = t_core

    # Radial levels of the annulus (fraction of the gap between ellipses).
    if shell_conductor:
        gap = bb - a
        tb = t_band / gap
        tlev = [0.0]
        for t in _graded_thicknesses(tb, n_layers, _GRADING_RATIO):
            tlev.append(tlev[-1] + t)
        rest = 1.0 - tlev[-1]
        for frac in (0.25, 0.55, 1.0):
            tlev.append(tb + rest * frac)
        tlev[-1] = 1.0
    else:
        tlev = [0.0, 0.12, 0.3, 0.6, 1.0]

    a_core, c_core = a - t_core, c - t_core
    w, zq = 0.5 * a_core, 0.5 * c_core
    phi_c1 = math.atan2(w / a_core, zq / c_core)
    nr, nz, ns = _NR_CORE, _NZ_CORE, _NS_OGRID

    phi_nodes = np.concatenate(
        [
            np.linspace(0.0, phi_c1, nr + 1),
            np.linspace(phi_c1, math.pi - phi_c1, nz + 1)[1:],
            np.linspace(math.pi - phi_c1, math.pi, nr + 1)[1:],
        ]
    )
    n_phi = len(phi_nodes) - 1  # = 2*nr + nz

    # Inner path around the axis rectangle, matched node-for-node to phi_nodes.
    # Rectangle grid levels are shared with the path so coordinates coincide
    # bitwise where the blocks meet.
    rlev = [w * i / nr for i in range(nr + 1)]
    zlev_desc = [_lin(zq, -zq, j / nz) for j in range(nz + 1)]
    path = []
    for i in range(nr + 1):
        path.append((rlev[i], zq))
    for j in range(1, nz + 1):
        path.append((w, zlev_desc[j]))
    for i in range(1, nr + 1):
        path.append((rlev[nr - i], zlev_desc[nz]))
    path = np.asarray(path)

    def offset(phi, h):
        r0, z0 = _ellipse_point(a, c, phi)
        nrm = _inward_normal(a, c, phi)
        return (r0 + h * nrm[0], z0 + h * nrm[1])

    def blend(phi, t):
        ri, zi = _ellipse_point(a, c, phi)
        ro, zo = _ellipse_point(bb, d, phi)
        return (ri + t * (ro - ri), zi + t * (zo - zi))

    inner_tag = TAG_DIELECTRIC if shell_conductor else TAG_CONDUCTOR
    annulus_tag = TAG_CONDUCTOR if shell_conductor else TAG_DIELECTRIC

    b = _MeshBuilder(name=f"{config}:M{n_layers}:smax{sigma_max:g}")

    # Band + transition rows inside the inner ellipse.
    for j in range(len(inner_h) - 1):
        h_lo, h_hi = inner_h[j], inner_h[j + 1]
        for i in range(n_phi):
            p0, p1 = phi_nodes[i], phi_nodes[i + 1]

            def gen(u, v, p0=p0, p1=p1, h_lo=h_lo, h_hi=h_hi):
                return offset(_lin(p0, p1, u), _lin(h_hi, h_lo, v))

            b.add_element(gen, GEOM_DEG_CURVED, inner_tag)

    # Annulus between the ellipses.
    for j in range(len(tlev) - 1):
        t_lo, t_hi = tlev[j], tlev[j + 1]
        for i in range(n_phi):
            p0, p1 = phi_nodes[i], phi_nodes[i + 1]

            def gen(u, v, p0=p0, p1=p1, t_lo=t_lo, t_hi=t_hi):
                return blend(_lin(p0, p1, u), _lin(t_lo, t_hi, v))

            b.add_element(gen, GEOM_DEG_CURVED, annulus_tag)

    # Axis rectangle.
    rect_r = np.asarray(rlev)
    rect_z = np.asarray(zlev_desc[::-1])
    for j in range(nz):
        for i in range(nr):
            r0, r1 = rect_r[i], rect_r[i + 1]
            z0, z1 = rect_z[j], rect_z[j + 1]

            def gen(u, v, r0=r0, r1=r1, z0=z0, z1=z1):
                return (_lin(r0, r1, u), _lin(z0, z1, v))

            b.add_element(gen, 1, inner_tag)

    # O-grid patch between the rectangle path and the core offset curve.
    for j in range(ns):
        s_lo, s_hi = j / ns, (j + 1) / ns
        for i in range(n_phi):
            p0, p1 = phi_nodes[i], phi_nodes[i + 1]
            q0, q1 = path[i], path[i + 1]

            def gen(u, v, p0=p0, p1=p1, q0=q0, q1=q1, s_lo=s_lo, s_hi=s_hi):
                s = _lin(s_lo, s_hi, v)
                pr, pz = _lin(q0[0], q1[0], u), _lin(q0[1], q1[1], u)
                cr, cz = offset(_lin(p0, p1, u), t_core)
                return (_lin(pr, cr, s), _lin(pz, cz, s))

            b.add_element(gen, GEOM_DEG_CURVED, inner_tag)

    return b.finish()


def mesh_for(config: str, spec: str, sigma_max: float = 80.0) -> QuadMesh:
    """Build a mesh from a name like 'M2' (A: square index, B/C: layer count)."""
    spec = spec.strip()
    if not spec.upper().startswith("M"):
        raise ValueError(f"mesh spec {spec!r} not understood (expected 'M<k>')")
    k = int(spec[1:])
    if config == "A":
        return square_mesh_A(k)
    return layered_mesh_B(config, k, sigma_max)


# ---------------------------------------------------------------------------
# Plain-text mesh I/O ("QUADMESH v1")

def write_mesh(mesh: QuadMesh, path):
    lines = ["QUADMESH v1", str(len(mesh.nodes))]
    for i, (r, z) in enumerate(mesh.nodes):
        # repr of a Python float round-trips exactly
        lines.append(f"{i} {float(r)!r} {float(z)!r}")
    lines.append(str(mesh.n_elements))
    for e in range(mesh.n_elements):
        ids = " ".join(str(int(i)) for i in mesh.elem_nodes[e])
        lines.append(
            f"{e} {mesh.elem_tag[e]} {int(mesh.elem_geomdeg[e])} "
            f"{len(mesh.elem_nodes[e])} {ids}"
        )
    lines.append(str(len(mesh.facets)))
    for e, face, tag in mesh.facets:
        lines.append(f"{e} {face} {tag}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_mesh(path) -> QuadMesh:
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if lines[0] != "QUADMESH v1":
        raise ValueError(f"not a QUADMESH v1 file: {path}")
    pos = 1
    n_nodes = int(lines[pos]); pos += 1
    nodes = np.empty((n_nodes, 2))
    for i in range(n_nodes):
        parts = lines[pos].split(); pos += 1
        nodes[int(parts[0])] = (float(parts[1]), float(parts[2]))
    n_el = int(lines[pos]); pos += 1
    elem_nodes, geomdeg, tags = [], [], []
    for _ in range(n_el):
        parts = lines[pos].split(); pos += 1
        tags.append(parts[1])
        geomdeg.append(int(parts[2]))
        n = int(parts[3])
        elem_nodes.append(np.asarray([int(x) for x in parts[4 : 4 + n]], dtype=np.int64))
    n_fac = int(lines[pos]); pos += 1
    facets = []
    for _ in range(n_fac):
        parts = lines[pos].split(); pos += 1
        facets.append((int(parts[0]), int(parts[1]), parts[2]))
    return QuadMesh(
        nodes=nodes,
        elem_nodes=elem_nodes,
        elem_geomdeg=np.asarray(geomdeg, dtype=np.int64),
        elem_tag=tags,
        facets=facets,
    )
