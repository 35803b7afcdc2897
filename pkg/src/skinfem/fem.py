"""High-order Q_p discretization of the axisymmetric orthoradial form.

The sesquilinear form is assembled with a bilinear (unconjugated) complex
pairing, so the matrix is complex symmetric. Quadrature is tensor
Gauss-Legendre with p+3 points per direction; Gauss points are interior so
the 1/r factors stay finite. Essential conditions (outer boundary data and
the homogeneous axis condition) are imposed by interpolation at boundary
DOF nodes plus right-hand-side lifting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import kernels, linsolve
from .basis import gauss_rule, gll_points, lagrange_deriv_matrix, lagrange_matrix
from .mesh import (
    FACET_AXIS,
    FACET_OUTER,
    TAG_CONDUCTOR,
    QuadMesh,
    _face_locals,
)
from .physics import PhysicalParams

__all__ = [
    "FeSpace",
    "DiscreteField",
    "SourceSpec",
    "AssembledSystem",
    "AssemblyError",
    "PointLocationError",
    "shape_basis",
    "assemble",
    "solve",
    "evaluate",
    "write_field",
    "read_field",
]

MAX_DEGREE = 20


class AssemblyError(RuntimeError):
    pass


class PointLocationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Reference bases

def shape_basis(p: int):
    """Tensorized Lagrange basis on Gauss-Lobatto grids of [0,1]^2.

    Returns a callable basis(u, v) -> values of the (p+1)^2 basis functions,
    ordered with the u index fast.
    """
    if not 1 <= p <= MAX_DEGREE:
        raise ValueError(f"degree p={p} outside supported range 1..{MAX_DEGREE}")
    nodes = gll_points(p)

    def basis(u, v):
        vu = lagrange_matrix(nodes, np.atleast_1d(u))
        vv = lagrange_matrix(nodes, np.atleast_1d(v))
        out = np.einsum("qi,qj->qji", vu, vv)
        return out.reshape(len(vu), -1)

    return basis


@lru_cache(maxsize=None)
def _ref_2d(p: int, nq1: int):
    """Basis values/derivatives at the tensor Gauss rule: (phi, dxi, deta, w2)."""
    nodes = gll_points(p)
    gx, gw = gauss_rule(nq1)
    V = lagrange_matrix(nodes, gx)
    D = lagrange_deriv_matrix(nodes, gx)
    phi = np.einsum("ai,bj->baji", V, V).reshape(nq1 * nq1, -1)
    dxi = np.einsum("ai,bj->baji", D, V).reshape(nq1 * nq1, -1)
    deta = np.einsum("ai,bj->baji", V, D).reshape(nq1 * nq1, -1)
    w2 = np.outer(gw, gw).reshape(-1)
    return phi, dxi, deta, w2


@lru_cache(maxsize=None)
def _ref_2d_subdivided(p: int, nq1: int, nsub: int):
    """Same as _ref_2d but on an nsub x nsub subdivided Gauss rule."""
    nodes = gll_points(p)
    gx, gw = gauss_rule(nq1)
    us, ws = [], []
    for s in range(nsub):
        us.append((s + gx) / nsub)
        ws.append(gw / nsub)
    u1 = np.concatenate(us)
    w1 = np.concatenate(ws)
    V = lagrange_matrix(nodes, u1)
    D = lagrange_deriv_matrix(nodes, u1)
    phi = np.einsum("ai,bj->baji", V, V).reshape(len(u1) ** 2, -1)
    dxi = np.einsum("ai,bj->baji", D, V).reshape(len(u1) ** 2, -1)
    deta = np.einsum("ai,bj->baji", V, D).reshape(len(u1) ** 2, -1)
    w2 = np.outer(w1, w1).reshape(-1)
    return phi, dxi, deta, w2


@lru_cache(maxsize=None)
def _geom_at(g: int, key: str, p: int, nq1: int, nsub: int = 1):
    """Geometry basis (values and reference derivatives) at evaluation points.

    key selects the point set: 'quad' (tensor Gauss), 'gll' (tensor GLL of
    degree p), 'subquad' (subdivided Gauss).
    """
    gnodes = gll_points(g)
    if key == "quad":
        gx, _ = gauss_rule(nq1)
        pts = gx
    elif key == "gll":
        pts = gll_points(p)
    elif key == "subquad":
        gx, _ = gauss_rule(nq1)
        pts = np.concatenate([(s + gx) / nsub for s in range(nsub)])
    else:
        raise ValueError(key)
    V = lagrange_matrix(gnodes, pts)
    D = lagrange_deriv_matrix(gnodes, pts)
    n = len(pts)
    GV = np.einsum("ai,bj->baji", V, V).reshape(n * n, -1)
    GDu = np.einsum("ai,bj->baji", D, V).reshape(n * n, -1)
    GDv = np.einsum("ai,bj->baji", V, D).reshape(n * n, -1)
    return GV, GDu, GDv


def _geometry_eval(coords, GV, GDu, GDv):
    """Physical coordinates, Jacobian entries and determinant at points."""
    x = GV @ coords[:, 0]
    y = GV @ coords[:, 1]
    xu = GDu @ coords[:, 0]
    yu = GDu @ coords[:, 1]
    xv = GDv @ coords[:, 0]
    yv = GDv @ coords[:, 1]
    det = xu * yv - xv * yu
    return x, y, xu, xv, yu, yv, det


# ---------------------------------------------------------------------------
# Finite element space

class FeSpace:
    """C0 Q_p space on a QuadMesh with Gauss-Lobatto nodal basis.

    DOFs are identified topologically: one DOF per mesh vertex, p-1 per mesh
    edge (oriented from the lower to the higher vertex id), (p-1)^2 per
    element interior. Outer-boundary and axis DOFs are flagged for essential
    conditions; every axis DOF is constrained to zero.
    """

    def __init__(self, mesh: QuadMesh, p: int):
        if not 1 <= p <= MAX_DEGREE:
            raise ValueError(f"degree p={p} outside supported range 1..{MAX_DEGREE}")
        self.mesh = mesh
        self.p = p
        self._build_numbering()
        self._compute_dof_coords()
        self._collect_boundary_dofs()

    # -- numbering ----------------------------------------------------------

    def _build_numbering(self):
        mesh, p = self.mesh, self.p
        n1 = p + 1
        vertex_dof: dict[int, int] = {}
        edge_dof: dict[tuple[int, int], int] = {}
        next_dof = 0
        elem_dofs = []
        for e in range(mesh.n_elements):
            c = mesh.corner_ids(e)
            for cid in c:
                if cid not in vertex_dof:
                    vertex_dof[cid] = next_dof
                    next_dof += 1
        if p > 1:
            for e in range(mesh.n_elements):
                c = mesh.corner_ids(e)
                for pair in ((c[0], c[1]), (c[1], c[2]), (c[3], c[2]), (c[0], c[3])):
                    key = (min(pair), max(pair))
                    if key not in edge_dof:
                        edge_dof[key] = next_dof
                        next_dof += p - 1
        for e in range(mesh.n_elements):
            c = mesh.corner_ids(e)
            dofs = np.empty(n1 * n1, dtype=np.int64)
            dofs[0] = vertex_dof[c[0]]
            dofs[p] = vertex_dof[c[1]]
            dofs[p * n1 + p] = vertex_dof[c[2]]
            dofs[p * n1] = vertex_dof[c[3]]
            if p > 1:
                inner = np.arange(1, p)
                for face, pair in zip(
                    range(4), ((c[0], c[1]), (c[1], c[2]), (c[3], c[2]), (c[0], c[3]))
                ):
                    key = (min(pair), max(pair))
                    start = edge_dof[key]
                    seq = start + inner - 1
                    if pair[0] > pair[1]:
                        seq = seq[::-1]
                    if face == 0:
                        dofs[inner] = seq
                    elif face == 1:
                        dofs[inner * n1 + p] = seq
                    elif face == 2:
                        dofs[p * n1 + inner] = seq
                    else:
                        dofs[inner * n1] = seq
                for j in range(1, p):
                    for i in range(1, p):
                        dofs[j * n1 + i] = next_dof
                        next_dof += 1
            elem_dofs.append(dofs)
        self.n_dofs = next_dof
        self.elem_dofs = elem_dofs

    # -- dof coordinates ----------------------------------------------------

    def _compute_dof_coords(self):
        mesh, p = self.mesh, self.p
        coords = np.empty((self.n_dofs, 2))
        for e in range(mesh.n_elements):
            g = int(mesh.elem_geomdeg[e])
            GV, _, _ = _geom_at(g, "gll", p, 0)
            X = mesh.nodes[mesh.elem_nodes[e]]
            pts = GV @ X
            coords[self.elem_dofs[e]] = pts
        self.dof_coords = coords

    # -- boundary dofs ------------------------------------------------------

    def _collect_boundary_dofs(self):
        mesh, p = self.mesh, self.p
        outer, axis = set(), set()
        for e, face, tag in mesh.facets:
            if tag not in (FACET_OUTER, FACET_AXIS):
                continue
            ids = self.elem_dofs[e][_face_locals(p, face)]
            (axis if tag == FACET_AXIS else outer).update(int(i) for i in ids)
        # The axis condition is essential and wins at shared corners.
        self.axis_dofs = np.asarray(sorted(axis), dtype=np.int64)
        self.outer_dofs = np.asarray(sorted(outer - axis), dtype=np.int64)
        constrained = np.zeros(self.n_dofs, dtype=bool)
        constrained[self.axis_dofs] = True
        constrained[self.outer_dofs] = True
        self.constrained = constrained
        self.free = np.nonzero(~constrained)[0]


@dataclass(frozen=True)
class SourceSpec:
    """Problem data: either outer Dirichlet data g(r,z) or interior f(r,z).

    `support` marks a discontinuous indicator inside f; elements cut by its
    boundary are integrated on a subdivided quadrature rule.
    """

    boundary_g: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    interior_f: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    support: Optional[Callable[[float, float], bool]] = None

    @staticmethod
    def dirichlet_radius() -> "SourceSpec":
        """g = r on the outer boundary (configurations A and B)."""
        return SourceSpec(boundary_g=lambda r, z: r)

    @staticmethod
    def config_C1() -> "SourceSpec":
        """Interior density f = 100 on r^2/4 + z^2 <= 0.8, zero Dirichlet."""

        def f(r, z):
            return np.where(r**2 / 4.0 + z**2 <= 0.8, 100.0, 0.0)

        return SourceSpec(
            interior_f=f, support=lambda r, z: r**2 / 4.0 + z**2 <= 0.8
        )

    @staticmethod
    def manufactured(kappa: float) -> "SourceSpec":
        """f = -kappa^2 r with g = r: exact solution H = r for uniform eps."""
        return SourceSpec(
            boundary_g=lambda r, z: r,
            interior_f=lambda r, z: -(kappa**2) * r,
        )


@dataclass
class DiscreteField:
    """Complex DOF vector over a Q_p space plus evaluation metadata."""

    space: FeSpace
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)

    def evaluate(self, points) -> np.ndarray:
        return evaluate(self, points)


@dataclass
class AssembledSystem:
    """Full (unconstrained) matrix, lifted rhs, and constraint data."""

    space: FeSpace
    matrix: sp.csr_matrix
    rhs: np.ndarray
    gvec: np.ndarray  # prescribed values at constrained dofs, 0 elsewhere


# ---------------------------------------------------------------------------
# Assembly

def _element_is_cut(support, corners) -> bool:
    vals = [bool(support(float(r), float(z))) for r, z in corners]
    return any(vals) and not all(vals)


def assemble(
    space: FeSpace,
    params: PhysicalParams,
    source: SourceSpec,
    uniform_eps: bool = False,
) -> AssembledSystem:
    """Assemble the weighted complex form and the lifted right-hand side."""
    mesh, p = space.mesh, space.p
    nq1 = p + 3
    kappa2 = params.kappa**2
    inv_eps_cond = 1.0 if uniform_eps else 1.0 / params.eps_conductor

    n2 = (p + 1) ** 2
    phi, dxi, deta, w2 = _ref_2d(p, nq1)

    nel = mesh.n_elements
    rows = np.empty(nel * n2 * n2, dtype=np.int64)
    cols = np.empty(nel * n2 * n2, dtype=np.int64)
    vals = np.empty(nel * n2 * n2, dtype=np.complex128)
    b = np.zeros(space.n_dofs, dtype=np.complex128)

    pos = 0
    for e in range(nel):
        g = int(mesh.elem_geomdeg[e])
        GV, GDu, GDv = _geom_at(g, "quad", p, nq1)
        X = mesh.nodes[mesh.elem_nodes[e]]
        rq, zq, xu, xv, yu, yv, det = _geometry_eval(X, GV, GDu, GDv)
        if np.any(det <= 0.0):
            raise AssemblyError(f"nonpositive Jacobian in element {e}")
        if np.any(rq <= 0.0):
            raise AssemblyError(f"quadrature point with r <= 0 in element {e}")
        dphir = (dxi * yv[:, None] - deta * yu[:, None]) / det[:, None]
        dphiz = (-dxi * xv[:, None] + deta * xu[:, None]) / det[:, None]
        wq = w2 * det
        inv_eps = inv_eps_cond if mesh.elem_tag[e] == TAG_CONDUCTOR else 1.0
        A_loc = kernels.element_matrix(phi, dphir, dphiz, rq, wq, inv_eps, kappa2)

        gdofs = space.elem_dofs[e]
        rows[pos : pos + n2 * n2] = np.repeat(gdofs, n2)
        cols[pos : pos + n2 * n2] = np.tile(gdofs, n2)
        vals[pos : pos + n2 * n2] = A_loc.ravel()
        pos += n2 * n2

        if source.interior_f is not None:
            cut = source.support is not None and _element_is_cut(
                source.support, X[[0, (g + 1) - 1, -1, -(g + 1)], :]
            )
            if cut:
                sphi, sdxi, sdeta, sw2 = _ref_2d_subdivided(p, nq1, 4)
                sGV, sGDu, sGDv = _geom_at(g, "subquad", p, nq1, 4)
                srq, szq, sxu, sxv, syu, syv, sdet = _geometry_eval(X, sGV, sGDu, sGDv)
                fq = np.asarray(source.interior_f(srq, szq), dtype=float)
                b_loc = kernels.element_load(sphi, srq, sw2 * sdet, fq)
            else:
                fq = np.asarray(source.interior_f(rq, zq), dtype=float)
                b_loc = kernels.element_load(phi, rq, wq, fq)
            np.add.at(b, gdofs, b_loc.astype(np.complex128))

    A = _accumulate_csr(rows, cols, vals, space.n_dofs)

    gvec = np.zeros(space.n_dofs, dtype=np.complex128)
    if source.boundary_g is not None and len(space.outer_dofs):
        pts = space.dof_coords[space.outer_dofs]
        gvec[space.outer_dofs] = np.asarray(
            source.boundary_g(pts[:, 0], pts[:, 1]), dtype=np.complex128
        )
    # axis dofs stay 0
    b = b - A @ gvec
    return AssembledSystem(space=space, matrix=A, rhs=b, gvec=gvec)


def _accumulate_csr(rows, cols, vals, n) -> sp.csr_matrix:
    """Deterministic duplicate summation (stable order), preserving the exact
    complex symmetry of the element matrices."""
    keys = rows * np.int64(n) + cols
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    vs = vals[order]
    starts = np.concatenate([[0], np.nonzero(np.diff(ks))[0] + 1])
    sums = np.add.reduceat(vs, starts)
    urows = (ks[starts] // n).astype(np.int64)
    ucols = (ks[starts] % n).astype(np.int64)
    return sp.csr_matrix((sums, (urows, ucols)), shape=(n, n))


def solve(system: AssembledSystem) -> DiscreteField:
    """Direct solve of the constrained system; residual <= 1e-10 relative."""
    space = system.space
    free = space.free
    A_ff = system.matrix[free][:, free].tocsc()
    b_f = system.rhs[free]
    mat = linsolve.SparseComplexMatrix.from_csr(A_ff)
    fact = linsolve.factor(mat)
    x_f = linsolve.backsolve(fact, b_f)
    scale = np.max(np.abs(b_f)) if len(b_f) else 1.0
    if scale > 0:
        res = np.max(np.abs(A_ff @ x_f - b_f)) / scale
        if res > 1e-10:
            raise AssemblyError(f"solver residual {res:.3e} exceeds 1e-10")
    coeffs = system.gvec.copy()
    coeffs[free] = x_f
    return DiscreteField(space=space, coeffs=coeffs)


# ---------------------------------------------------------------------------
# Point evaluation

class _Locator:
    def __init__(self, mesh: QuadMesh):
        self.mesh = mesh
        boxes = np.empty((mesh.n_elements, 4))
        for e in range(mesh.n_elements):
            X = mesh.nodes[mesh.elem_nodes[e]]
            lo = X.min(axis=0)
            hi = X.max(axis=0)
            pad = 0.1 * max(hi[0] - lo[0], hi[1] - lo[1]) + 1e-12
            boxes[e] = (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
        self.boxes = boxes

    def candidates(self, r, z):
        b = self.boxes
        mask = (b[:, 0] <= r) & (r <= b[:, 1]) & (b[:, 2] <= z) & (z <= b[:, 3])
        return np.nonzero(mask)[0]


_locator_cache: dict[int, _Locator] = {}


def _locator(mesh: QuadMesh) -> _Locator:
    loc = _locator_cache.get(id(mesh))
    if loc is None:
        loc = _Locator(mesh)
        _locator_cache[id(mesh)] = loc
    return loc


def inverse_map(mesh: QuadMesh, e: int, r: float, z: float, tol: float = 1e-12):
    """Damped Newton for the reference coordinates of (r, z) in element e.

    Returns (u, v) or None if the iteration leaves the element or stalls.
    """
    g = int(mesh.elem_geomdeg[e])
    gnodes = gll_points(g)
    X = mesh.nodes[mesh.elem_nodes[e]]
    u, v = 0.5, 0.5
    target = np.array([r, z])
    for _ in range(60):
        Vu = lagrange_matrix(gnodes, np.array([u]))
        Vv = lagrange_matrix(gnodes, np.array([v]))
        Du = lagrange_deriv_matrix(gnodes, np.array([u]))
        Dv = lagrange_deriv_matrix(gnodes, np.array([v]))
        GV = np.einsum("ai,aj->ji", Vu, Vv).reshape(-1)
        GDu = np.einsum("ai,aj->ji", Du, Vv).reshape(-1)
        GDv = np.einsum("ai,aj->ji", Vu, Dv).reshape(-1)
        pos = X.T @ GV
        resid = pos - target
        if np.max(np.abs(resid)) < 1e-14 * (1.0 + np.max(np.abs(target))):
            return u, v
        J = np.column_stack([X.T @ GDu, X.T @ GDv])
        try:
            step = np.linalg.solve(J, resid)
        except np.linalg.LinAlgError:
            return None
        if np.max(np.abs(step)) > 0.5:
            step *= 0.5 / np.max(np.abs(step))
        u, v = u - step[0], v - step[1]
        if not (-0.5 <= u <= 1.5 and -0.5 <= v <= 1.5):
            return None
        if np.max(np.abs(step)) < tol:
            return u, v
    return None


def forward_map(mesh: QuadMesh, e: int, u: float, v: float):
    g = int(mesh.elem_geomdeg[e])
    gnodes = gll_points(g)
    Vu = lagrange_matrix(gnodes, np.array([u]))
    Vv = lagrange_matrix(gnodes, np.array([v]))
    GV = np.einsum("ai,aj->ji", Vu, Vv).reshape(-1)
    X = mesh.nodes[mesh.elem_nodes[e]]
    return tuple(X.T @ GV)


def locate(mesh: QuadMesh, r: float, z: float, tol: float = 1e-9):
    """Find (element, u, v) containing the point; PointLocationError if none."""
    loc = _locator(mesh)
    best = None
    for e in loc.candidates(r, z):
        res = inverse_map(mesh, int(e), r, z)
        if res is None:
            continue
        u, v = res
        slack = max(-u, u - 1.0, -v, v - 1.0, 0.0)
        if slack <= tol:
            return int(e), min(max(u, 0.0), 1.0), min(max(v, 0.0), 1.0)
        if best is None or slack < best[0]:
            best = (slack, int(e), u, v)
    if best is not None and best[0] <= 1e-6:
        _, e, u, v = best
        return e, min(max(u, 0.0), 1.0), min(max(v, 0.0), 1.0)
    raise PointLocationError(f"point ({r}, {z}) not found in mesh")


def evaluate(field: DiscreteField, points) -> np.ndarray:
    """Evaluate the discrete field at physical points (n, 2) -> complex (n,)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    space = field.space
    basis = shape_basis(space.p)
    out = np.empty(len(pts), dtype=np.complex128)
    for k, (r, z) in enumerate(pts):
        e, u, v = locate(space.mesh, float(r), float(z))
        vals = basis(u, v)[0]
        out[k] = vals @ field.coeffs[space.elem_dofs[e]]
    if np.ndim(points) == 1:
        return out[0]
    return out


# ---------------------------------------------------------------------------
# Field I/O ("FIELD v1")

def write_field(field: DiscreteField, path):
    lines = ["FIELD v1"]
    meta = dict(field.meta)
    meta.setdefault("p", field.space.p)
    meta.setdefault("ndofs", len(field.coeffs))
    lines.append(str(len(meta)))
    for k in sorted(meta):
        lines.append(f"{k} {meta[k]}")
    lines.append(str(len(field.coeffs)))
    for c in field.coeffs:
        lines.append(f"{c.real:.17g} {c.imag:.17g}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_field(path, space: Optional[FeSpace] = None):
    """Read a FIELD v1 file; returns (coeffs, meta) or a DiscreteField."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if lines[0] != "FIELD v1":
        raise ValueError(f"not a FIELD v1 file: {path}")
    pos = 1
    nmeta = int(lines[pos]); pos += 1
    meta = {}
    for _ in range(nmeta):
        k, v = lines[pos].split(None, 1); pos += 1
        meta[k] = v
    n = int(lines[pos]); pos += 1
    coeffs = np.empty(n, dtype=np.complex128)
    for i in range(n):
        re, im = lines[pos].split(); pos += 1
        coeffs[i] = complex(float(re), float(im))
    if space is not None:
        return DiscreteField(space=space, coeffs=coeffs, meta=meta)
    return coeffs, meta
