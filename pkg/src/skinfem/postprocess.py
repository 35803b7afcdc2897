"""Post-processing: conductor norms, radial decay slopes, corner profiles.

The decay-rate analysis fits log10|H| against the depth coordinate below
the interface and compares the fitted slope with the curvature-corrected
prediction of the boundary-layer expansion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import gauss_rule
from .fem import DiscreteField, PointLocationError, _geom_at, _geometry_eval, _ref_2d
from .mesh import TAG_CONDUCTOR
from .physics import PhysicalParams, curv_ratio, theoretical_slope

__all__ = [
    "conductor_norm",
    "scaling_exponent",
    "extract_radial",
    "regression_slope",
    "SlopeReport",
    "slope_report",
    "corner_slopes",
    "imag_field_map",
    "write_profile_csv",
    "write_slopes_csv",
    "write_scaling_csv",
]

_Z_TOL = 1e-9


def conductor_norm(field: DiscreteField) -> float:
    """Weighted L2 norm sqrt(int_conductor |H|^2 r dr dz)."""
    space = field.space
    mesh, p = space.mesh, space.p
    nq1 = p + 3
    phi, _, _, w2 = _ref_2d(p, nq1)
    total = 0.0
    for e in range(mesh.n_elements):
        if mesh.elem_tag[e] != TAG_CONDUCTOR:
            continue
        g = int(mesh.elem_geomdeg[e])
        GV, GDu, GDv = _geom_at(g, "quad", p, nq1)
        X = mesh.nodes[mesh.elem_nodes[e]]
        rq, _, _, _, _, _, det = _geometry_eval(X, GV, GDu, GDv)
        hq = phi @ field.coeffs[space.elem_dofs[e]]
        total += np.sum(w2 * det * rq * np.abs(hq) ** 2)
    return float(np.sqrt(total))


def scaling_exponent(sigmas, norms) -> float:
    """Least-squares exponent t in norm ~ C sigma^t (log-log fit)."""
    sigmas = np.asarray(sigmas, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if len(sigmas) < 3:
        raise ValueError("scaling fit needs at least 3 (sigma, norm) pairs")
    if np.any(sigmas <= 0) or np.any(norms <= 0):
        raise ValueError("sigma and norm values must be positive")
    t, _ = np.polyfit(np.log(sigmas), np.log(norms), 1)
    return float(t)


def extract_radial(field: DiscreteField, interface_radius: float):
    """Nodal trace of the field on the conductor part of the equator z = 0.

    Collects the degree-p nodal values on conductor-element edges lying on
    z = 0 and returns (y3, values) with the depth coordinate
    y3 = interface_radius - r, sorted by increasing depth. The interface
    sample y3 = 0 is dropped (it anchors the boundary data, not the decay).
    """
    space = field.space
    mesh = space.mesh
    seen: dict[float, complex] = {}
    for e in range(mesh.n_elements):
        if mesh.elem_tag[e] != TAG_CONDUCTOR:
            continue
        dofs = space.elem_dofs[e]
        pts = space.dof_coords[dofs]
        on_eq = np.abs(pts[:, 1]) < _Z_TOL
        for d, (r, _), hit in zip(dofs, pts, on_eq):
            if hit:
                seen[float(r)] = complex(field.coeffs[d])
    if not seen:
        raise ValueError("no conductor samples found on z = 0")
    rs = np.array(sorted(seen, reverse=True))
    y3 = interface_radius - rs
    vals = np.array([seen[r] for r in rs])
    keep = y3 > _Z_TOL
    return y3[keep], vals[keep]


def regression_slope(y3, values, ell: float):
    """OLS fit of log10|H| = b - s y3 over the skin-depth window y3 <= ell.

    Returns (s, b). Needs at least 2 samples in the window and nonzero |H|.
    """
    y3 = np.asarray(y3, dtype=float)
    mag = np.abs(np.asarray(values))
    mask = y3 <= ell
    if np.count_nonzero(mask) < 2:
        raise ValueError("fewer than 2 samples inside the fit window")
    if np.any(mag[mask] <= 0):
        raise ValueError("zero magnitude sample inside the fit window")
    coef = np.polyfit(y3[mask], np.log10(mag[mask]), 1)
    return float(-coef[0]), float(coef[1])


@dataclass(frozen=True)
class SlopeReport:
    sigma: float
    ell: float
    n_samples: int
    slope_theory: float
    slope_fit: float
    err: float
    curv_ratio: float

    @property
    def within_ratio(self) -> bool:
        """Whether the relative error is below the curvature correction size."""
        return self.err < self.curv_ratio


def slope_report(
    field: DiscreteField,
    params: PhysicalParams,
    mean_curv: float,
    interface_radius: float,
) -> SlopeReport:
    """Fit the equatorial decay slope and compare with the curvature-corrected
    theoretical value."""
    y3, vals = extract_radial(field, interface_radius)
    ell = params.ell
    s_fit, _ = regression_slope(y3, vals, ell)
    s_th = theoretical_slope(params, mean_curv)
    err = abs(s_th - s_fit) / s_th
    n = int(np.count_nonzero(y3 <= ell))
    return SlopeReport(
        sigma=params.sigma,
        ell=ell,
        n_samples=n,
        slope_theory=s_th,
        slope_fit=s_fit,
        err=err,
        curv_ratio=curv_ratio(params, mean_curv),
    )


def corner_slopes(
    field: DiscreteField,
    corner=(1.0, 1.0),
    spacing: float | None = None,
    max_depth: float | None = None,
    params: PhysicalParams | None = None,
):
    """Local decay slopes along the inward diagonal from a reentrant corner.

    Samples |H| along the direction (-1,-1)/sqrt(2) starting at `corner`,
    at equispaced depths (default spacing ell/4 when `params` is given) and
    returns midpoints rho and finite-difference slopes
    s_i = -(log10|H_{i+1}| - log10|H_i|) / (rho_{i+1} - rho_i).
    """
    if spacing is None:
        if params is None:
            raise ValueError("either spacing or params must be given")
        spacing = params.ell / 4.0
    if max_depth is None:
        max_depth = 8.0 * spacing
    n = int(np.floor(max_depth / spacing)) + 1
    rho = spacing * np.arange(1, n + 1)
    d = 1.0 / np.sqrt(2.0)
    pts = np.column_stack([corner[0] - rho * d, corner[1] - rho * d])
    vals = field.evaluate(pts)
    mag = np.abs(vals)
    if np.any(mag <= 0):
        raise ValueError("zero magnitude along the corner diagonal")
    logs = np.log10(mag)
    slopes = -(logs[1:] - logs[:-1]) / (rho[1:] - rho[:-1])
    mid = 0.5 * (rho[1:] + rho[:-1])
    return mid, slopes


def imag_field_map(field: DiscreteField, r_range, z_range, nr: int, nz: int):
    """Raster of Im H on a regular grid; NaN outside the meridian domain.

    Returns (r_axis, z_axis, values[nz, nr]).
    """
    r_axis = np.linspace(r_range[0], r_range[1], nr)
    z_axis = np.linspace(z_range[0], z_range[1], nz)
    out = np.full((nz, nr), np.nan)
    for j, z in enumerate(z_axis):
        for i, r in enumerate(r_axis):
            try:
                out[j, i] = field.evaluate(np.array([r, z])).imag
            except PointLocationError:
                pass
    return r_axis, z_axis, out


# ---------------------------------------------------------------------------
# CSV output (17 significant digits, deterministic)

def _write_csv(path, header, columns):
    rows = zip(*columns)
    lines = [header]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def write_profile_csv(path, y3, values):
    mag = np.abs(np.asarray(values))
    keep = mag > 0  # the axis sample has H = 0 exactly; no finite log there
    _write_csv(
        path, "y3,log10H", (np.asarray(y3, dtype=float)[keep], np.log10(mag[keep]))
    )


def write_slopes_csv(path, rho, slopes):
    _write_csv(path, "rho,slope", (np.asarray(rho, dtype=float), np.asarray(slopes, dtype=float)))


def write_scaling_csv(path, sigmas, norms):
    _write_csv(path, "sigma,A", (np.asarray(sigmas, dtype=float), np.asarray(norms, dtype=float)))
