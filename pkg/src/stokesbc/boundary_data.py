"""Approximation of a Dirichlet boundary datum in the discrete trace space.

Three approximation operators are provided:

* the L2 boundary projection (solves the boundary mass system),
* the weighted-average quasi-interpolant with coefficients
  <u, phi_j> / <1, phi_j>  (defined for rough, merely integrable data),
* Lagrange interpolation (requires point values at the boundary nodes).

None of them preserves the zero-net-flux property <u, n> = 0 of the exact
datum, so an optional correction subtracts a multiple of a fixed corrector
field w_h with nonzero flux:

    u_h  ->  u_h - lambda * w_h,   lambda = <u_h, n> / <w_h, n>,

which restores <u_h, n> = 0 without degrading the approximation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import assemble_boundary_mass, boundary_flux
from .fe_spaces import DofMap, edge_trace_values, gauss_legendre_unit
from .manufactured import SingularSolution, eval_velocity, velocity_from_polar
from .mesh import Mesh

__all__ = [
    "BoundaryDatum",
    "BoundaryTrace",
    "CompatibilityCorrector",
    "project_l2",
    "interpolate_carstensen",
    "interpolate_lagrange",
    "enforce_compatibility",
    "build_corrector",
    "trace_of_solution",
    "trace_l2_distance",
]

# data-side quadrature: Gauss points per (sub)segment and the number of
# dyadic subdivision levels toward the singular corner; generous defaults
# keep the data-approximation quadrature error far below discretization error
GAUSS_POINTS = 16
CORNER_LEVELS = 12


@dataclass(frozen=True)
class BoundaryDatum:
    """Boundary datum given edgewise on the polygon.

    ``evaluate(edge, s)`` returns the 2-vector value at arclength ``s``
    (vectorized over ``s``) measured from the start vertex of polygon edge
    ``edge``.  ``smoothness`` is the Sobolev exponent hint t; ``jumps`` lists
    known interior discontinuities as (edge, arclength) pairs so integration
    can split there; ``singular_at_corner`` marks data that blow up or lose
    smoothness toward the origin corner, triggering dyadic subdivision of the
    two incident edges.
    """

    evaluate: Callable[[int, np.ndarray], np.ndarray]
    smoothness: float
    jumps: Sequence = field(default_factory=tuple)
    singular_at_corner: bool = True


@dataclass
class BoundaryTrace:
    """Coefficients of a discrete vector field on the boundary trace space.

    ``coefficients`` has shape (n_boundary_dofs, 2), rows following the
    dofmap's boundary traversal order.
    """

    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.ndim != 2 or self.coefficients.shape[1] != 2:
            raise ValueError("trace coefficients must have shape (nbd, 2)")


@dataclass(frozen=True)
class CompatibilityCorrector:
    """Corrector field w_h together with its exact boundary flux <w_h, n>."""

    w_h: BoundaryTrace
    flux: float


def trace_of_solution(polygon, sol: SingularSolution) -> BoundaryDatum:
    """Boundary datum = analytic trace of a singular solution.

    On the two edges meeting the corner the trace is evaluated in exact polar
    coordinates (arclength is the radius there); reconstructing the angle
    from Cartesian points would lose every digit as r -> 0.
    """
    last = polygon.n_edges - 1
    last_len = polygon.edge_lengths[last]

    def evaluate(edge, s):
        s = np.asarray(s, dtype=float)
        if edge == 0:
            return velocity_from_polar(sol, s, 0.0)
        if edge == last:
            return velocity_from_polar(sol, np.abs(last_len - s), sol.omega)
        return eval_velocity(sol, polygon.point_on_edge(edge, s))

    return BoundaryDatum(evaluate=evaluate, smoothness=0.5 + sol.alpha,
                         jumps=(), singular_at_corner=True)


def _edge_segments(mesh: Mesh, datum: BoundaryDatum):
    """Integration segments per boundary edge, in the edge's [0, L] arclength.

    Splits at declared jump points and applies dyadic grading toward the
    origin corner on the two polygon edges incident to it.
    """
    lengths = mesh.boundary_edge_lengths()
    offsets = mesh.boundary_edge_offsets()
    parents = mesh.boundary_parent
    poly_len = mesh.polygon.edge_lengths
    n_poly = mesh.polygon.n_edges
    out = []
    for e in range(mesh.n_boundary_edges):
        L = lengths[e]
        cuts = {0.0, L}
        for je, js in datum.jumps:
            if je == parents[e]:
                local = js - offsets[e]
                if 1e-14 * L < local < L * (1 - 1e-14):
                    cuts.add(float(local))
        if datum.singular_at_corner:
            # origin = start of polygon edge 0 and end of the last one
            if parents[e] == 0 and offsets[e] < 1e-14:
                for k in range(1, CORNER_LEVELS + 1):
                    cuts.add(L * 0.5 ** k)
            par_end = offsets[e] + L
            if parents[e] == n_poly - 1 \
                    and abs(par_end - poly_len[parents[e]]) < 1e-12:
                for k in range(1, CORNER_LEVELS + 1):
                    cuts.add(L * (1.0 - 0.5 ** k))
        out.append(np.array(sorted(cuts)))
    return out


def _edge_moments(mesh: Mesh, dofmap: DofMap, datum: BoundaryDatum):
    """Moments <u, phi_i> for every boundary trace basis function.

    Returns an (nbd, 2) array; integration is composite Gauss on the segment
    decomposition of :func:`_edge_segments`.
    """
    xg, wg = gauss_legendre_unit(GAUSS_POINTS)
    segments = _edge_segments(mesh, datum)
    lengths = mesh.boundary_edge_lengths()
    offsets = mesh.boundary_edge_offsets()
    pos = dofmap.boundary_position[dofmap.boundary_edge_dofs]
    moments = np.zeros((dofmap.n_boundary_dofs, 2))
    for e in range(mesh.n_boundary_edges):
        L = lengths[e]
        cuts = segments[e]
        a = cuts[:-1]
        d = np.diff(cuts)
        s = (a[:, None] + d[:, None] * xg[None, :]).ravel()
        w = (d[:, None] * wg[None, :]).ravel()
        vals = datum.evaluate(int(mesh.boundary_parent[e]), offsets[e] + s)
        basis = edge_trace_values(dofmap.pairing, s / L)
        contrib = np.einsum("g,gi,gc->ic", w, basis, vals)
        np.add.at(moments, pos[e], contrib)
    return moments


def project_l2(u: BoundaryDatum, mesh: Mesh, dofmap: DofMap) -> BoundaryTrace:
    """Componentwise L2 boundary projection of the datum onto the trace space."""
    mass = assemble_boundary_mass(mesh, dofmap).tocsc()
    rhs = _edge_moments(mesh, dofmap, u)
    try:
        lu = spla.splu(mass)
    except RuntimeError as exc:  # pragma: no cover - only on broken dofmaps
        raise ValueError("singular boundary mass matrix") from exc
    coef = np.column_stack([lu.solve(rhs[:, 0]), lu.solve(rhs[:, 1])])
    resid = np.abs(mass @ coef - rhs).max()
    scale = max(np.abs(rhs).max(), 1.0)
    if resid > 1e-12 * scale:
        raise ValueError(f"boundary projection residual {resid:.3e} too large")
    return BoundaryTrace(coef)


def interpolate_carstensen(u: BoundaryDatum, mesh: Mesh,
                           dofmap: DofMap) -> BoundaryTrace:
    """Weighted-average quasi-interpolant <u, phi_j> / <1, phi_j>.

    Well defined for merely integrable data; on the quadratic trace space the
    same formula is applied to the quadratic nodal basis, whose means
    <1, phi_j> stay positive on 1D edges.
    """
    moments = _edge_moments(mesh, dofmap, u)
    lengths = mesh.boundary_edge_lengths()
    pos = dofmap.boundary_position[dofmap.boundary_edge_dofs]
    means = np.zeros(dofmap.n_boundary_dofs)
    if dofmap.pairing.kind == "taylor_hood":
        local = np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])
    else:
        local = np.array([0.5, 0.5])
    np.add.at(means, pos.ravel(),
              (lengths[:, None] * local).ravel())
    return BoundaryTrace(moments / means[:, None])


def interpolate_lagrange(u: BoundaryDatum, mesh: Mesh,
                         dofmap: DofMap) -> BoundaryTrace:
    """Pointwise interpolation at the boundary nodal points.

    Requires the datum to be continuous at every node; evaluation at a
    declared jump location is rejected.
    """
    lengths = mesh.boundary_edge_lengths()
    offsets = mesh.boundary_edge_offsets()
    pos = dofmap.boundary_position[dofmap.boundary_edge_dofs]
    if dofmap.pairing.kind == "taylor_hood":
        params = np.array([0.0, 0.5, 1.0])
    else:
        params = np.array([0.0, 1.0])
    coef = np.zeros((dofmap.n_boundary_dofs, 2))
    for e in range(mesh.n_boundary_edges):
        s = offsets[e] + params * lengths[e]
        parent = int(mesh.boundary_parent[e])
        for je, js in u.jumps:
            if je == parent and np.any(np.abs(s - js) < 1e-12):
                raise ValueError("datum has a jump at a boundary node; "
                                 "Lagrange interpolation is not defined")
        coef[pos[e]] = u.evaluate(parent, s)
    return BoundaryTrace(coef)


def enforce_compatibility(u_h: BoundaryTrace,
                          corrector: CompatibilityCorrector, mesh: Mesh,
                          dofmap: DofMap) -> BoundaryTrace:
    """Remove the net boundary flux of ``u_h`` with the corrector field.

    Returns u_h - lambda * w_h with lambda = <u_h, n> / <w_h, n>, so the
    result has exactly vanishing discrete flux.
    """
    if abs(corrector.flux) < 1e-14:
        raise ValueError("corrector flux too small; correction is ill-posed")
    lam = boundary_flux(u_h.coefficients, mesh, dofmap) / corrector.flux
    return BoundaryTrace(u_h.coefficients - lam * corrector.w_h.coefficients)


def build_corrector(kind: str, mesh: Mesh,
                    dofmap: DofMap) -> CompatibilityCorrector:
    """Construct a corrector field with nonzero boundary flux.

    ``affine_field`` takes the trace of y0 = (x - centroid) / 2, whose flux
    equals the domain area by the divergence theorem; ``projected_normal``
    takes the componentwise L2 boundary projection of the outward normal,
    whose flux equals its squared boundary norm.
    """
    if kind == "affine_field":
        centroid = mesh.polygon.centroid
        points = dofmap.dof_points()[dofmap.boundary_dofs]
        trace = BoundaryTrace(0.5 * (points - centroid))
    elif kind == "projected_normal":
        def evaluate(edge, s):
            n = mesh.polygon.edge_normals[edge]
            return np.broadcast_to(n, (np.size(s), 2)).copy()

        datum = BoundaryDatum(evaluate=evaluate, smoothness=0.49,
                              jumps=(), singular_at_corner=False)
        trace = project_l2(datum, mesh, dofmap)
    else:
        raise ValueError(f"unknown corrector kind {kind!r}")
    flux = boundary_flux(trace.coefficients, mesh, dofmap)
    if flux == 0.0:
        raise ValueError("corrector has zero flux")
    return CompatibilityCorrector(w_h=trace, flux=flux)


def datum_flux(u: BoundaryDatum, mesh: Mesh) -> float:
    """Boundary flux <u, n> of the datum itself, by composite quadrature."""
    xg, wg = gauss_legendre_unit(GAUSS_POINTS)
    segments = _edge_segments(mesh, u)
    offsets = mesh.boundary_edge_offsets()
    total = 0.0
    for e in range(mesh.n_boundary_edges):
        cuts = segments[e]
        a = cuts[:-1]
        d = np.diff(cuts)
        s = (a[:, None] + d[:, None] * xg[None, :]).ravel()
        w = (d[:, None] * wg[None, :]).ravel()
        vals = u.evaluate(int(mesh.boundary_parent[e]), offsets[e] + s)
        total += float(w @ (vals @ mesh.boundary_normals[e]))
    return total


def trace_l2_distance(u: BoundaryDatum, u_h: BoundaryTrace, mesh: Mesh,
                      dofmap: DofMap) -> float:
    """L2(boundary) distance between a datum and a discrete trace."""
    xg, wg = gauss_legendre_unit(GAUSS_POINTS)
    segments = _edge_segments(mesh, u)
    lengths = mesh.boundary_edge_lengths()
    offsets = mesh.boundary_edge_offsets()
    pos = dofmap.boundary_position[dofmap.boundary_edge_dofs]
    total = 0.0
    for e in range(mesh.n_boundary_edges):
        L = lengths[e]
        cuts = segments[e]
        a = cuts[:-1]
        d = np.diff(cuts)
        s = (a[:, None] + d[:, None] * xg[None, :]).ravel()
        w = (d[:, None] * wg[None, :]).ravel()
        vals = u.evaluate(int(mesh.boundary_parent[e]), offsets[e] + s)
        basis = edge_trace_values(dofmap.pairing, s / L)
        approx = basis @ u_h.coefficients[pos[e]]
        diff = vals - approx
        total += float(w @ (diff * diff).sum(axis=1))
    return np.sqrt(total)
