"""Reference elements, triangle quadrature, and degree-of-freedom maps.

Two inf-sup stable velocity/pressure pairings are supported:

* Taylor-Hood: continuous piecewise quadratics (P2) for each velocity
  component, continuous piecewise linears (P1) for the pressure,
* MINI: P1 enriched with the cubic cell bubble for the velocity, P1 for
  the pressure.

The pressure space is always the full nodal P1 space (mean-zero is enforced
later through a multiplier row, not by constraining the basis).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .mesh import Mesh

__all__ = [
    "ElementPairing",
    "TAYLOR_HOOD",
    "MINI",
    "QuadratureRule",
    "quadrature",
    "shape_values",
    "DofMap",
    "build_dofmap",
]

MAX_QUAD_DEGREE = 20


@dataclass(frozen=True)
class ElementPairing:
    """Velocity/pressure element pairing with velocity approximation order k."""

    kind: str
    velocity_order: int

    def __post_init__(self):
        expected = {"taylor_hood": 2, "mini": 1}
        if self.kind not in expected:
            raise ValueError(f"unknown pairing {self.kind!r}")
        if self.velocity_order != expected[self.kind]:
            raise ValueError(f"{self.kind} pairing has k={expected[self.kind]}")


TAYLOR_HOOD = ElementPairing("taylor_hood", 2)
MINI = ElementPairing("mini", 1)


def pairing_from_name(name: str) -> ElementPairing:
    if name == "taylor_hood":
        return TAYLOR_HOOD
    if name == "mini":
        return MINI
    raise ValueError(f"unknown pairing {name!r}")


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on the reference triangle {x, y >= 0, x + y <= 1}.

    ``points`` are barycentric coordinates (n, 3); ``weights`` sum to the
    reference area 1/2; the rule is exact for bivariate polynomials of total
    degree up to ``degree``.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


def quadrature(degree: int) -> QuadratureRule:
    """Positive-weight rule exact to the requested total degree (1..20).

    Degree 1 is the centroid rule and degree 2 the classic symmetric 3-point
    rule; higher degrees use the collapsed Gauss-Legendre x Gauss-Jacobi
    product, whose weights are positive for every degree.
    """
    if not 1 <= degree <= MAX_QUAD_DEGREE:
        raise ValueError(f"quadrature degree {degree} not in [1, {MAX_QUAD_DEGREE}]")
    if degree == 1:
        pts = np.array([[1 / 3, 1 / 3, 1 / 3]])
        wts = np.array([0.5])
    elif degree == 2:
        pts = np.array([[2 / 3, 1 / 6, 1 / 6],
                        [1 / 6, 2 / 3, 1 / 6],
                        [1 / 6, 1 / 6, 2 / 3]])
        wts = np.full(3, 1 / 6)
    else:
        n = (degree + 2) // 2
        # x-direction absorbs the Jacobian factor (1 - x) of the collapsed map
        xj, wj = roots_jacobi(n, 1.0, 0.0)
        xg, wg = np.polynomial.legendre.leggauss(n)
        # mapping [-1,1] -> [0,1] turns the Jacobi weight (1-t) into 2(1-x)
        # and contributes dt = 2dx, so the pair picks up a net factor 1/8
        xj = 0.5 * (xj + 1.0)
        wj = wj / 4.0
        xg = 0.5 * (xg + 1.0)
        wg = 0.5 * wg
        x = np.repeat(xj, n)
        eta = np.tile(xg, n)
        y = eta * (1.0 - x)
        pts = np.column_stack([1.0 - x - y, x, y])
        wts = np.repeat(wj, n) * np.tile(wg, n)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, degree)


def gauss_legendre_unit(n: int):
    """n-point Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# local basis layout per pairing: vertices first, then edge midpoints
# (Taylor-Hood, edge k joins local vertices k and k+1) or the cell bubble
# (MINI).  Pressure is always the P1 vertex basis.
N_LOCAL_VELOCITY = {"taylor_hood": 6, "mini": 4}


def _tabulate(pairing: ElementPairing, which: str, bary: np.ndarray):
    """Basis values and reference gradients at barycentric points.

    Returns ``(values, grads)`` with shapes (npts, nloc) and (npts, nloc, 2).
    Gradients are with respect to the reference coordinates (x, y) with
    barycentric coordinates (1 - x - y, x, y).
    """
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    lam = bary
    # gradients of the barycentric coordinates
    glam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if which == "pressure":
        vals = lam.copy()
        grads = np.broadcast_to(glam, (len(lam), 3, 2)).copy()
        return vals, grads
    if which != "velocity":
        raise ValueError(f"unknown basis family {which!r}")
    if pairing.kind == "taylor_hood":
        vals = np.empty((len(lam), 6))
        grads = np.empty((len(lam), 6, 2))
        for i in range(3):
            vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
            grads[:, i] = (4.0 * lam[:, i, None] - 1.0) * glam[i]
        for k in range(3):
            i, j = k, (k + 1) % 3
            vals[:, 3 + k] = 4.0 * lam[:, i] * lam[:, j]
            grads[:, 3 + k] = 4.0 * (lam[:, i, None] * glam[j]
                                     + lam[:, j, None] * glam[i])
        return vals, grads
    # MINI: P1 plus the normalized cubic bubble 27*l0*l1*l2
    vals = np.empty((len(lam), 4))
    grads = np.empty((len(lam), 4, 2))
    vals[:, :3] = lam
    grads[:, :3] = np.broadcast_to(glam, (len(lam), 3, 2))
    vals[:, 3] = 27.0 * lam[:, 0] * lam[:, 1] * lam[:, 2]
    grads[:, 3] = 27.0 * (lam[:, 1] * lam[:, 2])[:, None] * glam[0] \
        + 27.0 * (lam[:, 0] * lam[:, 2])[:, None] * glam[1] \
        + 27.0 * (lam[:, 0] * lam[:, 1])[:, None] * glam[2]
    return vals, grads


def shape_values(pairing: ElementPairing, which: str, point):
    """Basis values and reference gradients at a single barycentric point.

    Raises if the point lies outside the closed reference triangle.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (3,):
        raise ValueError("point must be a barycentric triple")
    if np.any(point < -1e-12) or abs(point.sum() - 1.0) > 1e-12:
        raise ValueError("point outside the reference element")
    vals, grads = _tabulate(pairing, which, point[None, :])
    return vals[0], grads[0]


def edge_trace_values(pairing: ElementPairing, t: np.ndarray) -> np.ndarray:
    """1D trace basis on a boundary edge at parameters ``t`` in [0, 1].

    Taylor-Hood traces are the quadratic (end, mid, end) Lagrange basis; MINI
    traces are linear since the bubble vanishes on the boundary.
    """
    t = np.asarray(t, dtype=float)
    if pairing.kind == "taylor_hood":
        return np.stack([(1 - t) * (1 - 2 * t), 4 * t * (1 - t),
                         t * (2 * t - 1)], axis=-1)
    return np.stack([1 - t, t], axis=-1)


class DofMap:
    """Scalar velocity and pressure dof layout for one mesh/pairing pair.

    Velocity dofs are numbered per scalar component: vertex dofs first
    (vertex index), then edge-midpoint dofs (Taylor-Hood) or cell-bubble dofs
    (MINI).  Vector dofs use the component-major layout
    ``component * n_scalar_velocity + scalar_dof``.

    Attributes
    ----------
    cell_velocity : (nt, nloc) int array
        Scalar velocity dofs of each cell, matching the local basis order.
    cell_pressure : (nt, 3) int array
        Pressure dofs of each cell (the triangle's vertices).
    boundary_dofs : (nbd,) int array
        Scalar velocity dofs on the boundary, ordered along the boundary
        traversal: for each chained boundary edge its start vertex, then (for
        Taylor-Hood) its midpoint dof.
    boundary_edge_dofs : (nbe, 2 or 3) int array
        Per boundary edge the scalar dofs in 1D trace order
        (start, [mid,] end).
    """

    def __init__(self, mesh: Mesh, pairing: ElementPairing):
        self.mesh = mesh
        self.pairing = pairing
        nv = mesh.n_vertices
        tris = mesh.triangles

        edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]],
                                tris[:, [2, 0]]])
        key = np.sort(edges, axis=1)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        self.n_edges = len(uniq)
        nt = mesh.n_triangles

        if pairing.kind == "taylor_hood":
            self.n_scalar_velocity = nv + self.n_edges
            edge_dof = nv + inv.reshape(3, nt).T
            self.cell_velocity = np.hstack([tris, edge_dof])
        else:
            self.n_scalar_velocity = nv + nt
            bubble = nv + np.arange(nt)[:, None]
            self.cell_velocity = np.hstack([tris, bubble])
        self.cell_pressure = tris.copy()
        self.n_pressure = nv

        edge_lookup = {tuple(e): i for i, e in enumerate(map(tuple, uniq))}
        bdofs = []
        edofs = []
        for a, b in mesh.boundary_edges:
            if pairing.kind == "taylor_hood":
                m = nv + edge_lookup[tuple(sorted((int(a), int(b))))]
                bdofs.extend([int(a), m])
                edofs.append((int(a), m, int(b)))
            else:
                bdofs.append(int(a))
                edofs.append((int(a), int(b)))
        self.boundary_dofs = np.array(bdofs, dtype=np.int64)
        self.boundary_edge_dofs = np.array(edofs, dtype=np.int64)

        mask = np.zeros(self.n_scalar_velocity, dtype=bool)
        mask[self.boundary_dofs] = True
        self.boundary_mask = mask
        self.interior_dofs = np.where(~mask)[0]
        # position of each boundary scalar dof within boundary_dofs
        self.boundary_position = np.full(self.n_scalar_velocity, -1,
                                         dtype=np.int64)
        self.boundary_position[self.boundary_dofs] = np.arange(
            len(self.boundary_dofs))

    @property
    def n_boundary_dofs(self) -> int:
        return len(self.boundary_dofs)

    @property
    def n_velocity_dofs(self) -> int:
        """Vector velocity dofs (both components)."""
        return 2 * self.n_scalar_velocity

    def dof_points(self) -> np.ndarray:
        """Nodal point of every scalar velocity dof (bubbles: barycenter)."""
        mesh = self.mesh
        pts = np.empty((self.n_scalar_velocity, 2))
        pts[:mesh.n_vertices] = mesh.vertices
        if self.pairing.kind == "taylor_hood":
            tris = mesh.triangles
            for k in range(3):
                i, j = k, (k + 1) % 3
                dof = self.cell_velocity[:, 3 + k]
                pts[dof] = 0.5 * (mesh.vertices[tris[:, i]]
                                  + mesh.vertices[tris[:, j]])
        else:
            dof = self.cell_velocity[:, 3]
            pts[dof] = mesh.vertices[mesh.triangles].mean(axis=1)
        return pts


def build_dofmap(mesh: Mesh, pairing: ElementPairing) -> DofMap:
    """Construct the dof map for ``mesh`` with the given element pairing."""
    return DofMap(mesh, pairing)
