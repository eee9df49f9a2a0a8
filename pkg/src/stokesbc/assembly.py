"""Assembly of the discrete Stokes blocks and the bordered system.

The discrete problem couples three unknowns: the divergence defect scalar
``delta``, the interior velocity ``y0`` (boundary dofs are eliminated by
restriction to interior rows), and the full nodal pressure ``p``.  With
``A`` the interior stiffness block, ``B`` the (negated) divergence block and
``s`` the vector of pressure-basis integrals, the assembled matrix is

    [ alpha  0^T  s^T ]
    [   0     A   B^T ]
    [   s     B    0  ]

which is symmetric, and nonsingular for alpha >= 0.  The first row carries
the pressure normalization s^T p = 0 and, for alpha > 0, pins delta to its
independently computed value; the rows tested against the pressure basis
recover delta algebraically as e^T (g - B y0) / e^T s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .fe_spaces import DofMap, N_LOCAL_VELOCITY, _tabulate, quadrature
from .mesh import Mesh

__all__ = [
    "BorderedSystem",
    "DiscreteSolution",
    "assemble_stiffness",
    "assemble_divergence",
    "assemble_boundary_mass",
    "compute_delta_h",
    "assemble_bordered_system",
    "dump_coo",
]

# exact for every bilinear-form integrand of both pairings; the MINI
# bubble-bubble stiffness term has total degree 4
ASSEMBLY_QUAD_DEGREE = 4


def _local_blocks(mesh: Mesh, dofmap: DofMap):
    rule = quadrature(ASSEMBLY_QUAD_DEGREE)
    vals_v, grads_v = _tabulate(dofmap.pairing, "velocity", rule.points)
    vals_p, _ = _tabulate(dofmap.pairing, "pressure", rule.points)
    tri_xy = mesh.vertices[mesh.triangles]
    kloc, dloc, detj = _kernels.local_matrices(
        np.ascontiguousarray(tri_xy), np.ascontiguousarray(grads_v),
        np.ascontiguousarray(vals_p), rule.weights)
    if np.any(detj <= 0):
        raise ValueError("degenerate element (non-positive Jacobian)")
    return kloc, dloc


def assemble_stiffness(mesh: Mesh, dofmap: DofMap) -> sp.csr_matrix:
    """Vector-Laplacian Galerkin matrix over all velocity dofs.

    The two components do not couple, so the matrix is block diagonal with
    two copies of the scalar stiffness matrix.
    """
    kloc, _ = _local_blocks(mesh, dofmap)
    nl = N_LOCAL_VELOCITY[dofmap.pairing.kind]
    dofs = dofmap.cell_velocity
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    ns = dofmap.n_scalar_velocity
    scalar = sp.coo_matrix((kloc.ravel(), (rows, cols)),
                           shape=(ns, ns)).tocsr()
    scalar.sum_duplicates()
    full = sp.block_diag([scalar, scalar], format="csr")
    full.sort_indices()
    return full


def assemble_divergence(mesh: Mesh, dofmap: DofMap) -> sp.csr_matrix:
    """Divergence matrix with entries (div phi_j, q_i).

    Rows range over the full nodal pressure basis, columns over vector
    velocity dofs in component-major layout.
    """
    _, dloc = _local_blocks(mesh, dofmap)
    nl = N_LOCAL_VELOCITY[dofmap.pairing.kind]
    ns = dofmap.n_scalar_velocity
    rows = np.repeat(dofmap.cell_pressure, nl, axis=1)
    cols = np.tile(dofmap.cell_velocity, (1, 3))
    blocks = []
    for c in range(2):
        vals = dloc[:, c].reshape(len(dloc), -1)
        blocks.append(sp.coo_matrix(
            (vals.ravel(), (rows.ravel(), cols.ravel())),
            shape=(dofmap.n_pressure, ns)))
    full = sp.hstack(blocks, format="csr")
    full.sum_duplicates()
    full.sort_indices()
    return full


def assemble_boundary_mass(mesh: Mesh, dofmap: DofMap) -> sp.csr_matrix:
    """Gram matrix of the scalar boundary trace basis in L2 of the boundary.

    Rows/columns follow the ``dofmap.boundary_dofs`` ordering.  Entries are
    exact: the trace basis is piecewise polynomial on straight edges.
    """
    lengths = mesh.boundary_edge_lengths()
    if dofmap.pairing.kind == "taylor_hood":
        local = np.array([[4.0, 2.0, -1.0],
                          [2.0, 16.0, 2.0],
                          [-1.0, 2.0, 4.0]]) / 30.0
    else:
        local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    n1d = local.shape[0]
    pos = dofmap.boundary_position[dofmap.boundary_edge_dofs]
    rows = np.repeat(pos, n1d, axis=1).ravel()
    cols = np.tile(pos, (1, n1d)).ravel()
    vals = (lengths[:, None, None] * local).ravel()
    nbd = dofmap.n_boundary_dofs
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(nbd, nbd)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def boundary_flux(trace: np.ndarray, mesh: Mesh, dofmap: DofMap) -> float:
    """Exact boundary integral <v_h, n> of a trace coefficient array.

    ``trace`` has shape (n_boundary_dofs, 2) in ``boundary_dofs`` order; the
    integrand is polynomial per edge with constant normal, so Simpson
    (quadratic traces) or the trapezoid rule (linear traces) is exact.
    """
    lengths = mesh.boundary_edge_lengths()
    pos = dofmap.boundary_position[dofmap.boundary_edge_dofs]
    vals = trace[pos]  # (nbe, n1d, 2)
    if dofmap.pairing.kind == "taylor_hood":
        edge_int = (vals[:, 0] + 4.0 * vals[:, 1] + vals[:, 2]) / 6.0
    else:
        edge_int = 0.5 * (vals[:, 0] + vals[:, 1])
    edge_int *= lengths[:, None]
    return float(np.einsum("ec,ec->", edge_int, mesh.boundary_normals))


def compute_delta_h(u_h, mesh: Mesh, dofmap: DofMap) -> float:
    """Divergence defect delta_h = <u_h, n> / |Omega| by exact edge integration."""
    trace = u_h.coefficients if hasattr(u_h, "coefficients") else np.asarray(u_h)
    return boundary_flux(trace, mesh, dofmap) / mesh.polygon.area


@dataclass
class BorderedSystem:
    """Blocks and right-hand side of the bordered saddle-point system."""

    A: sp.csr_matrix
    B: sp.csr_matrix
    s: np.ndarray
    alpha_reg: float
    rhs_f: np.ndarray
    rhs_g: np.ndarray
    delta_target: float
    dofmap: DofMap
    mesh: Mesh
    boundary_values: np.ndarray  # (n_boundary_dofs, 2) prescribed trace

    @property
    def n_interior(self) -> int:
        return self.A.shape[0]

    def matrix(self) -> sp.csr_matrix:
        top = sp.coo_matrix(([self.alpha_reg], ([0], [0])), shape=(1, 1))
        srow = sp.csr_matrix(self.s[None, :])
        m = sp.bmat([[top, None, srow],
                     [None, self.A, self.B.T],
                     [srow.T, self.B, None]], format="csr")
        m.sort_indices()
        return m

    def rhs(self) -> np.ndarray:
        return np.concatenate([[self.alpha_reg * self.delta_target],
                               self.rhs_f, self.rhs_g])

    def recovered_delta(self, y0: np.ndarray) -> float:
        """delta from the algebraic identity e^T (g - B y0) / e^T s."""
        return float((self.rhs_g - self.B @ y0).sum() / self.s.sum())

    def unpack(self, x: np.ndarray) -> "DiscreteSolution":
        dm = self.dofmap
        ns = dm.n_scalar_velocity
        delta = float(x[0])
        y0 = x[1:1 + self.n_interior]
        p = x[1 + self.n_interior:]
        velocity = np.zeros((ns, 2))
        half = self.n_interior // 2
        velocity[dm.interior_dofs, 0] = y0[:half]
        velocity[dm.interior_dofs, 1] = y0[half:]
        velocity[dm.boundary_dofs] = self.boundary_values
        return DiscreteSolution(velocity=velocity, pressure=p, delta_h=delta)


@dataclass
class DiscreteSolution:
    """Velocity coefficients (n_scalar, 2), nodal pressure, and delta_h."""

    velocity: np.ndarray
    pressure: np.ndarray
    delta_h: float


def assemble_bordered_system(mesh: Mesh, dofmap: DofMap, u_h,
                             alpha_reg: float = 1.0) -> BorderedSystem:
    """Assemble the bordered system for prescribed boundary trace ``u_h``.

    The discrete extension of ``u_h`` has zero interior dofs, so the load
    vectors are ``f = -(K E u_h)`` on interior rows and ``g = D (E u_h)``
    with D the divergence matrix.  ``alpha_reg = 0`` yields the pure saddle
    system with singular upper-left block; both variants have the same
    solution.
    """
    trace = u_h.coefficients if hasattr(u_h, "coefficients") else np.asarray(u_h)
    if trace.shape != (dofmap.n_boundary_dofs, 2):
        raise ValueError(
            f"trace shape {trace.shape} does not match the boundary space "
            f"({dofmap.n_boundary_dofs}, 2)")
    if alpha_reg < 0:
        raise ValueError("alpha_reg must be >= 0")

    stiffness = assemble_stiffness(mesh, dofmap)
    divergence = assemble_divergence(mesh, dofmap)
    ns = dofmap.n_scalar_velocity
    interior = np.concatenate([dofmap.interior_dofs,
                               ns + dofmap.interior_dofs])
    boundary = np.concatenate([dofmap.boundary_dofs,
                               ns + dofmap.boundary_dofs])

    extension = np.zeros(2 * ns)
    extension[dofmap.boundary_dofs] = trace[:, 0]
    extension[ns + dofmap.boundary_dofs] = trace[:, 1]

    A = stiffness[interior][:, interior].tocsr()
    B = (-divergence[:, interior]).tocsr()
    rhs_f = -(stiffness @ extension)[interior]
    rhs_g = divergence @ extension
    s = _pressure_integrals(mesh, dofmap)
    delta = compute_delta_h(trace, mesh, dofmap)
    return BorderedSystem(A=A, B=B, s=s, alpha_reg=float(alpha_reg),
                          rhs_f=rhs_f, rhs_g=rhs_g, delta_target=delta,
                          dofmap=dofmap, mesh=mesh,
                          boundary_values=trace.copy())


def _pressure_integrals(mesh: Mesh, dofmap: DofMap) -> np.ndarray:
    """Vector s with s_i = int q_i; for nodal P1, area/3 per incident cell."""
    areas = mesh.triangle_areas()
    s = np.zeros(dofmap.n_pressure)
    np.add.at(s, dofmap.cell_pressure.ravel(),
              np.repeat(areas / 3.0, 3))
    return s


def galerkin_residual(system: BorderedSystem, sol: DiscreteSolution) -> float:
    """Max-norm residual of the assembled equations at a solution."""
    x = np.concatenate([[sol.delta_h],
                        sol.velocity[system.dofmap.interior_dofs, 0],
                        sol.velocity[system.dofmap.interior_dofs, 1],
                        sol.pressure])
    r = system.matrix() @ x - system.rhs()
    return float(np.abs(r).max())


def dump_coo(matrix) -> str:
    """Coordinate-format text dump (row col value per line), sorted by row, col."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}"]
    for k in order:
        lines.append(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}")
    return "\n".join(lines) + "\n"
