"""Polygonal test domains, triangulations, and uniform red refinement.

Two study domains are provided, both with the distinguished corner at the
origin and one incident edge along the positive x-axis:

* ``convex``: an isosceles triangle with interior angle 2*pi/3 at the origin,
* ``nonconvex``: an L-shaped hexagon with reentrant angle 3*pi/2 at the origin.

Meshes are immutable after construction and may be shared freely between
threads.  Refinement always produces a new mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Polygon",
    "Mesh",
    "build_domain",
    "unit_square",
    "refine_uniform",
    "boundary_arclength",
    "dump_mesh",
]


@dataclass(frozen=True)
class Polygon:
    """Simple closed polygon traversed counter-clockwise.

    Vertex 0 sits at the origin and the outgoing edge from it lies along the
    positive x-axis, so the interior angle at the origin opens the sector
    ``theta in [0, corner_angle]``.
    """

    vertices: np.ndarray
    corner_angle: float

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs an (n, 2) vertex array with n >= 3")
        if np.hypot(*v[0]) > 1e-14:
            raise ValueError("polygon vertex 0 must be the origin")
        if self.area <= 0:
            raise ValueError("polygon vertices must be ordered counter-clockwise")

    @property
    def n_edges(self) -> int:
        return self.vertices.shape[0]

    @property
    def edge_starts(self) -> np.ndarray:
        return self.vertices

    @property
    def edge_vectors(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.hypot(*self.edge_vectors.T)

    @property
    def edge_normals(self) -> np.ndarray:
        """Outward unit normals, one per edge (CCW traversal => rotate -90deg)."""
        t = self.edge_vectors / self.edge_lengths[:, None]
        return np.column_stack([t[:, 1], -t[:, 0]])

    @property
    def area(self) -> float:
        x, y = self.vertices.T
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        return (v + w).T @ cross / (6.0 * self.area)

    def point_on_edge(self, edge: int, s) -> np.ndarray:
        """Point at arclength ``s`` from the start of polygon edge ``edge``."""
        t = self.edge_vectors[edge] / self.edge_lengths[edge]
        return self.vertices[edge] + np.multiply.outer(np.asarray(s), t)


class Mesh:
    """Conforming triangulation of a :class:`Polygon`.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array
        Vertex index triples, all positively oriented.
    boundary_edges : (nbe, 2) int array
        Vertex pairs, chained so edge k ends where edge k+1 starts and the
        chain traverses the boundary exactly once, counter-clockwise.
    boundary_normals : (nbe, 2) float array
        Outward unit normal of each boundary edge.
    boundary_parent : (nbe,) int array
        Index of the polygon edge each boundary edge lies on.
    h : float
        Maximum triangle diameter.
    """

    def __init__(self, polygon, vertices, triangles, boundary_edges,
                 boundary_parent):
        self.polygon = polygon
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64)
        self.boundary_parent = np.ascontiguousarray(boundary_parent, dtype=np.int64)
        self.boundary_normals = polygon.edge_normals[self.boundary_parent]
        self._validate()
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self.boundary_edges.setflags(write=False)
        self.boundary_parent.setflags(write=False)
        self.boundary_normals.setflags(write=False)

    def _validate(self):
        if np.any(self.triangle_areas() <= 0):
            raise ValueError("mesh contains a non-positively oriented triangle")
        start = self.boundary_edges[:, 0]
        end = self.boundary_edges[:, 1]
        if not np.array_equal(np.roll(start, -1), end):
            raise ValueError("boundary edges are not chained")

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_boundary_edges(self) -> int:
        return self.boundary_edges.shape[0]

    @property
    def h(self) -> float:
        p = self.vertices[self.triangles]
        d = [np.hypot(*(p[:, i] - p[:, j]).T) for i, j in ((0, 1), (1, 2), (2, 0))]
        return float(np.max(d))

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        u = p[:, 1] - p[:, 0]
        v = p[:, 2] - p[:, 0]
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])

    def boundary_edge_lengths(self) -> np.ndarray:
        p = self.vertices[self.boundary_edges]
        return np.hypot(*(p[:, 1] - p[:, 0]).T)

    def boundary_edge_offsets(self) -> np.ndarray:
        """Arclength of each boundary edge's start within its parent polygon edge."""
        starts = self.vertices[self.boundary_edges[:, 0]]
        return np.hypot(*(starts - self.polygon.vertices[self.boundary_parent]).T)


def _close_chain(edges):
    """Reorder (start, end) pairs into a single closed chain starting at the
    smallest start vertex."""
    nxt = {int(a): (int(b), k) for k, (a, b) in enumerate(edges)}
    first = min(nxt)
    cur = first
    order = []
    for _ in range(len(edges)):
        b, k = nxt[cur]
        order.append(k)
        cur = b
    if cur != first or len(set(order)) != len(edges):
        raise ValueError("boundary does not form a single closed loop")
    return order


def _make_mesh(polygon, vertices, triangles):
    """Assemble a Mesh from vertex/triangle arrays, deriving the boundary."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]],
                            triangles[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True,
                               return_counts=True)
    bnd = edges[counts[inv] == 1]

    # match each boundary edge to its polygon edge via midpoint collinearity
    mids = 0.5 * (vertices[bnd[:, 0]] + vertices[bnd[:, 1]])
    parent = np.empty(len(bnd), dtype=np.int64)
    starts = polygon.edge_starts
    tangents = polygon.edge_vectors / polygon.edge_lengths[:, None]
    for i, m in enumerate(mids):
        rel = m - starts
        along = rel[:, 0] * tangents[:, 0] + rel[:, 1] * tangents[:, 1]
        perp = np.abs(rel[:, 0] * tangents[:, 1] - rel[:, 1] * tangents[:, 0])
        ok = np.where((perp < 1e-12) & (along > -1e-12)
                      & (along < polygon.edge_lengths + 1e-12))[0]
        if len(ok) == 0:
            raise ValueError("boundary edge not on any polygon edge")
        parent[i] = ok[0]

    order = _close_chain(bnd)
    return Mesh(polygon, vertices, triangles, bnd[order], parent[order])


def build_domain(domain_id: str) -> Mesh:
    """Build the coarse mesh of one of the two study domains.

    ``convex`` is the triangle (0,0), (1,0), (cos 2pi/3, sin 2pi/3) with
    interior angle 2pi/3 at the origin; ``nonconvex`` is the L-shaped hexagon
    (0,0), (1,0), (1,1), (-1,1), (-1,-1), (0,-1) with interior angle 3pi/2 at
    the origin.  The origin is a mesh vertex in both cases.
    """
    if domain_id == "convex":
        poly = Polygon(np.array([[0.0, 0.0], [1.0, 0.0],
                                 [np.cos(2 * np.pi / 3), np.sin(2 * np.pi / 3)]]),
                       corner_angle=2 * np.pi / 3)
        verts = poly.vertices
        tris = np.array([[0, 1, 2]])
    elif domain_id == "nonconvex":
        poly = Polygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0],
                                 [-1.0, 1.0], [-1.0, -1.0], [0.0, -1.0]]),
                       corner_angle=3 * np.pi / 2)
        # three unit squares, each split along the diagonal through the origin
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],
                          [-1.0, 1.0], [-1.0, 0.0], [-1.0, -1.0], [0.0, -1.0]])
        tris = np.array([[0, 1, 2], [0, 2, 3],
                         [0, 3, 4], [0, 4, 5],
                         [0, 5, 6], [0, 6, 7]])
    else:
        raise ValueError(f"unknown domain_id {domain_id!r}; "
                         "expected 'convex' or 'nonconvex'")
    return _make_mesh(poly, verts, tris)


def unit_square() -> Mesh:
    """Two-triangle mesh of (0,1)^2 with one boundary edge per side.

    This is the setup of the boundary-flux counterexample; the corner angle
    pi/2 at the origin is regular, so it is not used for singular studies.
    """
    poly = Polygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
                   corner_angle=np.pi / 2)
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    return _make_mesh(poly, poly.vertices, tris)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Red refinement: split every triangle into 4 congruent children.

    New vertices are the edge midpoints; ``h`` halves exactly and every
    boundary edge splits into two children that inherit the parent polygon
    edge (and hence its normal).
    """
    tris = mesh.triangles
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    mid_index = mesh.n_vertices + np.arange(len(uniq))
    midpoints = 0.5 * (mesh.vertices[uniq[:, 0]] + mesh.vertices[uniq[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    nt = mesh.n_triangles
    m01 = mid_index[inv[0 * nt:1 * nt]]
    m12 = mid_index[inv[1 * nt:2 * nt]]
    m20 = mid_index[inv[2 * nt:3 * nt]]
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    children = np.concatenate([
        np.column_stack([v0, m01, m20]),
        np.column_stack([m01, v1, m12]),
        np.column_stack([m20, m12, v2]),
        np.column_stack([m01, m12, m20]),
    ])

    # split boundary edges in traversal order so the chain stays closed
    edge_lookup = {tuple(e): i for i, e in enumerate(map(tuple, uniq))}
    bnd = []
    parent = []
    for (a, b), p in zip(mesh.boundary_edges, mesh.boundary_parent):
        m = mid_index[edge_lookup[tuple(sorted((a, b)))]]
        bnd.extend([(a, m), (m, b)])
        parent.extend([p, p])
    return Mesh(mesh.polygon, vertices, children, np.array(bnd),
                np.array(parent))


def boundary_arclength(mesh: Mesh) -> float:
    """Total length of the mesh boundary."""
    return float(mesh.boundary_edge_lengths().sum())


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text mesh dump: header ``nv nt nbe``, then vertex coordinates,
    triangle index triples, and boundary edge records (v0 v1 parent nx ny)."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles} {mesh.n_boundary_edges}"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.17g} {y:.17g}")
    for a, b, c in mesh.triangles:
        lines.append(f"{a} {b} {c}")
    for (a, b), p, (nx, ny) in zip(mesh.boundary_edges, mesh.boundary_parent,
                                   mesh.boundary_normals):
        lines.append(f"{a} {b} {p} {nx:.17g} {ny:.17g}")
    return "\n".join(lines) + "\n"
