"""Lagrange P1/P2 reference elements, quadrature rules and the mixed space.

The mixed space carries nine scalar components in the fixed block order
(s_x, s_y, theta, sigma_xx, sigma_xy, sigma_yy, u_x, u_y, p).  The
highest-order moments s and sigma may use a higher polynomial degree than
theta, u and p (Taylor-Hood style); equal order needs CIP stabilization.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import cell_geometry

__all__ = [
    "QuadratureRule",
    "ReferenceElement",
    "MixedSpace",
    "triangle_quadrature",
    "edge_quadrature",
    "make_space",
    "eval_basis",
    "COMPONENTS",
    "FIELDS",
]

#: scalar components in block order, matching the discrete system layout
COMPONENTS = ("sx", "sy", "theta", "sigmaxx", "sigmaxy", "sigmayy", "ux", "uy", "p")

#: field name -> (component indices, uses_high_degree)
FIELDS = {
    "s": ((0, 1), True),
    "theta": ((2,), False),
    "sigma": ((3, 4, 5), True),
    "u": ((6, 7), False),
    "p": ((8,), False),
}


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, 2) reference coords for cells, (n,) on [0,1] for edges
    weights: np.ndarray  # sums to 1/2 (triangle) or 1 (unit edge)
    degree: int


# Symmetric rules on the reference triangle {xi, eta >= 0, xi + eta <= 1}.
# Barycentric orbit data (weights normalized to sum 1, scaled by 1/2 below).
_TRI_ORBITS = {
    1: [("center", 1.0)],
    2: [("vertexish", 1.0 / 3.0, 1.0 / 6.0)],
    4: [
        ("vertexish", 0.223381589678011, 0.445948490915965),
        ("vertexish", 0.109951743655322, 0.091576213509771),
    ],
    5: [
        ("center", 0.225),
        ("vertexish", 0.132394152788506, 0.470142064105115),
        ("vertexish", 0.125939180544827, 0.101286507323456),
    ],
    6: [
        ("vertexish", 0.050844906370207, 0.063089014491502),
        ("vertexish", 0.116786275726379, 0.249286745170910),
        ("full", 0.082851075618374, 0.310352451033785, 0.053145049844816),
    ],
}


def _orbit_points(orbit):
    if orbit[0] == "center":
        bary = [(1 / 3, 1 / 3, 1 / 3)]
        w = orbit[1]
    elif orbit[0] == "vertexish":
        _, w, a = orbit
        b = 1.0 - 2.0 * a
        bary = [(b, a, a), (a, b, a), (a, a, b)]
    else:
        _, w, a, b = orbit
        c = 1.0 - a - b
        bary = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return bary, w


def triangle_quadrature(exactness_degree):
    """Symmetric quadrature on the reference triangle, exact to the degree.

    Weights sum to the reference measure 1/2.
    """
    if not 0 <= exactness_degree <= 6:
        raise ValueError(f"unsupported triangle quadrature degree {exactness_degree}")
    key = {0: 1, 1: 1, 2: 2, 3: 4, 4: 4, 5: 5, 6: 6}[exactness_degree]
    points = []
    weights = []
    for orbit in _TRI_ORBITS[key]:
        bary, w = _orbit_points(orbit)
        for l0, l1, l2 in bary:
            points.append((l1, l2))  # (xi, eta) with lambda0 = 1 - xi - eta
            weights.append(0.5 * w)
    return QuadratureRule(np.array(points), np.array(weights), exactness_degree)


def edge_quadrature(exactness_degree):
    """Gauss-Legendre rule on [0, 1], exact to the requested degree."""
    if not 0 <= exactness_degree <= 20:
        raise ValueError(f"unsupported edge quadrature degree {exactness_degree}")
    n = max(1, (exactness_degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, exactness_degree)


class ReferenceElement:
    """Nodal Lagrange element of degree 1 or 2 on the reference triangle.

    P2 local ordering: the three vertices, then the midpoints of the local
    edges (0,1), (1,2), (2,0).
    """

    def __init__(self, degree):
        if degree not in (1, 2):
            raise ValueError(f"unsupported polynomial degree {degree}")
        self.degree = degree
        self.nloc = 3 if degree == 1 else 6
        if degree == 1:
            self.nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        else:
            self.nodes = np.array(
                [
                    [0.0, 0.0],
                    [1.0, 0.0],
                    [0.0, 1.0],
                    [0.5, 0.0],
                    [0.5, 0.5],
                    [0.0, 0.5],
                ]
            )

    def eval(self, points):
        """Shape function values, shape (npts, nloc)."""
        pts = np.atleast_2d(points)
        xi, eta = pts[:, 0], pts[:, 1]
        lam0 = 1.0 - xi - eta
        if self.degree == 1:
            return np.stack([lam0, xi, eta], axis=1)
        return np.stack(
            [
                lam0 * (2.0 * lam0 - 1.0),
                xi * (2.0 * xi - 1.0),
                eta * (2.0 * eta - 1.0),
                4.0 * lam0 * xi,
                4.0 * xi * eta,
                4.0 * eta * lam0,
            ],
            axis=1,
        )

    def grad(self, points):
        """Reference gradients, shape (npts, nloc, 2)."""
        pts = np.atleast_2d(points)
        n = len(pts)
        xi, eta = pts[:, 0], pts[:, 1]
        lam0 = 1.0 - xi - eta
        g = np.zeros((n, self.nloc, 2))
        if self.degree == 1:
            g[:, 0] = (-1.0, -1.0)
            g[:, 1] = (1.0, 0.0)
            g[:, 2] = (0.0, 1.0)
            return g
        g[:, 0, 0] = 1.0 - 4.0 * lam0
        g[:, 0, 1] = 1.0 - 4.0 * lam0
        g[:, 1, 0] = 4.0 * xi - 1.0
        g[:, 2, 1] = 4.0 * eta - 1.0
        g[:, 3, 0] = 4.0 * (lam0 - xi)
        g[:, 3, 1] = -4.0 * xi
        g[:, 4, 0] = 4.0 * eta
        g[:, 4, 1] = 4.0 * xi
        g[:, 5, 0] = -4.0 * eta
        g[:, 5, 1] = 4.0 * (lam0 - eta)
        return g


class MixedSpace:
    """Global DOF layout of the nine-component mixed space.

    Component blocks are contiguous and ordered as in :data:`COMPONENTS`,
    matching the (s, theta, sigma, u, p) block order of the discrete system.
    P2 edge DOFs are keyed by the mesh's undirected edge table, so the space
    is conforming across cells by construction.
    """

    def __init__(self, mesh, degree_high, degree_low):
        if degree_high not in (1, 2) or degree_low not in (1, 2):
            raise ValueError("element degrees must be 1 or 2")
        if degree_high < degree_low:
            raise ValueError("degree_high must be >= degree_low")
        self.mesh = mesh
        self.degree_high = degree_high
        self.degree_low = degree_low
        self.elements = {d: ReferenceElement(d) for d in {degree_high, degree_low}}

        nv, ne = mesh.num_vertices, mesh.num_edges
        self._n_scalar = {1: nv, 2: nv + ne}
        self.component_degrees = np.array(
            [degree_high if COMPONENTS[k] in ("sx", "sy", "sigmaxx", "sigmaxy", "sigmayy")
             else degree_low for k in range(9)],
            dtype=np.int64,
        )
        sizes = [self._n_scalar[int(d)] for d in self.component_degrees]
        self.component_offsets = np.concatenate([[0], np.cumsum(sizes)])[:9]
        self.n_dofs = int(np.sum(sizes))

        # scalar cell->dof tables per degree
        self._cell_dofs = {1: mesh.cells.copy()}
        if 2 in self.elements:
            self._cell_dofs[2] = np.concatenate(
                [mesh.cells, nv + mesh.cell_edges], axis=1
            )

    def n_scalar(self, degree):
        """Scalar DOF count of one component at the given degree."""
        return self._n_scalar[degree]

    def nloc(self, degree):
        return 3 if degree == 1 else 6

    def cell_dofs(self, degree, cells=None):
        """Scalar local-to-global table, shape (ncells, nloc)."""
        table = self._cell_dofs[degree]
        return table if cells is None else table[cells]

    def component_index(self, name):
        return COMPONENTS.index(name)

    def component_range(self, name):
        k = self.component_index(name)
        size = self._n_scalar[int(self.component_degrees[k])]
        start = int(self.component_offsets[k])
        return slice(start, start + size)

    def field_range(self, name):
        comps, _ = FIELDS[name]
        start = int(self.component_offsets[comps[0]])
        last = comps[-1]
        stop = int(self.component_offsets[last]) + self._n_scalar[
            int(self.component_degrees[last])
        ]
        return slice(start, stop)

    def component_cell_dofs(self, comp, cells=None):
        """Global DOFs of one component on cells, shape (ncells, nloc)."""
        k = comp if isinstance(comp, (int, np.integer)) else self.component_index(comp)
        d = int(self.component_degrees[k])
        return int(self.component_offsets[k]) + self.cell_dofs(d, cells)

    def scalar_node_coords(self, degree):
        """Coordinates of the scalar DOF nodes (vertices, then edge midpoints)."""
        verts = self.mesh.vertices
        if degree == 1:
            return verts
        mids = 0.5 * (verts[self.mesh.edges[:, 0]] + verts[self.mesh.edges[:, 1]])
        return np.concatenate([verts, mids], axis=0)


def make_space(mesh, degree_high, degree_low):
    """Build the mixed space: s and sigma at degree_high, theta/u/p at degree_low."""
    return MixedSpace(mesh, degree_high, degree_low)


def eval_basis(space, component, cell, ref_point):
    """Values and physical gradients of one component's basis on a cell.

    Returns (values (nloc,), grads (nloc, 2)); gradients are mapped with the
    inverse-transpose Jacobian of the cell's affine map.
    """
    k = space.component_index(component) if isinstance(component, str) else component
    degree = int(space.component_degrees[k])
    elem = space.elements[degree]
    pt = np.atleast_2d(ref_point)
    values = elem.eval(pt)[0]
    gref = elem.grad(pt)[0]
    geo = cell_geometry(space.mesh, cell)
    return values, gref @ geo.inverse_jacobian_t.T
