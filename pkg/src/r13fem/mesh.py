"""Triangle meshes: topology, built-in generators, Gmsh (MSH 2.2) ingestion.

A :class:`Mesh2D` owns straight-edged counter-clockwise triangles, tagged
boundary edges and the interior-edge table needed for CIP jump terms.  Meshes
are immutable after construction, so concurrent read access is safe.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mesh2D",
    "MeshError",
    "GmshParseError",
    "EdgeFrame",
    "CellGeometry",
    "edge_frame",
    "cell_geometry",
    "generate_rectangle",
    "generate_annulus",
    "read_gmsh",
    "write_gmsh",
    "write_mesh_text",
    "read_mesh_text",
]


class MeshError(ValueError):
    pass


class GmshParseError(MeshError):
    pass


@dataclass(frozen=True)
class EdgeFrame:
    """Outward normal, tangent (normal rotated by +90 degrees) and length."""

    n: np.ndarray
    t: np.ndarray
    length: float


@dataclass(frozen=True)
class CellGeometry:
    """Affine map data of one triangle."""

    jacobian: np.ndarray
    inverse_jacobian_t: np.ndarray
    area: float
    diameter: float


class Mesh2D:
    """Conforming triangle mesh with tagged boundary and interior-edge tables.

    Parameters
    ----------
    vertices : (nv, 2) float array
    cells : (nc, 3) int array
        Vertex triples; orientation is fixed to counter-clockwise here.
    tagged_edges : iterable of (va, vb, tag)
        One positive integer tag per boundary edge (vertex order free).
    """

    def __init__(self, vertices, cells, tagged_edges):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        if cells.ndim != 2 or cells.shape[1] != 3:
            raise MeshError("cells must be an (n, 3) array")
        if cells.size and (cells.min() < 0 or cells.max() >= len(vertices)):
            raise MeshError("cell vertex index out of range")
        if np.any(
            (cells[:, 0] == cells[:, 1])
            | (cells[:, 1] == cells[:, 2])
            | (cells[:, 2] == cells[:, 0])
        ):
            raise MeshError("cell with repeated vertices")

        # enforce counter-clockwise orientation
        area2 = _signed_area2(vertices, cells)
        if np.any(area2 == 0.0):
            raise MeshError("degenerate (zero-area) cell")
        flip = area2 < 0.0
        if np.any(flip):
            cells = cells.copy()
            cells[flip] = cells[flip][:, [0, 2, 1]]

        self.vertices = vertices
        self.cells = cells
        self._build_edges(tagged_edges)
        for arr in (
            self.vertices,
            self.cells,
            self.edges,
            self.cell_edges,
            self.boundary_vertex_pairs,
            self.boundary_cells,
            self.boundary_tags,
            self.interior_vertex_pairs,
            self.interior_left,
            self.interior_right,
        ):
            arr.flags.writeable = False

    # -- construction ---------------------------------------------------

    def _build_edges(self, tagged_edges):
        cells = self.cells
        nc = len(cells)
        # directed local edges k = 0,1,2: (v_k, v_{k+1 mod 3}); instance
        # index layout is k * nc + cell.
        directed = np.concatenate(
            [cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]], axis=0
        )
        canonical = np.sort(directed, axis=1)
        edges, inverse = np.unique(canonical, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        counts = np.bincount(inverse, minlength=len(edges))
        if np.any(counts > 2):
            bad = edges[np.argmax(counts > 2)]
            raise MeshError(f"non-manifold edge {tuple(bad)} shared by >2 cells")

        self.edges = edges
        self.cell_edges = inverse.reshape(3, nc).T.copy()

        # instance -> (cell, local edge)
        order = np.argsort(inverse, kind="stable")
        instance_cell = np.tile(np.arange(nc), 3)[order]
        instance_dir = directed[order]
        starts = np.concatenate([[0], np.cumsum(counts)])

        interior_ids = np.flatnonzero(counts == 2)
        boundary_ids = np.flatnonzero(counts == 1)

        ni = len(interior_ids)
        int_pairs = np.empty((ni, 2), dtype=np.int64)
        int_left = np.empty(ni, dtype=np.int64)
        int_right = np.empty(ni, dtype=np.int64)
        for out, eid in enumerate(interior_ids):
            i0 = starts[eid]
            c0, c1 = instance_cell[i0], instance_cell[i0 + 1]
            if c0 > c1:
                c0, c1 = c1, c0
                first = i0 + 1
            else:
                first = i0
            # left cell = lower index; store the edge directed as the left
            # cell traverses it, so its outward normal is the jump normal n+
            int_left[out], int_right[out] = c0, c1
            int_pairs[out] = instance_dir[first]
        self.interior_vertex_pairs = int_pairs
        self.interior_left = int_left
        self.interior_right = int_right

        nb = len(boundary_ids)
        bnd_pairs = np.empty((nb, 2), dtype=np.int64)
        bnd_cells = np.empty(nb, dtype=np.int64)
        for out, eid in enumerate(boundary_ids):
            i0 = starts[eid]
            bnd_cells[out] = instance_cell[i0]
            bnd_pairs[out] = instance_dir[i0]
        self.boundary_vertex_pairs = bnd_pairs
        self.boundary_cells = bnd_cells

        tag_map = {}
        for va, vb, tag in tagged_edges:
            key = (min(int(va), int(vb)), max(int(va), int(vb)))
            tag = int(tag)
            if tag <= 0:
                raise MeshError(f"boundary tag must be positive, got {tag}")
            if key in tag_map and tag_map[key] != tag:
                raise MeshError(f"conflicting tags for boundary edge {key}")
            tag_map[key] = tag

        boundary_keys = {
            (min(a, b), max(a, b)): i for i, (a, b) in enumerate(map(tuple, bnd_pairs))
        }
        for key in tag_map:
            if key not in boundary_keys:
                raise MeshError(
                    f"tagged line {key} does not match any boundary cell edge"
                )
        tags = np.zeros(nb, dtype=np.int64)
        for key, i in boundary_keys.items():
            if key not in tag_map:
                raise MeshError(f"boundary edge {key} carries no tag")
            tags[i] = tag_map[key]
        self.boundary_tags = tags

        # boundary must consist of closed loops: every boundary vertex has
        # exactly two incident boundary edges
        if nb:
            degree = np.bincount(bnd_pairs.ravel(), minlength=len(self.vertices))
            touched = np.unique(bnd_pairs.ravel())
            if np.any(degree[touched] != 2):
                raise MeshError("boundary edges do not form closed loops")

    # -- basic queries ----------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def boundary_tag_values(self):
        return sorted(set(int(t) for t in self.boundary_tags))

    def cell_areas(self):
        return 0.5 * _signed_area2(self.vertices, self.cells)

    def cell_diameters(self):
        p = self.vertices[self.cells]
        e = np.stack(
            [p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1
        )
        return np.sqrt((e**2).sum(axis=2)).max(axis=1)

    def max_edge_length(self):
        p = self.vertices[self.edges]
        return float(np.sqrt(((p[:, 1] - p[:, 0]) ** 2).sum(axis=1)).max())


def _signed_area2(vertices, cells):
    """Twice the signed area of every cell (positive = counter-clockwise)."""
    a = vertices[cells[:, 0]]
    b = vertices[cells[:, 1]]
    c = vertices[cells[:, 2]]
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )


def cell_geometry(mesh, cell):
    """Affine map data (Jacobian, inverse-transpose, area, diameter) of a cell."""
    tri = mesh.cells[cell]
    a, b, c = mesh.vertices[tri]
    jac = np.column_stack([b - a, c - a])
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    inv_t = np.array([[jac[1, 1], -jac[1, 0]], [-jac[0, 1], jac[0, 0]]]) / det
    diam = max(
        np.linalg.norm(b - a), np.linalg.norm(c - b), np.linalg.norm(a - c)
    )
    return CellGeometry(jac, inv_t, 0.5 * det, float(diam))


def edge_frame(mesh, edge_vertices, cell):
    """Boundary-aligned frame of an edge as seen from ``cell``.

    The normal points out of the given cell; the tangent is the normal
    rotated by +90 degrees, t = (-n_y, n_x), which is the direction in which
    the cell traverses the edge counter-clockwise.
    """
    va, vb = int(edge_vertices[0]), int(edge_vertices[1])
    tri = mesh.cells[cell]
    for k in range(3):
        if tri[k] == va and tri[(k + 1) % 3] == vb:
            break
        if tri[k] == vb and tri[(k + 1) % 3] == va:
            va, vb = vb, va
            break
    else:
        raise MeshError(f"edge ({va}, {vb}) does not belong to cell {cell}")
    d = mesh.vertices[vb] - mesh.vertices[va]
    length = float(np.hypot(d[0], d[1]))
    if length == 0.0:
        raise MeshError("degenerate zero-length edge")
    n = np.array([d[1], -d[0]]) / length
    t = np.array([-n[1], n[0]])
    return EdgeFrame(n, t, length)


# ---------------------------------------------------------------------------
# built-in generators
# ---------------------------------------------------------------------------


def generate_rectangle(width, height, target_h):
    """Structured triangulation of [0,w] x [0,h] with alternating diagonals.

    Boundary tags: 1 = bottom, 2 = right, 3 = top, 4 = left.  The longest
    edge is the quad diagonal, at most sqrt(2) * target_h.
    """
    if width <= 0 or height <= 0 or target_h <= 0:
        raise MeshError("rectangle dimensions and target_h must be positive")
    nx = max(1, math.ceil(width / target_h))
    ny = max(1, math.ceil(height / target_h))
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    xg, yg = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xg.ravel(), yg.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    cells = []
    for j in range(ny):
        for i in range(nx):
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            if (i + j) % 2 == 0:
                cells.append((a, b, c))
                cells.append((a, c, d))
            else:
                cells.append((a, b, d))
                cells.append((b, c, d))

    tagged = []
    for i in range(nx):
        tagged.append((vid(i, 0), vid(i + 1, 0), 1))
        tagged.append((vid(i, ny), vid(i + 1, ny), 3))
    for j in range(ny):
        tagged.append((vid(nx, j), vid(nx, j + 1), 2))
        tagged.append((vid(0, j), vid(0, j + 1), 4))
    return Mesh2D(vertices, np.array(cells), tagged)


def _zip_band(angles_a, ids_a, angles_b, ids_b, cyclic):
    """Triangulate the band between two concentric vertex rings.

    Both rings are given by strictly increasing angles; for ``cyclic`` bands
    the rings wrap around, otherwise they must share their first and last
    angles.  The zipper advances whichever ring has the smaller next angle,
    which keeps the strip triangles counter-clockwise.
    """
    if cyclic:
        aa = np.append(angles_a, angles_a[0] + 2.0 * math.pi)
        ab = np.append(angles_b, angles_b[0] + 2.0 * math.pi)
        ia = np.append(ids_a, ids_a[0])
        ib = np.append(ids_b, ids_b[0])
        na, nb = len(angles_a), len(angles_b)
    else:
        aa, ab, ia, ib = angles_a, angles_b, ids_a, ids_b
        na, nb = len(angles_a) - 1, len(angles_b) - 1
    tris = []
    i = j = 0
    while i < na or j < nb:
        advance_a = j >= nb or (i < na and aa[i + 1] <= ab[j + 1])
        if advance_a:
            tris.append((ia[i], ib[j], ia[i + 1]))
            i += 1
        else:
            tris.append((ia[i], ib[j], ib[j + 1]))
            j += 1
    return tris


def generate_annulus(r_inner, r_outer, target_h):
    """Near-uniform triangulation of the ring r_inner <= |x| <= r_outer.

    Concentric vertex rings sit exactly on circles (the boundary rings on the
    exact boundary radii) with per-ring point counts chosen so the azimuthal
    spacing tracks the radial spacing.  Tags: 1 = inner circle, 2 = outer.
    """
    if not (0 < r_inner < r_outer):
        raise MeshError("need 0 < r_inner < r_outer")
    if target_h <= 0:
        raise MeshError("target_h must be positive")
    nr = max(1, round((r_outer - r_inner) / target_h))
    radii = np.linspace(r_inner, r_outer, nr + 1)

    ring_angles = []
    ring_ids = []
    vertices = []
    next_id = 0
    for j, r in enumerate(radii):
        n = max(8, int(round(2.0 * math.pi * r / target_h)))
        stagger = 0.5 * (j % 2) * (2.0 * math.pi / n)
        ang = stagger + 2.0 * math.pi * np.arange(n) / n
        ring_angles.append(ang)
        ring_ids.append(np.arange(next_id, next_id + n))
        next_id += n
        vertices.append(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
    vertices = np.concatenate(vertices, axis=0)

    cells = []
    for j in range(nr):
        cells.extend(
            _zip_band(
                ring_angles[j], ring_ids[j], ring_angles[j + 1], ring_ids[j + 1], True
            )
        )

    tagged = []
    inner = ring_ids[0]
    outer = ring_ids[-1]
    for k in range(len(inner)):
        tagged.append((inner[k], inner[(k + 1) % len(inner)], 1))
    for k in range(len(outer)):
        tagged.append((outer[k], outer[(k + 1) % len(outer)], 2))
    return Mesh2D(vertices, np.array(cells), tagged)


# ---------------------------------------------------------------------------
# Gmsh MSH 2.2 ASCII subset
# ---------------------------------------------------------------------------


def read_gmsh(path):
    """Read an MSH 2.2 ASCII file (node/line/triangle subset) into a Mesh2D.

    Lines (element type 1) become tagged boundary edges, triangles (type 2)
    become cells; any other element type is rejected.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]

    sections = {}
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.startswith("$") and not ln.startswith("$End"):
            name = ln[1:]
            body = []
            i += 1
            while i < len(lines) and lines[i] != f"$End{name}":
                body.append(lines[i])
                i += 1
            if i >= len(lines):
                raise GmshParseError(f"unterminated section {name}")
            sections[name] = body
        i += 1

    if "MeshFormat" not in sections or not sections["MeshFormat"]:
        raise GmshParseError("missing $MeshFormat section")
    version = sections["MeshFormat"][0].split()[0]
    if not version.startswith("2.2"):
        raise GmshParseError(f"unsupported MSH version {version} (need 2.2)")

    if "Nodes" not in sections or "Elements" not in sections:
        raise GmshParseError("missing $Nodes or $Elements section")

    node_lines = sections["Nodes"]
    n_nodes = int(node_lines[0])
    if len(node_lines) - 1 != n_nodes:
        raise GmshParseError("node count does not match $Nodes body")
    ids = np.empty(n_nodes, dtype=np.int64)
    coords = np.empty((n_nodes, 2), dtype=float)
    for k, ln in enumerate(node_lines[1:]):
        parts = ln.split()
        ids[k] = int(parts[0])
        coords[k] = (float(parts[1]), float(parts[2]))
    id_map = {int(i): k for k, i in enumerate(ids)}

    elem_lines = sections["Elements"]
    n_elems = int(elem_lines[0])
    if len(elem_lines) - 1 != n_elems:
        raise GmshParseError("element count does not match $Elements body")
    tris = []
    tagged = []
    for ln in elem_lines[1:]:
        parts = [int(p) for p in ln.split()]
        etype, ntags = parts[1], parts[2]
        tags = parts[3 : 3 + ntags]
        nodes = parts[3 + ntags :]
        if etype == 1:
            if not tags:
                raise GmshParseError("boundary line without a physical tag")
            tagged.append((id_map[nodes[0]], id_map[nodes[1]], tags[0]))
        elif etype == 2:
            tris.append([id_map[nodes[0]], id_map[nodes[1]], id_map[nodes[2]]])
        else:
            raise GmshParseError(f"unsupported element type {etype}")
    if not tris:
        raise GmshParseError("no triangles in file")
    return Mesh2D(coords, np.array(tris), tagged)


def write_gmsh(mesh, path):
    """Write a Mesh2D as MSH 2.2 ASCII (round-trips through read_gmsh)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write(f"$Nodes\n{mesh.num_vertices}\n")
        for k, (x, y) in enumerate(mesh.vertices):
            fh.write(f"{k + 1} {x!r} {y!r} 0\n")
        fh.write("$EndNodes\n")
        nb = len(mesh.boundary_tags)
        fh.write(f"$Elements\n{nb + mesh.num_cells}\n")
        eid = 1
        for (va, vb), tag in zip(mesh.boundary_vertex_pairs, mesh.boundary_tags):
            fh.write(f"{eid} 1 2 {tag} {tag} {va + 1} {vb + 1}\n")
            eid += 1
        for a, b, c in mesh.cells:
            fh.write(f"{eid} 2 2 0 0 {a + 1} {b + 1} {c + 1}\n")
            eid += 1
        fh.write("$EndElements\n")


# ---------------------------------------------------------------------------
# canonical plain-text dump
# ---------------------------------------------------------------------------


def write_mesh_text(mesh, path):
    """Plain-text dump with VERTICES / CELLS / BOUNDARY sections."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"VERTICES {mesh.num_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x!r} {y!r}\n")
        fh.write(f"CELLS {mesh.num_cells}\n")
        for a, b, c in mesh.cells:
            fh.write(f"{a} {b} {c}\n")
        fh.write(f"BOUNDARY {len(mesh.boundary_tags)}\n")
        for (va, vb), tag in zip(mesh.boundary_vertex_pairs, mesh.boundary_tags):
            fh.write(f"{va} {vb} {tag}\n")


def read_mesh_text(path):
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split()
    pos = 0

    def expect(word):
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != word:
            raise MeshError(f"expected {word} in mesh dump")
        pos += 1
        count = int(tokens[pos])
        pos += 1
        return count

    nv = expect("VERTICES")
    vertices = np.array(tokens[pos : pos + 2 * nv], dtype=float).reshape(nv, 2)
    pos += 2 * nv
    nc = expect("CELLS")
    cells = np.array(tokens[pos : pos + 3 * nc], dtype=np.int64).reshape(nc, 3)
    pos += 3 * nc
    nb = expect("BOUNDARY")
    bnd = np.array(tokens[pos : pos + 3 * nb], dtype=np.int64).reshape(nb, 3)
    return Mesh2D(vertices, cells, [tuple(row) for row in bnd])
