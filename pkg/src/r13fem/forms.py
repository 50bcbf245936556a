"""Local (element/edge) kernels of the mixed moment system.

The coupled bilinear form splits into sub-functionals: a (heat diagonal),
b (temperature/heat-flux coupling), c (heat/stress coupling), d (stress
diagonal), e (velocity/stress), f and h (inflow pressure couplings),
g (pressure gradient), plus the CIP jump penalties on theta, u and p and the
load functionals l1..l5.  All kernels are evaluated batched over cells or
edges; single-entity wrappers sit at the bottom for tests and inspection.

Stress handling: sigma is stored as the three independent components
(xx, xy, yy) of a symmetric 2x2 tensor.  Volume products involving sigma are
taken on the trace-free 3x3 lift, so the implied zz = -(xx + yy) row is
included automatically; rank-3 gradient products reduce to a constant 6x6
Gram matrix of lifted basis gradients, precomputed from the tensor operators.
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensorops
from .fespace import COMPONENTS, triangle_quadrature, edge_quadrature

__all__ = [
    "PhysicalParams",
    "StabilizationParams",
    "BoundaryData",
    "SourceData",
    "LocalForms",
    "boundary_projection",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Knudsen number and modified accommodation factor (per-tag overrides
    live on the BoundaryData)."""

    kn: float
    chi_tilde: float = 1.0

    def check(self):
        errors = []
        if not self.kn > 0:
            errors.append(f"kn must be positive, got {self.kn}")
        if not self.chi_tilde > 0:
            errors.append(f"chi_tilde must be positive, got {self.chi_tilde}")
        return errors


@dataclass(frozen=True)
class StabilizationParams:
    delta_theta: float = 1.0
    delta_u: float = 1.0
    delta_p: float = 0.01
    enabled: bool = True

    def check(self):
        errors = []
        if self.enabled:
            for name, v in (
                ("delta_theta", self.delta_theta),
                ("delta_u", self.delta_u),
                ("delta_p", self.delta_p),
            ):
                if not v > 0:
                    errors.append(f"{name} must be positive when CIP is enabled")
        return errors


@dataclass(frozen=True)
class BoundaryData:
    """Wall/inflow data on one boundary tag.

    Each entry is a number, a parsed expression or a callable of (x, y);
    epsilon_w = 0 is an impermeable wall, large values prescribe the total
    pressure p + sigma_nn.  chi_tilde = None inherits the global value.
    """

    theta_w: object = 0.0
    u_t_w: object = 0.0
    u_n_w: object = 0.0
    p_w: object = 0.0
    epsilon_w: float = 0.0
    chi_tilde: object = None

    def check(self, tag):
        errors = []
        if self.epsilon_w < 0:
            errors.append(f"bc[{tag}]: epsilon_w must be >= 0")
        if self.chi_tilde is not None and not self.chi_tilde > 0:
            errors.append(f"bc[{tag}]: chi_tilde must be positive")
        return errors


@dataclass(frozen=True)
class SourceData:
    """Volume sources: mass source m_dot, energy source r, body force b."""

    m_dot: object = 0.0
    r: object = 0.0
    b: tuple = (0.0, 0.0)

    def is_zero(self):
        return all(
            isinstance(v, (int, float)) and v == 0.0
            for v in (self.m_dot, self.r, self.b[0], self.b[1])
        )


def _values_at(data, x, y):
    """Evaluate a number / expression / callable at point arrays."""
    if callable(data):
        out = np.asarray(data(x, y), dtype=float)
        return np.broadcast_to(out, np.shape(x)).copy()
    return np.full(np.shape(x), float(data))


def boundary_projection(values, frame):
    """Normal/tangential components of a vector or symmetric 2x2 tensor.

    Vectors map to (v_n, v_t); tensors to (t_nn, t_nt, t_tt).
    """
    v = np.asarray(values, dtype=float)
    n, t = frame.n, frame.t
    if v.shape == (2,):
        return float(v @ n), float(v @ t)
    if v.shape == (2, 2):
        return float(n @ v @ n), float(n @ v @ t), float(t @ v @ t)
    raise ValueError(f"cannot project shape {v.shape}")


# symmetric 2x2 basis tensors of the (xx, xy, yy) stress components; the xy
# slot carries both off-diagonal entries
_SIG_BASIS = np.array(
    [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
    ]
)

# trace-free 3x3 lifts of the stress basis tensors
_SIG_LIFT = np.array([tensorops.gen3dTF2(m) for m in _SIG_BASIS])


def _gradient_gram():
    """Gram matrix of STF-projected lifted basis gradients.

    q[m, k, n, l] contracts stf(grad3d of component-m lift, derivative slot k)
    with the (n, l) counterpart; the stress gradient term of the d-functional
    is then a weighted double contraction with the 2D gradients.
    """
    q = np.zeros((3, 2, 3, 2))
    stf = {}
    zero = np.zeros((3, 3))
    for m in range(3):
        for k in range(2):
            dd = [zero, zero]
            dd[k] = _SIG_LIFT[m]
            stf[m, k] = tensorops.stf3d3(tensorops.grad3d_of_2(dd[0], dd[1]))
    for m in range(3):
        for k in range(2):
            for n in range(3):
                for l in range(2):
                    q[m, k, n, l] = tensorops.inner3(stf[m, k], stf[n, l])
    return q


_GRAD_GRAM = _gradient_gram()
_LIFT_GRAM = np.array(
    [[tensorops.inner2(a, b) for b in _SIG_LIFT] for a in _SIG_LIFT]
)


def _sigma_frame_tables(n, t):
    """Projection coefficients of the stress components onto an edge frame.

    For unit vectors n, t (arrays (..., 2)) returns ann, ant, att with
    sigma_nn = sum_m ann[m] * coeff_m and so on.
    """
    nx, ny = n[..., 0], n[..., 1]
    tx, ty = t[..., 0], t[..., 1]
    ann = np.stack([nx * nx, 2.0 * nx * ny, ny * ny], axis=-1)
    ant = np.stack([nx * tx, nx * ty + ny * tx, ny * ty], axis=-1)
    att = np.stack([tx * tx, 2.0 * tx * ty, ty * ty], axis=-1)
    return ann, ant, att


class LocalForms:
    """Precomputed discretization context with batched local kernels.

    Kernel index convention: local matrices are [test, trial]; vector fields
    use component-major local indices (component * nloc + scalar dof), and
    the kernel orientations match their natural block slots.
    """

    def __init__(
        self,
        mesh,
        space,
        params,
        stab,
        bcs,
        sources=None,
        cell_quad_degree=6,
        edge_quad_degree=6,
    ):
        self.mesh = mesh
        self.space = space
        self.params = params
        self.stab = stab
        self.bcs = dict(bcs)
        self.sources = sources if sources is not None else SourceData()

        missing = [t for t in mesh.boundary_tag_values if t not in self.bcs]
        if missing:
            raise ValueError(f"no boundary data for mesh tags {missing}")

        self.qr = triangle_quadrature(cell_quad_degree)
        self.eqr = edge_quadrature(edge_quad_degree)
        self._setup_cells()
        self._setup_boundary()
        self._setup_interior()
        self._setup_sources()

    # -- precomputation --------------------------------------------------

    def _setup_cells(self):
        mesh, space = self.mesh, self.space
        tri = mesh.vertices[mesh.cells]
        jac = np.stack([tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]], axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv_t = np.empty_like(jac)
        inv_t[:, 0, 0] = jac[:, 1, 1]
        inv_t[:, 0, 1] = -jac[:, 1, 0]
        inv_t[:, 1, 0] = -jac[:, 0, 1]
        inv_t[:, 1, 1] = jac[:, 0, 0]
        inv_t /= det[:, None, None]
        self.jac = jac
        self.det = det
        self.inv_jac_t = inv_t
        self.h_cell = mesh.cell_diameters()

        self.basis_values = {}
        self.basis_ref_grads = {}
        self.grads = {}
        for d, elem in space.elements.items():
            self.basis_values[d] = elem.eval(self.qr.points)
            self.basis_ref_grads[d] = elem.grad(self.qr.points)
            self.grads[d] = np.einsum(
                "cij,qlj->cqli", inv_t, self.basis_ref_grads[d]
            )

    def _edge_geometry(self, pairs):
        p0 = self.mesh.vertices[pairs[:, 0]]
        p1 = self.mesh.vertices[pairs[:, 1]]
        d = p1 - p0
        length = np.hypot(d[:, 0], d[:, 1])
        n = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]
        t = np.stack([-n[:, 1], n[:, 0]], axis=1)
        xq = p0[:, None, :] + self.eqr.points[None, :, None] * d[:, None, :]
        return length, n, t, xq

    def _ref_coords(self, cells, xq):
        """Reference coordinates of physical points inside given cells."""
        a = self.mesh.vertices[self.mesh.cells[cells, 0]]
        inv_jac = np.swapaxes(self.inv_jac_t[cells], 1, 2)
        return np.einsum("eij,eqj->eqi", inv_jac, xq - a[:, None, :])

    def _setup_boundary(self):
        mesh, space = self.mesh, self.space
        pairs = mesh.boundary_vertex_pairs
        self.n_bedges = len(pairs)
        if self.n_bedges == 0:
            return
        length, n, t, xq = self._edge_geometry(pairs)
        self.b_len, self.b_n, self.b_t, self.b_xq = length, n, t, xq
        self.b_wlen = self.eqr.weights[None, :] * length[:, None]
        ref = self._ref_coords(mesh.boundary_cells, xq)
        self.b_trace = {
            d: elem.eval(ref.reshape(-1, 2)).reshape(
                self.n_bedges, len(self.eqr.points), elem.nloc
            )
            for d, elem in space.elements.items()
        }
        self.b_ann, self.b_ant, self.b_att = _sigma_frame_tables(n, t)

        tags = mesh.boundary_tags
        chi = np.empty(self.n_bedges)
        eps = np.empty(self.n_bedges)
        nqe = len(self.eqr.points)
        self.b_theta_w = np.empty((self.n_bedges, nqe))
        self.b_u_t_w = np.empty((self.n_bedges, nqe))
        self.b_u_n_w = np.empty((self.n_bedges, nqe))
        self.b_p_w = np.empty((self.n_bedges, nqe))
        for tag in mesh.boundary_tag_values:
            bc = self.bcs[tag]
            sel = tags == tag
            chi[sel] = self.params.chi_tilde if bc.chi_tilde is None else bc.chi_tilde
            eps[sel] = float(bc.epsilon_w)
            x, y = xq[sel, :, 0], xq[sel, :, 1]
            self.b_theta_w[sel] = _values_at(bc.theta_w, x, y)
            self.b_u_t_w[sel] = _values_at(bc.u_t_w, x, y)
            self.b_u_n_w[sel] = _values_at(bc.u_n_w, x, y)
            self.b_p_w[sel] = _values_at(bc.p_w, x, y)
        self.b_chi = chi
        self.b_eps = eps

    def _setup_interior(self):
        mesh, space = self.mesh, self.space
        pairs = mesh.interior_vertex_pairs
        self.n_iedges = len(pairs)
        if self.n_iedges == 0:
            return
        length, n, _, xq = self._edge_geometry(pairs)
        self.i_len, self.i_n = length, n
        self.i_wlen = self.eqr.weights[None, :] * length[:, None]
        self.i_h_avg = 0.5 * (
            self.h_cell[mesh.interior_left] + self.h_cell[mesh.interior_right]
        )
        d = space.degree_low
        elem = space.elements[d]
        nqe = len(self.eqr.points)
        jumps = np.empty((self.n_iedges, nqe, 2 * elem.nloc))
        for side, cells in (
            (0, mesh.interior_left),
            (1, mesh.interior_right),
        ):
            ref = self._ref_coords(cells, xq)
            gref = elem.grad(ref.reshape(-1, 2)).reshape(
                self.n_iedges, nqe, elem.nloc, 2
            )
            gphys = np.einsum("eij,eqlj->eqli", self.inv_jac_t[cells], gref)
            sign = 1.0 if side == 0 else -1.0
            jumps[:, :, side * elem.nloc : (side + 1) * elem.nloc] = sign * np.einsum(
                "eqli,ei->eql", gphys, n
            )
        # normal-gradient traces of the low-degree basis: left dofs carry
        # +grad.n+, right dofs -grad.n+ so a scatter-add forms the jump
        self.i_jump_low = jumps

    def _setup_sources(self):
        src = self.sources
        self.has_sources = not src.is_zero()
        if not self.has_sources:
            return
        tri = self.mesh.vertices[self.mesh.cells]
        # physical quadrature points: x = a + J (xi, eta)
        xq = tri[:, None, 0, :] + np.einsum(
            "cij,qj->cqi", self.jac, self.qr.points
        )
        x, y = xq[..., 0], xq[..., 1]
        self.src_m_dot = _values_at(src.m_dot, x, y)
        self.src_r = _values_at(src.r, x, y)
        self.src_b = np.stack(
            [_values_at(src.b[0], x, y), _values_at(src.b[1], x, y)], axis=2
        )

    # -- helpers ----------------------------------------------------------

    def _cells(self, cells):
        return np.arange(self.mesh.num_cells) if cells is None else np.atleast_1d(cells)

    def _bedges(self, edges):
        return np.arange(self.n_bedges) if edges is None else np.atleast_1d(edges)

    def _iedges(self, edges):
        return np.arange(self.n_iedges) if edges is None else np.atleast_1d(edges)

    def _mass(self, cells, deg_row, deg_col):
        nr = self.basis_values[deg_row]
        ncol = self.basis_values[deg_col]
        return np.einsum(
            "q,c,qa,qb->cab", self.qr.weights, self.det[cells], nr, ncol
        )

    def _grad_outer(self, cells, deg):
        """t[c, a, k, b, l] = int grad_a[k] grad_b[l] over each cell."""
        g = self.grads[deg][cells]
        return np.einsum("q,c,cqak,cqbl->cakbl", self.qr.weights, self.det[cells], g, g)

    # -- volume kernels ----------------------------------------------------

    def a_volume(self, cells=None):
        """Heat-flux diagonal block (symmetric gradient, divergence, mass)."""
        cells = self._cells(cells)
        kn = self.params.kn
        dh = self.space.degree_high
        nl = self.space.nloc(dh)
        t = self._grad_outer(cells, dh)
        m = self._mass(cells, dh, dh)
        s = np.einsum("cakbk->cab", t)
        out = np.zeros((len(cells), 2, nl, 2, nl))
        c_sym = (24.0 / 25.0) * kn * 0.5
        c_div = (12.0 / 25.0) * kn
        c_mass = (4.0 / 15.0) / kn
        for ci in range(2):
            for cj in range(2):
                block = c_sym * t[:, :, cj, :, ci] + c_div * t[:, :, ci, :, cj]
                if ci == cj:
                    block = block + c_sym * s + c_mass * m
                out[:, ci, :, cj, :] = block
        return out.reshape(len(cells), 2 * nl, 2 * nl)

    def b_volume(self, cells=None):
        """Temperature/heat-flux kernel: rows theta (test), cols s."""
        cells = self._cells(cells)
        dh, dl = self.space.degree_high, self.space.degree_low
        gh = self.grads[dh][cells]
        out = np.einsum(
            "q,c,qi,cqak->cika",
            self.qr.weights,
            self.det[cells],
            self.basis_values[dl],
            gh,
        )
        m = len(cells)
        return out.reshape(m, self.space.nloc(dl), 2 * self.space.nloc(dh))

    def c_volume(self, cells=None):
        """Heat/stress coupling volume part: rows sigma (test), cols s."""
        cells = self._cells(cells)
        dh = self.space.degree_high
        nl = self.space.nloc(dh)
        gh = self.grads[dh][cells]
        tu = np.einsum(
            "q,c,qb,cqak->cbak",
            self.qr.weights,
            self.det[cells],
            self.basis_values[dh],
            gh,
        )
        out = np.zeros((len(cells), 3, nl, 2, nl))
        for m in range(3):
            out[:, m] = 0.4 * np.einsum("cbak,dk->cbda", tu, _SIG_BASIS[m])
        return out.reshape(len(cells), 3 * nl, 2 * nl)

    def d_volume(self, cells=None):
        """Stress diagonal block: lifted STF gradient product plus lifted mass."""
        cells = self._cells(cells)
        kn = self.params.kn
        dh = self.space.degree_high
        nl = self.space.nloc(dh)
        t = self._grad_outer(cells, dh)
        m = self._mass(cells, dh, dh)
        out = np.zeros((len(cells), 3, nl, 3, nl))
        for mi in range(3):
            for mj in range(3):
                out[:, mi, :, mj, :] = kn * np.einsum(
                    "cakbl,kl->cab", t, _GRAD_GRAM[mi, :, mj, :]
                ) + (0.5 / kn) * _LIFT_GRAM[mi, mj] * m
        return out.reshape(len(cells), 3 * nl, 3 * nl)

    def e_volume(self, cells=None):
        """Velocity/stress kernel: rows u (test), cols sigma."""
        cells = self._cells(cells)
        dh, dl = self.space.degree_high, self.space.degree_low
        nlh, nll = self.space.nloc(dh), self.space.nloc(dl)
        gh = self.grads[dh][cells]
        tu = np.einsum(
            "q,c,qb,cqak->cbak",
            self.qr.weights,
            self.det[cells],
            self.basis_values[dl],
            gh,
        )
        out = np.zeros((len(cells), 2, nll, 3, nlh))
        for m in range(3):
            out[:, :, :, m, :] = np.einsum("cbak,dk->cdba", tu, _SIG_BASIS[m])
        return out.reshape(len(cells), 2 * nll, 3 * nlh)

    def g_volume(self, cells=None):
        """Pressure-gradient kernel: rows p (test), cols u."""
        cells = self._cells(cells)
        dl = self.space.degree_low
        nll = self.space.nloc(dl)
        gl = self.grads[dl][cells]
        gn = np.einsum(
            "q,c,cqik,qb->cikb",
            self.qr.weights,
            self.det[cells],
            gl,
            self.basis_values[dl],
        )
        return gn.reshape(len(cells), nll, 2 * nll)

    # -- boundary kernels ---------------------------------------------------

    def _edge_mass(self, edges, deg_row, deg_col):
        tr = self.b_trace[deg_row][edges]
        tc = self.b_trace[deg_col][edges]
        return np.einsum("eq,eqa,eqb->eab", self.b_wlen[edges], tr, tc)

    def a_boundary(self, edges=None):
        """Heat-flux boundary terms (normal and tangential accommodation)."""
        edges = self._bedges(edges)
        dh = self.space.degree_high
        nl = self.space.nloc(dh)
        em = self._edge_mass(edges, dh, dh)
        chi = self.b_chi[edges]
        n, t = self.b_n[edges], self.b_t[edges]
        cn = (0.5 / chi)[:, None, None] * np.einsum("ei,ej->eij", n, n) + (
            (12.0 / 25.0) * chi
        )[:, None, None] * np.einsum("ei,ej->eij", t, t)
        out = np.einsum("eij,eab->eiajb", cn, em)
        return out.reshape(len(edges), 2 * nl, 2 * nl)

    def c_boundary(self, edges=None):
        """Heat/stress boundary coupling: rows sigma (test), cols s."""
        edges = self._bedges(edges)
        dh = self.space.degree_high
        nl = self.space.nloc(dh)
        em = self._edge_mass(edges, dh, dh)
        coef = (3.0 / 20.0) * np.einsum(
            "em,ec->emc", self.b_ann[edges], self.b_n[edges]
        ) + 0.2 * np.einsum("em,ec->emc", self.b_ant[edges], self.b_t[edges])
        out = -np.einsum("emc,eba->embca", coef, em)
        return out.reshape(len(edges), 3 * nl, 2 * nl)

    def d_boundary(self, edges=None):
        """Stress boundary terms incl. the inflow-model sigma_nn penalty."""
        edges = self._bedges(edges)
        dh = self.space.degree_high
        nl = self.space.nloc(dh)
        em = self._edge_mass(edges, dh, dh)
        chi, eps = self.b_chi[edges], self.b_eps[edges]
        ann, ant, att = self.b_ann[edges], self.b_ant[edges], self.b_att[edges]
        combo = att + 0.5 * ann
        coef = (
            ((9.0 / 8.0) * chi + eps * chi)[:, None, None]
            * np.einsum("em,en->emn", ann, ann)
            + chi[:, None, None] * np.einsum("em,en->emn", combo, combo)
            + (1.0 / chi)[:, None, None] * np.einsum("em,en->emn", ant, ant)
        )
        out = np.einsum("emn,eab->emanb", coef, em)
        return out.reshape(len(edges), 3 * nl, 3 * nl)

    def f_boundary(self, edges=None):
        """Inflow pressure/stress coupling: rows p (test), cols sigma."""
        edges = self._bedges(edges)
        dh, dl = self.space.degree_high, self.space.degree_low
        em = self._edge_mass(edges, dl, dh)
        coef = (self.b_eps[edges] * self.b_chi[edges])[:, None] * self.b_ann[edges]
        out = np.einsum("em,eia->eima", coef, em)
        return out.reshape(len(edges), self.space.nloc(dl), 3 * self.space.nloc(dh))

    def h_boundary(self, edges=None):
        """Inflow pressure mass term."""
        edges = self._bedges(edges)
        dl = self.space.degree_low
        em = self._edge_mass(edges, dl, dl)
        return (self.b_eps[edges] * self.b_chi[edges])[:, None, None] * em

    # -- CIP stabilization ---------------------------------------------------

    def cip_kernels(self, edges=None):
        """Jump-penalty matrices on interior edges for theta, u and p.

        Returns (k_theta, k_u_component, k_p), each (m, 2*nloc, 2*nloc) over
        the concatenated (left cell, right cell) scalar dofs; shared dofs
        appear on both sides and sum correctly under scatter-add.  The
        u-kernel applies to each velocity component separately.
        """
        edges = self._iedges(edges)
        if not self.stab.enabled or self.n_iedges == 0:
            nl2 = 2 * self.space.nloc(self.space.degree_low)
            z = np.zeros((len(edges), nl2, nl2))
            return z, z, z
        jumps = self.i_jump_low[edges]
        wlen = self.i_wlen[edges]
        base = np.einsum("eq,eqa,eqb->eab", wlen, jumps, jumps)
        h = self.i_h_avg[edges]
        k_theta = self.stab.delta_theta * h[:, None, None] ** 3 * base
        k_u = self.stab.delta_u * h[:, None, None] ** 3 * base
        k_p = self.stab.delta_p * h[:, None, None] * base
        return k_theta, k_u, k_p

    def cip_union_dofs(self, component, edges=None):
        """Concatenated (left, right) global dofs of one component on edges."""
        edges = self._iedges(edges)
        left = self.space.component_cell_dofs(
            component, self.mesh.interior_left[edges]
        )
        right = self.space.component_cell_dofs(
            component, self.mesh.interior_right[edges]
        )
        return np.concatenate([left, right], axis=1)

    # -- load functionals -----------------------------------------------------

    def load_cell(self, cells=None):
        """Volume parts of the loads: (l2 theta, l4 u, l5 p) per cell."""
        cells = self._cells(cells)
        dl = self.space.degree_low
        nll = self.space.nloc(dl)
        m = len(cells)
        if not self.has_sources:
            return (
                np.zeros((m, nll)),
                np.zeros((m, 2 * nll)),
                np.zeros((m, nll)),
            )
        nlo = self.basis_values[dl]
        wdet = self.qr.weights[None, :] * self.det[cells][:, None]
        l2 = np.einsum(
            "cq,cq,qi->ci", wdet, self.src_r[cells] - self.src_m_dot[cells], nlo
        )
        l4 = np.einsum("cq,cqd,qi->cdi", wdet, self.src_b[cells], nlo).reshape(
            m, 2 * nll
        )
        l5 = np.einsum("cq,cq,qi->ci", wdet, self.src_m_dot[cells], nlo)
        return l2, l4, l5

    def load_boundary(self, edges=None):
        """Boundary parts of the loads: (l1 s, l3 sigma, l5 p) per edge."""
        edges = self._bedges(edges)
        dh, dl = self.space.degree_high, self.space.degree_low
        nlh, nll = self.space.nloc(dh), self.space.nloc(dl)
        wlen = self.b_wlen[edges]
        th = self.b_trace[dh][edges]
        tl = self.b_trace[dl][edges]
        m = len(edges)

        v_theta = np.einsum("eq,eq,eqa->ea", wlen, self.b_theta_w[edges], th)
        l1 = -np.einsum("ec,ea->eca", self.b_n[edges], v_theta).reshape(m, 2 * nlh)

        eff = self.b_u_n_w[edges] - (self.b_eps[edges] * self.b_chi[edges])[
            :, None
        ] * self.b_p_w[edges]
        v_t = np.einsum("eq,eq,eqa->ea", wlen, self.b_u_t_w[edges], th)
        v_n = np.einsum("eq,eq,eqa->ea", wlen, eff, th)
        l3 = -(
            np.einsum("em,ea->ema", self.b_ant[edges], v_t)
            + np.einsum("em,ea->ema", self.b_ann[edges], v_n)
        ).reshape(m, 3 * nlh)

        l5 = -np.einsum("eq,eq,eqi->ei", wlen, eff, tl)
        return l1, l3, l5

    # -- single-entity wrappers (contract surface, used by the tests) ---------

    def local_a(self, cell):
        return self.a_volume([cell])[0]

    def local_b(self, cell):
        return self.b_volume([cell])[0]

    def local_c(self, cell):
        return self.c_volume([cell])[0]

    def local_d(self, cell):
        return self.d_volume([cell])[0]

    def local_e(self, cell):
        return self.e_volume([cell])[0]

    def local_g(self, cell):
        return self.g_volume([cell])[0]

    def local_a_edge(self, bedge):
        return self.a_boundary([bedge])[0]

    def local_c_edge(self, bedge):
        return self.c_boundary([bedge])[0]

    def local_d_edge(self, bedge):
        return self.d_boundary([bedge])[0]

    def local_f(self, bedge):
        return self.f_boundary([bedge])[0]

    def local_h(self, bedge):
        return self.h_boundary([bedge])[0]

    def local_cip(self, iedge):
        kt, ku, kp = self.cip_kernels([iedge])
        return kt[0], ku[0], kp[0]

    def local_rhs(self, cell=None, bedge=None):
        """Load contributions of one cell and/or one boundary edge."""
        out = {}
        if cell is not None:
            l2, l4, l5 = self.load_cell([cell])
            out.update(l2=l2[0], l4=l4[0], l5_volume=l5[0])
        if bedge is not None:
            l1, l3, l5b = self.load_boundary([bedge])
            out.update(l1=l1[0], l3=l3[0], l5_boundary=l5b[0])
        return out


# ---------------------------------------------------------------------------
# verification functionals (triple norm, energy split)
# ---------------------------------------------------------------------------


def _component_coeffs(space, u):
    """Split a global coefficient vector by component."""
    return {name: u[space.component_range(name)] for name in COMPONENTS}


def _field_at_cells(ctx, u, names, cells):
    """Values of scalar components at all cell quadrature points, (m, nq)."""
    space = ctx.space
    out = []
    for name in names:
        k = space.component_index(name)
        d = int(space.component_degrees[k])
        dofs = space.component_cell_dofs(k, cells)
        out.append(np.einsum("qa,ca->cq", ctx.basis_values[d], u[dofs]))
    return out


def _field_grads_at_cells(ctx, u, names, cells):
    out = []
    for name in names:
        k = ctx.space.component_index(name)
        d = int(ctx.space.component_degrees[k])
        dofs = ctx.space.component_cell_dofs(k, cells)
        out.append(np.einsum("cqak,ca->cqk", ctx.grads[d][cells], u[dofs]))
    return out


def _field_at_bedges(ctx, u, names, edges):
    out = []
    for name in names:
        k = ctx.space.component_index(name)
        d = int(ctx.space.component_degrees[k])
        dofs = ctx.space.component_cell_dofs(k, ctx.mesh.boundary_cells[edges])
        out.append(np.einsum("eqa,ea->eq", ctx.b_trace[d][edges], u[dofs]))
    return out


def stabilization_energy(ctx, u):
    """CIP energies (j_theta, j_u, j_p) of a coefficient vector."""
    if ctx.n_iedges == 0 or not ctx.stab.enabled:
        return 0.0, 0.0, 0.0
    edges = np.arange(ctx.n_iedges)
    jumps = ctx.i_jump_low
    wlen = ctx.i_wlen
    h = ctx.i_h_avg

    def jump_sq(component):
        dofs = ctx.cip_union_dofs(component, edges)
        j = np.einsum("eqa,ea->eq", jumps, u[dofs])
        return np.einsum("eq,eq->e", wlen, j * j)

    j_theta = float(ctx.stab.delta_theta * np.sum(h**3 * jump_sq("theta")))
    j_u = float(
        ctx.stab.delta_u * np.sum(h**3 * (jump_sq("ux") + jump_sq("uy")))
    )
    j_p = float(ctx.stab.delta_p * np.sum(h * jump_sq("p")))
    return j_theta, j_u, j_p


def energy_breakdown(ctx, u):
    """Term-by-term quadratic-form energies of a coefficient vector.

    Returns a dict with the heat diagonal energy, the stress/pressure
    diagonal energy in its total-pressure form, the three CIP energies and
    the triple norm (which uses the lifted Frobenius norm for the stress
    mass term with its 4/15 weight).  Everything is evaluated by direct
    quadrature of the discrete fields, independent of the assembled matrix.
    """
    mesh, space, kn = ctx.mesh, ctx.space, ctx.params.kn
    cells = np.arange(mesh.num_cells)
    wdet = ctx.qr.weights[None, :] * ctx.det[:, None]

    sx, sy = _field_at_cells(ctx, u, ("sx", "sy"), cells)
    gsx, gsy = _field_grads_at_cells(ctx, u, ("sx", "sy"), cells)
    div_s = gsx[..., 0] + gsy[..., 1]
    sym_sq = (
        gsx[..., 0] ** 2
        + gsy[..., 1] ** 2
        + 0.5 * (gsx[..., 1] + gsy[..., 0]) ** 2
    )
    norm_sym_grad_s = float(np.sum(wdet * sym_sq))
    norm_div_s = float(np.sum(wdet * div_s**2))
    norm_s = float(np.sum(wdet * (sx**2 + sy**2)))

    sig = _field_at_cells(ctx, u, ("sigmaxx", "sigmaxy", "sigmayy"), cells)
    gsig = _field_grads_at_cells(ctx, u, ("sigmaxx", "sigmaxy", "sigmayy"), cells)
    # lifted Frobenius norm: xx^2 + 2 xy^2 + yy^2 + (xx + yy)^2
    lifted_sq = sig[0] ** 2 + 2.0 * sig[1] ** 2 + sig[2] ** 2 + (sig[0] + sig[2]) ** 2
    norm_sigma_lift = float(np.sum(wdet * lifted_sq))
    # stf gradient norm via the lifted-gradient Gram matrix
    gmat = np.stack(gsig, axis=2)  # (c, q, 3, 2)
    stf_sq = np.einsum("cqmk,mknl,cqnl->cq", gmat, _GRAD_GRAM, gmat)
    norm_stf_grad_sigma = float(np.sum(wdet * stf_sq))

    terms = {
        "sym_grad_s": (24.0 / 25.0) * kn * norm_sym_grad_s,
        "div_s": (12.0 / 25.0) * kn * norm_div_s,
        "s_mass": (4.0 / 15.0) / kn * norm_s,
        "stf_grad_sigma": kn * norm_stf_grad_sigma,
        "sigma_mass_half": (0.5 / kn) * norm_sigma_lift,
        "sigma_mass_415": (4.0 / 15.0) / kn * norm_sigma_lift,
    }

    if ctx.n_bedges:
        edges = np.arange(ctx.n_bedges)
        wlen = ctx.b_wlen
        chi, eps = ctx.b_chi, ctx.b_eps
        n, t = ctx.b_n, ctx.b_t
        bsx, bsy = _field_at_bedges(ctx, u, ("sx", "sy"), edges)
        s_n = n[:, 0:1] * bsx + n[:, 1:2] * bsy
        s_t = t[:, 0:1] * bsx + t[:, 1:2] * bsy
        bs = _field_at_bedges(
            ctx, u, ("sigmaxx", "sigmaxy", "sigmayy", "p"), edges
        )
        sig_nn = sum(ctx.b_ann[:, m : m + 1] * bs[m] for m in range(3))
        sig_nt = sum(ctx.b_ant[:, m : m + 1] * bs[m] for m in range(3))
        sig_tt = sum(ctx.b_att[:, m : m + 1] * bs[m] for m in range(3))
        p_b = bs[3]

        def bint(coef, f):
            return float(np.sum(coef[:, None] * wlen * f))

        terms["s_n"] = bint(0.5 / chi, s_n**2)
        terms["s_t"] = bint((12.0 / 25.0) * chi, s_t**2)
        terms["sigma_nn"] = bint((9.0 / 8.0) * chi, sig_nn**2)
        terms["sigma_combo"] = bint(chi, (sig_tt + 0.5 * sig_nn) ** 2)
        terms["sigma_nt"] = bint(1.0 / chi, sig_nt**2)
        terms["total_pressure"] = bint(eps * chi, (p_b + sig_nn) ** 2)
    else:
        for key in (
            "s_n",
            "s_t",
            "sigma_nn",
            "sigma_combo",
            "sigma_nt",
            "total_pressure",
        ):
            terms[key] = 0.0

    j_theta, j_u, j_p = stabilization_energy(ctx, u)
    terms["j_theta"], terms["j_u"], terms["j_p"] = j_theta, j_u, j_p

    shared = (
        terms["sym_grad_s"]
        + terms["div_s"]
        + terms["s_mass"]
        + terms["s_n"]
        + terms["s_t"]
        + terms["stf_grad_sigma"]
        + terms["sigma_nn"]
        + terms["sigma_combo"]
        + terms["sigma_nt"]
        + terms["total_pressure"]
        + j_theta
        + j_u
        + j_p
    )
    terms["a_energy"] = (
        terms["sym_grad_s"]
        + terms["div_s"]
        + terms["s_mass"]
        + terms["s_n"]
        + terms["s_t"]
    )
    terms["dbar_energy"] = (
        terms["stf_grad_sigma"]
        + terms["sigma_mass_half"]
        + terms["sigma_nn"]
        + terms["sigma_combo"]
        + terms["sigma_nt"]
        + terms["total_pressure"]
    )
    terms["quadratic_form"] = terms["a_energy"] + terms["dbar_energy"] + j_theta + j_u + j_p
    terms["triple_norm_sq"] = shared + terms["sigma_mass_415"]
    return terms


def triple_norm_squared(ctx, u):
    """Stability norm of a coefficient vector (lifted Frobenius convention)."""
    return energy_breakdown(ctx, u)["triple_norm_sq"]
