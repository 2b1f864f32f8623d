"""Sparse assembly of the interior penalty bilinear forms.

The discrete problem is: find w_h with

    iota^2 a_h(w_h, v) + b_h(w_h, v) = (f, v)   for all v in the space,

where, summing over triangles K and over ALL edges e (boundary edges use the
single trace as both jump and average, which enforces the remaining boundary
conditions weakly, Nitsche style):

    a_h(w, v) = sum_K (grad^3 w, grad^3 v)_K
              - sum_e ({{d_nnn w}}, [[d_nn v]])_e - sum_e ([[d_nn w]], {{d_nnn v}})_e
              - 2 sum_e ({{d_nnt w}}, [[d_nt v]])_e - 2 sum_e ([[d_nt w]], {{d_nnt v}})_e
              + eta sum_e h_e^-1 ([[d_nn w]], [[d_nn v]])_e
              + eta sum_e h_e^-3 ([[d_n w]], [[d_n v]])_e

    b_h(w, v) = sum_K (grad^2 w, grad^2 v)_K
              - sum_e ({{d_nn w}}, [[d_n v]])_e - sum_e ([[d_n w]], {{d_nn v}})_e
              + eta sum_e h_e^-1 ([[d_n w]], [[d_n v]])_e

Jumps/averages take the same edge-fixed directional derivative from both
sides: [[g]] = g|plus - g|minus, {{g}} = (g|plus + g|minus)/2.

Both forms are affine in eta, so assembly returns four matrices (consistency
core and unit-penalty part of each form); any (iota, eta) combination is a
cheap sparse linear combination. Global DoF numbering: vertex i owns
(3i, 3i+1, 3i+2) = (value, d/dx, d/dy); triangle t owns 3V + t (barycenter
value). Clamped conditions eliminate every DoF of boundary vertices.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .element import (
    HESS_MULT,
    THIRD_MULT,
    Bases,
    build_bases,
    evaluate_bases,
    second_weights,
    third_weights,
)
from .mesh import Mesh
from .quadrature import edge_rule, map_to_triangle, triangle_rule

_EDGE_CHUNK = 4096
_TRI_CHUNK = 8192


class DofMap:
    """Global degree-of-freedom numbering and boundary elimination."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        V = mesh.num_vertices
        T = mesh.num_triangles
        self.n_dofs = 3 * V + T
        tri = mesh.triangles
        cell = np.empty((T, 10), dtype=np.int64)
        cell[:, 0:3] = 3 * tri
        cell[:, 3:9:2] = 3 * tri + 1
        cell[:, 4:9:2] = 3 * tri + 2
        cell[:, 9] = 3 * V + np.arange(T)
        self.cell_dofs = cell

        constrained = np.zeros(self.n_dofs, dtype=bool)
        bnd = np.flatnonzero(mesh.boundary_vertex)
        for off in range(3):
            constrained[3 * bnd + off] = True
        self.free = np.flatnonzero(~constrained)
        self.n_free = self.free.size
        self.full_to_free = np.full(self.n_dofs, -1, dtype=np.int64)
        self.full_to_free[self.free] = np.arange(self.n_free)

    def triangle_dofs(self, t: int) -> np.ndarray:
        return self.cell_dofs[t]

    def scatter(self, free_values: np.ndarray) -> np.ndarray:
        """Free-DoF vector -> full vector with zeros on constrained DoFs."""
        full = np.zeros(self.n_dofs)
        full[self.free] = free_values
        return full


@dataclass
class FormParts:
    """eta-independent pieces of both forms on the full DoF set.

    a = a_core + eta * a_pen and b = b_core + eta * b_pen.
    """

    a_core: sp.csr_matrix
    a_pen: sp.csr_matrix
    b_core: sp.csr_matrix
    b_pen: sp.csr_matrix

    def combine(self, iota: float, eta: float) -> sp.csr_matrix:
        s = iota * iota
        return (
            s * self.a_core
            + (s * eta) * self.a_pen
            + self.b_core
            + eta * self.b_pen
        ).tocsr()


@dataclass
class AssembledSystem:
    """Reduced linear system S x = F on the free DoFs."""

    S: sp.csr_matrix
    F: np.ndarray
    iota: float
    eta: float
    dofmap: DofMap


def _mesh_bases(mesh: Mesh) -> Bases:
    return build_bases(mesh.vertices[mesh.triangles])


def _volume_blocks(mesh, bases, degree):
    """Per-triangle 10x10 blocks of both volume terms (chunked)."""
    rule = triangle_rule(degree)
    T = mesh.num_triangles
    Aa = np.empty((T, 10, 10))
    Ab = np.empty((T, 10, 10))
    corners = mesh.vertices[mesh.triangles]
    for lo in range(0, T, _TRI_CHUNK):
        sel = slice(lo, min(lo + _TRI_CHUNK, T))
        sub = Bases(bases.coeff[sel], bases.center[sel], bases.scale[sel])
        pts = map_to_triangle(corners[sel], rule.points)
        tabs = evaluate_bases(sub, pts, order=3)
        w = 2.0 * mesh.tri_area[sel]
        Ab[sel] = np.einsum(
            "t,q,c,tqci,tqcj->tij",
            w, rule.weights, HESS_MULT, tabs["hess"], tabs["hess"],
            optimize=True,
        )
        Aa[sel] = np.einsum(
            "t,q,c,tqci,tqcj->tij",
            w, rule.weights, THIRD_MULT, tabs["third"], tabs["third"],
            optimize=True,
        )
    return Aa, Ab


def _edge_side_rows(mesh, bases, edges, pts, side, order=3):
    """Directional derivative rows of one side's shape functions.

    Returns dict of (E, P, 10) arrays keyed by "n", "nn", "nt", "nnn", "nnt"
    (keys up to `order`).
    """
    tri = side
    sub = Bases(bases.coeff[tri], bases.center[tri], bases.scale[tri])
    tabs = evaluate_bases(sub, pts, order=order)
    n = mesh.edge_normal[edges]
    t = mesh.edge_tangent[edges]
    rows = {"n": np.einsum("ea,epaj->epj", n, tabs["grad"])}
    w_nn = second_weights(n, n)
    w_nt = second_weights(n, t)
    rows["nn"] = np.einsum("ec,epcj->epj", w_nn, tabs["hess"])
    rows["nt"] = np.einsum("ec,epcj->epj", w_nt, tabs["hess"])
    if order >= 3:
        w3n = third_weights(n, n, n)
        w3t = third_weights(n, n, t)
        rows["nnn"] = np.einsum("ec,epcj->epj", w3n, tabs["third"])
        rows["nnt"] = np.einsum("ec,epcj->epj", w3t, tabs["third"])
    return rows


def _edge_jump_average_rows(mesh, bases, edges, npoints, order=3):
    """Jump and average rows over a batch of edges.

    Interior edges produce 20-wide rows (plus DoFs then minus DoFs), boundary
    edges 10-wide rows with jump = average = trace.
    """
    rule = edge_rule(npoints)
    a = mesh.vertices[mesh.edge_vertices[edges, 0]]
    b = mesh.vertices[mesh.edge_vertices[edges, 1]]
    pts = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    plus = _edge_side_rows(mesh, bases, edges, pts, mesh.edge_plus[edges], order)
    interior = mesh.edge_minus[edges[0]] >= 0  # batches are homogeneous
    if not interior:
        return rule, plus, dict(plus)
    minus = _edge_side_rows(mesh, bases, edges, pts, mesh.edge_minus[edges], order)
    jump = {
        k: np.concatenate([plus[k], -minus[k]], axis=-1) for k in plus
    }
    avg = {
        k: 0.5 * np.concatenate([plus[k], minus[k]], axis=-1) for k in plus
    }
    return rule, jump, avg


def _edge_blocks(mesh, bases, edges, npoints):
    """Edge contributions to all four form parts for one batch of edges.

    Returns (dofs (E, m), blocks dict of (E, m, m)) with m = 20 interior /
    10 boundary. Penalty blocks carry no eta factor.
    """
    rule, jump, avg = _edge_jump_average_rows(mesh, bases, edges, npoints)
    h = mesh.edge_length[edges]
    w = rule.weights

    def pair(scale, U, V):
        return np.einsum("e,p,epi,epj->eij", scale, w, U, V, optimize=True)

    def sym(scale, U, V):
        M = pair(scale, U, V)
        return -(M + M.transpose(0, 2, 1))

    # edge integral = h_e * sum_p w_p (.); the h_e^-1 / h_e^-3 penalty weights
    # leave net factors 1 and h_e^-2
    ones = np.ones_like(h)
    a_core = sym(h, avg["nnn"], jump["nn"]) + 2.0 * sym(h, avg["nnt"], jump["nt"])
    a_pen = pair(ones, jump["nn"], jump["nn"]) + pair(
        1.0 / (h * h), jump["n"], jump["n"]
    )
    b_core = sym(h, avg["nn"], jump["n"])
    b_pen = pair(ones, jump["n"], jump["n"])

    dm_cell = _cell_dofs_for(mesh)
    plus_dofs = dm_cell[mesh.edge_plus[edges]]
    if jump["n"].shape[-1] == 20:
        minus_dofs = dm_cell[mesh.edge_minus[edges]]
        dofs = np.concatenate([plus_dofs, minus_dofs], axis=1)
    else:
        dofs = plus_dofs
    return dofs, {
        "a_core": a_core,
        "a_pen": a_pen,
        "b_core": b_core,
        "b_pen": b_pen,
    }


def _cell_dofs_for(mesh: Mesh) -> np.ndarray:
    # local helper mirroring DofMap.cell_dofs without requiring a DofMap
    tri = mesh.triangles
    V = mesh.num_vertices
    cell = np.empty((mesh.num_triangles, 10), dtype=np.int64)
    cell[:, 0:3] = 3 * tri
    cell[:, 3:9:2] = 3 * tri + 1
    cell[:, 4:9:2] = 3 * tri + 2
    cell[:, 9] = 3 * V + np.arange(mesh.num_triangles)
    return cell


def assemble_forms(
    mesh: Mesh,
    dofmap: DofMap,
    stiffness_degree: int = 4,
    edge_points: int = 4,
) -> FormParts:
    """Assemble the eta-independent pieces of a_h and b_h on all DoFs.

    The default rules are exact: volume integrands are products of per-element
    polynomial derivatives (degree <= 2), edge integrands are trace products
    of degree <= 4 along the edge (4 Gauss points integrate degree 7).
    """
    bases = _mesh_bases(mesh)
    Aa_vol, Ab_vol = _volume_blocks(mesh, bases, stiffness_degree)

    n = dofmap.n_dofs
    triplets = {k: [] for k in ("a_core", "a_pen", "b_core", "b_pen")}

    def block_indices(dofs):
        m = dofs.shape[1]
        ii = np.repeat(dofs, m, axis=1).ravel().astype(np.int32)
        jj = np.tile(dofs, (1, m)).ravel().astype(np.int32)
        return ii, jj

    ii, jj = block_indices(dofmap.cell_dofs)
    triplets["a_core"].append((ii, jj, Aa_vol.ravel()))
    triplets["b_core"].append((ii, jj, Ab_vol.ravel()))

    for group in (mesh.interior_edges, mesh.boundary_edges):
        for lo in range(0, group.size, _EDGE_CHUNK):
            batch = group[lo : lo + _EDGE_CHUNK]
            if batch.size == 0:
                continue
            dofs, blocks = _edge_blocks(mesh, bases, batch, edge_points)
            ii, jj = block_indices(dofs)
            for key, blk in blocks.items():
                triplets[key].append((ii, jj, blk.ravel()))

    mats = {}
    for key, parts in triplets.items():
        ii = np.concatenate([p[0] for p in parts])
        jj = np.concatenate([p[1] for p in parts])
        data = np.concatenate([p[2] for p in parts])
        mats[key] = sp.coo_matrix((data, (ii, jj)), shape=(n, n)).tocsr()
    return FormParts(**mats)


def assemble_load(
    mesh: Mesh, dofmap: DofMap, load, degree: int = 8
) -> np.ndarray:
    """Load vector (f, phi_i) over all DoFs. `load` needs a value(x, y) method."""
    rule = triangle_rule(degree)
    bases = _mesh_bases(mesh)
    F = np.zeros(dofmap.n_dofs)
    T = mesh.num_triangles
    corners = mesh.vertices[mesh.triangles]
    for lo in range(0, T, _TRI_CHUNK):
        sel = slice(lo, min(lo + _TRI_CHUNK, T))
        sub = Bases(bases.coeff[sel], bases.center[sel], bases.scale[sel])
        pts = map_to_triangle(corners[sel], rule.points)
        val = evaluate_bases(sub, pts, order=0)["value"]
        f = load.value(pts[..., 0], pts[..., 1])
        local = np.einsum(
            "t,q,tq,tqj->tj",
            2.0 * mesh.tri_area[sel], rule.weights, f, val,
            optimize=True,
        )
        np.add.at(F, dofmap.cell_dofs[sel], local)
    return F


def build_system(
    parts: FormParts,
    load_full: np.ndarray,
    iota: float,
    eta: float,
    dofmap: DofMap,
) -> AssembledSystem:
    """Combine form parts at (iota, eta) and eliminate constrained DoFs."""
    S_full = parts.combine(iota, eta)
    free = dofmap.free
    S = S_full[free][:, free].tocsr()
    return AssembledSystem(S=S, F=load_full[free], iota=iota, eta=eta, dofmap=dofmap)


def assemble(
    mesh: Mesh,
    dofmap: DofMap,
    load,
    iota: float,
    eta: float,
    stiffness_degree: int = 4,
    load_degree: int = 8,
    edge_points: int = 4,
) -> AssembledSystem:
    """One-shot assembly of the reduced system for a single (iota, eta)."""
    parts = assemble_forms(mesh, dofmap, stiffness_degree, edge_points)
    F = assemble_load(mesh, dofmap, load, load_degree)
    return build_system(parts, F, iota, eta, dofmap)


def local_volume_matrices(vertices, degree: int = 4):
    """Volume blocks of one triangle: (third-derivative term, Hessian term)."""
    vertices = np.asarray(vertices, dtype=float)
    bases = build_bases(vertices[None])
    rule = triangle_rule(degree)
    pts = map_to_triangle(vertices[None], rule.points)
    tabs = evaluate_bases(bases, pts, order=3)
    e1 = vertices[1] - vertices[0]
    e2 = vertices[2] - vertices[0]
    area2 = e1[0] * e2[1] - e1[1] * e2[0]
    Aa = np.einsum(
        "q,c,qci,qcj->ij", rule.weights, THIRD_MULT,
        tabs["third"][0], tabs["third"][0],
    ) * area2
    Ab = np.einsum(
        "q,c,qci,qcj->ij", rule.weights, HESS_MULT,
        tabs["hess"][0], tabs["hess"][0],
    ) * area2
    return Aa, Ab


def local_edge_matrices(mesh: Mesh, edge_index: int, eta: float, npoints: int = 4):
    """Edge blocks of one edge, keyed by form part, plus combined "a"/"b".

    The block is 20x20 for interior edges (plus-triangle DoFs then
    minus-triangle DoFs) and 10x10 on the boundary; "dofs" gives the global
    numbering of the block rows/columns.
    """
    bases = _mesh_bases(mesh)
    edges = np.array([edge_index])
    dofs, blocks = _edge_blocks(mesh, bases, edges, npoints)
    out = {k: v[0] for k, v in blocks.items()}
    out["a"] = out["a_core"] + eta * out["a_pen"]
    out["b"] = out["b_core"] + eta * out["b_pen"]
    out["dofs"] = dofs[0]
    return out


_ORDERS1 = [(1, 0), (0, 1)]
_ORDERS2 = [(2, 0), (1, 1), (0, 2)]
_ORDERS3 = [(3, 0), (2, 1), (1, 2), (0, 3)]


def _field_derivative_grid(field, pts, orders):
    """Stack field.derivative over given (ax, ay) orders -> pts.shape + (len,)."""
    x = pts[..., 0]
    y = pts[..., 1]
    return np.stack([field.derivative(ax, ay, x, y) for ax, ay in orders], axis=-1)


def form_action(
    mesh: Mesh,
    dofmap: DofMap,
    field,
    iota: float,
    eta: float,
    volume_degree: int = 12,
    edge_points: int = 12,
) -> np.ndarray:
    """Vector of iota^2 a_h(field, phi_i) + b_h(field, phi_i) over all DoFs.

    `field` is a smooth analytic function supplying derivative(ax, ay, x, y)
    up to total order 4. In addition to the terms of a_h this includes the
    edge flux ({{d_nn Laplacian(field)}}, [[d_n phi]]) arising in the
    elementwise integration by parts of -(Delta^3 field, phi). That flux
    vanishes identically when the first argument is a piecewise cubic (fourth
    derivatives are zero), so the discrete operator never sees it, but it is
    what makes the pairing agree with (f, phi) for the exact solution.

    The field's own interior-edge jumps vanish by smoothness and are not
    evaluated; on boundary edges the trace terms (including penalties) are.
    """
    bases = _mesh_bases(mesh)
    r_a = np.zeros(dofmap.n_dofs)
    r_b = np.zeros(dofmap.n_dofs)

    rule = triangle_rule(volume_degree)
    corners = mesh.vertices[mesh.triangles]
    T = mesh.num_triangles
    for lo in range(0, T, _TRI_CHUNK):
        sel = slice(lo, min(lo + _TRI_CHUNK, T))
        sub = Bases(bases.coeff[sel], bases.center[sel], bases.scale[sel])
        pts = map_to_triangle(corners[sel], rule.points)
        tabs = evaluate_bases(sub, pts, order=3)
        H = _field_derivative_grid(field, pts, _ORDERS2)
        D3 = _field_derivative_grid(field, pts, _ORDERS3)
        w = 2.0 * mesh.tri_area[sel]
        r_loc_b = np.einsum(
            "t,q,c,tqc,tqcj->tj", w, rule.weights, HESS_MULT, H, tabs["hess"],
            optimize=True,
        )
        r_loc_a = np.einsum(
            "t,q,c,tqc,tqcj->tj", w, rule.weights, THIRD_MULT, D3, tabs["third"],
            optimize=True,
        )
        np.add.at(r_b, dofmap.cell_dofs[sel], r_loc_b)
        np.add.at(r_a, dofmap.cell_dofs[sel], r_loc_a)

    rule_e = edge_rule(edge_points)
    cell = _cell_dofs_for(mesh)
    for group, boundary in ((mesh.interior_edges, False), (mesh.boundary_edges, True)):
        for lo in range(0, group.size, _EDGE_CHUNK):
            edges = group[lo : lo + _EDGE_CHUNK]
            if edges.size == 0:
                continue
            _, jump, avg = _edge_jump_average_rows(mesh, bases, edges, edge_points)
            a = mesh.vertices[mesh.edge_vertices[edges, 0]]
            b = mesh.vertices[mesh.edge_vertices[edges, 1]]
            pts = a[:, None, :] + rule_e.points[None, :, None] * (b - a)[:, None, :]
            n = mesh.edge_normal[edges]
            t = mesh.edge_tangent[edges]
            h = mesh.edge_length[edges]

            grad_f = _field_derivative_grid(field, pts, _ORDERS1)
            hess_f = _field_derivative_grid(field, pts, _ORDERS2)
            third_f = _field_derivative_grid(field, pts, _ORDERS3)
            lap_hess_f = _laplacian_hessian(field, pts)

            f_n = np.einsum("ea,epa->ep", n, grad_f)
            f_nn = np.einsum("ec,epc->ep", second_weights(n, n), hess_f)
            f_nt = np.einsum("ec,epc->ep", second_weights(n, t), hess_f)
            f_nnn = np.einsum("ec,epc->ep", third_weights(n, n, n), third_f)
            f_nnt = np.einsum("ec,epc->ep", third_weights(n, n, t), third_f)
            f_nnL = np.einsum("ec,epc->ep", second_weights(n, n), lap_hess_f)

            dofs = cell[mesh.edge_plus[edges]]
            if not boundary:
                dofs = np.concatenate(
                    [dofs, cell[mesh.edge_minus[edges]]], axis=1
                )

            def acc(target, scale, fvals, rows):
                loc = np.einsum(
                    "e,p,ep,epj->ej", scale, rule_e.weights, fvals, rows,
                    optimize=True,
                )
                np.add.at(target, dofs, loc)

            ones = np.ones_like(h)
            # smooth field: averages are plain traces everywhere; its jumps
            # exist only on the boundary, where jump = average = trace
            acc(r_a, -h, f_nnn, jump["nn"])
            acc(r_a, -2.0 * h, f_nnt, jump["nt"])
            acc(r_a, h, f_nnL, jump["n"])  # integration-by-parts flux
            acc(r_b, -h, f_nn, jump["n"])
            if boundary:
                acc(r_a, -h, f_nn, avg["nnn"])
                acc(r_a, -2.0 * h, f_nt, avg["nnt"])
                acc(r_a, eta * ones, f_nn, jump["nn"])
                acc(r_a, eta / (h * h), f_n, jump["n"])
                acc(r_b, -h, f_n, avg["nn"])
                acc(r_b, eta * ones, f_n, jump["n"])

    return iota * iota * r_a + r_b


def _laplacian_hessian(field, pts):
    """Components (xx, xy, yy) of the Hessian of the field's Laplacian."""
    x = pts[..., 0]
    y = pts[..., 1]
    return np.stack(
        [
            field.derivative(4, 0, x, y) + field.derivative(2, 2, x, y),
            field.derivative(3, 1, x, y) + field.derivative(1, 3, x, y),
            field.derivative(2, 2, x, y) + field.derivative(0, 4, x, y),
        ],
        axis=-1,
    )


def dump_system(system: AssembledSystem, prefix: str) -> None:
    """Debug dump: S in MatrixMarket coordinate format, F as plain text."""
    from scipy.io import mmwrite

    mmwrite(f"{prefix}_S.mtx", sp.coo_matrix(system.S))
    np.savetxt(f"{prefix}_F.txt", system.F)
