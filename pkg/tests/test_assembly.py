"""Sparse assembly: symmetry, quadrature independence, block scatter."""

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.io import mmread

from gekplate.assembly import (
    DofMap,
    assemble,
    assemble_forms,
    assemble_load,
    build_system,
    dump_system,
    local_edge_matrices,
    local_volume_matrices,
)
from gekplate.mesh import build_structured_mesh
from gekplate.problems import example1

PART_KEYS = ("a_core", "a_pen", "b_core", "b_pen")


def rel_max(A, B):
    return np.abs(A - B).max() / max(np.abs(B).max(), 1e-300)


def test_dofmap_layout_and_elimination():
    mesh = build_structured_mesh(2)
    dm = DofMap(mesh)
    assert dm.n_dofs == 3 * 9 + 8
    assert dm.n_free == 3 * 1 + 8  # one interior vertex plus barycenters
    tri = mesh.triangles[3]
    dofs = dm.triangle_dofs(3)
    assert list(dofs[0:3]) == [3 * v for v in tri]
    assert list(dofs[3:9:2]) == [3 * v + 1 for v in tri]
    assert list(dofs[4:9:2]) == [3 * v + 2 for v in tri]
    assert dofs[9] == 3 * 9 + 3
    x = np.arange(dm.n_free, dtype=float) + 1.0
    full = dm.scatter(x)
    assert np.array_equal(full[dm.free], x)
    constrained = np.setdiff1d(np.arange(dm.n_dofs), dm.free)
    assert (full[constrained] == 0).all()


def test_symmetry_all_parts():
    mesh = build_structured_mesh(3)
    parts = assemble_forms(mesh, DofMap(mesh))
    for key in PART_KEYS:
        M = getattr(parts, key).toarray()
        assert rel_max(M, M.T) < 1e-12, key
    for iota, eta in ((0.0, 10.0), (1e-4, 1.0), (1.0, 1e4)):
        S = parts.combine(iota, eta).toarray()
        assert rel_max(S, S.T) < 1e-12


def test_eta_affinity_and_iota_zero():
    mesh = build_structured_mesh(2)
    parts = assemble_forms(mesh, DofMap(mesh))
    iota, eta = 3e-3, 7.0
    delta = (parts.combine(iota, 2 * eta) - parts.combine(iota, eta)).toarray()
    pen = (iota**2 * eta) * parts.a_pen.toarray() + eta * parts.b_pen.toarray()
    assert rel_max(delta, pen) < 1e-13
    b_only = (parts.b_core + eta * parts.b_pen).toarray()
    assert rel_max(parts.combine(0.0, eta).toarray(), b_only) < 1e-14


def test_quadrature_invariance():
    # volume integrands are degree <= 2, edge trace products degree <= 4,
    # so refining the rules must not change the matrices
    mesh = build_structured_mesh(2)
    dm = DofMap(mesh)
    base = assemble_forms(mesh, dm, stiffness_degree=4, edge_points=4)
    fine = assemble_forms(mesh, dm, stiffness_degree=9, edge_points=12)
    for key in PART_KEYS:
        assert rel_max(getattr(fine, key).toarray(), getattr(base, key).toarray()) < 1e-12


def test_global_matrix_equals_local_block_scatter():
    # rebuild each part from the documented per-triangle / per-edge blocks;
    # duplicate DoF hits (shared edge endpoints) must accumulate
    mesh = build_structured_mesh(2)
    dm = DofMap(mesh)
    parts = assemble_forms(mesh, dm)
    N = dm.n_dofs
    truth = {k: np.zeros((N, N)) for k in PART_KEYS}

    for t in range(mesh.num_triangles):
        Aa, Ab = local_volume_matrices(mesh.vertices[mesh.triangles[t]])
        dofs = dm.triangle_dofs(t)
        np.add.at(truth["a_core"], (dofs[:, None], dofs[None, :]), Aa)
        np.add.at(truth["b_core"], (dofs[:, None], dofs[None, :]), Ab)
    for e in range(mesh.num_edges):
        loc = local_edge_matrices(mesh, e, eta=1.0)
        dofs = loc["dofs"]
        for key in PART_KEYS:
            np.add.at(truth[key], (dofs[:, None], dofs[None, :]), loc[key])

    for key in PART_KEYS:
        assert rel_max(getattr(parts, key).toarray(), truth[key]) < 1e-12, key


def test_local_edge_matrices_combined_keys():
    mesh = build_structured_mesh(1)
    interior = int(mesh.interior_edges[0])
    boundary = int(mesh.boundary_edges[0])
    loc_i = local_edge_matrices(mesh, interior, eta=5.0)
    loc_b = local_edge_matrices(mesh, boundary, eta=5.0)
    assert loc_i["a"].shape == (20, 20) and loc_b["a"].shape == (10, 10)
    assert np.allclose(loc_i["a"], loc_i["a_core"] + 5.0 * loc_i["a_pen"])
    assert np.allclose(loc_b["b"], loc_b["b_core"] + 5.0 * loc_b["b_pen"])
    assert loc_i["dofs"].shape == (20,)


def test_volume_blocks_positive_semidefinite_with_kernels():
    vertices = np.array([[0.2, 0.1], [1.1, 0.3], [0.4, 0.9]])
    Aa, Ab = local_volume_matrices(vertices)
    wa = np.linalg.eigvalsh(Aa)
    wb = np.linalg.eigvalsh(Ab)
    assert wa.min() > -1e-10 * wa.max()
    assert wb.min() > -1e-10 * wb.max()
    # third-derivative form kills quadratics (dim 6), hessian form linears (3)
    assert (wa < 1e-10 * wa.max()).sum() == 6
    assert (wb < 1e-10 * wb.max()).sum() == 3


def test_build_system_reduces_to_free_dofs():
    mesh = build_structured_mesh(2)
    dm = DofMap(mesh)
    prob = example1(1e-2)
    parts = assemble_forms(mesh, dm)
    F = assemble_load(mesh, dm, prob.load)
    system = build_system(parts, F, prob.iota, 10.0, dm)
    assert system.S.shape == (dm.n_free, dm.n_free)
    S_full = parts.combine(prob.iota, 10.0).toarray()
    assert rel_max(system.S.toarray(), S_full[dm.free][:, dm.free]) < 1e-14
    assert np.array_equal(system.F, F[dm.free])
    one_shot = assemble(mesh, dm, prob.load, prob.iota, 10.0)
    assert rel_max(one_shot.S.toarray(), system.S.toarray()) < 1e-14
    assert np.allclose(one_shot.F, system.F, atol=1e-14)


def test_load_vector_constant_against_closed_form():
    # u == 1 has unit vertex/barycenter values and zero gradients, so
    # F @ coeffs = (f, u) = area of the unit square
    mesh = build_structured_mesh(3)
    dm = DofMap(mesh)

    class One:
        def value(self, x, y):
            return np.ones_like(np.asarray(x, dtype=float))

    F = assemble_load(mesh, dm, One(), degree=4)
    coeffs = np.zeros(dm.n_dofs)
    coeffs[0 : 3 * mesh.num_vertices : 3] = 1.0  # vertex values of u == 1
    coeffs[3 * mesh.num_vertices :] = 1.0  # barycenter values of u == 1
    assert abs(F @ coeffs - 1.0) < 1e-13


def test_dump_system_roundtrip(tmp_path):
    mesh = build_structured_mesh(2)
    dm = DofMap(mesh)
    system = assemble(mesh, dm, example1(0.0).load, 0.0, 10.0)
    prefix = str(tmp_path / "sys")
    dump_system(system, prefix)
    S_back = sp.csr_matrix(mmread(f"{prefix}_S.mtx"))
    F_back = np.loadtxt(f"{prefix}_F.txt")
    assert rel_max(S_back.toarray(), system.S.toarray()) < 1e-12
    assert np.allclose(F_back, system.F, atol=1e-12)
