"""P1 finite-element assembly of the smoothed Stekloff pencil.

Weak form on the disk B: find (lambda, u) with

    (A grad u, grad v)_B - k^2 (n u, v)_B = -lambda <S_delta u, v>_dB,

discretized as K u = -lambda B u with K = S_A - k^2 M_n and B the smoothed
boundary matrix.  The H^1 inner product used for normalization is redefined
with the reference diffusion coefficient: H = S_{A0} + k^2 M_1.

Node numbering puts boundary DOFs last (guaranteed by the mesh module), so
the dense boundary matrix embeds as a trailing block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .media import MediumSpec, a_at, n_at, quadrature_points
from .mesh import Mesh
from .smoothing import SmootherSpec, assemble_boundary_matrix


@dataclass(frozen=True)
class AssembledSystem:
    """Sparse matrices of the discrete pencil K u = -lambda B u."""

    K: sp.csr_matrix
    Bdelta: sp.csr_matrix
    H: sp.csr_matrix
    k: float
    dof_count: int
    boundary_nodes: np.ndarray
    boundary_block: np.ndarray  # dense boundary matrix in boundary order
    smoother: SmootherSpec


def _p1_gradients(mesh: Mesh):
    """Constant P1 gradients per triangle: (nt, 3, 2), plus areas."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area2 = x[:, 0] * b[:, 0] + x[:, 1] * b[:, 1] + x[:, 2] * b[:, 2]
    grads = np.stack([b, c], axis=2) / area2[:, None, None]
    return grads, 0.5 * area2


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    """Accumulate (nt, 3, 3) local matrices into the global sparse matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.node_count
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsr()


def assemble_stiffness(mesh: Mesh, med) -> sp.csr_matrix:
    """Matrix of (A grad u, grad v)_B; A averaged over the mid-edge points.

    med is a MediumSpec, or a raw callback (points, tags) -> (m, 2, 2) used
    e.g. for coefficient differences.
    """
    grads, areas = _p1_gradients(mesh)
    pts, _ = quadrature_points(mesh)
    tags = np.repeat(mesh.tags, 3)
    coeff = med if callable(med) else (lambda p, t: a_at(med, p, t))
    a = coeff(pts.reshape(-1, 2), tags).reshape(-1, 3, 2, 2).mean(axis=1)
    local = np.einsum("tix,txy,tjy->tij", grads, a, grads) * areas[:, None, None]
    return _scatter(mesh, local)


# P1 values at the three mid-edge quadrature points (rows: points).
_MIDEDGE_VALUES = np.array([
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
])


def assemble_mass(mesh: Mesh, weight=1.0) -> sp.csr_matrix:
    """Matrix of (w u, v)_B by the mid-edge rule.

    weight may be a scalar or a callback (points, tags) -> values evaluated
    at the quadrature points.
    """
    pts, w_tri = quadrature_points(mesh)
    if callable(weight):
        tags = np.repeat(mesh.tags, 3)
        vals = np.asarray(weight(pts.reshape(-1, 2), tags)).reshape(-1, 3)
    else:
        vals = np.full((len(mesh.triangles), 3), complex(weight))
    shapes = np.einsum("qi,qj->qij", _MIDEDGE_VALUES, _MIDEDGE_VALUES)
    local = np.einsum("tq,qij->tij", vals, shapes) * w_tri[:, None, None]
    return _scatter(mesh, local)


def medium_mass_weight(med: MediumSpec):
    """Weight callback evaluating the medium's index of refraction."""
    return lambda pts, tags: n_at(med, pts, tags)


def embed_boundary_block(block: np.ndarray, boundary_nodes: np.ndarray,
                         n: int) -> sp.csr_matrix:
    """Place the dense boundary matrix into global numbering."""
    rows = np.repeat(boundary_nodes, len(boundary_nodes))
    cols = np.tile(boundary_nodes, len(boundary_nodes))
    return sp.coo_matrix((block.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_system(mesh: Mesh, med: MediumSpec, smoother: SmootherSpec,
                    k: float, reference: MediumSpec | None = None) -> AssembledSystem:
    """Assemble K, the embedded boundary matrix and the H^1 matrix.

    ``reference`` (default: med itself) supplies the diffusion coefficient of
    the redefined H^1 inner product, so perturbed systems can share the
    reference normalization.
    """
    if k <= 0:
        raise ValueError("wave number k must be positive")
    stiff = assemble_stiffness(mesh, med)
    mass_n = assemble_mass(mesh, medium_mass_weight(med))
    big_k = (stiff - k**2 * mass_n).tocsr()

    ref = med if reference is None else reference
    stiff_ref = stiff if ref is med else assemble_stiffness(mesh, ref)
    h_mat = (stiff_ref + k**2 * assemble_mass(mesh, 1.0)).tocsr()

    block = assemble_boundary_matrix(mesh, smoother)
    b_mat = embed_boundary_block(block, mesh.boundary_nodes, mesh.node_count)
    return AssembledSystem(
        K=big_k,
        Bdelta=b_mat,
        H=h_mat,
        k=k,
        dof_count=mesh.node_count,
        boundary_nodes=mesh.boundary_nodes.copy(),
        boundary_block=block,
        smoother=smoother,
    )
