"""Shift-invert Arnoldi eigensolver for the pencil K u = -lambda B u.

B is PSD with rank bounded by the number of retained Fourier modes, so the
pencil is degenerate: interior-only modes correspond to infinite eigenvalues.
Shift-invert confines the iteration to the boundary-coupled spectral
subspace; Ritz values mapping to |lambda| > 1e8 are discarded as spurious.
A dense QZ path over the same pencil serves as a small-instance oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledSystem

_SPURIOUS_LIMIT = 1e8
_MERGE_TOL = 1e-8


@dataclass(frozen=True)
class EigenPair:
    """One computed eigenpair with its certification data."""

    lam: complex
    u: np.ndarray
    residual: float
    h1_norm: float
    gap: float = math.inf
    phase_fixed: bool = False


@dataclass(frozen=True)
class GapReport:
    lam: complex
    gap: float
    simple: bool | None  # None = inconclusive
    neighbor_count: int


class EigensolverError(RuntimeError):
    pass


def _residual(sys: AssembledSystem, lam: complex, u: np.ndarray,
              norm_k: float, norm_b: float) -> float:
    r = sys.K @ u + lam * (sys.Bdelta @ u)
    return float(np.linalg.norm(r) / ((norm_k + abs(lam) * norm_b) * np.linalg.norm(u)))


def _shift_invert_pairs(sys: AssembledSystem, sigma: complex, count: int):
    """Ritz pairs of (K + sigma*B)^{-1}(-B) mapped back to pencil eigenvalues."""
    n = sys.dof_count
    mat = (sys.K + sigma * sys.Bdelta).tocsc().astype(complex)
    lu = None
    shift = sigma
    for attempt in range(4):
        try:
            lu = spla.splu(mat)
            break
        except RuntimeError:
            if attempt == 3:
                raise EigensolverError(f"factorization singular at shift {shift}")
            shift = shift * (1 + 1e-6) + 1e-6j
            mat = (sys.K + shift * sys.Bdelta).tocsc().astype(complex)

    def matvec(x):
        return lu.solve(-(sys.Bdelta @ x))

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=complex)
    v0 = matvec(np.ones(n, dtype=complex))
    nrm = math.sqrt(abs(np.vdot(v0, sys.H @ v0)))
    if nrm == 0:
        raise EigensolverError("start vector annihilated by the boundary operator")
    v0 = v0 / nrm
    k = min(count, n - 2)
    theta, vecs = spla.eigs(op, k=k, which="LM", v0=v0, tol=0)
    lams = shift + 1.0 / theta
    return lams, vecs


def _h_project_out(u: np.ndarray, basis: list[np.ndarray], h_mat) -> float:
    """Relative H-norm of u after projecting out span(basis)."""
    hu = h_mat @ u
    norm2 = abs(np.vdot(u, hu))
    res = u.copy()
    for b in basis:
        res = res - (np.vdot(b, h_mat @ res) / np.vdot(b, h_mat @ b)) * b
    return math.sqrt(max(abs(np.vdot(res, h_mat @ res)), 0.0) / norm2)


def solve_near(sys: AssembledSystem, targets, count_per_target: int = 4) -> list[EigenPair]:
    """Converged eigenpairs near each target shift, deduplicated.

    Duplicates found from different targets are merged when both the
    eigenvalues agree to 1e-8 relative and the eigenvector lies in the span
    of the already-accepted cluster (so genuine multiplicities survive);
    the smaller-residual representative is kept.
    """
    targets = [complex(t) for t in targets]
    if not targets:
        raise ValueError("at least one target shift is required")
    if any(t == 0 for t in targets):
        raise ValueError("targets must be nonzero")
    if sys.Bdelta.nnz == 0:
        raise ValueError("boundary matrix is zero; pencil has no finite spectrum")
    norm_k = spla.norm(sys.K, 1)
    norm_b = spla.norm(sys.Bdelta, 1)

    accepted: list[EigenPair] = []
    for sigma in targets:
        lams, vecs = _shift_invert_pairs(sys, sigma, count_per_target)
        order = np.argsort(np.abs(lams - sigma), kind="stable")
        for idx in order:
            lam = complex(lams[idx])
            if abs(lam) > _SPURIOUS_LIMIT or not np.isfinite(lam):
                continue
            u = vecs[:, idx]
            pair = EigenPair(
                lam=lam,
                u=u,
                residual=_residual(sys, lam, u, norm_k, norm_b),
                h1_norm=math.sqrt(abs(np.vdot(u, sys.H @ u))),
            )
            cluster = [p for p in accepted
                       if abs(p.lam - lam) < _MERGE_TOL * (1 + abs(lam))]
            if cluster and _h_project_out(u, [p.u for p in cluster], sys.H) < 1e-6:
                worst = max(cluster, key=lambda p: p.residual)
                if pair.residual < worst.residual:
                    accepted[accepted.index(worst)] = pair
                continue
            accepted.append(pair)

    accepted.sort(key=lambda p: (p.lam.real, p.lam.imag))
    return [replace(p, gap=_gap_to_others(p, accepted)) for p in accepted]


def _gap_to_others(pair: EigenPair, pairs: list[EigenPair]) -> float:
    others = [abs(p.lam - pair.lam) for p in pairs if p is not pair]
    return min(others) if others else math.inf


def normalize(pair: EigenPair, h_mat) -> EigenPair:
    """Scale to unit H-norm and fix the phase deterministically.

    The phase is rotated so the largest-magnitude component is real and
    positive (ties broken by lowest index), which leaves the boundary form
    u* B u untouched and makes repeated normalization a no-op.
    """
    if not np.any(pair.u):
        raise ValueError("cannot normalize the zero vector")
    h2 = np.vdot(pair.u, h_mat @ pair.u)
    if h2.real <= 0:
        raise ValueError("H-norm not positive; invalid eigenpair")
    u = pair.u / math.sqrt(h2.real)
    idx = int(np.argmax(np.abs(u)))
    phase = u[idx] / abs(u[idx])
    u = u * np.conj(phase)
    return replace(pair, u=u, h1_norm=1.0, phase_fixed=True)


def certify_simple(pairs: list[EigenPair], target: complex) -> GapReport:
    """Gap certificate for the computed eigenvalue closest to target.

    Simplicity is claimed when the distance to every other computed
    eigenvalue exceeds 1e3 times the residual scale (residual relative to
    1 + |lambda|); with fewer than two computed neighbors the certificate is
    inconclusive.
    """
    if not pairs:
        raise ValueError("no eigenpairs supplied")
    best = min(pairs, key=lambda p: abs(p.lam - target))
    neighbors = [p for p in pairs if p is not best]
    if len(neighbors) < 2:
        return GapReport(lam=best.lam, gap=math.inf, simple=None,
                         neighbor_count=len(neighbors))
    gap = min(abs(p.lam - best.lam) for p in neighbors)
    scale = max(best.residual, np.finfo(float).eps) * (1 + abs(best.lam))
    return GapReport(lam=best.lam, gap=gap, simple=bool(gap > 1e3 * scale),
                     neighbor_count=len(neighbors))


def dense_spectrum(sys: AssembledSystem, vectors: bool = False):
    """QZ decomposition of the full pencil; finite eigenvalues only.

    Brute-force oracle for small instances (use well below ~1000 DOFs).
    """
    a = sys.K.toarray()
    b = -sys.Bdelta.toarray().astype(complex)
    if vectors:
        lams, vecs = scipy.linalg.eig(a, b)
    else:
        lams = scipy.linalg.eig(a, b, right=False)
    keep = np.isfinite(lams) & (np.abs(lams) < _SPURIOUS_LIMIT)
    lams = lams[keep]
    order = np.argsort(lams.real + 1e-12 * np.abs(lams.imag), kind="stable")
    if vectors:
        return lams[order], vecs[:, keep][:, order]
    return lams[order]
