"""Piecewise-smooth coefficient pairs (A, n) on tagged mesh regions.

A medium maps each region tag to a matrix-valued diffusion coefficient A and
a scalar index of refraction n, both closed-form callbacks of position
(constants in all the stock experiments).  Tags without an entry default to
the background values A = I, n = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mesh import Mesh, TAG_NAMES

AFunc = Callable[[np.ndarray], np.ndarray]  # (m, 2) points -> (m, 2, 2) complex
NFunc = Callable[[np.ndarray], np.ndarray]  # (m, 2) points -> (m,) complex


def _const_n(value: complex) -> NFunc:
    v = complex(value)
    return lambda pts: np.full(len(pts), v, dtype=complex)


def _const_a(matrix) -> AFunc:
    m = np.array(matrix, dtype=complex).reshape(2, 2)
    m.setflags(write=False)
    return lambda pts: np.broadcast_to(m, (len(pts), 2, 2))


_IDENTITY_A = _const_a(np.eye(2))
_UNIT_N = _const_n(1.0)


@dataclass(frozen=True)
class RegionCoefficients:
    a: AFunc
    n: NFunc


@dataclass(frozen=True)
class MediumSpec:
    """Coefficients per region tag; missing tags fall back to A = I, n = 1."""

    regions: dict[int, RegionCoefficients] = field(default_factory=dict)

    @classmethod
    def from_constants(cls, per_tag: dict[int, tuple] | None = None) -> "MediumSpec":
        """Build from {tag: (A_matrix_or_None, n_value)} constants."""
        regions = {}
        for tag, (a, n) in (per_tag or {}).items():
            if tag not in TAG_NAMES:
                raise ValueError(f"unknown region tag {tag!r}")
            regions[tag] = RegionCoefficients(
                a=_IDENTITY_A if a is None else _const_a(a),
                n=_UNIT_N if n is None else _const_n(n),
            )
        return cls(regions)

    def coefficients(self, tag: int) -> RegionCoefficients:
        if tag not in TAG_NAMES:
            raise ValueError(f"unknown region tag {tag!r}")
        return self.regions.get(tag, RegionCoefficients(_IDENTITY_A, _UNIT_N))


def eval_n(med: MediumSpec, x, tag: int) -> complex:
    """Index of refraction at a single point of the given region."""
    return complex(med.coefficients(tag).n(np.atleast_2d(np.asarray(x, dtype=float)))[0])


def eval_a(med: MediumSpec, x, tag: int) -> np.ndarray:
    """2x2 diffusion matrix at a single point of the given region."""
    return np.array(med.coefficients(tag).a(np.atleast_2d(np.asarray(x, dtype=float)))[0])


def n_at(med: MediumSpec, pts: np.ndarray, tags: np.ndarray) -> np.ndarray:
    """Vectorized n over points with per-point region tags."""
    out = np.empty(len(pts), dtype=complex)
    for tag in np.unique(tags):
        sel = tags == tag
        out[sel] = med.coefficients(int(tag)).n(pts[sel])
    return out


def a_at(med: MediumSpec, pts: np.ndarray, tags: np.ndarray) -> np.ndarray:
    """Vectorized A over points with per-point region tags."""
    out = np.empty((len(pts), 2, 2), dtype=complex)
    for tag in np.unique(tags):
        sel = tags == tag
        out[sel] = med.coefficients(int(tag)).a(pts[sel])
    return out


def quadrature_points(mesh: Mesh):
    """Mid-edge quadrature: points (nt, 3, 2), weight area/3 per point.

    Exact for quadratics, hence exact for P1 products against region-wise
    constant coefficients on an interface-conforming mesh.
    """
    p = mesh.nodes[mesh.triangles]
    pts = 0.5 * (p + np.roll(p, -1, axis=1))
    return pts, mesh.triangle_areas() / 3.0


def validate_medium(med: MediumSpec, mesh: Mesh, alpha: float = 1e-12,
                    require_unit_outer: bool = False) -> None:
    """Check Hermitian positive-definiteness of A and the sign conditions on n
    at every quadrature point; optionally require the background values on
    the OUTER region."""
    pts, _ = quadrature_points(mesh)
    flat = pts.reshape(-1, 2)
    tags = np.repeat(mesh.tags, 3)
    a = a_at(med, flat, tags)
    if not np.allclose(a, np.conj(np.swapaxes(a, 1, 2)), atol=1e-12):
        raise ValueError("A is not Hermitian at some quadrature point")
    eigs = np.linalg.eigvalsh(a)
    if eigs.min() <= 0:
        raise ValueError("A is not positive-definite at some quadrature point")
    n = n_at(med, flat, tags)
    if n.real.min() < alpha:
        raise ValueError("Re(n) must be bounded below by a positive constant")
    if n.imag.min() < -1e-14:
        raise ValueError("Im(n) must be nonnegative")
    if require_unit_outer:
        sel = tags == 0
        if sel.any():
            if not np.allclose(n[sel], 1.0) or not np.allclose(a[sel], np.eye(2)):
                raise ValueError("medium must be A = I, n = 1 outside the scatterer")


def lp_diff_norm(med1: MediumSpec, med2: MediumSpec, mesh: Mesh, p: float,
                 fieldname: str = "n") -> float:
    """Quadrature L^p norm of the coefficient difference over the mesh.

    Matrix field: sum of the entrywise L^p norms.  p = inf takes the max over
    quadrature points.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    pts, w = quadrature_points(mesh)
    flat = pts.reshape(-1, 2)
    tags = np.repeat(mesh.tags, 3)
    weights = np.repeat(w, 3)
    if fieldname == "n":
        diff = np.abs(n_at(med1, flat, tags) - n_at(med2, flat, tags))
        return _lp(diff, weights, p)
    if fieldname == "A":
        diff = np.abs(a_at(med1, flat, tags) - a_at(med2, flat, tags))
        return float(sum(_lp(diff[:, i, j], weights, p) for i in range(2) for j in range(2)))
    raise ValueError(f"field must be 'n' or 'A', got {fieldname!r}")


def _lp(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    if np.isinf(p):
        return float(values.max()) if len(values) else 0.0
    return float((weights @ values**p) ** (1.0 / p))
