"""Spectral boundary smoother (I + Laplace-Beltrami)^(-delta) on a circle.

On a circle of radius R the Laplace-Beltrami operator -d^2/ds^2 has the
orthonormal eigenbasis Y_m(theta) = e^{i m theta} / sqrt(2 pi R) with
eigenvalues mu_m = m^2 / R^2, so the smoother acts diagonally with
multipliers (1 + mu_m)^(-delta).

Two discrete realizations live here:

* ``apply_smoother`` treats boundary-node values as samples: trapezoid
  analysis in theta (exact for band-limited traces on uniform nodes),
  multiplier scaling, pointwise synthesis.
* ``assemble_boundary_matrix`` builds the Galerkin matrix of the smoothed
  pairing on P1 hat traces.  The hat/Fourier inner products are integrated
  in closed form per boundary arc (hats linear in theta, arc element R
  d(theta)), so the only approximation is the mode truncation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh


@dataclass(frozen=True)
class SmootherSpec:
    """Smoothing exponent delta >= 0, circle radius, max Fourier mode M.

    truncation=None resolves to the Nyquist limit of whatever boundary node
    set the spec is applied to.
    """

    delta: float
    radius: float
    truncation: int | None = None

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.truncation is not None and self.truncation < 1:
            raise ValueError("truncation must be at least 1")

    def resolve_truncation(self, node_count: int) -> int:
        m = self.truncation if self.truncation is not None else node_count // 2
        if m < 1:
            raise ValueError("truncation must be at least 1")
        if m > node_count / 2:
            raise ValueError(
                f"truncation {m} exceeds the Nyquist limit {node_count // 2} "
                f"of {node_count} boundary nodes"
            )
        return m


@dataclass(frozen=True)
class BoundaryBasis:
    """Laplace-Beltrami modes m = -M..M with multipliers, optionally bound to
    a set of boundary node angles (enabling analysis/synthesis)."""

    modes: np.ndarray
    mu: np.ndarray
    multipliers: np.ndarray
    radius: float
    delta: float
    theta: np.ndarray | None = None
    trace_map: np.ndarray | None = None
    synthesis: np.ndarray | None = None

    def __post_init__(self):
        for name in ("modes", "mu", "multipliers"):
            getattr(self, name).setflags(write=False)


def lb_spectrum(spec: SmootherSpec, theta: np.ndarray | None = None) -> BoundaryBasis:
    """Modes, eigenvalues and multipliers of the smoother; binding to node
    angles adds the trapezoid analysis matrix and the synthesis matrix."""
    if spec.truncation is None and theta is None:
        raise ValueError("need either an explicit truncation or node angles")
    m_max = spec.resolve_truncation(len(theta)) if theta is not None else spec.truncation
    modes = np.arange(-m_max, m_max + 1)
    mu = modes.astype(float) ** 2 / spec.radius**2
    multipliers = (1.0 + mu) ** (-spec.delta)

    trace_map = synthesis = None
    if theta is not None:
        theta = np.asarray(theta, dtype=float)
        gaps = np.roll(theta, -1) - theta
        gaps[-1] += 2 * np.pi
        weights = spec.radius * 0.5 * (gaps + np.roll(gaps, 1))
        y = np.exp(1j * np.outer(modes, theta)) / np.sqrt(2 * np.pi * spec.radius)
        trace_map = np.conj(y) * weights
        synthesis = y.T.copy()
    return BoundaryBasis(
        modes=modes,
        mu=mu,
        multipliers=multipliers,
        radius=spec.radius,
        delta=spec.delta,
        theta=theta,
        trace_map=trace_map,
        synthesis=synthesis,
    )


def apply_smoother(basis: BoundaryBasis, trace_values: np.ndarray) -> np.ndarray:
    """Analyze node samples into Fourier coefficients, damp, resynthesize."""
    if basis.trace_map is None:
        raise ValueError("basis is not bound to boundary nodes")
    values = np.asarray(trace_values)
    if values.shape != (basis.trace_map.shape[1],):
        raise ValueError(
            f"expected {basis.trace_map.shape[1]} trace values, got {values.shape}"
        )
    coeffs = basis.trace_map @ values
    return basis.synthesis @ (basis.multipliers * coeffs)


def _phi1(w: np.ndarray) -> np.ndarray:
    """(e^w - 1)/w, series-stabilized near w = 0."""
    out = np.empty_like(w, dtype=complex)
    small = np.abs(w) < 1e-4
    ws = w[small]
    out[small] = 1.0 + ws / 2 + ws**2 / 6 + ws**3 / 24 + ws**4 / 120
    wl = w[~small]
    out[~small] = np.expm1(wl) / wl
    return out


def _psi(w: np.ndarray) -> np.ndarray:
    """(e^w (w - 1) + 1)/w^2, series-stabilized near w = 0."""
    out = np.empty_like(w, dtype=complex)
    small = np.abs(w) < 1e-4
    ws = w[small]
    out[small] = 0.5 + ws / 3 + ws**2 / 8 + ws**3 / 30 + ws**4 / 144
    wl = w[~small]
    out[~small] = (np.exp(wl) * (wl - 1.0) + 1.0) / wl**2
    return out


def hat_mode_integrals(theta: np.ndarray, radius: float, modes: np.ndarray) -> np.ndarray:
    """Exact inner products <phi_i, Y_m> of P1 hat traces against the modes.

    Hats are piecewise linear in theta on the arcs between consecutive nodes;
    the integral over each arc of (linear) * e^{-i m theta} * R d(theta) is
    evaluated in closed form.  Returns the (n_modes, n_nodes) matrix.
    """
    theta = np.asarray(theta, dtype=float)
    arcs = np.roll(theta, -1) - theta
    arcs[-1] += 2 * np.pi
    w = -1j * np.outer(modes, arcs)  # (n_modes, n_arcs)

    # Integrals over arc j of the rising ramp t/L and the full window, with
    # t measured from the arc start: I_rise = L * psi(w), I_all = L * phi1(w).
    i_rise = arcs * _psi(w)
    i_fall = arcs * _phi1(w) - i_rise
    phase = np.exp(-1j * np.outer(modes, theta))  # e^{-i m theta_j} per arc start

    scale = radius / np.sqrt(2 * np.pi * radius)
    c = scale * (phase * i_fall + np.roll(phase * i_rise, 1, axis=1))
    return c


def assemble_boundary_matrix(mesh: Mesh, spec: SmootherSpec) -> np.ndarray:
    """Dense symmetric PSD matrix of the smoothed boundary pairing over the
    mesh boundary nodes (in boundary order).

    B[i, j] = sum_m (1 + mu_m)^(-delta) <phi_j, Y_m> <Y_m, phi_i>; pairing
    the +-m terms makes the result real.
    """
    theta = mesh.boundary_theta
    m_max = spec.resolve_truncation(len(theta))
    modes = np.arange(0, m_max + 1)
    c = hat_mode_integrals(theta, spec.radius, modes)
    d = (1.0 + modes.astype(float) ** 2 / spec.radius**2) ** (-spec.delta)
    d[1:] *= 2.0
    return np.real(np.conj(c).T @ (d[:, None] * c))


def boundary_quadratic_form(theta: np.ndarray, radius: float, spec: SmootherSpec,
                            values: np.ndarray) -> float:
    """<S_delta u, u> for the P1 trace with the given node values.

    Same integrals and multipliers as assemble_boundary_matrix, evaluated as
    sum_m multiplier_m |<u, Y_m>|^2 without materializing the dense matrix,
    so very fine boundaries stay cheap.
    """
    m_max = spec.resolve_truncation(len(theta))
    modes = np.arange(-m_max, m_max + 1)
    c = hat_mode_integrals(theta, radius, modes)
    mult = (1.0 + modes.astype(float) ** 2 / radius**2) ** (-spec.delta)
    coeffs = c @ np.asarray(values)
    return float(mult @ np.abs(coeffs) ** 2)
