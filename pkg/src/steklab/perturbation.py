"""First-order eigenvalue perturbation formula and its empirical validation.

For a simple eigenvalue lambda_0 with H^1-normalized eigenfunction u_0, a
coefficient change (A0, n0) -> (Ah, nh) shifts the eigenvalue by

    lambda_h - lambda_0 ~= [ -((Ah - A0) grad u0, grad u0)_B
                             + k^2 ((nh - n0) u0, u0)_B ] / <S_delta u0, u0>_dB

with a remainder that is second order in the coefficient-difference norms.
The perturbed eigenvalue is always recomputed by a full eigensolve of the
perturbed system; the formula itself is the object under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import AssembledSystem, assemble_mass, assemble_stiffness
from .eigensolve import EigenPair
from .fitting import fit_slope
from .media import MediumSpec, a_at, n_at
from .mesh import Mesh

# Exponent used when reporting the d=2 remainder norm ||nh - n0||_{L^{1+eps}};
# any eps > 0 is admissible, a fixed small value keeps reports reproducible.
P_PRIME = 1.05

NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class PerturbationReport:
    """Measured shift of one eigenvalue against its first-order prediction."""

    lambda0: complex
    lambda_h: complex
    correction: complex
    denominator: complex
    norms: dict[str, float] = field(default_factory=dict)
    size: float = math.nan  # perturbation size parameter (void radius etc.)

    @property
    def predicted(self) -> complex:
        return self.lambda0 + self.correction

    @property
    def shift(self) -> complex:
        return self.lambda_h - self.lambda0

    @property
    def remainder(self) -> complex:
        return self.shift - self.correction


class DegenerateDenominatorError(ValueError):
    """<S_delta u0, u0> vanished; the correction formula is inapplicable."""


def _diff_a(ref: MediumSpec, pert: MediumSpec):
    return lambda pts, tags: a_at(pert, pts, tags) - a_at(ref, pts, tags)


def _diff_n(ref: MediumSpec, pert: MediumSpec):
    return lambda pts, tags: n_at(pert, pts, tags) - n_at(ref, pts, tags)


def correction_components(u0: EigenPair, ref: MediumSpec, pert: MediumSpec,
                          sys: AssembledSystem, mesh: Mesh):
    """Anisotropic numerator term, refractive numerator term, denominator.

    The numerator quadratic forms are assembled from the pointwise
    coefficient differences, so they are exactly linear in the perturbation.
    """
    stiff = assemble_stiffness(mesh, _diff_a(ref, pert))
    mass = assemble_mass(mesh, _diff_n(ref, pert))
    u = u0.u
    term_a = complex(np.vdot(u, stiff @ u))
    term_n = sys.k**2 * complex(np.vdot(u, mass @ u))
    denom = complex(np.vdot(u, sys.Bdelta @ u))
    return term_a, term_n, denom


def correction_term(u0: EigenPair, ref: MediumSpec, pert: MediumSpec,
                    sys: AssembledSystem, mesh: Mesh) -> complex:
    """First-order eigenvalue correction for the coefficient change ref->pert.

    u0 must be H-normalized (the formula is scale-invariant, but the stated
    contract mirrors the normalization used to derive it).
    """
    term_a, term_n, denom = correction_components(u0, ref, pert, sys, mesh)
    if abs(denom) < 1e-12:
        raise DegenerateDenominatorError(
            f"|<S_delta u0, u0>| = {abs(denom):.3e} is numerically zero"
        )
    return (-term_a + term_n) / denom


@dataclass(frozen=True)
class Pairing:
    matches: list[tuple[EigenPair, EigenPair, float]]
    unmatched_perturbed: list[EigenPair]


def match_pairs(ref_pairs: list[EigenPair], pert_pairs: list[EigenPair], h_mat) -> Pairing:
    """Greedy matching by |lambda_h - lambda_0| + (1 - |<u_h, u_0>_H|)."""
    if not ref_pairs or not pert_pairs:
        raise ValueError("both eigenpair lists must be nonempty")
    scores = []
    for i, rp in enumerate(ref_pairs):
        hu = h_mat @ rp.u
        for j, pp in enumerate(pert_pairs):
            overlap = abs(np.vdot(pp.u, hu)) / (rp.h1_norm * pp.h1_norm)
            scores.append((abs(pp.lam - rp.lam) + (1 - overlap), i, j))
    scores.sort()
    used_r, used_p, matches = set(), set(), []
    for metric, i, j in scores:
        if i in used_r or j in used_p:
            continue
        used_r.add(i)
        used_p.add(j)
        matches.append((ref_pairs[i], pert_pairs[j], metric))
    unmatched = [pp for j, pp in enumerate(pert_pairs) if j not in used_p]
    matches.sort(key=lambda t: (t[0].lam.real, t[0].lam.imag))
    return Pairing(matches=matches, unmatched_perturbed=unmatched)


@dataclass(frozen=True)
class SlopeSummary:
    shift_slope: float
    remainder_slope: float
    excluded_sizes: list[float]

    @property
    def slope_gap(self) -> float:
        return self.remainder_slope - self.shift_slope


def remainder_order(reports: list[PerturbationReport], sizes: list[float]) -> SlopeSummary:
    """Fitted log-log slopes of |shift| and |remainder| against the size
    parameter; remainders below the solver noise floor are excluded."""
    if len(reports) != len(sizes):
        raise ValueError("one report per size is required")
    if len(sizes) < 4:
        raise ValueError("need at least 4 perturbation sizes")
    s = np.asarray(sizes, dtype=float)
    if max(s) / min(s) < 10 * (1 - 1e-9):
        raise ValueError("sizes must span at least a decade")

    shifts = np.array([abs(r.shift) for r in reports])
    rems = np.array([abs(r.remainder) for r in reports])
    keep = rems > NOISE_FLOOR
    excluded = [float(v) for v in s[~keep]]
    if keep.sum() < 3 or (shifts <= NOISE_FLOOR).all():
        raise ValueError("perturbation sweep is entirely below the noise floor")
    order = np.argsort(s)[::-1]
    shift_slope, _, _ = fit_slope(s[order], shifts[order])
    keep_order = [i for i in order if keep[i]]
    rem_slope, _, _ = fit_slope(s[keep_order], rems[keep_order])
    return SlopeSummary(shift_slope=shift_slope, remainder_slope=rem_slope,
                        excluded_sizes=excluded)


def bound_check(report: PerturbationReport, c: float, norm_key: str = "n_L1") -> bool:
    """|shift| <= C * configured coefficient-difference norm."""
    return abs(report.shift) <= c * report.norms[norm_key]
