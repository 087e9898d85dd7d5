"""Closed-form quadrature moments of the heralded two-mode state.

The state under study is a single photon added coherently across two
modes that each carry a seed coherent state:

    |Psi(phi)> ~ (a1+ + e^{i phi} a2+) |alpha>_1 |alpha>_2,

with squared norm ``2 (1 + |alpha|^2 (1 + cos phi))`` before
normalization.  Quadratures follow the half convention

    q(theta) = (a e^{-i theta} + a+ e^{i theta}) / 2,

so vacuum has variance 1/4 and a coherent state has ``<q(0)> = Re alpha``.
``x`` denotes ``q(0)`` and ``p`` denotes ``q(pi/2)``.

Every function here is a closed form in ``(alpha, phi)``; the matching
brute-force numerics live in :mod:`herald_sense.fock`, which this module
deliberately does not import.  Mode-2 moments follow from mode-1
expressions under ``phi -> -phi``; mixed-mode moments have their own
expression.  The quadrature component order used throughout the package
is ``(x1, p1, x2, p2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import require_finite_complex, require_finite_real

__all__ = [
    "TWO_PI",
    "QUADRATURE_PHASES",
    "HeraldedStateSpec",
    "MomentSet",
    "norm_sq",
    "first_moment",
    "second_moment",
    "mean_vector",
    "mean_vector_derivative",
    "covariance_matrix",
    "assemble",
]

TWO_PI = 2.0 * math.pi

# (mode, lo_phase) of the four quadrature components (x1, p1, x2, p2).
QUADRATURE_PHASES = ((1, 0.0), (1, math.pi / 2), (2, 0.0), (2, math.pi / 2))


@dataclass(frozen=True)
class HeraldedStateSpec:
    """Seed amplitude and delocalization phase of the heralded state.

    ``phi`` is canonicalized to [0, 2 pi).  ``alpha`` may be complex;
    several downstream closed forms (loss model, calibration) are only
    available for real ``alpha`` and validate that themselves.
    """

    alpha: complex
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", require_finite_complex("alpha", self.alpha))
        phi = require_finite_real("phi", self.phi) % TWO_PI
        object.__setattr__(self, "phi", phi)

    @property
    def alpha_sq(self) -> float:
        return abs(self.alpha) ** 2


@dataclass(frozen=True)
class MomentSet:
    """First and second moments of ``(x1, p1, x2, p2)`` plus the phase derivative.

    Attributes
    ----------
    mean : (4,) ndarray
        Expectation values of the four quadratures.
    gamma : (4, 4) ndarray
        Symmetrized covariance,
        ``gamma_ij = (<r_i r_j> + <r_j r_i>)/2 - <r_i><r_j>``.
    dmean_dphi : (4,) ndarray
        Derivative of ``mean`` with respect to ``phi``.
    spec : HeraldedStateSpec, optional
        The state the moments were computed for, when known.  Numeric
        moment sets for mixed states leave this unset.
    """

    mean: np.ndarray
    gamma: np.ndarray
    dmean_dphi: np.ndarray
    spec: Optional[HeraldedStateSpec] = field(default=None)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        dmean = np.asarray(self.dmean_dphi, dtype=float)
        if mean.shape != (4,) or dmean.shape != (4,) or gamma.shape != (4, 4):
            raise ValueError("MomentSet requires mean (4,), gamma (4,4), dmean_dphi (4,)")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(gamma)) and np.all(np.isfinite(dmean))):
            raise ValueError("MomentSet entries must be finite")
        if not np.allclose(gamma, gamma.T, atol=1e-10):
            raise ValueError("gamma must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "gamma", 0.5 * (gamma + gamma.T))
        object.__setattr__(self, "dmean_dphi", dmean)


def norm_sq(spec: HeraldedStateSpec) -> float:
    """Squared norm ``2 (1 + |alpha|^2 (1 + cos phi))`` of the unnormalized state."""
    return 2.0 * (1.0 + spec.alpha_sq * (1.0 + math.cos(spec.phi)))


def _first_raw(alpha: complex, phi: float, theta: float) -> float:
    """Mode-1 first moment <q1(theta)> for delocalization phase ``phi``."""
    at = alpha * np.exp(-1j * theta)
    b = abs(alpha) ** 2
    m = 4.0 * (1.0 + b * (1.0 + math.cos(phi)))  # 2 * squared norm
    num = (
        at * np.exp(-1j * phi)
        + np.conj(at) * np.exp(1j * phi)
        + 2.0 * at.real * (2.0 * b * (math.cos(phi) + 1.0) + 3.0)
    )
    return float(num.real) / m


def _dfirst_raw(alpha: complex, phi: float, theta: float) -> float:
    """Analytic d<q1(theta)>/dphi, same parametrization as :func:`_first_raw`."""
    at = alpha * np.exp(-1j * theta)
    b = abs(alpha) ** 2
    c, s = math.cos(phi), math.sin(phi)
    num = (
        at * np.exp(-1j * phi)
        + np.conj(at) * np.exp(1j * phi)
        + 2.0 * at.real * (2.0 * b * (c + 1.0) + 3.0)
    ).real
    dnum = 2.0 * (at * np.exp(-1j * phi)).imag - 4.0 * b * s * at.real
    m = 4.0 * (1.0 + b * (1.0 + c))
    dm = -4.0 * b * s
    return (dnum * m - num * dm) / (m * m)


def _second_raw_same(alpha: complex, phi: float, t1: float, t2: float) -> complex:
    """Mode-1 operator-ordered second moment <q1(t1) q1(t2)> (complex for t1 != t2)."""
    a1 = alpha * np.exp(-1j * t1)
    a2 = alpha * np.exp(-1j * t2)
    b = abs(alpha) ** 2
    c = math.cos(phi)
    num = (
        a1 * a2 * (b * (c + 1.0) + np.exp(-1j * phi) + 2.0)
        + np.conj(a1 * a2) * (b * (c + 1.0) + np.exp(1j * phi) + 2.0)
        + math.cos(t1 - t2) * (2.0 * b * b * (c + 1.0) + 2.0 * b * (c + 2.0) + 1.0)
        + np.exp(-1j * (t1 - t2)) * (b * (c + 1.0) + 1.0)
    )
    return complex(num) / (2.0 * 2.0 * (1.0 + b * (1.0 + c)))


def _second_raw_cross(alpha: complex, phi: float, t1: float, t2: float) -> float:
    """Mixed-mode second moment <q1(t1) q2(t2)>; real because the modes commute."""
    a1 = alpha * np.exp(-1j * t1)
    a2 = alpha * np.exp(-1j * t2)
    b = abs(alpha) ** 2
    c = math.cos(phi)
    num = (
        4.0 * b * math.cos(t1 - t2)
        + (2.0 * b + 1.0) * math.cos(t1 - t2 + phi)
        + b * (c + 1.0) * (2.0 * a1.real) * (2.0 * a2.real)
        + (c + 2.0) * 2.0 * (a1 * a2).real
    )
    return float(num) / (2.0 * 2.0 * (1.0 + b * (1.0 + c)))


def first_moment(spec: HeraldedStateSpec, mode: int, lo_phase: float) -> float:
    """Expectation value ``<q_mode(lo_phase)>``.

    Parameters
    ----------
    spec : HeraldedStateSpec
    mode : {1, 2}
        Which temporal mode the homodyne addresses.
    lo_phase : float
        Local-oscillator phase ``theta`` of the measured quadrature.
    """
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    theta = require_finite_real("lo_phase", lo_phase)
    phi = spec.phi if mode == 1 else -spec.phi
    return _first_raw(spec.alpha, phi, theta)


def second_moment(spec: HeraldedStateSpec, mode_pair, lo_phases) -> complex:
    """Operator-ordered second moment ``<q_i(theta_i) q_j(theta_j)>``.

    Returns a complex number: same-mode moments with different LO phases
    carry an imaginary (commutator) part.  Mixed-mode moments are real;
    the numeric cross-check that the two orderings agree lives in the
    Fock tests.
    """
    i, j = mode_pair
    if i not in (1, 2) or j not in (1, 2):
        raise ValueError(f"mode_pair entries must be 1 or 2, got {mode_pair}")
    t_i = require_finite_real("lo_phases[0]", lo_phases[0])
    t_j = require_finite_real("lo_phases[1]", lo_phases[1])
    if i == j:
        phi = spec.phi if i == 1 else -spec.phi
        return _second_raw_same(spec.alpha, phi, t_i, t_j)
    if i == 1:
        return complex(_second_raw_cross(spec.alpha, spec.phi, t_i, t_j))
    # <q2(ti) q1(tj)> equals <q1(tj) q2(ti)> since the modes commute.
    return complex(_second_raw_cross(spec.alpha, spec.phi, t_j, t_i))


def mean_vector(spec: HeraldedStateSpec) -> np.ndarray:
    """Mean of ``(x1, p1, x2, p2)``."""
    return np.array([first_moment(spec, m, t) for m, t in QUADRATURE_PHASES])


def mean_vector_derivative(spec: HeraldedStateSpec) -> np.ndarray:
    """Analytic ``d mean / d phi``.

    Mode-2 components use the chain rule on the ``phi -> -phi`` relation.
    Cross-checked against central finite differences in the test suite.
    """
    out = np.empty(4)
    for k, (mode, theta) in enumerate(QUADRATURE_PHASES):
        if mode == 1:
            out[k] = _dfirst_raw(spec.alpha, spec.phi, theta)
        else:
            out[k] = -_dfirst_raw(spec.alpha, -spec.phi, theta)
    return out


def covariance_matrix(spec: HeraldedStateSpec) -> np.ndarray:
    """Symmetrized covariance of ``(x1, p1, x2, p2)``.

    For Hermitian quadratures ``<q_a q_b>* = <q_b q_a>``, so the
    symmetrized moment is the real part of either ordering.
    """
    mv = mean_vector(spec)
    gamma = np.empty((4, 4))
    for a in range(4):
        ma, ta = QUADRATURE_PHASES[a]
        for b in range(a, 4):
            mb, tb = QUADRATURE_PHASES[b]
            raw = second_moment(spec, (ma, mb), (ta, tb))
            gamma[a, b] = gamma[b, a] = raw.real - mv[a] * mv[b]
    return gamma


def assemble(spec: HeraldedStateSpec) -> MomentSet:
    """Closed-form MomentSet: mean, covariance, and analytic phase derivative."""
    return MomentSet(
        mean=mean_vector(spec),
        gamma=covariance_matrix(spec),
        dmean_dphi=mean_vector_derivative(spec),
        spec=spec,
    )
