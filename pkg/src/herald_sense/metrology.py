"""Observable optimization and metrological benchmarks.

Given the quadrature moments of the heralded state, the best linear
homodyne combination ``X = c . (x1, p1, x2, p2)`` for estimating the
delocalization phase maximizes the method-of-moments sensitivity

    S(c) = |d<X>/dphi|^2 / Var(X) = (c . D)^2 / (c^T Gamma c),

whose optimum over ``c`` is the quadratic form ``s_opt = D^T Gamma^{-1} D``
attained at ``c ~ Gamma^{-1} D``.  The quantum Fisher information bounds
``s_opt`` from above for any measurement.

The 4x4 solve is done with explicit partially pivoted elimination and a
condition-number guard: the dimension is fixed and tiny, and this keeps
the optimization step free of any general linear-algebra backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import require_finite_real
from .exceptions import ConfigError, DegenerateVarianceError, SingularCovarianceError
from .moments import HeraldedStateSpec, MomentSet

__all__ = [
    "DIFFERENCE_COEFFS",
    "ObservableCoefficients",
    "SensitivityReport",
    "sensitivity_of",
    "optimize_observable",
    "qfi",
    "npt",
    "heralding_rate",
]

# p1 - p2, the workhorse observable (optimal at phi = pi for real alpha).
DIFFERENCE_COEFFS = (0.0, 1.0, 0.0, -1.0)

CONDITION_LIMIT = 1e10
DEGENERATE_TOL = 1e-12
COEFF_NORM = math.sqrt(2.0)


@dataclass(frozen=True)
class ObservableCoefficients:
    """Coefficients of ``X = c . (x1, p1, x2, p2)``, normalized to ``sqrt(2)``.

    The ``sqrt(2)`` norm makes the plain difference observables
    ``(0, 1, 0, -1)`` and ``(1, 0, -1, 0)`` canonical representatives.
    Use :meth:`from_vector` to normalize an arbitrary direction; the
    overall sign is fixed so the first component of meaningful size
    (above 1e-12) is positive.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (4,):
            raise ValueError(f"coefficients must have shape (4,), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        nrm = float(np.sqrt(v @ v))
        if abs(nrm - COEFF_NORM) > 1e-9:
            raise ValueError(
                f"coefficients must have Euclidean norm sqrt(2), got {nrm!r}; "
                "build with ObservableCoefficients.from_vector"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def from_vector(cls, c) -> "ObservableCoefficients":
        v = np.asarray(c, dtype=float)
        if v.shape != (4,):
            raise ValueError(f"coefficients must have shape (4,), got {v.shape}")
        nrm = float(np.sqrt(v @ v))
        if not np.all(np.isfinite(v)) or nrm == 0.0:
            raise ValueError("coefficients must be finite and nonzero")
        v = v * (COEFF_NORM / nrm)
        sign_tol = 1e-12
        lead = v[np.flatnonzero(np.abs(v) > sign_tol)[0]]
        if lead < 0:
            v = -v
        return cls(v)


@dataclass(frozen=True)
class SensitivityReport:
    """Optimization outcome at one working point.

    ``s_of_c`` is the sensitivity of the supplied (or default difference)
    coefficients, ``s_opt`` the optimum over all coefficients, and ``qfi``
    the quantum Fisher information when the moments describe a pure
    heralded state (``None`` for numeric mixed-state moment sets).
    Whenever all three are present, ``s_of_c <= s_opt <= qfi`` up to
    numerical slack.
    """

    s_of_c: float
    s_opt: float
    c_opt: ObservableCoefficients
    qfi: Optional[float] = None


def _solve_pivoted_4x4(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Partially pivoted Gauss-Jordan solve with a 1-norm condition guard."""
    n = 4
    aug = np.hstack([a.astype(float), np.eye(n), rhs.reshape(n, 1).astype(float)])
    scale = float(np.abs(a).max())
    if scale == 0.0 or not np.isfinite(scale):
        raise SingularCovarianceError("covariance matrix is zero or non-finite")
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < 1e-14 * scale:
            raise SingularCovarianceError(
                f"covariance matrix is singular (pivot {abs(aug[piv, col]):.3e})"
            )
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    inv = aug[:, n : 2 * n]
    cond = float(np.abs(a).sum(axis=0).max() * np.abs(inv).sum(axis=0).max())
    if cond > CONDITION_LIMIT:
        raise SingularCovarianceError(
            f"covariance matrix condition number {cond:.3e} exceeds {CONDITION_LIMIT:.1e}"
        )
    return aug[:, -1]


def sensitivity_of(m: MomentSet, c) -> float:
    """Sensitivity ``(c . D)^2 / (c^T Gamma c)`` of one coefficient vector.

    Invariant under rescaling of ``c``.  Raises DegenerateVarianceError
    when the observable variance vanishes to within tolerance.
    """
    if isinstance(c, ObservableCoefficients):
        c = c.values
    v = np.asarray(c, dtype=float)
    if v.shape != (4,) or not np.all(np.isfinite(v)):
        raise ValueError("c must be a finite length-4 vector")
    var = float(v @ m.gamma @ v)
    if var <= DEGENERATE_TOL * float(v @ v):
        raise DegenerateVarianceError(f"observable variance {var!r} is degenerate")
    grad = float(v @ m.dmean_dphi)
    return grad * grad / var


def optimize_observable(m: MomentSet, c=DIFFERENCE_COEFFS) -> SensitivityReport:
    """Best linear homodyne combination for the given moments.

    Solves ``Gamma y = D`` and reports ``s_opt = D . y`` along with the
    normalized optimal coefficients and, when the moments carry a pure
    heralded-state spec, the quantum Fisher information.

    When the derivative vector vanishes identically (no seed light), the
    sensitivity is zero for every choice of coefficients; the canonical
    difference observable is reported as the representative optimum.
    """
    if not np.any(m.dmean_dphi != 0.0):
        s_opt = 0.0
        c_opt = ObservableCoefficients.from_vector(DIFFERENCE_COEFFS)
    else:
        y = _solve_pivoted_4x4(m.gamma, m.dmean_dphi)
        s_opt = float(m.dmean_dphi @ y)
        c_opt = ObservableCoefficients.from_vector(y)
    return SensitivityReport(
        s_of_c=sensitivity_of(m, c),
        s_opt=s_opt,
        c_opt=c_opt,
        qfi=qfi(m.spec) if m.spec is not None else None,
    )


def qfi(spec: HeraldedStateSpec) -> float:
    """Quantum Fisher information of the pure heralded state.

        F_Q = (2 |alpha|^2 + 1) / (1 + |alpha|^2 (1 + cos phi))^2

    Equals 1 for the bare delocalized photon (alpha = 0) at every phase
    and peaks at ``2 |alpha|^2 + 1`` for phi = pi.
    """
    b = spec.alpha_sq
    return (2.0 * b + 1.0) / (1.0 + b * (1.0 + math.cos(spec.phi))) ** 2


def npt(spec: HeraldedStateSpec) -> float:
    """Closed-form partial-transpose negativity score of the heralded state.

        NPT = 1 / (1 + |alpha|^2 (1 + cos phi))

    Normalized to twice the sum of negative partial-transpose eigenvalues
    so the alpha = 0, phi = pi Bell state scores exactly 1.  Strictly
    increasing in phi on [0, pi] for alpha != 0.
    """
    return 1.0 / (1.0 + spec.alpha_sq * (1.0 + math.cos(spec.phi)))


def heralding_rate(spec: HeraldedStateSpec, g_squared) -> float:
    """Success probability per trial of the heralded addition.

    Proportional to the squared norm of the unnormalized heralded vector:
    ``g^2 (1 + (1 + cos phi) |alpha|^2)``, where ``g^2`` is the bare
    two-photon emission probability of the addition stage (dimensionless,
    much smaller than 1; the phase-insensitive floor at phi = pi).
    """
    g2 = require_finite_real("g_squared", g_squared)
    if not 0.0 < g2 < 1.0:
        raise ConfigError(f"g_squared must lie in (0, 1), got {g2}")
    return g2 * (1.0 + spec.alpha_sq * (1.0 + math.cos(spec.phi)))
