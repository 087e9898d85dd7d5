"""Imperfection model: preparation impurity and detection loss.

Two parameters capture the dominant imperfections of the heralded state
``(a1+ + e^{i phi} a2+)|alpha, alpha>`` measured by double homodyne:

* ``eta_p``: probability that the heralding click actually prepared the
  photon-added state.  With probability ``1 - eta_p`` the click was
  spurious and the unmodified two-mode coherent state is measured.
* ``eta_d``: total detection transmission per mode, modeled as a beam
  splitter of transmissivity ``eta_d`` mixing in vacuum before an ideal
  homodyne detector.

All closed forms below are for real ``alpha`` and the difference
observable ``X = p1 - p2`` built from the two phase quadratures
(vacuum quadrature variance 1/4 convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._validation import require_finite_real, require_in_unit_interval
from .exceptions import ConfigError

__all__ = [
    "EfficiencyPair",
    "EmpiricalEtaP",
    "eta_p_of_alpha",
    "lossy_mean_x",
    "lossy_var_x",
    "lossy_sensitivity",
]


@dataclass(frozen=True)
class EfficiencyPair:
    """Preparation purity ``eta_p`` and detection transmission ``eta_d``.

    Both lie in [0, 1]; ``EfficiencyPair(1.0, 1.0)`` is the ideal case and
    ``eta_d = 0`` leaves nothing but vacuum noise at the detectors.
    """

    eta_p: float
    eta_d: float

    def __post_init__(self):
        object.__setattr__(self, "eta_p", require_in_unit_interval("eta_p", self.eta_p))
        object.__setattr__(self, "eta_d", require_in_unit_interval("eta_d", self.eta_d))

    @property
    def product(self) -> float:
        return self.eta_p * self.eta_d


@dataclass(frozen=True)
class EmpiricalEtaP:
    """Empirical model of preparation purity versus seed amplitude.

    The purity of the conditional photon addition degrades as the seed
    beams grow brighter,

        eta_p(alpha) = eta_p_sp / (visibility_coeff * alpha^2 + 1),

    where ``eta_p_sp`` is the purity measured with the seed blocked
    (spontaneous regime) and ``visibility_coeff`` encodes how quickly the
    stimulated events are diluted by uncorrelated ones.
    """

    eta_p_sp: float = 0.92
    visibility_coeff: float = 0.0052

    def __post_init__(self):
        object.__setattr__(
            self, "eta_p_sp", require_in_unit_interval("eta_p_sp", self.eta_p_sp, open_left=True)
        )
        coeff = require_finite_real("visibility_coeff", self.visibility_coeff)
        if coeff < 0:
            raise ConfigError(f"visibility_coeff must be >= 0, got {coeff}")
        object.__setattr__(self, "visibility_coeff", coeff)


def eta_p_of_alpha(alpha, model: EmpiricalEtaP = EmpiricalEtaP()) -> float:
    """Preparation purity predicted by the empirical model at seed amplitude ``alpha``."""
    a = require_finite_real("alpha", alpha)
    return model.eta_p_sp / (model.visibility_coeff * a * a + 1.0)


def lossy_mean_x(alpha, phi, eff: EfficiencyPair) -> float:
    """Mean of ``X = p1 - p2`` including preparation impurity and loss.

        <X> = -alpha * eta_p * sqrt(eta_d) * sin(phi) / (1 + (1 + cos phi) alpha^2)

    The spurious-preparation branch contributes zero mean (the coherent
    state has equal phase quadratures in both modes), so the ideal mean
    is scaled by ``eta_p`` and by ``sqrt(eta_d)`` from the beam splitter.
    """
    a = require_finite_real("alpha", alpha)
    p = require_finite_real("phi", phi)
    denom = 1.0 + (1.0 + math.cos(p)) * a * a
    return -a * eff.eta_p * math.sqrt(eff.eta_d) * math.sin(p) / denom


def lossy_var_x(alpha, phi, eff: EfficiencyPair) -> float:
    """Variance of ``X = p1 - p2`` including preparation impurity and loss.

    Closed form (real ``alpha``, ``K = 1 + (1 + cos phi) alpha^2``):

        (dX)^2 = [cos(phi) (alpha^2 - eta_d eta_p) + alpha^2 + eta_d eta_p + 1] / (2 K)
                 - alpha^2 eta_d eta_p^2 sin^2(phi) / K^2

    At ``phi = pi`` this reduces to ``1/2 + eta_d * eta_p``.
    """
    a = require_finite_real("alpha", alpha)
    p = require_finite_real("phi", phi)
    e = eff.product
    k = 1.0 + (1.0 + math.cos(p)) * a * a
    first = (math.cos(p) * (a * a - e) + a * a + e + 1.0) / (2.0 * k)
    second = a * a * eff.eta_d * eff.eta_p**2 * math.sin(p) ** 2 / k**2
    return first - second


def lossy_sensitivity(alpha, eff: EfficiencyPair) -> float:
    """Phase sensitivity of ``X = p1 - p2`` at the optimal point ``phi = pi``.

        S = |d<X>/dphi|^2 / (dX)^2 = 2 alpha^2 eta_d eta_p^2 / (1 + 2 eta_d eta_p)

    Monotonically increasing in each of ``alpha^2``, ``eta_p``, ``eta_d``;
    reduces to the ideal ``(2/3) alpha^2`` at ``eta_p = eta_d = 1``.
    """
    a = require_finite_real("alpha", alpha)
    return 2.0 * a * a * eff.eta_d * eff.eta_p**2 / (1.0 + 2.0 * eff.product)
