"""Monte Carlo generation of double-homodyne quadrature records.

The joint density of simultaneous ``q1(theta1)`` and ``q2(theta2)``
homodyne outcomes on the heralded state has a closed form.  Writing
``a_t = alpha e^{-i t}``, ``u_j = 2 q_j - a_{t_j}``, ``c_1 = e^{-i t1}``
and ``c_2 = e^{i phi} e^{-i t2}``, the amplitude for the outcome pair is
proportional to ``(c_1 u_1 + c_2 u_2)`` times two outcome Gaussians, so

    pdf(q1, q2) = |c1 u1 + c2 u2|^2 G(q1) G(q2) / (2 (1 + |alpha|^2 (1 + cos phi)))

with ``G`` the normal density of mean ``Re a_t`` and variance 1/4.  Both
the marginal of ``q1`` and the conditional of ``q2`` then belong to the
two-parameter family

    f(t) ~ ((2 t - s)^2 + b) exp(-2 t^2),      t = q - Re a_t,

whose CDF is analytic.  The marginal is drawn through a tabulated
inverse CDF (monotone cubic interpolation on the sampler grid); the
conditional's ``(s, b)`` depend on the drawn ``q1``, so it is drawn
exactly per record as a two-component mixture: a vacuum-width Gaussian
with weight ``b / (1 + s^2 + b)``, otherwise the ``b = 0`` member
inverted with a bracketed Newton iteration on the analytic CDF.

Imperfections act exactly as in the closed-form model: with probability
``1 - eta_p`` the record is drawn from the two-mode coherent state, and
detection loss maps each quadrature through
``q -> sqrt(eta_d) q + sqrt(1 - eta_d) N(0, 1/4)``.

Determinism: records are generated in fixed-size blocks of
``STREAM_BLOCK`` records; block ``j`` uses the Philox stream derived from
``SeedSequence(seed, spawn_key=(j,))`` and consumes a fixed number of
variates per record.  The output is therefore a pure function of
``(seed, n)``, independent of batch size or worker count, and blocks can
be generated in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import erf

from ._io import format_float, meta_sidecar_path, version_comment, write_json
from ._validation import require_finite_real
from .exceptions import ConfigError
from .moments import HeraldedStateSpec
from .noise import EfficiencyPair
from ._version import VERSION

__all__ = [
    "PHASE_QUADRATURES",
    "STREAM_BLOCK",
    "QuadratureRecord",
    "SamplerConfig",
    "joint_pdf",
    "marginal_pdf",
    "draw",
    "sample_stream_to_file",
]

# Default local-oscillator phases: the phase quadrature of each mode.
PHASE_QUADRATURES = (math.pi / 2.0, math.pi / 2.0)

STREAM_BLOCK = 65536
GENERATOR_NAME = "philox4x64 (numpy.random.Philox)"

# Probability mass allowed outside the tabulation grid.
GRID_MASS_TOL = 1e-10
_CDF_INCREMENT_FLOOR = 1e-13

_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
_NEWTON_BRACKET = 8.0


class QuadratureRecord(NamedTuple):
    """One simultaneous double-homodyne outcome."""

    p1: float
    p2: float


@dataclass(frozen=True)
class SamplerConfig:
    """Grid and stream parameters of the quadrature sampler.

    ``grid_halfwidth=None`` resolves to ``|alpha| + 6`` at draw time,
    wide enough that the mass outside the grid stays below 1e-10.
    """

    seed: int = 0
    grid_halfwidth: Optional[float] = None
    grid_points: int = 4096
    batch: int = 65536

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.grid_halfwidth is not None:
            hw = require_finite_real("grid_halfwidth", self.grid_halfwidth)
            if hw <= 0:
                raise ConfigError(f"grid_halfwidth must be positive, got {hw}")
            object.__setattr__(self, "grid_halfwidth", hw)
        if int(self.grid_points) != self.grid_points or self.grid_points < 64:
            raise ConfigError(f"grid_points must be an integer >= 64, got {self.grid_points!r}")
        object.__setattr__(self, "grid_points", int(self.grid_points))
        if int(self.batch) != self.batch or self.batch < 1:
            raise ConfigError(f"batch must be a positive integer, got {self.batch!r}")
        object.__setattr__(self, "batch", int(self.batch))

    def resolved_halfwidth(self, alpha) -> float:
        if self.grid_halfwidth is not None:
            return self.grid_halfwidth
        return abs(alpha) + 6.0


def _lo_tuple(lo_phases) -> Tuple[float, float]:
    t1 = require_finite_real("lo_phases[0]", lo_phases[0])
    t2 = require_finite_real("lo_phases[1]", lo_phases[1])
    return t1, t2


def joint_pdf(spec: HeraldedStateSpec, p1, p2, lo_phases=PHASE_QUADRATURES):
    """Joint outcome density of ``(q1(theta1), q2(theta2))`` on the ideal state.

    Broadcasts over ``p1`` and ``p2``.  Normalized to unit mass over the
    plane; the test suite checks this by numerical double integration.
    """
    t1, t2 = _lo_tuple(lo_phases)
    a1 = spec.alpha * np.exp(-1j * t1)
    a2 = spec.alpha * np.exp(-1j * t2)
    c1 = np.exp(-1j * t1)
    c2 = np.exp(1j * (spec.phi - t2))
    q1 = np.asarray(p1, dtype=float)
    q2 = np.asarray(p2, dtype=float)
    u1 = 2.0 * q1 - a1
    u2 = 2.0 * q2 - a2
    g1 = math.sqrt(2.0 / math.pi) * np.exp(-2.0 * (q1 - a1.real) ** 2)
    g2 = math.sqrt(2.0 / math.pi) * np.exp(-2.0 * (q2 - a2.real) ** 2)
    norm_sq = 2.0 * (1.0 + abs(spec.alpha) ** 2 * (1.0 + math.cos(spec.phi)))
    return np.abs(c1 * u1 + c2 * u2) ** 2 * g1 * g2 / norm_sq


def _marginal_params(spec: HeraldedStateSpec, lo_phases) -> tuple[float, float, float]:
    """(mu, s, b) of the q1 marginal in the quadratic-Gaussian family."""
    t1, t2 = _lo_tuple(lo_phases)
    a1 = spec.alpha * np.exp(-1j * t1)
    a2 = spec.alpha * np.exp(-1j * t2)
    c1 = np.exp(-1j * t1)
    c2 = np.exp(1j * (spec.phi - t2))
    w = np.conj(c1) * c2 * np.conj(a2)
    zeta = a1 - w
    mu = float(a1.real)
    s = float(-(a1 + w).real)
    b = float(zeta.imag**2 + 1.0)
    return mu, s, b


def _quad_gauss_pdf(t, s, b):
    nrm = 1.0 + s * s + b
    return ((2.0 * t - s) ** 2 + b) * np.exp(-2.0 * t * t) / (_SQRT_HALF_PI * nrm)


def _quad_gauss_cdf(t, s, b):
    """CDF of the density ~ ((2t - s)^2 + b) exp(-2 t^2)."""
    nrm = 1.0 + s * s + b
    i0 = math.sqrt(math.pi / 8.0) * (1.0 + erf(math.sqrt(2.0) * t))
    return (nrm * i0 + (s - t) * np.exp(-2.0 * t * t)) / (_SQRT_HALF_PI * nrm)


def marginal_pdf(spec: HeraldedStateSpec, p1, lo_phases=PHASE_QUADRATURES):
    """Single-mode marginal of :func:`joint_pdf` for the first record entry."""
    mu, s, b = _marginal_params(spec, lo_phases)
    t = np.asarray(p1, dtype=float) - mu
    return _quad_gauss_pdf(t, s, b)


def _tabulated_inverse_cdf(spec: HeraldedStateSpec, cfg: SamplerConfig, lo_phases):
    """Monotone-cubic inverse of the marginal CDF tabulated on the grid."""
    mu, s, b = _marginal_params(spec, lo_phases)
    hw = cfg.resolved_halfwidth(spec.alpha)
    grid = np.linspace(-hw, hw, cfg.grid_points)
    cdf = _quad_gauss_cdf(grid - mu, s, b)
    outside = cdf[0] + (1.0 - cdf[-1])
    if outside > GRID_MASS_TOL:
        raise ConfigError(
            f"probability mass {outside:.3e} lies outside the sampler grid "
            f"(halfwidth {hw}); widen grid_halfwidth"
        )
    cdf = np.maximum.accumulate(cdf)
    # Drop knots in the flat tails where the CDF creeps by rounding-level
    # increments; keeping them would give the monotone interpolant
    # near-infinite slopes.  The discarded mass is below grid tolerance.
    keep = np.concatenate(([True], np.diff(cdf) > _CDF_INCREMENT_FLOOR))
    return PchipInterpolator(cdf[keep], grid[keep], extrapolate=False), cdf[keep][0], cdf[keep][-1]


def _newton_conditional(s, u, max_iter=100, tol=1e-13):
    """Solve CDF(t; s, b=0) = u for each record, bracketed in [-8, 8].

    Newton steps with a bisection fallback whenever the step leaves the
    current bracket (the density has a node at t = s/2, so raw Newton can
    stall there).  Converges to float precision in a dozen iterations.
    """
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    lo = np.full_like(s, -_NEWTON_BRACKET)
    hi = np.full_like(s, _NEWTON_BRACKET)
    t = np.zeros_like(s)
    for _ in range(max_iter):
        f = _quad_gauss_cdf(t, s, 0.0) - u
        lo = np.where(f < 0.0, t, lo)
        hi = np.where(f >= 0.0, t, hi)
        step = f / np.maximum(_quad_gauss_pdf(t, s, 0.0), 1e-300)
        t_new = t - step
        bad = ~np.isfinite(t_new) | (t_new <= lo) | (t_new >= hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        done = np.abs(t_new - t) < tol
        t = t_new
        if bool(np.all(done)):
            break
    return t


def _draw_block(spec, eff, cfg, lo_phases, block_index, size, inv_cdf):
    """Draw one deterministic block of records (fixed variate budget)."""
    t1, t2 = _lo_tuple(lo_phases)
    a1 = spec.alpha * np.exp(-1j * t1)
    a2 = spec.alpha * np.exp(-1j * t2)
    c1 = np.exp(-1j * t1)
    c2 = np.exp(1j * (spec.phi - t2))
    mu1, mu2 = float(a1.real), float(a2.real)
    interp, u_lo, u_hi = inv_cdf

    seq = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(block_index,))
    rng = np.random.Generator(np.random.Philox(seq))
    uni = rng.random((size, 4))
    nrm = rng.standard_normal((size, 4))

    ideal = uni[:, 0] < eff.eta_p
    p1 = np.where(ideal, interp(np.clip(uni[:, 1], u_lo, u_hi)), mu1 + 0.5 * nrm[:, 0])

    u1 = 2.0 * p1 - a1
    k = np.conj(c2) * c1 * u1
    zeta2 = a2 - k
    s2 = -(a2 + k).real
    b2 = zeta2.imag**2
    w_gauss = b2 / (1.0 + s2 * s2 + b2)
    gauss_comp = uni[:, 2] < w_gauss
    t_cond = np.where(
        gauss_comp, 0.5 * nrm[:, 0], _newton_conditional(s2, uni[:, 3])
    )
    p2 = np.where(ideal, mu2 + t_cond, mu2 + 0.5 * nrm[:, 1])

    root_t = math.sqrt(eff.eta_d)
    root_r = math.sqrt(1.0 - eff.eta_d)
    p1 = root_t * p1 + root_r * 0.5 * nrm[:, 2]
    p2 = root_t * p2 + root_r * 0.5 * nrm[:, 3]
    return np.column_stack([p1, p2])


def draw(
    spec: HeraldedStateSpec,
    eff: EfficiencyPair,
    n: int,
    config: SamplerConfig = SamplerConfig(),
    lo_phases=PHASE_QUADRATURES,
) -> np.ndarray:
    """Draw ``n`` quadrature records; returns an ``(n, 2)`` float array.

    Column 0 is the mode-1 outcome, column 1 the mode-2 outcome, both at
    the configured local-oscillator phases (phase quadratures by default).
    Deterministic given ``(config.seed, n)``.
    """
    if int(n) != n or n < 0:
        raise ConfigError(f"n must be a nonnegative integer, got {n!r}")
    n = int(n)
    if n == 0:
        return np.empty((0, 2))
    inv_cdf = _tabulated_inverse_cdf(spec, config, lo_phases)
    blocks = []
    for j in range(0, (n + STREAM_BLOCK - 1) // STREAM_BLOCK):
        size = min(STREAM_BLOCK, n - j * STREAM_BLOCK)
        blocks.append(_draw_block(spec, eff, config, lo_phases, j, size, inv_cdf))
    return np.concatenate(blocks, axis=0)


def sample_stream_to_file(
    path,
    spec: HeraldedStateSpec,
    eff: EfficiencyPair,
    n: int,
    config: SamplerConfig = SamplerConfig(),
    lo_phases=PHASE_QUADRATURES,
) -> dict:
    """Stream ``n`` records to a CSV file plus a ``.meta.json`` sidecar.

    The CSV carries one ``# herald-sense <version>`` comment line, a
    ``p1,p2`` header, and one record per row with 17 significant digits.
    Records are written in ``config.batch``-sized batches but the values
    depend only on ``(config.seed, n)``.  Returns the sidecar metadata.
    """
    import io
    import os
    import tempfile
    from pathlib import Path

    if int(n) != n or n < 0:
        raise ConfigError(f"n must be a nonnegative integer, got {n!r}")
    n = int(n)
    inv_cdf = _tabulated_inverse_cdf(spec, config, lo_phases) if n else None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(version_comment() + "\r\n")
            fh.write("p1,p2\r\n")
            written = 0
            block_index = 0
            buf = io.StringIO()
            while written < n:
                size = min(STREAM_BLOCK, n - written)
                block = _draw_block(spec, eff, config, lo_phases, block_index, size, inv_cdf)
                for row in block:
                    buf.write(f"{format_float(row[0])},{format_float(row[1])}\r\n")
                    if buf.tell() >= config.batch * 48:
                        fh.write(buf.getvalue())
                        buf = io.StringIO()
                written += size
                block_index += 1
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

    alpha = spec.alpha
    meta = {
        "format": "herald-sense quadrature records",
        "version": VERSION,
        "alpha": alpha.real if alpha.imag == 0.0 else [alpha.real, alpha.imag],
        "phi_true": spec.phi,
        "eta_p": eff.eta_p,
        "eta_d": eff.eta_d,
        "seed": config.seed,
        "n_records": n,
        "generator": GENERATOR_NAME,
        "stream_block": STREAM_BLOCK,
        "numpy_version": np.__version__,
        "grid_halfwidth": config.resolved_halfwidth(spec.alpha),
        "grid_points": config.grid_points,
        "batch": config.batch,
        "lo_phases": list(_lo_tuple(lo_phases)),
    }
    write_json(meta_sidecar_path(path), meta)
    return meta
