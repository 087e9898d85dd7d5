"""Brute-force two-mode Fock-space oracle.

Everything here is deliberately unsophisticated: states are dense
``(n_max+1, n_max+1)`` complex amplitude arrays, density matrices are
dense ``(N^2, N^2)`` matrices, operators are explicit truncated matrices,
and channels are explicit Kraus sums.  The closed forms elsewhere in the
package are validated against this module, never the other way around.

Flat indexing convention: ``|n1, n2>`` maps to row ``n1 * N + n2``, which
matches ``np.kron(op1, op2)`` for operators acting on mode 1 and mode 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import gammainc, gammaln

from ._validation import require_finite_complex, require_finite_real
from .exceptions import ConfigError, CutoffTooSmallError
from .moments import QUADRATURE_PHASES, HeraldedStateSpec, MomentSet
from .noise import EfficiencyPair

__all__ = [
    "FockCutoff",
    "TwoModeState",
    "TwoModeDensityMatrix",
    "default_cutoff",
    "coherent_amplitudes",
    "raw_heralded_amplitudes",
    "build_heralded_state",
    "coherent_pair_state",
    "annihilation_matrix",
    "quadrature_matrix",
    "embed",
    "quadrature_operator",
    "expectation",
    "loss_kraus_operators",
    "apply_mixture_and_loss",
    "partial_transpose_negativity",
    "hermite_functions",
    "quadrature_marginal",
    "qfi_overlap",
    "numeric_moment_set",
]

# Relative squared-norm deficit tolerated when truncating the heralded state.
TRUNCATION_DEFICIT_TOL = 1e-10
# Probability tolerated in the top Fock level before expectation values
# of quadrature products are considered unreliable.
EDGE_MASS_TOL = 1e-9


@dataclass(frozen=True)
class FockCutoff:
    """Per-mode truncation: each mode keeps levels ``0 .. n_max``."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @classmethod
    def for_amplitude(cls, alpha) -> "FockCutoff":
        """Default rule ``ceil(|alpha|^2 + 6 |alpha| + 12)``.

        Leaves Poisson tail mass far below 1e-12 for any amplitude, which
        :meth:`tail_mass` can confirm.
        """
        a = abs(require_finite_complex("alpha", alpha))
        return cls(int(math.ceil(a * a + 6.0 * a + 12.0)))

    def tail_mass(self, alpha) -> float:
        """Poisson mass of a coherent state beyond ``n_max``."""
        b = abs(require_finite_complex("alpha", alpha)) ** 2
        if b == 0.0:
            return 0.0
        return float(gammainc(self.n_max + 1, b))


def default_cutoff(alpha) -> int:
    return FockCutoff.for_amplitude(alpha).n_max


def _resolve_nmax(cutoff, alpha) -> int:
    if cutoff is None:
        return default_cutoff(alpha)
    if isinstance(cutoff, FockCutoff):
        return cutoff.n_max
    return FockCutoff(cutoff).n_max


@dataclass(frozen=True)
class TwoModeState:
    """Pure two-mode state: ``amplitudes[n1, n2] = <n1, n2 | psi>``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 2 or amp.shape[0] != amp.shape[1] or amp.shape[0] < 3:
            raise ValueError(f"amplitudes must be square (N, N) with N >= 3, got {amp.shape}")
        nrm = float(np.vdot(amp, amp).real)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state must be normalized, got squared norm {nrm!r}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[0] - 1

    def density_matrix(self) -> "TwoModeDensityMatrix":
        flat = self.amplitudes.reshape(-1)
        return TwoModeDensityMatrix(np.outer(flat, flat.conj()))


@dataclass(frozen=True)
class TwoModeDensityMatrix:
    """Dense two-mode density matrix in the flat ``n1 * N + n2`` basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        n = int(round(math.sqrt(m.shape[0])))
        if n * n != m.shape[0]:
            raise ValueError(f"matrix side {m.shape[0]} is not a perfect square")
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise ValueError("matrix must be Hermitian within 1e-10")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"matrix must have unit trace, got {tr!r}")
        object.__setattr__(self, "matrix", 0.5 * (m + m.conj().T))

    @property
    def n_max(self) -> int:
        return int(round(math.sqrt(self.matrix.shape[0]))) - 1

    def tensor(self) -> np.ndarray:
        n = self.n_max + 1
        return self.matrix.reshape(n, n, n, n)


def coherent_amplitudes(alpha, n_max: int) -> np.ndarray:
    """Fock amplitudes ``e^{-|a|^2/2} a^n / sqrt(n!)`` via a stable recurrence."""
    a = require_finite_complex("alpha", alpha)
    c = np.zeros(n_max + 1, dtype=complex)
    c[0] = math.exp(-abs(a) ** 2 / 2.0)
    for n in range(n_max):
        c[n + 1] = c[n] * a / math.sqrt(n + 1)
    return c


def raw_heralded_amplitudes(alpha, phi, n_max: int) -> np.ndarray:
    """Unnormalized amplitudes of ``(a1+ + e^{i phi} a2+) |alpha, alpha>``."""
    a = require_finite_complex("alpha", alpha)
    p = require_finite_real("phi", phi)
    c = coherent_amplitudes(a, n_max)
    root = np.sqrt(np.arange(1, n_max + 1))
    out = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    out[1:, :] += root[:, None] * c[:-1, None] * c[None, :]
    out[:, 1:] += np.exp(1j * p) * c[:, None] * root[None, :] * c[None, :-1]
    return out


def build_heralded_state(alpha, phi, cutoff=None) -> TwoModeState:
    """Normalized heralded state in a truncated Fock basis.

    Raises CutoffTooSmallError when the truncation loses more than a
    relative squared-norm fraction of ``TRUNCATION_DEFICIT_TOL`` compared
    with the analytic norm ``2 (1 + |alpha|^2 (1 + cos phi))``.
    """
    n_max = _resolve_nmax(cutoff, alpha)
    raw = raw_heralded_amplitudes(alpha, phi, n_max)
    raw_sq = float(np.vdot(raw, raw).real)
    exact_sq = 2.0 * (1.0 + abs(alpha) ** 2 * (1.0 + math.cos(phi)))
    if raw_sq <= 0.0 or (exact_sq - raw_sq) / exact_sq > TRUNCATION_DEFICIT_TOL:
        raise CutoffTooSmallError(
            f"cutoff n_max={n_max} keeps {raw_sq!r} of squared norm {exact_sq!r} "
            f"for alpha={alpha!r}, phi={phi!r}"
        )
    return TwoModeState(raw / math.sqrt(raw_sq))


def coherent_pair_state(alpha, cutoff=None) -> TwoModeState:
    """Truncated product state ``|alpha>_1 |alpha>_2``, renormalized."""
    n_max = _resolve_nmax(cutoff, alpha)
    c = coherent_amplitudes(alpha, n_max)
    amp = np.outer(c, c)
    nrm_sq = float(np.vdot(amp, amp).real)
    if 1.0 - nrm_sq > TRUNCATION_DEFICIT_TOL:
        raise CutoffTooSmallError(
            f"cutoff n_max={n_max} keeps {nrm_sq!r} of the coherent pair's norm"
        )
    return TwoModeState(amp / math.sqrt(nrm_sq))


def annihilation_matrix(n_max: int) -> np.ndarray:
    """Single-mode truncated annihilation operator, ``a[n, n+1] = sqrt(n+1)``."""
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1).astype(complex)


def quadrature_matrix(theta, n_max: int) -> np.ndarray:
    """Single-mode quadrature ``q(theta) = (a e^{-i theta} + a+ e^{i theta}) / 2``."""
    t = require_finite_real("theta", theta)
    a = annihilation_matrix(n_max)
    return 0.5 * (np.exp(-1j * t) * a + np.exp(1j * t) * a.conj().T)


def embed(op: np.ndarray, mode: int, n_max: int) -> np.ndarray:
    """Lift a single-mode operator to the two-mode flat basis."""
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    eye = np.eye(n_max + 1)
    return np.kron(op, eye) if mode == 1 else np.kron(eye, op)


def quadrature_operator(mode: int, theta, n_max: int) -> np.ndarray:
    """Two-mode embedded ``q_mode(theta)``."""
    return embed(quadrature_matrix(theta, n_max), mode, n_max)


def _edge_mass(obj) -> float:
    if isinstance(obj, TwoModeState):
        amp = obj.amplitudes
        return float(
            np.sum(np.abs(amp[-1, :]) ** 2) + np.sum(np.abs(amp[:, -1]) ** 2)
        )
    t = obj.tensor()
    top1 = np.einsum("bb->b", t[-1, :, -1, :]).sum().real
    top2 = np.einsum("aa->a", t[:, -1, :, -1]).sum().real
    return float(top1 + top2)


def expectation(state, ops: Union[np.ndarray, Sequence[np.ndarray]], *, edge_tol=EDGE_MASS_TOL) -> complex:
    """Expectation value of an operator product.

    Parameters
    ----------
    state : TwoModeState or TwoModeDensityMatrix
    ops : ndarray or sequence of ndarray
        Two-mode matrices in the flat basis; a sequence means the operator
        product ``ops[0] @ ops[1] @ ...``.  Pure states only ever see
        matrix-vector products.
    edge_tol : float or None
        Maximum probability allowed in the top Fock level of either mode;
        ``None`` disables the check.  Operator products push population
        across the truncation edge, so a heavy edge makes the result
        unreliable and raises CutoffTooSmallError.
    """
    if isinstance(ops, np.ndarray):
        ops = (ops,)
    if edge_tol is not None:
        edge = _edge_mass(state)
        if edge > edge_tol:
            raise CutoffTooSmallError(
                f"top Fock level holds probability {edge:.3e} > {edge_tol:.1e}; "
                "increase the cutoff"
            )
    if isinstance(state, TwoModeState):
        vec = state.amplitudes.reshape(-1)
        acc = vec
        for op in reversed(ops):
            acc = op @ acc
        return complex(np.vdot(vec, acc))
    if isinstance(state, TwoModeDensityMatrix):
        prod = ops[0]
        for op in ops[1:]:
            prod = prod @ op
        return complex(np.einsum("ij,ji->", state.matrix, prod))
    raise TypeError(f"state must be TwoModeState or TwoModeDensityMatrix, got {type(state)}")


def loss_kraus_operators(eta, n_max: int) -> list[np.ndarray]:
    """Kraus operators of the pure-loss channel with transmission ``eta``.

    ``K_k[m, m+k] = sqrt(binom(m+k, k) (1 - eta)^k eta^m)``: lose ``k``
    photons, damp the survivors.  Trace preservation on the truncated
    space is exact because the truncated ``a^k`` never creates population
    above the cutoff.
    """
    e = require_finite_real("eta", eta)
    if not 0.0 <= e <= 1.0:
        raise ConfigError(f"eta must lie in [0, 1], got {e}")
    n = n_max + 1
    if e == 1.0:
        return [np.eye(n, dtype=complex)]
    if e == 0.0:
        ops = []
        for k in range(n):
            mat = np.zeros((n, n), dtype=complex)
            mat[0, k] = 1.0
            ops.append(mat)
        return ops
    ops = []
    lf = gammaln(np.arange(n + 1) + 1.0)  # log m!
    for k in range(n):
        m = np.arange(n - k)
        logc = (
            lf[m + k] - lf[m] - lf[k]
            + k * math.log(1.0 - e)
            + m * math.log(e)
        )
        mat = np.zeros((n, n), dtype=complex)
        mat[m, m + k] = np.exp(0.5 * logc)
        ops.append(mat)
    return ops


def _apply_channel(rho4: np.ndarray, kraus: list[np.ndarray], mode: int) -> np.ndarray:
    out = np.zeros_like(rho4)
    for k in kraus:
        if mode == 1:
            step = np.tensordot(k, rho4, axes=([1], [0]))        # p,b,c,d
            step = np.tensordot(step, k.conj(), axes=([2], [1]))  # p,b,d,q
            out += step.transpose(0, 1, 3, 2)
        else:
            step = np.tensordot(k, rho4, axes=([1], [1]))        # p,a,c,d
            step = np.tensordot(step, k.conj(), axes=([3], [1]))  # p,a,c,q
            out += step.transpose(1, 0, 2, 3)
    return out


def apply_mixture_and_loss(alpha, phi, eff: EfficiencyPair, cutoff=None) -> TwoModeDensityMatrix:
    """Exact density matrix of the imperfect preparation and detection.

    The heralded state is replaced by the two-mode coherent state with
    probability ``1 - eta_p``, then each mode passes a beam splitter of
    transmission ``eta_d`` (Kraus sum, vacuum traced out).
    """
    n_max = _resolve_nmax(cutoff, alpha)
    psi = build_heralded_state(alpha, phi, n_max).amplitudes
    rho4 = eff.eta_p * np.einsum("ab,cd->abcd", psi, psi.conj())
    if eff.eta_p < 1.0:
        coh = coherent_pair_state(alpha, n_max).amplitudes
        rho4 = rho4 + (1.0 - eff.eta_p) * np.einsum("ab,cd->abcd", coh, coh.conj())
    kraus = loss_kraus_operators(eff.eta_d, n_max)
    rho4 = _apply_channel(rho4, kraus, 1)
    rho4 = _apply_channel(rho4, kraus, 2)
    n = n_max + 1
    mat = rho4.reshape(n * n, n * n)
    mat = 0.5 * (mat + mat.conj().T)
    return TwoModeDensityMatrix(mat / float(np.trace(mat).real))


def partial_transpose_negativity(state) -> float:
    """Twice the sum of negative eigenvalues of the mode-2 partial transpose.

    Calibrated so the alpha -> 0, phi = pi state (a Bell state of the
    vacuum and single-photon levels) scores exactly 1, and any product
    state scores 0.
    """
    if isinstance(state, TwoModeState):
        state = state.density_matrix()
    if not isinstance(state, TwoModeDensityMatrix):
        raise TypeError(f"expected TwoModeState or TwoModeDensityMatrix, got {type(state)}")
    t = state.tensor()
    n = state.n_max + 1
    pt = t.transpose(0, 3, 2, 1).reshape(n * n, n * n)
    ev = np.linalg.eigvalsh(pt)
    return float(2.0 * -ev[ev < 0.0].sum())


def hermite_functions(n_max: int, q) -> np.ndarray:
    """Orthonormal oscillator eigenfunctions on the quadrature axis.

    Row ``n`` is ``phi_n(q)`` in the vacuum-variance-1/4 convention,
    so ``phi_0(q) = (2/pi)^{1/4} exp(-q^2)`` and
    ``phi_{n+1} = (2 q phi_n / sqrt(n+1)) - sqrt(n/(n+1)) phi_{n-1}``.
    """
    qa = np.asarray(q, dtype=float)
    out = np.empty((n_max + 1,) + qa.shape)
    out[0] = (2.0 / math.pi) ** 0.25 * np.exp(-(qa**2))
    if n_max >= 1:
        out[1] = 2.0 * qa * out[0]
    for n in range(1, n_max):
        out[n + 1] = (2.0 * qa * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def quadrature_marginal(state, mode: int, theta, q) -> np.ndarray:
    """Probability density of a ``q_mode(theta)`` homodyne outcome.

    Works for pure states and density matrices by reducing to the
    single-mode density matrix, rotating the Fock phases by ``theta``,
    and summing over oscillator eigenfunctions.
    """
    if isinstance(state, TwoModeState):
        state = state.density_matrix()
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    t = state.tensor()
    red = np.einsum("abcb->ac", t) if mode == 1 else np.einsum("abad->bd", t)
    n = np.arange(red.shape[0])
    rot = np.exp(-1j * require_finite_real("theta", theta) * n)
    red = red * rot[:, None] * rot.conj()[None, :]
    h = hermite_functions(red.shape[0] - 1, q)
    return np.einsum("nm,nq,mq->q", red, h, h).real


def qfi_overlap(alpha, phi, step: float = 1e-5, cutoff=None) -> float:
    """Quantum Fisher information from numerically differentiated states.

    Uses the pure-state overlap form
    ``4 (<d psi | d psi> - |<d psi | psi>|^2)`` with a central difference
    of the Fock amplitude arrays; accurate to O(step^2).
    """
    n_max = _resolve_nmax(cutoff, alpha)
    up = build_heralded_state(alpha, phi + step, n_max).amplitudes
    dn = build_heralded_state(alpha, phi - step, n_max).amplitudes
    mid = build_heralded_state(alpha, phi, n_max).amplitudes
    dpsi = (up - dn) / (2.0 * step)
    return float(
        4.0 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(dpsi, mid)) ** 2)
    )


def _quadrature_stats(state, qops) -> tuple[np.ndarray, np.ndarray]:
    mean = np.array([expectation(state, op).real for op in qops])
    gamma = np.empty((4, 4))
    for a in range(4):
        for b in range(a, 4):
            raw = expectation(state, (qops[a], qops[b]))
            gamma[a, b] = gamma[b, a] = raw.real - mean[a] * mean[b]
    return mean, gamma


def numeric_moment_set(
    alpha,
    phi,
    eff: Optional[EfficiencyPair] = None,
    cutoff=None,
    step: float = 1e-5,
) -> MomentSet:
    """MomentSet computed entirely from truncated-Fock numerics.

    The phase derivative of the mean uses a central difference with the
    given ``step``, rebuilding the state (and, when ``eff`` is given, the
    whole mixture-plus-loss channel) at ``phi +- step``.
    """
    n_max = _resolve_nmax(cutoff, alpha)
    qops = [quadrature_operator(m, t, n_max) for m, t in QUADRATURE_PHASES]

    def prepare(p):
        if eff is None:
            return build_heralded_state(alpha, p, n_max)
        return apply_mixture_and_loss(alpha, p, eff, n_max)

    mean, gamma = _quadrature_stats(prepare(phi), qops)
    mean_up = np.array([expectation(prepare(phi + step), op).real for op in qops])
    mean_dn = np.array([expectation(prepare(phi - step), op).real for op in qops])
    spec = HeraldedStateSpec(alpha, phi) if eff is None else None
    return MomentSet(
        mean=mean,
        gamma=gamma,
        dmean_dphi=(mean_up - mean_dn) / (2.0 * step),
        spec=spec,
    )
