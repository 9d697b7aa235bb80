"""M-ary on-off FSK with energy detection (FSK when nu = 1, OOK when M = 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .channel import ChannelKind, ChannelSpec, NumericalError, expect_over_fading
from .specfun import (
    _solve_increasing,
    bessel_i0_inv_log,
    log_bessel_i0,
    marcum_q1,
    marcum_q1_complement,
)

# Absolute error allowed in the alternating binomial sum for P_{l,l} before
# switching to direct quadrature of the same probability.
ALTERNATING_SUM_ATOL = 1e-11
# Relative accuracy assumed for each term of that sum (exp * Marcum Q).
_TERM_RTOL = 1e-14


@dataclass(frozen=True)
class OofskConfig:
    m: int
    nu: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"number of tones must be an integer >= 1, got {self.m}")
        if not (0 < self.nu <= 1):
            raise ValueError(f"duty cycle must lie in (0, 1], got {self.nu}")

    @property
    def is_fsk(self) -> bool:
        return self.nu == 1

    @property
    def prior(self) -> np.ndarray:
        """Input law over {off, tone 1, ..., tone M}."""
        return np.concatenate([[1.0 - self.nu], np.full(self.m, self.nu / self.m)])


@dataclass(frozen=True)
class DetectorParams:
    alpha_sq: float
    log_xi: float
    tau: float


@dataclass(frozen=True)
class TransitionMatrix:
    """Entry ``p[l, m] = P(y = l | x = m)`` for l, m in 0..M (0 = no transmission).

    Each column is a conditional law and sums to one.
    """

    p: np.ndarray

    @property
    def m(self) -> int:
        return self.p.shape[0] - 1

    def column_sums(self) -> np.ndarray:
        return self.p.sum(axis=0)


def _log_ratio(cfg: OofskConfig) -> float:
    # ln(M (1 - nu) / nu); -inf for FSK
    if cfg.nu == 1:
        return -math.inf
    return math.log(cfg.m) + math.log1p(-cfg.nu) - math.log(cfg.nu)


def _awgn_tau(log_xi: float, alpha_sq: float) -> float:
    if log_xi < 0:
        return 0.0
    if alpha_sq == 0:
        return math.inf
    x = bessel_i0_inv_log(log_xi)
    return x * x / (4.0 * alpha_sq)


def _noncoherent_tau(log_xi: float, alpha_sq: float, d: float, gamma_sq: float) -> float:
    if log_xi < 0:
        return 0.0
    if alpha_sq == 0:
        return math.inf
    sig2 = 1.0 + alpha_sq * gamma_sq
    a = alpha_sq * gamma_sq / sig2
    b = 2.0 * math.sqrt(alpha_sq) * d / sig2
    if b == 0:
        return log_xi / a
    if a == 0:
        x = bessel_i0_inv_log(log_xi) / b
        return x * x
    # log Phi(r^2) = a r^2 + log I0(b r) is increasing in r = sqrt(tau)
    target = np.array([log_xi])
    hi = np.array([min(math.sqrt(log_xi / a), (log_xi + 1.0) / b + 1.0)])
    r = _solve_increasing(
        lambda r: a * r * r + log_bessel_i0(b * r),
        lambda r: 2.0 * a * r + b * special.i1e(b * r) / special.i0e(b * r),
        target, lo=np.zeros(1), hi=hi,
    )
    r = float(r[0])
    return r * r  # may round to inf for denormal snr, which is the right limit


def detector_params(cfg: OofskConfig, snr: float, spec: ChannelSpec,
                    h_sq: float | None = None) -> DetectorParams:
    """Peak SNR, log of the MAP likelihood threshold, and the energy threshold tau.

    AWGN and coherent detection use the AWGN rule with peak SNR
    ``alpha^2 = snr * g / nu``, where ``g`` is ``d^2`` (AWGN) or the realized
    ``h_sq`` (coherent). Noncoherent detection keeps ``alpha^2 = snr / nu``
    and folds d and gamma^2 into the threshold.
    """
    if snr < 0:
        raise ValueError("snr must be >= 0")
    log_ratio = _log_ratio(cfg)
    if spec.kind is ChannelKind.NONCOHERENT:
        alpha_sq = snr / cfg.nu
        sig2 = 1.0 + alpha_sq * spec.gamma_sq
        log_xi = log_ratio + math.log(sig2) + alpha_sq * spec.d**2 / sig2
        return DetectorParams(alpha_sq, log_xi,
                              _noncoherent_tau(log_xi, alpha_sq, spec.d, spec.gamma_sq))
    if spec.kind is ChannelKind.COHERENT:
        if h_sq is None:
            raise TypeError("coherent detection needs the realized |h|^2 (h_sq)")
        gain = h_sq
    else:
        gain = spec.d**2
    alpha_sq = snr * gain / cfg.nu
    log_xi = log_ratio + alpha_sq
    return DetectorParams(alpha_sq, log_xi, _awgn_tau(log_xi, alpha_sq))


def _off_probs(m: int, tau: float):
    """(P_{0,0}, P_{l,0}) = ((1 - e^-tau)^M, (1 - (1 - e^-tau)^M) / M)."""
    if tau == 0:
        return 0.0, 1.0 / m
    log_below = math.log1p(-math.exp(-tau)) if math.isfinite(tau) else 0.0
    return math.exp(m * log_below), -math.expm1(m * log_below) / m


def _correct_prob_sum(m, mu_sq, sig2, tau):
    """Alternating binomial sum for P_{l,l}; returns (value, error estimate)."""
    n = np.arange(m)
    c = n * sig2 + 1.0
    log_binom = special.gammaln(m) - special.gammaln(n + 1.0) - special.gammaln(m - n)
    mag = np.exp(log_binom - n * mu_sq / c) / c
    a = np.sqrt(2.0 * mu_sq / (sig2 * c))
    b = np.sqrt(2.0 * c * tau / sig2) if math.isfinite(tau) else np.full(m, np.inf)
    terms = np.where(n % 2 == 0, 1.0, -1.0) * mag * marcum_q1(a, b)
    terms = np.atleast_1d(terms)
    err = _TERM_RTOL * float(np.sum(np.abs(terms))) + 1e-16
    return math.fsum(terms), err


def _correct_prob_quad(m, mu_sq, sig2, tau):
    """P(|r_l|^2 > tau and |r_l|^2 > |r_j|^2 for all j != l) by quadrature.

    The signal coordinate's energy has density
    (1/sig2) exp(-(x + mu^2)/sig2) I0(2 mu sqrt(x) / sig2), and each of the
    M - 1 noise-only coordinates falls below x with probability 1 - e^-x.
    Expanding (1 - e^-x)^(M-1) binomially gives the alternating sum.
    """
    if not math.isfinite(tau):
        return 0.0
    mu = math.sqrt(mu_sq)
    sig = math.sqrt(sig2)

    def integrand(x):
        z = 2.0 * mu * math.sqrt(x) / sig2
        log_f = -math.log(sig2) - (x + mu_sq) / sig2 + math.log(special.i0e(z)) + z
        if m > 1:
            e = math.exp(-x)
            log_f += (m - 1) * (math.log1p(-e) if e < 1.0 else -math.inf)
        return math.exp(log_f)

    hi = sig2 * (mu / sig + 10.0) ** 2 + 40.0 * sig2
    if tau >= hi:
        return 0.0
    points = [p for p in (mu_sq, math.log(max(m - 1, 1)) + 1.0) if tau < p < hi]
    val, err = integrate.quad(integrand, tau, hi, points=points or None,
                              epsabs=1e-14, epsrel=1e-12, limit=400)
    if err > 1e-10:
        raise NumericalError(f"P_ll quadrature error {err} (M={m}, mu^2={mu_sq}, tau={tau})")
    return val


def _correct_prob(m, mu_sq, sig2, tau):
    val, err = _correct_prob_sum(m, mu_sq, sig2, tau)
    if err <= ALTERNATING_SUM_ATOL:
        return val
    return _correct_prob_quad(m, mu_sq, sig2, tau)


def _assemble(m: int, p00: float, pl0: float, pll: float, p0l: float) -> TransitionMatrix:
    p = np.zeros((m + 1, m + 1))
    p[0, 0] = p00
    p[1:, 0] = pl0
    p[0, 1:] = p0l
    idx = np.arange(1, m + 1)
    p[idx, idx] = pll
    if m > 1:
        plm = max((1.0 - pll - p0l) / (m - 1), 0.0)
        off = ~np.eye(m, dtype=bool)
        p[1:, 1:][off] = plm
    return TransitionMatrix(p)


def _transitions(m: int, mu_sq: float, sig2: float, tau: float) -> TransitionMatrix:
    p00, pl0 = _off_probs(m, tau)
    pll = _correct_prob(m, mu_sq, sig2, tau)
    if math.isfinite(tau):
        below = (-math.expm1(-tau)) ** (m - 1)
        p0l = below * float(marcum_q1_complement(math.sqrt(2.0 * mu_sq / sig2),
                                                 math.sqrt(2.0 * tau / sig2)))
    else:
        p0l = 1.0
    return _assemble(m, p00, pl0, min(pll, 1.0), p0l)


def transitions_awgn(cfg: OofskConfig, snr: float, gain_sq: float = 1.0) -> TransitionMatrix:
    """Transition matrix over AWGN (``gain_sq`` = |h|^2, 1 for the unfaded channel)."""
    det = detector_params(cfg, snr, ChannelSpec(ChannelKind.COHERENT, 1.0, 0.0), h_sq=gain_sq)
    return _transitions(cfg.m, det.alpha_sq, 1.0, det.tau)


def transitions_noncoherent(cfg: OofskConfig, snr: float, spec: ChannelSpec) -> TransitionMatrix:
    """Transition matrix over noncoherent Rician fading (d = 0 is Rayleigh)."""
    if spec.kind is not ChannelKind.NONCOHERENT:
        raise ValueError("transitions_noncoherent needs a noncoherent channel")
    det = detector_params(cfg, snr, spec)
    sig2 = 1.0 + det.alpha_sq * spec.gamma_sq
    return _transitions(cfg.m, det.alpha_sq * spec.d**2, sig2, det.tau)


def _plogp(x: float) -> float:
    return float(special.xlogy(x, x))


def oofsk_rate(cfg: OofskConfig, t: TransitionMatrix) -> float:
    """Mutual information H(y) - H(y|x) in nats under the OOFSK input law."""
    m, nu = cfg.m, cfg.nu
    if t.m != m:
        raise ValueError(f"matrix is for M={t.m}, config has M={m}")
    p = t.p
    p00, p10, p01, p11 = p[0, 0], p[1, 0], p[0, 1], p[1, 1]
    p12 = p[1, 2] if m > 1 else 0.0
    p21 = p[2, 1] if m > 1 else 0.0
    q0 = (1 - nu) * p00 + nu * p01
    q1 = (1 - nu) * p10 + nu / m * p11 + (m - 1) * nu / m * p12
    rate = (-_plogp(q0) - m * _plogp(q1)
            + (1 - nu) * (_plogp(p00) + m * _plogp(p10))
            + nu * (_plogp(p01) + _plogp(p11) + (m - 1) * _plogp(p21)))
    return max(rate, 0.0)


def oofsk_rate_coherent(cfg: OofskConfig, snr: float, spec: ChannelSpec) -> float:
    """Average rate with the receiver tracking h (threshold recomputed per |h|^2)."""
    if spec.kind is not ChannelKind.COHERENT:
        raise ValueError("oofsk_rate_coherent needs a coherent channel")
    if snr == 0:
        return 0.0
    return expect_over_fading(spec, lambda u: oofsk_rate(cfg, transitions_awgn(cfg, snr, u)))


def oofsk_transitions(cfg: OofskConfig, spec: ChannelSpec, snr: float) -> TransitionMatrix:
    """Transition matrix for any channel kind; coherent returns the fading average."""
    if spec.kind is ChannelKind.AWGN:
        return transitions_awgn(cfg, snr, spec.d**2)
    if spec.kind is ChannelKind.NONCOHERENT:
        return transitions_noncoherent(cfg, snr, spec)
    m1 = cfg.m + 1
    avg = expect_over_fading(spec, lambda u: transitions_awgn(cfg, snr, u).p.ravel())
    return TransitionMatrix(np.asarray(avg).reshape(m1, m1))


def oofsk_rate_for(cfg: OofskConfig, spec: ChannelSpec, snr: float) -> float:
    """Achievable rate (nats/symbol) for any channel kind."""
    if spec.kind is ChannelKind.COHERENT:
        return oofsk_rate_coherent(cfg, snr, spec)
    return oofsk_rate(cfg, oofsk_transitions(cfg, spec, snr))


def duty_cycle_schedule(snr: float, epsilon: float) -> float:
    """Duty cycle nu = snr / ((1 + eps) ln(1/snr)), clamped to (0, 1]."""
    if not (0 < snr < 1):
        raise ValueError("schedule is defined for 0 < snr < 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    return min(snr / ((1.0 + epsilon) * math.log(1.0 / snr)), 1.0)
