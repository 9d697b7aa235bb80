"""Hard-decision M-ary PSK: phase density, transition row, capacity, low-SNR analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channel import ChannelKind, ChannelSpec, NumericalError, expect_over_fading, rician_moments
from .specfun import binary_entropy, gaussian_q

SECTOR_ATOL = 1e-12
LOG_FLOOR = 1e-300

LN2 = math.log(2.0)


@dataclass(frozen=True)
class PskConfig:
    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"PSK constellation size must be an integer >= 2, got {self.m}")


@dataclass(frozen=True)
class TransitionRow:
    """First row P(y = l | x = 1), l = 1..M; the full matrix is circulant."""

    p: np.ndarray

    @property
    def m(self) -> int:
        return len(self.p)

    def matrix(self) -> np.ndarray:
        """Full M x M matrix with entry [m, l] = P(y = l | x = m)."""
        return np.array([np.roll(self.p, k) for k in range(self.m)])


@dataclass(frozen=True)
class LowSnrSummary:
    c_dot0: float
    c_ddot0: float  # math.inf for 3-PSK
    eb_n0_zero_se_db: float
    s0: float


def effective_snr(spec: ChannelSpec, snr: float, h_sq: float | None = None) -> float:
    """Line-of-sight SNR seen by the phase detector.

    Noncoherent/AWGN: d^2 SNR / (gamma^2 SNR + 1). Coherent: |h|^2 SNR for the
    realized gain ``h_sq``.
    """
    if snr < 0:
        raise ValueError("snr must be >= 0")
    if spec.kind is ChannelKind.COHERENT:
        if h_sq is None:
            raise TypeError("coherent channel needs the realized |h|^2 (h_sq)")
        return h_sq * snr
    return spec.d**2 * snr / (spec.gamma_sq * snr + 1.0)


def _phase_density(theta, s):
    c = np.cos(theta)
    # The normal CDF of sqrt(2 s) cos(theta) keeps its sign; for cos < 0 the
    # unsigned form would not integrate to one.
    return (np.exp(-s) / (2.0 * np.pi)
            + np.sqrt(s / np.pi) * c * np.exp(-s * np.sin(theta) ** 2)
            * gaussian_q(-np.sqrt(2.0 * s) * c))


def phase_pdf(theta, snr: float, spec: ChannelSpec, h_sq: float | None = None):
    """Density of the received phase given transmitted phase 0."""
    return _phase_density(np.asarray(theta, dtype=float), effective_snr(spec, snr, h_sq))


def _sector_row(m: int, s: float) -> np.ndarray:
    if s == 0:
        return np.full(m, 1.0 / m)
    half = np.pi / m

    def sector(lo, hi):
        val, err = integrate.quad(_phase_density, lo, hi, args=(s,),
                                  epsabs=SECTOR_ATOL, epsrel=1e-13, limit=200)
        if err > 10 * SECTOR_ATOL + 1e-12 * abs(val):
            raise NumericalError(f"sector quadrature on [{lo}, {hi}] at s={s}: error {err}")
        return val

    # density is even in theta: P_l = P_{M-l+2}
    n_half = m // 2 + 1
    row = np.empty(m)
    row[0] = 2.0 * sector(0.0, half)
    for l in range(2, n_half + 1):
        lo = (2 * l - 3) * half
        centred_on_pi = m % 2 == 0 and l == m // 2 + 1
        hi = np.pi if centred_on_pi or l == n_half else (2 * l - 1) * half
        val = sector(lo, hi)
        if centred_on_pi:
            val *= 2.0  # integrated over the half below pi only
        row[l - 1] = val
    for l in range(n_half + 1, m + 1):
        row[l - 1] = row[m - l + 1]
    return row


def psk_transition_row(cfg: PskConfig, spec: ChannelSpec, snr: float,
                       h_sq: float | None = None) -> TransitionRow:
    """Sector probabilities P(y = l | x = 1) by adaptive quadrature of the phase density."""
    return TransitionRow(_sector_row(cfg.m, effective_snr(spec, snr, h_sq)))


def _capacity_from_row(p: np.ndarray) -> float:
    p = np.clip(p, LOG_FLOOR, None)
    return max(math.log(len(p)) + float(np.sum(p * np.log(p))), 0.0)


def capacity_given_effective_snr(m: int, s: float) -> float:
    return _capacity_from_row(_sector_row(m, s))


def psk_capacity(cfg: PskConfig, spec: ChannelSpec, snr: float) -> float:
    """Capacity in nats/symbol (equiprobable inputs achieve it)."""
    if snr < 0:
        raise ValueError("snr must be >= 0")
    if spec.kind is ChannelKind.COHERENT:
        return expect_over_fading(spec, lambda u: capacity_given_effective_snr(cfg.m, u * snr))
    return capacity_given_effective_snr(cfg.m, effective_snr(spec, snr))


def psk_capacity_closed_form(cfg: PskConfig, spec: ChannelSpec, snr: float) -> float:
    """Q-function closed forms for M = 2 and M = 4.

    QPSK sectors split into two independent binary decisions on the rotated
    in-phase and quadrature axes, each seeing half the effective SNR. Over
    AWGN this is C4(SNR) = 2 C2(SNR/2).
    """
    if cfg.m not in (2, 4):
        raise ValueError("closed forms exist only for M = 2 and M = 4")
    if spec.kind is ChannelKind.COHERENT:
        return expect_over_fading(spec, lambda u: _closed_form_s(cfg.m, u * snr))
    return _closed_form_s(cfg.m, effective_snr(spec, snr))


def _closed_form_s(m: int, s: float) -> float:
    if m == 2:
        return LN2 - binary_entropy(gaussian_q(math.sqrt(2.0 * s)))
    return 2.0 * (LN2 - binary_entropy(gaussian_q(math.sqrt(s))))


def psi(m: int) -> float:
    s1 = math.sin(math.pi / m)
    s2 = math.sin(2 * math.pi / m)
    return m * m / (16 * math.pi**2) * (
        (2 - math.pi) * s2**2 + (m * m - 4 * math.pi) * s1**4 - 2 * m * s1**2 * s2
    )


def _derivative_scalings(spec: ChannelSpec):
    """(first-order factor, |d|^4-type factor, |d|^2 gamma^2 factor, energy scale)."""
    if spec.kind is ChannelKind.COHERENT:
        mom = rician_moments(spec)
        return mom.m2, mom.m4, 0.0, mom.m2
    d2 = spec.d**2
    scale = d2 + spec.gamma_sq if spec.kind is ChannelKind.NONCOHERENT else d2
    return d2, d2 * d2, d2 * spec.gamma_sq, scale


def _summary(c1: float, c2: float, scale: float) -> LowSnrSummary:
    eb = math.inf if c1 == 0 else 10.0 * math.log10(scale * LN2 / c1)
    if math.isinf(c2):
        s0 = 0.0
    elif c2 == 0:
        s0 = math.inf if c1 > 0 else 0.0
    else:
        s0 = 2.0 * c1 * c1 / (-c2)
    return LowSnrSummary(c_dot0=c1, c_ddot0=c2, eb_n0_zero_se_db=eb, s0=s0)


def psk_lowsnr(cfg: PskConfig, spec: ChannelSpec) -> LowSnrSummary:
    """First/second capacity derivatives at SNR = 0 and the derived Eb/N0 and slope."""
    m = cfg.m
    a2, a4, ag, scale = _derivative_scalings(spec)
    sin2 = math.sin(math.pi / m) ** 2
    if m == 2:
        c1 = 2.0 * a2 / math.pi
        c2 = 8.0 / (3.0 * math.pi) * (1.0 / math.pi - 1.0) * a4 - 4.0 * ag / math.pi
    else:
        c1 = m * m * a2 / (4.0 * math.pi) * sin2
        if m == 3:
            c2 = math.inf
        elif m == 4:
            c2 = 4.0 / (3.0 * math.pi) * (1.0 / math.pi - 1.0) * a4 - 4.0 * ag / math.pi
        else:
            c2 = psi(m) * a4 - ag / (2.0 * math.pi) * m * m * sin2
    return _summary(c1, c2, scale)


def psk_lowsnr_asymptotic(spec: ChannelSpec) -> LowSnrSummary:
    """Limit of :func:`psk_lowsnr` as M -> infinity."""
    a2, a4, ag, scale = _derivative_scalings(spec)
    c1 = math.pi * a2 / 4.0
    c2 = (math.pi**2 - 8.0 * math.pi + 8.0) * a4 / 16.0 - ag * math.pi / 2.0
    return _summary(c1, c2, scale)


def psk_taylor_coeffs(cfg: PskConfig, d: float, gamma_sq: float):
    """Coefficients (phi1, phi2, phi3) of C = phi1 SNR + phi2 SNR^1.5 + phi3 SNR^2 + ...

    Finite trigonometric sums over i = 1..M, evaluated as written.
    """
    m = cfg.m
    d = abs(d)
    i = np.arange(1, m + 1)
    c2pi = np.cos(2 * np.pi * i / m)
    sum_c2 = float(np.sum(c2pi**2))
    sum_c3 = float(np.sum(c2pi**3))
    sum_c4 = float(np.sum(c2pi**4))
    sum_c2_4 = float(np.sum(np.cos(4 * np.pi * i / m) ** 2))
    s1 = math.sin(math.pi / m)
    s2 = math.sin(2 * math.pi / m)
    pi = math.pi

    phi1 = m * d**2 / (2 * pi) * s1**2 * sum_c2
    phi2 = m * d**3 / (pi * math.sqrt(pi)) * (s1 * s2 - m / 6 * s1**3) * sum_c3
    phi3 = (-(m * m) * d**4 / (16 * pi) * s2**2
            + m * d**4 * (pi + 2) / (16 * pi**2) * s2**2 * sum_c2_4
            + d**4 * ((m**3 / (12 * pi**2) - m / (3 * pi)) * s1**4
                      - m * m / (2 * pi**2) * s1**2 * s2) * sum_c4
            + d**4 * m * m / (4 * pi**2) * s1**2 * s2 * sum_c2
            - d**2 * gamma_sq / (2 * pi) * m * s1**2 * sum_c2)
    return phi1, phi2, phi3


def soft_qpsk_reference(k_factor: float):
    """Soft-detected QPSK over noncoherent Rician fading: (Eb/N0 at zero SE in dB, S0)."""
    if not k_factor > 0:
        raise ValueError("k_factor must be > 0")
    if math.isinf(k_factor):
        return 10.0 * math.log10(LN2), 2.0
    eb = 10.0 * math.log10((1.0 + 1.0 / k_factor) * LN2)
    return eb, 2.0 * k_factor**2 / (1.0 + k_factor) ** 2
