"""Bit energy, spectral efficiency, SNR sweeps and minimum-bit-energy search."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelKind, ChannelSpec, NumericalError, rician_moments
from .oofsk import OofskConfig, oofsk_rate_for
from .psk import LowSnrSummary, PskConfig, psk_capacity

LOG2E = 1.0 / math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_MIN_DB = -50.0
DEFAULT_MAX_DB = 20.0
DEFAULT_POINTS = 60
REFINE_XTOL = 1e-6  # in ln(snr)


@dataclass(frozen=True)
class CurvePoint:
    snr: float
    rate_nats: float
    spectral_eff: float
    eb_n0_db: float

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)


@dataclass
class SweepResult:
    points: list[CurvePoint]
    min_eb_db: float
    se_at_min: float
    snr_at_min: float
    refined: bool = field(default=False)


@dataclass(frozen=True)
class Scheme:
    """What is being swept: ``psk`` with M points, or ``oofsk``/``fsk`` with M tones."""

    kind: str
    m: int
    nu: float = 1.0

    def __post_init__(self):
        if self.kind not in ("psk", "oofsk", "fsk"):
            raise ValueError(f"unknown scheme {self.kind!r}")
        if self.kind == "fsk" and self.nu != 1:
            raise ValueError("fsk has duty cycle 1")
        if self.kind == "psk":
            PskConfig(self.m)
        else:
            OofskConfig(self.m, self.nu)

    @property
    def dimension(self) -> int:
        return 1 if self.kind == "psk" else self.m

    def rate(self, spec: ChannelSpec, snr: float) -> float:
        if self.kind == "psk":
            return psk_capacity(PskConfig(self.m), spec, snr)
        return oofsk_rate_for(OofskConfig(self.m, self.nu), spec, snr)


def received_energy_scale(spec: ChannelSpec) -> float:
    """Conventional received-energy factor: d^2 (AWGN), d^2 + gamma^2 (noncoherent), E|h|^2 (coherent)."""
    if spec.kind is ChannelKind.COHERENT:
        return rician_moments(spec).m2
    if spec.kind is ChannelKind.NONCOHERENT:
        return spec.d**2 + spec.gamma_sq
    return spec.d**2


def bit_energy_db(snr: float, rate_nats: float, scale: float = 1.0) -> float:
    """10 log10(scale * snr * ln2 / rate); +inf when the rate is zero."""
    if rate_nats < 0:
        raise ValueError("rate must be >= 0")
    if rate_nats == 0:
        return math.inf
    return 10.0 * math.log10(scale * snr * math.log(2.0) / rate_nats)


def spectral_efficiency(rate_nats: float, dimension: int = 1) -> float:
    """bits/s/Hz for a signal occupying ``dimension`` unit time-frequency slots."""
    return rate_nats * LOG2E / dimension


def linear_se_approx(eb_db: float, summary: LowSnrSummary) -> float:
    """Spectral efficiency on the tangent line at zero spectral efficiency."""
    se = summary.s0 / (10.0 * math.log10(2.0)) * (eb_db - summary.eb_n0_zero_se_db)
    return max(se, 0.0)


def default_snr_grid(min_db: float = DEFAULT_MIN_DB, max_db: float = DEFAULT_MAX_DB,
                     points: int = DEFAULT_POINTS) -> np.ndarray:
    """Log-spaced SNR grid (linear values) between two dB limits."""
    if points < 2:
        raise ValueError("a grid needs at least 2 points")
    if not max_db > min_db:
        raise ValueError("max_db must exceed min_db")
    return 10.0 ** (np.linspace(min_db, max_db, points) / 10.0)


def golden_section_min(f, a: float, b: float, xtol: float = REFINE_XTOL):
    """Minimize a unimodal ``f`` on [a, b]; returns (x, f(x))."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def _point(scheme: Scheme, spec: ChannelSpec, snr: float, scale: float) -> CurvePoint:
    try:
        rate = scheme.rate(spec, snr)
    except (NumericalError, ArithmeticError, ValueError) as exc:
        raise NumericalError(f"{scheme.kind} M={scheme.m} failed at snr={snr!r}: {exc}") from exc
    return CurvePoint(snr, rate, spectral_efficiency(rate, scheme.dimension),
                      bit_energy_db(snr, rate, scale))


def sweep(scheme: Scheme, spec: ChannelSpec, snr_grid, *, scale: float,
          refine: bool = True, workers: int = 1) -> SweepResult:
    """Evaluate the rate over ``snr_grid`` and locate the minimum bit energy.

    The coarse minimum over the grid is refined by golden-section search on
    ln(snr) over the two grid cells adjacent to it. ``scale`` is the
    received-energy factor applied to Eb/N0 (see :func:`received_energy_scale`).
    """
    grid = np.asarray(snr_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("snr_grid needs at least 2 points")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("snr_grid must be positive and strictly increasing")

    def at(snr):
        return _point(scheme, spec, float(snr), scale)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(at, grid))
    else:
        points = [at(s) for s in grid]

    ebs = np.array([p.eb_n0_db for p in points])
    i = int(np.argmin(ebs))
    best = points[i]
    result = SweepResult(points, best.eb_n0_db, best.spectral_eff, best.snr)
    if not refine or not math.isfinite(best.eb_n0_db):
        return result

    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, grid.size - 1)])
    cache = {}

    def objective(x):
        pt = at(math.exp(x))
        cache[x] = pt
        return pt.eb_n0_db

    x, val = golden_section_min(objective, lo, hi)
    if val < best.eb_n0_db:
        pt = cache[x]
        result.min_eb_db = pt.eb_n0_db
        result.se_at_min = pt.spectral_eff
        result.snr_at_min = pt.snr
        result.refined = True
    return result
