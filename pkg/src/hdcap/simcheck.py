"""Monte Carlo transmission and hard-decision detection, used as an oracle for
the analytic transition probabilities.

Trials are split into fixed-size chunks; chunk ``i`` draws from its own
Philox substream keyed by ``(seed, i)``. Counts are merged by summation, so
the result does not depend on how chunks are spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .channel import ChannelKind, ChannelSpec, expect_over_fading, sample_fading
from .oofsk import (
    OofskConfig,
    TransitionMatrix,
    detector_params,
    oofsk_transitions,
    transitions_awgn,
)
from .psk import PskConfig, TransitionRow, psk_transition_row
from .specfun import bessel_i0_inv_log

RNG_ALGORITHM = "numpy-Philox4x64-10/SeedSequence(seed,chunk)/ziggurat-normal"
CHUNK_TRIALS = 1 << 18
SIGMA_MULTIPLIER = 3.0


def make_stream(seed: int, chunk: int) -> np.random.Generator:
    """Independent counter-based stream for one chunk of trials."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _complex_normal(gen: np.random.Generator, shape) -> np.ndarray:
    z = gen.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) * math.sqrt(0.5)


@dataclass
class SimReport:
    scheme: str
    params: dict
    empirical: np.ndarray
    analytic: np.ndarray
    counts: np.ndarray
    trials: int
    seed: int
    max_abs_dev: float
    sigma_bound: float
    algorithm: str = RNG_ALGORITHM
    z_scores: np.ndarray = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return bool(self.max_abs_dev <= self.sigma_bound)

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "scheme": self.scheme,
            "params": self.params,
            "seed": self.seed,
            "trials": self.trials,
            "algorithm": self.algorithm,
            "counts": self.counts.tolist(),
            "empirical": self.empirical.tolist(),
            "analytic": self.analytic.tolist(),
            "max_abs_dev": self.max_abs_dev,
            "sigma_bound": self.sigma_bound,
            "passed": self.passed,
        }


def _compare(empirical, analytic, totals):
    """Worst entry by normalized deviation: (|dev|, 3 sigma bound, z scores).

    sigma is the binomial standard deviation of the entry's empirical
    frequency, so ``max_abs_dev <= sigma_bound`` holds iff every entry lies
    within its own 3-sigma band.
    """
    sigma = np.sqrt(np.clip(analytic * (1.0 - analytic), 0.0, None) / np.maximum(totals, 1))
    dev = np.abs(empirical - analytic)
    bound = SIGMA_MULTIPLIER * sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, dev / sigma, np.where(dev > 0, np.inf, 0.0))
    z = np.where(totals > 0, z, 0.0)
    k = np.unravel_index(int(np.argmax(z)), z.shape)
    return float(dev[k]), float(bound[k]), z


def _run_chunks(fn, trials: int, workers: int):
    sizes = [min(CHUNK_TRIALS, trials - s) for s in range(0, trials, CHUNK_TRIALS)]
    jobs = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(i, n) for i, n in jobs]
    return sum(parts[1:], parts[0])


def _check_trials(trials):
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be a positive integer")


def simulate_psk(cfg: PskConfig, spec: ChannelSpec, snr: float, trials: int, seed: int,
                 workers: int = 1) -> SimReport:
    """Send s_1 = sqrt(snr) (N0 = 1) and tally the detected sector.

    Noncoherent and AWGN receivers sectorize the raw received phase; the
    coherent receiver first derotates by h*/|h|.
    """
    _check_trials(trials)
    m = cfg.m
    amp = math.sqrt(snr)
    width = 2.0 * math.pi / m

    def chunk(i, n):
        gen = make_stream(seed, i)
        h = sample_fading(spec, gen, n)
        r = h * amp + _complex_normal(gen, (n,))
        if spec.kind is ChannelKind.COHERENT:
            r = r * np.conj(h) / np.maximum(np.abs(h), 1e-300)
        theta = np.angle(r)
        sector = np.floor((theta + math.pi / m) / width).astype(np.int64) % m
        return np.bincount(sector, minlength=m)

    counts = _run_chunks(chunk, trials, workers)
    empirical = counts / trials

    if spec.kind is ChannelKind.COHERENT:
        analytic = np.asarray(expect_over_fading(
            spec, lambda u: psk_transition_row(cfg, spec, snr, h_sq=u).p, rtol=1e-9))
    else:
        analytic = psk_transition_row(cfg, spec, snr).p
    dev, bound, z = _compare(empirical, analytic, np.full(m, trials))
    return SimReport("psk", {"m": m, "snr": snr, "channel": _spec_dict(spec)},
                     empirical, analytic, counts, trials, seed, dev, bound, z_scores=z)


def simulate_oofsk(cfg: OofskConfig, spec: ChannelSpec, snr: float, trials: int, seed: int,
                   workers: int = 1) -> SimReport:
    """Draw inputs from the OOFSK prior, transmit sqrt(snr/nu) on the chosen
    tone, and apply energy detection with the MAP threshold.

    Ties among maximal energies are broken uniformly at random.
    """
    _check_trials(trials)
    m, nu = cfg.m, cfg.nu
    amp = math.sqrt(snr / nu)
    prior_cdf = np.cumsum(cfg.prior)
    coherent = spec.kind is ChannelKind.COHERENT
    fixed_tau = None if coherent else detector_params(cfg, snr, spec).tau

    def chunk(i, n):
        gen = make_stream(seed, i)
        x = np.minimum(np.searchsorted(prior_cdf, gen.random(n), side="right"), m)
        h = sample_fading(spec, gen, n)
        r = _complex_normal(gen, (n, m))
        on = np.flatnonzero(x > 0)
        r[on, x[on] - 1] += h[on] * amp
        energy = np.abs(r) ** 2
        if coherent:
            tau = _coherent_tau(cfg, snr, np.abs(h) ** 2)
        else:
            tau = np.full(n, fixed_tau)
        emax = energy.max(axis=1)
        y = energy.argmax(axis=1) + 1
        ties = np.flatnonzero((energy == emax[:, None]).sum(axis=1) > 1)
        for t in ties:
            y[t] = gen.choice(np.flatnonzero(energy[t] == emax[t])) + 1
        y[emax <= tau] = 0
        counts = np.zeros((m + 1, m + 1), dtype=np.int64)
        np.add.at(counts, (y, x), 1)
        return counts

    counts = _run_chunks(chunk, trials, workers)
    totals = counts.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        empirical = np.where(totals > 0, counts / np.maximum(totals, 1), 0.0)
    if coherent:
        m1 = m + 1
        analytic = np.asarray(expect_over_fading(
            spec, lambda u: transitions_awgn(cfg, snr, u).p.ravel(), rtol=1e-9)).reshape(m1, m1)
    else:
        analytic = oofsk_transitions(cfg, spec, snr).p
    dev, bound, z = _compare(empirical, analytic, np.broadcast_to(totals, counts.shape))
    return SimReport("oofsk", {"m": m, "nu": nu, "snr": snr, "channel": _spec_dict(spec)},
                     empirical, analytic, counts, trials, seed, dev, bound, z_scores=z)


def _coherent_tau(cfg: OofskConfig, snr: float, h_sq: np.ndarray) -> np.ndarray:
    """Per-trial MAP threshold when the receiver knows |h|^2 (vectorized)."""
    alpha_sq = snr * h_sq / cfg.nu
    if cfg.nu == 1:
        return np.zeros_like(alpha_sq)
    log_xi = math.log(cfg.m) + math.log1p(-cfg.nu) - math.log(cfg.nu) + alpha_sq
    tau = np.zeros_like(alpha_sq)
    pos = log_xi >= 0
    x = np.zeros_like(alpha_sq)
    x[pos] = bessel_i0_inv_log(log_xi[pos])
    with np.errstate(divide="ignore", invalid="ignore"):
        tau[pos] = np.where(alpha_sq[pos] > 0, x[pos] ** 2 / (4.0 * alpha_sq[pos]), np.inf)
    return tau


def empirical_mi(t, prior) -> float:
    """Mutual information (nats) of the joint law prior[m] * t[l, m]."""
    p = t.p if isinstance(t, (TransitionMatrix, TransitionRow)) else np.asarray(t, dtype=float)
    prior = np.asarray(prior, dtype=float)
    if p.ndim != 2 or p.shape[1] != prior.size:
        raise ValueError(f"matrix shape {p.shape} does not match prior of length {prior.size}")
    if abs(prior.sum() - 1.0) > 1e-9:
        raise ValueError("prior must sum to 1")
    joint = p * prior[None, :]
    out = joint.sum(axis=1)
    h_y = float(np.sum(special.entr(out)))
    h_y_x = float(np.sum(prior * np.sum(special.entr(p), axis=0)))
    return max(h_y - h_y_x, 0.0)


def _spec_dict(spec: ChannelSpec) -> dict:
    return {"kind": spec.kind.value, "d": spec.d, "gamma_sq": spec.gamma_sq}
