"""Channel descriptions, fading moments, sampling, and fading averages."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its stated tolerance."""


class ChannelKind(str, enum.Enum):
    AWGN = "awgn"
    COHERENT = "coherent"
    NONCOHERENT = "noncoherent"


@dataclass(frozen=True)
class ChannelSpec:
    """Channel gain h = d + gamma * w with w ~ CN(0, 1).

    ``d`` is the (real, nonnegative) line-of-sight mean and ``gamma_sq`` the
    diffuse variance. For AWGN the gain is the constant ``d``.
    """

    kind: ChannelKind
    d: float = 1.0
    gamma_sq: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if not (self.d >= 0 and math.isfinite(self.d)):
            raise ValueError(f"d must be finite and >= 0, got {self.d}")
        if not (self.gamma_sq >= 0 and math.isfinite(self.gamma_sq)):
            raise ValueError(f"gamma_sq must be finite and >= 0, got {self.gamma_sq}")
        if self.kind is ChannelKind.AWGN:
            if self.gamma_sq != 0:
                raise ValueError("AWGN channel requires gamma_sq = 0")
            if self.d <= 0:
                raise ValueError("AWGN channel requires d > 0")

    @classmethod
    def awgn(cls, d: float = 1.0) -> "ChannelSpec":
        return cls(ChannelKind.AWGN, d, 0.0)

    @classmethod
    def rician(cls, k_factor: float, omega: float = 1.0, coherent: bool = False) -> "ChannelSpec":
        """Rician channel from the K factor and total power omega = d^2 + gamma^2.

        ``k_factor = inf`` gives a deterministic gain, ``k_factor = 0`` Rayleigh.
        """
        if not k_factor >= 0:
            raise ValueError("k_factor must be >= 0")
        if not omega > 0:
            raise ValueError("omega must be > 0")
        if math.isinf(k_factor):
            d_sq, g_sq = omega, 0.0
        else:
            d_sq = omega * k_factor / (1.0 + k_factor)
            g_sq = omega / (1.0 + k_factor)
        kind = ChannelKind.COHERENT if coherent else ChannelKind.NONCOHERENT
        return cls(kind, math.sqrt(d_sq), g_sq)

    @property
    def k_factor(self) -> float:
        if self.gamma_sq == 0:
            return math.inf
        return self.d**2 / self.gamma_sq

    @property
    def omega(self) -> float:
        return self.d**2 + self.gamma_sq

    @property
    def is_faded(self) -> bool:
        return self.kind is not ChannelKind.AWGN and self.gamma_sq > 0


@dataclass(frozen=True)
class FadingMoments:
    m2: float
    m4: float


def rician_moments(spec: ChannelSpec) -> FadingMoments:
    """E|h|^2 and E|h|^4 for h ~ CN(d, gamma^2)."""
    d2 = spec.d**2
    g2 = spec.gamma_sq
    return FadingMoments(m2=d2 + g2, m4=d2 * d2 + 4.0 * d2 * g2 + 2.0 * g2 * g2)


def sample_fading(spec: ChannelSpec, stream: np.random.Generator, size=None):
    """Draw fading coefficients.

    AWGN returns the constant ``d``; the faded kinds return
    ``d + gamma * (z1 + 1j z2) / sqrt(2)`` with independent standard normals.
    """
    if spec.kind is ChannelKind.AWGN or spec.gamma_sq == 0:
        if size is None:
            return complex(spec.d)
        return np.full(size, complex(spec.d))
    z = stream.standard_normal((2,) if size is None else (2,) + tuple(np.atleast_1d(size)))
    h = spec.d + math.sqrt(spec.gamma_sq / 2.0) * (z[0] + 1j * z[1])
    return complex(h) if size is None else h


# Composite Gauss-Legendre rule on the amplitude |h|: panels of
# GL_NODES_PER_PANEL nodes, starting at GL_START_PANELS and doubling up to
# GL_MAX_PANELS (128 nodes first, 8192 at most).
GL_NODES_PER_PANEL = 16
GL_START_PANELS = 8
GL_MAX_PANELS = 512
# |h| lies within d +/- AMPLITUDE_SPAN * gamma except with probability
# below exp(-AMPLITUDE_SPAN**2).
AMPLITUDE_SPAN = 7.0


def fading_nodes(spec: ChannelSpec, panels: int = GL_START_PANELS):
    """Nodes u_i = |h_i|^2 and weights w_i with sum_i w_i f(u_i) ~ E{f(|h|^2)}.

    The amplitude |h| is Rice distributed with density
    (2t/g2) exp(-(t^2 + d^2)/g2) I0(2 d t / g2); the rule is composite
    Gauss-Legendre in t over [max(0, d - 7 gamma), d + 7 gamma].
    """
    if not spec.is_faded:
        return np.array([spec.d**2]), np.array([1.0])
    d, g2 = spec.d, spec.gamma_sq
    g = math.sqrt(g2)
    lo = max(0.0, d - AMPLITUDE_SPAN * g)
    hi = d + AMPLITUDE_SPAN * g
    x, w = np.polynomial.legendre.leggauss(GL_NODES_PER_PANEL)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    z = 2.0 * d * t / g2
    # log density with exp(-(t^2 + d^2)/g2) I0(z) = exp(-(t - d)^2/g2) i0e(z)
    log_p = np.log(2.0 * t / g2) - (t - d) ** 2 / g2 + np.log(special.i0e(z))
    return t * t, wt * np.exp(log_p)


def expect_over_fading(spec: ChannelSpec, f, rtol: float = 1e-6, atol: float = 1e-13):
    """E{f(|h|^2)} over the fading law of ``spec``.

    ``f`` maps a nonnegative float to a float or to a 1-D array (all entries
    are averaged at once). The panel count of the amplitude rule doubles
    until two successive estimates agree to ``rtol`` (or to ``atol``
    absolutely, for near-zero averages).

    Raises:
        NumericalError: no convergence by ``GL_MAX_PANELS`` panels.
    """
    if not spec.is_faded:
        return _as_result(f(spec.d**2))

    prev = None
    panels = GL_START_PANELS
    history = []
    while panels <= GL_MAX_PANELS:
        u, w = fading_nodes(spec, panels)
        vals = np.array([np.asarray(f(float(ui)), dtype=float) for ui in u])
        est = np.tensordot(w, vals, axes=(0, 0))
        if prev is not None:
            diff = float(np.max(np.abs(est - prev)))
            history.append((panels * GL_NODES_PER_PANEL, diff))
            if diff <= rtol * float(np.max(np.abs(est))) + atol:
                return _as_result(est)
        prev = est
        panels *= 2
    raise NumericalError(
        f"fading expectation did not converge to rtol={rtol}; "
        f"(nodes, max change) history: {history}"
    )


def _as_result(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x
