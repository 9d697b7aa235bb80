"""Special functions: Gaussian Q, log-domain I0 and its inverse, Marcum Q1.

Every function accepts scalars or numpy arrays and returns the same shape
(a Python float for scalar input).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

# Poisson-window half width, in standard deviations, for the Marcum series.
# Mass outside mean +/- (MARCUM_WINDOW_SIGMAS * sd + MARCUM_WINDOW_PAD) is
# below 1e-17 for every mean.
MARCUM_WINDOW_SIGMAS = 9.0
MARCUM_WINDOW_PAD = 40

_INV_LOG_ATOL = 1e-13
_INV_LOG_MAXITER = 200


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def gaussian_q(x):
    """Tail probability of the standard normal, P(Z > x)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise ValueError("gaussian_q: NaN argument")
    return _out(0.5 * special.erfc(x / math.sqrt(2.0)))


def log_bessel_i0(x):
    """Natural log of I0(x) for x >= 0, free of overflow for any finite x."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise ValueError("log_bessel_i0: argument must be >= 0")
    # i0e(x) = exp(-x) I0(x), so log I0 = log(i0e) + x
    return _out(np.log(special.i0e(x)) + x)


def _dlog_i0(x):
    # d/dx log I0(x) = I1(x)/I0(x)
    return special.i1e(x) / special.i0e(x)


def bessel_i0_inv_log(log_y):
    """Inverse of :func:`log_bessel_i0`.

    Takes ``log_y = ln(y)`` with ``y >= 1`` and returns ``x >= 0`` such that
    ``I0(x) = y``. Working with the logarithm keeps arguments like
    ``exp(alpha**2)`` from ever being formed.
    """
    L = np.asarray(log_y, dtype=float)
    if np.any(~(L >= 0)):
        raise ValueError("bessel_i0_inv_log: log_y must be >= 0")
    L = np.atleast_1d(L).astype(float)
    out = np.zeros_like(L)
    inf = np.isinf(L)
    out[inf] = np.inf
    work = (L > 0) & ~inf
    if np.any(work):
        out[work] = _solve_increasing(
            lambda x: log_bessel_i0(x), _dlog_i0, L[work],
            lo=np.zeros(work.sum()), hi=_i0_inv_upper(L[work]),
        )
    return _out(out.reshape(np.shape(log_y)))


def _i0_inv_upper(L):
    # I0(x) >= 1 + x^2/4 gives x <= 2 sqrt(expm1(L)); for x >= 1,
    # I0(x) >= e^x / sqrt(2 pi x) gives the second (loose) bound.
    small = 2.0 * np.sqrt(np.expm1(np.minimum(L, 700.0)))
    large = L + 0.5 * np.log(2.0 * np.pi * (L + 1.0)) + 1.0
    return np.maximum(np.minimum(small, large), 1e-300)


def _solve_increasing(fun, dfun, target, lo, hi):
    """Vectorized safeguarded Newton for increasing ``fun(x) = target``.

    ``lo``/``hi`` must bracket the root. Falls back to bisection whenever a
    Newton step leaves the current bracket.
    """
    lo = lo.copy()
    hi = hi.copy()
    x = 0.5 * (lo + hi)
    for _ in range(_INV_LOG_MAXITER):
        g = fun(x) - target
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        dg = dfun(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dg > 0, g / dg, np.inf)
        xn = x - step
        bad = ~((xn > lo) & (xn < hi))
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = (np.abs(g) <= _INV_LOG_ATOL) | (hi - lo <= 1e-15 * np.maximum(hi, 1.0))
        x = np.where(done, x, xn)
        if np.all(done):
            return x
    raise ArithmeticError("inverse solve did not converge")


def _poisson_gamma_sum(lam, x, upper):
    """sum_k Poisson(k; lam) * P_or_Q(k + 1, x) on a window around the mode."""
    lam = np.atleast_1d(lam)
    x = np.atleast_1d(x)
    sd = np.sqrt(lam)
    half = MARCUM_WINDOW_SIGMAS * sd + MARCUM_WINDOW_PAD
    k0 = np.maximum(np.floor(lam - half), 0.0)
    width = int(np.ceil(2.0 * half.max())) + 1
    k = k0[:, None] + np.arange(width)[None, :]
    with np.errstate(divide="ignore"):
        logw = special.xlogy(k, lam[:, None]) - lam[:, None] - special.gammaln(k + 1.0)
    w = np.exp(logw)
    g = special.gammaincc(k + 1.0, x[:, None]) if upper else special.gammainc(k + 1.0, x[:, None])
    return np.sum(w * g, axis=1)


def _marcum(a, b, complement):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a >= 0)) or np.any(~(b >= 0)):
        raise ValueError("marcum_q1: arguments must be >= 0")
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    a = a.ravel()
    b = b.ravel()
    q = np.empty(a.shape)
    zero_b = b == 0
    inf_b = np.isinf(b) & ~zero_b
    inf_a = np.isinf(a) & ~inf_b & ~zero_b
    q[zero_b | inf_a] = 1.0
    q[inf_b] = 0.0
    if complement:
        q = 1.0 - q
    rest = np.flatnonzero(~(zero_b | inf_b | inf_a))
    # Sum whichever tail is the smaller one (Q1 < 1/2 roughly when
    # b^2 > a^2 + 1) and take the other as its complement: the Poisson
    # weights only sum to one within ~1e-14, which would otherwise show up
    # as non-monotone wiggles in values close to 1.
    upper_small = b[rest] ** 2 > a[rest] ** 2 + 1.0
    step = 4096
    for s in range(0, rest.size, step):
        idx = rest[s:s + step]
        small = upper_small[s:s + step]
        vals = np.empty(idx.size)
        for side in (True, False):
            sel = small == side
            if np.any(sel):
                vals[sel] = _poisson_gamma_sum(0.5 * a[idx[sel]] ** 2, 0.5 * b[idx[sel]] ** 2,
                                               upper=side)
        # vals holds the smaller tail; flip where the caller wants the other
        want_upper = not complement
        vals = np.where(small == want_upper, vals, 1.0 - vals)
        q[idx] = np.clip(vals, 0.0, 1.0)
    return _out(q.reshape(shape))


def marcum_q1(a, b):
    """First-order Marcum Q function Q1(a, b).

    Evaluated as the Poisson mixture of regularized upper incomplete gamma
    functions,

        Q1(a, b) = sum_k e^{-a^2/2} (a^2/2)^k / k! * Q(k + 1, b^2/2),

    which is the Bessel series regrouped so every term is nonnegative. Only
    the window of ``k`` around the Poisson mode that carries mass above
    ~1e-17 is summed. The smaller of Q1 and 1 - Q1 is summed directly and
    the larger one obtained by subtraction, so the absolute error stays
    near 1e-16 and the result is monotone to that level. The cost grows
    like ``a``.
    """
    return _marcum(a, b, complement=False)


def marcum_q1_complement(a, b):
    """``1 - Q1(a, b)`` summed directly, with no cancellation near Q1 = 1."""
    return _marcum(a, b, complement=True)


def binary_entropy(p):
    """Binary entropy in nats, with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0) & (p <= 1))):
        raise ValueError("binary_entropy: p must lie in [0, 1]")
    return _out(special.entr(p) + special.entr(1.0 - p))
