"""Gauss-Legendre panels after the substitution u = a + s^2 (or b - s^2).

Integrands on a caustic interval [a, b] carry |u - a|^(+-1/2) behaviour at
both ends.  Splitting at the midpoint and substituting s^2 at the nearer end
turns each half into a smooth integrand in s.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import NumericalError

NODES = 64
MAX_PANELS = 128
# empirical factor on eps / (u-length) for the endpoint cancellation noise
_NOISE_K = 1e4

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def _gauss(n: int = NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2  # on [0, 1]


def _panels(func: Integrand, lo: np.ndarray, hi: np.ndarray, panels: int) -> np.ndarray:
    """Composite rule of ``func`` over [lo, hi] (elementwise arrays)."""
    x, w = _gauss()
    edges = np.linspace(0.0, 1.0, panels + 1)
    t = (edges[:-1, None] + np.diff(edges)[:, None] * x[None, :]).ravel()
    wt = (np.diff(edges)[:, None] * w[None, :]).ravel()
    span = hi - lo
    s = lo[..., None] + span[..., None] * t
    vals = np.where(span[..., None] > 0, func(s), 0.0)
    return span * np.sum(vals * wt, axis=-1)


def _refine(rule: Callable[[int], np.ndarray], tol: float, noise: np.ndarray, start: int = 1) -> np.ndarray:
    """Double the panel count until successive rules agree.

    Near an endpoint u* the integrand is evaluated at u* + s^2, which keeps
    only about eps/s^2 relative accuracy.  ``noise`` is that cancellation
    level per element (scaled by n^2 for n panels); elements already inside
    it are accepted, because more panels only make it worse.
    """
    n = start
    prev = rule(n)
    err = np.inf
    while n < MAX_PANELS:
        n *= 2
        cur = rule(n)
        if not np.all(np.isfinite(cur)):
            break
        if not np.size(cur):
            return cur
        errs = np.abs(cur - prev)
        err = float(np.max(errs))
        scale = max(1.0, float(np.max(np.abs(cur))))
        allowed = tol * scale + noise * n * n * np.abs(cur)
        if np.all(errs <= allowed):
            return cur
        prev = cur
    raise NumericalError(f"quadrature did not converge; last change {err:.3e}")


def _substituted(F: Integrand, end: float, sign: float) -> Integrand:
    """s -> 2 s F(end + sign s^2), smooth in s.

    Nodes so close to ``end`` that end + sign s^2 rounds onto the endpoint
    itself take the value at the first node that does not; the integrand
    is smooth in s, so this costs O(s^2) on a sliver of width sqrt(eps |end|).
    """
    near = 4 * np.finfo(float).eps * abs(end)

    def fn(s):
        val = 2 * s * F(end + sign * s * s)
        bad = s * s <= near
        if np.any(bad):
            good = ~bad
            first = np.argmax(good, axis=-1)[..., None]
            fill = np.where(np.any(good, axis=-1, keepdims=True), np.take_along_axis(val, first, axis=-1), 0.0)
            val = np.where(bad, fill, val)
        return val

    return fn


def cumulative(F: Integrand, a: float, b: float, x, tol: float = 1e-12) -> np.ndarray:
    """Return int_a^x F(t) dt for every x in [a, b]."""
    x = np.clip(np.asarray(x, dtype=float), a, b)
    m = 0.5 * (a + b)
    ra = np.sqrt(np.minimum(x, m) - a)
    rb_hi = np.sqrt(b - m)
    rb_lo = np.sqrt(np.minimum(b - x, b - m))

    left = _substituted(F, a, 1.0)
    right = _substituted(F, b, -1.0)

    eps = np.finfo(float).eps * (1 + abs(a) + abs(b)) * _NOISE_K
    with np.errstate(all="ignore"):
        noise_a = eps / np.maximum(ra * ra, 1e-300)
        noise_b = eps / np.maximum(rb_hi**2 - rb_lo**2, 1e-300)
    zero = np.zeros_like(x)
    with np.errstate(all="ignore"):
        part_a = _refine(lambda n: _panels(left, zero, ra, n), tol, noise_a)
        part_b = _refine(lambda n: _panels(right, rb_lo, np.full_like(x, rb_hi), n), tol, noise_b)
    return part_a + part_b


def tail(F: Integrand, a: float, b: float, x, tol: float = 1e-12) -> np.ndarray:
    """Return int_x^b F(t) dt, accurate in relative terms as x approaches b."""
    return cumulative(lambda t: F(-t), -b, -a, -np.asarray(x, dtype=float), tol)


def total(F: Integrand, a: float, b: float, tol: float = 1e-12) -> float:
    """int_a^b F with square-root endpoint behaviour at both ends."""
    return float(cumulative(F, a, b, np.array([b]), tol)[0])
