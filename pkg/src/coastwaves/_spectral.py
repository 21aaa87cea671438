"""Fourier and Chebyshev representations used for periodic primitives and inverses."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericalError

TWO_PI = 2 * np.pi


def trig_sum(coef: np.ndarray, theta, kind: str = "exp") -> np.ndarray:
    """Sum_k coef[k-1] * z^k for k = 1..K with z = e^{i theta}.

    Uses running powers so memory stays at the size of ``theta``.
    """
    theta = np.asarray(theta, dtype=float)
    z = np.exp(1j * theta)
    zk = np.ones_like(z)
    acc = np.zeros_like(z)
    for c in coef:
        zk = zk * z
        acc += c * zk
    return acc


class PeriodicPrimitive:
    """F(v) = int_0^v func for a smooth 2*pi-periodic ``func``.

    ``func`` is expanded in a Fourier series (rfft) until the tail drops
    below ``tol``; the primitive is then a linear term plus a periodic series.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], tol: float = 1e-15, n_max: int = 1 << 16):
        self.func = func
        n = 64
        while True:
            grid = TWO_PI * np.arange(n) / n
            vals = np.asarray(func(grid), dtype=float)
            c = np.fft.rfft(vals) / n
            scale = max(abs(c[0]), 1e-300)
            tail = np.max(np.abs(c[-n // 8 :]))
            if tail <= tol * scale:
                break
            if n >= n_max:
                raise NumericalError(f"Fourier series of periodic integrand did not resolve (tail {tail:.2e})")
            n *= 2
        keep = np.nonzero(np.abs(c) > 1e-17 * scale)[0]
        K = int(keep.max()) if keep.size else 0
        self.mean = float(c[0].real)
        self.coef = c[1 : K + 1].copy()
        ks = np.arange(1, K + 1)
        # primitive of 2 Re(c_k e^{ikv}) is 2 Re(c_k (e^{ikv} - 1)/(ik))
        self._pcoef = 2 * self.coef / (1j * ks)
        self._pconst = -float(np.sum(self._pcoef).real)
        self.period_integral = TWO_PI * self.mean

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.mean * v + self._pconst + trig_sum(self._pcoef, v).real

    def derivative(self, v) -> np.ndarray:
        return np.asarray(self.func(np.asarray(v, dtype=float)), dtype=float)

    def inverse(self, y, tol: float = 1e-14) -> np.ndarray:
        """Solve F(v) = y by Newton; F is strictly increasing when func > 0."""
        y = np.asarray(y, dtype=float)
        v = y / self.mean
        for _ in range(60):
            step = (self(v) - y) / self.derivative(v)
            v = v - step
            if np.max(np.abs(step), initial=0.0) <= tol * (1 + np.max(np.abs(v), initial=0.0)):
                return v
        raise NumericalError("inverse of periodic primitive did not converge")


def cosine_series(samples_at_cheb: np.ndarray) -> np.ndarray:
    """Cosine coefficients a_m with y(theta) = sum a_m cos(m theta), theta in [0, pi].

    ``samples_at_cheb`` are values at theta_j = pi j / n, j = 0..n (DCT-I).
    """
    y = np.asarray(samples_at_cheb, dtype=float)
    n = y.size - 1
    ext = np.concatenate([y, y[-2:0:-1]])
    a = np.fft.rfft(ext).real / n
    a[0] /= 2
    a[n] /= 2
    return a[: n + 1]


def eval_cosine(a: np.ndarray, theta) -> np.ndarray:
    """Evaluate sum a_m cos(m theta) (Clenshaw on cos theta)."""
    x = np.cos(np.asarray(theta, dtype=float))
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for c in a[:0:-1]:
        b1, b2 = 2 * x * b1 - b2 + c, b1
    return x * b1 - b2 + a[0]


def eval_cosine_derivative(a: np.ndarray, theta) -> np.ndarray:
    """d/dtheta of sum a_m cos(m theta) = -sum m a_m sin(m theta)."""
    m = np.arange(1, a.size)
    return -_sin_sum(m * a[1:], theta)


def _sin_sum(b: np.ndarray, theta) -> np.ndarray:
    return trig_sum(b, theta).imag
