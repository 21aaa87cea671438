"""Airy and Bessel evaluators used by the caustic representations."""
from __future__ import annotations

import numpy as np
from scipy import special as _sp

__all__ = ["airy_ai", "airy_ai_prime", "bessel_j0", "bessel_j1"]


def airy_ai(x):
    return _sp.airy(x)[0]


def airy_ai_prime(x):
    return _sp.airy(x)[1]


def airy_pair(x) -> tuple[np.ndarray, np.ndarray]:
    """(Ai, Ai') in one call."""
    ai, aip, _, _ = _sp.airy(x)
    return ai, aip


def bessel_j0(x):
    return _sp.j0(x)


def bessel_j1(x):
    return _sp.j1(x)
