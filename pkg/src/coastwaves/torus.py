"""Angle coordinates on the invariant torus and quantities pulled back to them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _quadrature as quad
from ._spectral import cosine_series, eval_cosine, eval_cosine_derivative
from .actions import TorusData
from .errors import NumericalError

__all__ = ["AngleChart", "build_chart", "measure_factor", "h_sub_on_torus"]

TWO_PI = 2 * np.pi


@dataclass
class AngleChart:
    """alpha^1 in [0, 2 pi) with alpha^1 in (0, pi) on the p_u > 0 branch.

    u(alpha^1) is stored as a cosine series, which makes it even and 2 pi
    periodic, exactly the mirror continuation onto the p_u < 0 branch.
    """

    torus: TorusData
    u_coef: np.ndarray = field(repr=False)
    f2_coef: np.ndarray = field(repr=False)

    @property
    def T1(self) -> float:
        return self.torus.T1

    @property
    def eta_period(self) -> float:
        return self.torus.eta_period

    @property
    def mean_f2(self) -> float:
        return float(self.f2_coef[0])

    @property
    def omega(self) -> tuple[float, float]:
        return 2 * np.pi / self.T1, 4 * np.pi * self.mean_f2 / self.eta_period

    # u <-> alpha^1

    def alpha1_of_u(self, u):
        return self.torus.alpha1(u)

    def u_of_alpha1(self, a1):
        a, b = self.torus.u0
        return np.clip(eval_cosine(self.u_coef, a1), a, b)

    def du_dalpha1(self, a1):
        return eval_cosine_derivative(self.u_coef, a1)

    # the alpha^1-dependent shift of alpha^2

    def correction(self, a1):
        """(2 T1 / eta(2 pi)) int_0^{alpha^1} (<f2> - f2(u)) d alpha; odd and 2 pi periodic."""
        m = np.arange(1, self.f2_coef.size)
        b = self.f2_coef[1:] / m
        z = np.exp(1j * np.asarray(a1, dtype=float))
        zk = np.ones_like(z)
        acc = np.zeros(z.shape)
        for c in b:
            zk = zk * z
            acc += c * zk.imag
        return -(2 * self.T1 / self.eta_period) * acc

    def alpha2(self, u, v, branch: int = 1):
        """alpha^2 at (u, v) on the p_u > 0 branch (branch=+1) or p_u < 0 (branch=-1)."""
        a1 = self.alpha1_of_u(u)
        return TWO_PI * self.torus.eta(v) / self.eta_period + branch * self.correction(a1)

    def alpha_of_uv(self, u, v, branch: int = 1):
        a1 = self.alpha1_of_u(u)
        a2 = TWO_PI * self.torus.eta(v) / self.eta_period + branch * self.correction(a1)
        if branch < 0:
            a1 = TWO_PI - a1
        return a1, a2

    def v_of_alpha(self, a1, a2):
        y = self.eta_period * (np.asarray(a2, dtype=float) - self.correction(a1)) / TWO_PI
        return self.torus.v_time.inverse(y)

    def uv_of_alpha(self, a1, a2):
        return self.u_of_alpha1(a1), self.v_of_alpha(a1, a2)

    def measure_factor(self, a1, a2):
        return measure_factor(self, a1, a2)

    def h_sub(self, a1, a2):
        return h_sub_on_torus(self, a1, a2)


def _alpha1_nodes(torus: TorusData, n: int) -> np.ndarray:
    """u at alpha^1 = pi j / n for j = 0..n, by Newton in s with u = u* +- s^2."""
    a, b = torus.u0
    theta = np.pi * np.arange(n + 1) / n
    # initial guess from a table on a cosine-clustered u grid
    t = np.linspace(0, np.pi, 513)
    ut = a + (b - a) * (1 - np.cos(t)) / 2
    at = torus.alpha1(ut)
    at[0], at[-1] = 0.0, np.pi
    u = np.interp(theta, at, ut)
    u[0], u[-1] = a, b

    left = theta <= np.pi / 2
    inner = slice(1, n)
    s = np.where(left, np.sqrt(np.maximum(u - a, 0)), np.sqrt(np.maximum(b - u, 0)))
    sgn = np.where(left, 1.0, -1.0)
    base = np.where(left, a, b)
    scale = np.pi / torus.T1
    for _ in range(50):
        us = base + sgn * s * s
        F = torus.alpha1(us[inner]) - theta[inner]
        dF = scale * 2 * s[inner] * torus._dalpha(us[inner]) * sgn[inner]
        step = F / dF
        s[inner] = s[inner] - step
        if np.max(np.abs(step)) < 1e-13:
            break
    else:
        if np.max(np.abs(F)) > 1e-11:
            raise NumericalError("inversion of alpha^1(u) did not converge")
    u = base + sgn * s * s
    u[0], u[-1] = a, b
    return u


def build_chart(torus: TorusData, tol: float = 1e-12) -> AngleChart:
    a, b = torus.u0
    n = 32
    while True:
        nodes = _alpha1_nodes(torus, n)
        coef = cosine_series(nodes)
        tail = np.max(np.abs(coef[-max(2, n // 8) :]))
        if tail <= tol * max(1.0, abs(b - a)):
            break
        if n >= 4096:
            raise NumericalError(f"cosine series of u(alpha^1) did not resolve (tail {tail:.2e})")
        n *= 2
    if np.any(np.diff(nodes) <= 0):
        raise NumericalError("alpha^1(u) is not monotone on the motion interval")
    u_coef = coef
    # f2(u(alpha^1)) on a finer node set for its own expansion
    m = 4 * n
    theta = np.pi * np.arange(m + 1) / m
    f2_vals = torus.model.F2(np.clip(eval_cosine(u_coef, theta), a, b))
    f2_coef = cosine_series(f2_vals)
    return AngleChart(torus, u_coef, f2_coef)


def measure_factor(chart: AngleChart, a1, a2):
    """f1(u) + f2(u) g(v) at the torus point with angles (alpha^1, alpha^2).

    With the regularised frequencies of :attr:`AngleChart.omega` the flow is
    d alpha / dt = omega / this factor, so the constant in front is 1.
    """
    u, v = chart.uv_of_alpha(a1, a2)
    m = chart.torus.model
    return m.F1(u) + m.F2(u) * m.G(v)


def h_sub_on_torus(chart: AngleChart, a1, a2):
    """D1 E (f + g) pulled back to the torus; 0 when the perturbation is off."""
    m = chart.torus.model
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if m.mu == 0:
        return np.zeros(np.broadcast(a1, a2).shape)
    u, v = chart.uv_of_alpha(a1, a2)
    return _h_sub_uv(m, chart.torus.E, u, v)


def _h_sub_uv(m, E: float, u, v):
    d1 = m.Dpert(u, v)
    f2 = m.F2(u)
    with np.errstate(all="ignore"):
        val = d1 * E * (m.F1(u) + f2 * m.G(v)) / f2
    val = np.where((f2 == 0) & (d1 == 0), 0.0, val)
    if not np.all(np.isfinite(val)):
        raise NumericalError("subprincipal symbol is not finite on the torus; D1 must vanish at the shore")
    return val
