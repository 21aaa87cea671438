"""The glued leading-term eigenfunction on a (u, v) grid."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .actions import QuantizedMode
from .errors import NumericalError
from .special import airy_pair, bessel_j0, bessel_j1
from .torus import AngleChart
from .transport import TransportSolution

__all__ = [
    "smoothstep",
    "partition_of_unity",
    "defect_multipliers",
    "amplitude_combinations",
    "BranchAmplitudes",
    "branch_amplitudes",
    "chart_terms",
    "evaluate_psi",
    "WaveField",
    "FieldOptions",
]

TWO_PI = 2 * np.pi


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smoothstep(x):
    """C-infinity step: 0 for x <= -1, 1 for x >= 1, 1/2 at 0, odd around 1/2."""
    x = np.asarray(x, dtype=float)
    a = _bump(1 + x)
    b = _bump(1 - x)
    return a / (a + b)


def partition_of_unity(alpha1, mid: float = np.pi / 2, delta: float = np.pi / 8):
    """(rho_L, rho_R) as functions of alpha^1 in [0, pi]; rho_L + rho_R == 1."""
    rho_l = smoothstep((mid - np.asarray(alpha1, dtype=float)) / delta)
    return rho_l, 1.0 - rho_l


def defect_multipliers(alpha1, q1: float, h: float):
    """(B^L_+, B^L_-, B^R_+, B^R_-) for the u-side action defect q1."""
    a = np.asarray(alpha1, dtype=float)
    c = 1j * q1 / h
    return (
        np.exp(c * (a - np.pi)),
        np.exp(c * (-a - np.pi)),
        np.exp(c * (a - np.pi)),
        np.exp(-c * (a - np.pi)),
    )


@dataclass
class BranchAmplitudes:
    """A e^{i q2 alpha^2 / h} on the two sheets over a (u, v) point.

    ``plus`` lives on the p_u > 0 sheet at (alpha^1, alpha^2_+); ``minus`` on
    the p_u < 0 sheet at (-alpha^1, alpha^2_-).  The alpha^2 values differ by
    the sign of the alpha^1-dependent correction.
    """

    alpha1: np.ndarray
    plus: np.ndarray
    minus: np.ndarray


def branch_amplitudes(chart: AngleChart, sol: Optional[TransportSolution], q, h: float, us, vs) -> BranchAmplitudes:
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    a1 = chart.alpha1_of_u(us)
    corr = chart.correction(a1)
    theta = TWO_PI * chart.torus.eta(vs) / chart.eta_period
    out = []
    for sgn in (1.0, -1.0):
        a2 = theta[None, :] + sgn * corr[:, None]
        if sol is None:
            phi = np.zeros((us.size, vs.size))
        else:
            phi = _phi_separable(sol, sgn * a1, sgn * corr, theta)
        out.append(np.exp(1j * phi + 1j * q[1] * a2 / h))
    return BranchAmplitudes(a1, out[0], out[1])


def _phi_separable(sol: TransportSolution, x, y, theta) -> np.ndarray:
    """Phi(x_i, theta_j + y_i) without forming the full per-point Fourier sum."""
    ks = sol.ks
    e1 = np.exp(1j * np.outer(x, ks))  # (nu, K)
    ey = np.exp(1j * np.outer(y, ks))
    M = (e1 @ sol.Phi_coeffs) * ey  # (nu, K) over k2
    et = np.exp(1j * np.outer(ks, theta))  # (K, nv)
    return (M @ et).real


def amplitude_combinations(chart: AngleChart, sol: Optional[TransportSolution], q, h: float, us, vs):
    """(A_ev^L, A_odd^L, A_ev^R, A_odd^R) on the tensor grid us x vs."""
    br = branch_amplitudes(chart, sol, q, h, us, vs)
    return _combine(br, q[0], h)


def _combine(br: BranchAmplitudes, q1: float, h: float):
    bl_p, bl_m, br_p, br_m = (b[:, None] for b in defect_multipliers(br.alpha1, q1, h))
    ev_l = 0.5 * (bl_p * br.plus + bl_m * br.minus)
    odd_l = 0.5 * (-bl_p * br.plus + bl_m * br.minus)
    ev_r = 0.5 * (br_p * br.plus + br_m * br.minus)
    odd_r = 0.5 * (-br_p * br.plus + br_m * br.minus)
    return ev_l, odd_l, ev_r, odd_r


@dataclass
class FieldOptions:
    delta: float = np.pi / 8
    mid: float = np.pi / 2
    caustic_zone: float = 1e-3  # Taylor patch where S/h falls below this


@dataclass
class WaveField:
    us: np.ndarray
    vs: np.ndarray
    values: np.ndarray  # shape (len(us), len(vs))
    metadata: dict = field(default_factory=dict)

    @property
    def du(self) -> float:
        return float(self.us[1] - self.us[0])

    @property
    def dv(self) -> float:
        return float(self.vs[1] - self.vs[0])

    def l2_norm(self) -> float:
        w = np.abs(self.values) ** 2
        return float(np.sqrt(trapezoid(trapezoid(w, self.vs, axis=1), self.us)))


def _side_kind(chart: AngleChart, side: int) -> str:
    return chart.torus.caustics[side].kind


def chart_terms(chart: AngleChart, sol, mode: QuantizedMode, us, vs, options: Optional[FieldOptions] = None):
    """Left and right chart contributions Z_L, Z_R (before rho and the global prefactor).

    psi = sqrt(pi / (2h)) (E g + kappa)^(-1/4) e^{i S2 / h}
          (rho_L Z_L + e^{i S_L(u_R)/h - i pi/2} rho_R Z_R)
    """
    options = options or FieldOptions()
    us = np.asarray(us, dtype=float)
    t = chart.torus
    h = mode.h
    q = mode.q
    SL, SR = t.S_pair(us)
    ev_l, odd_l, ev_r, odd_r = amplitude_combinations(chart, sol, q, h, us, vs)
    m = t.model
    with np.errstate(all="ignore"):
        pu = np.sqrt(np.maximum(m.radicand(us, t.E, t.kappa) / m.F2(us), 0.0))
        f = m.F1(us) / m.F2(us)
    g = m.G(np.asarray(vs, dtype=float))
    fg = f[:, None] + g[None, :]
    ZL = _side_value(_side_kind(chart, 0), SL, pu, fg, ev_l, odd_l, h, sign=-1)
    ZR = _side_value(_side_kind(chart, 1), SR, pu, fg, ev_r, odd_r, h, sign=+1)
    return ZL, ZR


def _side_value(kind: str, S, pu, fg, ev, odd, h: float, sign: int):
    """Caustic-uniform representation on one chart.

    ``sign`` is the sign in front of i A_odd; the left chart uses -1 so that
    the p_u > 0 sheet carries e^{+i S_L/h} just as the right chart does.
    """
    S = np.maximum(S, 0.0)[:, None]
    pu = pu[:, None]
    with np.errstate(all="ignore"):
        if kind == "simple":
            x = 1.5 * S
            R = x ** (1 / 6) / np.sqrt(pu)
            odd_t = odd / x ** (1 / 3)
            ai, aip = airy_pair(-((x / h) ** (2 / 3)))
            val = np.sqrt(2 * h) * np.sqrt(fg) * R * (ev * h ** (-1 / 6) * ai + sign * 1j * odd_t * h ** (1 / 6) * aip)
        else:
            Rc = np.sqrt(S * fg / pu)
            val = Rc * (ev * bessel_j0(S / h) + sign * 1j * odd * bessel_j1(S / h))
    return val


def _zone_edge(chart: AngleChart, side: int, level: float) -> float:
    """u where the side's action S equals ``level`` (S grows away from the caustic)."""
    t = chart.torus
    a, b = t.u0
    mid = 0.5 * (a + b)
    if side == 0:
        fn = lambda u: float(t.S_L(np.array([u]))[0]) - level  # noqa: E731
        return brentq(fn, a, mid, xtol=1e-15, rtol=1e-14)
    fn = lambda u: float(t.S_R(np.array([u]))[0]) - level  # noqa: E731
    return brentq(fn, mid, b, xtol=1e-15, rtol=1e-14)


def evaluate_psi(
    chart: AngleChart,
    sol: Optional[TransportSolution],
    mode: QuantizedMode,
    us,
    vs,
    options: Optional[FieldOptions] = None,
    lam: float = 0.0,
) -> WaveField:
    """Glued field on the tensor grid ``us x vs``.

    Points outside the motion interval get 0 (the exponentially small tail).
    Rows within the caustic zone are filled by linear extrapolation of the
    finite product from two rows just outside it.
    """
    options = options or FieldOptions()
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    t = chart.torus
    a, b = t.u0
    h = mode.h
    inside = (us >= a) & (us <= b)
    if not inside.all():
        warnings.warn("grid extends beyond the motion interval; the exponentially small tail is set to 0", RuntimeWarning, stacklevel=2)
    values = np.zeros((us.size, vs.size), dtype=complex)
    ui = us[inside]
    if ui.size:
        zone = options.caustic_zone * h
        u_lo = [_zone_edge(chart, 0, zone), _zone_edge(chart, 0, 2 * zone)]
        u_hi = [_zone_edge(chart, 1, zone), _zone_edge(chart, 1, 2 * zone)]
        in_l = ui < u_lo[0]
        in_r = ui > u_hi[0]
        regular = ~(in_l | in_r)
        block = np.zeros((ui.size, vs.size), dtype=complex)
        rows = np.flatnonzero(regular)
        step = max(1, (1 << 20) // max(vs.size, 1))
        for s in range(0, rows.size, step):
            sel = rows[s : s + step]
            block[sel] = _glued(chart, sol, mode, ui[sel], vs, options)
        for mask, anchors in ((in_l, u_lo), (in_r, u_hi)):
            if mask.any():
                ends = _glued(chart, sol, mode, np.array(anchors), vs, options)
                w = (ui[mask] - anchors[0]) / (anchors[1] - anchors[0])
                block[mask] = ends[0][None, :] + w[:, None] * (ends[1] - ends[0])[None, :]
        values[inside] = block
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise NumericalError(f"non-finite field value at u={us[bad[0]]:.6g}, v={vs[bad[1]]:.6g}")
    meta = {
        "E": t.E,
        "kappa": t.kappa,
        "nu": list(mode.nu),
        "h": h,
        "lambda": lam,
        "eigenvalue": t.E + h * lam,
        "case": t.model.case,
    }
    return WaveField(us, vs, values, meta)


def _glued(chart, sol, mode, us, vs, options: FieldOptions):
    t = chart.torus
    h = mode.h
    ZL, ZR = chart_terms(chart, sol, mode, us, vs, options)
    a1 = chart.alpha1_of_u(us)
    rho_l, rho_r = partition_of_unity(a1, options.mid, options.delta)
    phase = np.exp(1j * t.S1 / h - 0.5j * np.pi)
    # each chart is only needed (and only finite) where its cutoff is nonzero
    left = np.where(rho_l[:, None] > 0, rho_l[:, None] * ZL, 0.0)
    right = np.where(rho_r[:, None] > 0, rho_r[:, None] * ZR, 0.0)
    inner = left + phase * right
    pv = t.p_v(vs)
    outer = math.sqrt(math.pi / (2 * h)) * np.exp(1j * t.S2(vs) / h) / np.sqrt(pv)
    return inner * outer[None, :]
