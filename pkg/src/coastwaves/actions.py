"""Turning points, actions, frequencies and Bohr-Sommerfeld quantization."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import _quadrature as quad
from ._spectral import PeriodicPrimitive
from .errors import NumericalError
from .model import DepthModel

__all__ = [
    "CausticDescriptor",
    "TorusData",
    "QuantizedMode",
    "find_turning_points",
    "build_torus",
    "action_integrals",
    "frequencies",
    "hamiltonian_frequencies",
    "solve_quantization",
    "action_defect",
    "quantization_residual",
    "make_mode",
    "quantized_actions",
]

_SCAN = 4097
_SEARCH_BOX = 50.0


@dataclass(frozen=True)
class CausticDescriptor:
    side: str  # "left" | "right"
    kind: str  # "simple" | "coastal"
    location: float


def _search_interval(model: DepthModel) -> tuple[float, float]:
    lo = model.u_L if math.isfinite(model.u_L) else -_SEARCH_BOX
    hi = model.u_R if math.isfinite(model.u_R) else _SEARCH_BOX
    return lo, hi


def find_turning_points(model: DepthModel, E: float, kappa: float) -> tuple[CausticDescriptor, CausticDescriptor]:
    """Endpoints of the single interval where E f1 - kappa f2 > 0."""
    if E <= 0:
        raise NumericalError("energy E must be positive")
    lo, hi = _search_interval(model)
    us = np.linspace(lo, hi, _SCAN)
    with np.errstate(all="ignore"):
        R = np.asarray(model.radicand(us, E, kappa), dtype=float)
    shore_l, shore_r = model.shores
    pos = R > 0
    # the shores themselves count as inside the motion region
    if shore_l:
        pos[0] = True
    if shore_r:
        pos[-1] = True
    if not pos.any():
        raise NumericalError(f"E f1 - kappa f2 is nowhere positive for kappa={kappa}")
    edges = np.diff(pos.astype(int))
    starts = list(np.nonzero(edges == 1)[0] + 1)
    ends = list(np.nonzero(edges == -1)[0])
    if pos[0]:
        starts.insert(0, 0)
    if pos[-1]:
        ends.append(_SCAN - 1)
    if len(starts) != 1:
        raise NumericalError(
            f"multi-well torus: E f1 - kappa f2 > 0 on {len(starts)} disjoint intervals (kappa={kappa})"
        )
    i0, i1 = starts[0], ends[0]

    def radicand(u: float) -> float:
        return float(model.radicand(u, E, kappa))

    if shore_l:
        left = CausticDescriptor("left", "coastal", model.u_L)
    else:
        if i0 == 0:
            raise NumericalError("no sign change of E f1 - kappa f2 on the left side")
        left = CausticDescriptor("left", "simple", _root(radicand, us[i0 - 1], us[i0]))
    if shore_r:
        right = CausticDescriptor("right", "coastal", model.u_R)
    else:
        if i1 == _SCAN - 1:
            raise NumericalError("no sign change of E f1 - kappa f2 on the right side")
        right = CausticDescriptor("right", "simple", _root(radicand, us[i1], us[i1 + 1]))
    return left, right


def _root(fn, a: float, b: float) -> float:
    fa, fb = fn(a), fn(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    return brentq(fn, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


@dataclass
class TorusData:
    """One invariant torus Lambda(E, kappa) with its actions and primitives."""

    model: DepthModel
    E: float
    kappa: float
    caustics: tuple[CausticDescriptor, CausticDescriptor]
    S1: float  # int p_u du over the motion interval
    T1: float  # int du / (sqrt(E f1 - kappa f2) sqrt(f2))
    mean_f2: float  # <f2> over alpha^1
    v_action: PeriodicPrimitive = field(repr=False)  # S2(v)
    v_time: PeriodicPrimitive = field(repr=False)  # eta(v)

    @property
    def u0(self) -> tuple[float, float]:
        return self.caustics[0].location, self.caustics[1].location

    @property
    def I1(self) -> float:
        return self.S1 / np.pi

    @property
    def I2(self) -> float:
        return self.v_action.period_integral / (2 * np.pi)

    @property
    def I(self) -> tuple[float, float]:
        return self.I1, self.I2

    @property
    def eta_period(self) -> float:
        return self.v_time.period_integral

    @property
    def omega(self) -> tuple[float, float]:
        """Frequencies in the regularised time where both angles are uniform."""
        return 2 * np.pi / self.T1, 4 * np.pi * self.mean_f2 / self.eta_period

    # momenta and integrands on the u side

    def p_u(self, u):
        m, E, k = self.model, self.E, self.kappa
        with np.errstate(all="ignore"):
            return np.sqrt(np.maximum(E * m.F1(u) / m.F2(u) - k, 0.0))

    def p_v(self, v):
        return np.sqrt(np.maximum(self.E * self.model.G(v) + self.kappa, 0.0))

    def _dalpha(self, u):
        m = self.model
        with np.errstate(all="ignore"):
            return 1.0 / np.sqrt(np.maximum(m.radicand(u, self.E, self.kappa), 0.0) * m.F2(u))

    def _split(self, F, u):
        """(int_a^u F, int_u^b F), each computed from its own endpoint where it is small."""
        a, b = self.u0
        u = np.clip(np.asarray(u, dtype=float), a, b)
        m = 0.5 * (a + b)
        near_l = u <= m
        left = np.zeros_like(u)
        right = np.zeros_like(u)
        if np.any(near_l):
            left[near_l] = quad.cumulative(F, a, b, u[near_l])
        if np.any(~near_l):
            right[~near_l] = quad.tail(F, a, b, u[~near_l])
        return left, right, near_l

    def S_L(self, u):
        left, right, near_l = self._split(self.p_u, u)
        return np.where(near_l, left, self.S1 - right)

    def S_R(self, u):
        left, right, near_l = self._split(self.p_u, u)
        return np.where(near_l, self.S1 - left, right)

    def S_pair(self, u):
        left, right, near_l = self._split(self.p_u, u)
        return np.where(near_l, left, self.S1 - right), np.where(near_l, self.S1 - left, right)

    def alpha1(self, u):
        """alpha^1 on the p_u > 0 branch: 0 at the left caustic, pi at the right."""
        left, right, near_l = self._split(self._dalpha, u)
        c = np.pi / self.T1
        return np.where(near_l, c * left, np.pi - c * right)

    def S2(self, v):
        return self.v_action(v)

    def eta(self, v):
        return self.v_time(v)


def build_torus(model: DepthModel, E: float, kappa: float) -> TorusData:
    gmin = float(np.min(model.G(np.linspace(0, 2 * np.pi, 2048, endpoint=False))))
    if E * gmin + kappa <= 0:
        raise NumericalError(f"E g + kappa must stay positive on the circle (min {E * gmin + kappa:.3e})")
    caustics = find_turning_points(model, E, kappa)
    a, b = caustics[0].location, caustics[1].location

    def p_u(u):
        with np.errstate(all="ignore"):
            return np.sqrt(np.maximum(E * model.F1(u) / model.F2(u) - kappa, 0.0))

    def dalpha(u):
        with np.errstate(all="ignore"):
            return 1.0 / np.sqrt(np.maximum(model.radicand(u, E, kappa), 0.0) * model.F2(u))

    def f2_dalpha(u):
        with np.errstate(all="ignore"):
            return np.sqrt(model.F2(u) / np.maximum(model.radicand(u, E, kappa), 0.0))

    S1 = quad.total(p_u, a, b)
    T1 = quad.total(dalpha, a, b)
    mean_f2 = quad.total(f2_dalpha, a, b) / T1
    v_action = PeriodicPrimitive(lambda v: np.sqrt(E * model.G(v) + kappa))
    v_time = PeriodicPrimitive(lambda v: 1.0 / np.sqrt(E * model.G(v) + kappa))
    return TorusData(model, E, kappa, caustics, S1, T1, mean_f2, v_action, v_time)


def action_integrals(model: DepthModel, E: float, kappa: float) -> tuple[float, float]:
    return build_torus(model, E, kappa).I


def frequencies(model: DepthModel, E: float, kappa: float) -> tuple[float, float]:
    """Frequency vector (2 pi / T1, 4 pi <f2> / eta(2 pi)).

    This is the frequency of the flow in the time tau with dt = (f1 + f2 g) dtau
    (up to the factor 2 from H0), in which both angles advance uniformly.  It is
    parallel to dE/dI from :func:`hamiltonian_frequencies`.
    """
    return build_torus(model, E, kappa).omega


def hamiltonian_frequencies(model: DepthModel, E: float, kappa: float, step: float = 1e-5) -> tuple[float, float]:
    """dE/dI from a Richardson-extrapolated finite-difference Jacobian of I(E, kappa)."""

    def jac(hs: float) -> np.ndarray:
        dE = hs * max(1.0, abs(E))
        dk = hs * max(1.0, abs(kappa))
        cols = []
        for dx in ((dE, 0.0), (0.0, dk)):
            plus = np.array(action_integrals(model, E + dx[0], kappa + dx[1]))
            minus = np.array(action_integrals(model, E - dx[0], kappa - dx[1]))
            cols.append((plus - minus) / (2 * (dx[0] or dx[1])))
        return np.column_stack(cols)

    J = (4 * jac(step / 2) - jac(step)) / 3
    if abs(np.linalg.det(J)) < 1e-12 * np.linalg.norm(J) ** 2:
        raise NumericalError("singular action Jacobian")
    inv = np.linalg.inv(J)
    return float(inv[0, 0]), float(inv[0, 1])


@dataclass(frozen=True)
class QuantizedMode:
    nu: tuple[int, int]
    h: float
    I_nu: tuple[float, float]
    q: tuple[float, float]

    @property
    def q_over_h(self) -> tuple[float, float]:
        return self.q[0] / self.h, self.q[1] / self.h


def quantized_actions(nu: tuple[int, int], h: float) -> tuple[float, float]:
    return h * (nu[0] + 0.5), h * nu[1]


def action_defect(torus: TorusData, nu: tuple[int, int], h: float, bound: Optional[float] = None) -> tuple[float, float]:
    """q = I^nu - I for the fixed torus; warns when |q|/h exceeds ``bound``."""
    I1n, I2n = quantized_actions(nu, h)
    q = (I1n - torus.I1, I2n - torus.I2)
    if bound is not None and max(abs(q[0]), abs(q[1])) > bound * h:
        warnings.warn(f"action defect |q|/h = {max(map(abs, q)) / h:.3g} exceeds {bound}", RuntimeWarning, stacklevel=2)
    return q


def make_mode(torus: TorusData, nu: tuple[int, int], h: float, bound: Optional[float] = None) -> QuantizedMode:
    return QuantizedMode(tuple(nu), h, quantized_actions(nu, h), action_defect(torus, nu, h, bound))


def quantization_residual(torus: TorusData, nu: tuple[int, int], h: float) -> tuple[float, float]:
    return (
        2 * torus.S1 - 2 * np.pi * h * (nu[0] + 0.5),
        torus.v_action.period_integral - 2 * np.pi * h * nu[1],
    )


def _kappa_window(model: DepthModel, E: float) -> tuple[float, float]:
    gmin = float(np.min(model.G(np.linspace(0, 2 * np.pi, 2048, endpoint=False))))
    lo, hi = _search_interval(model)
    pad = 1e-3 * (hi - lo)
    us = np.linspace(lo + pad, hi - pad, 2049)
    with np.errstate(all="ignore"):
        f = model.F1(us) / model.F2(us)
    return -E * gmin, E * float(np.max(f[np.isfinite(f)]))


def solve_quantization(
    model: DepthModel,
    nu: tuple[int, int],
    E: float = 1.0,
    kappa_guess: Optional[float] = None,
    reference: Optional[TorusData] = None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> tuple[float, float, QuantizedMode]:
    """Find (kappa, h) with I(E, kappa) = (h (nu1 + 1/2), h nu2) by 2-D Newton.

    The starting point comes from a scan of the h-free combination
    S2(2 pi) (nu1 + 1/2) - 2 S1 nu2 over the admissible kappa window.
    """
    nu = (int(nu[0]), int(nu[1]))
    if nu[0] < 1 or nu[1] < 1:
        raise NumericalError("quantum numbers must be at least 1")
    klo, khi = _kappa_window(model, E)

    def ratio_residual(k: float) -> float:
        t = build_torus(model, E, k)
        return t.v_action.period_integral * (nu[0] + 0.5) - 2 * t.S1 * nu[1]

    if kappa_guess is None:
        kappa_guess = _scan_guess(ratio_residual, model, E, klo, khi)
    t = build_torus(model, E, kappa_guess)
    k = kappa_guess
    h = t.v_action.period_integral / (2 * np.pi * nu[1])
    for _ in range(max_iter):
        r = np.array(quantization_residual(t, nu, h))
        if np.max(np.abs(r)) <= tol * max(1.0, 2 * t.S1):
            break
        J = np.array(
            [
                [-t.T1 * t.mean_f2, -2 * np.pi * (nu[0] + 0.5)],
                [0.5 * t.eta_period, -2 * np.pi * nu[1]],
            ]
        )
        dk, dh = np.linalg.solve(J, -r)
        # damp steps that would leave the admissible window
        lam = 1.0
        while lam > 1e-6:
            k_new, h_new = k + lam * dk, h + lam * dh
            if klo < k_new < khi and h_new > 0:
                try:
                    t_new = build_torus(model, E, k_new)
                    break
                except NumericalError:
                    pass
            lam /= 2
        else:
            raise NumericalError(f"quantization Newton left the admissible kappa window ({klo:.4g}, {khi:.4g})")
        k, h, t = k_new, h_new, t_new
    else:
        raise NumericalError(f"quantization Newton did not converge in {max_iter} iterations")
    if reference is None:
        # the torus is quantized at nu by construction; what remains is solver round-off
        mode = QuantizedMode(nu, h, quantized_actions(nu, h), (0.0, 0.0))
    else:
        mode = make_mode(reference, nu, h)
    return k, h, mode


def _scan_guess(fn, model: DepthModel, E: float, klo: float, khi: float, samples: int = 256) -> float:
    """Bracket a sign change of ``fn`` over kappa samples where the torus exists.

    Where existence fails between two samples (a second well opens, say) the
    bracket is closed at the edge of the valid region, found by bisection.
    """
    span = khi - klo
    t = np.arange(1, samples) / samples
    ks = np.unique(np.concatenate([klo + span * t, klo + span * np.logspace(-6, 0, samples, endpoint=False)]))

    def value(k: float) -> Optional[float]:
        try:
            return fn(k)
        except NumericalError:
            return None

    def edge(good: float, bad: float) -> float:
        for _ in range(60):
            mid = 0.5 * (good + bad)
            if value(mid) is None:
                bad = mid
            else:
                good = mid
        return good

    def bracket(k0: float, v0: float, k1: float, v1: float) -> Optional[float]:
        if v0 * v1 <= 0:
            return brentq(fn, k0, k1, xtol=1e-10) if k0 != k1 else k0
        return None

    prev: Optional[tuple[float, float]] = None
    last_bad: Optional[float] = None
    for k in map(float, ks):
        val = value(k)
        if val is None:
            if prev is not None:
                e = edge(prev[0], k)
                root = bracket(prev[0], prev[1], e, fn(e))
                if root is not None:
                    return root
            prev, last_bad = None, k
            continue
        if prev is None and last_bad is not None:
            e = edge(k, last_bad)
            prev = (e, fn(e))
        if prev is not None:
            root = bracket(prev[0], prev[1], k, val)
            if root is not None:
                return root
        prev = (k, val)
    raise NumericalError("no torus in the admissible kappa window matches the requested quantum numbers")
