"""Finite-difference residual of the constructed field and the h-convergence study."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import NumericalError
from .model import DepthModel

__all__ = [
    "STAGGERED_6",
    "staggered_diff",
    "apply_operator",
    "ResidualReport",
    "residual_on_grid",
    "residual",
    "window_bounds",
    "verification_grid",
    "convergence_study",
    "fit_slope",
]

# sixth-order first derivative at half points: sum c_j (f_{i+j} - f_{i+1-j})
STAGGERED_6 = np.array([75 / 64, -25 / 384, 3 / 640])
MARGIN = 5


def staggered_diff(f: np.ndarray, d: float, axis: int, periodic: bool) -> np.ndarray:
    """Derivative at i + 1/2.

    Periodic: result index i is the midpoint between i and i+1 (wrapping).
    Otherwise: result index j is the midpoint between j+2 and j+3, so the
    output is shorter by 5 along ``axis``.
    """
    c1, c2, c3 = STAGGERED_6
    if periodic:
        r = lambda k: np.roll(f, -k, axis=axis)  # noqa: E731
        return (c1 * (r(1) - f) + c2 * (r(2) - r(-1)) + c3 * (r(3) - r(-2))) / d
    n = f.shape[axis]
    s = lambda lo: np.take(f, np.arange(lo, lo + n - 5), axis=axis)  # noqa: E731
    # midpoint between index k and k+1 with k = j + 2
    return (c1 * (s(3) - s(2)) + c2 * (s(4) - s(1)) + c3 * (s(5) - s(0))) / d


def _coefficient(model: DepthModel, h: float, mu: int, u, v):
    f2 = model.F2(u)
    D = f2 / (model.F1(u) + f2 * model.G(v))
    if mu:
        D = D + h * model.Dpert(u, v)
    return D


def apply_operator(
    model: DepthModel,
    psi: np.ndarray,
    us: np.ndarray,
    vs: np.ndarray,
    h: float,
    mu: Optional[int] = None,
    coefficient: Optional[Callable] = None,
) -> np.ndarray:
    """-h^2 [d_u (D d_u psi) + d_v (D d_v psi)] in conservative form.

    ``vs`` must be a uniform periodic grid on [0, 2 pi) and ``us`` uniform;
    the result covers ``us[MARGIN:-MARGIN]``.
    """
    mu = model.mu if mu is None else mu
    us = np.asarray(us, dtype=float)
    vs = np.asarray(vs, dtype=float)
    du = np.diff(us)
    dv = np.diff(vs)
    if not (np.allclose(du, du[0], rtol=1e-10, atol=0) and np.allclose(dv, dv[0], rtol=1e-10, atol=0)):
        raise NumericalError("apply_operator needs a uniform grid")
    if us.size < 2 * MARGIN + 1:
        raise NumericalError("grid too small for the 6th-order stencil")
    du, dv = float(du[0]), float(dv[0])
    if abs(vs[-1] + dv - vs[0] - 2 * np.pi) > 1e-9:
        raise NumericalError("v grid must cover [0, 2 pi) periodically without the endpoint")
    coef = coefficient or (lambda u, v: _coefficient(model, h, mu, u, v))

    # u-fluxes at midpoints k + 1/2, k = 2 .. n-4
    umid = 0.5 * (us[2:-3] + us[3:-2])
    Fu = staggered_diff(psi, du, axis=0, periodic=False) * coef(umid[:, None], vs[None, :])
    # divergence at i = 5 .. n-6 from fluxes indexed j = i - 2 +- ...
    c1, c2, c3 = STAGGERED_6
    n = Fu.shape[0]
    s = lambda lo: Fu[lo : lo + n - 5]  # noqa: E731
    div_u = (c1 * (s(3) - s(2)) + c2 * (s(4) - s(1)) + c3 * (s(5) - s(0))) / du

    ui = us[MARGIN:-MARGIN]
    vmid = vs + 0.5 * dv
    Fv = staggered_diff(psi[MARGIN:-MARGIN], dv, axis=1, periodic=True) * coef(ui[:, None], vmid[None, :])
    # flux index j sits at j + 1/2; divergence at i uses j = i, i-1, ...
    r = lambda k: np.roll(Fv, -k, axis=1)  # noqa: E731
    div_v = (c1 * (Fv - r(-1)) + c2 * (r(1) - r(-2)) + c3 * (r(2) - r(-3))) / dv
    return -(h**2) * (div_u + div_v)


@dataclass
class ResidualReport:
    l2_residual: float
    l2_norm: float
    relative_residual: float
    interior_window: tuple[float, float]
    fd_order: int
    h: float
    grid: tuple[int, int]
    grid_limited: Optional[bool] = None
    fine_l2_residual: Optional[float] = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["interior_window"] = list(self.interior_window)
        d["grid"] = list(self.grid)
        return d


def residual_on_grid(
    model, psi, us, vs, h: float, eigenvalue: float, mu: Optional[int] = None, rows: int = 1024
) -> tuple[float, float]:
    """(||(H - E) psi||, ||psi||) over us[MARGIN:-MARGIN] x vs, in blocks of ``rows``."""
    us = np.asarray(us, dtype=float)
    n = us.size - 2 * MARGIN
    if n < 1:
        raise NumericalError("grid too small for the 6th-order stencil")
    r2 = np.empty(n)
    p2 = np.empty(n)
    for s in range(0, n, rows):
        e = min(n, s + rows)
        block = psi[s : e + 2 * MARGIN]
        r = apply_operator(model, block, us[s : e + 2 * MARGIN], vs, h, mu) - eigenvalue * block[MARGIN:-MARGIN]
        r2[s:e] = np.sum(np.abs(r) ** 2, axis=1)
        p2[s:e] = np.sum(np.abs(block[MARGIN:-MARGIN]) ** 2, axis=1)
    ui = us[MARGIN:-MARGIN]
    dv = float(vs[1] - vs[0])  # a plain sum over periodic v is the trapezoid rule
    return math.sqrt(float(trapezoid(r2 * dv, ui))), math.sqrt(float(trapezoid(p2 * dv, ui)))


def window_bounds(chart, band: float) -> tuple[float, float]:
    """u-range where alpha^1 stays at least ``band`` away from 0 and pi."""
    if not 0 < band < np.pi / 2:
        raise NumericalError("window band must lie in (0, pi/2)")
    u = chart.u_of_alpha1(np.array([band, np.pi - band]))
    return float(u[0]), float(u[1])


def verification_grid(
    chart,
    h: float,
    band: float,
    ppw: float = 12.0,
    min_v: int = 64,
    shore_cells: int = 40,
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid on the window resolving the local wavelength.

    Near a shore the coefficient D vanishes linearly, so the field varies on
    the scale of the distance to the endpoint as well; the u-step is also
    capped at that distance over ``shore_cells``.
    """
    lo, hi = window_bounds(chart, band)
    t = chart.torus
    a, b = t.u0
    probe = np.linspace(lo, hi, 401)
    kmax_u = float(np.max(t.p_u(probe))) / h
    vv = np.linspace(0, 2 * np.pi, 1024, endpoint=False)
    kmax_v = float(np.max(t.p_v(vv))) / h
    du = min(2 * np.pi / (ppw * kmax_u), (lo - a) / shore_cells, (b - hi) / shore_cells)
    nu = max(int(math.ceil((hi - lo) / du)), 4 * MARGIN)
    # the stencil margin lies inside the window so it never reaches a caustic
    us = np.linspace(lo, hi, nu + 1)
    nv = max(min_v, int(2 ** math.ceil(math.log2(ppw * kmax_v))))
    vs = 2 * np.pi * np.arange(nv) / nv
    return us, vs


def _part(values: np.ndarray, part: Optional[str]) -> np.ndarray:
    if part is None:
        return values
    if part == "re":
        return values.real.astype(complex)
    if part == "im":
        return values.imag.astype(complex)
    raise ValueError(f"part must be None, 're' or 'im' (got {part!r})")


def residual(
    model: DepthModel,
    chart,
    sol,
    mode,
    lam: float,
    band: float = 0.15,
    ppw: float = 12.0,
    shore_cells: int = 40,
    check_grid: bool = True,
    part: Optional[str] = None,
    options=None,
) -> ResidualReport:
    """Relative residual of the glued field with eigenvalue E + h lambda on the window.

    With ``check_grid`` the run is repeated with both steps halved; a change
    of more than 20% in the residual flags the report as grid-limited.
    ``part`` selects the real or imaginary part of the field instead of psi.
    """
    from .field import evaluate_psi

    h = mode.h
    eig = chart.torus.E + h * lam
    us, vs = verification_grid(chart, h, band, ppw=ppw, shore_cells=shore_cells)

    def measure(us, vs):
        wf = evaluate_psi(chart, sol, mode, us, vs, options, lam=lam)
        return residual_on_grid(model, _part(wf.values, part), us, vs, h, eig)

    res, norm = measure(us, vs)
    if norm == 0:
        raise NumericalError("field vanishes on the verification window")
    limited = None
    fine = None
    if check_grid:
        fus = np.linspace(us[0], us[-1], 2 * (us.size - 1) + 1)
        fvs = 2 * np.pi * np.arange(2 * vs.size) / (2 * vs.size)
        fine, _ = measure(fus, fvs)
        limited = bool(abs(fine - res) > 0.2 * fine)
    return ResidualReport(
        l2_residual=res,
        l2_norm=norm,
        relative_residual=res / norm,
        interior_window=(float(us[0]), float(us[-1])),
        fd_order=6,
        h=h,
        grid=(int(us.size), int(vs.size)),
        grid_limited=limited,
        fine_l2_residual=fine,
    )


def fit_slope(hs: Sequence[float], values: Sequence[float]) -> float:
    if len(hs) < 2:
        raise NumericalError("insufficient points for a slope fit")
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])


def convergence_study(run_member: Callable[[tuple[int, int]], ResidualReport], direction: tuple[int, int], count: int, start: int = 1):
    """Slope of log(relative residual) against log(h) along nu = m * direction.

    ``run_member`` builds and checks the field for one nu.  Members flagged
    grid-limited are excluded and listed.
    """
    if count < 3:
        raise NumericalError("insufficient points: a convergence study needs at least 3 modes")
    reports = []
    excluded = []
    for m in range(start, start + count):
        nu = (m * direction[0], m * direction[1])
        rep = run_member(nu)
        if rep.grid_limited:
            excluded.append(nu)
        else:
            reports.append((nu, rep))
    if len(reports) < 2:
        raise NumericalError("insufficient points after excluding grid-limited runs")
    slope = fit_slope([r.h for _, r in reports], [r.relative_residual for _, r in reports])
    return slope, reports, excluded
