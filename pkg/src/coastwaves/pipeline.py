"""Stage-by-stage orchestration shared by the CLI and the tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .actions import (
    QuantizedMode,
    TorusData,
    build_torus,
    hamiltonian_frequencies,
    make_mode,
    solve_quantization,
)
from .config import RunConfig
from .errors import NumericalError
from .field import FieldOptions, WaveField, evaluate_psi
from .torus import AngleChart, build_chart
from .transport import (
    ResonanceReport,
    TransportSolution,
    compute_lambda,
    resonance_report,
    solve_transport,
    transport_residual,
)
from .verify import ResidualReport, convergence_study, residual

__all__ = ["Pipeline", "field_options", "field_grid", "study"]


def field_options(cfg: RunConfig) -> FieldOptions:
    return FieldOptions(delta=cfg.field.delta, mid=cfg.field.mid, caustic_zone=cfg.field.caustic_zone)


def field_grid(torus: TorusData, grid: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Motion interval (endpoints included) by a periodic v grid."""
    a, b = torus.u0
    us = np.linspace(a, b, grid[0])
    vs = 2 * np.pi * np.arange(grid[1]) / grid[1]
    return us, vs


@dataclass
class Pipeline:
    """Runs the stages lazily; each property computes its prerequisites.

    Passing ``nu`` makes this a member of a nu-ray: h then always comes from
    quantization at ``nu``, while a configured kappa still fixes the torus
    (so the action defect q is nonzero).  ``lam_override`` replaces lambda in
    the eigenvalue E + h lambda used by the residual, and nowhere else.
    """

    cfg: RunConfig
    nu: Optional[tuple[int, int]] = None
    lam_override: Optional[float] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def _get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    @property
    def model(self):
        return self.cfg.model

    @property
    def quantum_numbers(self) -> tuple[int, int]:
        return self.nu or self.cfg.mode.nu

    def _torus_and_h(self) -> tuple[TorusData, float]:
        spec = self.cfg.torus
        m = self.model
        if spec.quantized:
            kappa, h, mode = solve_quantization(m, self.quantum_numbers, spec.E)
            self._cache["mode"] = mode
            return build_torus(m, spec.E, kappa), h
        if spec.turning_point is not None:
            u = np.array([spec.turning_point])
            f2 = float(m.F2(u)[0])
            if f2 == 0:
                raise NumericalError("turning point lies on a shore")
            kappa = spec.E * float(m.F1(u)[0]) / f2
        else:
            kappa = spec.kappa
        h = self.cfg.mode.h
        if self.nu is not None:
            h = solve_quantization(m, self.nu, spec.E)[1]
        return build_torus(m, spec.E, kappa), h

    @property
    def torus(self) -> TorusData:
        return self._get("torus", self._torus_and_h)[0]

    @property
    def h(self) -> float:
        return self._get("torus", self._torus_and_h)[1]

    @property
    def mode(self) -> QuantizedMode:
        self.torus  # a quantized torus supplies its own mode
        return self._get("mode", lambda: make_mode(self.torus, self.quantum_numbers, self.h))

    @property
    def chart(self) -> AngleChart:
        return self._get("chart", lambda: build_chart(self.torus))

    @property
    def lam(self) -> float:
        n = self.cfg.transport.angle_grid
        return self._get("lam", lambda: compute_lambda(self.chart, self.mode.q, self.h, n=max(n, 512)))

    @property
    def transport(self) -> TransportSolution:
        t = self.cfg.transport

        def make():
            return solve_transport(
                self.chart, self.mode.q, self.h, self.lam, N=t.N, n=t.angle_grid, divisor_floor=t.divisor_floor
            )

        return self._get("transport", make)

    @property
    def transport_check(self) -> float:
        n = self.cfg.transport.angle_grid
        return self._get("tcheck", lambda: transport_residual(self.chart, self.transport, self.mode.q, self.h, n=n))

    @property
    def resonances(self) -> ResonanceReport:
        return self._get("res", lambda: resonance_report(self.chart.omega, self.cfg.transport.N))

    def wave_field(self, grid: Optional[tuple[int, int]] = None) -> WaveField:
        us, vs = field_grid(self.torus, grid or self.cfg.field.grid)
        return evaluate_psi(self.chart, self.transport, self.mode, us, vs, field_options(self.cfg), lam=self.lam)

    def residual(self, check_grid: bool = True, part: Optional[str] = None) -> ResidualReport:
        f = self.cfg.field
        return residual(
            self.model,
            self.chart,
            self.transport,
            self.mode,
            self.lam if self.lam_override is None else self.lam_override,
            band=f.window_band,
            ppw=f.ppw,
            check_grid=check_grid,
            part=part,
            options=field_options(self.cfg),
        )

    # report sections

    def torus_section(self) -> dict:
        t = self.torus
        return {
            "E": t.E,
            "kappa": t.kappa,
            "caustics": [{"side": c.side, "kind": c.kind, "location": c.location} for c in t.caustics],
            "actions": list(t.I),
            "S1": t.S1,
            "T1": t.T1,
            "omega": list(self.chart.omega),
            "hamiltonian_frequencies": list(hamiltonian_frequencies(self.model, t.E, t.kappa)),
        }

    def mode_section(self) -> dict:
        m = self.mode
        return {
            "nu": list(m.nu),
            "h": m.h,
            "inverse_h": 1.0 / m.h,
            "quantized_actions": list(m.I_nu),
            "q": list(m.q),
            "q_over_h": list(m.q_over_h),
        }

    def transport_section(self) -> dict:
        d = self.transport.as_dict()
        d["eigenvalue"] = self.torus.E + self.h * self.lam
        d["transport_residual"] = self.transport_check
        d["resonances"] = self.resonances.as_dict()
        return d


def study(
    cfg: RunConfig,
    direction: tuple[int, int],
    count: int,
    start: int = 1,
    check_grid: bool = True,
    lam_override: Optional[float] = None,
    part: Optional[str] = None,
):
    """Convergence study along nu = m * direction, m = start .. start + count - 1."""

    def member(nu):
        return Pipeline(cfg, nu=nu, lam_override=lam_override).residual(check_grid=check_grid, part=part)

    return convergence_study(member, direction, count, start)
