"""Problem definition: depth split f = f1/f2, angular profile g, perturbation D1."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError
from .exprlang import Expr, ExprError, eval_dual, evaluate, free_vars, parse, to_source

__all__ = [
    "ModelError",
    "DepthModel",
    "load_model",
    "depth",
    "classify_case",
    "h_sub_raw",
    "h_sub_on_level",
    "SHORES",
]

# which endpoints are coastlines for each caustic case
SHORES = {"A": (False, False), "B": (True, True), "C": (True, False)}

_SHORE_TOL = 1e-12
_D1_TOL = 1e-12


class ModelError(ConfigError):
    """A configured model violates one of its structural invariants."""


@dataclass(frozen=True)
class DepthModel:
    u_L: float
    u_R: float
    f1: Expr
    f2: Expr
    g: Expr
    D1: Expr
    mu: int
    case: str
    sources: Mapping[str, str] = field(default_factory=dict, compare=False)

    @property
    def shores(self) -> tuple[bool, bool]:
        return SHORES[self.case]

    # vectorised evaluators; arrays in, arrays out

    def F1(self, u):
        return _shaped(evaluate(self.f1, {"u": u}), u)

    def F2(self, u):
        return _shaped(evaluate(self.f2, {"u": u}), u)

    def G(self, v):
        return _shaped(evaluate(self.g, {"v": v}), v)

    def Dpert(self, u, v):
        return _shaped(evaluate(self.D1, {"u": u, "v": v}), u, v)

    def radicand(self, u, E: float, kappa: float):
        """E f1 - kappa f2, i.e. f2 * p_u^2 on the level set."""
        return E * self.F1(u) - kappa * self.F2(u)

    def describe(self) -> dict:
        return {
            "u_L": self.u_L,
            "u_R": self.u_R,
            "f1": to_source(self.f1),
            "f2": to_source(self.f2),
            "g": to_source(self.g),
            "D1": to_source(self.D1),
            "mu": self.mu,
            "case": self.case,
        }


def _parse_bound(raw) -> float:
    if isinstance(raw, (int, float)):
        return float(raw)
    text = str(raw).strip().strip('"').strip("'").lower()
    if text in ("-inf", "-infinity"):
        return -math.inf
    if text in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    try:
        return float(evaluate(parse(text), {}))
    except ExprError as exc:
        raise ModelError(f"bad cylinder bound {raw!r}: {exc}") from None


def _parse_expr(name: str, raw: str, allowed: set[str]) -> Expr:
    text = str(raw).strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    try:
        e = parse(text)
    except ExprError as exc:
        raise ModelError(f"{name}: {exc}") from None
    extra = free_vars(e) - allowed
    if extra:
        raise ModelError(f"{name} may only depend on {sorted(allowed)}, found {sorted(extra)}")
    return e


def load_model(fragment: Mapping[str, object]) -> DepthModel:
    """Build and validate a :class:`DepthModel` from a config ``[model]`` section."""
    missing = [k for k in ("f1", "f2", "g", "case", "u_L", "u_R") if k not in fragment]
    if missing:
        raise ModelError(f"model section is missing: {', '.join(missing)}")
    case = str(fragment["case"]).strip().strip('"').upper()
    if case not in SHORES:
        raise ModelError(f"case must be one of A, B, C (got {fragment['case']!r})")
    mu = int(str(fragment.get("mu", 0)).strip())
    if mu not in (0, 1):
        raise ModelError(f"mu must be 0 or 1 (got {mu})")
    sources = {k: str(fragment[k]) for k in ("f1", "f2", "g") if k in fragment}
    sources["D1"] = str(fragment.get("D1", "0"))
    model = DepthModel(
        u_L=_parse_bound(fragment["u_L"]),
        u_R=_parse_bound(fragment["u_R"]),
        f1=_parse_expr("f1", fragment["f1"], {"u"}),
        f2=_parse_expr("f2", fragment["f2"], {"u"}),
        g=_parse_expr("g", fragment["g"], {"v"}),
        D1=_parse_expr("D1", fragment.get("D1", "0"), {"u", "v"}),
        mu=mu,
        case=case,
        sources=sources,
    )
    validate(model)
    return model


def validate(model: DepthModel) -> None:
    if not model.u_L < model.u_R:
        raise ModelError(f"u_L={model.u_L} must be below u_R={model.u_R}")
    try:
        _validate(model)
    except ExprError as exc:
        raise ModelError(f"model evaluation failed: {exc}") from None
    classify_case(model)


def _validate(model: DepthModel) -> None:
    vs = np.linspace(0.0, 2 * np.pi, 256, endpoint=False)
    gv = model.G(np.linspace(0.0, 2 * np.pi, 1024, endpoint=False))
    if not np.all(np.isfinite(gv)):
        raise ModelError("g is not finite on the circle")
    if abs(float(model.G(0.0)) - float(model.G(2 * np.pi))) > 1e-10 * (1 + np.max(np.abs(gv))):
        raise ModelError("g is not 2*pi-periodic")

    for side, is_shore in zip(("u_L", "u_R"), model.shores):
        end = getattr(model, side)
        if is_shore:
            if not math.isfinite(end):
                raise ModelError(f"declared shore {side} must be finite")
            f2_val, f2_der = eval_dual(model.f2, {"u": end}, "u")
            if abs(f2_val) > _SHORE_TOL:
                raise ModelError(f"f2 does not vanish at declared shore {side}")
            if abs(f2_der) < 1e-8:
                raise ModelError(f"f2 vanishes to higher order at declared shore {side}")
            if float(model.F1(end)) <= 0:
                raise ModelError(f"f1 must be positive at shore {side}")
            d1 = model.Dpert(np.full_like(vs, end), vs)
            if np.max(np.abs(d1)) > _D1_TOL:
                raise ModelError(f"D1 does not vanish at shore {side}")
        elif math.isfinite(end):
            other = model.u_R if side == "u_L" else model.u_L
            span = (other - end) if math.isfinite(other) else math.copysign(1.0, other)
            us = end + np.linspace(0.0, 0.05, 64) * span
            if np.min(np.abs(model.F2(us))) < 1e-8:
                raise ModelError(f"f2 approaches zero near non-shore endpoint {side}")

    lo = model.u_L if math.isfinite(model.u_L) else -50.0
    hi = model.u_R if math.isfinite(model.u_R) else 50.0
    us = np.linspace(lo, hi, 2049)[1:-1]
    if np.any(model.F2(us) <= 0):
        raise ModelError("f2 must be positive strictly inside the cylinder")


def classify_case(model: DepthModel) -> str:
    """Detect A/B/C from where f = f1/f2 blows up; must match the configured tag."""
    blows = []
    for end in (model.u_L, model.u_R):
        if not math.isfinite(end):
            blows.append(False)
            continue
        blows.append(abs(float(model.F2(end))) <= _SHORE_TOL and float(model.F1(end)) != 0)
    detected = {(False, False): "A", (True, True): "B", (True, False): "C"}.get(tuple(blows))
    if detected is None:
        raise ModelError("f blows up only at u_R; mirror the cylinder so the shore is u_L (case C)")
    if detected != model.case:
        raise ModelError(f"configured case {model.case} but f behaves like case {detected}")
    return detected


def depth(model: DepthModel, u, v):
    """Unperturbed depth D0 = f2 / (f1 + f2 g)."""
    f2 = model.F2(u)
    return f2 / (model.F1(u) + f2 * model.G(v))


def h_sub_raw(model: DepthModel, u, v, pu, pv):
    """Subprincipal symbol D1 (p_u^2 + p_v^2); zero when unperturbed."""
    if model.mu == 0:
        return _zeros(u, v, pu, pv)
    return model.Dpert(u, v) * (np.asarray(pu) ** 2 + np.asarray(pv) ** 2)


def h_sub_on_level(model: DepthModel, u, v, E: float):
    """Same symbol on the level set H0 = E, where p_u^2 + p_v^2 = E (f + g)."""
    if model.mu == 0:
        return _zeros(u, v)
    f2 = model.F2(u)
    return model.Dpert(u, v) * E * (model.F1(u) / f2 + model.G(v))


def _zeros(*args):
    shape = np.broadcast(*args).shape
    return np.zeros(shape) if shape else 0.0


def _shaped(val, *args):
    """Broadcast an evaluation result to the argument shape (constants come back scalar)."""
    shape = np.broadcast(*args).shape
    if not shape:
        return float(val) if np.ndim(val) == 0 else val
    return np.broadcast_to(val, shape).astype(float, copy=True)
