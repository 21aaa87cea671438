"""Transport equation on the 2-torus: eigenvalue correction and Fourier phase."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .torus import AngleChart

__all__ = [
    "ResonanceError",
    "TransportSolution",
    "ResonanceReport",
    "torus_grid",
    "compute_lambda",
    "solve_transport",
    "resonance_report",
    "transport_residual",
]

TWO_PI = 2 * np.pi


class ResonanceError(NumericalError):
    def __init__(self, k: tuple[int, int], divisor: float, floor: float):
        super().__init__(f"small divisor <omega, k> = {divisor:.3e} at k = {k} (floor {floor:.1e})")
        self.k = k
        self.divisor = divisor


def torus_grid(chart: AngleChart, n: int) -> dict[str, np.ndarray]:
    """Measure factor and subprincipal symbol on the uniform n x n angle grid."""
    a = TWO_PI * np.arange(n) / n
    a1 = a[:, None]
    a2 = a[None, :]
    m = chart.torus.model
    u = chart.u_of_alpha1(a)[:, None]
    v = chart.v_of_alpha(a1, a2)
    fmeas = m.F1(u) + m.F2(u) * m.G(v)
    if m.mu:
        from .torus import _h_sub_uv

        hsub = _h_sub_uv(m, chart.torus.E, np.broadcast_to(u, v.shape), v)
    else:
        hsub = np.zeros_like(v)
    return {"alpha": a, "u": u, "v": v, "f": fmeas, "h_sub": hsub}


def _defect_term(chart: AngleChart, q, h: float) -> float:
    w1, w2 = chart.omega
    return (w1 * q[0] + w2 * q[1]) / h


def compute_lambda(chart: AngleChart, q, h: float, n: int = 512) -> float:
    """lambda = [mean(f H_sub) + <omega, q>/h] / mean(f) over the angle torus."""
    g = torus_grid(chart, n)
    return float((np.mean(g["f"] * g["h_sub"]) + _defect_term(chart, q, h)) / np.mean(g["f"]))


@dataclass(frozen=True)
class ResonanceReport:
    entries: list[tuple[tuple[int, int], float]]
    C1: float
    C2: float
    resonant: bool

    def as_dict(self) -> dict:
        return {
            "smallest": [{"k": list(k), "divisor": d} for k, d in self.entries],
            "C1": self.C1,
            "C2": self.C2,
            "resonant": self.resonant,
        }


def _half_lattice(N: int) -> np.ndarray:
    k1, k2 = np.meshgrid(np.arange(-N, N + 1), np.arange(-N, N + 1), indexing="ij")
    k = np.stack([k1.ravel(), k2.ravel()], axis=1)
    keep = (k[:, 0] > 0) | ((k[:, 0] == 0) & (k[:, 1] > 0))
    return k[keep]


def resonance_report(omega, N: int, count: int = 10) -> ResonanceReport:
    """Smallest |<omega, k>| for 0 < |k|_inf <= N, with fitted Diophantine constants.

    C2 is the slope of the lower envelope of -log|<omega,k>| against
    log(|k1|+|k2|); C1 is then the largest constant the scanned range allows.
    """
    w = np.asarray(omega, dtype=float)
    k = _half_lattice(N)
    d = np.abs(k @ w)
    order = np.lexsort((np.abs(k).sum(axis=1), d))
    entries = [((int(k[i, 0]), int(k[i, 1])), float(d[i])) for i in order[:count]]
    resonant = bool(d.min() <= 1e-14 * np.abs(w).sum())
    if resonant:
        return ResonanceReport(entries, 0.0, float("inf"), True)
    norm = np.abs(k).sum(axis=1)
    levels = np.unique(norm)
    mins = np.array([d[norm == n].min() for n in levels])
    running = np.minimum.accumulate(mins)
    rec = np.nonzero(mins <= running)[0]
    if rec.size >= 2:
        C2 = max(0.0, float(-np.polyfit(np.log(levels[rec]), np.log(mins[rec]), 1)[0]))
    else:
        C2 = 0.0
    C1 = float(np.min(d * norm.astype(float) ** C2))
    return ResonanceReport(entries, C1, C2, False)


@dataclass
class TransportSolution:
    lam: float
    N: int
    omega: tuple[float, float]
    G_coeffs: np.ndarray = field(repr=False)  # (2N+1, 2N+1), index k + N
    Phi_coeffs: np.ndarray = field(repr=False)
    min_divisor: float
    residual_bound: float
    G0: complex

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def phi(self, a1, a2, chunk: int = 1 << 16) -> np.ndarray:
        """Real phase Phi(alpha) from its truncated Fourier series."""
        a1, a2 = np.broadcast_arrays(np.asarray(a1, dtype=float), np.asarray(a2, dtype=float))
        shape = a1.shape
        x1, x2 = a1.ravel(), a2.ravel()
        out = np.empty(x1.size)
        ks = self.ks
        for s in range(0, x1.size, chunk):
            e1 = np.exp(1j * np.outer(x1[s : s + chunk], ks))
            e2 = np.exp(1j * np.outer(x2[s : s + chunk], ks))
            out[s : s + chunk] = np.einsum("pi,ij,pj->p", e1, self.Phi_coeffs, e2).real
        return out.reshape(shape)

    def amplitude(self, a1, a2) -> np.ndarray:
        return np.exp(1j * self.phi(a1, a2))

    def phi_on_grid(self, n: int) -> np.ndarray:
        """Phi on the uniform n x n angle grid, by inverse FFT."""
        if 2 * self.N >= n:
            raise NumericalError(f"grid of {n} points cannot carry Fourier order {self.N}")
        idx = self.ks % n
        full = np.zeros((n, n), dtype=complex)
        full[np.ix_(idx, idx)] = self.Phi_coeffs
        return (np.fft.ifft2(full) * n * n).real

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.N,
            "min_divisor": self.min_divisor,
            "residual_bound": self.residual_bound,
            "G0_abs": abs(self.G0),
        }


def solve_transport(
    chart: AngleChart,
    q,
    h: float,
    lam: float,
    N: int = 16,
    n: int = 256,
    divisor_floor: float = 1e-8,
) -> TransportSolution:
    """Phi_k = i G_k / <omega, k> for 0 < |k|_inf <= N; A = exp(i Phi)."""
    if 2 * N >= n:
        raise NumericalError(f"Fourier order N={N} needs a grid larger than {n}")
    omega = chart.omega
    g = torus_grid(chart, n)
    G = g["f"] * (g["h_sub"] - lam) + _defect_term(chart, q, h)
    Gk = np.fft.fft2(G) / n**2
    ks = np.arange(-N, N + 1)
    idx = ks % n
    Gtrunc = Gk[np.ix_(idx, idx)]
    div = omega[0] * ks[:, None] + omega[1] * ks[None, :]
    nonzero = (ks[:, None] != 0) | (ks[None, :] != 0)
    absdiv = np.where(nonzero, np.abs(div), np.inf)
    i, j = np.unravel_index(np.argmin(absdiv), absdiv.shape)
    if absdiv[i, j] < divisor_floor:
        raise ResonanceError((int(ks[i]), int(ks[j])), float(absdiv[i, j]), divisor_floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        Phi = np.where(nonzero, 1j * Gtrunc / div, 0.0)
    # enforce the reality symmetry exactly
    Phi = 0.5 * (Phi + np.conj(Phi[::-1, ::-1]))
    kk = np.fft.fftfreq(n, 1.0 / n).astype(int)
    tail = (np.abs(kk)[:, None] > N) | (np.abs(kk)[None, :] > N)
    bound = float(np.sum(np.abs(Gk[tail])))
    return TransportSolution(
        lam=lam,
        N=N,
        omega=omega,
        G_coeffs=Gtrunc,
        Phi_coeffs=Phi,
        min_divisor=float(absdiv[i, j]),
        residual_bound=bound,
        G0=complex(Gk[0, 0]),
    )


def transport_residual(chart: AngleChart, sol: TransportSolution, q, h: float, n: int = 256) -> float:
    """sup |<omega, d_alpha> A + i G A| on the n x n grid.

    G is sampled afresh on the grid; <omega, d_alpha> A = i A <omega, d_alpha> Phi
    with Phi differentiated spectrally, which stays exact however large Phi is.
    """
    g = torus_grid(chart, n)
    phi = sol.phi_on_grid(n)
    A = np.exp(1j * phi)
    kk = np.fft.fftfreq(n, 1.0 / n)
    kk[n // 2] = 0.0
    w1, w2 = sol.omega
    dphi = np.fft.ifft2(1j * (w1 * kk[:, None] + w2 * kk[None, :]) * np.fft.fft2(phi)).real
    G = g["f"] * (g["h_sub"] - sol.lam) + _defect_term(chart, q, h)
    return float(np.max(np.abs(1j * A * dphi + 1j * G * A)))
