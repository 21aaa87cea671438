import numpy as np
import pytest

from coastwaves import transport
from coastwaves.transport import (
    ResonanceError,
    compute_lambda,
    resonance_report,
    solve_transport,
    transport_residual,
)


def test_unperturbed_own_torus_is_trivial(ex3):
    assert ex3.lam == 0.0
    sol = ex3.transport
    assert np.max(np.abs(sol.Phi_coeffs)) == 0.0
    a = np.linspace(0, 2 * np.pi, 11)
    np.testing.assert_array_equal(sol.amplitude(a[:, None], a[None, :]), 1.0)


def test_lambda_with_defect_only(ex3):
    """mu = 0 and q != 0: lambda = <omega, q> (2 pi)^2 / (h * integral of the measure factor)."""
    c = ex3.chart
    q = (0.3 * ex3.h, -0.2 * ex3.h)
    n = 256
    a = 2 * np.pi * np.arange(n) / n
    integral = np.sum(c.measure_factor(a[:, None], a[None, :])) * (2 * np.pi / n) ** 2
    want = (c.omega[0] * q[0] + c.omega[1] * q[1]) * (2 * np.pi) ** 2 / (ex3.h * integral)
    assert compute_lambda(c, q, ex3.h, n=n) == pytest.approx(want, rel=1e-12)


def test_lambda_grid_refinement(ex1):
    lam = compute_lambda(ex1.chart, ex1.mode.q, ex1.h, n=512)
    fine = compute_lambda(ex1.chart, ex1.mode.q, ex1.h, n=1024)
    assert np.isfinite(lam) and isinstance(lam, float)
    assert abs(lam - fine) <= 1e-9


def test_solvability_and_reality(ex1):
    sol = ex1.transport
    assert abs(sol.G0) <= 1e-10
    P = sol.Phi_coeffs
    np.testing.assert_allclose(P[::-1, ::-1], np.conj(P), atol=1e-15)
    a = np.random.default_rng(1).uniform(0, 2 * np.pi, (2, 300))
    np.testing.assert_allclose(np.abs(sol.amplitude(a[0], a[1])), 1.0, atol=1e-12)


def test_single_harmonic(ex1, monkeypatch):
    """G = c cos(alpha^1) gives Phi_k = i G_k / <omega, k>, i.e. Phi = -(c / omega_1) sin(alpha^1)."""
    c = 0.37
    real = transport.torus_grid

    def fake(chart, n):
        g = real(chart, n)
        a1 = g["alpha"][:, None] + 0 * g["f"]
        g["f"] = np.ones_like(a1)
        g["h_sub"] = c * np.cos(a1)
        return g

    monkeypatch.setattr(transport, "torus_grid", fake)
    sol = solve_transport(ex1.chart, (0.0, 0.0), ex1.h, 0.0, N=8, n=64)
    a1 = np.linspace(0, 2 * np.pi, 17)
    a2 = np.linspace(0, 2 * np.pi, 13)
    got = sol.phi(a1[:, None], a2[None, :])
    want = -(c / ex1.chart.omega[0]) * np.sin(a1)[:, None] + 0 * a2
    np.testing.assert_allclose(got, want, atol=1e-12)
    assert transport_residual(ex1.chart, sol, (0.0, 0.0), ex1.h, n=64) <= 1e-12


@pytest.mark.parametrize("name", ["example1", "example3_case1", "example3_case2", "example2_case_c"])
def test_direct_substitution(pipeline, name):
    p = pipeline(name)
    assert p.transport_check <= max(1e-7, 10 * p.transport.residual_bound)


def test_direct_substitution_at_sixteen_modes(pipeline):
    p = pipeline("example2_case_c")
    sol = solve_transport(p.chart, p.mode.q, p.h, p.lam, N=16, n=256)
    r = transport_residual(p.chart, sol, p.mode.q, p.h, n=256)
    # a truncated solve leaves exactly the dropped tail behind, up to aliasing
    assert r <= max(1e-8, 10 * sol.residual_bound)


def test_exact_resonance():
    rep = resonance_report((1.0, 1.0), 4)
    assert rep.resonant
    assert rep.entries[0][0] == (1, -1) and rep.entries[0][1] == 0.0


def test_resonance_refused_by_solver(ex1, monkeypatch):
    with pytest.raises(ResonanceError) as info:
        solve_transport(ex1.chart, ex1.mode.q, ex1.h, ex1.lam, N=16, n=256, divisor_floor=1.0)
    assert info.value.k != (0, 0)


def test_example1_divisors():
    w = np.array([2.533, 1.7306])
    rep = resonance_report(w, 16)
    k1, k2 = np.meshgrid(np.arange(-16, 17), np.arange(-16, 17))
    d = np.abs(w[0] * k1 + w[1] * k2)
    d[16, 16] = np.inf
    assert rep.entries[0][1] == pytest.approx(d.min(), rel=1e-14)
    assert d.min() > 1e-3
    assert [e[1] for e in rep.entries] == sorted(e[1] for e in rep.entries)


def test_golden_ratio_minima_at_fibonacci():
    phi = (1 + np.sqrt(5)) / 2
    rep = resonance_report((1.0, phi), 34, count=1)
    k = rep.entries[0][0]
    fib = [1, 1, 2, 3, 5, 8, 13, 21, 34]
    assert abs(k[0]) in fib and abs(k[1]) in fib
    assert abs(k[0]) == 34 or abs(k[1]) == 34
    assert not rep.resonant and rep.C2 == pytest.approx(1.0, abs=0.15)
