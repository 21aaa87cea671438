import mpmath as mp
import numpy as np
import pytest
import sympy as sp
from scipy.integrate import solve_ivp

import oracles
from coastwaves.actions import build_torus, hamiltonian_frequencies
from coastwaves.torus import build_chart, h_sub_on_torus, measure_factor
from test_actions import G0, TOY


def test_alpha1_at_caustics(ex1, ex3p):
    for p in (ex1, ex3p):
        a, b = p.torus.u0
        assert abs(float(p.chart.alpha1_of_u(np.array([a]))[0])) <= 1e-10
        assert abs(float(p.chart.alpha1_of_u(np.array([b]))[0]) - np.pi) <= 1e-10


def test_u_of_alpha1_inverts(ex3p):
    c = ex3p.chart
    a1 = np.linspace(0, np.pi, 57)
    np.testing.assert_allclose(c.alpha1_of_u(c.u_of_alpha1(a1)), a1, atol=1e-10)


def test_alpha2_advances_by_two_pi(ex3p):
    c = ex3p.chart
    u = np.array([0.2, 0.5, 0.9])
    for v in (0.0, 1.3, 5.0):
        base = c.alpha2(u, np.full(3, v))
        again = c.alpha2(u, np.full(3, v + 2 * np.pi))
        np.testing.assert_allclose(again - base, 2 * np.pi, atol=1e-12)


def test_correction_vanishes_at_period_ends(ex3p):
    c = ex3p.chart
    assert np.max(np.abs(c.correction(np.array([0.0, 2 * np.pi])))) <= 1e-9
    # odd in alpha^1
    a = np.linspace(0.1, 3.0, 7)
    np.testing.assert_allclose(c.correction(-a), -c.correction(a), atol=1e-14)


def test_flat_f2_kills_the_correction(ex1):
    c = ex1.chart
    assert c.mean_f2 == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(c.correction(np.linspace(0, 2 * np.pi, 50)))) <= 1e-12


def test_constant_g_gives_linear_eta():
    chart = build_chart(build_torus(TOY, 1.0, 0.0))
    v = np.linspace(0, 2 * np.pi, 9)[:-1]
    u = np.full_like(v, 0.3)
    a1 = chart.alpha1_of_u(u)
    np.testing.assert_allclose(chart.alpha2(u, v), v + chart.correction(a1), atol=1e-12)
    # f2 = 1, g = g0: the measure factor is f1(u) + g0
    a2 = np.linspace(0, 2 * np.pi, 8)
    np.testing.assert_allclose(measure_factor(chart, a1, a2), 1 - u**2 + G0, rtol=1e-12)


def test_alpha1_midpoint_against_oracle(ex3p):
    kappa = mp.mpf(ex3p.torus.kappa)
    S1, T1, _ = oracles.ex3_u_integrals(kappa)
    want = mp.pi * oracles.ex3_partial(kappa, mp.mpf("0.5"), "T") / T1
    assert float(ex3p.chart.alpha1_of_u(np.array([0.5]))[0]) == pytest.approx(float(want), rel=1e-8)


def test_frequency_ratio_identity(ex3p):
    t = ex3p.torus
    w = ex3p.chart.omega
    assert w[1] / w[0] == pytest.approx(2 * t.T1 * ex3p.chart.mean_f2 / t.eta_period, rel=1e-12)
    hf = hamiltonian_frequencies(t.model, t.E, t.kappa)
    assert w[1] / w[0] == pytest.approx(hf[1] / hf[0], rel=1e-5)


def test_subprincipal_on_torus(ex1):
    c = ex1.chart
    m = ex1.model
    a1 = np.full(5, np.pi / 2)
    a2 = np.linspace(0, 2 * np.pi, 5)
    u, v = c.uv_of_alpha(a1, a2)
    want = m.Dpert(u, v) * (m.F1(u) + m.G(v))
    np.testing.assert_allclose(h_sub_on_torus(c, a1, a2), want, rtol=1e-13)


def test_subprincipal_off_when_unperturbed(ex3):
    assert np.all(h_sub_on_torus(ex3.chart, np.array([0.3, 1.0]), np.array([2.0, 4.0])) == 0)


# Hamiltonian flow oracle -------------------------------------------------

u_, v_, pu_, pv_ = sp.symbols("u v p_u p_v")
SYMBOLIC = {
    "example1": (sp.exp(u_ * (sp.Rational(27, 10) - u_)) - sp.Rational(103, 100), sp.Integer(1),
                 sp.Rational(4, 5) + sp.cos(3 * v_) * sp.sin(v_) ** 2 / 3),
    "example3_case1": (sp.Integer(1), 2 * u_ * (1 - u_), 3 + sp.sin(v_) / 2),
}


def _flow(name):
    f1, f2, g = SYMBOLIC[name]
    H = f2 * (pu_**2 + pv_**2) / (f1 + f2 * g)
    grads = [sp.diff(H, x) for x in (pu_, pv_, u_, v_)]
    rhs = sp.lambdify((u_, v_, pu_, pv_), [grads[0], grads[1], -grads[2], -grads[3]], "numpy")
    meas = sp.lambdify((u_, v_), f1 + f2 * g, "numpy")
    f1n = sp.lambdify(u_, f1 / f2, "numpy")
    gn = sp.lambdify(v_, g, "numpy")
    return rhs, meas, f1n, gn


def flow_rate_error(p, name: str) -> float:
    """Max relative deviation of (d alpha / dt) * f from omega along an integrated trajectory."""
    c, t = p.chart, p.torus
    rhs, meas, f, g = _flow(name)
    a, b = t.u0
    u0, v0 = a + 0.2 * (b - a), 0.4
    y0 = [u0, v0, np.sqrt(t.E * f(u0) - t.kappa), np.sqrt(t.E * g(v0) + t.kappa)]

    def near_right(_, y):
        return y[0] - (a + 0.8 * (b - a))

    near_right.terminal = True
    sol = solve_ivp(lambda _, y: rhs(*y), (0, 50), y0, method="DOP853", rtol=1e-13, atol=1e-13,
                    dense_output=True, events=near_right)
    ts = np.linspace(0, sol.t[-1], 40)[2:-2]
    dt = 1e-4 * sol.t[-1]

    def angles(tt):
        u, v = sol.sol(tt)[:2]
        return c.alpha1_of_u(u), c.alpha2(u, v)

    rate = (np.array(angles(ts + dt)) - np.array(angles(ts - dt))) / (2 * dt)
    u, v = sol.sol(ts)[:2]
    w = np.asarray(c.omega)[:, None]
    return float(np.max(np.abs(rate * meas(u, v) / w - 1)))


@pytest.mark.parametrize("name", ["example1", "example3_case1"])
def test_flow_runs_uniformly_in_the_regularised_time(pipeline, name):
    assert flow_rate_error(pipeline(name), name) <= 1e-6
