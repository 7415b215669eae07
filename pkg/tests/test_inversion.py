import math

import mpmath as mp
import numpy as np
import pytest

from smtinv.forward import (
    SmtData,
    SphereGrid,
    forward_radial_h,
    h_from_smt,
    simulate_full_sphere,
    simulate_mode,
    simulate_radial,
)
from smtinv.inversion import (
    CAUSAL_POLYFIT,
    InversionError,
    InversionOptions,
    OdeProblem,
    analytic_invert_k0,
    analytic_invert_k1,
    analytic_invert_k2,
    apply_D_power,
    assemble_rhs,
    detect_support_gap,
    error_metrics,
    invert_full_sphere,
    invert_mode,
    invert_radial,
    k2_homogeneous,
    k2_wronskian,
    recombine,
    solve_ode,
)
from smtinv.numerics import CentralStencil, Grid1D, SampledFn, lookahead
from smtinv.phantoms import ModePhantom, bump, gaussian, two_mode
from smtinv.specfun import ode_coeff_eval, ode_coeffs, radial_prefactor, real_sph_harm


def sampled(f, a=0.05, b=0.95, n=200):
    g = Grid1D.linspace(a, b, n)
    return SampledFn(g, f(g.points))


def radial_data(f, n, a, b, nodes):
    return simulate_radial(f, n, Grid1D.linspace(a, b, nodes))


# -- RHS assembly ----------------------------------------------------------------


def test_apply_D_power_examples():
    h = sampled(lambda t: t**2)
    assert np.array_equal(apply_D_power(h, 0).values, h.values)
    assert np.allclose(apply_D_power(h, 1).values, 2.0, atol=1e-9)
    h4 = sampled(lambda t: t**4)
    assert np.allclose(apply_D_power(h4, 2).values, 8.0, atol=1e-7)


def test_assemble_rhs_examples():
    h = sampled(np.sin)
    assert np.allclose(assemble_rhs(h, 0).values, np.cos(h.points), atol=1e-9)
    h3 = sampled(lambda t: t**3)
    assert np.allclose(assemble_rhs(h3, 1).values, 3.0, atol=1e-8)


def test_fig1_rhs_is_the_profile():
    f = gaussian(center=0.5)
    g = Grid1D.linspace(0.0001, 0.9999, 150)
    h = SampledFn(g, forward_radial_h(f, 0, g.points))
    L = assemble_rhs(h, 0, CentralStencil(width=9))
    t = g.points
    sel = (t >= 0.1) & (t <= 0.9)
    assert np.max(np.abs(L.values[sel] - (1 - t[sel]) * f(1 - t[sel]))) < 1e-6


@pytest.mark.parametrize("k", [1, 2])
def test_rhs_matches_ode_applied_to_phantom(k):
    f = gaussian(center=0.5)
    g = Grid1D.linspace(0.01, 0.99, 800)
    t = g.points
    h = SampledFn(g, forward_radial_h(f, k, t))
    L = assemble_rhs(h, 2 * k).values
    table = ode_coeffs(k)
    ode = sum(ode_coeff_eval(table, m, t, radial_prefactor(k)) * f.derivative(1 - t, m)
              for m in range(k + 1))
    sel = (t >= 0.1) & (t <= 0.9)
    assert np.max(np.abs(L[sel] - ode[sel])) / np.max(np.abs(ode[sel])) < 1e-5


# -- support gap ----------------------------------------------------------------


def test_detect_support_gap_examples():
    z = sampled(np.zeros_like)
    assert detect_support_gap(z, 1e-9) == z.points[-1]
    h = sampled(lambda t: np.ones_like(t))
    assert detect_support_gap(h, 1e-9) == h.points[0]
    with pytest.raises(ValueError):
        detect_support_gap(h, 0.0)


def test_detect_support_gap_fig1():
    f = gaussian(center=0.5)
    g = Grid1D.linspace(0.0001, 0.9999, 150)
    h = SampledFn(g, forward_radial_h(f, 0, g.points))
    eps = detect_support_gap(h, 1e-9)
    # oracle: first t where the (densely sampled) h exceeds the threshold
    dense = np.linspace(0.1, 0.4, 6001)
    crossing = dense[np.argmax(np.abs(forward_radial_h(f, 0, dense)) > 1e-9)]
    assert crossing - g.spacing <= eps <= crossing
    # the Gaussian tail is far from 1e-9 at r = 0.7, so the gap ends well before 0.3
    assert forward_radial_h(f, 0, 0.3) > 1e-7


def test_auto_gap_backs_off_by_differentiator_reach():
    f = bump(0.3, 0.6)
    data = radial_data(f, 5, 0.1, 0.95, 100)
    res = invert_radial(data)
    h = SampledFn(data.grid, h_from_smt(data.samples.values, 5, data.grid.points))
    gap = detect_support_gap(h, 1e-14 * np.max(np.abs(h.values)))
    back = max(lookahead(InversionOptions().diff, d) for d in range(1, 4))
    i = int(np.searchsorted(data.grid.points, gap))
    assert res.eps_prime == pytest.approx(data.grid.points[max(i - back, 0)])


# -- ODE solver ----------------------------------------------------------------


def _k1_exact(tt):
    mp.mp.dps = 30
    integrand = lambda u: (1 - u) * mp.e**u * (u - 0.2) ** 4 * mp.sin(8 * u)
    return float(tt * mp.e ** (-tt) / (8 * (1 - tt) ** 3) * mp.quad(integrand, [0.2, tt]))


def _k1_solve(nodes):
    g = Grid1D.linspace(0.1, 0.9, nodes)
    forcing = lambda u: (u - 0.2) ** 4 * np.sin(8 * u)
    L = SampledFn(g, np.where(g.points > 0.2, forcing(g.points), 0.0))
    return solve_ode(OdeProblem(1, radial_prefactor(1), L, 0.2, 0.9))


def test_solve_ode_first_order_exact_solution():
    # K = 1 radial (n = 5) against the closed form via the integrating factor
    res = _k1_solve(401)
    for tt in (0.3, 0.55, 0.85):
        i = int(np.argmin(np.abs(res.points - tt)))
        assert res.values[i] == pytest.approx(_k1_exact(res.points[i]), rel=1e-7)


def test_solve_ode_fourth_order_convergence():
    errs = []
    for nodes in (101, 201, 401):
        res = _k1_solve(nodes)
        i = int(np.argmin(np.abs(res.points - 0.85)))
        errs.append(abs(res.values[i] - _k1_exact(res.points[i])))
    assert errs[0] / errs[1] > 10 and errs[1] / errs[2] > 10


def test_ode_problem_validation():
    g = Grid1D.linspace(0.1, 0.9, 50)
    L = SampledFn(g, np.zeros(50))
    with pytest.raises((InversionError, ValueError)):
        solve_ode(OdeProblem(1, radial_prefactor(1), L, 0.8, 0.3))


# -- radial inversion ------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 5, 7])
def test_zero_data_gives_zero(n):
    g = Grid1D.linspace(0.05, 0.95, 200)
    data = SmtData(n, SampledFn(g, np.zeros(200)))
    assert np.all(invert_radial(data).profile.values == 0)


def test_k0_is_plain_derivative():
    f = gaussian(center=0.5)
    data = radial_data(f, 3, 0.0001, 0.9999, 150)
    res = invert_radial(data)
    h = SampledFn(data.grid, h_from_smt(data.samples.values, 3, data.grid.points))
    L = assemble_rhs(h, 0)
    r = res.profile.points
    sel = (r > 0.05) & (r < 0.95)
    expected = np.interp(1 - r[sel], L.points, L.values) / r[sel]
    assert np.allclose(res.profile.values[sel], expected, atol=1e-12)


def test_fig3_radial_accuracy():
    f = gaussian(center=0.6)
    res = invert_radial(radial_data(f, 5, 0.05, 0.99, 300))
    assert error_metrics(res.profile, f, (0.3, 0.95))["rel_l2"] <= 1e-2


def test_profile_vanishes_beyond_gap():
    f = gaussian(center=0.6)
    res = invert_radial(radial_data(f, 5, 0.05, 0.99, 300))
    r = res.profile.points
    assert np.all(res.profile.values[r >= 1 - res.eps_prime] == 0)


def test_empty_window_raises():
    f = gaussian(center=0.6)
    data = radial_data(f, 5, 0.05, 0.99, 300)
    with pytest.raises(InversionError):
        invert_radial(data, eps=0.995, options=InversionOptions(eps_prime=0.5))


# -- mode inversion ----------------------------------------------------------------


def test_mode_q0_equals_radial():
    # same samples through both normalisations: the 4^k factors cancel
    f = gaussian(center=0.6)
    g = Grid1D.linspace(0.05, 0.99, 300)
    for n in (3, 5, 7):
        data = simulate_radial(f, n, g)
        radial = invert_radial(data).profile.values
        mode = invert_mode(SmtData(n, data.samples, "mode", 0, 1)).profile.values
        assert np.max(np.abs(mode - radial)) <= 1e-10 * np.max(np.abs(radial))


def test_mode_forward_q0_matches_radial_forward():
    f = gaussian(center=0.6)
    g = Grid1D.linspace(0.05, 0.99, 300)
    a = simulate_radial(f, 5, g).samples.values
    b = simulate_mode(ModePhantom(0, 1, f), 5, g).samples.values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_mode_q1_fig8_profile():
    mode = ModePhantom(1, 2, gaussian(center=0.7))
    res = invert_mode(simulate_mode(mode, 3, Grid1D.linspace(0.01, 0.99, 300)))
    assert error_metrics(res.profile, mode.profile, (0.2, 0.9))["rel_l2"] <= 1e-2


def test_zero_mode_data():
    g = Grid1D.linspace(0.05, 0.95, 200)
    data = SmtData(3, SampledFn(g, np.zeros(200)), "mode", 2, 3)
    assert np.all(invert_mode(data).profile.values == 0)


# -- closed-form back-ends ---------------------------------------------------------


def test_analytic_zero_data():
    g = Grid1D.linspace(0.05, 0.95, 200)
    for n, fn in ((3, analytic_invert_k0), (5, analytic_invert_k1), (7, analytic_invert_k2)):
        assert np.all(fn(SmtData(n, SampledFn(g, np.zeros(200)))).profile.values == 0)


def test_integrating_factor_kernel():
    # y = t e^{-t} / (1-t)^3 solves y' = (1+t+t^2)/(t(1-t)) y
    mp.mp.dps = 30
    y = lambda t: t * mp.e ** (-t) / (1 - t) ** 3
    for t in np.linspace(0.1, 0.9, 9):
        t = mp.mpf(t)
        lhs = mp.diff(y, t)
        rhs = (1 + t + t**2) / (t * (1 - t)) * y(t)
        assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_k1_matches_runge_kutta():
    f = gaussian(center=0.6)
    data = radial_data(f, 5, 0.05, 0.99, 300)
    a = analytic_invert_k1(data).profile
    b = invert_radial(data).profile
    sel = (b.points >= 0.3) & (b.points <= 0.95)
    assert np.linalg.norm(a.values[sel] - b.values[sel]) / np.linalg.norm(b.values[sel]) <= 1e-4


def _k2_mp(t):
    """f1, f2 from the closed form, in mpmath."""
    a = mp.sqrt(3) / 2 * t
    damp = mp.e ** (-mp.mpf(3) / 2 * t) / (1 - t) ** 5
    p = t - 2 * t * t
    return (damp * (p * mp.cos(a) + mp.sqrt(3) * t * mp.sin(a)),
            damp * (mp.sqrt(3) * t * mp.cos(a) - p * mp.sin(a)))


def test_k2_homogeneous_matches_mp():
    mp.mp.dps = 30
    t = np.linspace(0.1, 0.9, 20)
    f1, f2 = k2_homogeneous(t)
    for i, ti in enumerate(t):
        m1, m2 = _k2_mp(mp.mpf(ti))
        assert f1[i] == pytest.approx(float(m1), rel=1e-13)
        assert f2[i] == pytest.approx(float(m2), rel=1e-13)


def test_k2_wronskian_identity():
    mp.mp.dps = 30
    for t in np.linspace(0.1, 0.9, 20):
        t = mp.mpf(t)
        f1 = lambda s: _k2_mp(s)[0]
        f2 = lambda s: _k2_mp(s)[1]
        w = f1(t) * mp.diff(f2, t) - mp.diff(f1, t) * f2(t)
        assert abs(w - k2_wronskian(float(t))) <= 1e-8 * abs(w)


def test_displayed_wronskian_exponent_is_wrong():
    # e^{-3t/2} instead of e^{-3t} does not satisfy the identity
    mp.mp.dps = 30
    t = mp.mpf("0.5")
    f1 = lambda s: _k2_mp(s)[0]
    f2 = lambda s: _k2_mp(s)[1]
    w = f1(t) * mp.diff(f2, t) - mp.diff(f1, t) * f2(t)
    wrong = 2 * mp.sqrt(3) * t**3 * mp.e ** (-3 * t / 2) / (1 - t) ** 9
    assert abs(w - wrong) > 0.5 * abs(w)


def test_k2_homogeneous_solves_ode():
    # 128(1-t)^3/t^2 y'' - 384(1-t)^2(1+t+t^2)/t^3 y' + 384(1-t^5)/t^4 y = 0
    mp.mp.dps = 30
    for t in np.linspace(0.1, 0.9, 20):
        t = mp.mpf(t)
        for idx in (0, 1):
            y = lambda s: _k2_mp(s)[idx]
            terms = [128 * (1 - t) ** 3 / t**2 * mp.diff(y, t, 2),
                     -384 * (1 - t) ** 2 * (1 + t + t**2) / t**3 * mp.diff(y, t),
                     384 * (1 - t**5) / t**4 * y(t)]
            assert abs(sum(terms)) <= 1e-6 * max(abs(x) for x in terms)


def test_k2_matches_runge_kutta():
    f = gaussian(center=0.6)
    data = radial_data(f, 7, 0.15, 0.95, 300)
    a = analytic_invert_k2(data).profile
    b = invert_radial(data).profile
    sel = (b.points >= 0.4) & (b.points <= 0.9)
    assert np.linalg.norm(a.values[sel] - b.values[sel]) / np.linalg.norm(b.values[sel]) <= 5e-3


# -- causality ---------------------------------------------------------------------


@pytest.mark.parametrize("r0", [0.3, 0.5])
def test_truncation_causality_with_trailing_windows(r0):
    f = gaussian(center=0.6)
    data = radial_data(f, 5, 0.05, 0.99, 300)
    probe = invert_radial(data, options=InversionOptions(diff=CAUSAL_POLYFIT))
    opts = InversionOptions(diff=CAUSAL_POLYFIT, eps_prime=probe.eps_prime)
    full = invert_radial(data, options=opts)
    keep = data.grid.points <= 1 - r0
    cut = SmtData(5, SampledFn(Grid1D(data.grid.points[keep]), data.samples.values[keep]))
    part = invert_radial(cut, options=opts)
    a = full.profile.values[full.profile.points > r0]
    b = part.profile.values[part.profile.points > r0]
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(a)


# -- full sphere, recombination and metrics -------------------------------------


def test_fig8_full_pipeline_and_recombine():
    phantom = two_mode()
    sphere = SphereGrid.for_degree(2)
    data = simulate_full_sphere(phantom, Grid1D.linspace(0.01, 0.99, 300), sphere)
    results = invert_full_sphere(data, 2)
    by = {(r.q, r.s): r for r in results}
    for mode in phantom:
        assert error_metrics(by[(mode.q, mode.s)].profile, mode.profile, (0.2, 0.9))["rel_l2"] <= 1e-2
    for key, res in by.items():
        if key not in ((0, 1), (1, 2)):
            assert np.all(res.profile.values == 0)
    r, field_ = recombine(results, sphere)
    truth = sum(np.outer(real_sph_harm(m.q, m.s, sphere.theta, sphere.phi), m.profile(r)) for m in phantom)
    sel = (r >= 0.2) & (r <= 0.9)
    assert np.max(np.abs(field_[:, sel] - truth[:, sel])) <= 2e-2 * np.max(np.abs(truth))


def _const_result(values, q=0, s=1):
    from smtinv.inversion import ReconstructionResult

    g = Grid1D.linspace(0.1, 0.9, len(values))
    return ReconstructionResult(SampledFn(g, np.asarray(values, float)), 0.1, "ode", q=q, s=s)


def test_recombine_examples():
    sphere = SphereGrid(3, 5)
    vals = np.linspace(1, 2, 7)
    r, field_ = recombine([_const_result(vals)], sphere)
    assert np.allclose(field_, np.tile(vals / math.sqrt(4 * math.pi), (sphere.size, 1)))
    _, zero = recombine([_const_result(np.zeros(7)), _const_result(np.zeros(7), 1, 2)], sphere)
    assert np.all(zero == 0)
    with pytest.raises(ValueError):
        bad = _const_result(np.zeros(8), 1, 1)
        recombine([_const_result(vals), bad], sphere)


def test_error_metrics_examples():
    a, b = 0.2, 0.7
    g = Grid1D.linspace(0.1, 0.9, 81)
    unit = lambda r: np.full_like(np.asarray(r, float), 1 / math.sqrt(b - a))
    exact = SampledFn(g, unit(g.points))
    m = error_metrics(exact, unit, (a, b))
    assert m["rel_l2"] == 0 and m["max_abs"] == 0
    c = 0.01
    shifted = SampledFn(g, unit(g.points) + c)
    assert error_metrics(shifted, unit, (a, b))["rel_l2"] == pytest.approx(c * math.sqrt(b - a), abs=1e-10)


def test_error_metrics_disjoint_supports():
    g = Grid1D.linspace(0.01, 0.99, 981)
    truth = lambda r: np.where(np.asarray(r) < 0.4, 1.0, 0.0)
    rec = SampledFn(g, np.where(g.points > 0.6, 2.0, 0.0))
    m = error_metrics(rec, truth, (0.1, 0.9))
    e_truth = error_metrics(SampledFn(g, np.zeros_like(g.points)), truth, (0.1, 0.9))["abs_l2"] ** 2
    e_rec = error_metrics(rec, lambda r: np.zeros_like(np.asarray(r, float)), (0.1, 0.9))["abs_l2"] ** 2
    assert m["rel_l2"] == pytest.approx(math.sqrt(1 + e_rec / e_truth), rel=1e-12)


def test_error_metrics_zero_truth():
    g = Grid1D.linspace(0.1, 0.9, 9)
    m = error_metrics(SampledFn(g, np.ones(9)), lambda r: np.zeros_like(np.asarray(r, float)), (0.2, 0.8))
    assert m["rel_l2"] is None and m["abs_l2"] == pytest.approx(math.sqrt(0.6))
