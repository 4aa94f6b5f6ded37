"""Coefficient schedules, the two accelerated wrappers, restarts, Lyapunov."""

import math

import numpy as np
import pytest

from descent_lab import (
    MS_WINDOWS,
    Geometry,
    NesterovSchedule,
    PowerDgf,
    QuadraticDgf,
    lyapunov_track,
    make_accel_kernel,
    make_power_norm_loss,
    ms_accelerate,
    ms_step_size,
    nesterov_accelerate,
    nesterov_schedule,
    restart_constant,
    restart_wrap,
    rgd_step,
    rgd_step_size,
    rising_factorial,
    run_descent,
    DescentConfig,
)
from descent_lab.errors import ConfigError


def test_rising_factorial():
    assert rising_factorial(1, 4) == 24
    assert rising_factorial(2, 3) == 24
    assert rising_factorial(3, 1) == 3
    assert rising_factorial(5, 0) == 1


class TestNesterovSchedule:
    def test_frozen_order_two_values(self):
        sched = NesterovSchedule(2, 1.0)
        assert sched.A(2) == pytest.approx(1.5, rel=1e-15)
        assert sched.A(3) == pytest.approx(3.0, rel=1e-15)
        assert sched.alpha(2) == pytest.approx(1.5, rel=1e-15)
        assert sched.tau(2) == pytest.approx(0.5, rel=1e-15)

    def test_frozen_order_four_first_coefficient(self):
        assert NesterovSchedule(4, 1.0).A(1) == pytest.approx(0.09375, rel=1e-15)

    def test_difference_identity_to_high_index(self):
        # The growth schedule must satisfy A_{k+1} - A_k = delta * alpha_k
        # exactly; this is what lets wrappers maintain A by recurrence.
        for p, delta in ((2, 1.0), (3, 0.35), (4, 0.08)):
            sched = NesterovSchedule(p, delta)
            for k in range(0, 10_000, 97):
                lhs = sched.A(k + 1) - sched.A(k)
                rhs = delta * sched.alpha(k)
                assert lhs == pytest.approx(rhs, rel=1e-12), (p, delta, k)

    def test_coupling_weight_identity(self):
        # delta * tau_k equals delta * alpha_k / A_{k+1}; at k = 0 the
        # coupling weight is exactly one, which is what makes the first
        # iterate a pure mirror point.
        for p, delta in ((2, 0.7), (4, 0.11)):
            sched = NesterovSchedule(p, delta)
            assert delta * sched.tau(0) == pytest.approx(1.0, rel=1e-15)
            for k in (1, 2, 10, 123, 4567):
                lhs = delta * sched.tau(k)
                rhs = delta * sched.alpha(k) / sched.A(k + 1)
                assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_custom_constant_scales_a_linearly(self):
        base = NesterovSchedule(3, 0.5)
        doubled = NesterovSchedule(3, 0.5, constant=2.0 * (1.0 / 3.0) ** 3)
        assert doubled.A(7) == pytest.approx(2.0 * base.A(7), rel=1e-14)

    def test_convenience_tuple(self):
        sched = NesterovSchedule(2, 1.0)
        assert nesterov_schedule(2, 1.0, 2) == (sched.A(2), sched.alpha(2), sched.tau(2))


class TestKernels:
    def test_progress_constants(self):
        geom = Geometry.identity(2)
        dgf = QuadraticDgf(geom)
        assert make_accel_kernel("gd", eta=0.5, geometry=geom).progress == 0.25
        rgd = make_accel_kernel("rgd", eta=0.001, p=4, geometry=geom)
        assert rgd.progress == pytest.approx(0.05, rel=1e-12)
        prox = make_accel_kernel("natural_prox", eta=0.25, p=3, dgf=dgf)
        assert prox.progress == pytest.approx(0.5, rel=1e-12)
        assert make_accel_kernel("bregman_prox", eta=0.3, dgf=dgf).progress == 0.3
        tensor = make_accel_kernel("tensor", eta=0.5, p=3, nu=1.0, geometry=geom)
        assert tensor.order == 3.0
        assert tensor.progress == pytest.approx(0.5**0.5 / 2.0**1.5, rel=1e-12)

    def test_unknown_kernel(self):
        with pytest.raises(ConfigError):
            make_accel_kernel("momentum", eta=0.1)

    def test_prox_kernels_insist_on_quadratic_metric(self):
        power = PowerDgf(Geometry.identity(2), 4)
        with pytest.raises(ConfigError):
            make_accel_kernel("natural_prox", eta=0.1, p=4, dgf=power)
        with pytest.raises(ConfigError):
            make_accel_kernel("bregman_prox", eta=0.1, dgf=power)


def nag_run(K=60):
    geom = Geometry.identity(6)
    obj = make_power_norm_loss(2, geom)
    kernel = make_accel_kernel("gd", eta=1.0, geometry=geom)
    dgf = QuadraticDgf(geom)
    x0 = np.linspace(-2.0, 1.0, 6)
    trace = nesterov_accelerate(kernel, obj, dgf, x0, K)
    return obj, dgf, trace


def argd_run(K=80):
    geom = Geometry.identity(4)
    obj = make_power_norm_loss(4, geom)
    eta = rgd_step_size(obj.smoothness_constants, 4)
    kernel = make_accel_kernel("rgd", eta=eta, p=4, geometry=geom)
    x0 = np.array([1.0, -0.5, 0.25, 0.75])
    dgf = PowerDgf(geom, 4, center=x0)
    trace = nesterov_accelerate(kernel, obj, dgf, x0, K)
    delta = (kernel.progress) ** (3.0 / 4.0)
    return obj, dgf, trace, delta


class TestNesterovAccelerate:
    def test_nag_spends_exactly_two_gradients_per_iteration(self):
        obj, _, trace = nag_run(40)
        assert obj.grad_evals == 80
        assert trace.records[-1].grad_evals == 80

    def test_nag_envelope_on_a_quadratic(self):
        obj, dgf, trace = nag_run(60)
        delta = math.sqrt(0.5)
        d0 = dgf.bregman(obj.known_minimizer, trace.records[0].x)
        for rec in trace.records[1:]:
            bound = 2.0**2 * d0 / (delta * rec.k) ** 2
            assert rec.f_gap <= bound * (1.0 + 1e-9)

    def test_argd_envelope_on_the_quartic_power_norm(self):
        obj, dgf, trace, delta = argd_run(80)
        d0 = dgf.bregman(obj.known_minimizer, trace.aux["z"][0])
        for rec in trace.records[1:]:
            bound = 4.0**4 * d0 / (delta * rec.k) ** 4
            assert rec.f_gap <= bound * (1.0 + 1e-9)

    def test_lyapunov_report_is_monotone(self):
        obj, dgf, trace, _ = argd_run(50)
        report = lyapunov_track(trace, dgf, None, obj.known_minimizer, f_star=0.0)
        assert report.monotone
        assert report.max_increase <= 1e-9 * (1.0 + report.values[0])
        assert len(report.values) == len(trace.records)

    def test_grad_at_y_variant_accepts_a_prox_kernel_only(self):
        geom = Geometry.identity(3)
        obj = make_power_norm_loss(2, geom)
        dgf = QuadraticDgf(geom)
        gd = make_accel_kernel("gd", eta=1.0, geometry=geom)
        with pytest.raises(ConfigError):
            nesterov_accelerate(gd, obj, dgf, np.ones(3), 5, variant="grad_at_y")
        prox = make_accel_kernel("bregman_prox", eta=0.5, dgf=dgf)
        trace = nesterov_accelerate(prox, obj, dgf, np.ones(3), 25, variant="grad_at_y")
        report = lyapunov_track(trace, dgf, None, obj.known_minimizer)
        assert report.monotone

    def test_order_mismatch_between_kernel_and_mirror_map(self):
        geom = Geometry.identity(2)
        obj = make_power_norm_loss(4, geom)
        kernel = make_accel_kernel("rgd", eta=0.01, p=4, geometry=geom)
        with pytest.raises(ConfigError):
            nesterov_accelerate(kernel, obj, QuadraticDgf(geom), np.ones(2), 5)

    def test_fractional_taylor_orders_are_rejected(self):
        geom = Geometry.identity(2)
        obj = make_power_norm_loss(4, geom)
        kernel = make_accel_kernel("tensor", eta=0.1, p=3, nu=0.5, geometry=geom)
        with pytest.raises(ConfigError):
            nesterov_accelerate(kernel, obj, PowerDgf(geom, 3), np.ones(2), 5)


def ms_rgd_run(K=60, eta=None):
    geom = Geometry.identity(5)
    obj = make_power_norm_loss(4, geom)
    if eta is None:
        eta = ms_step_size(obj.smoothness_constants, 4)
    x0 = np.array([1.5, -1.0, 0.5, 0.25, -0.75])
    trace = ms_accelerate("rgd", obj, QuadraticDgf(geom), x0, K, eta=eta, p=4)
    return obj, trace, eta


class TestMsAccelerate:
    def test_step_size_adds_a_cap_to_the_admissibility_bound(self):
        # Quartic ladder: the series bound alone allows 1/5.5 per step, but
        # the wrapper caps the multiplier at 2/(5p) = 0.1, so eta = 1e-3.
        assert ms_step_size([1.0, 3.0, 6.0, 6.0], 4) == pytest.approx(1e-3, rel=1e-15)
        assert ms_step_size([1.0, 2.0, 2.0], 3) == pytest.approx((2 / 15) ** 2,
                                                                 rel=1e-15)
        # When the series bound is already tighter than the cap it wins.
        assert ms_step_size([1.0, 10.0], 2) == rgd_step_size([1.0, 10.0], 2)
        with pytest.raises(ConfigError):
            ms_step_size(None, math.inf, series_sum=0.5)

    def test_window_and_contraction_certificates(self):
        _, trace, _ = ms_rgd_run()
        lo, hi = MS_WINDOWS["rgd"]
        assert len(trace.records) > 10
        for rec in trace.records[1:]:
            assert lo <= rec.certificates["lambda_window"] <= hi
            assert rec.certificates["half_contraction_margin"] <= 1e-9

    def test_aggressive_step_still_yields_certified_pairs(self):
        # With the plain descent step size the lower window edge stops
        # contracting, so the search must refuse those multipliers and
        # settle higher in the window rather than emit a bad certificate.
        geom = Geometry.identity(5)
        obj = make_power_norm_loss(4, geom)
        loose = rgd_step_size(obj.smoothness_constants, 4)
        assert loose > ms_step_size(obj.smoothness_constants, 4)
        _, trace, _ = ms_rgd_run(40, eta=loose)
        lo, hi = MS_WINDOWS["rgd"]
        assert len(trace.records) > 10
        for rec in trace.records[1:]:
            assert lo <= rec.certificates["lambda_window"] <= hi
            assert rec.certificates["half_contraction_margin"] <= 1e-9

    def test_multiplier_identity_against_stored_a_sequence(self):
        _, trace, _ = ms_rgd_run(30)
        a_values = trace.aux["A"]
        lams = trace.aux["lambda"]
        for i, lam in enumerate(lams):
            grown = a_values[i + 1] - a_values[i]
            assert grown**2 / a_values[i + 1] == pytest.approx(lam, rel=1e-11)

    def test_line_search_logs_its_evaluation_budget(self):
        _, trace, _ = ms_rgd_run(40)
        evals = trace.aux["search_evals"]
        assert len(evals) == len(trace.records) - 1
        assert all(e >= 1 for e in evals)
        assert float(np.mean(evals)) <= 8.0

    def test_starting_at_the_minimizer_returns_immediately(self):
        geom = Geometry.identity(3)
        obj = make_power_norm_loss(4, geom)
        trace = ms_accelerate("rgd", obj, QuadraticDgf(geom), np.zeros(3), 10,
                              eta=0.01, p=4)
        assert len(trace.records) == 1

    def test_requires_a_quadratic_mirror_map(self):
        geom = Geometry.identity(2)
        obj = make_power_norm_loss(4, geom)
        with pytest.raises(ConfigError):
            ms_accelerate("rgd", obj, PowerDgf(geom, 4), np.ones(2), 5, eta=0.01, p=4)
        with pytest.raises(ConfigError):
            ms_accelerate("secant", obj, QuadraticDgf(geom), np.ones(2), 5, eta=0.01, p=4)

    def test_tensor_variant_stays_in_its_upper_half_window(self):
        geom = Geometry.identity(3)
        obj = make_power_norm_loss(4, geom)
        trace = ms_accelerate("tensor", obj, QuadraticDgf(geom), np.full(3, 1.2), 25,
                              eta=0.05, p=3, nu=1.0)
        lo, hi = MS_WINDOWS["tensor"]
        for rec in trace.records[1:]:
            assert lo <= rec.certificates["lambda_window"] <= hi
            assert rec.certificates["half_contraction_margin"] <= 1e-9
        assert trace.records[-1].f_gap < trace.records[0].f_gap


class TestRestart:
    def test_epoch_length_worked_example(self):
        assert restart_constant("nesterov", 2, 0.25) == 8
        assert restart_constant("ms", 2, 0.25) >= 1
        with pytest.raises(ConfigError):
            restart_constant("geometric", 2, 0.25)
        with pytest.raises(ConfigError):
            restart_constant("nesterov", 2, 0.0)

    def test_restart_wrap_contracts_each_epoch(self):
        geom = Geometry.identity(4)
        obj = make_power_norm_loss(4, geom)
        eta = rgd_step_size(obj.smoothness_constants, 4)
        mu = obj.gradient_dominated[0]

        def runner(objective, start, budget):
            kernel = make_accel_kernel("rgd", eta=eta, p=4, geometry=geom)
            dgf = PowerDgf(geom, 4, center=start)
            return nesterov_accelerate(kernel, objective, dgf, start, budget)

        epochs = 3
        trace = restart_wrap(runner, obj, np.array([1.0, 0.5, -0.5, 0.25]), mu, 4, eta,
                             epochs=epochs)
        c = trace.aux["epoch_length"]
        assert trace.aux["epoch_starts"] == [i * c for i in range(epochs)]
        assert len(trace.records) == epochs * c + 2  # start row plus closing step
        gaps = trace.gaps()
        for start in trace.aux["epoch_starts"]:
            assert gaps[start + c] <= gaps[start] / math.e
        # The closing move is a certified descent step, so it cannot backslide.
        assert gaps[-1] <= gaps[-2] * (1.0 + 1e-12)

    def test_restart_needs_a_modulus(self):
        geom = Geometry.identity(2)
        obj = make_power_norm_loss(4, geom)
        with pytest.raises(ConfigError):
            restart_wrap(lambda o, s, c: None, obj, np.ones(2), None, 4, 0.01)


class TestLyapunovTrack:
    def test_plain_traces_are_rejected(self):
        geom = Geometry.identity(2)
        obj = make_power_norm_loss(2, geom)
        trace = run_descent(DescentConfig(method="gd", eta=0.5, geometry=geom),
                            obj, [1.0, 1.0], 3)
        with pytest.raises(ValueError):
            lyapunov_track(trace, QuadraticDgf(geom), None, np.zeros(2))

    def test_schedule_fallback_when_aux_lacks_a(self):
        obj, dgf, trace = nag_run(15)
        del trace.aux["A"]
        with pytest.raises(ValueError):
            lyapunov_track(trace, dgf, None, obj.known_minimizer)
        sched = NesterovSchedule(2, math.sqrt(0.5))
        report = lyapunov_track(trace, dgf, sched, obj.known_minimizer)
        assert report.monotone

    def test_missing_reference_is_an_error(self):
        obj, dgf, trace = nag_run(5)
        trace.f_reference = None
        with pytest.raises(ValueError):
            lyapunov_track(trace, dgf, None, obj.known_minimizer)
