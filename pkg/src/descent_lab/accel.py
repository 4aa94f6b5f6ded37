"""Momentum wrappers around descent kernels.

Two acceleration schemes share one Lyapunov function
E_k = A_k (f(y_k) - f(x*)) + D_h(x*, z_k):

* a fixed schedule (:func:`nesterov_accelerate`) whose weights A_k grow like
  (delta k)^p over a rising factorial, usable with any kernel whose per-step
  progress constant is known in advance, and
* a line-search scheme (:func:`ms_accelerate`) that picks a multiplier
  lambda each iteration so that the kernel step y - x lands in a method
  specific window, buying the faster (3p-2)/2 exponent.

Both maintain a mirror sequence z_k and couple x_k between z_k and y_k.
:func:`restart_wrap` converts either into a linearly convergent scheme when
the objective is gradient dominated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .descent import (
    GRAD_FLOOR,
    Trace,
    TraceRecord,
    dual_exponent,
    gd_step,
    natural_prox_step,
    bregman_prox_step,
    rgd_epsilon,
    rgd_step,
    rgd_step_size,
    tensor_step,
)
from .errors import ConfigError, LineSearchError, SolverError
from .geometry import Geometry

Vector = np.ndarray

SCHEDULE_IDENTITY_RTOL = 1e-12
LYAPUNOV_SLACK = 1e-9
HALF_CONTRACTION_SLACK = 1e-9

MS_WINDOWS = {
    "rgd": (0.75, 1.25),
    "prox": (0.5, 1.5),
    "tensor": (0.5, 0.75),
}

MAX_BRACKET_STEPS = 64
MAX_BISECTION_STEPS = 64


def rising_factorial(k: int, p: int) -> int:
    """k^(p) = k (k+1) ... (k+p-1), exactly, in integer arithmetic."""
    if k < 0 or p < 0:
        raise ValueError("rising factorial needs nonnegative arguments")
    return math.prod(range(k, k + p))


class NesterovSchedule:
    """Fixed weight schedule A_k = C delta^p k^(p).

    ``alpha(k)`` is computed from the exact telescoped difference
    C p delta^{p-1} (k+1)^(p-1) rather than by subtracting neighbouring A
    values, so it stays accurate at large k. The default C = 1/p^p is the
    largest constant the convergence argument allows for a 1-uniformly
    convex mirror map; pass a smaller one for maps with modulus m < 1.
    """

    def __init__(self, p: int, delta: float, constant: float | None = None):
        if math.isinf(p):
            raise ConfigError("the fixed schedule is defined for finite orders")
        if p < 2 or p != int(p):
            raise ConfigError(f"order must be an integer >= 2, got {p!r}")
        if not delta > 0:
            raise ConfigError("delta must be positive")
        self.p = int(p)
        self.delta = float(delta)
        self.constant = (1.0 / self.p) ** self.p if constant is None else float(constant)
        if not self.constant > 0:
            raise ConfigError("schedule constant must be positive")

    def A(self, k: int) -> float:
        return self.constant * self.delta**self.p * rising_factorial(k, self.p)

    def alpha(self, k: int) -> float:
        return (
            self.constant
            * self.p
            * self.delta ** (self.p - 1)
            * rising_factorial(k + 1, self.p - 1)
        )

    def tau(self, k: int) -> float:
        return self.alpha(k) / self.A(k + 1)


def nesterov_schedule(p: int, delta: float, k: int) -> tuple[float, float, float]:
    """(A_k, alpha_k, tau_k) of the default fixed schedule."""
    if k < 0:
        raise ConfigError("k must be nonnegative")
    sched = NesterovSchedule(p, delta)
    return sched.A(k), sched.alpha(k), sched.tau(k)


@dataclass
class RgdKernel:
    """Rescaled gradient step for the wrappers (p = 2 is plain gradient
    descent). Makes progress against the gradient at the launch point."""

    eta: float
    p: int
    geometry: Geometry
    method: str = "rgd"
    variant: str = "grad_at_x"

    @property
    def order(self) -> float:
        return self.p

    @property
    def progress(self) -> float:
        return rgd_epsilon(self.eta, self.p) / 2.0

    def step(self, obj, x: Vector, gradient=None) -> Vector:
        return rgd_step(obj, self.geometry, x, self.eta, self.p, gradient=gradient)


@dataclass
class GdKernel:
    eta: float
    geometry: Geometry
    method: str = "gd"
    variant: str = "grad_at_x"
    p: int = 2

    @property
    def order(self) -> float:
        return 2.0

    @property
    def progress(self) -> float:
        return self.eta / 2.0

    def step(self, obj, x: Vector, gradient=None) -> Vector:
        return gd_step(obj, self.geometry, x, self.eta, gradient=gradient)


@dataclass
class NaturalProxKernel:
    """Proximal step in a quadratic local metric; its optimality condition
    supplies the inner-product progress the gradient-at-y wrapper needs,
    with the exact coefficient eta^{1/(p-1)}."""

    eta: float
    p: int
    dgf: Any
    method: str = "natural_prox"
    variant: str = "grad_at_y"

    def __post_init__(self) -> None:
        if getattr(self.dgf, "kind", None) != "quadratic":
            raise ConfigError("the proximal kernel needs a quadratic local metric")

    @property
    def order(self) -> float:
        return self.p

    @property
    def progress(self) -> float:
        return self.eta ** (1.0 / (self.p - 1.0))

    def step(self, obj, x: Vector, gradient=None) -> Vector:
        return natural_prox_step(obj, self.dgf, x, self.eta, self.p, gradient=gradient)


@dataclass
class BregmanProxKernel:
    """Classic proximal step (order 2): eta grad f(z) = grad h(x) - grad h(z)
    at the landing point, giving inner-product progress eta ||grad f(z)||^2."""

    eta: float
    dgf: Any
    method: str = "bregman_prox"
    variant: str = "grad_at_y"
    p: int = 2

    def __post_init__(self) -> None:
        if getattr(self.dgf, "kind", None) != "quadratic":
            raise ConfigError("the Bregman kernel pairs with a quadratic dgf here")

    @property
    def order(self) -> float:
        return 2.0

    @property
    def progress(self) -> float:
        return self.eta

    def step(self, obj, x: Vector, gradient=None) -> Vector:
        return bregman_prox_step(obj, self.dgf, x, self.eta, gradient=gradient)


@dataclass
class TensorKernel:
    """Regularized Taylor step; certified order is p - 1 + nu."""

    eta: float
    p: int
    geometry: Geometry
    nu: float = 1.0
    method: str = "tensor"
    variant: str = "grad_at_x"

    @property
    def order(self) -> float:
        return self.p - 1.0 + self.nu

    @property
    def progress(self) -> float:
        pt = self.order
        return self.eta ** (1.0 / (pt - 1.0)) / 2.0 ** ((2.0 * pt - 3.0) / (pt - 1.0))

    def step(self, obj, x: Vector, gradient=None) -> Vector:
        return tensor_step(
            obj, self.geometry, x, self.eta, self.p, self.nu, gradient=gradient
        )


def make_accel_kernel(
    method: str,
    *,
    eta: float,
    p: int = 2,
    nu: float = 1.0,
    geometry: Geometry | None = None,
    dgf: Any = None,
):
    if method == "gd":
        return GdKernel(eta=eta, geometry=geometry)
    if method == "rgd":
        return RgdKernel(eta=eta, p=p, geometry=geometry)
    if method == "natural_prox":
        return NaturalProxKernel(eta=eta, p=p, dgf=dgf)
    if method == "bregman_prox":
        return BregmanProxKernel(eta=eta, dgf=dgf)
    if method == "tensor":
        return TensorKernel(eta=eta, p=p, geometry=geometry, nu=nu)
    raise ConfigError(f"no acceleration kernel for method {method!r}")


def _schedule_delta(kernel) -> float:
    """delta such that delta^{p/(p-1)} equals the kernel's progress constant."""
    q = dual_exponent(kernel.order)
    return kernel.progress ** (1.0 / q)


def _lyapunov_value(dgf, x_star: Vector, z: Vector, A: float, gap: float) -> float:
    return A * gap + dgf.bregman(x_star, z)


def _accel_record(
    k: int,
    y: Vector,
    f_value: float,
    reference: float | None,
    grad_dual_norm: float,
    grad_evals: int,
    step_norm: float,
) -> TraceRecord:
    gap = f_value - reference if reference is not None else math.nan
    return TraceRecord(
        k=k,
        x=y.copy(),
        f_value=f_value,
        f_gap=gap,
        grad_dual_norm=grad_dual_norm,
        grad_evals=grad_evals,
        step_norm=step_norm,
    )


def nesterov_accelerate(
    kernel,
    obj,
    dgf,
    x0,
    K: int,
    variant: str | None = None,
    *,
    schedule_constant: float | None = None,
    grad_floor: float = GRAD_FLOOR,
) -> Trace:
    """Fixed-schedule acceleration of a descent kernel.

    Maintains y (kernel iterates), z (mirror iterates) and the coupling
    x_k = (delta tau_k) z_k + (1 - delta tau_k) y_k. The mirror step on z
    uses weight delta*alpha_k with the gradient taken at x_k
    (``grad_at_x``) or at the fresh kernel iterate (``grad_at_y``). The
    trace rows hold the y sequence; z_k, A_k and Lyapunov values (when the
    minimizer is known) ride along in ``aux``. Each iteration spends one
    wrapper gradient evaluation plus whatever the kernel needs.
    """
    if K < 0:
        raise ConfigError("iteration count must be nonnegative")
    if variant is None:
        variant = kernel.variant
    if variant not in ("grad_at_x", "grad_at_y"):
        raise ConfigError(f"variant must be grad_at_x or grad_at_y, got {variant!r}")
    if variant == "grad_at_y" and kernel.variant != "grad_at_y":
        raise ConfigError(
            "the gradient-at-y coupling needs a proximal kernel whose optimality "
            "condition supplies inner-product progress"
        )
    p = kernel.order
    if math.isinf(p) or p != int(p):
        raise ConfigError(
            "the fixed schedule needs an integer order; fractional Taylor orders "
            "pair with the line-search wrapper"
        )
    p = int(p)
    if p > 2 and getattr(dgf, "convexity_order", None) != p:
        raise ConfigError(
            f"order {p} acceleration needs a degree-{p} power mirror map "
            "(D_h must dominate ||x-y||^p / p)"
        )
    delta = _schedule_delta(kernel)
    sched = NesterovSchedule(p, delta, schedule_constant)
    geom = dgf.geometry
    reference = obj.known_minimum
    x_star = obj.known_minimizer

    y = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    z = y.copy()
    trace = Trace(
        method_tag=f"nesterov-{kernel.method}",
        config={
            "wrapper": "nesterov",
            "kernel": kernel.method,
            "variant": variant,
            "eta": kernel.eta,
            "p": p,
            "delta": delta,
            "schedule_constant": sched.constant,
        },
        f_reference=reference,
    )
    f_y = float(obj.value(y))
    trace.records.append(
        _accel_record(0, y, f_y, reference, math.nan, obj.grad_evals, math.nan)
    )
    A = 0.0
    trace.aux["z"] = [z.copy()]
    trace.aux["A"] = [A]
    if x_star is not None:
        trace.aux["lyapunov"] = [_lyapunov_value(dgf, x_star, z, A, f_y - (reference or 0.0))]

    for k in range(K):
        alpha = sched.alpha(k)
        A_next = A + delta * alpha
        coupling = delta * alpha / A_next
        x = coupling * z + (1.0 - coupling) * y
        if variant == "grad_at_x":
            g = np.asarray(obj.gradient(x), dtype=float)
            gn = geom.dual_norm(g)
            if gn <= grad_floor:
                break
            z = dgf.mirror_step(z, g, delta * alpha)
            y_next = kernel.step(obj, x)
        else:
            y_next = kernel.step(obj, x)
            g = np.asarray(obj.gradient(y_next), dtype=float)
            gn = geom.dual_norm(g)
            z = dgf.mirror_step(z, g, delta * alpha)
        step_norm = geom.norm(y_next - y)
        y = y_next
        f_y = float(obj.value(y))
        A = A_next
        trace.records.append(
            _accel_record(
                k + 1,
                y,
                f_y,
                reference,
                gn,
                obj.grad_evals,
                step_norm,
            )
        )
        trace.aux["z"].append(z.copy())
        trace.aux["A"].append(A)
        if x_star is not None:
            trace.aux["lyapunov"].append(
                _lyapunov_value(dgf, x_star, z, A, f_y - (reference or 0.0))
            )
        if gn <= grad_floor:
            break
    return trace


def ms_step_size(constants, p, series_sum: float | None = None) -> float:
    """Step size for the line-search wrapper: eta = epsilon^{p-1} with
    epsilon = min{2/(5p), 1/(2 sum_{m=2}^p L_m/m!)}.

    The extra 2/(5p) cap, absent from :func:`rgd_step_size`, keeps the
    gradient from shrinking so fast across one kernel step that pairs near
    the lower window edge lose the half-contraction. With the cap the whole
    window is feasible and the search terminates quickly; without it the
    search still only accepts certified pairs, but may have to crowd them
    against the upper window edge.
    """
    base = rgd_step_size(constants, p, series_sum)
    if math.isinf(p):
        raise ConfigError("the line-search wrapper needs a finite order")
    epsilon = min(rgd_epsilon(base, p), 2.0 / (5.0 * p))
    return epsilon ** (p - 1.0)


@dataclass
class MsSearchResult:
    converged: bool
    lam: float
    alpha: float
    x: Vector | None
    y: Vector | None
    g_value: float
    evaluations: int
    bracket: tuple[float, float] | None = None
    grad_y: Vector | None = None
    margin: float = math.nan


def _ms_candidate(
    obj, geom: Geometry, variant: str, eta: float, p: int, nu: float, x: Vector
):
    """One kernel evaluation for the line search; returns (y, gn_at_x)."""
    if variant == "rgd":
        g = np.asarray(obj.gradient(x), dtype=float)
        gn = geom.dual_norm(g)
        if gn <= GRAD_FLOOR:
            return x.copy(), gn
        return rgd_step(obj, geom, x, eta, p, gradient=g), gn
    if variant == "prox":
        from .geometry import QuadraticDgf

        g = np.asarray(obj.gradient(x), dtype=float)
        gn = geom.dual_norm(g)
        if gn <= GRAD_FLOOR:
            return x.copy(), gn
        return natural_prox_step(obj, QuadraticDgf(geom), x, eta, p, gradient=g), gn
    g = np.asarray(obj.gradient(x), dtype=float)
    gn = geom.dual_norm(g)
    if gn <= GRAD_FLOOR:
        return x.copy(), gn
    return tensor_step(obj, geom, x, eta, p, nu, gradient=g), gn


def ms_line_search(
    obj,
    geom: Geometry,
    variant: str,
    z_k: Vector,
    y_k: Vector,
    A_k: float,
    delta: float,
    eta: float,
    p: int,
    warm_start: float | None = None,
    nu: float = 1.0,
) -> MsSearchResult:
    """Find a multiplier lambda whose induced coupling admits the kernel step.

    Each trial lambda determines alpha = (lambda + sqrt(lambda^2 +
    4 A_k lambda))/(2 delta), hence the coupling point x(lambda) between z_k
    and y_k, hence the kernel step y(lambda); the trial is scored by
    g(lambda) = lambda ||y - x||^{e}/eta (e = p-2, or p+nu-3 for the Taylor
    kernel) against the variant's window. Acceptance needs the window AND
    the half-contraction ||y - x + lambda B^{-1} grad f(y)|| <= ||y - x||/2;
    a trial inside the window that fails the contraction is pushed up or
    down according to whether lambda ||grad f(y)||_* runs short or long of
    ||y - x||. Starts at ``warm_start`` (eta when omitted), expands or
    shrinks by factors of two to bracket an acceptable multiplier and
    bisects. A vanishing gradient or step reports convergence instead of a
    multiplier. The gradient at the accepted iterate rides along in
    ``grad_y`` so the caller can reuse it for the mirror step.
    """
    if variant not in MS_WINDOWS:
        raise ConfigError(f"unknown line-search variant {variant!r}")
    lo_target, hi_target = MS_WINDOWS[variant]
    exponent = (p - 1.0 + nu) - 2.0 if variant == "tensor" else p - 2.0
    evaluations = 0

    def propose(lam: float):
        nonlocal evaluations
        alpha = (lam + math.sqrt(lam * lam + 4.0 * A_k * lam)) / (2.0 * delta)
        A_next = A_k + delta * alpha
        coupling = delta * alpha / A_next
        x = coupling * z_k + (1.0 - coupling) * y_k
        y, gn = _ms_candidate(obj, geom, variant, eta, p, nu, x)
        evaluations += 1
        s = geom.norm(y - x)
        return alpha, x, y, s, gn

    def assess(lam: float):
        """Score one trial: verdict in {done, accept, low, high}."""
        alpha, x, y, s, gn = propose(lam)
        if gn <= GRAD_FLOOR or s == 0.0:
            done = MsSearchResult(True, lam, alpha, x, y, 0.0, evaluations)
            return "done", done, 0.0
        g_val = lam * s**exponent / eta
        if g_val < lo_target:
            return "low", None, g_val
        if g_val > hi_target:
            return "high", None, g_val
        grad_y = np.asarray(obj.gradient(y), dtype=float)
        margin = geom.norm(y - x + lam * geom.solve(grad_y)) - 0.5 * s
        if margin <= HALF_CONTRACTION_SLACK:
            accepted = MsSearchResult(
                False, lam, alpha, x, y, g_val, evaluations, None, grad_y, margin
            )
            return "accept", accepted, g_val
        rho = lam * geom.dual_norm(grad_y) / s
        return ("low" if rho < 1.0 else "high"), None, g_val

    lam = float(warm_start) if warm_start is not None else float(eta)
    if not lam > 0:
        lam = float(eta)

    if A_k == 0.0:
        # The coupling collapses to z_k regardless of lambda, so one kernel
        # evaluation fixes the pair and lambda is solved rather than
        # searched: aim for lambda ||grad f(y)||_* = ||y - x|| (the center
        # of the contraction), clamped into the window.
        alpha, x, y, s, gn = propose(lam)
        if gn <= GRAD_FLOOR or s == 0.0:
            return MsSearchResult(True, lam, alpha, x, y, 0.0, evaluations)
        grad_y = np.asarray(obj.gradient(y), dtype=float)
        gn_y = geom.dual_norm(grad_y)
        ideal = s ** (exponent + 1.0) / (eta * gn_y) if gn_y > 0 else hi_target
        g_val = min(max(ideal, lo_target), hi_target)
        lam = g_val * eta / s**exponent
        alpha = (lam + math.sqrt(lam * lam + 4.0 * A_k * lam)) / (2.0 * delta)
        margin = geom.norm(y - x + lam * geom.solve(grad_y)) - 0.5 * s
        if margin > HALF_CONTRACTION_SLACK:
            raise LineSearchError(
                "no windowed multiplier contracts the first pair;"
                " the step size is too large for this wrapper",
                last_values={"lambda": lam, "g": g_val, "margin": margin},
            )
        return MsSearchResult(
            False, lam, alpha, x, y, g_val, evaluations, None, grad_y, margin
        )

    verdict, result, g_val = assess(lam)
    if verdict in ("done", "accept"):
        return result

    # Bracket an acceptable multiplier by doubling or halving lambda.
    if verdict == "low":
        lo_lam, lo_g = lam, g_val
        hi_lam = None
        for _ in range(MAX_BRACKET_STEPS):
            lam *= 2.0
            verdict, result, g_val = assess(lam)
            if verdict in ("done", "accept"):
                return result
            if verdict == "high":
                hi_lam = lam
                break
            lo_lam, lo_g = lam, g_val
        if hi_lam is None:
            raise LineSearchError(
                "could not raise the window value above the band",
                last_values={"lambda": lo_lam, "g": lo_g},
            )
    else:
        hi_lam, hi_g = lam, g_val
        lo_lam = None
        for _ in range(MAX_BRACKET_STEPS):
            lam *= 0.5
            verdict, result, g_val = assess(lam)
            if verdict in ("done", "accept"):
                return result
            if verdict == "low":
                lo_lam = lam
                break
            hi_lam, hi_g = lam, g_val
        if lo_lam is None:
            raise LineSearchError(
                "could not lower the window value below the band",
                last_values={"lambda": hi_lam, "g": hi_g},
            )

    for _ in range(MAX_BISECTION_STEPS):
        lam = 0.5 * (lo_lam + hi_lam)
        verdict, result, g_val = assess(lam)
        if verdict in ("done", "accept"):
            if not result.converged and result.bracket is None:
                result.bracket = (lo_lam, hi_lam)
            return result
        if verdict == "low":
            lo_lam = lam
        else:
            hi_lam = lam
    raise LineSearchError(
        "bisection exhausted without an acceptable pair",
        last_values={"lambda": lam, "g": g_val, "bracket": (lo_lam, hi_lam)},
    )


def ms_accelerate(
    variant: str,
    obj,
    dgf,
    x0,
    K: int,
    *,
    eta: float,
    p: int,
    nu: float = 1.0,
    warm_start: float | None = None,
) -> Trace:
    """Line-search acceleration: per iteration, search for lambda, take the
    kernel step from the induced coupling point, then mirror-step z with the
    gradient at the fresh iterate (computed once inside the search and
    reused here).

    ``dgf`` must be quadratic (the analysis needs B to lower-bound the
    mirror Hessian). The search only accepts pairs satisfying both the
    window and the half-contraction ||y - x + lambda B^{-1} grad f(y)|| <=
    ||y - x||/2; each row records the window value as ``lambda_window`` and
    the contraction slack as ``half_contraction_margin`` (<= 0 when it holds
    exactly). Prefer :func:`ms_step_size` for ``eta``: larger steps keep the
    certificates but squeeze acceptances against the upper window edge,
    costing extra search evaluations.
    """
    if K < 0:
        raise ConfigError("iteration count must be nonnegative")
    if variant not in MS_WINDOWS:
        raise ConfigError(f"unknown line-search variant {variant!r}")
    if getattr(dgf, "kind", None) != "quadratic":
        raise ConfigError("the line-search wrapper needs a quadratic mirror map")
    if not eta > 0:
        raise ConfigError("step size must be positive")
    p_eff = p - 1.0 + nu if variant == "tensor" else float(p)
    delta = eta ** (2.0 / (3.0 * p_eff - 2.0))
    geom = dgf.geometry
    reference = obj.known_minimum
    x_star = obj.known_minimizer

    y = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    z = y.copy()
    A = 0.0
    lam_warm = warm_start
    trace = Trace(
        method_tag=f"ms-{variant}",
        config={
            "wrapper": "ms",
            "variant": variant,
            "eta": eta,
            "p": p,
            "nu": nu,
            "order": p_eff,
            "delta": delta,
            "window": list(MS_WINDOWS[variant]),
        },
        f_reference=reference,
    )
    f_y = float(obj.value(y))
    trace.records.append(
        _accel_record(0, y, f_y, reference, math.nan, obj.grad_evals, math.nan)
    )
    trace.aux["z"] = [z.copy()]
    trace.aux["A"] = [A]
    trace.aux["lambda"] = []
    trace.aux["window_values"] = []
    trace.aux["search_evals"] = []
    if x_star is not None:
        trace.aux["lyapunov"] = [_lyapunov_value(dgf, x_star, z, A, f_y - (reference or 0.0))]

    for k in range(K):
        try:
            found = ms_line_search(
                obj, geom, variant, z, y, A, delta, eta, p,
                warm_start=lam_warm, nu=nu,
            )
        except LineSearchError as err:
            raise LineSearchError(
                f"iteration {k}: {err}", last_values=err.last_values
            ) from err
        if found.converged:
            break
        lam, alpha, x, y_next = found.lam, found.alpha, found.x, found.y
        A_next = A + delta * alpha
        implied = delta**2 * alpha**2 / A_next
        if abs(implied - lam) > SCHEDULE_IDENTITY_RTOL * max(lam, 1e-300):
            raise SolverError(
                f"iteration {k}: multiplier identity drifted ({implied} vs {lam})"
            )
        g_y = found.grad_y
        if g_y is None:
            g_y = np.asarray(obj.gradient(y_next), dtype=float)
        gn_y = geom.dual_norm(g_y)
        margin = found.margin
        if math.isnan(margin):
            s = geom.norm(y_next - x)
            margin = geom.norm(y_next - x + lam * geom.solve(g_y)) - 0.5 * s
        z = dgf.mirror_step(z, g_y, delta * alpha)
        step_norm = geom.norm(y_next - y)
        y = y_next
        f_y = float(obj.value(y))
        A = A_next
        lam_warm = lam
        record = _accel_record(
            k + 1, y, f_y, reference, gn_y, obj.grad_evals, step_norm
        )
        record.certificates["lambda_window"] = found.g_value
        record.certificates["half_contraction_margin"] = margin
        trace.records.append(record)
        trace.aux["z"].append(z.copy())
        trace.aux["A"].append(A)
        trace.aux["lambda"].append(lam)
        trace.aux["window_values"].append(found.g_value)
        trace.aux["search_evals"].append(found.evaluations)
        if x_star is not None:
            trace.aux["lyapunov"].append(
                _lyapunov_value(dgf, x_star, z, A, f_y - (reference or 0.0))
            )
    return trace


def restart_constant(style: str, p: int, kappa: float) -> int:
    """Epoch length for restarting an accelerated run, rounded up.

    ``kappa`` is mu * eta, the product of the domination modulus and the
    kernel step size.
    """
    if not kappa > 0:
        raise ConfigError("kappa must be positive")
    if style == "nesterov":
        c = 2.0 * p / kappa ** (1.0 / p)
    elif style == "ms":
        c = (p**3 / 2.0) ** (p / (3.0 * p - 2.0)) * (math.e / (3.0 * kappa)) ** (
            2.0 / (3.0 * p - 2.0)
        )
    else:
        raise ConfigError(f"unknown restart style {style!r}")
    return max(1, math.ceil(c))


def restart_wrap(
    runner: Callable[[Any, Vector, int], Trace],
    obj,
    x0,
    mu: float | None,
    p: int,
    eta: float,
    style: str = "nesterov",
    *,
    epochs: int = 1,
    final_step: Callable[[Any, Vector], Vector] | None = None,
) -> Trace:
    """Run the accelerated method in epochs of fixed length, then one plain
    rescaled step.

    ``runner(obj, start, c)`` must perform c accelerated iterations from
    ``start`` and return its trace. Each epoch restarts from the previous
    output, which under gradient domination contracts the gap by at least
    1/e per epoch; the closing kernel step makes the composite scheme end
    on a certified descent move.
    """
    if mu is None or not mu > 0:
        raise ConfigError("restarting needs the gradient-domination modulus mu")
    if epochs < 1:
        raise ConfigError("epochs must be a positive integer")
    kappa = mu * eta
    c = restart_constant(style, p, kappa)
    reference = obj.known_minimum
    trace = Trace(
        method_tag=f"restart-{style}",
        config={"wrapper": "restart", "style": style, "p": p, "eta": eta,
                "mu": mu, "kappa": kappa, "epoch_length": c, "epochs": epochs},
        f_reference=reference,
    )
    trace.aux["epoch_length"] = c
    trace.aux["epoch_starts"] = []

    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    geom = obj.geometry if obj.geometry is not None else Geometry.identity(obj.dim)
    if final_step is None:
        final_step = lambda o, v: rgd_step(o, geom, v, eta, p)  # noqa: E731

    k_global = 0
    f_x = float(obj.value(x))
    trace.records.append(
        _accel_record(0, x, f_x, reference, math.nan, obj.grad_evals, math.nan)
    )
    for _ in range(epochs):
        trace.aux["epoch_starts"].append(k_global)
        epoch = runner(obj, x, c)
        for rec in epoch.records[1:]:
            k_global += 1
            moved = TraceRecord(
                k=k_global,
                x=rec.x,
                f_value=rec.f_value,
                f_gap=rec.f_value - reference if reference is not None else math.nan,
                grad_dual_norm=rec.grad_dual_norm,
                grad_evals=rec.grad_evals,
                step_norm=rec.step_norm,
                certificates=dict(rec.certificates),
            )
            trace.records.append(moved)
        x = epoch.records[-1].x.copy()
    x_final = final_step(obj, x)
    k_global += 1
    f_final = float(obj.value(x_final))
    trace.records.append(
        _accel_record(
            k_global,
            x_final,
            f_final,
            reference,
            math.nan,
            obj.grad_evals,
            geom.norm(x_final - x),
        )
    )
    return trace


@dataclass
class LyapunovReport:
    values: np.ndarray
    monotone: bool
    max_increase: float


def lyapunov_track(
    trace: Trace, dgf, schedule: NesterovSchedule | None, x_star, f_star: float | None = None
) -> LyapunovReport:
    """Recompute E_k = A_k (f(y_k) - f*) + D_h(x*, z_k) from a stored trace.

    A_k comes from the trace's own ``aux`` record when present (line-search
    runs), else from ``schedule``. Monotonicity is judged against the slack
    1e-9 (1 + E_0).
    """
    if "z" not in trace.aux:
        raise ValueError("trace does not store the mirror sequence z")
    zs = trace.aux["z"]
    if f_star is None:
        f_star = trace.f_reference
    if f_star is None:
        raise ValueError("need the optimal value (trace has no reference)")
    x_star = np.asarray(x_star, dtype=float)
    if "A" in trace.aux:
        A_values = list(trace.aux["A"])
    elif schedule is not None:
        A_values = [schedule.A(r.k) for r in trace.records]
    else:
        raise ValueError("need a schedule when the trace does not store A_k")
    if len(A_values) != len(zs) or len(zs) != len(trace.records):
        raise ValueError("trace aux sequences are inconsistent with its records")
    values = np.array(
        [
            A * (rec.f_value - f_star) + dgf.bregman(x_star, z)
            for A, rec, z in zip(A_values, trace.records, zs)
        ],
        dtype=float,
    )
    if len(values) == 0:
        return LyapunovReport(values, True, 0.0)
    slack = LYAPUNOV_SLACK * (1.0 + abs(float(values[0])))
    increases = np.diff(values)
    max_increase = float(increases.max(initial=0.0))
    return LyapunovReport(values, bool(max_increase <= slack), max_increase)
