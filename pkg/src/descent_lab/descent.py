"""Plain descent-step kernels, the trace-producing driver, and rate bounds.

A method of order p with progress constant delta promises, per iteration,

    f(x_{k+1}) - f(x_k) <= -delta * ||grad f||_*^{p/(p-1)}

with the gradient read at the current iterate for explicit methods and at
the landing point for proximal ones. This module provides the step kernels
that earn such a guarantee (gradient descent, rescaled gradient descent,
mirror and natural-gradient steps, two proximal variants, a regularized
Taylor step), the loop that runs them while recording a :class:`Trace`,
the certifier that checks the inequality on a finished trace, and the
closed-form worst-case rate bounds the guarantee implies.

Order p = ``math.inf`` is a first-class value: every exponent that involves
p is evaluated through its analytic limit instead of a large float.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import CapabilityError, ConfigError, SolverError
from .geometry import Geometry
from .subsolve import damped_newton

Vector = np.ndarray

GRAD_FLOOR = 1e-13
CERT_SLACK = 1e-9

METHOD_IDS = (
    "gd",
    "rgd",
    "mirror_descent",
    "natural_gd",
    "natural_prox",
    "bregman_prox",
    "tensor",
)

_DGF_METHODS = frozenset(
    {"mirror_descent", "natural_gd", "natural_prox", "bregman_prox"}
)
_ORDERED_METHODS = frozenset({"rgd", "natural_prox", "tensor"})
_NEXT_MODE_METHODS = frozenset({"natural_prox", "bregman_prox", "tensor"})

TRACE_CSV_COLUMNS = (
    "k",
    "f_gap",
    "grad_dual_norm",
    "grad_evals",
    "step_norm",
    "cert_descent_margin",
)


def _check_order(p) -> None:
    if math.isinf(p):
        return
    if p < 2 or p != int(p):
        raise ConfigError(f"order must be an integer >= 2 or infinity, got {p!r}")


def dual_exponent(p) -> float:
    """p/(p-1), read as its limit 1 when p is infinite.

    Accepts any real order above 1: per-step guarantees of the regularized
    Taylor step live at the fractional order p - 1 + nu.
    """
    if math.isinf(p):
        return 1.0
    if not p > 1:
        raise ConfigError(f"order must exceed 1, got {p!r}")
    return p / (p - 1.0)


def rgd_epsilon(eta: float, p) -> float:
    """The rescaled step multiplier eta^{1/(p-1)}, which tends to eta itself
    as p grows (the normalized-gradient method keeps the full step size)."""
    _check_order(p)
    if math.isinf(p):
        return float(eta)
    return float(eta) ** (1.0 / (p - 1.0))


def rgd_step_size(constants, p, series_sum: float | None = None) -> float:
    """Largest admissible RGD step size for the given smoothness constants.

    ``constants`` lists L_1 through (at least) L_p; the admissible multiplier
    is eta^{1/(p-1)} <= min{1, 1/(2 sum_{m=2}^p L_m/m!)}. For infinite order
    the series has no finite truncation, so the caller must pass its value
    via ``series_sum``.
    """
    _check_order(p)
    if series_sum is None:
        if math.isinf(p):
            raise ConfigError("order infinity needs an explicit series_sum")
        if constants is None or len(constants) < p:
            raise ConfigError(f"need smoothness constants through order {p}")
        series_sum = sum(
            constants[m - 1] / math.factorial(m) for m in range(2, int(p) + 1)
        )
    series_sum = float(series_sum)
    epsilon = 1.0 if series_sum <= 0 else min(1.0, 1.0 / (2.0 * series_sum))
    if math.isinf(p):
        return epsilon
    return epsilon ** (p - 1.0)


@dataclass
class DescentConfig:
    """Everything a descent run needs besides the objective itself.

    ``delta`` is derived from the method's guarantee, not stored: it is None
    when it depends on Hessian bounds the chosen dgf does not carry.
    """

    method: str
    eta: float
    geometry: Geometry
    p: float = 2
    nu: float = 1.0
    dgf: Any = None
    descent_mode: str | None = None
    grad_floor: float = GRAD_FLOOR

    def __post_init__(self) -> None:
        if self.method not in METHOD_IDS:
            raise ConfigError(
                f"unknown method {self.method!r}; expected one of {METHOD_IDS}"
            )
        if not self.eta > 0:
            raise ConfigError(f"step size must be positive, got {self.eta!r}")
        _check_order(self.p)
        if self.method not in _ORDERED_METHODS and self.p != 2:
            raise ConfigError(f"{self.method} is a second-order method; leave p at 2")
        if self.method in ("natural_prox", "tensor") and math.isinf(self.p):
            raise ConfigError(f"{self.method} requires a finite order")
        if self.method == "tensor" and not 0.0 < self.nu <= 1.0:
            raise ConfigError(f"nu must lie in (0, 1], got {self.nu!r}")
        if self.method in _DGF_METHODS and self.dgf is None:
            raise ConfigError(f"{self.method} needs a distance-generating function")
        if self.descent_mode is None:
            self.descent_mode = (
                "next" if self.method in _NEXT_MODE_METHODS else "current"
            )
        if self.descent_mode not in ("current", "next"):
            raise ConfigError(f"descent_mode must be 'current' or 'next', got {self.descent_mode!r}")
        if self.grad_floor < 0:
            raise ConfigError("grad_floor must be nonnegative")

    @property
    def order(self) -> float:
        """The order of the per-step guarantee (p-1+nu for the Taylor step)."""
        if self.method == "tensor":
            return self.p - 1.0 + self.nu
        return self.p

    @property
    def delta(self) -> float | None:
        m = self.method
        if m == "gd":
            return self.eta / 2.0
        if m == "rgd":
            return rgd_epsilon(self.eta, self.p) / 2.0
        if m == "natural_prox":
            lower = self.dgf.modulus_lower
            if lower is None:
                return None
            return (
                lower ** dual_exponent(self.p)
                * self.eta ** (1.0 / (self.p - 1.0))
                / self.p
            )
        if m in ("mirror_descent", "natural_gd"):
            upper = self.dgf.modulus_upper
            if upper is None:
                return None
            return self.eta / (2.0 * upper)
        if m == "bregman_prox":
            lower = self.dgf.modulus_lower
            upper = self.dgf.modulus_upper
            if lower is None or upper is None:
                return None
            return lower * self.eta / (2.0 * upper**2)
        pt = self.order
        return self.eta ** (1.0 / (pt - 1.0)) / 2.0 ** ((2.0 * pt - 3.0) / (pt - 1.0))

    def snapshot(self) -> dict[str, Any]:
        """JSON-safe summary stored on traces."""
        return {
            "method": self.method,
            "eta": self.eta,
            "p": "inf" if math.isinf(self.p) else self.p,
            "nu": self.nu,
            "descent_mode": self.descent_mode,
            "grad_floor": self.grad_floor,
            "delta": self.delta,
            "dim": self.geometry.dim,
        }


@dataclass
class TraceRecord:
    k: int
    x: Vector
    f_value: float
    f_gap: float
    grad_dual_norm: float
    grad_evals: int
    step_norm: float
    certificates: dict[str, float] = field(default_factory=dict)


@dataclass
class Trace:
    """Iteration history of a single run.

    ``f_gap`` entries are relative to the objective's known minimum and NaN
    when no minimum is known (the harness substitutes its own reference in
    that case). ``aux`` carries method extras such as accelerated-state
    sequences.
    """

    method_tag: str
    config: dict[str, Any] = field(default_factory=dict)
    records: list[TraceRecord] = field(default_factory=list)
    f_reference: float | None = None
    aux: dict[str, Any] = field(default_factory=dict)

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    def gaps(self) -> np.ndarray:
        return np.array([r.f_gap for r in self.records], dtype=float)

    def values(self) -> np.ndarray:
        return np.array([r.f_value for r in self.records], dtype=float)

    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_dual_norm for r in self.records], dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(TRACE_CSV_COLUMNS)
            for r in self.records:
                writer.writerow(
                    [
                        r.k,
                        repr(float(r.f_gap)),
                        repr(float(r.grad_dual_norm)),
                        r.grad_evals,
                        repr(float(r.step_norm)),
                        repr(float(r.certificates.get("descent_margin", math.nan))),
                    ]
                )


def _resolve_gradient(obj, x: Vector, gradient) -> Vector:
    if gradient is None:
        return np.asarray(obj.gradient(x), dtype=float)
    return np.asarray(gradient, dtype=float)


def gd_step(obj, geom: Geometry, x: Vector, eta: float, *, gradient=None) -> Vector:
    """One gradient step x - eta * B^{-1} grad f(x)."""
    if not eta > 0:
        raise ConfigError("step size must be positive")
    x = np.asarray(x, dtype=float)
    g = _resolve_gradient(obj, x, gradient)
    return x - eta * geom.solve(g)


def rgd_step(
    obj,
    geom: Geometry,
    x: Vector,
    eta: float,
    p,
    *,
    grad_floor: float = GRAD_FLOOR,
    gradient=None,
) -> Vector:
    """Rescaled gradient step: the update direction is B^{-1} grad f and the
    length is eta^{1/(p-1)} ||grad f||_*^{1/(p-1)}, so flat regions get long
    steps. Below ``grad_floor`` the point is returned unchanged; at p = 2
    this is exactly :func:`gd_step`, and at infinite order it moves a fixed
    distance eta along the normalized dual direction."""
    if not eta > 0:
        raise ConfigError("step size must be positive")
    _check_order(p)
    x = np.asarray(x, dtype=float)
    g = _resolve_gradient(obj, x, gradient)
    gn = geom.dual_norm(g)
    if gn <= grad_floor:
        return x.copy()
    epsilon = rgd_epsilon(eta, p)
    scale = gn if math.isinf(p) else gn ** ((p - 2.0) / (p - 1.0))
    return x - (epsilon / scale) * geom.solve(g)


def mirror_descent_step(obj, dgf, x: Vector, eta: float, *, gradient=None) -> Vector:
    """Mirror step: push grad h(x) by -eta * grad f(x) and map back."""
    if not eta > 0:
        raise ConfigError("step size must be positive")
    x = np.asarray(x, dtype=float)
    g = _resolve_gradient(obj, x, gradient)
    return dgf.mirror_step(x, g, eta)


def natural_gd_step(obj, dgf, x: Vector, eta: float, *, gradient=None) -> Vector:
    """Gradient step preconditioned by the local metric hess h(x)."""
    if not eta > 0:
        raise ConfigError("step size must be positive")
    x = np.asarray(x, dtype=float)
    g = _resolve_gradient(obj, x, gradient)
    metric = dgf.hessian(x)
    return x - eta * np.linalg.solve(metric, g)


def natural_prox_step(
    obj, dgf, x: Vector, eta: float, p, *, gradient=None
) -> Vector:
    """Proximal step in the local metric at x.

    Minimizes f(z) + (1/(p eta)) ||z - x||_x^p, where ||v||_x is the norm
    induced by hess h(x), by damped Newton to a gradient residual of
    1e-10 * (1 + ||grad f(x)||_*). The landing point z satisfies
    ||z - x||_x = eta^{1/(p-1)} ||grad f(z)||_{x,*}^{1/(p-1)}.
    """
    if not eta > 0:
        raise ConfigError("step size must be positive")
    _check_order(p)
    if math.isinf(p):
        raise ConfigError("the proximal subproblem needs a finite order")
    x = np.asarray(x, dtype=float)
    geom = dgf.geometry
    metric = dgf.hessian(x)
    g0 = _resolve_gradient(obj, x, gradient)
    tol = 1e-10 * (1.0 + geom.dual_norm(g0))
    inv_eta = 1.0 / eta
    half_pm2 = (p - 2.0) / 2.0

    def value(z: Vector) -> float:
        d = z - x
        q = float(d @ (metric @ d))
        return float(obj.value(z)) + inv_eta * q ** (p / 2.0) / p

    def grad(z: Vector) -> Vector:
        d = z - x
        q = float(d @ (metric @ d))
        return np.asarray(obj.gradient(z), dtype=float) + inv_eta * q**half_pm2 * (
            metric @ d
        )

    def hess(z: Vector) -> np.ndarray:
        d = z - x
        q = float(d @ (metric @ d))
        base = np.asarray(obj.hessian(z), dtype=float)
        if q == 0.0:
            if p == 2:
                return base + inv_eta * metric
            return base
        md = metric @ d
        return base + inv_eta * (
            q**half_pm2 * metric + (p - 2.0) * q ** ((p - 4.0) / 2.0) * np.outer(md, md)
        )

    return damped_newton(value, grad, hess, x, tol, norm=geom.dual_norm)


def bregman_prox_step(obj, dgf, x: Vector, eta: float, *, gradient=None) -> Vector:
    """Proximal step under the Bregman divergence of h.

    Minimizes f(z) + (1/eta) D_h(z, x); at the landing point the first-order
    condition reads eta * grad f(z) = grad h(x) - grad h(z).
    """
    if not eta > 0:
        raise ConfigError("step size must be positive")
    x = np.asarray(x, dtype=float)
    geom = dgf.geometry
    g0 = _resolve_gradient(obj, x, gradient)
    tol = 1e-10 * (1.0 + geom.dual_norm(g0))
    inv_eta = 1.0 / eta
    grad_h_x = dgf.gradient(x)

    def value(z: Vector) -> float:
        return float(obj.value(z)) + inv_eta * dgf.bregman(z, x)

    def grad(z: Vector) -> Vector:
        return np.asarray(obj.gradient(z), dtype=float) + inv_eta * (
            dgf.gradient(z) - grad_h_x
        )

    def hess(z: Vector) -> np.ndarray:
        return np.asarray(obj.hessian(z), dtype=float) + inv_eta * dgf.hessian(z)

    return damped_newton(value, grad, hess, x, tol, norm=geom.dual_norm)


def tensor_step(
    obj, geom: Geometry, x: Vector, eta: float, p, nu: float = 1.0, *, gradient=None
) -> Vector:
    """Minimize the degree-(p-1) Taylor model of f at x plus the regularizer
    (1/(pt eta)) ||z - x||^{pt} with pt = p - 1 + nu.

    Only p = 2 (linear model, solved in closed form) and p = 3 (quadratic
    model, damped Newton from z = x) are representable with dense gradients
    and Hessians; higher orders would need explicit derivative tensors.
    """
    if not eta > 0:
        raise ConfigError("step size must be positive")
    if not 0.0 < nu <= 1.0:
        raise ConfigError(f"nu must lie in (0, 1], got {nu!r}")
    _check_order(p)
    if math.isinf(p):
        raise ConfigError("the Taylor model needs a finite order")
    if p not in (2, 3):
        raise CapabilityError(
            "regularized Taylor steps are limited to orders 2 and 3; "
            f"order {p} needs derivative tensors beyond the Hessian"
        )
    x = np.asarray(x, dtype=float)
    g = _resolve_gradient(obj, x, gradient)
    pt = p - 1.0 + nu
    inv_eta = 1.0 / eta

    if p == 2:
        # Linear model: the minimizer lies along -B^{-1} g at the radius r
        # solving r^{pt-1} = eta ||g||_*, with zero stationarity residual.
        gn = geom.dual_norm(g)
        if gn == 0.0:
            return x.copy()
        radius = (eta * gn) ** (1.0 / (pt - 1.0))
        return x - (radius / gn) * geom.solve(g)

    hess_x = np.asarray(obj.hessian(x), dtype=float)
    d = _regularized_quadratic_displacement(geom, g, hess_x, eta, pt)
    r = geom.norm(d)
    residual = g + hess_x @ d
    if r > 0.0:
        residual = residual + inv_eta * r ** (pt - 2.0) * geom.apply(d)
    if geom.dual_norm(residual) > 1e-10 * (1.0 + geom.dual_norm(g)):
        raise SubsolverError(
            "Taylor-step stationarity residual exceeds tolerance",
            residual=geom.dual_norm(residual),
        )
    return x + d


def _regularized_quadratic_displacement(
    geom: Geometry, g: Vector, hess: np.ndarray, eta: float, pt: float
) -> Vector:
    """Global minimizer of <g,d> + <d,Hd>/2 + ||d||_B^pt/(pt*eta).

    Stationarity reads (H + sigma B) d = -g with sigma = ||d||_B^{pt-2}/eta,
    so after whitening by the Cholesky factor of B this is the trust-region
    secular equation: find sigma >= max(0, -lambda_min) where the solution
    norm matches the radius (eta*sigma)^{1/(pt-2)}. That profile is strictly
    decreasing in sigma, so bisection converges globally; the hard case
    (gradient orthogonal to the bottom eigenspace of an indefinite Hessian)
    pads the solution with a bottom eigenvector.
    """
    g = np.asarray(g, dtype=float)
    if float(np.linalg.norm(g)) == 0.0:
        return np.zeros_like(g)
    low = np.linalg.cholesky(geom.b_matrix)
    gt = np.linalg.solve(low, g)
    ht = np.linalg.solve(low, np.linalg.solve(low, hess).T).T
    ht = 0.5 * (ht + ht.T)
    w, q = np.linalg.eigh(ht)
    c = q.T @ gt
    inv_exp = 1.0 / (pt - 2.0)

    def radius(sigma: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.power(eta * sigma, inv_exp))

    def solution_norm(sigma: float) -> float:
        # A zero component over a zero eigengap contributes nothing.
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            terms = np.nan_to_num(c / (w + sigma), nan=0.0, posinf=np.inf, neginf=-np.inf)
        return float(np.sqrt(np.sum(np.square(terms))))

    floor = max(0.0, -float(w[0]))
    if floor > 0.0:
        bottom = np.isclose(w, w[0], rtol=1e-12, atol=0.0)
        scale = max(1.0, float(np.linalg.norm(c)))
        if np.all(np.abs(c[bottom]) <= 1e-14 * scale):
            rest = ~bottom
            u = np.zeros_like(c)
            u[rest] = -c[rest] / (w[rest] + floor)
            r_floor = radius(floor)
            norm_rest = float(np.linalg.norm(u))
            if norm_rest <= r_floor:
                pad = math.sqrt(max(r_floor**2 - norm_rest**2, 0.0))
                return np.linalg.solve(low.T, q @ u + pad * q[:, 0])

    lo = floor
    if solution_norm(lo) - radius(lo) <= 0.0:
        sigma = lo
    else:
        hi = max(2.0 * lo, 1.0)
        for _ in range(300):
            if solution_norm(hi) - radius(hi) < 0.0:
                break
            hi *= 2.0
        else:
            raise SubsolverError("secular equation has no finite bracket")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if solution_norm(mid) - radius(mid) >= 0.0:
                lo = mid
            else:
                hi = mid
        sigma = 0.5 * (lo + hi)
    if sigma == 0.0:
        u = np.zeros_like(c)
    else:
        u = -c / (w + sigma)
    return np.linalg.solve(low.T, q @ u)


def tensor_model_gradient(
    obj, geom: Geometry, x: Vector, y: Vector, eta: float, p, nu: float = 1.0
) -> Vector:
    """Gradient of the regularized Taylor model at y (zero at an exact step).

    Its norm obeys ||model grad at the unregularized part|| =
    (1/eta) ||y - x||^{pt-1} at stationary points, which the accelerated
    line search exploits.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = np.asarray(obj.gradient(x), dtype=float)
    pt = p - 1.0 + nu
    d = y - x
    r = geom.norm(d)
    taylor = g if p == 2 else g + np.asarray(obj.hessian(x), dtype=float) @ d
    if r == 0.0:
        return taylor
    return taylor + (1.0 / eta) * r ** (pt - 2.0) * geom.apply(d)


def _apply_step(config: DescentConfig, obj, x: Vector, gradient: Vector) -> Vector:
    m = config.method
    if m == "gd":
        return gd_step(obj, config.geometry, x, config.eta, gradient=gradient)
    if m == "rgd":
        return rgd_step(
            obj,
            config.geometry,
            x,
            config.eta,
            config.p,
            grad_floor=config.grad_floor,
            gradient=gradient,
        )
    if m == "mirror_descent":
        return mirror_descent_step(obj, config.dgf, x, config.eta, gradient=gradient)
    if m == "natural_gd":
        return natural_gd_step(obj, config.dgf, x, config.eta, gradient=gradient)
    if m == "natural_prox":
        return natural_prox_step(
            obj, config.dgf, x, config.eta, config.p, gradient=gradient
        )
    if m == "bregman_prox":
        return bregman_prox_step(obj, config.dgf, x, config.eta, gradient=gradient)
    return tensor_step(
        obj, config.geometry, x, config.eta, config.p, config.nu, gradient=gradient
    )


def _record(
    k: int,
    x: Vector,
    f_value: float,
    reference: float | None,
    grad_dual_norm: float,
    grad_evals: int,
    step_norm: float,
) -> TraceRecord:
    gap = f_value - reference if reference is not None else math.nan
    return TraceRecord(
        k=k,
        x=x.copy(),
        f_value=f_value,
        f_gap=gap,
        grad_dual_norm=grad_dual_norm,
        grad_evals=grad_evals,
        step_norm=step_norm,
    )


def run_descent(config: DescentConfig, obj, x0, K: int) -> Trace:
    """Apply the configured step K times, recording one row per iterate.

    Stops early once the gradient dual norm falls to ``grad_floor``. The
    gradient at each visited point is evaluated once and shared between the
    trace row and the step that leaves it; the terminal row has a NaN
    gradient norm unless the configured guarantee reads the gradient at the
    landing point, in which case one extra evaluation fills it in.
    """
    if K < 0:
        raise ConfigError("iteration count must be nonnegative")
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (obj.dim,):
        raise ConfigError(f"start point has shape {x.shape}, objective has dim {obj.dim}")
    geom = config.geometry
    reference = obj.known_minimum
    trace = Trace(
        method_tag=config.method, config=config.snapshot(), f_reference=reference
    )
    f = float(obj.value(x))
    if K == 0:
        trace.records.append(
            _record(0, x, f, reference, math.nan, obj.grad_evals, math.nan)
        )
        return trace
    g = np.asarray(obj.gradient(x), dtype=float)
    gn = geom.dual_norm(g)
    trace.records.append(_record(0, x, f, reference, gn, obj.grad_evals, math.nan))
    for k in range(1, K + 1):
        if gn <= config.grad_floor:
            break
        try:
            x_next = _apply_step(config, obj, x, g)
        except SolverError as err:
            raise SolverError(
                f"{config.method} step at iteration {k - 1} failed: {err}"
            ) from err
        step_norm = geom.norm(x_next - x)
        f_next = float(obj.value(x_next))
        x, f = x_next, f_next
        if k < K or config.descent_mode == "next":
            g = np.asarray(obj.gradient(x), dtype=float)
            gn = geom.dual_norm(g)
        else:
            gn = math.nan
        trace.records.append(
            _record(k, x, f, reference, gn, obj.grad_evals, step_norm)
        )
    _attach_descent_margins(trace, config.delta, config.order, config.descent_mode)
    return trace


def _attach_descent_margins(
    trace: Trace, delta: float | None, order, mode: str
) -> None:
    if delta is None or not delta > 0:
        return
    q = dual_exponent(order)
    for r0, r1 in zip(trace.records, trace.records[1:]):
        gn = r0.grad_dual_norm if mode == "current" else r1.grad_dual_norm
        if math.isnan(gn):
            continue
        r1.certificates["descent_margin"] = (r1.f_value - r0.f_value) / delta + gn**q


@dataclass
class DescentCertificate:
    holds: bool
    worst_margin: float
    first_violation_k: int | None
    checked: int


def certify_delta_descent(
    trace: Trace, obj, delta: float, p, mode: str = "current"
) -> DescentCertificate:
    """Check the per-step descent inequality over a finished trace.

    For every consecutive pair the margin (f(x_{k+1}) - f(x_k))/delta +
    ||grad f||_*^{p/(p-1)} must stay below the additive slack
    1e-9 * (1 + |f(x_k)|); the gradient is read at the earlier point in
    ``mode='current'`` and at the later one in ``mode='next'``. ``obj`` is
    only consulted to fill in function values a record might not carry.
    """
    if delta is None or not delta > 0:
        raise ValueError("a positive delta is required")
    if mode not in ("current", "next"):
        raise ValueError(f"mode must be 'current' or 'next', got {mode!r}")
    if len(trace.records) < 2:
        raise ValueError("trace must contain at least two records")
    q = dual_exponent(p)
    worst = -math.inf
    first_violation: int | None = None
    checked = 0
    for r0, r1 in zip(trace.records, trace.records[1:]):
        gn = r0.grad_dual_norm if mode == "current" else r1.grad_dual_norm
        if gn is None or math.isnan(gn):
            where = r0.k if mode == "current" else r1.k
            raise ValueError(f"record {where} is missing its gradient norm")
        f0 = r0.f_value if r0.f_value is not None else float(obj.value(r0.x))
        f1 = r1.f_value if r1.f_value is not None else float(obj.value(r1.x))
        margin = (f1 - f0) / delta + gn**q
        worst = max(worst, margin)
        checked += 1
        if margin > CERT_SLACK * (1.0 + abs(f0)) and first_violation is None:
            first_violation = r1.k
    return DescentCertificate(
        holds=first_violation is None,
        worst_margin=worst,
        first_violation_k=first_violation,
        checked=checked,
    )


RATE_KINDS = ("grad_norm", "convex", "grad_dominated")


def rate_bound(
    kind: str,
    k: int,
    *,
    p,
    delta: float,
    E0: float,
    R: float | None = None,
    mu: float | None = None,
    mode: str = "current",
) -> float:
    """Closed-form worst-case bound after k iterations of a delta-descent run.

    ``grad_norm`` bounds the smallest gradient dual norm seen so far,
    ``convex`` bounds the objective gap given an iterate-radius bound R, and
    ``grad_dominated`` bounds the gap under gradient domination with modulus
    mu. E0 is the starting gap. ``mode`` selects where the per-step guarantee
    reads its gradient, which changes the constant of the convex bound.
    """
    if kind not in RATE_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}; expected one of {RATE_KINDS}")
    if mode not in ("current", "next"):
        raise ValueError(f"mode must be 'current' or 'next', got {mode!r}")
    if not math.isinf(p) and not p > 1:
        raise ValueError(f"order must exceed 1, got {p!r}")
    if not E0 > 0:
        raise ValueError("E0 must be positive")
    if not delta > 0:
        raise ValueError("delta must be positive")
    if k < 0:
        raise ValueError("k must be nonnegative")

    if kind == "grad_norm":
        if k < 1:
            raise ValueError("the gradient-norm bound starts at k = 1")
        exponent = 1.0 if math.isinf(p) else (p - 1.0) / p
        return (E0 / (delta * k)) ** exponent

    if kind == "convex":
        if R is None or not R > 0:
            raise ValueError("the convex bound needs a radius R > 0")
        if math.isinf(p):
            gamma = 1.0 if mode == "current" else math.exp(delta / R)
            return 2.0 * E0 * math.exp(-delta * k / (R * gamma))
        cp = (1.0 - 1.0 / p) ** p / (p - 1.0)
        if mode == "current":
            gamma = 1.0
        else:
            gamma = (
                1.0 + (E0 / cp) ** (1.0 / p) * delta ** ((p - 1.0) / p) / (R * p)
            ) ** (p - 1.0)
        inner = E0 ** (-1.0 / p) + (delta * k) ** ((p - 1.0) / p) / (
            R * gamma * cp ** (1.0 / p) * p
        )
        return 2.0 * inner**-p

    if mu is None or not mu > 0:
        raise ValueError("the gradient-dominated bound needs mu > 0")
    if math.isinf(p):
        return E0 * math.exp(-delta * k)
    return E0 * math.exp(-(p / (p - 1.0)) * mu ** (1.0 / (p - 1.0)) * delta * k)
