"""Loss zoo with analytic derivatives of every order the solvers need.

All losses expose value, gradient, Hessian, and m-th directional
derivatives nabla^m f(x)(v)^m in closed form; finite differences exist
only as an independent oracle (fd_directional_derivative) and never sit
in a solve path. Known constants (smoothness ladder L_m, gradient-
domination modulus, minimizers) are attached where they are exact.
"""

import copy
import json
import math

import numpy as np

from .errors import CapabilityError
from .geometry import Geometry
from .rng import SplitMix64

LOSS_IDS = ("power_norm", "lp_regression", "logistic", "glm", "hamiltonian_quartic")


class Dataset:
    """Data for the regression-style losses.

    matrix rows are the per-sample vectors (w_i or a_i), targets the
    labels/right-hand sides. Regeneration from a seed is bit-identical
    because all entries come from the SplitMix64 stream.
    """

    def __init__(self, matrix, targets, weights=None, seed=None):
        self.matrix = np.asarray(matrix, dtype=float)
        self.targets = np.asarray(targets, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("dataset matrix must be 2-d")
        if self.targets.shape != (self.matrix.shape[0],):
            raise ValueError("dataset targets must have one entry per matrix row")
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        self.seed = seed

    @classmethod
    def gaussian(cls, seed, rows, cols):
        """The benchmark recipe: i.i.d. standard normal matrix, first
        half of the targets 0 and the rest 1."""
        rng = SplitMix64(seed)
        matrix = rng.normals((rows, cols))
        targets = np.zeros(rows)
        targets[rows // 2 :] = 1.0
        return cls(matrix, targets, seed=seed)

    def to_json(self):
        payload = {
            "seed": self.seed,
            "shape": list(self.matrix.shape),
            "matrix": self.matrix.tolist(),
            "targets": self.targets.tolist(),
        }
        if self.weights is not None:
            payload["weights"] = self.weights.tolist()
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        matrix = np.asarray(payload["matrix"], dtype=float)
        if list(matrix.shape) != list(payload["shape"]):
            raise ValueError("dataset shape field disagrees with matrix payload")
        return cls(matrix, payload["targets"], payload.get("weights"), payload.get("seed"))


class Objective:
    """Base evaluator with call counting.

    Subclasses implement _value/_gradient (and usually _directional and
    hessian). Public value()/gradient() bump the evaluation counters
    exactly once per call; everything else is counter-neutral.
    """

    max_order = 1

    def __init__(self, dim):
        self.dim = int(dim)
        self.value_evals = 0
        self.grad_evals = 0
        self.known_minimum = None
        self.known_minimizer = None
        self.smoothness_constants = None
        self.smoothness_order = None
        self.gradient_dominated = None  # (mu, p) when known
        self.geometry = None  # non-Euclidean losses carry their own B

    def value(self, x):
        self.value_evals += 1
        return self._value(np.asarray(x, dtype=float))

    def gradient(self, x):
        self.grad_evals += 1
        return self._gradient(np.asarray(x, dtype=float))

    def directional_derivative(self, x, m, v):
        """nabla^m f(x)(v)^m for 1 <= m <= max_order."""
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise ValueError(f"derivative order must be a positive integer, got {m!r}")
        if m > self.max_order:
            raise CapabilityError(
                f"{type(self).__name__} supplies derivatives up to order {self.max_order}, "
                f"order {m} requested"
            )
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if m == 1:
            return float(self._gradient(x) @ v)
        return self._directional(x, m, v)

    def hessian(self, x):
        raise CapabilityError(f"{type(self).__name__} does not supply a Hessian")

    def _directional(self, x, m, v):
        raise CapabilityError(f"{type(self).__name__} has no order-{m} derivative")

    def clone_with_fresh_counters(self):
        """Independent counter instance sharing the (immutable) data."""
        twin = copy.copy(self)
        twin.value_evals = 0
        twin.grad_evals = 0
        return twin


class PowerNormLoss(Objective):
    """f(x) = (1/p) ||x - c||_B^p.

    Gradient ||x-c||^(p-2) B(x-c); minimizer c with value 0; gradient
    dominated of order p with modulus (p-1)^(p-1), and the domination
    inequality is an identity: (p-1)/p ||grad f||_*^(p/(p-1)) = (p-1) f.
    The smoothness ladder L_m = (p-1)(p-2)...(p-m+1) is exact (radial
    computation, inner-product invariant).
    """

    max_order = 12

    def __init__(self, p, geometry, center=None):
        if p < 2:
            raise ValueError("power-norm loss needs p >= 2")
        super().__init__(geometry.dim)
        self.p = int(p)
        self.geometry = geometry
        self.center = (
            np.zeros(geometry.dim) if center is None else np.asarray(center, dtype=float).copy()
        )
        self.known_minimum = 0.0
        self.known_minimizer = self.center.copy()
        self.smoothness_order = self.p
        self.smoothness_constants = [
            float(math.prod(range(self.p - m + 1, self.p))) for m in range(1, self.p + 1)
        ]
        self.gradient_dominated = (float((self.p - 1) ** (self.p - 1)), self.p)

    def _value(self, x):
        return self.geometry.norm(x - self.center) ** self.p / self.p

    def _gradient(self, x):
        d = x - self.center
        r = self.geometry.norm(d)
        if r == 0.0:
            return np.zeros_like(d)
        return r ** (self.p - 2) * self.geometry.apply(d)

    def hessian(self, x):
        d = x - self.center
        r = self.geometry.norm(d)
        if r == 0.0:
            return self.geometry.b_matrix.copy() if self.p == 2 else np.zeros((self.dim, self.dim))
        bd = self.geometry.apply(d)
        h = r ** (self.p - 2) * self.geometry.b_matrix
        if self.p > 2:
            h = h + (self.p - 2) * r ** (self.p - 4) * np.outer(bd, bd)
        return h

    def _directional(self, x, m, v):
        # f(x+tv) = (1/p) q(t)^(p/2) with q quadratic; differentiate the
        # identity q F' = (p/2) q' F (Leibniz) to get a two-term recurrence.
        d = x - self.center
        a = float(d @ self.geometry.apply(d))
        beta = float(d @ self.geometry.apply(v))
        gamma = float(v @ self.geometry.apply(v))
        if a == 0.0:
            # f(c + tv) = (1/p)|t|^p ||v||^p: only the order-p derivative
            # survives at the center (one-sided limit for odd p).
            if m == self.p:
                return math.factorial(self.p - 1) * gamma ** (self.p / 2)
            return 0.0
        u = self.p / 2.0
        derivs = [a**u, u * a ** (u - 1.0) * 2.0 * beta]
        for n in range(2, m + 1):
            prev1 = derivs[n - 1]
            prev2 = derivs[n - 2]
            lead = 2.0 * beta * (u - (n - 1)) * prev1
            quad = 2.0 * gamma * (u * (n - 1) - (n - 1) * (n - 2) / 2.0) * prev2
            derivs.append((lead + quad) / a)
        return derivs[m] / self.p


class LpRegressionLoss(Objective):
    """f(x) = (1/p) sum_i |a_i^T x - b_i|^p for integer p >= 2."""

    def __init__(self, dataset, p):
        if p < 2:
            raise ValueError("lp regression needs p >= 2")
        super().__init__(dataset.matrix.shape[1])
        self.dataset = dataset
        self.p = int(p)
        self.max_order = self.p
        self.matrix = dataset.matrix
        self.offsets = dataset.targets
        solution, *_ = np.linalg.lstsq(self.matrix, self.offsets, rcond=None)
        if np.abs(self.matrix @ solution - self.offsets).max() <= 1e-10:
            self.known_minimum = 0.0
            self.known_minimizer = solution
        if self.offsets.shape[0] == self.dim and np.array_equal(
            self.matrix, np.eye(self.dim)
        ):
            # Identity design: the exact ladder of the l_p power norm.
            self.smoothness_order = self.p
            self.smoothness_constants = [
                float(math.prod(range(self.p - m + 1, self.p))) for m in range(1, self.p + 1)
            ]

    def _residual(self, x):
        return self.matrix @ x - self.offsets

    def _value(self, x):
        r = self._residual(x)
        return float(np.sum(np.abs(r) ** self.p)) / self.p

    def _gradient(self, x):
        r = self._residual(x)
        return self.matrix.T @ (np.sign(r) * np.abs(r) ** (self.p - 1))

    def hessian(self, x):
        r = self._residual(x)
        w = (self.p - 1) * np.abs(r) ** (self.p - 2)
        return self.matrix.T @ (w[:, None] * self.matrix)

    def _directional(self, x, m, v):
        r = self._residual(x)
        s = self.matrix @ v
        coeff = float(math.prod(range(self.p - m + 1, self.p)))  # (p-1)...(p-m+1)
        live = np.abs(r) > 0.0
        total = float(
            np.sum(
                np.sign(r[live]) ** m * np.abs(r[live]) ** (self.p - m) * s[live] ** m
            )
        )
        if m == self.p and self.p % 2 == 0:
            total += float(np.sum(s[~live] ** m))
        return coeff * total


def _poly_eval(coeffs, s):
    out = np.zeros_like(s)
    for c in reversed(coeffs):
        out = out * s + c
    return out


def _poly_max_abs(coeffs):
    """Exact maximum of |P(s)| over s in [0, 1].

    Checks the endpoints and every real critical point inside; the ladders
    here have tiny degree, so the companion-matrix roots are accurate to
    machine precision.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    deriv = np.array([j * coeffs[j] for j in range(1, len(coeffs))], dtype=float)
    candidates = [0.0, 1.0]
    if deriv.size and np.any(deriv != 0.0):
        for root in np.roots(deriv[::-1]):
            if abs(root.imag) < 1e-12 and -1e-12 <= root.real <= 1.0 + 1e-12:
                candidates.append(min(max(float(root.real), 0.0), 1.0))
    values = _poly_eval(coeffs, np.asarray(candidates))
    return float(np.max(np.abs(values)))


def _poly_chain_derivatives(first, inner, orders):
    """Derivative ladder for sigmoid-type compositions.

    Given d(outer)/dt = P_1(s) with s itself satisfying ds/dt =
    inner(s), returns polynomial coefficient arrays for P_1..P_orders
    where P_{m+1} = P_m'(s) * inner(s). Coefficients are exact floats.
    """
    ladder = [np.asarray(first, dtype=float)]
    inner = np.asarray(inner, dtype=float)
    for _ in range(orders - 1):
        prev = ladder[-1]
        deriv = np.array([j * prev[j] for j in range(1, len(prev))], dtype=float)
        ladder.append(np.convolve(deriv, inner))
    return ladder


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class LogisticLoss(Objective):
    """f(x) = sum_i log(1 + exp(-y_i w_i^T x)).

    With s_i = sigma(-u_i) the per-term derivative ladder in u is a
    polynomial in s_i (s' = -s(1-s)), which gives every directional
    derivative in closed form. Zero-target rows contribute the constant
    log 2. For a single active term the order-infinity smoothness
    ladder L_m = (m-1)! ||w||^(m-1) is recorded; with several terms the
    summed bound max|P_m| sum_i ||w_i||^m applies instead, where P_m is
    the m-th derivative polynomial of log(1 + e^-u) in s.
    """

    max_order = 6
    # d/du log(1+e^{-u}) = -s; ds/du = s^2 - s.
    _LADDER = _poly_chain_derivatives([0.0, -1.0], [0.0, -1.0, 1.0], max_order)

    def __init__(self, dataset):
        super().__init__(dataset.matrix.shape[1])
        self.dataset = dataset
        self.rows = dataset.targets[:, None] * dataset.matrix
        active = self.rows[np.any(self.rows != 0.0, axis=1)]
        n_const = self.rows.shape[0] - active.shape[0]  # each contributes log 2
        if active.shape[0] == 0:
            self.known_minimum = n_const * math.log(2.0)
            self.known_minimizer = np.zeros(self.dim)
        elif np.linalg.matrix_rank(active) == active.shape[0]:
            # A separating direction exists, so the active part decays to 0.
            self.known_minimum = n_const * math.log(2.0)
        if active.shape[0] == 1:
            w = float(np.linalg.norm(active[0]))
            self.smoothness_order = math.inf
            self.smoothness_constants = [
                math.factorial(m - 1) * w ** (m - 1) for m in range(1, self.max_order + 1)
            ]
        elif active.shape[0] > 1:
            norms = np.linalg.norm(active, axis=1)
            self.smoothness_order = math.inf
            self.smoothness_constants = [
                _poly_max_abs(self._LADDER[m - 1]) * float(np.sum(norms**m))
                for m in range(1, self.max_order + 1)
            ]

    def _margins(self, x):
        return self.rows @ x

    def _value(self, x):
        return float(np.sum(np.logaddexp(0.0, -self._margins(x))))

    def _gradient(self, x):
        s = _sigmoid(-self._margins(x))
        return -(self.rows.T @ s)

    def hessian(self, x):
        s = _sigmoid(-self._margins(x))
        return self.rows.T @ ((s * (1.0 - s))[:, None] * self.rows)

    def _directional(self, x, m, v):
        s = _sigmoid(-self._margins(x))
        d = self.rows @ v
        return float(np.sum(_poly_eval(self._LADDER[m - 1], s) * d**m))


class GlmLoss(Objective):
    """f(x) = sum_i (1/2)(y_i - sigma(w_i^T x))^2 with y_i in {0, 1}.

    Written through b_i = 1 - 2 y_i as (1/2) sigma(b_i w_i^T x)^2, so
    one polynomial ladder in phi = sigma(z) (phi' = phi - phi^2) covers
    both labels. Strongly smooth of order 3; the single-term constants
    L_2 = 2||w||^(3/2), L_3 = (sqrt(3)/24 + 1/2)||w||^3 are recorded in
    operator-norm form.
    """

    max_order = 6
    # d/dz (1/2) phi^2 = phi^2 - phi^3; dphi/dz = phi - phi^2.
    _LADDER = _poly_chain_derivatives([0.0, 0.0, 1.0, -1.0], [0.0, 1.0, -1.0], max_order)

    def __init__(self, dataset):
        targets = dataset.targets
        if not np.all(np.isin(targets, (0.0, 1.0))):
            raise ValueError("glm targets must be 0 or 1")
        super().__init__(dataset.matrix.shape[1])
        self.dataset = dataset
        self.signs = 1.0 - 2.0 * targets
        self.matrix = dataset.matrix
        if self.matrix.shape[0] == 1 and np.any(self.matrix[0]):
            w = float(np.linalg.norm(self.matrix[0]))
            self.known_minimum = 0.0
            self.smoothness_order = 3
            self.smoothness_constants = [
                1.0,
                2.0 * w**1.5,
                (math.sqrt(3.0) / 24.0 + 0.5) * w**3,
            ]

    def _folded(self, x):
        return self.signs * (self.matrix @ x)

    def _value(self, x):
        phi = _sigmoid(self._folded(x))
        return 0.5 * float(np.sum(phi * phi))

    def _gradient(self, x):
        phi = _sigmoid(self._folded(x))
        coeff = phi * phi * (1.0 - phi) * self.signs
        return self.matrix.T @ coeff

    def hessian(self, x):
        phi = _sigmoid(self._folded(x))
        coeff = _poly_eval(self._LADDER[1], phi)  # second-derivative polynomial
        return self.matrix.T @ (coeff[:, None] * self.matrix)

    def _directional(self, x, m, v):
        phi = _sigmoid(self._folded(x))
        d = self.signs * (self.matrix @ v)
        return float(np.sum(_poly_eval(self._LADDER[m - 1], phi) * d**m))


class HamiltonianQuarticLoss(Objective):
    """f(x1, x2) = (x1 + x2)^4 + (1/16)(x1 - x2)^4.

    Two uncoupled quartic wells in the rotated coordinates s = x1 + x2,
    d = x1 - x2; every directional derivative is a finite binomial.
    """

    max_order = 4

    def __init__(self):
        super().__init__(2)
        self.known_minimum = 0.0
        self.known_minimizer = np.zeros(2)
        self._mu = None

    def _split(self, x):
        return x[0] + x[1], x[0] - x[1]

    def _value(self, x):
        s, d = self._split(x)
        return s**4 + d**4 / 16.0

    def _gradient(self, x):
        s, d = self._split(x)
        gs = 4.0 * s**3
        gd = d**3 / 4.0
        return np.array([gs + gd, gs - gd])

    def hessian(self, x):
        s, d = self._split(x)
        hs = 12.0 * s * s
        hd = 0.75 * d * d
        return np.array([[hs + hd, hs - hd], [hs - hd, hs + hd]])

    def _directional(self, x, m, v):
        s, d = self._split(x)
        sv, dv = self._split(v)
        falling = math.factorial(4) / math.factorial(4 - m)
        return falling * (s ** (4 - m) * sv**m + d ** (4 - m) * dv**m / 16.0)

    @property
    def gradient_dominated(self):
        """(mu, 4) with mu found by minimizing the scale-invariant ratio
        (3/4)||grad f||^(4/3) / f over directions (golden-section refined)."""
        if self._mu is None:
            def ratio(theta):
                x = np.array([math.cos(theta), math.sin(theta)])
                return 0.75 * np.linalg.norm(self._gradient(x)) ** (4.0 / 3.0) / self._value(x)

            thetas = np.linspace(0.0, math.pi, 4097)
            values = [ratio(t) for t in thetas]
            i = int(np.argmin(values))
            lo, hi = thetas[max(i - 1, 0)], thetas[min(i + 1, len(thetas) - 1)]
            invphi = (math.sqrt(5.0) - 1.0) / 2.0
            a, b = lo, hi
            c, d = b - invphi * (b - a), a + invphi * (b - a)
            for _ in range(80):
                if ratio(c) < ratio(d):
                    b, d = d, c
                    c = b - invphi * (b - a)
                else:
                    a, c = c, d
                    d = a + invphi * (b - a)
            best = min(values[i], ratio(0.5 * (a + b)))
            self._mu = (best * (1.0 - 1e-9)) ** 3
        return (self._mu, 4)

    @gradient_dominated.setter
    def gradient_dominated(self, value):
        self._mu = None if value is None else float(value[0])


def make_power_norm_loss(p, geom, center=None):
    return PowerNormLoss(p, geom, center)


def make_lp_regression_loss(dataset, p):
    return LpRegressionLoss(dataset, p)


def make_logistic_loss(dataset):
    return LogisticLoss(dataset)


def make_glm_loss(dataset):
    return GlmLoss(dataset)


def make_hamiltonian_quartic_loss():
    return HamiltonianQuarticLoss()


_FD_STEPS = {1: 1e-5, 2: 5e-4, 3: 5e-3, 4: 2e-2}


def fd_directional_derivative(obj, x, m, v):
    """Central-difference oracle for nabla^m f(x)(v)^m, m in 1..4.

    Error is O(h^2) with the per-order steps chosen so truncation and
    roundoff balance for O(1)-scaled losses. Oracle only; solvers use
    the analytic derivatives.
    """
    if m not in _FD_STEPS:
        raise ValueError(f"finite differences support orders 1..4, got {m}")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    h = _FD_STEPS[m]
    f = lambda t: obj.value(x + t * v)
    if m == 1:
        return (f(h) - f(-h)) / (2.0 * h)
    if m == 2:
        return (f(h) - 2.0 * f(0.0) + f(-h)) / h**2
    if m == 3:
        return (f(2 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2 * h)) / (2.0 * h**3)
    return (f(2 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2 * h)) / h**4
