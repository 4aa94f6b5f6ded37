"""Inner-product geometry, distance-generating functions, mirror steps.

A Geometry wraps a symmetric positive definite operator B and induces
the primal norm ||v|| = sqrt(<v, Bv>) and dual norm ||s||_* =
sqrt(<s, B^-1 s>). Distance-generating functions (quadratic and
power-of-norm) provide Bregman divergences and closed-form mirror-map
inversion; every solver in the library measures length through these.
"""

import numpy as np

from .errors import ConfigError


class Geometry:
    """SPD operator B with a cached Cholesky factor for applying B^-1.

    B is stored dense; at the dimensions this library targets (<= a few
    hundred) a dense factorization is cheap and, more importantly,
    deterministic.
    """

    def __init__(self, b_matrix):
        b = np.asarray(b_matrix, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"B must be square, got shape {b.shape}")
        scale = np.abs(b).max() or 1.0
        if np.abs(b - b.T).max() > 1e-12 * (1.0 + scale):
            raise ValueError("B must be symmetric")
        self.b_matrix = 0.5 * (b + b.T)
        try:
            self._chol = np.linalg.cholesky(self.b_matrix)
        except np.linalg.LinAlgError as exc:
            raise ValueError("B must be positive definite") from exc
        self.dim = b.shape[0]
        self._is_identity = bool(np.array_equal(self.b_matrix, np.eye(self.dim)))

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    def apply(self, v):
        """B v."""
        if self._is_identity:
            return np.asarray(v, dtype=float).copy()
        return self.b_matrix @ np.asarray(v, dtype=float)

    def solve(self, g):
        """B^-1 g via the cached Cholesky factor."""
        g = np.asarray(g, dtype=float)
        if g.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {g.shape}")
        if self._is_identity:
            return g.copy()
        y = np.linalg.solve(self._chol, g)
        return np.linalg.solve(self._chol.T, y)

    def norm(self, v):
        """Primal norm sqrt(<v, Bv>)."""
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(max(float(v @ self.apply(v)), 0.0)))

    def dual_norm(self, g):
        """Dual norm sqrt(<g, B^-1 g>); exactly 0 on the zero vector."""
        g = np.asarray(g, dtype=float)
        if not np.any(g):
            return 0.0
        return float(np.sqrt(max(float(g @ self.solve(g)), 0.0)))


def dual_norm(geom, g):
    return geom.dual_norm(g)


class QuadraticDgf:
    """h(x) = (1/2) <x, Bx>; the Bregman divergence is (1/2)||x - y||^2.

    1-strongly convex and 1-smooth in the B-geometry, so the spectral
    bounds of its Hessian are modulus_lower = modulus_upper = 1.
    """

    kind = "quadratic"

    def __init__(self, geometry):
        self.geometry = geometry
        self.convexity_order = 2
        self.convexity_modulus = 1.0
        self.modulus_lower = 1.0
        self.modulus_upper = 1.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.geometry.apply(x))

    def gradient(self, z):
        return self.geometry.apply(z)

    def hessian(self, z):
        return self.geometry.b_matrix.copy()

    def bregman(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValueError("bregman: mismatched shapes")
        d = self.geometry.norm(x - y)
        return 0.5 * d * d

    def mirror_step(self, z, g, weight):
        if weight <= 0:
            raise ValueError("mirror_step weight must be positive")
        return np.asarray(z, dtype=float) - weight * self.geometry.solve(g)


class PowerDgf:
    """h(x) = (2^(p-2)/p) ||x - x0||^p, the order-p mirror regularizer.

    Its Bregman divergence dominates (1/p)||x - y||^p (1-uniform
    convexity of order p), which is the hypothesis the polynomial-rate
    acceleration schedule needs. The mirror map nabla h(z) =
    2^(p-2) ||z - x0||^(p-2) B (z - x0) inverts in closed form.
    """

    kind = "power"

    def __init__(self, geometry, p, center=None):
        if p < 2:
            raise ValueError("PowerDgf needs order p >= 2")
        self.geometry = geometry
        self.p = int(p)
        self.center = (
            np.zeros(geometry.dim) if center is None else np.asarray(center, dtype=float).copy()
        )
        self.coefficient = 2.0 ** (self.p - 2) / self.p
        self.convexity_order = self.p
        self.convexity_modulus = 1.0
        # nabla^2 h is unbounded above (and degenerate at the center for
        # p > 2), so no spectral window is available.
        self.modulus_lower = 1.0 if self.p == 2 else None
        self.modulus_upper = 1.0 if self.p == 2 else None

    def value(self, x):
        d = self.geometry.norm(np.asarray(x, dtype=float) - self.center)
        return self.coefficient * d**self.p

    def gradient(self, z):
        d = np.asarray(z, dtype=float) - self.center
        r = self.geometry.norm(d)
        if r == 0.0:
            return np.zeros_like(d)
        return 2.0 ** (self.p - 2) * r ** (self.p - 2) * self.geometry.apply(d)

    def hessian(self, z):
        d = np.asarray(z, dtype=float) - self.center
        r = self.geometry.norm(d)
        if r == 0.0:
            if self.p == 2:
                return self.geometry.b_matrix.copy()
            raise ValueError("PowerDgf hessian is degenerate at the center for p > 2")
        bd = self.geometry.apply(d)
        scale = 2.0 ** (self.p - 2)
        h = scale * r ** (self.p - 2) * self.geometry.b_matrix
        if self.p > 2:
            h = h + scale * (self.p - 2) * r ** (self.p - 4) * np.outer(bd, bd)
        return h

    def bregman(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValueError("bregman: mismatched shapes")
        d = self.value(x) - self.value(y) - float(self.gradient(y) @ (x - y))
        # Convexity makes the exact value nonnegative; clip the roundoff.
        return max(d, 0.0)

    def mirror_step(self, z, g, weight):
        """Solve nabla h(z') = nabla h(z) - weight*g exactly.

        With u the dual target, z' - x0 = t B^-1 u where the scalar t
        solves 2^(p-2) t^(p-1) ||u||_*^(p-2) = 1.
        """
        if weight <= 0:
            raise ValueError("mirror_step weight must be positive")
        u = self.gradient(z) - weight * np.asarray(g, dtype=float)
        dual = self.geometry.dual_norm(u)
        if dual == 0.0:
            return self.center.copy()
        t = (2.0 ** (self.p - 2) * dual ** (self.p - 2)) ** (-1.0 / (self.p - 1))
        return self.center + t * self.geometry.solve(u)


def bregman(h, x, y):
    return h.bregman(x, y)


def mirror_step(h, z, g, weight):
    return h.mirror_step(z, g, weight)


def make_dgf(kind, geometry, p=2, center=None):
    """Construct a distance-generating function from a config string."""
    if kind == "quadratic":
        return QuadraticDgf(geometry)
    if kind == "power":
        return PowerDgf(geometry, p, center)
    raise ConfigError(f"unknown dgf kind {kind!r}")
