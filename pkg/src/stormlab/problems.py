"""Synthetic stochastic problems with exact gradients and replayable oracles.

Each oracle freezes its randomness inside a token at draw time. Evaluating
the same token at two different points is therefore deterministic, which is
what the recursive-momentum estimators need: the two-point gradient
difference under a shared sample has no fresh noise in it.

Four families are provided:

* noisy quadratic      - strongly convex, additive gradient noise
* nonconvex smooth     - separable log-barrier-like landscape, additive noise
* finite sum           - robust regression, sampling picks a component index
* compositional        - linear inner map under a quadratic outer map, with
                         noise on inner values, inner Jacobians, and outer
                         gradients

All gradients are exact (no autodiff); `grad_check` verifies them against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, Vector, as_vector, gaussian

#: documented domain for the compositional family: the outer map is only
#: locally Lipschitz, so its constant is reported over this ball.
COMPOSITIONAL_BALL_RADIUS = 1e3

_REL_ERR_FLOOR = 1e-12  # below this, grad_check falls back to absolute error


@dataclass(frozen=True)
class GradientToken:
    """Realized additive gradient noise, fixed at draw time."""

    noise: np.ndarray


@dataclass(frozen=True)
class ComponentToken:
    """Sampled component index for finite-sum oracles (0-based)."""

    index: int


@dataclass(frozen=True)
class InnerToken:
    """Realized noise for one inner-map sample: values and Jacobian entries."""

    value_noise: np.ndarray
    jac_noise: np.ndarray


@dataclass(frozen=True)
class OuterToken:
    """Realized additive noise for one outer-gradient sample."""

    noise: np.ndarray


class StochasticProblem:
    """Smooth objective with an unbiased sampled-gradient oracle.

    Subclasses fill in `objective` and `true_grad`; the shared oracle adds
    token noise on top of the exact gradient, so a token reused at two
    points differs only through the exact gradients.
    """

    dim: int
    sigma: float
    L: float
    delta_f: float
    x0: Vector
    spec: dict

    def objective(self, x) -> float:
        raise NotImplementedError

    def true_grad(self, x) -> Vector:
        raise NotImplementedError

    def value_and_grad(self, x) -> tuple[float, Vector]:
        return self.objective(x), self.true_grad(x)

    def draw(self, rng: RngStream) -> GradientToken:
        return GradientToken(gaussian(rng, self.dim, self.sigma))

    def grad_at(self, token: GradientToken, x) -> Vector:
        return self.true_grad(x) + token.noise


class NoisyQuadratic(StochasticProblem):
    """f(x) = x'Ax/2 + b'x with A symmetric, spectrum inside [mu, L].

    The sampled gradient is Ax + b plus i.i.d. per-coordinate noise of
    standard deviation sigma, so the mean squared vector error of one
    sample is sigma**2 * dim.
    """

    def __init__(self, dim, L, mu, sigma, seed):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        if not 0 < mu <= L:
            raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        root = RngStream(seed).child("noisy_quadratic")
        gen = root.child("data").generator
        # Rotate an evenly spaced spectrum by a seeded orthogonal matrix.
        lam = np.linspace(mu, L, dim)
        q, r = np.linalg.qr(gen.standard_normal((dim, dim)))
        q = q * np.sign(np.diag(r))  # fix QR sign ambiguity for replay
        self.A = (q * lam) @ q.T
        self.A = 0.5 * (self.A + self.A.T)  # symmetrize against rounding
        self.b = gen.standard_normal(dim)
        self.dim = dim
        self.mu = float(mu)
        self.L = float(L)
        self.sigma = float(sigma)
        self.x0 = root.child("x0").generator.standard_normal(dim)
        self.x_star = np.linalg.solve(self.A, -self.b)
        f_star = 0.5 * float(self.x_star @ (self.A @ self.x_star)) + float(
            self.b @ self.x_star
        )
        self.delta_f = self.objective(self.x0) - f_star
        self.spec = {
            "name": "noisy_quadratic",
            "dim": dim,
            "L": float(L),
            "mu": float(mu),
            "sigma": float(sigma),
            "seed": int(seed),
        }

    def objective(self, x) -> float:
        return 0.5 * float(x @ (self.A @ x)) + float(self.b @ x)

    def true_grad(self, x) -> Vector:
        return self.A @ x + self.b

    def value_and_grad(self, x):
        ax = self.A @ x
        return 0.5 * float(x @ ax) + float(self.b @ x), ax + self.b


class NonconvexSmooth(StochasticProblem):
    """f(x) = sum_j c_j*log(1 + x_j^2) + (epsilon/2)*||x||^2 with c_j > 0.

    Bounded below by 0 (attained at the origin, the unique stationary
    point when epsilon > 0), smooth with constant max_j(2 c_j) + epsilon,
    and nonconvex in every coordinate away from zero.
    """

    def __init__(self, dim, sigma, seed, coeffs=None, epsilon=1e-2):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        if epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
        root = RngStream(seed).child("nonconvex_smooth")
        if coeffs is None:
            coeffs = root.child("data").generator.uniform(0.5, 1.5, dim)
        self.coeffs = as_vector(coeffs)
        if self.coeffs.shape != (dim,) or np.any(self.coeffs <= 0):
            raise ValueError("coeffs must be positive and match dim")
        self.epsilon = float(epsilon)
        self.dim = dim
        self.sigma = float(sigma)
        self.L = float(2.0 * self.coeffs.max() + self.epsilon)
        self.x0 = root.child("x0").generator.standard_normal(dim)
        self.delta_f = self.objective(self.x0)  # inf f = 0 at the origin
        self.spec = {
            "name": "nonconvex_smooth",
            "dim": dim,
            "sigma": float(sigma),
            "seed": int(seed),
        }

    def objective(self, x) -> float:
        x = np.asarray(x)
        return float(self.coeffs @ np.log1p(x * x)) + 0.5 * self.epsilon * float(x @ x)

    def true_grad(self, x) -> Vector:
        x = np.asarray(x)
        return 2.0 * self.coeffs * x / (1.0 + x * x) + self.epsilon * x


class FiniteSumProblem(StochasticProblem):
    """Average of n robust-regression losses F(x) = mean_i l(a_i'x - b_i).

    l(r) = r^2 / (1 + r^2) saturates on outliers, so the landscape is
    nonconvex. Sampling draws a uniform component index; the oracle token
    is that index, and `full_grad` is the exact arithmetic mean of the
    component gradients.
    """

    def __init__(self, n, dim, seed, outlier_frac=0.1):
        if n < 1 or dim < 1:
            raise ValueError(f"need n >= 1 and dim >= 1, got n={n}, dim={dim}")
        if not 0 <= outlier_frac <= 1:
            raise ValueError(f"outlier_frac must be in [0, 1], got {outlier_frac}")
        root = RngStream(seed).child("finite_sum")
        gen = root.child("data").generator
        self.features = gen.standard_normal((n, dim)) / np.sqrt(dim)
        x_true = gen.standard_normal(dim)
        targets = self.features @ x_true + 0.1 * gen.standard_normal(n)
        # A slice of grossly corrupted targets keeps the landscape nonconvex.
        n_out = int(round(outlier_frac * n))
        if n_out:
            idx = gen.choice(n, size=n_out, replace=False)
            targets[idx] += 10.0 * gen.standard_normal(n_out)
        self.targets = targets
        self.n = n
        self.dim = dim
        self.sigma = None  # component sampling, no fixed additive noise level
        row_sq = np.sum(self.features * self.features, axis=1)
        self.L = float(2.0 * row_sq.max())  # |l''| <= 2
        self.x0 = root.child("x0").generator.standard_normal(dim)
        self.delta_f = self.objective(self.x0)  # losses are bounded below by 0
        self.spec = {"name": "finite_sum", "n": n, "dim": dim, "seed": int(seed)}

    @staticmethod
    def _loss(r):
        return r * r / (1.0 + r * r)

    @staticmethod
    def _dloss(r):
        q = 1.0 + r * r
        return 2.0 * r / (q * q)

    def objective(self, x) -> float:
        r = self.features @ x - self.targets
        return float(np.mean(self._loss(r)))

    def true_grad(self, x) -> Vector:
        return self.full_grad(x)

    def full_grad(self, x) -> Vector:
        """Exact mean of all component gradients."""
        r = self.features @ x - self.targets
        return self.features.T @ self._dloss(r) / self.n

    def value_and_grad(self, x):
        r = self.features @ x - self.targets
        return float(np.mean(self._loss(r))), self.features.T @ self._dloss(r) / self.n

    def component_grad(self, i, x) -> Vector:
        """Gradient of the i-th component loss (0-based index)."""
        if not 0 <= i < self.n:
            raise IndexError(f"component index {i} outside [0, {self.n})")
        a = self.features[i]
        return self._dloss(float(a @ x) - self.targets[i]) * a

    def draw(self, rng: RngStream) -> ComponentToken:
        return ComponentToken(int(rng.generator.integers(self.n)))

    def grad_at(self, token: ComponentToken, x) -> Vector:
        return self.component_grad(token.index, x)


class CompositionalProblem:
    """F(x) = f(g(x)) with g(x) = Mx + c and f(u) = ||u||^2 / 2.

    Inner samples carry additive noise on both the map values and the
    Jacobian entries (independent of each other within a token); outer
    samples carry additive gradient noise. All noises are per-entry
    N(0, sigma^2). The exact gradient is M'(Mx + c).

    The outer map is only locally Lipschitz; its reported constant holds on
    the ball of radius COMPOSITIONAL_BALL_RADIUS, which benchmark runs stay
    well inside.
    """

    def __init__(self, dim, inner_dim, sigma, seed, matrix=None, offset=None):
        if dim < 1 or inner_dim < 1:
            raise ValueError(
                f"need dim >= 1 and inner_dim >= 1, got dim={dim}, inner_dim={inner_dim}"
            )
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        root = RngStream(seed).child("compositional")
        gen = root.child("data").generator
        if matrix is None:
            matrix = gen.standard_normal((inner_dim, dim)) / np.sqrt(dim)
        self.matrix = np.array(matrix, dtype=np.float64)
        if self.matrix.shape != (inner_dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match ({inner_dim}, {dim})"
            )
        if offset is None:
            offset = gen.standard_normal(inner_dim)
        self.offset = as_vector(offset)
        if self.offset.shape != (inner_dim,):
            raise ValueError("offset must have length inner_dim")
        self.dim = dim
        self.inner_dim = inner_dim
        self.sigma = float(sigma)
        top_sv = float(np.linalg.norm(self.matrix, 2))
        self.L = top_sv * top_sv  # smoothness of the exact composition
        self.inner_lipschitz = top_sv
        self.outer_lipschitz_ball = COMPOSITIONAL_BALL_RADIUS
        self.x0 = root.child("x0").generator.standard_normal(dim)
        self.delta_f = self.objective(self.x0)  # F >= 0
        self.spec = {
            "name": "compositional",
            "dim": dim,
            "inner_dim": inner_dim,
            "sigma": float(sigma),
            "seed": int(seed),
        }

    def inner_true(self, x) -> Vector:
        return self.matrix @ x + self.offset

    def objective(self, x) -> float:
        u = self.inner_true(x)
        return 0.5 * float(u @ u)

    def true_grad(self, x) -> Vector:
        return self.matrix.T @ self.inner_true(x)

    def value_and_grad(self, x):
        u = self.inner_true(x)
        return 0.5 * float(u @ u), self.matrix.T @ u

    def draw_inner(self, rng: RngStream) -> InnerToken:
        # Value and Jacobian noises are independent halves of one token.
        value_noise = gaussian(rng, self.inner_dim, self.sigma)
        if self.sigma == 0.0:
            jac_noise = np.zeros((self.inner_dim, self.dim))
        else:
            jac_noise = self.sigma * rng.generator.standard_normal(
                (self.inner_dim, self.dim)
            )
        return InnerToken(value_noise, jac_noise)

    def draw_outer(self, rng: RngStream) -> OuterToken:
        return OuterToken(gaussian(rng, self.inner_dim, self.sigma))

    def inner_value(self, token: InnerToken, x) -> Vector:
        return self.matrix @ x + self.offset + token.value_noise

    def inner_jac(self, token: InnerToken, x) -> np.ndarray:
        """Sampled Jacobian, shaped (inner_dim, dim); x-independent here."""
        return self.matrix + token.jac_noise

    def outer_grad(self, token: OuterToken, u) -> Vector:
        return np.asarray(u, dtype=np.float64) + token.noise

    def sample_grad(self, inner_token: InnerToken, outer_token: OuterToken, x) -> Vector:
        """One-sample composite gradient estimate at x."""
        u = self.inner_value(inner_token, x)
        return self.inner_jac(inner_token, x).T @ self.outer_grad(outer_token, u)


def make_noisy_quadratic(dim, L, mu, sigma, seed) -> NoisyQuadratic:
    return NoisyQuadratic(dim, L, mu, sigma, seed)


def make_nonconvex_smooth(dim, sigma, seed, coeffs=None, epsilon=1e-2) -> NonconvexSmooth:
    return NonconvexSmooth(dim, sigma, seed, coeffs=coeffs, epsilon=epsilon)


def make_finite_sum(n, dim, seed, outlier_frac=0.1) -> FiniteSumProblem:
    return FiniteSumProblem(n, dim, seed, outlier_frac=outlier_frac)


def make_compositional(dim, inner_dim, sigma, seed, matrix=None, offset=None) -> CompositionalProblem:
    return CompositionalProblem(dim, inner_dim, sigma, seed, matrix=matrix, offset=offset)


# Canonical constructor arguments per family, used for config validation.
PROBLEM_FIELDS = {
    "noisy_quadratic": {"dim", "L", "mu", "sigma", "seed"},
    "nonconvex_smooth": {"dim", "sigma", "seed"},
    "finite_sum": {"n", "dim", "seed"},
    "compositional": {"dim", "inner_dim", "sigma", "seed"},
}

_FACTORIES = {
    "noisy_quadratic": make_noisy_quadratic,
    "nonconvex_smooth": make_nonconvex_smooth,
    "finite_sum": make_finite_sum,
    "compositional": make_compositional,
}


def from_spec(spec: dict):
    """Build a problem from a config mapping with a `name` key.

    Unknown names and unknown or missing fields raise ValueError, so config
    typos fail loudly instead of silently picking defaults.
    """
    if "name" not in spec:
        raise ValueError("problem spec needs a 'name' field")
    name = spec["name"]
    if name not in _FACTORIES:
        raise ValueError(
            f"unknown problem '{name}', expected one of {sorted(_FACTORIES)}"
        )
    fields = {k: v for k, v in spec.items() if k != "name"}
    allowed = PROBLEM_FIELDS[name]
    unknown = set(fields) - allowed
    if unknown:
        raise ValueError(f"unknown fields for problem '{name}': {sorted(unknown)}")
    missing = allowed - set(fields)
    if missing:
        raise ValueError(f"missing fields for problem '{name}': {sorted(missing)}")
    return _FACTORIES[name](**fields)


def grad_check(problem, x, h=1e-5) -> float:
    """Worst per-coordinate error of true_grad against central differences.

    Coordinates where the exact gradient is below 1e-12 in magnitude are
    compared absolutely instead of relatively, so exact zeros do not
    produce spurious blowups.
    """
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    x = as_vector(x)
    g = problem.true_grad(x)
    worst = 0.0
    for j in range(x.shape[0]):
        step = np.zeros_like(x)
        step[j] = h
        fd = (problem.objective(x + step) - problem.objective(x - step)) / (2.0 * h)
        err = abs(fd - g[j])
        if abs(g[j]) >= _REL_ERR_FLOOR:
            err /= abs(g[j])
        worst = max(worst, err)
    return worst
