"""Step-size and momentum laws for the recursive-momentum optimizers.

All functions here are pure: the caller owns the running sums and passes
them in. Each law keeps the step size nonincreasing while its sum grows,
which is what the trace invariants check.
"""

from __future__ import annotations

# Guard for the finite-sum law only: a vanishing gradient-norm sum would
# otherwise divide by zero on problems that start at a stationary point.
SUM_SQ_FLOOR = 1e-30


def ada_lr(horizon: int, alpha: float, sum_sq: float) -> float:
    """Adaptive step size for a run of known length.

    Returns min(horizon**(-1/3), 1 / (horizon**((1-alpha)/3) * sum_sq**alpha))
    where sum_sq accumulates the squared estimator norms through the current
    step. The first branch wins exactly when sum_sq <= horizon**(1/3); it is
    also the value returned when sum_sq is zero.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if not 0.0 < alpha < 1.0 / 3.0:
        raise ValueError(f"alpha must lie in (0, 1/3), got {alpha}")
    if sum_sq < 0:
        raise ValueError(f"sum_sq must be nonnegative, got {sum_sq}")
    flat = float(horizon) ** (-1.0 / 3.0)
    if sum_sq == 0.0:
        return flat
    adaptive = 1.0 / (float(horizon) ** ((1.0 - alpha) / 3.0) * sum_sq**alpha)
    return min(flat, adaptive)


def ada_beta(horizon: int) -> float:
    """Momentum weight horizon**(-2/3), capped at 1."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    return min(1.0, float(horizon) ** (-2.0 / 3.0))


def stage_length(t: int) -> tuple[int, bool]:
    """Doubling-trick stage for step t (1-based).

    Returns (I, reset) where I = 2**floor(log2(t)) is the current stage
    length and reset is True exactly when t opens a new stage, i.e. t is a
    power of two. I <= t < 2 * I always holds.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    i = 1 << (int(t).bit_length() - 1)
    return i, (t & (t - 1)) == 0


def doubling_params(t: int, alpha: float, stage_sum_sq: float) -> tuple[float, float, int, bool]:
    """Step size and momentum for the horizon-free doubling schedule.

    stage_sum_sq accumulates squared estimator norms from the start of the
    current stage through step t. Returns (eta, beta, stage, reset); within
    a stage the laws coincide with ada_lr/ada_beta run at horizon = stage.
    """
    stage, reset = stage_length(t)
    return ada_lr(stage, alpha, stage_sum_sq), ada_beta(stage), stage, reset


def finite_sum_lr(n: int, alpha: float, sum_sq: float) -> float:
    """Adaptive step size for finite sums of n components.

    Returns 1 / (n**((1-alpha)/2) * sum_sq**alpha). sum_sq below
    SUM_SQ_FLOOR is floored there, so the value stays finite and the
    sequence stays nonincreasing as the sum grows.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < alpha < 1.0 / 3.0:
        raise ValueError(f"alpha must lie in (0, 1/3), got {alpha}")
    if sum_sq < 0:
        raise ValueError(f"sum_sq must be nonnegative, got {sum_sq}")
    sum_sq = max(sum_sq, SUM_SQ_FLOOR)
    return 1.0 / (float(n) ** ((1.0 - alpha) / 2.0) * sum_sq**alpha)


def finite_sum_beta(n: int) -> float:
    """Momentum weight 1/n for finite sums."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return 1.0 / float(n)


def storm_original_params(k: float, w: float, c: float, grad_sum_sq: float) -> tuple[float, float]:
    """Non-adaptive-exponent baseline schedule.

    eta = k / (w + grad_sum_sq)**(1/3) driven by the sampled gradient norms,
    and beta = c * eta**2 clamped to 1. c -> 0 recovers a pure recursive
    gradient difference; large c forgets history quickly.
    """
    if k <= 0 or w <= 0 or c < 0:
        raise ValueError(f"need k > 0, w > 0, c >= 0, got k={k}, w={w}, c={c}")
    if grad_sum_sq < 0:
        raise ValueError(f"grad_sum_sq must be nonnegative, got {grad_sum_sq}")
    eta = k / (w + grad_sum_sq) ** (1.0 / 3.0)
    beta = min(1.0, c * eta * eta)
    return eta, beta
