"""Optimizer run loops producing fully deterministic trace records.

Every run function follows the same shape: derive labeled random streams
from the seed, initialize the gradient estimate, then per step record the
trace row AT the current iterate before moving. Recorded columns:

    t, f, grad_norm, v_norm_sq, eta, beta, est_error

where grad_norm and est_error are measured against the problem's exact
gradient. A uniformly random reporting index tau is drawn from its own
stream so that it never perturbs the iterate randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    GradientTable,
    comp_grad_update,
    comp_inner_update,
    finite_sum_update,
    storm_init,
    storm_update,
    svrg_update,
    take_snapshot,
)
from .numerics import RngStream, as_vector, norm_sq
from .schedules import (
    ada_beta,
    ada_lr,
    finite_sum_beta,
    finite_sum_lr,
    stage_length,
    storm_original_params,
)


@dataclass
class RunRecord:
    """Trace of one optimization run plus the sampled reporting iterate."""

    t: np.ndarray
    f: np.ndarray
    grad_norm: np.ndarray
    v_norm_sq: np.ndarray
    eta: np.ndarray
    beta: np.ndarray
    est_error: np.ndarray
    tau: int
    x_tau: np.ndarray
    x_final: np.ndarray
    config: dict = field(default_factory=dict)
    iterates: np.ndarray | None = None  # (T+1, dim) when retained
    v_history: np.ndarray | None = None  # (T, dim) when retained

    @property
    def T(self) -> int:
        return int(self.t.shape[0])

    def columns(self) -> dict:
        """Trace columns keyed by their serialized names."""
        return {
            "t": self.t,
            "f": self.f,
            "grad_norm": self.grad_norm,
            "v_norm_sq": self.v_norm_sq,
            "eta": self.eta,
            "beta": self.beta,
            "est_error": self.est_error,
        }


class _Trace:
    """Preallocated trace buffers shared by all run loops."""

    def __init__(self, T, dim, keep_iterates):
        self.f = np.empty(T)
        self.grad_norm = np.empty(T)
        self.v_norm_sq = np.empty(T)
        self.eta = np.empty(T)
        self.beta = np.empty(T)
        self.est_error = np.empty(T)
        self.iterates = np.empty((T + 1, dim)) if keep_iterates else None
        self.v_history = np.empty((T, dim)) if keep_iterates else None
        self.x_tau = None

    def row(self, t, x, f_val, g_true, v, eta, beta, tau):
        i = t - 1
        diff = v - g_true
        self.f[i] = f_val
        self.grad_norm[i] = math.sqrt(float(g_true @ g_true))
        self.v_norm_sq[i] = float(v @ v)
        self.eta[i] = eta
        self.beta[i] = beta
        self.est_error[i] = math.sqrt(float(diff @ diff))
        if t == tau:
            self.x_tau = x.copy()
        if self.iterates is not None:
            self.iterates[i] = x
            self.v_history[i] = v

    def finish(self, T, x, tau, config) -> RunRecord:
        if self.iterates is not None:
            self.iterates[T] = x
        return RunRecord(
            t=np.arange(1, T + 1, dtype=np.int64),
            f=self.f,
            grad_norm=self.grad_norm,
            v_norm_sq=self.v_norm_sq,
            eta=self.eta,
            beta=self.beta,
            est_error=self.est_error,
            tau=tau,
            x_tau=self.x_tau,
            x_final=x.copy(),
            config=config,
            iterates=self.iterates,
            v_history=self.v_history,
        )


def _start(problem, T, seed, x0):
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    x = problem.x0.copy() if x0 is None else as_vector(x0)
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 has shape {x.shape}, problem dim is {problem.dim}")
    root = RngStream(seed)
    tau = int(root.child("tau").generator.integers(1, T + 1))
    return x, root, tau


def warmup_batch_size(horizon: int) -> int:
    """ceil(horizon**(1/3)); the tiny slack absorbs cube roots of perfect
    cubes landing one ulp above the integer."""
    return int(math.ceil(horizon ** (1.0 / 3.0) - 1e-12))


def _echo(problem, T, seed, algorithm: dict) -> dict:
    return {
        "algorithm": algorithm,
        "problem": dict(problem.spec),
        "T": int(T),
        "seed": int(seed),
    }


def run_ada_storm(problem, T, alpha=0.3, seed=0, x0=None, keep_iterates=False) -> RunRecord:
    """Recursive-momentum run with the horizon-aware adaptive step size.

    The estimate starts from a warm-up batch of ceil(T**(1/3)) samples;
    afterwards each step reuses one sample at the current and previous
    iterate. beta is fixed at T**(-2/3) and eta follows ada_lr on the
    running sum of squared estimate norms (current step included).
    """
    x, root, tau = _start(problem, T, seed, x0)
    trace = _Trace(T, problem.dim, keep_iterates)
    step_rng = root.child("step")
    beta = ada_beta(T)
    v = storm_init(problem, x, warmup_batch_size(T), root.child("init"))
    sum_sq = 0.0
    x_prev = x
    for t in range(1, T + 1):
        if t > 1:
            token = problem.draw(step_rng)
            v = storm_update(
                v, beta, problem.grad_at(token, x), problem.grad_at(token, x_prev)
            )
        sum_sq += norm_sq(v)
        eta = ada_lr(T, alpha, sum_sq)
        f_val, g_true = problem.value_and_grad(x)
        trace.row(t, x, f_val, g_true, v, eta, beta, tau)
        x_prev = x
        x = x - eta * v
    cfg = _echo(problem, T, seed, {"name": "ada_storm", "alpha": float(alpha)})
    return trace.finish(T, x, tau, cfg)


def run_ada_storm_doubling(problem, T, alpha=0.3, seed=0, x0=None, keep_iterates=False) -> RunRecord:
    """Horizon-free variant: restart the schedule on dyadic stages.

    Steps are grouped into stages [2^k, 2^(k+1)); each stage runs the
    fixed-horizon laws with the stage length in place of T, with its own
    squared-norm sum. At every stage opening the estimate is refreshed from
    a warm-up batch of ceil(stage**(1/3)) fresh samples.
    """
    x, root, tau = _start(problem, T, seed, x0)
    trace = _Trace(T, problem.dim, keep_iterates)
    step_rng = root.child("step")
    init_rng = root.child("init")
    v = None
    beta = 1.0
    stage_sum = 0.0
    x_prev = x
    for t in range(1, T + 1):
        stage, reset = stage_length(t)
        if reset:
            stage_sum = 0.0
            beta = ada_beta(stage)
            v = storm_init(problem, x, warmup_batch_size(stage), init_rng)
        else:
            token = problem.draw(step_rng)
            v = storm_update(
                v, beta, problem.grad_at(token, x), problem.grad_at(token, x_prev)
            )
        stage_sum += norm_sq(v)
        eta = ada_lr(stage, alpha, stage_sum)
        f_val, g_true = problem.value_and_grad(x)
        trace.row(t, x, f_val, g_true, v, eta, beta, tau)
        x_prev = x
        x = x - eta * v
    cfg = _echo(problem, T, seed, {"name": "ada_storm_doubling", "alpha": float(alpha)})
    return trace.finish(T, x, tau, cfg)


def run_comp_storm(problem, T, alpha=0.3, seed=0, x0=None, keep_iterates=False) -> RunRecord:
    """Two-level composition run tracking inner values and the gradient.

    Per step one inner sample serves both map evaluations and both
    Jacobians, and one outer sample serves both outer gradients (new at the
    updated inner estimate, old at the previous one). Warm-up averages
    ceil(T**(1/3)) paired samples: the inner estimate over all inner values
    first, then the gradient over the per-sample Jacobian/outer products.
    """
    x, root, tau = _start(problem, T, seed, x0)
    trace = _Trace(T, problem.dim, keep_iterates)
    inner_rng = root.child("inner")
    outer_rng = root.child("outer")
    init_inner = root.child("init_inner")
    init_outer = root.child("init_outer")
    beta = ada_beta(T)

    batch = warmup_batch_size(T)
    inner_tokens = [problem.draw_inner(init_inner) for _ in range(batch)]
    outer_tokens = [problem.draw_outer(init_outer) for _ in range(batch)]
    u = np.mean([problem.inner_value(tok, x) for tok in inner_tokens], axis=0)
    v = np.mean(
        [
            problem.inner_jac(zt, x).T @ problem.outer_grad(xt, u)
            for zt, xt in zip(inner_tokens, outer_tokens)
        ],
        axis=0,
    )

    sum_sq = 0.0
    x_prev = x
    for t in range(1, T + 1):
        if t > 1:
            zeta = problem.draw_inner(inner_rng)
            xi = problem.draw_outer(outer_rng)
            u_new = comp_inner_update(
                u, beta, problem.inner_value(zeta, x), problem.inner_value(zeta, x_prev)
            )
            v = comp_grad_update(
                v,
                beta,
                problem.outer_grad(xi, u_new),
                problem.inner_jac(zeta, x),
                problem.outer_grad(xi, u),
                problem.inner_jac(zeta, x_prev),
            )
            u = u_new
        sum_sq += norm_sq(v)
        eta = ada_lr(T, alpha, sum_sq)
        f_val, g_true = problem.value_and_grad(x)
        trace.row(t, x, f_val, g_true, v, eta, beta, tau)
        x_prev = x
        x = x - eta * v
    cfg = _echo(problem, T, seed, {"name": "comp_storm", "alpha": float(alpha)})
    return trace.finish(T, x, tau, cfg)


def run_fs_storm(problem, T, alpha=0.3, seed=0, x0=None, keep_iterates=False) -> RunRecord:
    """Finite-sum run with a component-gradient memory table.

    The first step is a full pass: it fills the table and sets the estimate
    to the exact mean gradient. Afterwards each step samples one component
    uniformly, applies the two-point recursion with the table correction,
    and overwrites that component's entry. beta = 1/n throughout.
    """
    x, root, tau = _start(problem, T, seed, x0)
    trace = _Trace(T, problem.dim, keep_iterates)
    index_gen = root.child("component").generator
    n = problem.n
    beta = finite_sum_beta(n)
    table = GradientTable.from_full_pass(problem, x)
    v = table.mean.copy()
    sum_sq = 0.0
    x_prev = x
    for t in range(1, T + 1):
        if t > 1:
            i = int(index_gen.integers(n))
            v, table = finite_sum_update(
                v,
                table,
                beta,
                i,
                problem.component_grad(i, x),
                problem.component_grad(i, x_prev),
            )
        sum_sq += norm_sq(v)
        eta = finite_sum_lr(n, alpha, sum_sq)
        f_val, g_true = problem.value_and_grad(x)
        trace.row(t, x, f_val, g_true, v, eta, beta, tau)
        x_prev = x
        x = x - eta * v
    cfg = _echo(problem, T, seed, {"name": "fs_storm", "alpha": float(alpha)})
    return trace.finish(T, x, tau, cfg)


def run_fs_storm_svrg(
    problem, T, alpha=0.3, seed=0, period=None, eta_const=None, x0=None, keep_iterates=False
) -> RunRecord:
    """Finite-sum run anchored to a periodically refreshed full gradient.

    Instead of a per-component table, the correction compares the sampled
    component's gradient at a snapshot point against the snapshot's full
    gradient; the snapshot is refreshed every `period` steps (default n).
    eta follows the adaptive finite-sum law unless eta_const pins it.
    """
    x, root, tau = _start(problem, T, seed, x0)
    if period is None:
        period = problem.n
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    if eta_const is not None and eta_const <= 0:
        raise ValueError(f"eta_const must be positive, got {eta_const}")
    trace = _Trace(T, problem.dim, keep_iterates)
    index_gen = root.child("component").generator
    n = problem.n
    beta = finite_sum_beta(n)
    snapshot = take_snapshot(problem, x, period)
    v = snapshot.full_grad.copy()
    sum_sq = 0.0
    x_prev = x
    for t in range(1, T + 1):
        if t > 1:
            if t % period == 0:
                snapshot = take_snapshot(problem, x, period)
            i = int(index_gen.integers(n))
            v = svrg_update(
                v,
                snapshot,
                beta,
                problem.component_grad(i, x),
                problem.component_grad(i, x_prev),
                problem.component_grad(i, snapshot.x),
            )
            snapshot = snapshot.aged()
        sum_sq += norm_sq(v)
        if eta_const is None:
            eta = finite_sum_lr(n, alpha, sum_sq)
        else:
            eta = float(eta_const)
        f_val, g_true = problem.value_and_grad(x)
        trace.row(t, x, f_val, g_true, v, eta, beta, tau)
        x_prev = x
        x = x - eta * v
    algo = {"name": "fs_storm_svrg", "alpha": float(alpha), "period": int(period)}
    if eta_const is not None:
        algo["eta_const"] = float(eta_const)
    return trace.finish(T, x, tau, _echo(problem, T, seed, algo))


def run_sgd(problem, T, eta0=0.1, decay=0.0, seed=0, x0=None, keep_iterates=False) -> RunRecord:
    """Plain stochastic gradient baseline with eta_t = eta0 / sqrt(1 + decay*t).

    The trace's v columns describe the raw sampled gradient, so est_error
    measures single-sample noise. The beta column is 0: no momentum.
    """
    if eta0 <= 0:
        raise ValueError(f"eta0 must be positive, got {eta0}")
    if decay < 0:
        raise ValueError(f"decay must be nonnegative, got {decay}")
    x, root, tau = _start(problem, T, seed, x0)
    trace = _Trace(T, problem.dim, keep_iterates)
    step_rng = root.child("step")
    for t in range(1, T + 1):
        token = problem.draw(step_rng)
        g = problem.grad_at(token, x)
        eta = eta0 / math.sqrt(1.0 + decay * t)
        f_val, g_true = problem.value_and_grad(x)
        trace.row(t, x, f_val, g_true, g, eta, 0.0, tau)
        x = x - eta * g
    cfg = _echo(
        problem, T, seed, {"name": "sgd", "eta0": float(eta0), "decay": float(decay)}
    )
    return trace.finish(T, x, tau, cfg)


def run_storm_original(
    problem, T, k=0.1, w=1.0, c=10.0, seed=0, x0=None, keep_iterates=False
) -> RunRecord:
    """Baseline recursive-momentum run with the coupled eta/beta schedule.

    eta_t = k / (w + sum of squared SAMPLED gradient norms)**(1/3) and
    beta_t = c * eta_t**2, so the momentum weight follows the step size
    instead of the horizon. The first step uses the raw sample.
    """
    x, root, tau = _start(problem, T, seed, x0)
    trace = _Trace(T, problem.dim, keep_iterates)
    step_rng = root.child("step")
    grad_sum = 0.0
    v = None
    x_prev = x
    for t in range(1, T + 1):
        token = problem.draw(step_rng)
        g_new = problem.grad_at(token, x)
        grad_sum += norm_sq(g_new)
        eta, beta = storm_original_params(k, w, c, grad_sum)
        if t == 1:
            v = g_new
        else:
            v = storm_update(v, beta, g_new, problem.grad_at(token, x_prev))
        f_val, g_true = problem.value_and_grad(x)
        trace.row(t, x, f_val, g_true, v, eta, beta, tau)
        x_prev = x
        x = x - eta * v
    cfg = _echo(
        problem,
        T,
        seed,
        {"name": "storm_original", "k": float(k), "w": float(w), "c": float(c)},
    )
    return trace.finish(T, x, tau, cfg)


# name -> (runner, problem families it accepts)
ALGORITHMS = {
    "ada_storm": (run_ada_storm, {"noisy_quadratic", "nonconvex_smooth", "finite_sum"}),
    "ada_storm_doubling": (
        run_ada_storm_doubling,
        {"noisy_quadratic", "nonconvex_smooth", "finite_sum"},
    ),
    "comp_storm": (run_comp_storm, {"compositional"}),
    "fs_storm": (run_fs_storm, {"finite_sum"}),
    "fs_storm_svrg": (run_fs_storm_svrg, {"finite_sum"}),
    "sgd": (run_sgd, {"noisy_quadratic", "nonconvex_smooth", "finite_sum"}),
    "storm_original": (
        run_storm_original,
        {"noisy_quadratic", "nonconvex_smooth", "finite_sum"},
    ),
}


def run_algorithm(name: str, problem, T: int, seed: int, **params) -> RunRecord:
    """Dispatch one run by algorithm name; params go to the run function."""
    if name not in ALGORITHMS:
        raise ValueError(f"unknown algorithm '{name}', expected one of {sorted(ALGORITHMS)}")
    runner, families = ALGORITHMS[name]
    family = problem.spec.get("name")
    if family not in families:
        raise ValueError(f"algorithm '{name}' does not accept problem family '{family}'")
    return runner(problem, T, seed=seed, **params)
