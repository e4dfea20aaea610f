import math

import numpy as np
import pytest

from stormlab.optimizers import (
    run_ada_storm,
    run_ada_storm_doubling,
    run_algorithm,
    run_comp_storm,
    run_fs_storm,
    run_fs_storm_svrg,
    run_sgd,
    run_storm_original,
    warmup_batch_size,
)
from stormlab.problems import (
    make_compositional,
    make_finite_sum,
    make_noisy_quadratic,
    make_nonconvex_smooth,
)
from stormlab.schedules import ada_beta, ada_lr, finite_sum_lr, stage_length


@pytest.fixture(scope="module")
def quad():
    return make_noisy_quadratic(dim=6, L=8.0, mu=1.0, sigma=0.5, seed=31)


@pytest.fixture(scope="module")
def det_quad():
    return make_noisy_quadratic(dim=5, L=10.0, mu=1.0, sigma=0.0, seed=32)


@pytest.fixture(scope="module")
def comp():
    return make_compositional(dim=6, inner_dim=5, sigma=0.5, seed=33)


@pytest.fixture(scope="module")
def fsum():
    return make_finite_sum(n=8, dim=4, seed=34)


def _assert_records_equal(a, b, check_config=True):
    np.testing.assert_array_equal(a.t, b.t)
    for col in ("f", "grad_norm", "v_norm_sq", "eta", "beta", "est_error"):
        np.testing.assert_array_equal(getattr(a, col), getattr(b, col))
    assert a.tau == b.tau
    np.testing.assert_array_equal(a.x_tau, b.x_tau)
    np.testing.assert_array_equal(a.x_final, b.x_final)
    if check_config:
        assert a.config == b.config


ALL_RUNS = [
    ("ada_storm", "quad", {}),
    ("ada_storm_doubling", "quad", {}),
    ("comp_storm", "comp", {}),
    ("fs_storm", "fsum", {}),
    ("fs_storm_svrg", "fsum", {}),
    ("sgd", "quad", {"eta0": 0.05, "decay": 0.1}),
    ("storm_original", "quad", {"k": 0.1, "w": 1.0, "c": 10.0}),
]


@pytest.mark.parametrize("name,prob_fixture,params", ALL_RUNS)
def test_runs_are_bit_identical_on_repeat(name, prob_fixture, params, request):
    problem = request.getfixturevalue(prob_fixture)
    a = run_algorithm(name, problem, 200, seed=3, **params)
    b = run_algorithm(name, problem, 200, seed=3, **params)
    _assert_records_equal(a, b)


@pytest.mark.parametrize("name,prob_fixture,params", ALL_RUNS)
def test_different_seeds_differ(name, prob_fixture, params, request):
    problem = request.getfixturevalue(prob_fixture)
    a = run_algorithm(name, problem, 200, seed=3, **params)
    b = run_algorithm(name, problem, 200, seed=4, **params)
    assert not np.array_equal(a.x_final, b.x_final)


@pytest.mark.parametrize("name,prob_fixture,params", ALL_RUNS)
def test_trace_shapes_and_step_reconstruction(name, prob_fixture, params, request):
    problem = request.getfixturevalue(prob_fixture)
    T = 150
    rec = run_algorithm(name, problem, T, seed=5, keep_iterates=True, **params)
    assert rec.t.shape == (T,)
    assert rec.t[0] == 1 and rec.t[-1] == T
    assert rec.iterates.shape == (T + 1, problem.dim)
    assert rec.v_history.shape == (T, problem.dim)
    # every recorded step satisfies x_{t+1} = x_t - eta_t v_t
    for t in range(T):
        expected = rec.iterates[t] - rec.eta[t] * rec.v_history[t]
        np.testing.assert_allclose(rec.iterates[t + 1], expected, atol=1e-12)
    # recorded scalar columns match the iterate/estimate history
    np.testing.assert_allclose(
        rec.v_norm_sq, np.sum(rec.v_history**2, axis=1), rtol=1e-12, atol=1e-12
    )
    f_direct = np.array([problem.objective(x) for x in rec.iterates[:-1]])
    np.testing.assert_allclose(rec.f, f_direct, rtol=1e-9, atol=1e-12)
    g_direct = np.array(
        [np.linalg.norm(problem.true_grad(x)) for x in rec.iterates[:-1]]
    )
    np.testing.assert_allclose(rec.grad_norm, g_direct, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("name,prob_fixture,params", ALL_RUNS)
def test_tau_is_recorded_iterate(name, prob_fixture, params, request):
    problem = request.getfixturevalue(prob_fixture)
    rec = run_algorithm(name, problem, 97, seed=11, keep_iterates=True, **params)
    assert 1 <= rec.tau <= 97
    np.testing.assert_array_equal(rec.x_tau, rec.iterates[rec.tau - 1])


def test_eta_nonincreasing_within_stages(quad, comp, fsum):
    recs = [
        run_ada_storm(quad, 300, seed=1),
        run_comp_storm(comp, 300, seed=1),
        run_fs_storm(fsum, 300, seed=1),
        run_fs_storm_svrg(fsum, 300, seed=1),
        run_sgd(quad, 300, eta0=0.05, decay=0.1, seed=1),
        run_storm_original(quad, 300, seed=1),
    ]
    for rec in recs:
        assert np.all(np.diff(rec.eta) <= 1e-15)
    dbl = run_ada_storm_doubling(quad, 300, seed=1)
    for t in range(2, 301):
        _, reset = stage_length(t)
        if not reset:
            assert dbl.eta[t - 1] <= dbl.eta[t - 2] * (1 + 1e-12)


# --- fixed-horizon adaptive run ----------------------------------------------


def test_ada_storm_noiseless_fixed_point(det_quad):
    rec = run_ada_storm(det_quad, 1000, seed=0)
    assert float(rec.est_error.max()) <= 1e-12


def test_ada_storm_stationary_start_stays_put(det_quad):
    # T large enough that the capped step size contracts every mode (cap < 2/L),
    # so the tiny linear-solve residual in x_star cannot be amplified
    rec = run_ada_storm(det_quad, 1000, seed=0, x0=det_quad.x_star, keep_iterates=True)
    assert float(np.abs(rec.iterates - det_quad.x_star).max()) <= 1e-10
    assert float(rec.grad_norm.max()) <= 1e-10


def test_ada_storm_schedule_columns_follow_laws(quad):
    T = 257
    rec = run_ada_storm(quad, T, alpha=0.31, seed=2)
    assert np.all(rec.beta == ada_beta(T))
    running = np.cumsum(rec.v_norm_sq)
    expected = np.array([ada_lr(T, 0.31, s) for s in running])
    np.testing.assert_allclose(rec.eta, expected, rtol=1e-12)


def test_ada_storm_noiseless_matches_plain_gradient_descent(det_quad):
    T = 10_000
    rec = run_ada_storm(det_quad, T, seed=0, keep_iterates=True)
    assert rec.grad_norm[-1] < 1e-6
    # independent replay: plain descent with the recorded step sizes
    x = det_quad.x0.copy()
    for t in range(T):
        np.testing.assert_allclose(rec.iterates[t], x, atol=1e-12)
        x = x - rec.eta[t] * det_quad.true_grad(x)


def test_ada_storm_warmup_batch_size():
    assert warmup_batch_size(1) == 1
    assert warmup_batch_size(8) == 2
    assert warmup_batch_size(1000) == 10
    assert warmup_batch_size(1001) == 11
    assert warmup_batch_size(100_000) == 47


def test_ada_storm_tau_stream_is_isolated(quad):
    # SGD's schedule ignores T, so a shared prefix proves that drawing tau
    # (which depends on T) never consumes iterate randomness
    short = run_sgd(quad, 50, eta0=0.01, decay=0.0, seed=9)
    long = run_sgd(quad, 100, eta0=0.01, decay=0.0, seed=9)
    np.testing.assert_array_equal(short.f, long.f[:50])


def test_ada_storm_x0_override(quad):
    start = np.zeros(quad.dim)
    rec = run_ada_storm(quad, 10, seed=1, x0=start, keep_iterates=True)
    np.testing.assert_array_equal(rec.iterates[0], start)


def test_run_rejects_bad_T(quad):
    with pytest.raises(ValueError, match="T"):
        run_ada_storm(quad, 0, seed=1)


# --- doubling variant ----------------------------------------------------------


def test_doubling_stage_columns(quad):
    T = 300
    rec = run_ada_storm_doubling(quad, T, alpha=0.3, seed=7)
    for t in range(1, T + 1):
        stage, _ = stage_length(t)
        assert rec.beta[t - 1] == ada_beta(stage)
    # beta jumps exactly at powers of two
    jumps = np.nonzero(np.diff(rec.beta))[0] + 2  # t of the changed row
    assert list(jumps) == [2, 4, 8, 16, 32, 64, 128, 256]


def test_doubling_t1_matches_fixed_horizon(quad):
    a = run_ada_storm(quad, 1, seed=13)
    b = run_ada_storm_doubling(quad, 1, seed=13)
    _assert_records_equal(a, b, check_config=False)


def test_doubling_per_stage_sum_restarts(quad):
    T = 64
    rec = run_ada_storm_doubling(quad, T, alpha=0.3, seed=3)
    stage_sum = 0.0
    for t in range(1, T + 1):
        stage, reset = stage_length(t)
        if reset:
            stage_sum = 0.0
        stage_sum += rec.v_norm_sq[t - 1]
        assert rec.eta[t - 1] == pytest.approx(
            ada_lr(stage, 0.3, stage_sum), rel=1e-12
        )


def test_doubling_noiseless_fixed_point(det_quad):
    rec = run_ada_storm_doubling(det_quad, 512, seed=0)
    assert float(rec.est_error.max()) <= 1e-12


# --- compositional run ---------------------------------------------------------


def test_comp_storm_noiseless_fixed_point():
    comp0 = make_compositional(dim=6, inner_dim=4, sigma=0.0, seed=35)
    rec = run_comp_storm(comp0, 1000, seed=0)
    assert float(rec.est_error.max()) <= 1e-12


def test_comp_storm_converges_on_noiseless_problem():
    comp0 = make_compositional(dim=5, inner_dim=8, sigma=0.0, seed=36)
    rec = run_comp_storm(comp0, 20_000, seed=0)

    assert rec.grad_norm[-1] < 1e-3
    assert rec.grad_norm[-1] < rec.grad_norm[0] * 1e-2


def test_comp_storm_schedule_columns(comp):
    T = 200
    rec = run_comp_storm(comp, T, alpha=0.3, seed=4)
    assert np.all(rec.beta == ada_beta(T))
    running = np.cumsum(rec.v_norm_sq)
    expected = np.array([ada_lr(T, 0.3, s) for s in running])
    np.testing.assert_allclose(rec.eta, expected, rtol=1e-12)


# --- finite-sum runs -----------------------------------------------------------


def test_fs_storm_first_step_uses_exact_mean(fsum):
    rec = run_fs_storm(fsum, 5, seed=6)
    g1 = fsum.full_grad(fsum.x0)
    assert rec.est_error[0] <= 1e-14
    assert rec.v_norm_sq[0] == pytest.approx(float(g1 @ g1), rel=1e-12)


def test_fs_storm_beta_and_eta_follow_laws(fsum):
    T = 120
    rec = run_fs_storm(fsum, T, alpha=0.29, seed=6)
    assert np.all(rec.beta == 1.0 / fsum.n)
    running = np.cumsum(rec.v_norm_sq)
    expected = np.array([finite_sum_lr(fsum.n, 0.29, s) for s in running])
    np.testing.assert_allclose(rec.eta, expected, rtol=1e-12)


def test_fs_storm_n1_is_deterministic_descent():
    fs1 = make_finite_sum(n=1, dim=4, seed=37)
    rec = run_fs_storm(fs1, 400, seed=0, keep_iterates=True)
    assert float(rec.est_error.max()) <= 1e-12  # v_t is the full gradient
    x = fs1.x0.copy()
    for t in range(400):
        np.testing.assert_allclose(rec.iterates[t], x, atol=1e-12)
        x = x - rec.eta[t] * fs1.full_grad(x)


def test_fs_storm_svrg_period_one_always_anchored(fsum):
    rec = run_fs_storm_svrg(fsum, 60, seed=8, period=1, keep_iterates=True)
    # with per-step refresh the correction uses the current point: the
    # estimate equals (1-b)v + g_new - (1-b)g_old - b(g_new - full) exactly
    assert rec.est_error[0] <= 1e-14


def test_fs_storm_svrg_constant_eta_switch(fsum):
    rec = run_fs_storm_svrg(fsum, 50, seed=8, eta_const=0.02)
    assert np.all(rec.eta == 0.02)
    rec2 = run_fs_storm_svrg(fsum, 50, seed=8)
    assert not np.all(rec2.eta == rec2.eta[0])


def test_fs_storm_svrg_rejects_bad_params(fsum):
    with pytest.raises(ValueError, match="period"):
        run_fs_storm_svrg(fsum, 10, seed=0, period=0)
    with pytest.raises(ValueError, match="eta_const"):
        run_fs_storm_svrg(fsum, 10, seed=0, eta_const=-0.1)


def test_fs_variants_converge(fsum):
    sag = run_fs_storm(fsum, 5000, seed=2)
    svrg = run_fs_storm_svrg(fsum, 5000, seed=2)
    assert sag.grad_norm[-1] < 1e-4
    assert svrg.grad_norm[-1] < 1e-4


# --- baselines ------------------------------------------------------------------


def test_sgd_est_error_is_sample_noise(quad):
    rec = run_sgd(quad, 400, eta0=0.01, decay=0.0, seed=5)
    # additive noise: est_error is the norm of the drawn noise vector,
    # whose mean square is sigma^2 * dim
    mse = float(np.mean(rec.est_error**2))
    expected = quad.sigma**2 * quad.dim
    assert 0.5 * expected <= mse <= 1.5 * expected


def test_sgd_eta_follows_decay_law(quad):
    rec = run_sgd(quad, 50, eta0=0.2, decay=0.3, seed=5)
    expected = 0.2 / np.sqrt(1.0 + 0.3 * np.arange(1, 51))
    np.testing.assert_allclose(rec.eta, expected, rtol=1e-12)
    assert np.all(rec.beta == 0.0)


def test_sgd_rejects_bad_params(quad):
    with pytest.raises(ValueError, match="eta0"):
        run_sgd(quad, 10, eta0=0.0, seed=1)
    with pytest.raises(ValueError, match="decay"):
        run_sgd(quad, 10, eta0=0.1, decay=-1.0, seed=1)


def test_storm_original_schedule_columns(quad):
    T = 300
    rec = run_storm_original(quad, T, k=0.2, w=2.0, c=5.0, seed=6)
    # eta recomputed from the recorded columns is impossible (the sampled
    # gradient sum is internal), but the coupled law beta = c * eta^2 is not
    np.testing.assert_allclose(rec.beta, np.minimum(1.0, 5.0 * rec.eta**2), rtol=1e-12)
    assert np.all(np.diff(rec.eta) <= 1e-15)


def test_storm_original_noiseless_tracks_gradient(det_quad):
    rec = run_storm_original(det_quad, 2000, k=0.5, w=1.0, c=10.0, seed=0)
    # deterministic oracle: beta mixes two exact evaluations, error stays 0
    assert float(rec.est_error.max()) <= 1e-10


def test_run_algorithm_dispatch_and_validation(quad, comp):
    rec = run_algorithm("ada_storm", quad, 20, seed=1, alpha=0.25)
    assert rec.config["algorithm"]["name"] == "ada_storm"
    with pytest.raises(ValueError, match="unknown algorithm"):
        run_algorithm("fancy", quad, 10, seed=1)
    with pytest.raises(ValueError, match="does not accept"):
        run_algorithm("ada_storm", comp, 10, seed=1)
    with pytest.raises(ValueError, match="does not accept"):
        run_algorithm("comp_storm", quad, 10, seed=1)
