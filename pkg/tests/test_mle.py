import math

import numpy as np
import pytest

from homtomo.grids import GridSpec
from homtomo.kernels import coefficient_table, fock_wavefunction
from homtomo.mle import (
    _WEIGHT_FLOOR,
    EstimationError,
    FockWeights,
    ReconstructionConfig,
    em_step,
    estimate_weights,
    log_likelihood,
    reconstruct_grid,
    shift_outcomes,
    wigner_from_weights,
)
from homtomo.simulate import Dataset, simulate
from homtomo.states import StateSpec

CAT = StateSpec.cat(2j, "odd")


def small_cat_data(n=4000, eta=0.9, seed=101):
    return simulate(CAT, eta, 8, n // 8, seed)


# -- shift_outcomes ----------------------------------------------------------

def test_shift_at_origin_is_identity():
    data = small_cat_data(800)
    np.testing.assert_array_equal(shift_outcomes(data, 0.0, 0.0), data.xs)


def test_shift_single_records():
    d1 = Dataset([0.0], [1.0], 1.0, "vacuum")
    assert shift_outcomes(d1, 1.0, 0.0)[0] == pytest.approx(0.0, abs=1e-15)
    d2 = Dataset([math.pi / 2], [0.5], 0.81, "vacuum")
    assert shift_outcomes(d2, 3.0, 2.0)[0] == pytest.approx(-1.3, abs=1e-12)


# -- log_likelihood ----------------------------------------------------------

def test_loglik_single_event_e0():
    table = coefficient_table([0.7], 3, 1.0)
    w = FockWeights(np.array([1.0, 0.0, 0.0]))
    want = math.log(fock_wavefunction(0, 0.7) ** 2) - 1.0
    assert log_likelihood(w, table) == pytest.approx(want, rel=1e-13)


def test_loglik_matches_direct_sum():
    data = small_cat_data(600)
    table = coefficient_table(data.xs, 10, data.eta)
    w = FockWeights(np.full(10, 0.1))
    mix = table.values @ w.w
    want = float(np.sum(np.log(mix))) - len(data)
    assert log_likelihood(w, table) == pytest.approx(want, rel=1e-12)


def test_loglik_two_events_at_node():
    table = coefficient_table([0.0, 0.0], 1, 1.0)
    w = FockWeights(np.array([1.0]))
    assert log_likelihood(w, table) == pytest.approx(2 * math.log(1 / math.sqrt(math.pi)) - 2, abs=1e-10)
    assert log_likelihood(w, table) == pytest.approx(-3.1447, abs=1e-4)


def test_loglik_degenerate_mixture_raises():
    # psi_1(0) = 0, so weight all on n=1 gives a zero mixture at y = 0
    table = coefficient_table([0.0], 2, 1.0)
    w = FockWeights(np.array([0.0, 1.0]))
    with pytest.raises(EstimationError):
        log_likelihood(w, table)


# -- em_step -----------------------------------------------------------------

def test_em_single_event_responsibility():
    table = coefficient_table([0.5], 2, 1.0)
    a0, a1 = table.values[0]
    out = em_step(FockWeights(np.array([0.5, 0.5])), table)
    np.testing.assert_allclose(out.w, [a0 / (a0 + a1), a1 / (a0 + a1)], rtol=1e-14)


def test_em_degenerate_weight_is_fixed_point():
    data = small_cat_data(500)
    table = coefficient_table(data.xs, 4, data.eta)
    e0 = np.zeros(4)
    e0[0] = 1.0
    out = em_step(FockWeights(e0), table)
    np.testing.assert_array_equal(out.w, e0)


def test_em_simplex_and_monotone():
    data = small_cat_data(2000)
    table = coefficient_table(shift_outcomes(data, 0.0, 0.0), 20, data.eta)
    w = FockWeights.flat(20)
    prev = log_likelihood(w, table)
    for _ in range(60):
        w = em_step(w, table)
        assert abs(w.w.sum() - 1.0) <= 1e-12
        assert np.all(w.w >= 0.0)
        cur = log_likelihood(w, table)
        assert cur >= prev - 1e-9 * abs(prev)
        prev = cur


def test_em_boundary_zeros_stay_zero():
    data = small_cat_data(1000)
    table = coefficient_table(data.xs, 8, data.eta)
    w0 = np.array([0.5, 0.0, 0.3, 0.0, 0.2, 0.0, 0.0, 0.0])
    w = FockWeights(w0)
    for _ in range(25):
        w = em_step(w, table)
        assert np.all(w.w[w0 == 0.0] == 0.0)


def test_em_tiny_weights_pinned_above_subnormal_range():
    # a nearly dead component is held at the floor instead of decaying into
    # float64 subnormals (where the compiled sweep crawls); exact zeros stay zero
    data = small_cat_data(500)
    table = coefficient_table(data.xs, 4, data.eta)
    w0 = np.array([1.0, 1e-260, 0.0, 0.0])
    out = em_step(FockWeights(w0), table)
    assert out.w[1] == _WEIGHT_FLOOR
    assert out.w[2] == 0.0 and out.w[3] == 0.0
    assert out.w[0] == pytest.approx(1.0, rel=1e-12)
    # from the floor a component with support can grow back, but never sits
    # in the open interval (0, floor)
    again = em_step(out, table)
    assert again.w[1] >= _WEIGHT_FLOOR
    cfg = ReconstructionConfig(n_max=4, max_iters=1, init=FockWeights(w0))
    w_est, _ = estimate_weights(data, 0.0, 0.0, cfg)
    np.testing.assert_array_equal(w_est.w, out.w)


# -- wigner_from_weights -----------------------------------------------------

def test_wigner_from_weights_values():
    e0 = np.zeros(5); e0[0] = 1.0
    e1 = np.zeros(5); e1[1] = 1.0
    half = np.zeros(5); half[0] = half[1] = 0.5
    assert wigner_from_weights(FockWeights(e0)) == pytest.approx(1 / math.pi, rel=1e-15)
    assert wigner_from_weights(FockWeights(e1)) == pytest.approx(-1 / math.pi, rel=1e-15)
    assert wigner_from_weights(FockWeights(half)) == pytest.approx(0.0, abs=1e-16)


def test_wigner_from_weights_bounded():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w = rng.random(12)
        w /= w.sum()
        val = wigner_from_weights(FockWeights(w))
        assert -1 / math.pi <= val <= 1 / math.pi


# -- weights / config types --------------------------------------------------

def test_fock_weights_validation():
    with pytest.raises(ValueError):
        FockWeights(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        FockWeights(np.array([1.1, -0.1]))
    with pytest.raises(ValueError):
        FockWeights(np.array([[1.0]]))


def test_config_validation():
    with pytest.raises(ValueError):
        ReconstructionConfig(n_max=0)
    with pytest.raises(ValueError):
        ReconstructionConfig(max_iters=0)
    with pytest.raises(ValueError):
        ReconstructionConfig(loglik_tol=-1.0)
    with pytest.raises(ValueError):
        ReconstructionConfig(init="warm")
    cfg = ReconstructionConfig(init=FockWeights(np.array([0.25, 0.75])), n_max=2)
    np.testing.assert_array_equal(cfg.initial_weights(), [0.25, 0.75])
    with pytest.raises(ValueError):
        ReconstructionConfig(init=FockWeights(np.array([0.25, 0.75])), n_max=3).initial_weights()


# -- estimate_weights --------------------------------------------------------

def test_estimate_recovers_vacuum():
    data = simulate(StateSpec.vacuum(), 1.0, 8, 1000, 17)
    w, diag = estimate_weights(data, 0.0, 0.0, ReconstructionConfig(n_max=12, max_iters=200))
    assert w.w[0] >= 0.9
    assert diag.iterations_run == 200
    assert diag.excluded_events == 0


def test_estimate_fixed_point_residual():
    data = simulate(StateSpec.vacuum(), 1.0, 8, 500, 23)
    cfg = ReconstructionConfig(n_max=10, max_iters=2000)
    w, _ = estimate_weights(data, 0.0, 0.0, cfg)
    table = coefficient_table(data.xs, 10, 1.0)
    residual = np.max(np.abs(em_step(w, table).w - w.w))
    assert residual < 1e-8


def test_estimate_trace_monotone_and_final():
    data = small_cat_data(2000)
    cfg = ReconstructionConfig(n_max=16, max_iters=120, trace_every=1)
    w, diag = estimate_weights(data, 0.0, 0.0, cfg)
    trace = np.array(diag.loglik_trace)
    assert len(trace) == 121
    assert np.all(np.diff(trace) >= -1e-9 * np.abs(trace[:-1]))
    table = coefficient_table(data.xs, 16, data.eta)
    assert diag.final_loglik == pytest.approx(log_likelihood(w, table), rel=1e-12)


def test_estimate_early_stop():
    data = small_cat_data(1000)
    cfg = ReconstructionConfig(n_max=10, max_iters=5000, loglik_tol=1e3)
    _, diag = estimate_weights(data, 0.0, 0.0, cfg)
    assert diag.iterations_run == 100  # first possible comparison point


def test_estimate_excludes_outliers():
    xs = np.concatenate([simulate(StateSpec.vacuum(), 1.0, 1, 500, 5).xs, [40.0]])
    data = Dataset(np.zeros(501), xs, 1.0, "vacuum")
    w, diag = estimate_weights(data, 0.0, 0.0, ReconstructionConfig(n_max=6, max_iters=50))
    assert diag.excluded_events == 1
    assert abs(w.w.sum() - 1.0) <= 1e-12


def test_estimate_all_excluded_raises():
    data = Dataset([0.0, 0.0], [40.0, -35.0], 1.0, "vacuum")
    with pytest.raises(EstimationError, match="excluded"):
        estimate_weights(data, 0.0, 0.0, ReconstructionConfig(n_max=4, max_iters=10))


def test_estimate_shift_consistency():
    data = small_cat_data(1500)
    q, p = 0.6, -0.4
    shifted = Dataset(data.thetas, shift_outcomes(data, q, p), data.eta, data.state_desc)
    cfg = ReconstructionConfig(n_max=12, max_iters=80)
    w_direct, _ = estimate_weights(data, q, p, cfg)
    w_shifted, _ = estimate_weights(shifted, 0.0, 0.0, cfg)
    np.testing.assert_array_equal(w_direct.w, w_shifted.w)


# -- reconstruct_grid --------------------------------------------------------

def test_grid_single_point_matches_scalar():
    data = small_cat_data(1200)
    cfg = ReconstructionConfig(n_max=10, max_iters=60)
    rows = reconstruct_grid(data, GridSpec.line("q", 0, 0, 1, at=0), cfg, threads=1)
    w, diag = estimate_weights(data, 0.0, 0.0, cfg)
    assert len(rows) == 1
    assert rows[0].wigner == wigner_from_weights(w)
    assert rows[0].final_loglik == diag.final_loglik
    assert rows[0].error == ""


def test_grid_vacuum_slice_tracks_truth():
    data = simulate(StateSpec.vacuum(), 1.0, 16, 6250, 31)
    cfg = ReconstructionConfig(n_max=12, max_iters=250)
    rows = reconstruct_grid(data, GridSpec.line("q", -3, 3, 7, at=0), cfg, threads=1)
    for row in rows:
        truth = math.exp(-row.q**2) / math.pi
        assert abs(row.wigner - truth) <= 0.02


def test_grid_error_rows_flagged_not_fatal():
    data = Dataset([0.0] * 20, np.linspace(-1, 1, 20), 1.0, "vacuum")
    grid = GridSpec.line("q", 0, 60, 2, at=0)  # second point shifts everything into underflow
    rows = reconstruct_grid(data, grid, ReconstructionConfig(n_max=4, max_iters=20), threads=1)
    assert rows[0].error == "" and np.isfinite(rows[0].wigner)
    assert rows[1].error != "" and math.isnan(rows[1].wigner)


def test_grid_threads_do_not_change_results():
    data = small_cat_data(1000)
    cfg = ReconstructionConfig(n_max=8, max_iters=40)
    grid = GridSpec.line("q", -1, 1, 4, at=0)
    serial = reconstruct_grid(data, grid, cfg, threads=1)
    parallel = reconstruct_grid(data, grid, cfg, threads=2)
    assert [r.wigner for r in serial] == [r.wigner for r in parallel]
    assert [r.final_loglik for r in serial] == [r.final_loglik for r in parallel]
