import numpy as np
import pytest

from gnelearn import (AugmentedPoint, Box, CallableCost, GameSpec,
                      NotStronglyMonotone, QuadraticCost, RunConfig,
                      builtin_game, check_regularization_bounds,
                      decompose_estimate, estimate_constants, fit_rate,
                      preset, run, smoothed_pg_mc, solve_regularized_vi,
                      solve_vgne)
from gnelearn.game import eval_constraint, eval_pseudo_gradient
from gnelearn.learner import IterationRecord, Trace
from gnelearn.oracle import ReferenceSolutions, _kkt_solution

CASE1_STAR = np.array([0.5246, 0.0352, 0.1252, 0.4332])
CASE2_STAR = np.array([0.3, 0.0, 0.1950, 0.4483])


# ---------------------------------------------------------------------------
# constants


def test_constants_case1(case1_constants):
    assert case1_constants.nu > 0
    assert case1_constants.lip >= case1_constants.nu


def test_constants_isotropic():
    cost = QuadraticCost(np.diag([2.0, 0.0]), np.zeros(2))
    cost2 = QuadraticCost(np.diag([0.0, 2.0]), np.zeros(2))
    game = GameSpec(dims=(1, 1), local_sets=(Box([-1.0], [1.0]), Box([-1.0], [1.0])),
                    costs=(cost, cost2), coupling_matrix=np.zeros((1, 2)),
                    coupling_offset=np.array([1.0]))
    c = estimate_constants(game)
    assert c.nu == pytest.approx(2.0, abs=1e-9)
    assert c.lip == pytest.approx(2.0, abs=1e-9)


def test_sampled_constants_bracket_exact(case1, case1_constants):
    # wrap the affine costs as opaque callables to force the sampling path
    costs = tuple(CallableCost(fn=c.value, grad=c.gradient) for c in case1.costs)
    opaque = GameSpec(dims=case1.dims, local_sets=case1.local_sets, costs=costs,
                      coupling_matrix=case1.coupling_matrix,
                      coupling_offset=case1.coupling_offset)
    assert not opaque.is_affine()
    sampled = estimate_constants(opaque, n_samples=2000, seed=3)
    assert sampled.nu >= case1_constants.nu - 1e-6
    assert sampled.lip <= case1_constants.lip + 1e-6


def test_nonmonotone_rejected():
    with pytest.raises(NotStronglyMonotone):
        estimate_constants(builtin_game("nonmonotone-test"))


# ---------------------------------------------------------------------------
# regularized solutions and the equilibrium


def test_huge_eps_kills_the_dual(case1, case1_constants):
    z = solve_regularized_vi(case1, 1e6, constants=case1_constants)
    assert np.linalg.norm(z.dual) < 1e-5


def test_path_end_matches_vgne(case1, case1_constants, case1_ref):
    z = None
    knorm = np.linalg.norm(case1.coupling_matrix, 2)
    for eps in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        alpha = min(eps, case1_constants.nu) / (case1_constants.lip + 2 * knorm + eps) ** 2
        z = solve_regularized_vi(case1, eps, tol=max(alpha * case1_constants.nu * 1e-9, 5e-15),
                                 constants=case1_constants, z0=z)
    assert np.linalg.norm(z.primal - case1_ref.primal) < 1e-2


def test_tolerance_stability_well_conditioned():
    game = builtin_game("coupled-active-quadratic")
    consts = estimate_constants(game)
    z1 = solve_regularized_vi(game, 1.0, tol=1e-10, constants=consts)
    z2 = solve_regularized_vi(game, 1.0, tol=1e-12, constants=consts)
    assert np.linalg.norm(z1.stacked() - z2.stacked()) < 1e-9


def test_regularized_solution_unique_across_starts(rng):
    game = builtin_game("coupled-active-quadratic")
    consts = estimate_constants(game)
    sols = []
    for _ in range(10):
        z0 = AugmentedPoint(rng.uniform(0, 3, size=2), rng.uniform(0, 5, size=1))
        sols.append(solve_regularized_vi(game, 0.3, tol=1e-12, constants=consts, z0=z0))
    base = sols[0].stacked()
    for z in sols[1:]:
        assert np.linalg.norm(z.stacked() - base) < 1e-9


def test_vgne_case1(case1_ref):
    assert np.abs(case1_ref.primal - CASE1_STAR).max() < 1e-3
    assert np.linalg.norm(case1_ref.dual) < 1e-9
    assert case1_ref.residual <= 1e-8
    assert "active-set" in case1_ref.method


def test_vgne_case2(case2_ref):
    assert np.abs(case2_ref.primal - CASE2_STAR).max() < 1e-3
    assert np.linalg.norm(case2_ref.dual) < 1e-9


def test_vgne_uncoupled_clamped_minimizers():
    ref = solve_vgne(builtin_game("uncoupled-quadratic"))
    # per-player separable minimizers clamped to [-1, 1]
    assert ref.primal == pytest.approx([0.5, -1.0, 1.0, -0.2], abs=1e-8)
    assert np.all(ref.dual == 0.0)


def test_vgne_coupled_active_by_enumeration():
    game = builtin_game("coupled-active-quadratic")
    a, lam = _kkt_solution(game)
    assert a == pytest.approx([0.5, 0.5], abs=1e-10)
    assert lam == pytest.approx([3.0], abs=1e-10)


def test_kkt_complementarity(case1, case1_ref, case2, case2_ref):
    for game, ref in ((case1, case1_ref), (case2, case2_ref)):
        g = eval_constraint(game, ref.primal)
        assert np.abs(ref.dual * g).max() < 1e-6


# ---------------------------------------------------------------------------
# smoothing oracle


def test_smoothed_mc_matches_quadratic_gradient(case1):
    rng = np.random.Generator(np.random.Philox(5))
    mu = np.array([0.5, 0.5, 0.5, 0.5])
    lam = np.array([0.3, 0.1])
    # sigma small enough that +-5 sigma stays inside [0,1]^4
    est, se = smoothed_pg_mc(case1, mu, lam, 0.05, 200_000, rng)
    exact = eval_pseudo_gradient(case1, mu) + case1.coupling_matrix.T @ lam
    assert np.all(np.abs(est - exact) <= 4 * se)


def test_smoothed_mc_constant_cost_is_zero():
    const = QuadraticCost(np.zeros((2, 2)), np.zeros(2), const=3.7)
    game = GameSpec(dims=(1, 1), local_sets=(Box([-4.0], [4.0]), Box([-4.0], [4.0])),
                    costs=(const, const), coupling_matrix=np.zeros((1, 2)),
                    coupling_offset=np.array([1.0]))
    rng = np.random.Generator(np.random.Philox(6))
    est, se = smoothed_pg_mc(game, np.zeros(2), np.zeros(1), 0.3, 100_000, rng)
    assert np.all(np.abs(est) <= 4 * se)


def test_smoothed_mc_se_shrinks_with_samples(case1):
    mu = np.full(4, 0.5)
    lam = np.zeros(2)
    _, se1 = smoothed_pg_mc(case1, mu, lam, 0.05, 50_000,
                            np.random.Generator(np.random.Philox(7)))
    _, se2 = smoothed_pg_mc(case1, mu, lam, 0.05, 100_000,
                            np.random.Generator(np.random.Philox(8)))
    assert np.all(se2 < se1)
    assert np.median(se1 / se2) == pytest.approx(np.sqrt(2), rel=0.2)


# ---------------------------------------------------------------------------
# decomposition


def _smoothed_exact(game, rec):
    return eval_pseudo_gradient(game, rec.mu_hat) + game.coupling_matrix.T @ rec.lam


def test_decomposition_no_clipping_means_no_projection_term(case1):
    sched = preset("two_point", constants=(0.05, 0.5, 0.02, 0.3))
    trace = run(RunConfig(game=case1, schedule=sched, horizon=50, seed=2, record_stride=1))
    clean = [r for r in trace.records
             if np.all(r.xi >= case1.joint_lower()) and np.all(r.xi <= case1.joint_upper())]
    assert clean, "expected at least one unclipped query"
    for rec in clean:
        terms = decompose_estimate(case1, rec, _smoothed_exact(case1, rec))
        assert np.array_equal(terms.p, np.zeros(4))
        assert terms.s == pytest.approx(
            case1.coupling_matrix @ (rec.mu_hat - rec.xi), abs=1e-15)


def test_decomposition_identity_both_modes(case1):
    for mode in ("one_point", "two_point"):
        sched = preset(mode, constants=(0.1, 0.5, 0.1, 0.3))
        trace = run(RunConfig(game=case1, schedule=sched, horizon=200, seed=3,
                              record_stride=1))
        for rec in trace.records:
            terms = decompose_estimate(case1, rec, _smoothed_exact(case1, rec))
            assert terms.max_error <= 1e-10


# ---------------------------------------------------------------------------
# regularization bounds


def test_bounds_case1_small_eps(case1, case1_ref, case1_constants):
    report = check_regularization_bounds(case1, [1e-3], reference=case1_ref,
                                         constants=case1_constants)
    assert report["ok"]
    assert report["interior"]
    assert report["entries"][0]["interior_ok"]


def test_bounds_nontrivial_dual():
    game = builtin_game("coupled-active-quadratic")
    consts = estimate_constants(game)
    a, lam = _kkt_solution(game)
    ref = ReferenceSolutions(primal=a, dual=lam, method="active-set", residual=0.0)
    report = check_regularization_bounds(game, [0.3, 0.1, 0.05], reference=ref,
                                         constants=consts, accuracy=1e-10)
    assert report["lam_star_norm"] == pytest.approx(3.0, abs=1e-9)
    for entry in report["entries"]:
        assert entry["sq_ok"] and entry["dual_ok"]
        assert entry["primal_dist"] > 1e-4  # the path genuinely moves here
    primal_ratios = [e["drift_ratio_primal"] for e in report["entries"][1:]]
    dual_ratios = [e["drift_ratio_dual"] for e in report["entries"][1:]]
    assert max(primal_ratios) / min(primal_ratios) < 10
    assert max(dual_ratios) / min(dual_ratios) < 10


# ---------------------------------------------------------------------------
# rate fitting


def _synthetic_traces(game, sched, times, dist_fn, n_traces=20):
    ref = np.zeros(game.total_dim)
    traces = []
    for _ in range(n_traces):
        records = []
        for t in times:
            mu = ref.copy()
            mu[0] = dist_fn(t)
            records.append(IterationRecord(
                t=int(t), mu=mu, lam=np.zeros(game.num_constraints), mu_hat=mu, xi=mu,
                action=mu, g_val=np.zeros(game.num_constraints),
                costs=np.zeros(game.num_players), u_vals=np.zeros(game.num_players),
                u0_vals=None, estimate=np.zeros(game.total_dim), gamma=0.0, eps=0.0,
                sigma=1.0, rho=0.0, mu_next=mu, lam_next=np.zeros(game.num_constraints)))
        cfg = RunConfig(game=game, schedule=sched, horizon=int(times[-1]), seed=0)
        traces.append(Trace(records=tuple(records), config=cfg))
    return traces, ref


def test_fit_rate_exact_power_law(case1):
    sched = preset("two_point", constants=(0.1, 0.5, 0.1, 0.3))
    times = [t for t in [100, 200, 500, 1000, 2000, 5000, 10000]]
    traces, ref = _synthetic_traces(case1, sched, times, lambda t: t ** -0.25)
    fit = fit_rate(traces, ref, (100, 10000))
    assert fit.slope == pytest.approx(-0.5, abs=1e-6)


def test_fit_rate_constant_traces(case1):
    sched = preset("two_point", constants=(0.1, 0.5, 0.1, 0.3))
    times = [100, 200, 500, 1000, 2000]
    traces, ref = _synthetic_traces(case1, sched, times, lambda t: 0.25)
    fit = fit_rate(traces, ref, (100, 2000))
    assert fit.slope == pytest.approx(0.0, abs=1e-9)


def test_fit_rate_input_errors(case1):
    sched = preset("two_point", constants=(0.1, 0.5, 0.1, 0.3))
    times = [100, 200, 500, 1000, 2000]
    traces, ref = _synthetic_traces(case1, sched, times, lambda t: t ** -0.25)
    with pytest.raises(ValueError):
        fit_rate(traces[:5], ref, (100, 2000))
    with pytest.raises(ValueError):
        fit_rate(traces, ref, (100, 250))  # only two checkpoints inside
