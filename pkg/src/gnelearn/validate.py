"""Machine-checkable property suites behind ``gnelearn validate``.

Each suite returns {"suite", "passed", "checks": [...]} with measured values,
so the CLI can emit a machine-readable report and the test suite can assert
on the same numbers. Suites: monotonicity, estimators, regularization,
decomposition, schedules.
"""

from __future__ import annotations

import numpy as np

from .builtin import builtin_game
from .game import (AugmentedPoint, CallableCost, GameSpec, QuadraticCost,
                   eval_augmented_pg, eval_pseudo_gradient,
                   eval_regularized_pg, pseudo_gradient_jacobian)
from .geometry import Box
from .learner import RunConfig, run
from .oracle import (check_regularization_bounds, decompose_estimate,
                     estimate_constants, smoothed_pg_mc)
from .schedules import RHO_CAP, preset, rate_diagnostics, schedule_at


def _check(name: str, passed: bool, **measured) -> dict:
    entry = {"name": name, "passed": bool(passed)}
    entry.update(measured)
    return entry


def _finish(suite: str, checks: list[dict]) -> dict:
    return {"suite": suite, "passed": all(c["passed"] for c in checks), "checks": checks}


# ---------------------------------------------------------------------------
# helper games for estimator statistics


def wide_box_quadratic() -> GameSpec:
    """Two players with roomy boxes so a +-5 sigma ball stays inside."""
    q1 = np.array([[2.0, 0.3, 0.2, 0.0],
                   [0.3, 1.5, 0.0, 0.1],
                   [0.2, 0.0, 0.0, 0.0],
                   [0.0, 0.1, 0.0, 0.0]])
    q2 = np.array([[0.0, 0.0, 0.4, 0.0],
                   [0.0, 0.0, 0.0, 0.2],
                   [0.4, 0.0, 1.8, 0.5],
                   [0.0, 0.2, 0.5, 2.2]])
    costs = (QuadraticCost(quad=q1, lin=np.array([0.4, -0.3, 0.0, 0.0])),
             QuadraticCost(quad=q2, lin=np.array([0.0, 0.0, -0.6, 0.8])))
    boxes = (Box(-6.0 * np.ones(2), 6.0 * np.ones(2)),
             Box(-6.0 * np.ones(2), 6.0 * np.ones(2)))
    k = np.array([[0.5, 0.0, 0.5, 0.0]])
    return GameSpec(dims=(2, 2), local_sets=boxes, costs=costs,
                    coupling_matrix=k, coupling_offset=np.array([8.0]),
                    name="wide-box-quadratic")


def hinge_game() -> GameSpec:
    """Squared-hinge costs: smooth, gradient-Lipschitz, but not quadratic.

    At the kink the Gaussian-smoothed gradient carries an order-sigma bias,
    which makes the smoothing-bias scaling testable.
    """
    def make(idx):
        def fn(x):
            return np.maximum(x[..., idx], 0.0) ** 2

        def grad(x):
            g = np.zeros_like(x)
            g[..., idx] = 2.0 * np.maximum(x[..., idx], 0.0)
            return g

        return CallableCost(fn=fn, grad=grad)

    boxes = (Box([-2.0], [2.0]), Box([-2.0], [2.0]))
    return GameSpec(dims=(1, 1), local_sets=boxes, costs=(make(0), make(1)),
                    coupling_matrix=np.zeros((1, 2)), coupling_offset=np.array([1.0]),
                    name="hinge")


# ---------------------------------------------------------------------------
# suites


def suite_monotonicity(game: GameSpec | None = None, n_pairs: int = 10_000,
                       seed: int = 0, eps_list=(1e-3, 1e-1, 1.0)) -> dict:
    """Strong monotonicity of M, its regularized extension, and map structure."""
    game = game if game is not None else builtin_game("paper-sec5-case1")
    consts = estimate_constants(game)
    rng = np.random.Generator(np.random.Philox(seed))
    lo, up = game.joint_lower(), game.joint_upper()
    pad = 0.5 * (up - lo)
    d, n = game.total_dim, game.num_constraints
    checks = []

    worst = np.inf
    for _ in range(n_pairs):
        a1 = rng.uniform(lo - pad, up + pad)
        a2 = rng.uniform(lo - pad, up + pad)
        diff = a1 - a2
        gap = float((eval_pseudo_gradient(game, a1) - eval_pseudo_gradient(game, a2)) @ diff)
        worst = min(worst, gap - consts.nu * float(diff @ diff))
    checks.append(_check("strong_monotonicity", worst >= -1e-9,
                         nu=consts.nu, worst_margin=worst, pairs=n_pairs))

    for eps in eps_list:
        worst = np.inf
        for _ in range(n_pairs):
            z1 = AugmentedPoint(rng.uniform(lo - pad, up + pad), rng.uniform(0, 2, size=n))
            z2 = AugmentedPoint(rng.uniform(lo - pad, up + pad), rng.uniform(0, 2, size=n))
            dw = eval_regularized_pg(game, z1, eps) - eval_regularized_pg(game, z2, eps)
            dz = z1.stacked() - z2.stacked()
            da, dl = z1.primal - z2.primal, z1.dual - z2.dual
            bound = consts.nu * float(da @ da) + eps * float(dl @ dl)
            worst = min(worst, float(dw @ dz) - bound)
        checks.append(_check(f"regularized_monotonicity_eps_{eps:g}", worst >= -1e-9,
                             eps=eps, worst_margin=worst, pairs=n_pairs))

    worst = 0.0
    for _ in range(200):
        a = rng.uniform(lo - pad, up + pad)
        l1, l2 = rng.uniform(0, 2, size=n), rng.uniform(0, 2, size=n)
        resid = (eval_augmented_pg(game, AugmentedPoint(a, l1 + l2))
                 - eval_augmented_pg(game, AugmentedPoint(a, l2))
                 - eval_augmented_pg(game, AugmentedPoint(a, l1))
                 + eval_augmented_pg(game, AugmentedPoint(a, np.zeros(n))))
        worst = max(worst, float(np.abs(resid).max()))
    checks.append(_check("dual_linearity", worst <= 1e-12, worst_residual=worst))

    if game.is_affine():
        jacs = [pseudo_gradient_jacobian(game, rng.uniform(lo, up)) for _ in range(3)]
        drift = max(float(np.abs(jacs[i] - jacs[0]).max()) for i in (1, 2))
        asym = float(np.abs(jacs[0] - jacs[0].T).max())
        checks.append(_check("jacobian_constant", drift <= 1e-6, drift=drift))
        checks.append(_check("jacobian_nonsymmetric", asym > 1e-6, asymmetry=asym))
    return _finish("monotonicity", checks)


def _estimator_samples(game, mu_hat, lam, sigma, n_samples, rng, mode):
    """Per-sample stacked estimates at a fixed (mu_hat, lam)."""
    d = game.total_dim
    xi = mu_hat + sigma * rng.standard_normal((n_samples, d))
    action = np.clip(xi, game.joint_lower(), game.joint_upper())
    lam_g = (action @ game.coupling_matrix.T - game.coupling_offset) @ lam
    out = np.empty((n_samples, d))
    if mode == "two_point":
        g0 = game.coupling_matrix @ mu_hat - game.coupling_offset
    for i in range(game.num_players):
        blk = game.block(i)
        u = np.asarray(game.costs[i].value(action), dtype=float) + lam_g
        if mode == "two_point":
            u = u - (float(game.costs[i].value(mu_hat)) + float(lam @ g0))
        out[:, blk] = u[:, None] * (xi[:, blk] - mu_hat[blk]) / sigma**2
    return out


def suite_estimators(seed: int = 0, n_samples: int = 100_000) -> dict:
    """Unbiasedness for the smoothed gradient and the variance-scaling laws."""
    game = wide_box_quadratic()
    rng = np.random.Generator(np.random.Philox(seed))
    mu_hat = np.array([0.3, -0.4, 0.5, 0.2])
    lam = np.array([0.4])
    exact = eval_pseudo_gradient(game, mu_hat) + game.coupling_matrix.T @ lam
    checks = []

    for mode in ("one_point", "two_point"):
        samples = _estimator_samples(game, mu_hat, lam, 0.5, n_samples, rng, mode)
        mean = samples.mean(axis=0)
        se = samples.std(axis=0, ddof=1) / np.sqrt(n_samples)
        dev = np.abs(mean - exact) / se
        checks.append(_check(f"unbiased_{mode}", bool(np.all(dev <= 4.0)),
                             max_dev_in_se=float(dev.max()), sigma=0.5,
                             n_samples=n_samples))

    sigmas = np.array([0.2, 0.1, 0.05, 0.025])
    second_moments = {"one_point": [], "two_point": []}
    for sig in sigmas:
        for mode in second_moments:
            samples = _estimator_samples(game, mu_hat, lam, sig, n_samples // 2, rng, mode)
            second_moments[mode].append(float(np.mean(np.sum(samples**2, axis=1))))
    slope_1pt = float(np.polyfit(np.log(sigmas), np.log(second_moments["one_point"]), 1)[0])
    tp = second_moments["two_point"]
    spread_2pt = max(tp) / min(tp)
    checks.append(_check("one_point_variance_slope", abs(slope_1pt + 2.0) <= 0.3,
                         slope=slope_1pt, sigmas=sigmas.tolist(),
                         second_moments=second_moments["one_point"]))
    checks.append(_check("two_point_variance_bounded", spread_2pt < 2.0,
                         spread=spread_2pt, second_moments=tp))
    return _finish("estimators", checks)


def suite_regularization(game: GameSpec | None = None,
                         eps_list=(1e-1, 1e-2, 1e-3, 1e-4)) -> dict:
    """Approximation and drift bounds along the regularization path."""
    game = game if game is not None else builtin_game("paper-sec5-case1")
    report = check_regularization_bounds(game, eps_list)
    checks = []
    for entry in report["entries"]:
        checks.append(_check(f"sq_bound_eps_{entry['eps']:g}", entry["sq_ok"],
                             primal_dist=entry["primal_dist"], bound=entry["sq_bound"]))
        checks.append(_check(f"dual_bound_eps_{entry['eps']:g}", entry["dual_ok"],
                             dual_dist=entry["dual_dist"],
                             lam_star_norm=report["lam_star_norm"]))
        if "interior_ok" in entry:
            checks.append(_check(f"interior_bound_eps_{entry['eps']:g}",
                                 entry["interior_ok"],
                                 primal_dist=entry["primal_dist"],
                                 bound=entry["interior_bound"]))
    for key in ("drift_ratio_primal", "drift_ratio_dual"):
        ratios = [entry[key] for entry in report["entries"] if key in entry]
        live = [r for r in ratios if r > 1e-8]
        bounded = (not live) or max(live) / min(live) < 10.0
        checks.append(_check(f"{key}s_bounded", bounded, ratios=ratios))
    out = _finish("regularization", checks)
    out["interior"] = report["interior"]
    return out


def suite_decomposition(game: GameSpec | None = None, seed: int = 0) -> dict:
    """Reconstruction identity plus the statistical behavior of its terms."""
    game = game if game is not None else builtin_game("paper-sec5-case1")
    checks = []

    for mode in ("one_point", "two_point"):
        sched = preset(mode, constants=(0.05, 0.5, 0.1, 0.3))
        trace = run(RunConfig(game=game, schedule=sched, horizon=1000, seed=seed,
                              record_stride=1))
        worst = 0.0
        for rec in trace.records:
            smoothed = eval_pseudo_gradient(game, rec.mu_hat) \
                + game.coupling_matrix.T @ rec.lam
            worst = max(worst, decompose_estimate(game, rec, smoothed).max_error)
        checks.append(_check(f"reconstruction_identity_{mode}", worst <= 1e-10,
                             worst_error=worst, steps=1000))

    # zero-mean residual of the two-point estimate at a fixed base point
    rng = np.random.Generator(np.random.Philox(seed + 1))
    mu_hat = game.joint_center()
    lam = np.full(game.num_constraints, 0.2)
    exact = eval_pseudo_gradient(game, mu_hat) + game.coupling_matrix.T @ lam
    samples = _estimator_samples(game, mu_hat, lam, 0.05, 100_000, rng, "two_point")
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
    dev = np.abs(mean - exact) / se
    checks.append(_check("residual_zero_mean", bool(np.all(dev <= 4.0)),
                         max_dev_in_se=float(dev.max())))

    # smoothing bias ||Q||^2 ~ sigma^2 needs a non-quadratic cost (zero for quadratics)
    hinge = hinge_game()
    kink = np.zeros(2)
    sigmas = np.array([0.2, 0.1, 0.05])
    qsq = []
    for sig in sigmas:
        est, _ = smoothed_pg_mc(hinge, kink, np.zeros(1), sig, 200_000,
                                np.random.Generator(np.random.Philox(seed + 2)))
        q = est - eval_pseudo_gradient(hinge, kink)
        qsq.append(float(q @ q))
    slope = float(np.polyfit(np.log(sigmas), np.log(qsq), 1)[0])
    checks.append(_check("smoothing_bias_slope", abs(slope - 2.0) <= 0.5,
                         slope=slope, qsq=qsq))

    # projection term collapses once the shrink margin dominates sigma
    sigma = 0.05
    corner = game.joint_upper()
    psq = {}
    for mult in (1.0, 6.0):
        rho = mult * sigma
        centers = np.concatenate([np.zeros(b.dim) if b.contains(np.zeros(b.dim)) else b.center
                                  for b in game.local_sets])
        mu_hat = np.clip(corner, centers + (1 - rho) * (game.joint_lower() - centers),
                         centers + (1 - rho) * (game.joint_upper() - centers))
        rng = np.random.Generator(np.random.Philox(seed + 3))
        xi = mu_hat + sigma * rng.standard_normal((20_000, game.total_dim))
        action = np.clip(xi, game.joint_lower(), game.joint_upper())
        lam_vec = np.full(game.num_constraints, 0.2)
        g_a = action @ game.coupling_matrix.T - game.coupling_offset
        g_x = xi @ game.coupling_matrix.T - game.coupling_offset
        total = np.zeros(xi.shape[0])
        for i in range(game.num_players):
            blk = game.block(i)
            du = (np.asarray(game.costs[i].value(action)) + g_a @ lam_vec
                  - np.asarray(game.costs[i].value(xi)) - g_x @ lam_vec)
            p_blk = du[:, None] * (xi[:, blk] - mu_hat[blk]) / sigma**2
            total += np.sum(p_blk**2, axis=1)
        psq[mult] = float(total.mean())
        if mult == 6.0:
            s_vec = (mu_hat - action) @ game.coupling_matrix.T
            s_sq = float(np.mean(np.sum(s_vec**2, axis=1)))
            k_fro_sq = float(np.sum(game.coupling_matrix**2))
            checks.append(_check("dual_projection_term_sigma_scaling",
                                 abs(s_sq / (sigma**2 * k_fro_sq) - 1.0) <= 0.1,
                                 ratio=s_sq / (sigma**2 * k_fro_sq)))
    collapse = psq[6.0] <= 0.01 * psq[1.0] if psq[1.0] > 0 else True
    checks.append(_check("projection_term_collapse", collapse,
                         p_sq_at_rho_eq_sigma=psq[1.0], p_sq_at_rho_eq_6sigma=psq[6.0]))
    return _finish("decomposition", checks)


def suite_schedules(horizon: int = 1_000_000) -> dict:
    """Preset validity, monotone decay, and summability witnesses.

    The error-sum terms decay like t^(-1-O(delta)) (and exactly 1/t for the
    two-point step-size term), so partial-sum growth ratios shrink slowly;
    the suite asserts that they shrink and reports the measured values.
    """
    checks = []
    for mode in ("one_point", "two_point"):
        for interior in (False, True):
            tag = f"{mode}{'_interior' if interior else ''}"
            cfg = preset(mode, interior=interior, constants=(1.0, 1.0, 1.0, 0.4))
            diag = rate_diagnostics(cfg)
            checks.append(_check(f"preset_valid_{tag}", diag["h"] - cfg.gamma_exp > 0,
                                 h=diag["h"], h_sharp=diag["h_sharp"],
                                 h_loose=diag["h_loose"], rate=diag["rate"]))

            ts = np.unique(np.geomspace(1, 1e6, 200).astype(int))
            vals = np.array([schedule_at(cfg, int(t)) for t in ts])
            decay_ok = bool(np.all(np.diff(vals, axis=0) < 0))
            checks.append(_check(f"monotone_decay_{tag}", decay_ok,
                                 rho_cap=RHO_CAP))

            sr = []
            for t_probe in (1000, 1_000_000):
                _, _, sig, rho = schedule_at(cfg, t_probe)
                sr.append(sig / rho)
            checks.append(_check(f"sigma_over_rho_decreases_{tag}", sr[1] < sr[0],
                                 at_1e3=sr[0], at_1e6=sr[1]))

            g, e = cfg.gamma_exp, cfg.eps_exp
            s, r = cfg.sigma_exp, cfg.rho_exp
            t = np.arange(2, horizon + 1, dtype=float)
            eps_t = cfg.eps0 / t**e
            eps_tm1 = cfg.eps0 / (t - 1) ** e
            gamma_t = cfg.gamma0 / t**g
            term = (eps_t - eps_tm1) ** 2 / (gamma_t * eps_t**3) + gamma_t * (cfg.rho0 / t**r) \
                + gamma_t**2
            if mode == "one_point":
                term = term + gamma_t**2 / (cfg.sigma0 / t**s) ** 2
            csum = np.cumsum(term)
            marks = [int(horizon / 100) - 2, int(horizon / 10) - 2, horizon - 2]
            s1, s2, s3 = csum[marks[0]], csum[marks[1]], csum[marks[2]]
            r1, r2 = s2 / s1, s3 / s2
            checks.append(_check(f"summability_witness_{tag}", r2 < r1,
                                 partial_sums=[float(s1), float(s2), float(s3)],
                                 growth_ratios=[float(r1), float(r2)],
                                 ratio_within_1pct=bool(r2 <= 1.01)))
    return _finish("schedules", checks)


SUITES = {
    "monotonicity": suite_monotonicity,
    "estimators": suite_estimators,
    "regularization": suite_regularization,
    "decomposition": suite_decomposition,
    "schedules": suite_schedules,
}


def run_suite(name: str, game: GameSpec | None = None) -> dict:
    if name not in SUITES:
        raise KeyError(f"unknown validation suite {name!r}; known: {', '.join(sorted(SUITES))}")
    fn = SUITES[name]
    if name in ("monotonicity", "regularization", "decomposition"):
        return fn(game)
    return fn()
