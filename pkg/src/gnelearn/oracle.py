"""Full-information reference computations backing every property check.

Nothing here is available to the learner; these routines know the cost
gradients and the constraint matrix and are used to compute ground truth:
regularized solutions, the equilibrium itself (two independent methods,
cross-checked), monotonicity constants, exact/Monte-Carlo smoothed gradients,
the stochastic-update decomposition, and empirical convergence-rate fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (AugmentedPoint, GameSpec, eval_pseudo_gradient,
                   pseudo_gradient_jacobian)
from .learner import IterationRecord, log_checkpoints


class NotStronglyMonotone(ValueError):
    """The game's pseudo-gradient failed the strong-monotonicity requirement."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class MethodDisagreement(RuntimeError):
    """Independent solution methods disagree; points at a modeling bug."""


@dataclass(frozen=True)
class GameConstants:
    """Strong-monotonicity modulus nu and Lipschitz constant of the pseudo-gradient."""

    nu: float
    lip: float


@dataclass(frozen=True, eq=False)
class ReferenceSolutions:
    """Equilibrium pair (a*, lam*) with the method tag and the fixed-point residual."""

    primal: np.ndarray
    dual: np.ndarray
    method: str
    residual: float

    def __post_init__(self):
        object.__setattr__(self, "primal", np.asarray(self.primal, dtype=float))
        object.__setattr__(self, "dual", np.asarray(self.dual, dtype=float))


def _affine_model(game: GameSpec) -> tuple[np.ndarray, np.ndarray]:
    """M(a) = G a + b for affine pseudo-gradients (exact via central differences)."""
    cached = getattr(game, "_affine_model_cache", None)
    if cached is None:
        zero = np.zeros(game.total_dim)
        b = eval_pseudo_gradient(game, zero)
        g = pseudo_gradient_jacobian(game, zero, step=1.0)
        cached = (g, b)
        object.__setattr__(game, "_affine_model_cache", cached)
    return cached


def estimate_constants(game: GameSpec, n_samples: int = 10_000,
                       seed: int = 0) -> GameConstants:
    """Monotonicity modulus and Lipschitz constant of M.

    Affine games get the exact values from the Jacobian (smallest eigenvalue
    of the symmetric part, largest singular value). Other games get sampled
    two-point estimates over random pairs in the joint box; sampling can only
    overestimate the true infimum and underestimate the true supremum.

    Raises NotStronglyMonotone when the estimated modulus is not positive.
    """
    if game.is_affine():
        jac = pseudo_gradient_jacobian(game, game.joint_center(), step=1.0)
        nu = float(np.linalg.eigvalsh(0.5 * (jac + jac.T)).min())
        lip = float(np.linalg.norm(jac, 2))
    else:
        rng = np.random.Generator(np.random.Philox(seed))
        lo, up = game.joint_lower(), game.joint_upper()
        pad = 0.1 * (up - lo)
        nu, lip = np.inf, 0.0
        for _ in range(n_samples):
            a1 = rng.uniform(lo - pad, up + pad)
            a2 = rng.uniform(lo - pad, up + pad)
            diff = a1 - a2
            nsq = float(diff @ diff)
            if nsq < 1e-16:
                continue
            dm = eval_pseudo_gradient(game, a1) - eval_pseudo_gradient(game, a2)
            nu = min(nu, float(dm @ diff) / nsq)
            lip = max(lip, float(np.linalg.norm(dm)) / np.sqrt(nsq))
        nu = float(nu)
    if nu <= 0:
        raise NotStronglyMonotone(
            f"pseudo-gradient is not strongly monotone (estimated modulus {nu:.3e} <= 0)")
    return GameConstants(nu=nu, lip=lip)


def _w_evaluator(game: GameSpec):
    """Return W(a, lam) -> (primal_block, dual_block), specialized for affine games."""
    k, l = game.coupling_matrix, game.coupling_offset
    kt = k.T
    if game.is_affine():
        gm, bm = _affine_model(game)

        def w_eval(a, lam):
            return gm @ a + bm + kt @ lam, l - k @ a
    else:
        def w_eval(a, lam):
            return eval_pseudo_gradient(game, a) + kt @ lam, l - k @ a
    return w_eval


def solve_regularized_vi(game: GameSpec, eps: float, tol: float = 1e-10, *,
                         constants: GameConstants | None = None,
                         z0: AugmentedPoint | None = None,
                         max_iter: int = 10_000_000) -> AugmentedPoint:
    """Solve the regularized problem by fixed-step projected gradient.

    Iterates z <- Proj_{A x R+^n}[z - alpha W_eps(z)] with
    alpha = min(eps, nu) / L_W^2, where L_W = lip + 2||K|| + eps upper-bounds
    the Lipschitz constant of the regularized map (the eps term matters for
    large regularization). Stops when the update norm drops below ``tol``;
    the solution is unique because the regularized map is strongly monotone
    with modulus min(nu, eps).

    The per-iteration contraction scales like min(eps, nu)^2 / L_W^2, so very
    small eps is only practical when the warm start is already near the
    solution (e.g. along a regularization path, or when the coupling
    constraint is inactive at the equilibrium and the path is constant).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    consts = constants if constants is not None else estimate_constants(game)
    knorm = float(np.linalg.norm(game.coupling_matrix, 2))
    l_w = consts.lip + 2.0 * knorm + eps
    alpha = min(eps, consts.nu) / l_w**2
    lo, up = game.joint_lower(), game.joint_upper()
    if z0 is None:
        a = game.joint_center()
        lam = np.zeros(game.num_constraints)
    else:
        a, lam = z0.primal.copy(), z0.dual.copy()
    tol_sq = tol * tol
    shift_sq = np.inf
    if game.is_affine():
        gm, bm = _affine_model(game)
        k, kt = game.coupling_matrix, game.coupling_matrix.T
        l_vec = game.coupling_offset
        one_minus = 1.0 - alpha * eps
        for _ in range(max_iter):
            a_next = np.clip(a - alpha * (gm @ a + bm + kt @ lam), lo, up)
            lam_next = np.maximum(one_minus * lam - alpha * (l_vec - k @ a), 0.0)
            da = a_next - a
            dl = lam_next - lam
            shift_sq = float(da @ da) + float(dl @ dl)
            a, lam = a_next, lam_next
            if shift_sq < tol_sq:
                return AugmentedPoint(primal=a, dual=lam)
    else:
        w_eval = _w_evaluator(game)
        for _ in range(max_iter):
            w_pr, w_du = w_eval(a, lam)
            a_next = np.clip(a - alpha * w_pr, lo, up)
            lam_next = np.maximum(lam - alpha * (w_du + eps * lam), 0.0)
            da = a_next - a
            dl = lam_next - lam
            shift_sq = float(da @ da) + float(dl @ dl)
            a, lam = a_next, lam_next
            if shift_sq < tol_sq:
                return AugmentedPoint(primal=a, dual=lam)
    raise ConvergenceError(
        f"projected gradient did not converge within {max_iter} iterations for eps={eps}",
        residual=float(np.sqrt(shift_sq)))


def _unregularized_residual(game: GameSpec, a, lam, consts: GameConstants) -> float:
    """||z - Proj[z - alpha W(z)]|| with the solver's unregularized step."""
    knorm = float(np.linalg.norm(game.coupling_matrix, 2))
    alpha = consts.nu / (consts.lip + 2.0 * knorm) ** 2
    w_eval = _w_evaluator(game)
    w_pr, w_du = w_eval(a, lam)
    a_next = np.clip(a - alpha * w_pr, game.joint_lower(), game.joint_upper())
    lam_next = np.maximum(lam - alpha * w_du, 0.0)
    return float(np.sqrt(np.sum((a_next - a) ** 2) + np.sum((lam_next - lam) ** 2)))


def _box_state_assignments(num_free_dims: int):
    """All {interior, lower, upper} assignments over the coordinates."""
    if num_free_dims == 0:
        yield ()
        return
    for rest in _box_state_assignments(num_free_dims - 1):
        for state in (0, -1, 1):
            yield rest + (state,)


def _kkt_enumeration(game: GameSpec, eps: float = 0.0, tol: float = 1e-9):
    """Enumerate active sets of the affine complementarity system.

    Binary/ternary choices: each coordinate is interior, at its lower, or at
    its upper bound; each coupling row is slack or tight (tight means
    eps * lam_j = l_j - (K a)_j, which at eps = 0 is the usual active row).
    Returns every consistent KKT point as an (a, lam) pair.
    """
    if not game.is_affine():
        raise ValueError("active-set enumeration needs an affine pseudo-gradient")
    d, n = game.total_dim, game.num_constraints
    if n + 2 * d > 24:
        raise ValueError("active-set enumeration capped at n + 2D <= 24 binary choices")
    gm, bm = _affine_model(game)
    k, l = game.coupling_matrix, game.coupling_offset
    lo, up = game.joint_lower(), game.joint_upper()
    solutions = []
    for states in _box_state_assignments(d):
        free = [i for i, s in enumerate(states) if s == 0]
        fixed_val = np.where(np.asarray(states) < 0, lo, up)
        for mask in range(1 << n):
            tight = [j for j in range(n) if mask >> j & 1]
            nf, nt = len(free), len(tight)
            a = fixed_val.copy()
            for i in free:
                a[i] = 0.0
            # unknowns: a[free], lam[tight]; stationarity on free coords,
            # eps*lam_j - (l - K a)_j = 0 on tight rows
            size = nf + nt
            mat = np.zeros((size, size))
            rhs = np.zeros(size)
            mat[:nf, :nf] = gm[np.ix_(free, free)]
            mat[:nf, nf:] = k[:, free].T[:, tight] if nt else np.zeros((nf, 0))
            rhs[:nf] = -(gm[:, [i for i in range(d) if states[i] != 0]]
                         @ a[[i for i in range(d) if states[i] != 0]]
                         + bm)[free] if nf else np.zeros(0)
            if nt:
                mat[nf:, :nf] = k[np.ix_(tight, free)]
                mat[nf:, nf:] = eps * np.eye(nt)
                rhs[nf:] = l[tight] - k[np.ix_(tight, [i for i in range(d) if states[i] != 0])] \
                    @ a[[i for i in range(d) if states[i] != 0]]
            try:
                sol = np.linalg.solve(mat, rhs) if size else np.zeros(0)
            except np.linalg.LinAlgError:
                continue
            a[free] = sol[:nf]
            lam = np.zeros(n)
            lam[tight] = sol[nf:]
            # feasibility and multiplier signs
            if np.any(a < lo - tol) or np.any(a > up + tol):
                continue
            if np.any(lam < -tol):
                continue
            slack = l - k @ a
            if np.any(slack < -tol):
                continue
            if eps == 0.0 and any(slack[j] > tol and lam[j] > tol for j in range(n)):
                continue
            grad = gm @ a + bm + k.T @ lam
            ok = True
            for i, s in enumerate(states):
                if s == 0:
                    if abs(grad[i]) > 1e-6:
                        ok = False
                        break
                elif s < 0:
                    if grad[i] < -1e-6:  # at the lower bound the gradient pushes down
                        ok = False
                        break
                else:
                    if grad[i] > 1e-6:
                        ok = False
                        break
            if not ok:
                continue
            solutions.append((a.copy(), np.maximum(lam, 0.0)))
    return solutions


def _kkt_solution(game: GameSpec, eps: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Unique primal and least-norm dual from the active-set enumeration."""
    sols = _kkt_enumeration(game, eps)
    if not sols:
        raise ConvergenceError("active-set enumeration found no KKT point", residual=np.inf)
    primal = sols[0][0]
    for a, _ in sols[1:]:
        if np.linalg.norm(a - primal, np.inf) > 1e-6:
            raise MethodDisagreement(
                "active-set enumeration produced distinct primal points; "
                "the game may not be strongly monotone")
    lam = min((s[1] for s in sols), key=lambda v: float(np.linalg.norm(v)))
    return primal, lam


def solve_vgne(game: GameSpec, tol: float = 1e-8) -> ReferenceSolutions:
    """Compute the equilibrium pair by two independent methods and cross-check.

    Method one follows the regularization path eps = 1e-2 .. 1e-6 with warm
    starts, accepting the eps = 1e-6 primal after checking that consecutive
    path points are not drifting apart. Method two (affine games small enough
    to enumerate) solves the piecewise-linear KKT system by active-set
    enumeration and keeps the least-norm multiplier. The two primals must
    agree within 10 * tol.
    """
    consts = estimate_constants(game)
    knorm = float(np.linalg.norm(game.coupling_matrix, 2))
    path_eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
    z = None
    path_points = []
    for eps in path_eps:
        l_w = consts.lip + 2.0 * knorm + eps
        alpha = min(eps, consts.nu) / l_w**2
        update_tol = max(alpha * consts.nu * 0.1 * tol, 5e-15)
        z = solve_regularized_vi(game, eps, tol=update_tol, constants=consts, z0=z)
        path_points.append(z)
    drift_late = float(np.linalg.norm(path_points[-1].primal - path_points[-2].primal))
    drift_prev = float(np.linalg.norm(path_points[-2].primal - path_points[-3].primal))
    if drift_late > max(drift_prev, 10 * tol):
        raise ConvergenceError("regularization path is not settling", residual=drift_late)
    a_star, lam_star = path_points[-1].primal, path_points[-1].dual
    method = "regularization-path"

    if game.is_affine() and game.num_constraints + 2 * game.total_dim <= 24:
        a_kkt, lam_kkt = _kkt_solution(game)
        gap = float(np.linalg.norm(a_star - a_kkt, np.inf))
        if gap > 10 * tol:
            raise MethodDisagreement(
                f"regularization path and active-set enumeration disagree: "
                f"|a_path - a_kkt|_inf = {gap:.3e} > {10 * tol:.3e}")
        a_star, lam_star = a_kkt, lam_kkt  # enumeration is exact to rounding
        method = "regularization-path+active-set"

    residual = _unregularized_residual(game, a_star, lam_star, consts)
    ref = ReferenceSolutions(primal=a_star, dual=lam_star, method=method, residual=residual)
    _validate_reference(game, ref)
    return ref


def _validate_reference(game: GameSpec, ref: ReferenceSolutions) -> None:
    if not (np.all(ref.primal >= game.joint_lower() - 1e-9)
            and np.all(ref.primal <= game.joint_upper() + 1e-9)):
        raise ConvergenceError("reference primal escapes the joint box", residual=np.inf)
    slack = game.coupling_matrix @ ref.primal - game.coupling_offset
    if np.any(slack > 1e-8):
        raise ConvergenceError("reference primal violates the coupling constraint",
                               residual=float(slack.max()))
    if ref.residual > 1e-8:
        raise ConvergenceError("reference point fails the fixed-point residual check",
                               residual=ref.residual)


def smoothed_pg_mc(game: GameSpec, mu_hat, lam, sigma: float, n_samples: int,
                   rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of the Gaussian-smoothed own-block payoff gradients.

    Uses the score identity E[U^i(xi, lam) (xi^i - mu^i)/sigma^2] with the raw
    (unprojected) Gaussian query xi ~ Normal(mu_hat, sigma^2 I). Returns the
    stacked estimate and its per-coordinate standard errors.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    mu_hat = np.asarray(mu_hat, dtype=float)
    lam = np.asarray(lam, dtype=float)
    xi = mu_hat + sigma * rng.standard_normal((n_samples, game.total_dim))
    g_vals = xi @ game.coupling_matrix.T - game.coupling_offset
    lam_g = g_vals @ lam
    est = np.empty(game.total_dim)
    se = np.empty(game.total_dim)
    for i in range(game.num_players):
        blk = game.block(i)
        u = np.asarray(game.costs[i].value(xi), dtype=float) + lam_g
        scores = (xi[:, blk] - mu_hat[blk]) / sigma**2
        samples = u[:, None] * scores
        est[blk] = samples.mean(axis=0)
        se[blk] = samples.std(axis=0, ddof=1) / np.sqrt(n_samples)
    return est, se


@dataclass(frozen=True, eq=False)
class DecompositionTerms:
    """Additive split of a recorded gradient estimate.

    w_pr is the exact augmented map at (mu_hat, lam); q the smoothing bias;
    p the projection term; r the zero-mean sampling residual; s the dual-side
    projection term K(mu_hat - a). The reconstruction w_pr + q + p + r equals
    the recorded estimate up to rounding.
    """

    w_pr: np.ndarray
    q: np.ndarray
    p: np.ndarray
    r: np.ndarray
    s: np.ndarray
    reconstruction: np.ndarray
    max_error: float


def decompose_estimate(game: GameSpec, record: IterationRecord,
                       smoothed: np.ndarray) -> DecompositionTerms:
    """Split the recorded estimate into exact-map, bias, projection, and noise parts.

    ``smoothed`` is the smoothed own-block gradient at (mu_hat, lam) — exact
    where available, Monte Carlo otherwise; it cancels out of the
    reconstruction identity, which therefore holds to rounding regardless of
    its accuracy.
    """
    smoothed = np.asarray(smoothed, dtype=float)
    lam = record.lam
    k = game.coupling_matrix
    sigma2 = record.sigma**2
    w_pr = eval_pseudo_gradient(game, record.mu_hat) + k.T @ lam
    g_xi = k @ record.xi - game.coupling_offset
    lam_g_xi = float(lam @ g_xi)
    u_a = record.costs + float(lam @ record.g_val)
    dims = np.asarray(game.dims)
    offsets = (record.xi - record.mu_hat) / sigma2
    u_xi = np.array([game.costs[i].value(record.xi) for i in range(game.num_players)],
                    dtype=float) + lam_g_xi
    if record.u0_vals is None:
        m_hat = np.repeat(u_xi, dims) * offsets
    else:
        m_hat = np.repeat(u_xi - record.u0_vals, dims) * offsets
    p = np.repeat(u_a - u_xi, dims) * offsets
    q = smoothed - w_pr
    r = m_hat - smoothed
    s = k @ (record.mu_hat - record.action)
    recon = w_pr + q + p + r
    err = float(np.linalg.norm(recon - record.estimate, np.inf))
    return DecompositionTerms(w_pr=w_pr, q=q, p=p, r=r, s=s,
                              reconstruction=recon, max_error=err)


def check_regularization_bounds(game: GameSpec, eps_list, *,
                                reference: ReferenceSolutions | None = None,
                                constants: GameConstants | None = None,
                                accuracy: float = 1e-9) -> dict:
    """Verify the approximation bounds along a regularization path.

    For each eps (descending, warm-started) the report records whether
    ||a* - a_eps||^2 <= eps ||lam*||^2 / nu, whether ||lam* - lam_eps|| stays
    below ||lam*||, and — when a* is interior to the joint box — the linear
    interior bound ||a* - a_eps|| <= eps ||lam*|| L / (||K|| nu). Consecutive
    path points feed the drift-ratio witnesses
    ||a_k - a_{k-1}||^2 eps_k / (eps_k - eps_{k-1})^2 and
    ||lam_k - lam_{k-1}||^2 eps_k^2 / (eps_k - eps_{k-1})^2, which should stay
    bounded along the list.
    """
    consts = constants if constants is not None else estimate_constants(game)
    ref = reference if reference is not None else solve_vgne(game)
    knorm = float(np.linalg.norm(game.coupling_matrix, 2))
    lam_norm = float(np.linalg.norm(ref.dual))
    margin = min(float(np.min(ref.primal - game.joint_lower())),
                 float(np.min(game.joint_upper() - ref.primal)))
    interior = margin > 1e-6 and knorm > 0
    eps_sorted = sorted(float(e) for e in eps_list)[::-1]
    slack = 10 * accuracy
    z = None
    entries = []
    prev = None
    for eps in eps_sorted:
        l_w = consts.lip + 2.0 * knorm + eps
        alpha = min(eps, consts.nu) / l_w**2
        update_tol = max(alpha * min(eps, consts.nu) * accuracy, 5e-15)
        z = solve_regularized_vi(game, eps, tol=update_tol, constants=consts, z0=z)
        d_primal = float(np.linalg.norm(ref.primal - z.primal))
        d_dual = float(np.linalg.norm(ref.dual - z.dual))
        entry = {
            "eps": eps,
            "primal_dist": d_primal,
            "dual_dist": d_dual,
            "sq_bound": eps * lam_norm**2 / consts.nu,
            "sq_ok": d_primal**2 <= eps * lam_norm**2 / consts.nu + slack,
            "dual_ok": d_dual <= lam_norm + slack,
        }
        if interior:
            lin_bound = eps * lam_norm * consts.lip / (knorm * consts.nu)
            entry["interior_bound"] = lin_bound
            entry["interior_ok"] = d_primal <= lin_bound + slack
        if prev is not None:
            d_eps = eps - prev["eps"]
            da = float(np.linalg.norm(z.primal - prev["z"].primal))
            dl = float(np.linalg.norm(z.dual - prev["z"].dual))
            entry["drift_ratio_primal"] = da**2 * eps / d_eps**2
            entry["drift_ratio_dual"] = dl**2 * eps**2 / d_eps**2
        entries.append(entry)
        prev = {"eps": eps, "z": z}
    report = {
        "nu": consts.nu,
        "lip": consts.lip,
        "k_norm": knorm,
        "lam_star_norm": lam_norm,
        "interior": interior,
        "entries": entries,
        "ok": all(e["sq_ok"] and e["dual_ok"] and e.get("interior_ok", True)
                  for e in entries),
    }
    return report


@dataclass(frozen=True, eq=False)
class RateFit:
    """Least-squares slope of log mean-squared distance against log t."""

    slope: float
    stderr: float
    times: np.ndarray
    mean_sq: np.ndarray


def _common_checkpoint_times(traces, t_window) -> np.ndarray:
    lo, hi = t_window
    common = set(int(t) for t in traces[0].times())
    for tr in traces[1:]:
        common &= set(int(t) for t in tr.times())
    grid = set(log_checkpoints(max(int(t) for t in common)))
    times = sorted(t for t in common if lo <= t <= hi and t in grid)
    return np.asarray(times, dtype=int)


def fit_rate(traces, reference, t_window: tuple[int, int]) -> RateFit:
    """Fit the empirical decay exponent of an ensemble of runs.

    Averages ||mu(t) - a*||^2 across at least 20 traces at the log-spaced
    checkpoints inside ``t_window`` and returns the least-squares slope of
    log(mean) against log(t) together with its standard error.
    """
    if len(traces) < 20:
        raise ValueError(f"rate fits need at least 20 traces, got {len(traces)}")
    ref = np.asarray(reference, dtype=float)
    times = _common_checkpoint_times(traces, t_window)
    if times.size < 5:
        raise ValueError(f"need at least 5 checkpoints in the window, found {times.size}")
    sq = np.zeros(times.size)
    for tr in traces:
        t_to_state = {int(r.t): r.mu_next for r in tr.records}
        for j, t in enumerate(times):
            diff = t_to_state[int(t)] - ref
            sq[j] += float(diff @ diff)
    mean_sq = sq / len(traces)
    x = np.log(times.astype(float))
    y = np.log(np.maximum(mean_sq, 1e-300))
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return RateFit(slope=float(coeffs[0]), stderr=float(np.sqrt(cov[0, 0])),
                   times=times, mean_sq=mean_sq)


def mean_distance_curve(traces, reference) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ensemble mean and standard deviation of ||mu(t) - a*|| at common times."""
    ref = np.asarray(reference, dtype=float)
    common = set(int(t) for t in traces[0].times())
    for tr in traces[1:]:
        common &= set(int(t) for t in tr.times())
    times = np.asarray(sorted(common), dtype=int)
    dists = np.empty((len(traces), times.size))
    for i, tr in enumerate(traces):
        t_to_state = {int(r.t): r.mu_next for r in tr.records}
        for j, t in enumerate(times):
            dists[i, j] = np.linalg.norm(t_to_state[int(t)] - ref)
    return times, dists.mean(axis=0), dists.std(axis=0)
