"""Payoff-based primal-dual learning loop.

One step: project the primal iterate onto the shrunk boxes, sample a Gaussian
query around it, play the projected query, observe per-player payoffs and the
shared constraint value, form the one- or two-point gradient estimate, then
take projected primal steps and a single regularized dual step shared by all
players (the dual iterate is common knowledge, as if broadcast by a
coordinator).

The loop never evaluates gradients of the costs: its only interface to the
game is payoff values at played points and the constraint observation.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from .estimators import PlayerStreams
from .game import GameSpec
from .geometry import default_shrink_center
from .schedules import ScheduleConfig, schedule_at


class LearnerDivergence(RuntimeError):
    """A payoff or estimate became non-finite at step t."""

    def __init__(self, t: int, what: str, value):
        self.t = t
        self.what = what
        self.value = value
        super().__init__(f"non-finite {what} at step t={t}: {value}")


@dataclass(frozen=True, eq=False)
class LearnerState:
    """Primal iterates (concatenated blocks), the shared dual iterate, and a step count."""

    mu: np.ndarray
    lam: np.ndarray
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        if np.any(self.lam < 0):
            raise ValueError("dual iterate must be componentwise nonnegative")


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """Exact values used by the update at step t; nothing is recomputed later."""

    t: int
    mu: np.ndarray        # state entering the step
    lam: np.ndarray       # dual entering the step (used in the payoffs)
    mu_hat: np.ndarray
    xi: np.ndarray
    action: np.ndarray
    g_val: np.ndarray     # K action - l, the observed constraint value
    costs: np.ndarray     # per-player J^i(action)
    u_vals: np.ndarray    # per-player Lagrangian payoffs at the action
    u0_vals: np.ndarray | None  # payoffs at mu_hat (two-point mode only)
    estimate: np.ndarray  # stacked per-player gradient estimates
    gamma: float
    eps: float
    sigma: float
    rho: float
    mu_next: np.ndarray
    lam_next: np.ndarray
    dist_vgne: float | None = None


@dataclass(frozen=True, eq=False)
class RunConfig:
    game: GameSpec
    schedule: ScheduleConfig
    horizon: int
    seed: int
    mu0: np.ndarray | None = None
    lam0: np.ndarray | None = None
    record_stride: int = 1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        if self.record_stride < 0:
            raise ValueError("record stride must be nonnegative (0 keeps checkpoints only)")
        mu0 = self.game.joint_center() if self.mu0 is None else np.asarray(self.mu0, dtype=float)
        lam0 = (np.zeros(self.game.num_constraints) if self.lam0 is None
                else np.asarray(self.lam0, dtype=float))
        if mu0.shape != (self.game.total_dim,):
            raise ValueError("mu0 has the wrong dimension")
        if not (np.all(mu0 >= self.game.joint_lower()) and np.all(mu0 <= self.game.joint_upper())):
            raise ValueError("mu0 must lie in the joint action set")
        if lam0.shape != (self.game.num_constraints,) or np.any(lam0 < 0):
            raise ValueError("lam0 must be a nonnegative n-vector")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "lam0", lam0)

    def initial_state(self) -> LearnerState:
        return LearnerState(mu=self.mu0.copy(), lam=self.lam0.copy(), t=0)

    def describe(self) -> dict:
        return {
            "game": self.game.describe(),
            "schedule": {
                "mode": self.schedule.mode,
                "constants": [self.schedule.gamma0, self.schedule.eps0,
                              self.schedule.sigma0, self.schedule.rho0],
                "exponents": [self.schedule.gamma_exp, self.schedule.eps_exp,
                              self.schedule.sigma_exp, self.schedule.rho_exp],
                "delta": self.schedule.delta,
            },
            "horizon": self.horizon,
            "seed": self.seed,
            "mu0": self.mu0.tolist(),
            "lam0": self.lam0.tolist(),
            "record_stride": self.record_stride,
        }

    def hash(self) -> str:
        payload = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Trace:
    """Thinned sequence of iteration records from one run."""

    records: tuple[IterationRecord, ...]
    config: RunConfig

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records], dtype=int)

    def states(self) -> np.ndarray:
        """Post-update primal states mu(t), one row per record."""
        return np.stack([r.mu_next for r in self.records])

    def duals(self) -> np.ndarray:
        return np.stack([r.lam_next for r in self.records])

    def distances(self, reference) -> np.ndarray:
        ref = np.asarray(reference, dtype=float)
        return np.linalg.norm(self.states() - ref, axis=1)

    def max_dual_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.duals(), axis=1)))


def log_checkpoints(horizon: int) -> list[int]:
    """{1, 2, 5} x 10^k grid up to the horizon, final step included."""
    pts = set()
    base = 1
    while base <= horizon:
        for m in (1, 2, 5):
            if m * base <= horizon:
                pts.add(m * base)
        base *= 10
    pts.add(horizon)
    return sorted(pts)


def _loop_context(game: GameSpec) -> dict:
    """Per-game constants hoisted out of the iteration loop (cached on the game)."""
    ctx = getattr(game, "_loop_ctx_cache", None)
    if ctx is None:
        centers = np.concatenate([default_shrink_center(b) for b in game.local_sets])
        lo, up = game.joint_lower(), game.joint_upper()
        ctx = {
            "lo": lo,
            "up": up,
            "shrink_center": centers,
            "lo_gap": lo - centers,
            "up_gap": up - centers,
            "rep_idx": np.repeat(np.arange(game.num_players), np.asarray(game.dims)),
            "blocks": tuple(game.block(i) for i in range(game.num_players)),
            "dims": tuple(game.dims),
            "cost_fns": tuple(c.value for c in game.costs),
        }
        object.__setattr__(game, "_loop_ctx_cache", ctx)
    return ctx


def step(game: GameSpec, state: LearnerState, cfg: ScheduleConfig, streams: PlayerStreams,
         schedule_override: tuple[float, float, float, float] | None = None,
         force_xi: np.ndarray | None = None) -> tuple[LearnerState, IterationRecord]:
    """Advance the learner by one iteration.

    The schedule is evaluated at t = state.t + 1 so the very first step uses
    index 1. ``schedule_override`` and ``force_xi`` bypass the schedule and the
    Gaussian draw; they exist for tests that pin the randomness.
    """
    t = state.t + 1
    gamma, eps, sigma, rho = (schedule_at(cfg, t) if schedule_override is None
                              else schedule_override)
    if sigma <= 0:
        raise ValueError("sampling width must stay positive")
    two_point = cfg.mode == "two_point"
    ctx = _loop_context(game)
    lo, up = ctx["lo"], ctx["up"]
    centers, lo_gap, up_gap = ctx["shrink_center"], ctx["lo_gap"], ctx["up_gap"]
    blocks, dims, cost_fns = ctx["blocks"], ctx["dims"], ctx["cost_fns"]
    k, l = game.coupling_matrix, game.coupling_offset
    mu, lam = state.mu, state.lam

    scale = 1.0 - rho
    mu_hat = np.clip(mu, centers + scale * lo_gap, centers + scale * up_gap)

    if force_xi is not None:
        xi = np.asarray(force_xi, dtype=float).copy()
    else:
        xi = np.empty(mu.shape)
        for i, blk in enumerate(blocks):
            xi[blk] = mu_hat[blk] + sigma * streams[i].standard_normal(dims[i])
    action = np.clip(xi, lo, up)

    g_val = k @ action - l
    # overflow is detected and raised as a diagnosable error, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        costs = np.array([fn(action) for fn in cost_fns], dtype=float)
        u_vals = costs + float(lam @ g_val)
        if two_point:
            costs0 = np.array([fn(mu_hat) for fn in cost_fns], dtype=float)
            u0_vals = costs0 + float(lam @ (k @ mu_hat - l))
            coeff = u_vals - u0_vals
        else:
            u0_vals = None
            coeff = u_vals

        if not np.all(np.isfinite(coeff)):
            raise LearnerDivergence(t, "payoff",
                                    u_vals if u0_vals is None else (u_vals, u0_vals))

        estimate = coeff[ctx["rep_idx"]] * (xi - mu_hat) / (sigma * sigma)
    if not np.all(np.isfinite(estimate)):
        raise LearnerDivergence(t, "gradient estimate", estimate)

    mu_next = np.clip(mu - gamma * estimate, lo, up)
    lam_next = np.maximum(lam - gamma * (eps * lam - g_val), 0.0)

    record = IterationRecord(
        t=t, mu=mu, lam=lam, mu_hat=mu_hat, xi=xi, action=action,
        g_val=g_val, costs=costs, u_vals=u_vals, u0_vals=u0_vals, estimate=estimate,
        gamma=gamma, eps=eps, sigma=sigma, rho=rho, mu_next=mu_next, lam_next=lam_next,
    )
    return LearnerState(mu=mu_next, lam=lam_next, t=t), record


def run(cfg: RunConfig) -> Trace:
    """Run the learner for the configured horizon; deterministic given the seed.

    The trace keeps every ``record_stride``-th step plus the log-spaced
    checkpoint steps and the final step (stride 0 keeps checkpoints only).
    """
    game, sched = cfg.game, cfg.schedule
    streams = PlayerStreams.from_seed(cfg.seed, game.num_players)
    state = cfg.initial_state()
    keep = set(log_checkpoints(cfg.horizon))
    stride = cfg.record_stride
    records = []
    try:
        for t in range(1, cfg.horizon + 1):
            state, rec = step(game, state, sched, streams)
            if t in keep or (stride > 0 and t % stride == 0):
                records.append(rec)
    except LearnerDivergence as exc:
        exc.partial_records = tuple(records)  # callers can flush what exists
        raise
    return Trace(records=tuple(records), config=cfg)


def attach_reference(trace: Trace, reference) -> Trace:
    """Return a copy of the trace with distances to the reference primal filled in."""
    ref = np.asarray(reference, dtype=float)
    recs = tuple(replace(r, dist_vgne=float(np.linalg.norm(r.mu_next - ref)))
                 for r in trace.records)
    return Trace(records=recs, config=trace.config)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(trace: Trace, path, extra_metadata: dict | None = None,
                    partial: bool = False) -> None:
    """Serialize a trace as CSV plus a sidecar metadata file.

    Columns: t, mu_1..mu_D, lam_1..lam_n, dist_vgne (blank when no reference
    was attached), gnorm_pos = ||max(0, g(a(t)))||, gamma, eps, sigma, rho.
    Numbers carry 17 significant digits so re-parsing is exact.
    """
    game = trace.config.game
    d, n = game.total_dim, game.num_constraints
    header = (["t"] + [f"mu_{j+1}" for j in range(d)] + [f"lam_{j+1}" for j in range(n)]
              + ["dist_vgne", "gnorm_pos", "gamma", "eps", "sigma", "rho"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in trace.records:
            row = [str(r.t)]
            row += [_fmt(v) for v in r.mu_next]
            row += [_fmt(v) for v in r.lam_next]
            row.append("" if r.dist_vgne is None else _fmt(r.dist_vgne))
            row.append(_fmt(float(np.linalg.norm(np.maximum(r.g_val, 0.0)))))
            row += [_fmt(r.gamma), _fmt(r.eps), _fmt(r.sigma), _fmt(r.rho)]
            writer.writerow(row)
    meta = {
        "seed": trace.config.seed,
        "config_hash": trace.config.hash(),
        "schedule": trace.config.describe()["schedule"],
        "game": game.name or "custom",
        "horizon": trace.config.horizon,
        "record_stride": trace.config.record_stride,
        "rows": len(trace.records),
        "partial": bool(partial),
    }
    if extra_metadata:
        meta.update(extra_metadata)
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
