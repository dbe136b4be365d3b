"""Game definition and exact evaluation of costs, constraints, and pseudo-gradients.

A game couples N players through their cost functions and through a shared
affine constraint K a <= l. Each player i owns a block a^i of the joint action
and a box-shaped local action set. The augmented (uncoupled) view adds a dual
variable lam >= 0 priced into each player's local Lagrangian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .geometry import Box


@runtime_checkable
class CostOracle(Protocol):
    """Deterministic map from a joint action to a scalar cost.

    ``value`` must accept a single (D,) action and may accept a (B, D) batch,
    returning a scalar or (B,) array respectively. ``gradient`` (full D-vector
    gradient) is optional; evaluation falls back to central differences.
    """

    def value(self, a: np.ndarray): ...


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    """J(a) = 0.5 a' Q a + b' a + c with Q symmetrized at construction."""

    quad: np.ndarray
    lin: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.quad, dtype=float)
        b = np.asarray(self.lin, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or b.shape != (q.shape[0],):
            raise ValueError("quadratic cost needs a square matrix and a matching vector")
        q = 0.5 * (q + q.T)
        q.setflags(write=False)
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "quad", q)
        object.__setattr__(self, "lin", b)
        object.__setattr__(self, "const", float(self.const))

    def value(self, a):
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            return 0.5 * float(a @ (self.quad @ a)) + float(a @ self.lin) + self.const
        return 0.5 * np.einsum("...i,ij,...j->...", a, self.quad, a) + a @ self.lin + self.const

    def gradient(self, a):
        return np.asarray(a, dtype=float) @ self.quad + self.lin


@dataclass(frozen=True, eq=False)
class CallableCost:
    """Wrap a plain function (and optional gradient) as a cost oracle."""

    fn: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None

    def value(self, a):
        return self.fn(np.asarray(a, dtype=float))

    def gradient(self, a):
        if self.grad is None:
            raise AttributeError("no analytic gradient attached")
        return self.grad(np.asarray(a, dtype=float))


def has_gradient(cost) -> bool:
    if isinstance(cost, CallableCost):
        return cost.grad is not None
    return hasattr(cost, "gradient")


@dataclass(frozen=True, eq=False)
class AugmentedPoint:
    """Primal-dual pair [a, lam] with a componentwise nonnegative dual."""

    primal: np.ndarray
    dual: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.primal, dtype=float))
        lam = np.atleast_1d(np.asarray(self.dual, dtype=float))
        if np.any(lam < 0):
            raise ValueError("dual part must be componentwise nonnegative")
        object.__setattr__(self, "primal", a)
        object.__setattr__(self, "dual", lam)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.primal, self.dual])


@dataclass(frozen=True, eq=False)
class GameSpec:
    """An N-player game with box local sets and a shared affine constraint.

    Invariants checked at construction: block dimensions sum to the number of
    columns of the coupling matrix, and the joint feasible set
    {a in A : K a <= l} is nonempty (established by minimizing the constraint
    violation over the boxes).
    """

    dims: tuple[int, ...]
    local_sets: tuple[Box, ...]
    costs: tuple
    coupling_matrix: np.ndarray
    coupling_offset: np.ndarray
    name: str = ""

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d <= 0 for d in dims):
            raise ValueError("player dimensions must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "local_sets", tuple(self.local_sets))
        object.__setattr__(self, "costs", tuple(self.costs))
        if len(self.local_sets) != len(dims) or len(self.costs) != len(dims):
            raise ValueError("need one local set and one cost oracle per player")
        for box, d in zip(self.local_sets, dims):
            if box.dim != d:
                raise ValueError("local set dimension does not match the player dimension")
        total = sum(dims)
        k = np.atleast_2d(np.asarray(self.coupling_matrix, dtype=float)).copy()
        l = np.atleast_1d(np.asarray(self.coupling_offset, dtype=float)).copy()
        if k.shape != (l.size, total):
            raise ValueError(
                f"coupling matrix shape {k.shape} incompatible with n={l.size}, D={total}"
            )
        k.setflags(write=False)
        l.setflags(write=False)
        object.__setattr__(self, "coupling_matrix", k)
        object.__setattr__(self, "coupling_offset", l)
        starts = np.cumsum((0,) + dims)
        object.__setattr__(
            self, "_blocks", tuple(slice(int(s), int(e)) for s, e in zip(starts[:-1], starts[1:]))
        )
        if _feasibility_gap(self) > 1e-9:
            raise ValueError("the joint feasible set {a in A : K a <= l} is empty")

    @property
    def num_players(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def num_constraints(self) -> int:
        return self.coupling_offset.size

    def block(self, player: int) -> slice:
        return self._blocks[player]

    def joint_lower(self) -> np.ndarray:
        return np.concatenate([b.lower for b in self.local_sets])

    def joint_upper(self) -> np.ndarray:
        return np.concatenate([b.upper for b in self.local_sets])

    def joint_center(self) -> np.ndarray:
        return np.concatenate([b.center for b in self.local_sets])

    def project_joint(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.joint_lower(), self.joint_upper())

    def is_affine(self) -> bool:
        """True when every cost is quadratic, so the pseudo-gradient is affine."""
        return all(isinstance(c, QuadraticCost) for c in self.costs)

    def describe(self) -> dict:
        """Plain-data description, used for config files and run hashes."""
        costs = []
        for c in self.costs:
            if isinstance(c, QuadraticCost):
                costs.append({"quad": c.quad.tolist(), "lin": c.lin.tolist(), "const": c.const})
            else:
                costs.append({"kind": type(c).__name__})
        return {
            "name": self.name,
            "dims": list(self.dims),
            "boxes": [{"lower": b.lower.tolist(), "upper": b.upper.tolist()}
                      for b in self.local_sets],
            "costs": costs,
            "coupling": {"K": self.coupling_matrix.tolist(),
                         "l": self.coupling_offset.tolist()},
        }


def _feasibility_gap(game: GameSpec, iters: int = 5000) -> float:
    """Minimize ||max(0, Ka - l)|| over the boxes by projected gradient."""
    k, l = game.coupling_matrix, game.coupling_offset
    lo, up = game.joint_lower(), game.joint_upper()
    x = game.joint_center()
    knorm2 = np.linalg.norm(k, 2) ** 2
    if knorm2 == 0.0:
        return float(np.linalg.norm(np.maximum(k @ x - l, 0.0)))
    step = 1.0 / knorm2
    for _ in range(iters):
        viol = np.maximum(k @ x - l, 0.0)
        if not np.any(viol > 0.0):
            return 0.0
        x = np.clip(x - step * (k.T @ viol), lo, up)
    return float(np.linalg.norm(np.maximum(k @ x - l, 0.0)))


def _check_joint(game: GameSpec, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (game.total_dim,):
        raise ValueError(f"joint action must have shape ({game.total_dim},), got {a.shape}")
    return a


def eval_cost(game: GameSpec, player: int, a) -> float:
    """Cost J^i at the joint action a."""
    a = _check_joint(game, a)
    return float(game.costs[player].value(a))


def eval_constraint(game: GameSpec, a) -> np.ndarray:
    """Constraint value g(a) = K a - l; feasible points have g(a) <= 0."""
    a = _check_joint(game, a)
    return game.coupling_matrix @ a - game.coupling_offset


def fd_gradient_block(game: GameSpec, player: int, a, step: float | None = None) -> np.ndarray:
    """Central-difference own-block gradient of J^i, step 1e-6 * max(1, ||a||)."""
    a = _check_joint(game, a)
    h = step if step is not None else 1e-6 * max(1.0, float(np.linalg.norm(a)))
    blk = game.block(player)
    out = np.empty(game.dims[player])
    cost = game.costs[player]
    for j, idx in enumerate(range(blk.start, blk.stop)):
        ap, am = a.copy(), a.copy()
        ap[idx] += h
        am[idx] -= h
        out[j] = (float(cost.value(ap)) - float(cost.value(am))) / (2.0 * h)
    return out


def eval_pseudo_gradient(game: GameSpec, a, fd_step: float | None = None) -> np.ndarray:
    """Stacked own-block gradients M(a) = [grad_{a^i} J^i(a)]_i.

    Analytic gradients are used when a cost provides them; otherwise central
    differences on the player's own block.
    """
    a = _check_joint(game, a)
    out = np.empty(game.total_dim)
    for i in range(game.num_players):
        blk = game.block(i)
        if fd_step is None and has_gradient(game.costs[i]):
            out[blk] = np.asarray(game.costs[i].gradient(a))[blk]
        else:
            out[blk] = fd_gradient_block(game, i, a, fd_step)
    return out


def eval_augmented_pg(game: GameSpec, p: AugmentedPoint) -> np.ndarray:
    """Pseudo-gradient of the uncoupled game: [M(a) + K' lam ; -K a + l]."""
    if np.any(p.dual < 0):
        raise ValueError("dual part must be nonnegative")
    a, lam = p.primal, p.dual
    _check_joint(game, a)
    primal = eval_pseudo_gradient(game, a) + game.coupling_matrix.T @ lam
    dual = -(game.coupling_matrix @ a) + game.coupling_offset
    return np.concatenate([primal, dual])


def eval_regularized_pg(game: GameSpec, p: AugmentedPoint, eps: float) -> np.ndarray:
    """Tikhonov-regularized map: the dual block gains an eps * lam term."""
    if eps < 0:
        raise ValueError("regularization eps must be nonnegative")
    w = eval_augmented_pg(game, p)
    w[game.total_dim:] += eps * p.dual
    return w


def lagrangian(game: GameSpec, player: int, a, lam) -> float:
    """Local Lagrangian U^i(a, lam) = J^i(a) + <lam, K a - l>."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("dual variable must be nonnegative")
    return eval_cost(game, player, a) + float(lam @ eval_constraint(game, a))


def pseudo_gradient_jacobian(game: GameSpec, a, step: float = 1e-6) -> np.ndarray:
    """Jacobian of M at a, assembled column by column with central differences."""
    a = _check_joint(game, a)
    d = game.total_dim
    jac = np.empty((d, d))
    for j in range(d):
        ap, am = a.copy(), a.copy()
        ap[j] += step
        am[j] -= step
        jac[:, j] = (eval_pseudo_gradient(game, ap) - eval_pseudo_gradient(game, am)) / (2 * step)
    return jac
