"""Built-in games used by the CLI and the test suites.

The two-player control game steers a two-state single-step system
s_j = s0_j + a^1_j + a^2_j. Player i pays quadratic tracking costs on the
states, quadratic input costs, and a total-input penalty:

    J^i(a) = 1/2 [ q^i_1 (s_1 - starget^i_1)^2 + q^i_2 (s_2 - starget^i_2)^2
                   + (a^i_1)^2 + (a^i_2)^2 + (a^i_1 + a^i_2 - abar_i)^2 ]

with boxes 0 <= a^i <= abar_i and per-state coupling a^1_j + a^2_j <= c_j.
Its pseudo-gradient is affine, strongly monotone, and non-symmetric, so the
game is not potential. Case 1 (abar = (1, 1)) has the interior equilibrium
(0.5246, 0.0352, 0.1252, 0.4332); case 2 (abar = (0.3, 1)) pins player 1
against her bounds at (0.3, 0, 0.1950, 0.4483). Both coupling rows are slack
at the equilibria, so the multiplier is zero in both cases.
"""

from __future__ import annotations

import numpy as np

from .game import GameSpec, QuadraticCost
from .geometry import Box

BUILTIN_GAMES = ("paper-sec5-case1", "paper-sec5-case2",
                 "uncoupled-quadratic", "nonmonotone-test")


def _accumulate_square(quad, lin, vec, offset, weight):
    """Add weight/2 * (vec'a - offset)^2 to a quadratic form; returns the constant part."""
    quad += weight * np.outer(vec, vec)
    lin += -weight * offset * vec
    return 0.5 * weight * offset**2


def control_game(abar=(1.0, 1.0), *, q=((5.0, 3.0), (1.0, 5.0)),
                 s0=(1 / 3, 1 / 3), s_targets=((1.0, 2 / 3), (2 / 3, 4 / 5)),
                 coupling_caps=(2 / 3, 5 / 3), name="") -> GameSpec:
    """Two-player, two-state control game with shared per-state input caps."""
    s0 = np.asarray(s0, dtype=float)
    state_rows = np.array([[1.0, 0.0, 1.0, 0.0],
                           [0.0, 1.0, 0.0, 1.0]])  # s_j - s0_j as a function of a
    costs = []
    for i in range(2):
        quad = np.zeros((4, 4))
        lin = np.zeros(4)
        const = 0.0
        for j in range(2):
            # q^i_j (s_j - target)^2 with s_j = s0_j + row_j' a
            const += _accumulate_square(quad, lin, state_rows[j],
                                        s_targets[i][j] - s0[j], q[i][j])
        own = np.zeros(4)
        for j in range(2):
            e = np.zeros(4)
            e[2 * i + j] = 1.0
            own += e
            const += _accumulate_square(quad, lin, e, 0.0, 1.0)
        const += _accumulate_square(quad, lin, own, abar[i], 1.0)
        costs.append(QuadraticCost(quad=quad, lin=lin, const=const))
    boxes = (Box(np.zeros(2), np.full(2, abar[0])), Box(np.zeros(2), np.full(2, abar[1])))
    return GameSpec(dims=(2, 2), local_sets=boxes, costs=tuple(costs),
                    coupling_matrix=state_rows, coupling_offset=np.asarray(coupling_caps),
                    name=name)


def uncoupled_quadratic() -> GameSpec:
    """Separable strongly convex game with an always-slack coupling row.

    Each player minimizes a diagonal quadratic in her own block, so the
    equilibrium is the stack of per-player minimizers clamped to the boxes
    and the multiplier is zero.
    """
    d = 4
    quads = [np.diag([2.0, 1.0, 0.0, 0.0]), np.diag([0.0, 0.0, 3.0, 0.5])]
    lins = [np.array([-1.0, 1.5, 0.0, 0.0]), np.array([0.0, 0.0, -4.5, 0.1])]
    costs = tuple(QuadraticCost(quad=qd, lin=ln) for qd, ln in zip(quads, lins))
    boxes = (Box(-np.ones(2), np.ones(2)), Box(-np.ones(2), np.ones(2)))
    return GameSpec(dims=(2, 2), local_sets=boxes, costs=costs,
                    coupling_matrix=np.zeros((1, d)), coupling_offset=np.array([1.0]),
                    name="uncoupled-quadratic")


def nonmonotone_test() -> GameSpec:
    """Deliberately non-monotone game; the oracle must reject it."""
    costs = (QuadraticCost(quad=np.diag([-1.0, 0.0]), lin=np.zeros(2)),
             QuadraticCost(quad=np.diag([0.0, 1.0]), lin=np.zeros(2)))
    boxes = (Box([-1.0], [1.0]), Box([-1.0], [1.0]))
    return GameSpec(dims=(1, 1), local_sets=boxes, costs=costs,
                    coupling_matrix=np.zeros((1, 2)), coupling_offset=np.array([1.0]),
                    name="nonmonotone-test")


def coupled_active_quadratic() -> GameSpec:
    """Small game whose coupling row binds at the equilibrium (lam* > 0).

    Used by regularization-path checks that need a genuinely moving path;
    kept mildly conditioned so the projected-gradient oracle converges at
    moderate eps.
    """
    quads = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    lins = [np.array([-2.0, 0.0]), np.array([0.0, -2.0])]
    costs = tuple(QuadraticCost(quad=qd, lin=ln) for qd, ln in zip(quads, lins))
    boxes = (Box([0.0], [3.0]), Box([0.0], [3.0]))
    # both players want a^i = 2 but share a^1 + a^2 <= 1, so the cap binds
    return GameSpec(dims=(1, 1), local_sets=boxes, costs=costs,
                    coupling_matrix=np.array([[0.5, 0.5]]), coupling_offset=np.array([0.5]),
                    name="coupled-active-quadratic")


def builtin_game(name: str) -> GameSpec:
    if name == "paper-sec5-case1":
        return control_game(abar=(1.0, 1.0), name=name)
    if name == "paper-sec5-case2":
        return control_game(abar=(0.3, 1.0), name=name)
    if name == "uncoupled-quadratic":
        return uncoupled_quadratic()
    if name == "nonmonotone-test":
        return nonmonotone_test()
    if name == "coupled-active-quadratic":
        return coupled_active_quadratic()
    raise KeyError(f"unknown builtin game {name!r}; known: {', '.join(BUILTIN_GAMES)}")
