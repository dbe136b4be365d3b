"""Config-file and reference-file round-trips (JSON key/value trees).

Game files carry dims, box bounds, quadratic coefficients, and the coupling
rows; experiment files carry a game reference, schedule settings, horizon,
seeds, and output options. Floats survive a round-trip exactly (shortest-exact
JSON reprs; trace CSVs use 17 significant digits).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .builtin import BUILTIN_GAMES, builtin_game
from .game import GameSpec, QuadraticCost
from .geometry import Box
from .oracle import GameConstants, ReferenceSolutions
from .schedules import ScheduleConfig, preset


def game_to_dict(game: GameSpec) -> dict:
    if not game.is_affine():
        raise ValueError("only quadratic-cost games can be serialized")
    return game.describe()


def game_from_dict(data: dict) -> GameSpec:
    costs = tuple(QuadraticCost(quad=np.asarray(c["quad"], dtype=float),
                                lin=np.asarray(c["lin"], dtype=float),
                                const=float(c.get("const", 0.0)))
                  for c in data["costs"])
    boxes = tuple(Box(np.asarray(b["lower"], dtype=float), np.asarray(b["upper"], dtype=float))
                  for b in data["boxes"])
    return GameSpec(dims=tuple(int(d) for d in data["dims"]), local_sets=boxes, costs=costs,
                    coupling_matrix=np.asarray(data["coupling"]["K"], dtype=float),
                    coupling_offset=np.asarray(data["coupling"]["l"], dtype=float),
                    name=str(data.get("name", "")))


def save_game(game: GameSpec, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=2, sort_keys=True) + "\n")


def load_game(ref: str) -> GameSpec:
    """Resolve a game reference: a builtin name or a path to a game file."""
    if ref in BUILTIN_GAMES or ref == "coupled-active-quadratic":
        return builtin_game(ref)
    path = Path(ref)
    if not path.is_file():
        raise FileNotFoundError(f"game reference {ref!r} is neither a builtin name "
                                f"({', '.join(BUILTIN_GAMES)}) nor an existing file")
    return game_from_dict(json.loads(path.read_text()))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a game, a schedule, a horizon, and a list of seeds."""

    game: str
    mode: str
    horizon: int
    seeds: tuple[int, ...]
    interior: bool = False
    delta: float = 0.05
    constants: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    exponents: tuple[float, float, float, float] | None = None
    out_dir: str = ""
    attach_reference: bool = True
    record_stride: int = 0
    rate_window: tuple[int, int] | None = None

    def __post_init__(self):
        if len(self.seeds) == 0:
            raise ValueError("seeds list must be nonempty")
        if self.horizon < 10:
            raise ValueError("experiment horizon must be at least 10")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "constants", tuple(float(c) for c in self.constants))
        if self.exponents is not None:
            object.__setattr__(self, "exponents", tuple(float(e) for e in self.exponents))
        if self.rate_window is not None:
            object.__setattr__(self, "rate_window",
                               (int(self.rate_window[0]), int(self.rate_window[1])))

    def schedule(self) -> ScheduleConfig:
        cfg = preset(self.mode, interior=self.interior, delta=self.delta,
                     constants=self.constants)
        if self.exponents is not None:
            g, e, s, r = self.exponents
            cfg = ScheduleConfig(gamma0=cfg.gamma0, eps0=cfg.eps0, sigma0=cfg.sigma0,
                                 rho0=cfg.rho0, gamma_exp=g, eps_exp=e, sigma_exp=s,
                                 rho_exp=r, mode=cfg.mode, delta=cfg.delta)
        return cfg

    def load_game(self) -> GameSpec:
        return load_game(self.game)

    def to_dict(self) -> dict:
        data = {
            "game": self.game,
            "schedule": {
                "mode": self.mode,
                "interior": self.interior,
                "delta": self.delta,
                "constants": list(self.constants),
            },
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "out_dir": self.out_dir,
            "attach_reference": self.attach_reference,
            "record_stride": self.record_stride,
        }
        if self.exponents is not None:
            data["schedule"]["exponents"] = list(self.exponents)
        if self.rate_window is not None:
            data["rate_window"] = list(self.rate_window)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        sched = data.get("schedule", {})
        return cls(
            game=data["game"],
            mode=sched.get("mode", "two_point"),
            horizon=int(data["horizon"]),
            seeds=tuple(data["seeds"]),
            interior=bool(sched.get("interior", False)),
            delta=float(sched.get("delta", 0.05)),
            constants=tuple(sched.get("constants", (1.0, 1.0, 1.0, 1.0))),
            exponents=tuple(sched["exponents"]) if "exponents" in sched else None,
            out_dir=str(data.get("out_dir", "")),
            attach_reference=bool(data.get("attach_reference", True)),
            record_stride=int(data.get("record_stride", 0)),
            rate_window=tuple(data["rate_window"]) if "rate_window" in data else None,
        )


def save_experiment(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def load_experiment(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"experiment config not found: {path}")
    return ExperimentConfig.from_dict(json.loads(p.read_text()))


def reference_to_dict(ref: ReferenceSolutions, consts: GameConstants | None = None) -> dict:
    data = {
        "primal": ref.primal.tolist(),
        "dual": ref.dual.tolist(),
        "method": ref.method,
        "residual": ref.residual,
    }
    if consts is not None:
        data["nu"] = consts.nu
        data["lip"] = consts.lip
    return data


def save_reference(ref: ReferenceSolutions, path, consts: GameConstants | None = None,
                   extra: dict | None = None) -> None:
    data = reference_to_dict(ref, consts)
    if extra:
        data.update(extra)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_reference(path) -> tuple[ReferenceSolutions, GameConstants | None]:
    data = json.loads(Path(path).read_text())
    ref = ReferenceSolutions(primal=np.asarray(data["primal"], dtype=float),
                             dual=np.asarray(data["dual"], dtype=float),
                             method=str(data["method"]), residual=float(data["residual"]))
    consts = None
    if "nu" in data:
        consts = GameConstants(nu=float(data["nu"]), lip=float(data["lip"]))
    return ref, consts
