"""Time-varying algorithm parameters as power laws, with rate-optimal presets.

The four sequences are the step size gamma_t = G/t^g, the dual regularization
eps_t = E/t^e, the sampling width sigma_t = S/t^s, and the shrink factor
rho_t = R/t^r. Validity of an exponent choice is captured by the decay number

    h = min(2 - g - e,  g + 2r,  2g - 2s)   (one-point)
    h = min(2 - g - e,  g + r,   2g)        (two-point)

and the configuration is accepted when s > r, g + e < 1 and h - g > 0. The
one-point h above uses the sharper g + 2r shrink term (a plain g + r bound
also circulates); ``rate_diagnostics`` exposes both variants.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

Mode = Literal["one_point", "two_point"]

RHO_CAP = 0.5  # keeps the shrunk set nonempty when R/t^r exceeds 1 at small t


@dataclass(frozen=True)
class ScheduleConfig:
    gamma0: float
    eps0: float
    sigma0: float
    rho0: float
    gamma_exp: float
    eps_exp: float
    sigma_exp: float
    rho_exp: float
    mode: Mode
    delta: float = 0.05

    def __post_init__(self):
        for name in ("gamma0", "eps0", "sigma0", "rho0",
                     "gamma_exp", "eps_exp", "sigma_exp", "rho_exp"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.mode not in ("one_point", "two_point"):
            raise ValueError(f"unknown feedback mode {self.mode!r}")
        if not self.sigma_exp > self.rho_exp:
            raise ValueError("need sigma exponent s > rho exponent r")
        if not self.gamma_exp + self.eps_exp < 1.0:
            raise ValueError("need g + e < 1")
        h = self.decay_number()
        if not h - self.gamma_exp > 0:
            raise ValueError(f"decay number violation: h - g = {h - self.gamma_exp:.4f} <= 0")

    def decay_number(self) -> float:
        g, e, s, r = self.gamma_exp, self.eps_exp, self.sigma_exp, self.rho_exp
        if self.mode == "one_point":
            return min(2 - g - e, g + 2 * r, 2 * g - 2 * s)
        return min(2 - g - e, g + r, 2 * g)

    def with_constants(self, gamma0=None, eps0=None, sigma0=None, rho0=None) -> "ScheduleConfig":
        kw = {k: v for k, v in dict(gamma0=gamma0, eps0=eps0, sigma0=sigma0, rho0=rho0).items()
              if v is not None}
        return replace(self, **kw)


def schedule_at(cfg: ScheduleConfig, t: int) -> tuple[float, float, float, float]:
    """Evaluate (gamma_t, eps_t, sigma_t, rho_t) at integer time t >= 1.

    rho is capped at RHO_CAP so the shrunk set never degenerates.
    """
    if t < 1:
        raise ValueError(f"schedule index must be >= 1, got {t}")
    ft = float(t)
    gamma = cfg.gamma0 / ft**cfg.gamma_exp
    eps = cfg.eps0 / ft**cfg.eps_exp
    sigma = cfg.sigma0 / ft**cfg.sigma_exp
    rho = min(cfg.rho0 / ft**cfg.rho_exp, RHO_CAP)
    return gamma, eps, sigma, rho


_PRESET_EXPONENTS = {
    # (mode, interior) -> (g, e, s, r) as functions of delta
    ("one_point", False): lambda d: (0.75 + 0.5 * d, 0.25 - d, 0.25, 0.25 * (1 - d)),
    ("two_point", False): lambda d: (0.5, 0.5 - d, 1.0, 1.0 - 0.5 * d),
    ("one_point", True): lambda d: (0.8, 2 / 15, 4 / 15, 4 / 15 - d),
    ("two_point", True): lambda d: (4 / 7, 2 / 7, 2 / 7 + d, 2 / 7),
}


def preset(mode: Mode, interior: bool = False, delta: float = 0.05,
           constants: tuple[float, float, float, float] | None = None) -> ScheduleConfig:
    """Rate-optimal exponent choices; ``interior`` selects the sharper variant.

    Constants default to (1, 1, 1, 1) and are meant to be tuned per game.
    """
    if not 0.0 < delta < 0.1:
        raise ValueError(f"delta must lie in (0, 0.1), got {delta}")
    try:
        g, e, s, r = _PRESET_EXPONENTS[(mode, bool(interior))](delta)
    except KeyError:
        raise ValueError(f"unknown feedback mode {mode!r}") from None
    c = constants if constants is not None else (1.0, 1.0, 1.0, 1.0)
    return ScheduleConfig(gamma0=c[0], eps0=c[1], sigma0=c[2], rho0=c[3],
                          gamma_exp=g, eps_exp=e, sigma_exp=s, rho_exp=r,
                          mode=mode, delta=delta)


def rate_diagnostics(cfg: ScheduleConfig) -> dict:
    """Decay numbers under both shrink-term variants plus the implied rates.

    ``rate`` is the exponent p in E||mu(t) - a*||^2 = O(t^-p); the interior
    variant replaces e with 2e.
    """
    g, e, s, r = cfg.gamma_exp, cfg.eps_exp, cfg.sigma_exp, cfg.rho_exp
    if cfg.mode == "one_point":
        h_sharp = min(2 - g - e, g + 2 * r, 2 * g - 2 * s)
        h_loose = min(2 - g - e, g + r, 2 * g - 2 * s)
    else:
        h_sharp = min(2 - g - e, g + 2 * r, 2 * g)
        h_loose = min(2 - g - e, g + r, 2 * g)
    h = cfg.decay_number()
    return {
        "h": h,
        "h_sharp": h_sharp,
        "h_loose": h_loose,
        "rate": min(e, h - g),
        "rate_interior": min(2 * e, h - g),
        "error_sum_exponents": {
            "eps_drift": 2 - g - e,
            "gamma_rho": g + r,
            "gamma_sq": 2 * g,
            "gamma_sq_over_sigma_sq": 2 * g - 2 * s,
        },
    }
