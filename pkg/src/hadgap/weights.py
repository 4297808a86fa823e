"""Normal weight functions on [0, 1).

A weight ``mu`` is *normal* with parameters ``(alpha, beta, delta0)`` when on
``[delta0, 1)`` the ratio ``mu(r) / (1 - r)**alpha`` decreases to 0 and
``mu(r) / (1 - r)**beta`` increases to infinity.  The parameters are not
unique, so they are always supplied by the caller and only validated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Adjacent-sample violations below this relative size are rounding noise.
MONOTONE_RTOL = 1e-12


class WeightDomainError(ValueError):
    """Raised when a weight is evaluated or bracketed outside its domain."""


@dataclass(frozen=True)
class NormalWeight:
    """Radial weight ``mu`` with declared normality parameters.

    ``kind="power"`` means ``mu(r) = (1 - r**2)**gamma``.  ``kind="table"``
    interpolates the monotone grid ``points`` either linearly in ``(r, mu)``
    or linearly in ``(log(1 - r), log(mu))``; beyond the last node the last
    segment is continued as a power of ``1 - r`` so the weight keeps its
    boundary decay.
    """

    kind: str
    alpha: float
    beta: float
    delta0: float
    gamma: float | None = None
    points: tuple[tuple[float, float], ...] | None = None
    interp: str = "linear"
    _r: np.ndarray = field(init=False, repr=False, compare=False)
    _mu: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 < self.alpha < self.beta):
            raise ValueError(f"need 0 < alpha < beta, got alpha={self.alpha}, beta={self.beta}")
        if not (0 < self.delta0 < 1):
            raise ValueError(f"delta0 must lie in (0, 1), got {self.delta0}")
        if self.kind == "power":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("power weight needs gamma > 0")
            r = mu = np.empty(0)
        elif self.kind == "table":
            if self.interp not in ("linear", "loglog"):
                raise ValueError(f"unknown interpolation rule {self.interp!r}")
            if not self.points or len(self.points) < 2:
                raise ValueError("table weight needs at least two points")
            arr = np.asarray(self.points, dtype=float)
            r, mu = arr[:, 0].copy(), arr[:, 1].copy()
            if r[0] != 0.0:
                raise ValueError("table must start at r = 0")
            if np.any(np.diff(r) <= 0) or r[-1] >= 1.0:
                raise ValueError("table radii must be strictly increasing in [0, 1)")
            if np.any(mu <= 0) or not np.all(np.isfinite(mu)):
                raise ValueError("table values must be positive and finite")
            object.__setattr__(self, "points", tuple((float(a), float(b)) for a, b in arr))
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        object.__setattr__(self, "_r", r)
        object.__setattr__(self, "_mu", mu)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def power(cls, gamma, alpha, beta, delta0):
        return cls("power", alpha, beta, delta0, gamma=gamma)

    @classmethod
    def tabulate(cls, func, alpha, beta, delta0, *, nodes=2000, interp="linear", edge=1e-8):
        """Sample ``func`` on a grid that is geometric toward ``r = 1``."""
        gaps = np.geomspace(1.0, edge, nodes)
        r = np.unique(np.concatenate(([0.0], 1.0 - gaps[1:])))
        pts = tuple((float(x), float(func(x))) for x in r)
        return cls("table", alpha, beta, delta0, points=pts, interp=interp)

    @classmethod
    def from_config(cls, cfg):
        kind = cfg.get("kind")
        common = dict(alpha=float(cfg["alpha"]), beta=float(cfg["beta"]), delta0=float(cfg["delta0"]))
        if kind == "power":
            return cls("power", gamma=float(cfg["gamma"]), **common)
        if kind in ("table", "tabulated"):
            pts = tuple((float(a), float(b)) for a, b in cfg["points"])
            return cls("table", points=pts, interp=cfg.get("interp", "linear"), **common)
        raise ValueError(f"unknown weight kind {kind!r}")

    def to_config(self):
        cfg = {"kind": self.kind}
        if self.kind == "power":
            cfg["gamma"] = self.gamma
        else:
            cfg["points"] = [list(p) for p in self.points]
            cfg["interp"] = self.interp
        cfg.update(alpha=self.alpha, beta=self.beta, delta0=self.delta0)
        return cfg

    # -- evaluation -----------------------------------------------------------

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0) or np.any(r_arr >= 1) or np.any(np.isnan(r_arr)):
            raise WeightDomainError("weight is defined on [0, 1) only")
        out = np.exp(self._log_from_gap(1.0 - r_arr, r_arr))
        return float(out) if out.ndim == 0 else out

    def log_at_gap(self, gap):
        """``log(mu(1 - gap))`` computed from the gap itself.

        Stays accurate when ``1 - gap`` rounds to 1 in floating point, which
        is the regime of the deep lacunary levels.
        """
        g = np.asarray(gap, dtype=float)
        if np.any(g <= 0) or np.any(g > 1):
            raise WeightDomainError("gap must lie in (0, 1]")
        out = self._log_from_gap(g, 1.0 - g)
        return float(out) if out.ndim == 0 else out

    def _log_from_gap(self, gap, r):
        if self.kind == "power":
            with np.errstate(divide="ignore"):
                return self.gamma * (np.log(gap) + np.log1p(r))
        rt, mt = self._r, self._mu
        last_gap = 1.0 - rt[-1]
        slope = math.log(mt[-1] / mt[-2]) / math.log((1.0 - rt[-1]) / (1.0 - rt[-2]))
        g = np.atleast_1d(gap).ravel()
        rr = np.atleast_1d(r).ravel()
        o = np.empty(g.shape)
        beyond = g < last_gap
        o[beyond] = math.log(mt[-1]) + slope * (np.log(g[beyond]) - math.log(last_gap))
        inside = ~beyond
        if np.any(inside):
            if self.interp == "linear":
                o[inside] = np.log(np.interp(rr[inside], rt, mt))
            else:
                # log(1-r) decreases along the table; np.interp wants increasing x
                x = np.log(1.0 - rt)[::-1]
                y = np.log(mt)[::-1]
                o[inside] = np.interp(np.log(g[inside]), x, y)
        return o.reshape(np.shape(gap))


@dataclass(frozen=True)
class NormalityReport:
    grid_size: int
    alpha_ratio_nonincreasing: bool
    beta_ratio_nondecreasing: bool
    alpha_ratio_to_zero: bool
    beta_ratio_to_infinity: bool
    worst_alpha_violation: float
    worst_beta_violation: float
    min_value: float

    @property
    def passed(self):
        return (
            self.alpha_ratio_nonincreasing
            and self.beta_ratio_nondecreasing
            and self.alpha_ratio_to_zero
            and self.beta_ratio_to_infinity
            and self.min_value > 0
        )

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "grid_size": self.grid_size,
            "alpha_ratio_nonincreasing": self.alpha_ratio_nonincreasing,
            "beta_ratio_nondecreasing": self.beta_ratio_nondecreasing,
            "alpha_ratio_to_zero": self.alpha_ratio_to_zero,
            "beta_ratio_to_infinity": self.beta_ratio_to_infinity,
            "worst_alpha_violation": self.worst_alpha_violation,
            "worst_beta_violation": self.worst_beta_violation,
            "min_value": self.min_value,
        }


def eval_weight(w: NormalWeight, r: float) -> float:
    if not (0 <= r < 1):
        raise WeightDomainError(f"r={r} is outside [0, 1)")
    return w(r)


def verify_normality(w: NormalWeight, grid_size: int) -> NormalityReport:
    """Grid check of both monotone ratios and their boundary trends.

    Samples ``[delta0, 1 - 1/grid_size]`` uniformly.  Ratios are compared in
    log form so the check is insensitive to the overall scale of ``mu``.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    hi = 1.0 - 1.0 / grid_size
    r = np.linspace(w.delta0, max(hi, w.delta0), grid_size)
    gap = 1.0 - r
    log_mu = w.log_at_gap(gap)
    log_a = log_mu - w.alpha * np.log(gap)
    log_b = log_mu - w.beta * np.log(gap)
    tol = math.log1p(MONOTONE_RTOL)
    da, db = np.diff(log_a), np.diff(log_b)
    tail = max(2, grid_size // 10)
    return NormalityReport(
        grid_size=grid_size,
        alpha_ratio_nonincreasing=bool(np.all(da <= tol)),
        beta_ratio_nondecreasing=bool(np.all(db >= -tol)),
        alpha_ratio_to_zero=bool(log_a[-1] < log_a[-tail]),
        beta_ratio_to_infinity=bool(log_b[-1] > log_b[-tail]),
        worst_alpha_violation=float(max(da.max(initial=0.0), 0.0)),
        worst_beta_violation=float(max(-db.min(initial=0.0), 0.0)),
        min_value=float(np.exp(log_mu.min())),
    )


@dataclass(frozen=True)
class RatioBracket:
    lower: float
    ratio: float
    upper: float

    @property
    def holds(self):
        return self.lower <= self.ratio <= self.upper


def weight_ratio_bracket(w: NormalWeight, p: int, M: int, j: int, s: int) -> RatioBracket:
    """Compare ``mu(1 - p**-(sM+j)) / mu(1 - p**-((s+1)M+j))`` with its
    normality bracket ``[p**(M alpha), p**(M beta)]``."""
    if p < 2 or M < 1 or s < 0:
        raise ValueError("need p >= 2, M >= 1, s >= 0")
    e0 = s * M + j
    if e0 < 0 or 1.0 - float(p) ** (-e0) < w.delta0:
        raise WeightDomainError(
            f"1 - p^-{e0} lies below delta0={w.delta0}; the bracket is only valid on [delta0, 1)"
        )
    log_gap0 = -e0 * math.log(p)
    log_gap1 = -(e0 + M) * math.log(p)
    log_ratio = w.log_at_gap(math.exp(log_gap0)) - w.log_at_gap(math.exp(log_gap1))
    return RatioBracket(
        lower=float(p) ** (M * w.alpha),
        ratio=math.exp(log_ratio),
        upper=float(p) ** (M * w.beta),
    )
