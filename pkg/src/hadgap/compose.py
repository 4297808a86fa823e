"""Mixed-norm integrals and the integral test for ``u C_phi``.

Radial integrals are taken in the variable ``s = -log(1 - r)``, which turns
``dr / (1 - r)`` into ``ds`` and spreads nodes geometrically toward the
boundary.  Each radial panel uses 4-point Gauss-Legendre.  Spherical
integrals are Monte Carlo over one seeded sample of directions shared by all
radial nodes, so integrals computed with the same seed use common random
numbers and respect pointwise inequalities between integrands.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .polyseries import Polynomial, ZonalPolynomial
from .sphere import random_sphere
from .weights import NormalWeight, verify_normality

EPS_LADDER = (1e-2, 1e-3, 1e-4)
RANGE_TOL = 1e-12
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


class RangeError(ValueError):
    """A self-map left the closed unit ball."""


# -- symbols -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    value: complex = 1.0

    def __call__(self, z):
        z = np.atleast_2d(z)
        return np.full(z.shape[0], complex(self.value))

    @property
    def is_zero(self):
        return self.value == 0


@dataclass(frozen=True)
class ScaleMap:
    """``z -> s z`` with ``0 < s <= 1``."""

    s: float

    def __post_init__(self):
        if not (0 < self.s <= 1):
            raise RangeError(f"scale {self.s} must lie in (0, 1]")

    def __call__(self, z):
        return self.s * np.atleast_2d(z)

    @property
    def radius_bound(self):
        return self.s


@dataclass(frozen=True)
class LinearMap:
    """``z -> T z`` for a matrix of operator norm at most 1."""

    matrix: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.matrix, dtype=complex)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("linear map needs a square matrix")
        norm = float(np.linalg.norm(T, 2))
        if norm > 1 + RANGE_TOL:
            raise RangeError(f"operator norm {norm} exceeds 1")
        object.__setattr__(self, "matrix", T)

    def __call__(self, z):
        return np.atleast_2d(z) @ self.matrix.T

    @property
    def radius_bound(self):
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True)
class PolyMap:
    """Coordinatewise polynomial self-map.

    The range is certified by ``sqrt(sum_i (sum |c|)_i^2) <= 1``, which bounds
    ``|phi(z)|`` on the closed ball.
    """

    components: tuple

    def __post_init__(self):
        bound = self.radius_bound
        if bound > 1 + RANGE_TOL:
            raise RangeError(f"coefficient bound {bound} does not certify |phi| <= 1")

    @property
    def radius_bound(self):
        return math.sqrt(sum(c.coefficient_bound() ** 2 for c in self.components))

    def __call__(self, z):
        z = np.atleast_2d(z)
        return np.stack([np.asarray(c(z)) for c in self.components], axis=1)


def identity_map():
    return ScaleMap(1.0)


@dataclass(frozen=True)
class SymbolPair:
    u: object
    phi_map: object
    dim: int

    def __post_init__(self):
        if isinstance(self.phi_map, LinearMap) and self.phi_map.matrix.shape[0] != self.dim:
            raise ValueError("linear map dimension does not match dim")
        if isinstance(self.phi_map, PolyMap) and len(self.phi_map.components) != self.dim:
            raise ValueError("polynomial map needs one component per coordinate")

    @property
    def u_is_zero(self):
        return isinstance(self.u, Constant) and self.u.is_zero


def _u_from_config(cfg, dim):
    kind = cfg.get("kind")
    if kind == "const":
        v = cfg.get("value", 1)
        return Constant(complex(*v) if isinstance(v, (list, tuple)) else complex(v))
    if kind == "poly":
        return Polynomial.from_config(cfg["terms"], dim)
    if kind == "zonal":
        pts = np.asarray(cfg["centers"], dtype=float).reshape(-1, 2 * dim)
        return ZonalPolynomial(int(cfg["degree"]), pts[:, 0::2] + 1j * pts[:, 1::2])
    raise ValueError(f"unknown u kind {kind!r}")


def _phi_from_config(cfg, dim):
    kind = cfg.get("kind")
    if kind == "identity":
        return identity_map()
    if kind == "scale":
        return ScaleMap(float(cfg["s"]))
    if kind == "linear":
        return LinearMap(np.asarray(cfg["matrix"], dtype=complex))
    if kind == "poly":
        return PolyMap(tuple(Polynomial.from_config(c, dim) for c in cfg["components"]))
    raise ValueError(f"unknown phi kind {kind!r}")


def symbols_from_config(cfg, dim):
    """``{"u": {"kind": "const", "value": 1}, "phi": {"kind": "scale", "s": 0.5}}``."""
    return SymbolPair(_u_from_config(cfg["u"], dim), _phi_from_config(cfg["phi"], dim), dim)


@dataclass(frozen=True)
class MixedNormParams:
    p: float
    q: float
    phi: NormalWeight

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be positive")

    def check(self, grid_size=10**4):
        return verify_normality(self.phi, grid_size)


# -- spherical means ---------------------------------------------------------------------------


def _directions(dim, count, seed):
    return random_sphere(np.random.default_rng(seed), count, dim)


def sphere_mean(f, r, q, mc_samples, seed, dim=2):
    """Monte Carlo ``M_q(f, r)`` with its standard error (delta method through ``1/q``)."""
    if not (0 <= r < 1):
        raise ValueError(f"r={r} must lie in [0, 1)")
    if mc_samples < 2:
        raise ValueError("mc_samples must be at least 2")
    zeta = _directions(dim, mc_samples, seed)
    a = np.abs(np.asarray(f(r * zeta)))
    if np.ptp(a) == 0:
        return float(a[0]), 0.0
    vals = a**q
    m = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(mc_samples))
    if m == 0:
        return 0.0, 0.0
    return m ** (1 / q), (1 / q) * m ** (1 / q - 1) * se


# -- radial quadrature -----------------------------------------------------------------------------


def _radial_nodes(s_max, panels):
    """Gauss-Legendre nodes and weights on ``[0, s_max]`` in ``s = -log(1-r)``."""
    edges = np.linspace(0.0, s_max, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    s = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    wts = (half[:, None] * _GL_W[None, :]).ravel()
    return s, wts


def _gap_of(s):
    return np.exp(-s)


def _radial_sum(values, wts):
    # fixed order, independent of how node values were produced
    return float(math.fsum((values * wts).tolist()))


def _map_nodes(fn, nodes, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return np.array(list(ex.map(fn, nodes)))
    return np.array([fn(x) for x in nodes])


def mixed_norm(f, mp: MixedNormParams, radial_grid, eps_edge, *, dim=2, mc_samples=4000, seed=0,
               threads=1):
    """``(int_0^1 M_q(f, r)^p phi(r)^p dr / (1 - r))^(1/p)``.

    The integral is computed on ``[0, 1 - eps_edge]`` and the rest is bounded
    with ``phi(r) <= phi(r0) ((1-r)/(1-r0))^alpha`` and ``M_q(f, r) <= M_q(f, 1)``,
    which contributes ``M_q(f, 1)^p phi(r0)^p / (alpha p)``.
    """
    if radial_grid < 8:
        raise ValueError("radial_grid must be at least 8")
    if not (0 < eps_edge < 0.5):
        raise ValueError("eps_edge must lie in (0, 0.5)")
    zeta = _directions(dim, mc_samples, seed)
    p, q = mp.p, mp.q

    def mq_at_gap(gap):
        a = np.abs(np.asarray(f((1.0 - gap) * zeta)))
        return float(np.mean(a**q)) ** (1 / q)

    s, wts = _radial_nodes(-math.log(eps_edge), radial_grid)
    gaps = _gap_of(s)
    mq = _map_nodes(mq_at_gap, gaps, threads)
    vals = mq**p * np.exp(p * mp.phi.log_at_gap(gaps))
    body = _radial_sum(vals, wts)
    if not math.isfinite(body):
        return math.inf
    a1 = np.abs(np.asarray(f(zeta)))
    m_edge = float(np.mean(a1**q)) ** (1 / q)
    if 1.0 - eps_edge >= mp.phi.delta0:
        tail = m_edge**p * math.exp(p * mp.phi.log_at_gap(eps_edge)) / (mp.phi.alpha * p)
    else:
        tail = math.inf
    total = body + tail
    return total ** (1 / p) if math.isfinite(total) else math.inf


# -- the integral test ----------------------------------------------------------------------------------


def _truncated_integral(sym: SymbolPair, w: NormalWeight, mp: MixedNormParams, eps, panels, zeta,
                        t=None, threads=1):
    """``int_0^(1-eps) (int_S |u|^q / mu^q(|phi|) [|phi| > t] dsigma)^(p/q) phi^p dr/(1-r)``."""
    p, q = mp.p, mp.q
    s, wts = _radial_nodes(-math.log(eps), panels)
    gaps = _gap_of(s)

    def inner(gap):
        z = (1.0 - gap) * zeta
        img = np.atleast_2d(sym.phi_map(z))
        rad = np.linalg.norm(img, axis=1)
        if np.any(rad > 1.0 + RANGE_TOL):
            raise RangeError(f"|phi(z)| reached {rad.max()} > 1")
        keep = np.ones(len(rad), bool) if t is None else rad > t
        if not np.any(keep):
            return 0.0
        uu = np.abs(np.asarray(sym.u(z)))[keep]
        log_mu = w.log_at_gap(np.maximum(1.0 - rad[keep], np.finfo(float).tiny))
        with np.errstate(over="ignore"):
            terms = uu**q * np.exp(-q * log_mu)
        # sum of kept terms, normalised by the full sample size
        return float(terms.sum() / len(rad))

    inner_vals = _map_nodes(inner, gaps, threads)
    with np.errstate(over="ignore"):
        vals = inner_vals ** (p / q) * np.exp(p * mp.phi.log_at_gap(gaps))
    return _radial_sum(vals, wts)


@dataclass
class IntegralResult:
    value: float
    verdict: str
    ladder: list
    refinement: dict
    decay_ratio: float | None
    growth: float | None
    thresholds: dict = field(default_factory=dict)

    def to_dict(self):
        return {"value": self.value, "verdict": self.verdict, "ladder": self.ladder,
                "refinement": self.refinement, "decay_ratio": self.decay_ratio,
                "growth": self.growth, "thresholds": self.thresholds}


DEFAULT_TOLERANCES = {"refine_rtol": 0.05, "growth_factor": 10.0, "decay_max": 0.9}


def _classify(ladder_vals, coarse, fine, tol):
    I1, I2, I3 = ladder_vals
    if not all(math.isfinite(x) for x in (I1, I2, I3, coarse, fine)):
        return "divergent", math.inf, None, None
    if I3 == 0.0:
        return "finite", 0.0, None, 1.0
    d1, d2 = I2 - I1, I3 - I2
    rho = d2 / d1 if d1 > 0 else (0.0 if d2 <= 0 else math.inf)
    growth = I3 / I1 if I1 > 0 else math.inf
    refine = abs(fine - coarse) / abs(fine) if fine else 0.0
    if growth >= tol["growth_factor"] and rho >= 1.0 and d1 > 0:
        return "divergent", math.inf, rho, growth
    if refine < tol["refine_rtol"] and 0 <= rho < tol["decay_max"]:
        extra = d2 * rho / (1.0 - rho) if d2 > 0 else 0.0
        return "finite", fine + extra, rho, growth
    return "undetermined", fine, rho, growth


def _ladder(sym, w, mp, mc_samples, radial_grid, seed, t=None, threads=1, eps_ladder=EPS_LADDER):
    zeta = _directions(sym.dim, mc_samples, seed)
    vals = [_truncated_integral(sym, w, mp, e, radial_grid, zeta, t, threads) for e in eps_ladder]
    fine = _truncated_integral(sym, w, mp, eps_ladder[-1], 2 * radial_grid, zeta, t, threads)
    return vals, fine


def boundedness_integral(sym: SymbolPair, w: NormalWeight, mp: MixedNormParams, mc_samples,
                         radial_grid, seed, *, tolerances=None, threads=1):
    """Value of the integral test and a finiteness diagnostic.

    ``finite``: the fine-grid value moved by less than ``refine_rtol`` under
    panel doubling and the ladder increments shrink geometrically (ratio
    below ``decay_max``); the reported value adds the geometric remainder.
    ``divergent``: the truncated integral grew by at least ``growth_factor``
    over the ladder with non-shrinking increments.  Anything else is
    ``undetermined``.
    """
    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    if sym.u_is_zero:
        ladder = [{"eps_edge": e, "integral": 0.0} for e in EPS_LADDER]
        return IntegralResult(0.0, "finite", ladder, {"G": 0.0, "2G": 0.0, "relative_change": 0.0},
                              None, None, tol)
    vals, fine = _ladder(sym, w, mp, mc_samples, radial_grid, seed, threads=threads)
    verdict, value, rho, growth = _classify(vals, vals[-1], fine, tol)
    refine = abs(fine - vals[-1]) / abs(fine) if fine else 0.0
    ladder = [{"eps_edge": e, "integral": x} for e, x in zip(EPS_LADDER, vals)]
    return IntegralResult(value, verdict, ladder,
                          {"G": vals[-1], "2G": fine, "relative_change": refine}, rho, growth, tol)


def tail_integral(sym: SymbolPair, w: NormalWeight, mp: MixedNormParams, t, mc_samples, radial_grid,
                  seed, *, eps_edge=EPS_LADDER[-1], threads=1):
    """The integral restricted to ``|phi(r xi)| > t``, truncated at ``1 - eps_edge``.

    Samples failing the indicator contribute 0 but still count toward the
    normalisation, so the value never exceeds the unrestricted integral.
    """
    if not (0 < t < 1):
        raise ValueError("t must lie in (0, 1)")
    if sym.u_is_zero:
        return 0.0
    zeta = _directions(sym.dim, mc_samples, seed)
    return _truncated_integral(sym, w, mp, eps_edge, radial_grid, zeta, t, threads)


@dataclass
class Verdict:
    verdict: str
    integral: IntegralResult
    tail_ladder: list
    consistent: bool | None
    note: str = ""

    def to_dict(self):
        return {"verdict": self.verdict, "integral": self.integral.to_dict(),
                "tail_ladder": self.tail_ladder, "consistent": self.consistent, "note": self.note}


VERDICTS = {"finite": "bounded AND compact", "divergent": "unbounded", "undetermined": "undetermined"}


def operator_verdict(sym, w, mp, tolerances=None):
    """Bounded-and-compact / unbounded / undetermined, cross-checked with tail integrals.

    ``tolerances`` may set ``mc_samples``, ``radial_grid``, ``seed``,
    ``threads``, ``t_ladder`` and the thresholds of ``boundedness_integral``.
    """
    tol = dict(tolerances or {})
    mc = int(tol.pop("mc_samples", 2000))
    grid = int(tol.pop("radial_grid", 16))
    seed = int(tol.pop("seed", 0))
    threads = int(tol.pop("threads", 1))
    t_ladder = tuple(tol.pop("t_ladder", (0.9, 0.99, 0.999)))
    res = boundedness_integral(sym, w, mp, mc, grid, seed, tolerances=tol, threads=threads)
    tails = []
    for t in t_ladder:
        if sym.u_is_zero:
            tails.append({"t": t, "verdict": "finite", "value": 0.0})
            continue
        # the ladder must reach past 1 - t, so it scales with the gap
        eps = tuple((1.0 - t) * f for f in (1e-1, 1e-2, 1e-3))
        vals, fine = _ladder(sym, w, mp, mc, grid, seed, t=t, threads=threads, eps_ladder=eps)
        v, value, _, _ = _classify(vals, vals[-1], fine, dict(DEFAULT_TOLERANCES, **tol))
        tails.append({"t": t, "verdict": v, "value": value, "truncated": vals[-1],
                      "eps_ladder": list(eps)})
    consistent, note = None, ""
    if res.verdict == "finite":
        vs = [x["value"] for x in tails]
        consistent = all(x["verdict"] == "finite" for x in tails) and all(
            b <= a * (1 + 1e-12) for a, b in zip(vs, vs[1:]))
        if not consistent:
            note = "tail integrals do not decrease although the full integral is finite"
    elif res.verdict == "divergent":
        consistent = any(x["verdict"] != "finite" for x in tails)
        if not consistent:
            note = "tail integrals look finite although the full integral diverges"
    return Verdict(VERDICTS[res.verdict], res, tails, consistent, note)
