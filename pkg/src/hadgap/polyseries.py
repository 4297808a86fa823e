"""Homogeneous polynomials on C^n and lacunary series built from them.

Polynomials are evaluated on batches: ``z`` has shape ``(N, n)`` (or ``(n,)``)
and the result has shape ``(N,)`` (or is a scalar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sphere import DimensionError, random_sphere
from .weights import NormalWeight

# Partial sums stop once the certified remainder is this small relative to the sum.
SUM_RTOL = 1e-15


class SeriesDomainError(ValueError):
    pass


def _batch(z, dim):
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[1] != dim:
        raise DimensionError(f"point has dimension {z.shape[1]}, polynomial has {dim}")
    return z, single


def _check_closed_ball(z):
    if np.any(np.linalg.norm(z, axis=1) > 1.0 + 1e-12):
        raise SeriesDomainError("evaluation point lies outside the closed unit ball")


@dataclass(frozen=True)
class ZonalPolynomial:
    """``P(z) = sum_c coeff_c * <z, center_c>**degree``."""

    degree: int
    centers: np.ndarray
    coeffs: np.ndarray = None
    separation: float | None = None

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        c = np.atleast_2d(np.asarray(self.centers, dtype=complex))
        if np.any(np.abs(np.linalg.norm(c, axis=1) - 1.0) > 1e-12):
            raise ValueError("centers must be unit vectors")
        coeffs = np.ones(c.shape[0], dtype=complex) if self.coeffs is None else np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (c.shape[0],):
            raise ValueError("one coefficient per center")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self):
        return self.centers.shape[1]

    def __call__(self, z):
        z, single = _batch(z, self.dim)
        if self.degree == 0:
            out = np.full(z.shape[0], self.coeffs.sum())
        else:
            if self.degree >= 2**53:
                raise OverflowError("degree too large for direct evaluation")
            w = z @ self.centers.conj().T
            out = (w ** self.degree) @ self.coeffs
        return out[0] if single else out

    def grad(self, z):
        """Holomorphic gradient ``dP/dz_i``, shape ``(N, n)``."""
        z, single = _batch(z, self.dim)
        if self.degree == 0:
            g = np.zeros_like(z)
        else:
            w = z @ self.centers.conj().T
            g = (self.degree * w ** (self.degree - 1) * self.coeffs) @ self.centers.conj()
        return g[0] if single else g

    def coefficient_bound(self):
        """``sum |c|``: upper bound on the sup over the closed ball."""
        return float(np.abs(self.coeffs).sum())

    def candidate_points(self):
        return self.centers

    def scaled(self, factor):
        return ZonalPolynomial(self.degree, self.centers, self.coeffs * factor, self.separation)


@dataclass(frozen=True)
class Polynomial:
    """Sparse polynomial ``sum coeff * z**exps`` given as ``{exps: coeff}``."""

    terms: dict
    dim: int

    def __post_init__(self):
        clean = {}
        for exps, c in dict(self.terms).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.dim or min(exps) < 0:
                raise ValueError(f"bad exponent tuple {exps}")
            clean[exps] = clean.get(exps, 0) + complex(c)
        object.__setattr__(self, "terms", clean)

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    @property
    def homogeneous(self):
        return len({sum(e) for e in self.terms}) <= 1

    def __call__(self, z):
        z, single = _batch(z, self.dim)
        out = np.zeros(z.shape[0], dtype=complex)
        for exps, c in self.terms.items():
            out += c * np.prod(z ** np.asarray(exps), axis=1)
        return out[0] if single else out

    def grad(self, z):
        z, single = _batch(z, self.dim)
        g = np.zeros_like(z)
        for exps, c in self.terms.items():
            e = np.asarray(exps)
            for i in range(self.dim):
                if e[i]:
                    ei = e.copy()
                    ei[i] -= 1
                    g[:, i] += c * e[i] * np.prod(z ** ei, axis=1)
        return g[0] if single else g

    def coefficient_bound(self):
        return float(sum(abs(c) for c in self.terms.values()))

    def candidate_points(self):
        pts = [np.eye(self.dim, dtype=complex)]
        pts.append(np.ones((1, self.dim), dtype=complex) / math.sqrt(self.dim))
        return np.vstack(pts)

    @classmethod
    def from_config(cls, cfg, dim):
        terms = {}
        for item in cfg:
            c = item["coeff"]
            c = complex(*c) if isinstance(c, (list, tuple)) else complex(c)
            terms[tuple(item["exps"])] = terms.get(tuple(item["exps"]), 0) + c
        return cls(terms, dim)


def eval_zonal(P, z):
    zz, single = _batch(z, P.dim)
    _check_closed_ball(zz)
    out = P(zz)
    return out[0] if single else out


# -- sup norms ---------------------------------------------------------------


def _polish(P, z, iters):
    """Projected ascent of ``|P|`` on the sphere; only improving steps are kept."""
    val = abs(P(z))
    step = 1.0 / max(1, getattr(P, "degree", 1))
    for _ in range(iters):
        if val == 0.0:
            break
        g = P.grad(z)
        v = P(z) * np.conj(g) / val**2
        v = v - np.real(np.vdot(z, v)) * z
        nv = np.linalg.norm(v)
        if nv < 1e-15:
            break
        moved = False
        while step * nv > 1e-14:
            cand = z + step * v
            cand = cand / np.linalg.norm(cand)
            cval = abs(P(cand))
            if cval > val:
                z, val, moved = cand, cval, True
                step *= 2.0
                break
            step *= 0.5
        if not moved:
            break
    return z, val


def sup_norm(P, samples, polish_iters, seed=0):
    """Lower bound on ``sup |P|`` over the sphere and the point achieving it.

    The bound is an attained value ``|P(x)|`` at an explicit unit vector
    ``x``: best of random samples and the polynomial's own candidate points,
    then refined by ascent.
    """
    rng = np.random.default_rng(seed)
    pts = random_sphere(rng, max(samples, 1), P.dim)
    extra = getattr(P, "candidate_points", None)
    if extra is not None:
        pts = np.vstack([pts, extra()])
    vals = np.abs(P(pts))
    best = int(np.argmax(vals))
    z, val = _polish(P, pts[best], polish_iters)
    return float(val), z


def zonal_sum_excess(n, x):
    """``sum_{m>=1} (m+2)^(2n-2) exp(-m^2 x / 2)`` with a certified tail."""
    if not x > 0:
        raise ValueError("x = delta^2 k must be positive")
    power = 2 * n - 2
    total = 0.0
    m = 1
    while True:
        term = math.exp(power * math.log(m + 2) - m * m * x / 2.0)
        total += term
        # consecutive-term ratio is decreasing in m, so a geometric tail bounds the rest
        nxt = math.exp(power * math.log(m + 3) - (m + 1) ** 2 * x / 2.0)
        ratio = ((m + 4) / (m + 3)) ** power * math.exp(-(2 * m + 3) * x / 2.0)
        if ratio < 1.0:
            tail = nxt / (1.0 - ratio)
            if tail <= SUM_RTOL * (1.0 + total) or nxt == 0.0:
                return total + tail
        m += 1


def zonal_sum_bound(n, delta, k):
    """Upper bound on ``|P|`` for a unit-coefficient zonal polynomial of
    degree ``k`` whose centers are ``delta``-separated."""
    if not delta > 0 or k < 1:
        raise ValueError("need delta > 0 and k >= 1")
    return 1.0 + zonal_sum_excess(n, delta * delta * k)


# -- gap series ----------------------------------------------------------------


@dataclass(frozen=True)
class GapTerm:
    degree: int
    poly: object
    supnorm_hint: float | None = None

    def upper(self):
        return self.supnorm_hint if self.supnorm_hint is not None else self.poly.coefficient_bound()


@dataclass(frozen=True)
class GapSeries:
    """Stored prefix of ``sum_k P_{n_k}``.

    ``continuation_sup`` declares that the series continues past the stored
    terms with degrees growing by at least ``gap_ratio`` and sup norms at most
    ``continuation_sup``; without it the series is exactly its stored terms.
    """

    terms: tuple
    gap_ratio: float | None = None
    continuation_sup: float | None = None

    def __post_init__(self):
        terms = tuple(self.terms)
        degs = [t.degree for t in terms]
        if any(b <= a for a, b in zip(degs, degs[1:])):
            raise ValueError("degrees must be strictly increasing")
        for t in terms:
            pdeg = t.poly.degree
            if pdeg != t.degree:
                raise ValueError(f"term degree {t.degree} differs from polynomial degree {pdeg}")
        if self.gap_ratio is not None:
            for a, b in zip(degs, degs[1:]):
                if a > 0 and b / a < self.gap_ratio:
                    raise ValueError(f"degrees {a} -> {b} break the declared gap ratio {self.gap_ratio}")
        if self.continuation_sup is not None and not (self.gap_ratio and self.gap_ratio > 1):
            raise ValueError("a continuation needs a gap ratio > 1")
        object.__setattr__(self, "terms", terms)

    @property
    def degrees(self):
        return [t.degree for t in self.terms]

    @property
    def dim(self):
        return self.terms[0].poly.dim

    def prefix(self, count):
        return GapSeries(self.terms[:count], self.gap_ratio, self.continuation_sup)

    def __call__(self, z):
        return sum_terms([t.poly for t in self.terms], z)


def sum_terms(polys, z):
    z = np.asarray(z, dtype=complex)
    acc = np.zeros(np.atleast_2d(z).shape[0], dtype=complex)
    for P in polys:
        acc = acc + np.atleast_1d(P(z))
    return acc[0] if z.ndim == 1 else acc


def check_hadamard(f: GapSeries):
    degs = f.degrees
    if len(degs) < 2:
        return True, math.inf
    ratios = [b / a if a > 0 else math.inf for a, b in zip(degs, degs[1:])]
    c = min(ratios)
    return c > 1, c


def _continuation_tail(f, modulus):
    if f.continuation_sup is None or not f.terms:
        return 0.0
    if modulus == 0.0:
        return 0.0
    last = f.terms[-1].degree
    nxt = max(last + 1, math.ceil(last * f.gap_ratio))
    # degrees n_{K+s} >= nxt * c^(s-1) >= nxt + (s-1) nxt (c-1): geometric majorant
    log_r = math.log(modulus)
    first = math.exp(nxt * log_r)
    rho = math.exp(nxt * (f.gap_ratio - 1.0) * log_r)
    return f.continuation_sup * first / (1.0 - rho)


def eval_series(f: GapSeries, z, tol):
    """Partial sum of ``f`` at one point with a rigorous remainder bound.

    Terms are added in degree order until the bound on everything not yet
    added (later stored terms plus any declared continuation) drops to
    ``tol``.  The remainder bound is returned even when it exceeds ``tol``.
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1:
        raise ValueError("eval_series takes a single point")
    modulus = float(np.linalg.norm(z))
    if modulus >= 1.0:
        raise SeriesDomainError("|z| must be < 1")
    cont = _continuation_tail(f, modulus)
    uppers = []
    for t in f.terms:
        u = t.upper()
        if u is None or not np.isfinite(u):
            raise ValueError("every term needs a finite sup-norm upper bound")
        uppers.append(u * (modulus ** t.degree if t.degree else 1.0))
    remaining = np.concatenate((np.cumsum(uppers[::-1])[::-1], [0.0]))
    value = 0j
    for i, t in enumerate(f.terms):
        if remaining[i] + cont <= tol:
            return value, float(remaining[i] + cont)
        value += complex(t.poly(z))
    return value, float(cont)


@dataclass
class Profile:
    degrees: list
    mu_values: list
    a_lower: list
    a_upper: list
    in_Hmu: str
    in_little: str
    little_threshold: float
    sup_a_upper: float
    bound_source: list = field(default_factory=list)

    def rows(self):
        return [
            {"k": k, "n_k": n, "a_lower": lo, "a_upper": hi}
            for k, (n, lo, hi) in enumerate(zip(self.degrees, self.a_lower, self.a_upper))
        ]

    def to_dict(self):
        return {
            "in_Hmu": self.in_Hmu,
            "in_little": self.in_little,
            "little_threshold": self.little_threshold,
            "tail_fraction": 1 / 3,
            "sup_a_upper": self.sup_a_upper,
            "bound_source": self.bound_source,
            "rows": self.rows(),
        }


def _mu_at_degree(w, n_k):
    if n_k <= 1:
        return w(0.0)
    return math.exp(w.log_at_gap(1.0 / n_k))


def membership_profile(f: GapSeries, w: NormalWeight, *, samples=2000, polish_iters=50,
                       little_threshold=0.1, seed=0, rtol=1e-9):
    """Bracket ``a_k = mu(1 - 1/n_k) M_{n_k}`` and read off membership trends.

    ``in_Hmu`` is ``yes`` when the upper brackets are finite and nonincreasing
    over the last third of the terms, ``no`` when the lower brackets strictly
    increase there, and ``reported-sup`` otherwise.  ``in_little`` is ``yes``
    when every upper bracket in the last third is below ``little_threshold``.
    """
    is_gap, c = check_hadamard(f)
    if not is_gap:
        raise ValueError(f"series has no Hadamard gap (min degree ratio {c})")
    degs, mus, lo, hi, src = [], [], [], [], []
    for idx, t in enumerate(f.terms):
        mu_k = _mu_at_degree(w, t.degree)
        if t.supnorm_hint is not None:
            m_lo = m_hi = t.supnorm_hint
            src.append("hint")
        else:
            m_lo, _ = sup_norm(t.poly, samples, polish_iters, seed=seed + idx)
            m_hi = t.poly.coefficient_bound()
            src.append("sampled/coefficients")
        degs.append(t.degree)
        mus.append(mu_k)
        lo.append(mu_k * m_lo)
        hi.append(mu_k * m_hi)
    tail = max(2, math.ceil(len(degs) / 3))
    hi_t, lo_t = np.array(hi[-tail:]), np.array(lo[-tail:])
    finite = bool(np.all(np.isfinite(hi)))
    if finite and np.all(np.diff(hi_t) <= rtol * np.abs(hi_t[:-1])):
        in_h = "yes"
    elif np.all(np.diff(lo_t) > 0):
        in_h = "no"
    else:
        in_h = "reported-sup"
    in_l = "yes" if np.all(hi_t < little_threshold) else "no"
    return Profile(degs, mus, lo, hi, in_h, in_l, little_threshold, float(max(hi)), src)


def weighted_grid_sup(f, w: NormalWeight, dim, *, radial=200, r_max=1 - 1e-4, directions=200, seed=0):
    """Grid maximum of ``mu(|z|) |f(z)|`` over ``|z| <= r_max``.

    Radii are geometric in ``1 - r``; directions are random plus the basis.
    """
    rng = np.random.default_rng(seed)
    dirs = np.vstack([np.eye(dim, dtype=complex), random_sphere(rng, directions, dim)])
    gaps = np.geomspace(1.0, 1.0 - r_max, radial)
    best = 0.0
    for g in gaps:
        r = 1.0 - g
        vals = np.abs(f(r * dirs))
        best = max(best, float(w(r) * vals.max()))
    return best


# -- coefficient estimate from the norm -----------------------------------------


def cauchy_coefficient_bound(norm_f, w: NormalWeight, k, r):
    """``norm_f / (r^k mu(r))``: bound on ``M_k`` for ``f`` of weighted norm ``norm_f``."""
    if not (0 < r < 1):
        raise SeriesDomainError("r must lie in (0, 1)")
    return norm_f / (r**k * w(r))


def cauchy_constant(k):
    """``(1 - 1/k)^(-k)``; equals 4 at ``k = 2`` and decreases to ``e``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 2):
        raise ValueError("k must be at least 2")
    out = np.exp(-k * np.log1p(-1.0 / k))
    return float(out) if out.ndim == 0 else out


def patched_coefficient_constant(norm_f, w: NormalWeight, m1):
    """``max(mu(0) M_1, 4 norm_f)``: bound covering the low degrees too."""
    return max(w(0.0) * m1, 4.0 * norm_f)


def lacunary_family(terms, w: NormalWeight, *, profile="one", dim=2, base=2):
    """``sum_k s_k <z, e1>^(base^k) / mu(1 - base^-k)`` with ``s_k`` set by ``profile``.

    ``one`` gives ``a_k = 1``, ``damped`` gives ``1/(k+1)`` and ``amplified``
    gives ``k+1``.  Sup norms are exact and attached as hints.
    """
    scales = {"one": lambda k: 1.0, "damped": lambda k: 1.0 / (k + 1), "amplified": lambda k: k + 1.0}
    if profile not in scales:
        raise ValueError(f"profile must be one of {sorted(scales)}")
    e1 = np.zeros(dim, dtype=complex)
    e1[0] = 1.0
    out = []
    for k in range(terms):
        deg = base**k
        c = scales[profile](k) / _mu_at_degree(w, deg)
        out.append(GapTerm(deg, ZonalPolynomial(deg, e1[None, :], np.array([c], dtype=complex)), c))
    return GapSeries(tuple(out), gap_ratio=float(base))
