"""Lacunary witness families whose moduli jointly dominate ``1/mu(|z|)``.

For each level ``(j, v)`` with exponent ``e = v*M + j`` a maximal
``A*delta/2``-separated set is split into ``M`` classes, each
``delta``-separated, where ``A^2 p^e delta^2 = 1``.  The polynomial used by
``g[i, j]`` at level ``v`` sums ``<z, xi>^(p^e)`` over class ``tau^i(j)``.  The
``h`` family repeats this with degrees ``q_e = ceil(p^(e + 1/2))``.

Lower bounds on ``|g[i, j](z)|`` are assembled from magnitudes only, in log
form, so they remain computable at degrees far beyond direct evaluation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from .polyseries import GapSeries, GapTerm, ZonalPolynomial, zonal_sum_excess
from .sphere import (SeparatedSet, conflict_graph, decompose_separated,
                     maximal_separated_set, random_sphere)
from .weights import NormalWeight

MODES = ("strict", "desk", "micro")
# (inner-sum target for A, target for the two ratio constraints on p)
MODE_CONSTANTS = {
    "strict": {"a_sum": 1 / 27, "ratio": 1 / 200},
    "desk": {"a_sum": 1 / 3, "ratio": 1 / 20},
    "micro": {"a_sum": None, "ratio": None},
}
P_CONSTRAINTS = ("normality_onset", "shell_power", "inner_sum", "outer_tail")
DIRECT_DEGREE_LIMIT = 10**4
SHELL_RTOL = 1e-12


class LevelUnavailable(RuntimeError):
    """The requested level has no point set (it exceeded the cardinality budget)."""


class ShellError(ValueError):
    pass


# -- log-domain helpers ------------------------------------------------------------


def log_power_modulus(log_degree, gap):
    """``degree * log(1 - gap)`` with the degree given by its logarithm.

    Works for degrees like ``p**40`` and gaps far below machine epsilon.
    """
    return -math.exp(log_degree + math.log(-math.log1p(-gap)))


def log_mu_at_degree(w: NormalWeight, log_degree):
    """``log mu(1 - 1/degree)``."""
    if log_degree <= 0.0:
        return math.log(w(0.0))
    return w.log_at_gap(math.exp(-log_degree))


# -- parameter selection -------------------------------------------------------------


def a_constraint_sum(n, A):
    """Inner sum over ``m >= 1`` that ``A`` must keep small."""
    return zonal_sum_excess(n, 1.0 / (A * A))


def select_A(n, grid=0.01, target=1 / 27):
    """Largest grid value ``A`` in ``(0, 1)`` whose constraint sum is ``<= target``."""
    if not (0 < grid <= 0.01):
        raise ValueError("grid step must lie in (0, 0.01]")
    steps = int(math.floor((1.0 - 1e-12) / grid))
    best = None
    # the sum increases with A, so scan upward and stop at the first failure
    for k in range(1, steps + 1):
        A = round(k * grid, 12)
        if A >= 1.0:
            break
        if a_constraint_sum(n, A) <= target:
            best = A
        else:
            break
    if best is None:
        raise ValueError("no grid value satisfies the constraint; refine the grid")
    return best


def p_constraints(w: NormalWeight, M, p, ratio_target=1 / 200):
    """Truth value of each of the four requirements on ``p``."""
    lp = math.log(p)
    out = {
        "normality_onset": 1.0 - 1.0 / p >= w.delta0,
        "shell_power": 1 / 3 <= (1.0 - 1.0 / p) ** p <= 1 / 2,
    }
    aM = w.alpha * M * lp
    out["inner_sum"] = aM > 0 and 1.0 / math.expm1(aM) <= ratio_target
    # p^(beta M) 2^(-p^(M-1/2)) / (1 - p^(beta M) 2^(-(p^(2M-1/2) - p^(M-1/2))))
    bM = w.beta * M * lp
    lp1 = (M - 0.5) * lp
    lp2 = (2 * M - 0.5) * lp
    big1 = math.exp(lp1) if lp1 < 700 else math.inf
    big2 = math.exp(lp2) if lp2 < 700 else math.inf
    log_num = bM - big1 * math.log(2.0)
    diff = big2 - big1 if math.isfinite(big2) else math.inf
    log_sub = bM - diff * math.log(2.0)
    den = -math.expm1(log_sub) if log_sub < 700 else -math.inf
    if den <= 0:
        out["outer_tail"] = False
    else:
        out["outer_tail"] = log_num - math.log(den) <= math.log(ratio_target)
    return out


def select_p(w: NormalWeight, M, A=None, *, ratio_target=1 / 200, constraints=P_CONSTRAINTS,
             cap=10**6, start=2):
    """Smallest integer ``p >= start`` meeting every selected constraint.

    ``A`` does not enter the constraints; it is accepted so call sites can
    pass the full parameter set.
    """
    unknown = set(constraints) - set(P_CONSTRAINTS)
    if unknown:
        raise ValueError(f"unknown constraints {sorted(unknown)}")
    last = None
    for p in range(start, cap + 1):
        ok = p_constraints(w, M, p, ratio_target)
        if all(ok[c] for c in constraints):
            return p
        last = ok
    failing = [c for c in constraints if last and not last[c]]
    raise ValueError(f"no p <= {cap} found; still failing at the cap: {failing}")


def estimate_M(n, A, probe_seps, seed, *, budget=20000, detail=False):
    """Empirical colour count for splitting ``(A/2) delta`` packings into
    ``delta``-separated classes, maximised over the probe scales."""
    if not probe_seps:
        raise ValueError("need at least one probe scale")
    counts = []
    for t, delta in enumerate(probe_seps):
        if not (0 < delta < 1):
            raise ValueError("probe scales must lie in (0, 1)")
        sub = _derive_seed(seed, 0, t)
        g = maximal_separated_set(n, min(1.0, 0.5 * A * delta), sub, budget)
        target = max(delta, g.separation)
        counts.append(len(decompose_separated(g, target)))
    return (max(counts), counts) if detail else max(counts)


def delta_schedule(A, p, M, j, v):
    """``delta_{j,v} = 1 / (A p^((vM+j)/2))``."""
    if not (1 <= j <= M) or v < 0:
        raise ValueError("need 1 <= j <= M and v >= 0")
    return math.exp(-math.log(A) - 0.5 * (v * M + j) * math.log(p))


def tau_power(M, i, j):
    """The cyclic shift ``j -> j+1 (mod M)`` applied ``i`` times, on ``1..M``."""
    if not (1 <= j <= M):
        raise ValueError(f"j={j} outside 1..{M}")
    if i < 0:
        raise ValueError("i must be nonnegative")
    return (j - 1 + i) % M + 1


def q_term(p, k):
    """``ceil(p^(k + 1/2))`` in exact integer arithmetic."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    x = p ** (2 * k + 1)
    r = math.isqrt(x)
    return r if r * r == x else r + 1


def epsilon_schedule(A, q):
    return 1.0 / (A * math.sqrt(q))


def _derive_seed(seed, *keys):
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# -- parameters ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessParams:
    n: int
    A: float
    p: int
    M: int
    mode: str
    depth: int
    weight: NormalWeight
    tail: bool | None = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n < 2:
            raise ValueError("witness construction needs n >= 2 (d vanishes on the circle)")
        if not (0 < self.A <= 1):
            raise ValueError("A must lie in (0, 1]")
        if self.p < 2 or self.M < 1 or self.depth < 0:
            raise ValueError("need p >= 2, M >= 1, depth >= 0")
        if self.tail is None:
            object.__setattr__(self, "tail", self.mode != "micro")
        if not self.constants:
            object.__setattr__(self, "constants", dict(MODE_CONSTANTS[self.mode]))

    def check(self):
        """Which of the mode's constraints hold, as ``{name: bool}``."""
        consts = self.constants
        out = {}
        if consts.get("a_sum") is not None:
            out["A"] = a_constraint_sum(self.n, self.A) <= consts["a_sum"]
        if consts.get("ratio") is not None:
            out.update(p_constraints(self.weight, self.M, self.p, consts["ratio"]))
        return out

    def validate(self):
        bad = [k for k, ok in self.check().items() if not ok]
        if bad:
            raise ValueError(f"{self.mode} parameters violate: {bad}")
        return self

    @property
    def lemma_constant(self):
        """Bound on every level polynomial from its separation and degree."""
        return 1.0 + a_constraint_sum(self.n, self.A)

    def to_config(self):
        return {"n": self.n, "A": self.A, "p": self.p, "M": self.M, "mode": self.mode,
                "depth": self.depth, "tail": self.tail, "constants": self.constants,
                "weight": self.weight.to_config()}

    @classmethod
    def from_config(cls, cfg):
        return cls(n=int(cfg["n"]), A=float(cfg["A"]), p=int(cfg["p"]), M=int(cfg["M"]),
                   mode=cfg["mode"], depth=int(cfg["depth"]),
                   weight=NormalWeight.from_config(cfg["weight"]), tail=cfg.get("tail"),
                   constants=dict(cfg.get("constants") or {}))


def resolve_params(n, weight, mode, depth, *, A=None, p=None, M=None, probe_seps=(0.2, 0.4),
                   seed=0, grid=0.01, tail=None, m_budget=20000):
    """Fill in whatever of ``A``, ``M``, ``p`` is missing, in that order."""
    consts = dict(MODE_CONSTANTS[mode])
    if mode == "micro":
        A = 1.0 if A is None else A
        M = 2 if M is None else M
        p = 2 if p is None else p
    else:
        if A is None:
            A = select_A(n, grid, consts["a_sum"])
        if M is None:
            M = estimate_M(n, A, list(probe_seps), seed, budget=m_budget)
        if p is None:
            p = select_p(weight, M, A, ratio_target=consts["ratio"])
    return WitnessParams(n, A, p, M, mode, depth, weight, tail=tail, constants=consts)


# -- levels -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class Level:
    kind: str
    j: int
    v: int
    exponent: int
    degree: int
    delta: float
    union: SeparatedSet | None
    labels: np.ndarray | None
    status: str
    under_separated: bool = False
    coarse: bool = False
    sampled_sup: tuple = ()

    @property
    def constructed(self):
        return self.status == "constructed"

    @property
    def log_degree(self):
        return math.log(self.degree)

    def class_points(self, l):
        return self.union.points[self.labels == l]

    def class_size(self, l):
        return int(np.count_nonzero(self.labels == l))


def bounded_coloring(points, target, M):
    """Greedy colouring with at most ``M`` colours (labels ``1..M``).

    A point with every colour blocked takes the colour with the fewest
    conflicting neighbours; the second return value reports whether that
    happened.
    """
    adj = conflict_graph(points, target)
    labels = np.zeros(len(adj), dtype=int)
    forced = False
    for v in range(len(adj)):
        used = [labels[w] for w in adj[v] if labels[w] > 0]
        free = [c for c in range(1, M + 1) if c not in used]
        if free:
            labels[v] = free[0]
        else:
            counts = np.bincount(used, minlength=M + 1)[1:]
            labels[v] = int(np.argmin(counts)) + 1
            forced = True
    return labels, forced


def _level_geometry(params, kind, j, v):
    e = v * params.M + j
    if kind == "g":
        degree = params.p**e
        delta = delta_schedule(params.A, params.p, params.M, j, v)
    else:
        degree = q_term(params.p, e)
        delta = epsilon_schedule(params.A, degree)
    return e, degree, delta


def build_level(params, kind, j, v, *, seed, budget, rejections=20000, sup_samples=2000):
    e, degree, delta = _level_geometry(params, kind, j, v)
    sep = min(1.0, params.A * delta / 2.0)
    target = min(1.0, delta)
    coarse = delta >= 1.0
    predicted = sep ** (-(2 * params.n - 2))
    base = dict(kind=kind, j=j, v=v, exponent=e, degree=degree, delta=delta, coarse=coarse)
    if predicted > budget:
        return Level(union=None, labels=None, status="unconstructed", **base)
    level_seed = _derive_seed(seed, 1 if kind == "g" else 2, j, v)
    union = maximal_separated_set(params.n, sep, level_seed, rejections, max_points=budget)
    if union.meta.get("aborted"):
        return Level(union=None, labels=None, status="unconstructed", **base)
    labels, forced = bounded_coloring(union.points, target, params.M)
    under = forced or coarse
    sups = []
    if degree <= DIRECT_DEGREE_LIMIT and sup_samples:
        rng = np.random.default_rng(level_seed)
        probe = random_sphere(rng, sup_samples, params.n)
        for l in range(1, params.M + 1):
            pts = union.points[labels == l]
            if len(pts) == 0:
                sups.append(0.0)
                continue
            P = ZonalPolynomial(degree, pts)
            sups.append(float(max(np.abs(P(probe)).max(), np.abs(P(pts)).max())))
    return Level(union=union, labels=labels, status="constructed", under_separated=under,
                 sampled_sup=tuple(sups), **base)


# -- the family ---------------------------------------------------------------------------------


@dataclass
class WitnessFamily:
    params: WitnessParams
    levels: dict  # (kind, j, v) -> Level
    seed: int = 0
    budget: int = 0

    def level(self, kind, j, v):
        return self.levels[(kind, j, v)]

    @property
    def gammas(self):
        return {(j, v): lv for (k, j, v), lv in self.levels.items() if k == "g"}

    @property
    def psis(self):
        return {(j, v): lv for (k, j, v), lv in self.levels.items() if k == "h"}

    @property
    def q(self):
        top = (self.params.depth + 1) * self.params.M
        return [q_term(self.params.p, k) for k in range(top + 1)]

    def class_index(self, i, j):
        return tau_power(self.params.M, i, j)

    def coefficient_log(self, degree):
        return -log_mu_at_degree(self.params.weight, math.log(degree))

    def series(self, kind, i, j):
        """Gap series for ``g[i, j]`` or ``h[i, j]`` over the constructed prefix of levels."""
        terms = []
        l = self.class_index(i, j)
        for v in range(self.params.depth + 1):
            lv = self.levels[(kind, j, v)]
            if not lv.constructed:
                break
            pts = lv.class_points(l)
            coeff = math.exp(self.coefficient_log(lv.degree))
            if len(pts):
                poly = ZonalPolynomial(lv.degree, pts, np.full(len(pts), coeff, dtype=complex),
                                       separation=lv.delta)
            else:
                poly = _ZeroForm(lv.degree, self.params.n)
            terms.append(GapTerm(lv.degree, poly))
        return GapSeries(tuple(terms))

    @property
    def g_series(self):
        M = self.params.M
        return {(i, j): self.series("g", i, j) for i in range(1, M + 1) for j in range(1, M + 1)}

    @property
    def h_series(self):
        M = self.params.M
        return {(i, j): self.series("h", i, j) for i in range(1, M + 1) for j in range(1, M + 1)}

    def directly_evaluable(self, kind):
        """True when every level is built and small enough to evaluate exactly,
        and the family has no implicit levels beyond ``depth``."""
        if self.params.tail:
            return False
        return all(lv.constructed and lv.degree <= DIRECT_DEGREE_LIMIT
                   for (k, _, _), lv in self.levels.items() if k == kind)

    def direct(self, kind, i, j, z):
        """Exact value of the (finite) series ``kind[i, j]`` at the points ``z``."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        acc = np.zeros(z.shape[0], dtype=complex)
        l = self.class_index(i, j)
        for v in range(self.params.depth + 1):
            lv = self.levels[(kind, j, v)]
            if not lv.constructed:
                raise LevelUnavailable(f"level {kind}{(j, v)} has no point set")
            pts = lv.class_points(l)
            if len(pts) == 0:
                continue
            w = z @ pts.conj().T
            acc += (w ** lv.degree).sum(axis=1) * math.exp(self.coefficient_log(lv.degree))
        return acc

    def level_bound(self, kind, i, j, v):
        """Upper bound on ``sup |P|`` for the level polynomial used by ``kind[i, j]`` at ``v``."""
        lemma = self.params.lemma_constant
        if v > self.params.depth:
            return lemma
        lv = self.levels[(kind, j, v)]
        if not lv.constructed:
            return lemma
        size = float(lv.class_size(self.class_index(i, j)))
        return size if lv.under_separated else min(size, lemma)

    def summary(self):
        rows = []
        for (kind, j, v), lv in sorted(self.levels.items()):
            rows.append({"kind": kind, "j": j, "v": v, "exponent": lv.exponent,
                         "degree": str(lv.degree), "delta": lv.delta, "status": lv.status,
                         "points": 0 if lv.union is None else len(lv.union),
                         "under_separated": lv.under_separated, "coarse": lv.coarse,
                         "sampled_sup_max": max(lv.sampled_sup) if lv.sampled_sup else None})
        return rows


class _ZeroForm:
    """Empty class: the zero polynomial of a given degree."""

    def __init__(self, degree, dim):
        self.degree = degree
        self.dim = dim

    def __call__(self, z):
        z = np.asarray(z)
        return np.zeros(np.atleast_2d(z).shape[0], dtype=complex) if z.ndim > 1 else 0j

    def coefficient_bound(self):
        return 0.0


def build_witness_family(params: WitnessParams, cardinality_budget, seed, *, threads=1,
                         rejections=20000, sup_samples=2000):
    if cardinality_budget < 1:
        raise ValueError("cardinality budget must be positive")
    if params.n < 2:
        raise ValueError("witness construction needs n >= 2")
    keys = [(kind, j, v) for kind in ("g", "h") for v in range(params.depth + 1)
            for j in range(1, params.M + 1)]

    def work(key):
        kind, j, v = key
        return build_level(params, kind, j, v, seed=seed, budget=cardinality_budget,
                           rejections=rejections, sup_samples=sup_samples)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            built = list(ex.map(work, keys))
    else:
        built = [work(k) for k in keys]
    return WitnessFamily(params, dict(zip(keys, built)), seed=seed, budget=cardinality_budget)


# -- certified lower bound ------------------------------------------------------------------------


@dataclass(frozen=True)
class CertifiedBound:
    bound: float
    I1_lower: float
    I2_upper: float
    I3_upper: float
    i: int
    zeta_index: int
    nearest_distance: float
    log_mu_level: float

    @property
    def parts(self):
        return {"I1_lower": self.I1_lower, "I2_upper": self.I2_upper, "I3_upper": self.I3_upper}


def shell_gaps(p, e, kind):
    """``(smallest gap, largest gap)`` for the g- or h-shell at exponent ``e``."""
    lp = math.log(p)
    if kind == "g":
        return math.exp(-(e + 0.5) * lp), math.exp(-e * lp)
    return math.exp(-(e + 1.0) * lp), math.exp(-(e + 0.5) * lp)


def _level_log_degree(fam, kind, j, k):
    e = k * fam.params.M + j
    if kind == "g":
        return e * math.log(fam.params.p)
    return math.log(q_term(fam.params.p, e))


def _level_log_term(fam, kind, i, j, k, gap):
    """``log(B_k |z|^deg_k / mu(1 - 1/deg_k))`` for level ``k`` of ``kind[i, j]``."""
    ld = _level_log_degree(fam, kind, j, k)
    return (math.log(fam.level_bound(kind, i, j, k)) + log_power_modulus(ld, gap)
            - log_mu_at_degree(fam.params.weight, ld))


def _logsumexp(logs):
    logs = [x for x in logs if x > -math.inf]
    if not logs:
        return -math.inf
    top = max(logs)
    return top + math.log(sum(math.exp(x - top) for x in logs))


def _upper_tail_log(fam, kind, i, j, v, gap):
    """log of ``sum_{k > v} B_k |z|^deg_k / mu_k``, with a certified geometric remainder."""
    params = fam.params
    last = params.depth if not params.tail else None
    logs = []
    k = v + 1
    beta = params.weight.beta
    log_mod = math.log1p(-gap)
    while True:
        if last is not None and k > last:
            return _logsumexp(logs)
        logs.append(_level_log_term(fam, kind, i, j, k, gap))
        if last is None and k > params.depth:
            ld_k = _level_log_degree(fam, kind, j, k)
            ld_n = _level_log_degree(fam, kind, j, k + 1)
            gap_k = math.exp(-ld_k)
            if 1.0 - gap_k >= params.weight.delta0:
                # ratio of consecutive terms beyond k, bounded by normality
                step = math.exp(ld_n) - math.exp(ld_k)
                log_rho = beta * (ld_n - ld_k) + step * log_mod
                total = _logsumexp(logs)
                if log_rho < math.log(0.5) and logs[-1] + log_rho - math.log1p(-math.exp(log_rho)) < total - 40:
                    return _logsumexp(logs + [logs[-1] + log_rho - math.log1p(-math.exp(log_rho))])
        k += 1
        if k > v + 10000:
            raise RuntimeError("tail summation did not converge")


def certified_lower_bound(fam: WitnessFamily, z_modulus, j, v, eta, *, kind="g", gap=None):
    """Certified lower bound on ``|kind[i, j](|z| eta)|`` for the class that owns
    the point of the level set nearest to ``eta``.

    ``gap`` (``1 - |z|``) may be passed instead of ``z_modulus`` when the
    modulus is too close to 1 to represent.
    """
    params = fam.params
    if gap is None:
        gap = 1.0 - z_modulus
    if not (1 <= j <= params.M) or v < 0:
        raise ValueError("level index out of range")
    e = v * params.M + j
    lo, hi = shell_gaps(params.p, e, kind)
    if not (lo * (1 - SHELL_RTOL) <= gap <= hi * (1 + SHELL_RTOL)):
        raise ShellError(f"|z| with gap {gap} is outside the {kind}-shell of exponent {e}")
    if v > params.depth:
        raise LevelUnavailable(f"level {kind}{(j, v)} is beyond the family depth")
    lv = fam.levels[(kind, j, v)]
    if not lv.constructed:
        raise LevelUnavailable("level-unavailable")
    eta = np.asarray(eta, dtype=complex)
    absip = np.abs(lv.union.points @ eta.conj())
    zi = int(np.argmax(absip))  # first maximiser: lowest index wins ties
    l = int(lv.labels[zi])
    i = (l - j) % params.M or params.M
    members = np.flatnonzero(lv.labels == l)
    ld = lv.log_degree
    with np.errstate(divide="ignore"):
        logs = np.exp(ld) * np.log(np.clip(absip[members], 0.0, 1.0))
    main = float(np.exp(logs[members == zi][0]))
    rest = float(np.exp(logs[members != zi]).sum())
    log_mu_e = log_mu_at_degree(params.weight, ld)
    scale = math.exp(log_power_modulus(ld, gap) - log_mu_e)
    I1 = scale * (main - rest)
    I2 = math.exp(_logsumexp([_level_log_term(fam, kind, i, j, k, gap) for k in range(v)])) if v else 0.0
    I3 = math.exp(_upper_tail_log(fam, kind, i, j, v, gap))
    dist = math.sqrt(max(0.0, 1.0 - float(absip[zi]) ** 2))
    return CertifiedBound(I1 - I2 - I3, I1, I2, I3, i, zi, dist, log_mu_e)


# -- growth verification ------------------------------------------------------------------------------


@dataclass
class ShellRow:
    kind: str
    j: int
    v: int
    exponent: int
    samples: int
    coverage: str
    min_mu_cert: float | None = None
    argmin_gap: float | None = None
    argmin_eta: list | None = None
    min_mu_direct: float | None = None
    cross_check_violations: int = 0
    i1_below_reference: int = 0
    meets_target: bool | None = None
    under_separated: bool | None = None
    curve: list = field(default_factory=list)

    def to_dict(self):
        return {"shell": f"{self.kind}:{self.j}:{self.v}", "kind": self.kind, "j": self.j,
                "v": self.v, "exponent": self.exponent, "samples": self.samples,
                "coverage": self.coverage, "min_mu_cert": self.min_mu_cert,
                "argmin_gap": self.argmin_gap, "argmin_eta": self.argmin_eta,
                "min_mu_direct": self.min_mu_direct,
                "cross_check_violations": self.cross_check_violations,
                "i1_below_reference": self.i1_below_reference,
                "meets_target": self.meets_target, "under_separated": self.under_separated}


@dataclass
class GrowthReport:
    rows: list
    C_emp: float | None
    C_cert: float | None
    target: float
    mode: str

    def to_dict(self):
        return {"mode": self.mode, "C_emp": self.C_emp, "C_cert": self.C_cert,
                "target": self.target, "rows": [r.to_dict() for r in self.rows],
                "verified": [r.to_dict()["shell"] for r in self.rows if r.coverage == "verified"],
                "unverified": [r.to_dict()["shell"] for r in self.rows if r.coverage != "verified"]}


def _shell_samples(rng, count, n, lo, hi):
    """Gaps log-uniform on ``[lo, hi]`` (endpoints first) and uniform directions.

    Each sample consumes one row of normals, so a longer run extends a
    shorter one with the same seed.
    """
    raw = rng.standard_normal((count, 2 * n + 1))
    u = ndtr(raw[:, 0])
    u[:2] = [0.0, 1.0][: min(2, count)]
    gaps = np.exp(math.log(lo) + u * (math.log(hi) - math.log(lo)))
    z = raw[:, 1:n + 1] + 1j * raw[:, n + 1:]
    return gaps, z / np.linalg.norm(z, axis=1, keepdims=True)


def _verify_shell(fam, kind, j, v, count, seed, target):
    params = fam.params
    e = v * params.M + j
    row = ShellRow(kind, j, v, e, count, "verified")
    if v > params.depth or not fam.levels[(kind, j, v)].constructed:
        row.coverage = "unverified - cardinality"
        return row
    row.under_separated = fam.levels[(kind, j, v)].under_separated
    lo, hi = shell_gaps(params.p, e, kind)
    rng = np.random.default_rng(_derive_seed(seed, 3 if kind == "g" else 4, j, v))
    gaps, etas = _shell_samples(rng, count, params.n, lo, hi)
    direct_ok = fam.directly_evaluable(kind)
    M = params.M
    best_cert = math.inf
    best_direct = math.inf
    for s in range(count):
        gap, eta = float(gaps[s]), etas[s]
        cb = certified_lower_bound(fam, None, j, v, eta, kind=kind, gap=gap)
        mu = math.exp(params.weight.log_at_gap(gap))
        val = mu * cb.bound
        row.curve.append((1.0 - gap, val))
        if cb.I1_lower < 2.0 / 27.0 * math.exp(-cb.log_mu_level):
            row.i1_below_reference += 1
        if val < best_cert:
            best_cert = val
            row.argmin_gap = gap
            row.argmin_eta = [[float(c.real), float(c.imag)] for c in eta]
        if direct_ok:
            z = (1.0 - gap) * eta[None, :]
            vals = {(i, jj): float(abs(fam.direct(kind, i, jj, z)[0]))
                    for i in range(1, M + 1) for jj in range(1, M + 1)}
            if cb.bound > vals[(cb.i, j)] + 1e-9:
                row.cross_check_violations += 1
            best_direct = min(best_direct, mu * float(sum(vals.values())))
    row.min_mu_cert = best_cert
    row.min_mu_direct = best_direct if direct_ok else None
    row.meets_target = best_cert >= target
    return row


def verify_growth(fam: WitnessFamily, shells, samples_per_shell, seed, *, kinds=("g", "h"),
                  threads=1):
    """Sample both half-shells of each listed ``(j, v)`` and bound ``mu(|z|) |.|``."""
    if not shells:
        raise ValueError("empty shell list")
    params = fam.params
    target = 1.0 / (20.0 * params.p ** (params.weight.beta / 2.0))
    tasks = [(kind, j, v) for (j, v) in shells for kind in kinds]

    def work(t):
        return _verify_shell(fam, t[0], t[1], t[2], samples_per_shell, seed, target)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(work, tasks))
    else:
        rows = [work(t) for t in tasks]
    done = [r for r in rows if r.coverage == "verified"]
    c_emp = min((r.min_mu_direct if r.min_mu_direct is not None else r.min_mu_cert) for r in done) if done else None
    c_cert = min(r.min_mu_cert for r in done) if done else None
    return GrowthReport(rows, c_emp, c_cert, target, params.mode)


def with_depth(params: WitnessParams, depth):
    return replace(params, depth=depth)
