"""Separated point sets on the unit sphere of C^n.

Distances use the pseudo-metric ``d(x, y) = sqrt(1 - |<x, y>|^2)``, which
ignores unit phases.  It equals ``||x x* - y y*||_F / sqrt(2)``, so points are
embedded as Hermitian projectors in ``R^(n*n)`` and neighbour queries run on a
KD-tree in that space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

UNIT_TOL = 1e-12
# Insertion requires a hair more than ``sep`` so the exact pairwise check
# never disagrees with the embedded distance because of rounding.
_ACCEPT_SLACK = 1e-9


class DimensionError(ValueError):
    pass


def as_unit_vector(coords, dim=None):
    """Turn complex coordinates or ``2n`` interleaved reals into a unit vector."""
    z = np.asarray(coords)
    if not np.iscomplexobj(z):
        z = np.asarray(z, dtype=float)
        if z.shape[-1] % 2:
            raise DimensionError("real encoding needs an even number of coordinates")
        z = z[..., 0::2] + 1j * z[..., 1::2]
    z = z.astype(complex)
    if dim is not None and z.shape[-1] != dim:
        raise DimensionError(f"expected dimension {dim}, got {z.shape[-1]}")
    norms = np.linalg.norm(z, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError("coordinates are not unit norm")
    return z


def to_real_rows(points):
    """Interleave ``(Re z1, Im z1, Re z2, ...)`` for each row."""
    pts = np.atleast_2d(points)
    out = np.empty((pts.shape[0], 2 * pts.shape[1]))
    out[:, 0::2] = pts.real
    out[:, 1::2] = pts.imag
    return out


def random_sphere(rng, count, n):
    """Uniform points on the sphere: normalized standard complex Gaussians.

    Each point consumes one row of ``2n`` normals, so drawing ``a`` then ``b``
    points yields the same stream as drawing ``a + b`` at once.
    """
    raw = rng.standard_normal((count, 2 * n))
    z = raw[:, :n] + 1j * raw[:, n:]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def inner(x, y):
    """Hermitian inner product ``sum x_i conj(y_i)``."""
    return np.sum(np.asarray(x) * np.conj(np.asarray(y)), axis=-1)


def pseudo_distance(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    return np.sqrt(np.clip(1.0 - np.abs(inner(x, y)) ** 2, 0.0, 1.0))


def embed(points):
    """Real coordinates of the projector ``z z*``; Euclidean distance = sqrt(2) d."""
    pts = np.atleast_2d(points)
    n = pts.shape[1]
    cols = [np.abs(pts) ** 2]
    iu, ju = np.triu_indices(n, k=1)
    if len(iu):
        cross = pts[:, iu] * np.conj(pts[:, ju]) * math.sqrt(2.0)
        cols += [cross.real, cross.imag]
    return np.hstack(cols)


@dataclass(frozen=True)
class SeparatedSet:
    points: np.ndarray
    separation: float
    dim: int
    maximal: bool = False
    seed: int | None = None
    degenerate: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=complex))
        if pts.size == 0:
            pts = np.empty((0, self.dim), dtype=complex)
        if pts.shape[1] != self.dim:
            raise DimensionError("points do not match dim")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def min_pairwise_distance(self, sample_pairs=None, rng=None):
        return min_pairwise_distance(self.points, sample_pairs=sample_pairs, rng=rng)

    def is_separated(self, sep=None):
        sep = self.separation if sep is None else sep
        return len(self) < 2 or self.min_pairwise_distance() >= sep


def min_pairwise_distance(points, sample_pairs=None, rng=None, chunk=2048):
    """Exact minimum of ``d`` over distinct pairs (or over sampled pairs)."""
    pts = np.atleast_2d(points)
    m = pts.shape[0]
    if m < 2:
        return math.inf
    if sample_pairs is not None and m * (m - 1) // 2 > sample_pairs:
        rng = rng or np.random.default_rng(0)
        a = rng.integers(0, m, sample_pairs)
        b = (a + rng.integers(1, m, sample_pairs)) % m
        return float(pseudo_distance(pts[a], pts[b]).min())
    best = 1.0
    for start in range(0, m, chunk):
        block = pts[start:start + chunk]
        gram = np.abs(block @ pts.conj().T) ** 2
        rows = np.arange(block.shape[0])
        gram[rows, start + rows] = -np.inf
        # only pairs (i, j) with j > i, so each pair is seen once
        mask = np.arange(m)[None, :] <= (start + rows)[:, None]
        gram[mask] = -np.inf
        top = gram.max()
        if np.isfinite(top):
            best = min(best, math.sqrt(max(0.0, 1.0 - top)))
    return best


class _NeighbourIndex:
    """Incremental nearest-neighbour structure on embedded points."""

    def __init__(self, dim_embed):
        self._tree = None
        self._frozen = np.empty((0, dim_embed))
        self._recent = []

    def add(self, e):
        self._recent.append(e)
        if len(self._recent) >= 256:
            self._frozen = np.vstack([self._frozen, np.array(self._recent)])
            self._recent = []
            self._tree = cKDTree(self._frozen)

    def nearest(self, emb):
        """Embedded distance from each row of ``emb`` to the nearest stored point."""
        best = np.full(emb.shape[0], np.inf)
        if self._tree is not None:
            best, _ = self._tree.query(emb, k=1)
        if self._recent:
            d, _ = cKDTree(np.array(self._recent)).query(emb, k=1)
            best = np.minimum(best, d)
        return best


def maximal_separated_set(n, sep, seed, budget, *, batch=4096, max_points=None):
    """Greedy random packing with pairwise ``d >= sep``.

    Candidates are drawn in order from a seeded stream; each is kept when it
    is at least ``sep`` from everything kept so far.  The run stops after
    ``budget`` consecutive rejections.  Candidates are tested in batches but
    the result equals the one-at-a-time greedy order exactly.  With
    ``max_points`` set, construction aborts once the set grows past it and
    the result carries ``meta["aborted"] = True``.
    """
    if not sep > 0:
        raise ValueError("sep must be positive")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    if sep >= 1.0 and n > 1:
        # d = 1 means exact orthogonality, a null event for random draws;
        # a random orthonormal basis is the maximal such set.
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, _ = np.linalg.qr(g)
        return SeparatedSet(q.T.copy(), 1.0, n, maximal=True, seed=seed,
                            meta={"draws": n, "budget": int(budget), "aborted": False})
    if n == 1:
        pt = random_sphere(rng, 1, 1)
        return SeparatedSet(pt, min(sep, 1.0), 1, maximal=True, seed=seed, degenerate=True,
                            meta={"draws": 1, "budget": budget})
    radius = math.sqrt(2.0) * sep * (1.0 + _ACCEPT_SLACK)
    first = random_sphere(rng, 1, n)
    kept = [first[0]]
    index = _NeighbourIndex(embed(first).shape[1])
    index.add(embed(first)[0])
    draws, since_accept, aborted = 1, 0, False
    while since_accept < budget:
        cand = random_sphere(rng, batch, n)
        emb = embed(cand)
        free = np.flatnonzero(index.nearest(emb) >= radius)
        pos = 0  # candidates of this batch already processed
        new_emb = []
        for idx in free:
            if since_accept + (idx - pos) >= budget:
                break
            since_accept += idx - pos
            pos = idx + 1
            e = emb[idx]
            if new_emb:
                dn = np.sqrt(((np.array(new_emb) - e) ** 2).sum(-1)).min()
                if dn < radius:
                    since_accept += 1
                    continue
            new_emb.append(e)
            kept.append(cand[idx])
            index.add(e)
            since_accept = 0
            if max_points is not None and len(kept) > max_points:
                aborted = True
                break
        if aborted:
            draws += pos
            break
        take = min(batch - pos, budget - since_accept)
        since_accept += take
        draws += pos + take
    pts = np.array(kept)
    degenerate = len(pts) == 1
    return SeparatedSet(pts, sep, n, maximal=not aborted, seed=seed, degenerate=degenerate,
                        meta={"draws": int(draws), "budget": int(budget), "aborted": aborted})


def conflict_graph(points, target):
    """Adjacency lists for pairs with ``d < target``."""
    pts = np.atleast_2d(points)
    m = pts.shape[0]
    adj = [[] for _ in range(m)]
    if m < 2:
        return adj
    tree = cKDTree(embed(pts))
    pairs = tree.query_pairs(math.sqrt(2.0) * target * (1.0 + 1e-9), output_type="ndarray")
    if len(pairs):
        d = pseudo_distance(pts[pairs[:, 0]], pts[pairs[:, 1]])
        for a, b in pairs[d < target]:
            adj[a].append(b)
            adj[b].append(a)
    return adj


def greedy_coloring(adj, order=None):
    """Smallest colour not used by an already-coloured neighbour."""
    m = len(adj)
    colors = np.full(m, -1, dtype=int)
    for v in (range(m) if order is None else order):
        used = {colors[w] for w in adj[v] if colors[w] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[v] = c
    return colors


def decompose_separated(g: SeparatedSet, target: float, *, colors=None):
    """Split ``g`` into classes that are each ``target``-separated."""
    if target < g.separation:
        raise ValueError(
            f"target {target} is below the set separation {g.separation}; nothing to refine"
        )
    if colors is None:
        colors = greedy_coloring(conflict_graph(g.points, target))
    count = int(colors.max()) + 1 if len(colors) else 0
    return [
        SeparatedSet(g.points[colors == c], target, g.dim, maximal=False, seed=g.seed)
        for c in range(count)
    ]


@dataclass(frozen=True)
class CoverReport:
    samples: int
    radius: float
    fraction: float
    worst_distance: float

    def to_dict(self):
        return {"samples": self.samples, "radius": self.radius,
                "fraction": self.fraction, "worst_distance": self.worst_distance}


def nearest_distance(points, queries):
    """``d`` from each query to its nearest point, plus that point's index."""
    pts = np.atleast_2d(points)
    tree = cKDTree(embed(pts))
    _, idx = tree.query(embed(queries), k=1)
    # re-evaluate exactly; the tree only picks the candidate
    return pseudo_distance(queries, pts[idx]), idx


def covering_check(g: SeparatedSet, radius: float, samples: int, seed=0):
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    q = random_sphere(rng, samples, g.dim)
    d, _ = nearest_distance(g.points, q)
    return CoverReport(samples, radius, float(np.mean(d < radius)), float(d.max()))
