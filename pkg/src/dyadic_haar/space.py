"""Finite quasi-metric measure spaces.

A space is an ``n x n`` distance matrix together with its quasi-triangle
constant ``A0``; a measure is a vector of point masses.  Balls are open,
``B(x, r) = {y : d(x, y) < r}``, so on a finite space every ball centred at
``x`` is a prefix of the points sorted by distance from ``x``.  ``BallIndex``
stores those orderings, which turns every supremum over balls into an exact
finite enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EXHAUSTIVE_TRIPLES = 512
SAMPLED_TRIPLES = 200_000


class SpaceError(ValueError):
    """Raised for malformed distance data; carries the offending indices."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True, eq=False)
class FinitePointSpace:
    dist: np.ndarray
    A0: float = 1.0
    coords: np.ndarray | None = None
    labels: tuple | None = None

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n > 1 else 0.0

    @property
    def min_distance(self) -> float:
        if self.n < 2:
            return np.inf
        off = self.dist[~np.eye(self.n, dtype=bool)]
        return float(off.min())

    def ball(self, x: int, r: float) -> np.ndarray:
        return ball(self, x, r)


@dataclass(frozen=True, eq=False)
class PointMassMeasure:
    mass: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.ndim != 1:
            raise ValueError("mass must be a vector")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            i = int(np.flatnonzero((m < 0) | ~np.isfinite(m))[0])
            raise ValueError(f"negative or non-finite mass at point {i}")
        if m.sum() <= 0:
            raise ValueError("total mass must be positive")
        object.__setattr__(self, "mass", m)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    @property
    def n(self) -> int:
        return self.mass.shape[0]

    def of(self, members) -> float:
        """Mass of a subset given as indices or a boolean mask."""
        return float(self.mass[np.asarray(members)].sum())

    @classmethod
    def uniform(cls, n: int, value: float = 1.0) -> "PointMassMeasure":
        return cls(np.full(n, float(value)))


def _validate_matrix(D: np.ndarray) -> None:
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise SpaceError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        i, j = np.argwhere(~np.isfinite(D))[0]
        raise SpaceError(f"non-finite distance at ({i}, {j})", (int(i), int(j)))
    if np.any(D < 0):
        i, j = np.argwhere(D < 0)[0]
        raise SpaceError(f"negative distance at ({i}, {j})", (int(i), int(j)))
    if np.any(np.diag(D) != 0):
        i = int(np.flatnonzero(np.diag(D))[0])
        raise SpaceError(f"nonzero self-distance at point {i}", (i, i))
    asym = np.abs(D - D.T) > 1e-12 * max(1.0, float(D.max(initial=0.0)))
    if np.any(asym):
        i, j = np.argwhere(asym)[0]
        raise SpaceError(f"asymmetric distances at ({i}, {j})", (int(i), int(j)))
    zero = (D == 0) & ~np.eye(D.shape[0], dtype=bool)
    if np.any(zero):
        i, j = np.argwhere(zero)[0]
        raise SpaceError(f"zero distance between distinct points {i} and {j}", (int(i), int(j)))


def quasi_triangle_constant(D: np.ndarray, exhaustive_limit: int = EXHAUSTIVE_TRIPLES,
                            samples: int = SAMPLED_TRIPLES, seed: int = 0):
    """Smallest A with D[x,y] <= A (D[x,z] + D[z,y]) over triples.

    Returns ``(A, witness_triple, exhaustive)``.  Above ``exhaustive_limit``
    points the maximum is taken over ``samples`` random triples, which can
    only underestimate the true constant.
    """
    n = D.shape[0]
    best, witness = 1.0, None
    if n < 3:
        return best, witness, True
    if n <= exhaustive_limit:
        for z in range(n):
            denom = D[:, z][:, None] + D[z, :][None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(denom > 0, D / denom, 0.0)
            i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
            if ratio[i, j] > best:
                best, witness = float(ratio[i, j]), (int(i), int(j), z)
        return best, witness, True
    rng = np.random.default_rng(seed)
    x, y, z = (rng.integers(0, n, samples) for _ in range(3))
    denom = D[x, z] + D[z, y]
    ok = denom > 0
    ratio = np.zeros(samples)
    ratio[ok] = D[x[ok], y[ok]] / denom[ok]
    k = int(np.argmax(ratio))
    if ratio[k] > best:
        best, witness = float(ratio[k]), (int(x[k]), int(y[k]), int(z[k]))
    return best, witness, False


def pairwise(coords: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    X = np.asarray(coords, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    diff = X[:, None, :] - X[None, :, :]
    if metric == "euclidean":
        return np.sqrt((diff ** 2).sum(-1))
    if metric == "max":
        return np.abs(diff).max(-1)
    raise SpaceError(f"unknown metric recipe {metric!r}")


def make_space(dist, A0: float | None = None, coords=None, labels=None,
               exhaustive_limit: int = EXHAUSTIVE_TRIPLES, known_metric: bool = False,
               ) -> FinitePointSpace:
    """Validate a distance matrix and compute its tight quasi-triangle constant.

    ``known_metric`` skips the triple scan when the recipe is a genuine metric
    (A0 = 1 exactly).  A supplied ``A0`` is kept only if it is larger than
    the computed one.
    """
    D = np.array(dist, dtype=float)
    _validate_matrix(D)
    D = 0.5 * (D + D.T)
    tight = 1.0 if known_metric else quasi_triangle_constant(D, exhaustive_limit)[0]
    a0 = max(tight, float(A0)) if A0 is not None else tight
    D.setflags(write=False)
    return FinitePointSpace(D, a0, None if coords is None else np.asarray(coords, float), labels)


def load_space(source: dict, exhaustive_limit: int = EXHAUSTIVE_TRIPLES) -> FinitePointSpace:
    """Build a space from structured records.

    ``source`` holds either ``dist_matrix`` (with ``metric: "matrix"`` or no
    metric) or ``points`` coordinates with ``metric`` in {"euclidean", "max"}
    and an optional ``exponent`` p, giving the quasi-metric ``d**p``.
    """
    metric = source.get("metric", "matrix" if "dist_matrix" in source else "euclidean")
    exponent = float(source.get("exponent", 1.0))
    labels = tuple(source["labels"]) if source.get("labels") is not None else None
    coords = None
    if metric == "matrix":
        if "dist_matrix" not in source:
            raise SpaceError("metric 'matrix' requires dist_matrix")
        D = np.asarray(source["dist_matrix"], dtype=float)
    else:
        if "points" not in source:
            raise SpaceError(f"metric {metric!r} requires points")
        coords = np.asarray(source["points"], dtype=float)
        D = pairwise(coords, metric)
    if exponent <= 0:
        raise SpaceError("exponent must be positive")
    # a power <= 1 of a metric is again a metric
    known = metric != "matrix" and exponent <= 1.0
    if exponent != 1.0:
        D = D ** exponent
    return make_space(D, source.get("A0"), coords, labels, exhaustive_limit, known_metric=known)


def ball(space: FinitePointSpace, x: int, r: float) -> np.ndarray:
    """Indices of the open ball ``{y : d(x, y) < r}``."""
    if not 0 <= x < space.n:
        raise IndexError(f"invalid point id {x}")
    if r <= 0:
        raise ValueError("radius must be positive")
    return np.flatnonzero(space.dist[x] < r)


class BallIndex:
    """Per-centre distance orderings of a finite space.

    Row ``c`` of ``order`` lists all points sorted by distance from ``c``
    (ties by index).  ``is_end[c, t]`` marks prefix lengths ``t + 1`` that
    are balls: the prefix of length ``t + 1`` equals ``B(c, r)`` for every
    ``r`` in ``(r_low[c, t], r_high[c, t]]``.
    """

    def __init__(self, space: FinitePointSpace):
        D = space.dist
        n = space.n
        self.n = n
        self.order = np.lexsort((np.broadcast_to(np.arange(n), (n, n)), D), axis=1)
        self.sorted_dist = np.take_along_axis(D, self.order, axis=1)
        self.pos = np.empty_like(self.order)
        rows = np.arange(n)[:, None]
        self.pos[rows, self.order] = np.arange(n)[None, :]
        nxt = np.concatenate([self.sorted_dist[:, 1:], np.full((n, 1), np.inf)], axis=1)
        self.is_end = nxt > self.sorted_dist
        self.r_low = self.sorted_dist
        self.r_high = nxt
        # prefix length of the ball that contains position t
        ends = np.where(self.is_end, np.arange(n)[None, :], n)
        self.group_end = np.minimum.accumulate(ends[:, ::-1], axis=1)[:, ::-1]

    def ball(self, x: int, r: float) -> np.ndarray:
        k = int(np.searchsorted(self.sorted_dist[x], r, side="left"))
        return np.sort(self.order[x, :k])

    def prefix_sums(self, values: np.ndarray) -> np.ndarray:
        """Cumulative sums of ``values`` along each centre's ordering.

        ``values`` has shape ``(n,)`` or ``(n, s)``; the result has shape
        ``(n, n)`` or ``(n, n, s)`` and entry ``[c, t]`` is the sum over the
        first ``t + 1`` points from ``c``.
        """
        return np.cumsum(values[self.order], axis=1)

    def ball_list(self):
        """All distinct (centre, radius-interval) balls as arrays.

        Returns ``centers, lengths, r_low, r_high`` where each ball is the
        prefix of length ``lengths[i]`` from ``centers[i]``.
        """
        c, t = np.nonzero(self.is_end)
        return c, t + 1, self.r_low[c, t], self.r_high[c, t]

    def membership(self, centers: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        """Boolean matrix (#balls, n) of ball membership."""
        return self.pos[centers] < lengths[:, None]

    def ball_mass(self, measure: PointMassMeasure) -> np.ndarray:
        return self.prefix_sums(measure.mass)


def relevant_radii(space: FinitePointSpace, scale: float = 1.0) -> np.ndarray:
    """Finite set of radii at which balls (and their ``scale``-dilates) change.

    Every ball ``B(x, r)`` and ``B(x, scale * r)`` is constant for ``r`` in
    each interval between consecutive returned values, closed on the right,
    so evaluating at the returned values is exhaustive.
    """
    d = np.unique(space.dist[np.triu_indices(space.n, 1)])
    cand = np.unique(np.concatenate([d, d / scale]))
    top = (cand.max() if cand.size else 1.0) * 2.0 + 1.0
    return np.concatenate([cand, [top]])


def geometric_doubling_constant(space: FinitePointSpace, max_radii: int | None = 2000,
                                seed: int = 0) -> dict:
    """Greedy upper bound for the geometric doubling constant ``A1``.

    For each ball ``B(x, r)`` (over the radii where the ball or half-radius
    balls change) a greedy set cover by balls ``B(y, r/2)``, ``y`` in the
    space, is computed.  Greedy cover sizes bound the optimal cover from
    above; the returned ``A1`` is their maximum.  When there are more than
    ``max_radii`` candidate radii, a seeded sample of them is scanned and
    ``exhaustive`` is False.
    """
    n = space.n
    if n == 1:
        return {"A1": 1, "witness": (0, 1.0), "exhaustive": True}
    radii = relevant_radii(space, scale=0.5)
    exhaustive = True
    if max_radii is not None and radii.size > max_radii:
        rng = np.random.default_rng(seed)
        radii = np.sort(rng.choice(radii, max_radii, replace=False))
        exhaustive = False
    D = space.dist
    best, witness = 1, (0, float(radii[0]))
    for r in radii:
        half = D < (r / 2.0)
        balls = D < r
        # identical target sets need one cover computation
        _, first = np.unique(np.packbits(balls, axis=1), axis=0, return_index=True)
        for x in first:
            target = balls[x].copy()
            count = 0
            while target.any():
                gain = (half & target[None, :]).sum(axis=1)
                y = int(np.argmax(gain))
                target &= ~half[y]
                count += 1
            if count > best:
                best, witness = count, (int(x), float(r))
    return {"A1": int(best), "witness": witness, "exhaustive": exhaustive}


def doubling_ratio(space: FinitePointSpace, values: np.ndarray, index: BallIndex | None = None):
    """Exact ``sup_{x, r} nu(B(x, 2r)) / nu(B(x, r))`` for point masses ``values``.

    For a fixed ball ``B(x, r)`` the dilate grows with ``r``, so on each
    interval of radii giving the same ball the ratio peaks at the right
    endpoint.  Balls with zero denominator are skipped.  Returns
    ``(constant, witness)`` with ``witness = (x, r)``; the constant is NaN if
    every ball was skipped.
    """
    index = index or BallIndex(space)
    values = np.asarray(values, float)
    cum = index.prefix_sums(values)
    best, witness = np.nan, None
    for c in range(space.n):
        ends = np.flatnonzero(index.is_end[c])
        r = index.r_high[c, ends]
        den = cum[c, ends]
        k2 = np.searchsorted(index.sorted_dist[c], 2.0 * r, side="left")
        num = cum[c, k2 - 1]
        # the last ball is the whole space for every radius beyond
        num[~np.isfinite(r)] = den[~np.isfinite(r)]
        ok = den > 0
        if not ok.any():
            continue
        ratio = np.where(ok, num / np.where(ok, den, 1.0), -np.inf)
        t = int(np.argmax(ratio))
        if not (ratio[t] <= best):
            rr = float(r[t]) if np.isfinite(r[t]) else 2.0 * space.diameter + 1.0
            best, witness = float(ratio[t]), (c, rr)
    return best, witness
