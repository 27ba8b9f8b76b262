"""Nested systems of dyadic cubes on a finite space.

Level ``k`` has scale ``delta**k``; larger ``k`` is finer.  Centres at level
``k`` form a maximal ``delta**k``-separated set that contains every centre
of level ``k - 1``.  Finest-level points go to their nearest centre and each
centre hangs under its nearest coarser centre, ties going to the lower point
id; cubes are unions along those parent links, so the partitions nest by
construction.  The containment constants ``c1, C1`` are measured afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .space import FinitePointSpace, PointMassMeasure

NUDGE = 1e-9


class GridError(ValueError):
    pass


@dataclass
class GridWarning:
    message: str
    required: float
    actual: float


@dataclass
class DyadicCube:
    k: int
    alpha: int
    center: int
    members: np.ndarray
    parent: int | None
    children: list
    mass: float = 0.0


def build_net(space: FinitePointSpace, separation: float, seed: int = 0,
              must_include: int | None = None, start=None) -> list:
    """Greedy farthest-point net.

    Points are added while some point is at distance ``>= separation`` from
    all chosen ones, always taking the farthest (lowest id on ties).  The
    result is ``separation``-separated and every point is within distance
    ``< separation`` of it.  ``start`` is an already chosen prefix (kept in
    order); otherwise the first point is ``must_include`` or a seeded draw.
    """
    if separation <= 0:
        raise ValueError("separation must be positive")
    D = space.dist
    if start is not None and len(start):
        chosen = [int(c) for c in start]
    elif must_include is not None:
        chosen = [int(must_include)]
    else:
        chosen = [int(np.random.default_rng(seed).integers(space.n))]
    if must_include is not None and must_include not in chosen:
        chosen.insert(0, int(must_include))
    nearest = D[chosen].min(axis=0)
    while True:
        y = int(np.argmax(nearest))
        if nearest[y] < separation:
            break
        chosen.append(y)
        nearest = np.minimum(nearest, D[y])
    return chosen


def default_levels(space: FinitePointSpace, delta: float) -> tuple:
    """``(kmin, kmax)``: coarsest level is one cube, finest is all singletons."""
    diam = space.diameter
    if space.n == 1:
        return 0, 0
    ld = math.log(delta)
    kmin = math.floor(math.log(diam) / ld)
    while delta ** kmin <= diam:
        kmin -= 1
    while delta ** (kmin + 1) > diam:
        kmin += 1
    kmax = math.ceil(math.log(space.min_distance) / ld)
    while delta ** kmax > space.min_distance:
        kmax += 1
    while delta ** (kmax - 1) <= space.min_distance:
        kmax -= 1
    return kmin, max(kmin, kmax)


class DyadicGrid:
    """One dyadic system stored level by level.

    ``centers[i]`` (sorted point ids), ``members[i]`` and ``parents[i]``
    describe level ``k = kmin + i``; cube ``alpha`` at that level has centre
    ``centers[i][alpha]``.  ``parents[0]`` is all ``-1``.
    """

    def __init__(self, space, measure, delta, kmin, centers, members, parents,
                 c1=None, C1=None, distinguished_center=None, seed=None, warnings=None):
        self.space = space
        self.measure = measure
        self.delta = float(delta)
        self.kmin = int(kmin)
        self.centers = [np.asarray(c, dtype=int) for c in centers]
        self.members = [[np.asarray(m, dtype=int) for m in lvl] for lvl in members]
        self.parents = [np.asarray(p, dtype=int) for p in parents]
        self.distinguished_center = distinguished_center
        self.seed = seed
        self.warnings = list(warnings or [])
        self.labels = []
        for lvl in self.members:
            lab = np.full(space.n, -1, dtype=int)
            for a, m in enumerate(lvl):
                lab[m] = a
            self.labels.append(lab)
        self.children = []
        for i in range(self.nlevels):
            if i + 1 < self.nlevels:
                ch = [[] for _ in self.centers[i]]
                for b, p in enumerate(self.parents[i + 1]):
                    if 0 <= p < len(ch):
                        ch[p].append(b)
            else:
                ch = [[] for _ in self.centers[i]]
            self.children.append(ch)
        self.c1, self.C1 = c1, C1
        if c1 is None or C1 is None:
            self.c1, self.C1 = measure_constants(self)

    @property
    def nlevels(self) -> int:
        return len(self.centers)

    @property
    def kmax(self) -> int:
        return self.kmin + self.nlevels - 1

    @property
    def ks(self) -> range:
        return range(self.kmin, self.kmax + 1)

    @property
    def M(self) -> int:
        counts = [len(c) for lvl in self.children[:-1] for c in lvl]
        return max(counts) if counts else 1

    def level(self, k: int) -> int:
        i = k - self.kmin
        if not 0 <= i < self.nlevels:
            raise GridError(f"level {k} outside [{self.kmin}, {self.kmax}]")
        return i

    def scale(self, k: int) -> float:
        return self.delta ** k

    def ncubes(self, k: int) -> int:
        return len(self.centers[self.level(k)])

    def masses(self, k: int) -> np.ndarray:
        i = self.level(k)
        return np.bincount(self.labels[i], weights=self.measure.mass,
                           minlength=len(self.centers[i]))

    def cube(self, k: int, alpha: int) -> DyadicCube:
        i = self.level(k)
        parent = int(self.parents[i][alpha]) if i > 0 else None
        members = self.members[i][alpha]
        return DyadicCube(k, alpha, int(self.centers[i][alpha]), members, parent,
                          list(self.children[i][alpha]), float(self.measure.mass[members].sum()))

    def cubes(self, k: int) -> list:
        return [self.cube(k, a) for a in range(self.ncubes(k))]

    def containing_cube(self, x: int, k: int) -> int:
        return int(self.labels[self.level(k)][x])

    def is_whole_space(self, i: int) -> bool:
        return len(self.centers[i]) == 1

    def is_singletons(self, i: int) -> bool:
        return len(self.centers[i]) == self.space.n

    def to_dict(self) -> dict:
        levels = []
        for i, k in enumerate(self.ks):
            cubes = []
            for a in range(len(self.centers[i])):
                cubes.append({
                    "alpha": a,
                    "center": int(self.centers[i][a]),
                    "members": [int(v) for v in self.members[i][a]],
                    "parent": int(self.parents[i][a]) if i > 0 else None,
                    "children": [int(c) for c in self.children[i][a]],
                })
            levels.append({"k": k, "cubes": cubes})
        out = {"delta": self.delta, "levels": levels,
               "constants": {"c1": self.c1, "C1": self.C1, "M": self.M}}
        if self.distinguished_center is not None:
            out["distinguished_center"] = int(self.distinguished_center)
        return out

    @classmethod
    def from_dict(cls, data: dict, space, measure) -> "DyadicGrid":
        levels = sorted(data["levels"], key=lambda L: L["k"])
        ks = [L["k"] for L in levels]
        if ks != list(range(ks[0], ks[0] + len(ks))):
            raise GridError("grid levels must be consecutive integers")
        centers, members, parents = [], [], []
        for i, L in enumerate(levels):
            cubes = sorted(L["cubes"], key=lambda c: c["alpha"])
            centers.append([c["center"] for c in cubes])
            members.append([c["members"] for c in cubes])
            parents.append([(-1 if i == 0 or c.get("parent") is None else c["parent"]) for c in cubes])
        const = data.get("constants", {})
        return cls(space, measure, data["delta"], ks[0], centers, members, parents,
                   const.get("c1"), const.get("C1"), data.get("distinguished_center"))


def _assign(space, centers):
    """Nearest-centre assignment of every point; ties go to the lower centre id."""
    return np.argmin(space.dist[:, centers], axis=1)


def _validate_centers(space, delta, kmin, centers, tol=1e-12):
    D = space.dist
    prev = set()
    for i, cen in enumerate(centers):
        sep = delta ** (kmin + i)
        cen = list(cen)
        if len(set(cen)) != len(cen):
            raise GridError(f"duplicate centres at level {kmin + i}")
        if len(cen) > 1:
            sub = D[np.ix_(cen, cen)].copy()
            np.fill_diagonal(sub, np.inf)
            if sub.min() < sep * (1 - tol):
                a, b = np.unravel_index(np.argmin(sub), sub.shape)
                raise GridError(f"centres {cen[a]} and {cen[b]} closer than {sep} at level {kmin + i}")
        far = D[:, cen].min(axis=1)
        if far.max() >= sep:
            raise GridError(f"point {int(np.argmax(far))} is not within {sep} of a level-{kmin + i} centre")
        if not prev <= set(cen):
            raise GridError(f"level {kmin + i} centres do not contain the coarser ones")
        prev = set(cen)


def build_grid(space: FinitePointSpace, measure: PointMassMeasure, delta: float = 0.5,
               k_range: tuple | None = None, seed: int = 0,
               distinguished_center: int | None = None, strict: bool = False,
               centers: list | None = None) -> DyadicGrid:
    """Build a dyadic system.

    ``k_range = (kmin, kmax)`` defaults to ``default_levels``.  ``centers``
    optionally fixes the centre list per level (coarse to fine); it must be
    separated, dense and nested.  In ``strict`` mode a ``delta`` above
    ``1 / (12 A0**3)`` is reported in ``grid.warnings``.
    """
    if not 0 < delta < 1:
        raise GridError("delta must lie in (0, 1)")
    if measure.n != space.n:
        raise GridError("measure and space sizes differ")
    kmin, kmax = k_range if k_range is not None else default_levels(space, delta)
    if kmax < kmin:
        raise GridError("empty level range")
    nlev = kmax - kmin + 1
    warnings = []
    if strict:
        bound = 1.0 / (12.0 * space.A0 ** 3)
        if delta > bound:
            warnings.append(GridWarning("delta exceeds the strict single-system bound", bound, delta))
    if centers is not None:
        if len(centers) != nlev:
            raise GridError(f"expected {nlev} centre lists, got {len(centers)}")
        _validate_centers(space, delta, kmin, centers)
        nets = [list(c) for c in centers]
        if distinguished_center is not None and distinguished_center not in nets[0]:
            raise GridError("distinguished centre missing from the supplied centres")
    else:
        nets, prev = [], None
        for i in range(nlev):
            prev = build_net(space, delta ** (kmin + i), seed, distinguished_center, start=prev)
            nets.append(prev)
    sorted_centers = [np.array(sorted(c), dtype=int) for c in nets]
    D = space.dist
    labels = [None] * nlev
    parents = [None] * nlev
    labels[-1] = _assign(space, sorted_centers[-1])
    parents[0] = np.full(len(sorted_centers[0]), -1)
    for i in range(nlev - 1, 0, -1):
        parents[i] = np.argmin(D[np.ix_(sorted_centers[i], sorted_centers[i - 1])], axis=1)
        labels[i - 1] = parents[i][labels[i]]
    members = []
    for i in range(nlev):
        order = np.argsort(labels[i], kind="stable")
        cuts = np.searchsorted(labels[i][order], np.arange(len(sorted_centers[i]) + 1))
        members.append([order[cuts[a]:cuts[a + 1]] for a in range(len(sorted_centers[i]))])
    return DyadicGrid(space, measure, delta, kmin, sorted_centers, members, parents,
                      distinguished_center=distinguished_center, seed=seed, warnings=warnings)


def _level_gap_reach(grid: DyadicGrid, i: int, points=None):
    """For each point x: nearest distance to a point outside its level-i cube
    (``inf`` if none) and farthest distance to a point inside it."""
    D = grid.space.dist
    lab = grid.labels[i]
    pts = np.arange(grid.space.n) if points is None else np.asarray(points)
    same = lab[pts][:, None] == lab[None, :]
    gap = np.where(same, np.inf, D[pts]).min(axis=1)
    reach = np.where(same, D[pts], -np.inf).max(axis=1)
    return gap, reach


def _ball_inclusion_violations(grid: DyadicGrid):
    """Intervals ``(a, b]`` of C1 values for which some child ball escapes
    its parent ball."""
    D = grid.space.dist
    lows, highs = [], []
    for i in range(1, grid.nlevels):
        k = grid.kmin + i
        cen = grid.centers[i]
        par = grid.centers[i - 1][grid.parents[i]]
        a = D[cen] / grid.delta ** k
        b = D[par] / grid.delta ** (k - 1)
        mask = a < b
        lows.append(a[mask])
        highs.append(b[mask])
    if not lows:
        return np.empty(0), np.empty(0)
    return np.concatenate(lows), np.concatenate(highs)


def measure_constants(grid: DyadicGrid) -> tuple:
    """Exact largest ``c1`` and (nudged) smallest ``C1`` for the inclusions.

    ``C1`` is first the smallest value with every cube inside its open outer
    ball, then raised to the first value at which every child's outer ball
    lies in its parent's outer ball.  A grid whose cubes are all the whole
    space reports ``c1 = C1 = 1``.
    """
    c1, C1 = np.inf, 0.0
    for i in range(grid.nlevels):
        cen = grid.centers[i]
        gap, reach = _level_gap_reach(grid, i, cen)
        s = grid.delta ** (grid.kmin + i)
        if np.isfinite(gap).any():
            g = float(gap[np.isfinite(gap)].min())
            cand = g / s
            # keep the open inner ball inside the cube after rounding
            while cand * s > g:
                cand = float(np.nextafter(cand, 0.0))
            c1 = min(c1, cand)
        C1 = max(C1, float(reach.max() / s))
    if not np.isfinite(c1):
        return 1.0, 1.0
    C1 = C1 * (1 + NUDGE) if C1 > 0 else c1
    a, b = _ball_inclusion_violations(grid)
    while a.size:
        hit = (a < C1) & (C1 <= b)
        if not hit.any():
            break
        C1 = float(b[hit].max()) * (1 + NUDGE)
    return c1, max(C1, c1)


def verify_grid(grid: DyadicGrid) -> dict:
    """Check each axiom separately; failing entries carry a witness."""
    n = grid.space.n
    D = grid.space.dist
    checks = {}

    def record(name, ok, witness=None):
        checks[name] = {"pass": bool(ok), "witness": witness}

    witness = None
    for i in range(grid.nlevels):
        allm = np.concatenate([m for m in grid.members[i]]) if grid.members[i] else np.empty(0, int)
        counts = np.bincount(allm, minlength=n) if allm.size else np.zeros(n, int)
        if allm.size and (allm.min() < 0 or allm.max() >= n):
            witness = {"k": grid.kmin + i, "reason": "member id out of range"}
            break
        bad = np.flatnonzero(counts != 1)
        if bad.size:
            witness = {"k": grid.kmin + i, "point": int(bad[0]), "count": int(counts[bad[0]])}
            break
    record("partition", witness is None, witness)
    partition_ok = witness is None

    witness = None
    if partition_ok:
        for i in range(1, grid.nlevels):
            for b, m in enumerate(grid.members[i]):
                coarse = np.unique(grid.labels[i - 1][m])
                if coarse.size != 1:
                    witness = {"k": grid.kmin + i, "alpha": b, "coarser_cubes": coarse.tolist()}
                    break
            if witness:
                break
    record("nested", partition_ok and witness is None, witness)

    witness = None
    if partition_ok:
        for i in range(1, grid.nlevels):
            for b, m in enumerate(grid.members[i]):
                p = int(grid.parents[i][b])
                if m.size == 0 or p < 0 or p >= len(grid.centers[i - 1]) or grid.labels[i - 1][m[0]] != p:
                    witness = {"k": grid.kmin + i, "alpha": b, "parent": p}
                    break
            if witness:
                break
    record("unique_ancestor", partition_ok and witness is None, witness)

    witness = None
    if partition_ok:
        for i in range(grid.nlevels - 1):
            for a, ch in enumerate(grid.children[i]):
                if not ch:
                    witness = {"k": grid.kmin + i, "alpha": a, "reason": "no children"}
                    break
                union = np.sort(np.concatenate([grid.members[i + 1][c] for c in ch]))
                if not np.array_equal(union, np.sort(grid.members[i][a])):
                    witness = {"k": grid.kmin + i, "alpha": a, "reason": "children do not partition"}
                    break
            if witness:
                break
    record("children_partition", partition_ok and witness is None, witness)

    witness = None
    c1, C1 = grid.c1, grid.C1
    for i in range(grid.nlevels):
        s = grid.delta ** (grid.kmin + i)
        for a, m in enumerate(grid.members[i]):
            x = int(grid.centers[i][a])
            inside = np.zeros(n, bool)
            inside[m] = True
            if not inside[x]:
                witness = {"k": grid.kmin + i, "alpha": a, "reason": "centre outside its cube"}
            elif np.any((D[x] < c1 * s) & ~inside):
                y = int(np.flatnonzero((D[x] < c1 * s) & ~inside)[0])
                witness = {"k": grid.kmin + i, "alpha": a, "reason": "inner ball escapes", "point": y}
            elif np.any(D[x][inside] >= C1 * s):
                witness = {"k": grid.kmin + i, "alpha": a, "reason": "cube exceeds outer ball"}
            if witness:
                break
        if witness:
            break
    record("ball_containment", witness is None and c1 > 0 and np.isfinite(C1), witness)

    witness = None
    for i in range(1, grid.nlevels):
        k = grid.kmin + i
        for b in range(len(grid.centers[i])):
            p = int(grid.parents[i][b])
            if not 0 <= p < len(grid.centers[i - 1]):
                continue
            xc, xp = grid.centers[i][b], grid.centers[i - 1][p]
            esc = (D[xc] < C1 * grid.delta ** k) & (D[xp] >= C1 * grid.delta ** (k - 1))
            if esc.any():
                witness = {"k": k, "alpha": b, "point": int(np.flatnonzero(esc)[0])}
                break
        if witness:
            break
    record("outer_ball_nesting", witness is None, witness)

    witness = None
    for i in range(grid.nlevels):
        sep = grid.delta ** (grid.kmin + i)
        cen = grid.centers[i]
        if len(cen) > 1:
            sub = D[np.ix_(cen, cen)].copy()
            np.fill_diagonal(sub, np.inf)
            if sub.min() < sep * (1 - 1e-12):
                witness = {"k": grid.kmin + i, "reason": "centres too close"}
                break
        if D[:, cen].min(axis=1).max() >= sep:
            witness = {"k": grid.kmin + i, "reason": "centres not dense"}
            break
    record("centre_net", witness is None, witness)

    if grid.distinguished_center is not None:
        miss = [grid.kmin + i for i in range(grid.nlevels) if grid.distinguished_center not in set(grid.centers[i].tolist())]
        record("distinguished_center", not miss, {"levels": miss} if miss else None)

    return {"checks": checks, "pass": all(c["pass"] for c in checks.values()),
            "constants": {"c1": c1, "C1": C1, "M": grid.M, "delta": grid.delta,
                          "kmin": grid.kmin, "kmax": grid.kmax,
                          "target_c1": 1.0 / (3 * grid.space.A0 ** 2),
                          "target_C1": 2 * grid.space.A0}}


@dataclass
class AdjacentSystems:
    grids: list
    T: int
    C_sandwich: float = np.nan
    failures: list = field(default_factory=list)
    report: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def build_adjacent_systems(space, measure, delta=0.5, k_range=None, T=3, seed=0,
                           strict=False, distinguished_center=None) -> AdjacentSystems:
    """``T`` grids from seeds ``seed, seed + 1, ...`` plus the sandwich report."""
    if T < 1:
        raise ValueError("T must be at least 1")
    warnings = []
    if strict:
        bound = 1.0 / (96.0 * space.A0 ** 6)
        if not delta < bound:
            warnings.append(GridWarning("delta exceeds the strict adjacent-system bound", bound, delta))
    grids = [build_grid(space, measure, delta, k_range, seed + t,
                        distinguished_center=distinguished_center) for t in range(T)]
    report = verify_sandwich(grids, space)
    return AdjacentSystems(grids, T, report["C_max"], report["failures"], report, warnings)


def sandwich_level(r, delta):
    """Integer ``k`` with ``delta**(k+3) < r <= delta**(k+2)``, elementwise."""
    r = np.asarray(r, dtype=float)
    k = np.floor(np.log(r) / math.log(delta)).astype(int) - 2
    for _ in range(3):
        k = np.where(delta ** (k + 2.0) < r, k - 1, k)
        k = np.where(delta ** (k + 3.0) >= r, k + 1, k)
    return k


def sandwich_balls(space: FinitePointSpace):
    """All test balls: per centre, every distinct distance, every midpoint
    of consecutive distinct distances, and one radius beyond the diameter."""
    centers, radii = [], []
    top = 2.0 * space.diameter + 1.0
    for x in range(space.n):
        d = np.unique(space.dist[x])
        d = d[d > 0]
        mids = 0.5 * (d[1:] + d[:-1])
        r = np.concatenate([d, mids, d[:1] / 2 if d.size else [1.0], [top]])
        centers.append(np.full(r.size, x))
        radii.append(r)
    return np.concatenate(centers), np.concatenate(radii)


def sandwich_search(grids, space, centers, radii):
    """For each ball, the systems that sandwich it and the best constant.

    Returns ``(best_C, best_t, best_level, ok)``; ``best_level`` is the grid
    level index, or ``-1`` / ``nlevels`` for a cube extended above the
    coarsest or below the finest level.
    """
    nb = len(centers)
    best_C = np.full(nb, np.inf)
    best_t = np.full(nb, -1)
    best_i = np.full(nb, 0)
    for t, g in enumerate(grids):
        ks = sandwich_level(radii, g.delta)
        idx = ks - g.kmin
        gaps = np.empty(nb)
        reach = np.empty(nb)
        valid = np.ones(nb, bool)
        for i in np.unique(idx):
            sel = idx == i
            if i < 0:
                if not g.is_whole_space(0):
                    valid[sel] = False
                    continue
                gaps[sel] = np.inf
                reach[sel] = space.dist[centers[sel]].max(axis=1)
            elif i >= g.nlevels:
                if not g.is_singletons(g.nlevels - 1):
                    valid[sel] = False
                    continue
                d = space.dist[centers[sel]].copy()
                d[np.arange(d.shape[0]), centers[sel]] = np.inf
                gaps[sel] = d.min(axis=1)
                reach[sel] = 0.0
            else:
                gp, rc = _level_gap_reach(g, i)
                gaps[sel] = gp[centers[sel]]
                reach[sel] = rc[centers[sel]]
        ok = valid & (radii <= gaps)
        C = np.where(ok, np.maximum(1.0, reach / radii), np.inf)
        better = C < best_C
        best_C[better] = C[better]
        best_t[better] = t
        best_i[better] = np.clip(idx[better], -1, g.nlevels)
    return best_C, best_t, best_i, np.isfinite(best_C)


def verify_sandwich(grids, space, max_failures: int = 50) -> dict:
    """Exhaustive search for cubes ``Q`` with ``B(x, r) <= Q <= B(x, C r)``.

    The recorded constant per ball is the infimum ``max(1, reach / r)``;
    every larger ``C`` works.
    """
    grids = list(grids)
    centers, radii = sandwich_balls(space)
    C, t, _, ok = sandwich_search(grids, space, centers, radii)
    fails = np.flatnonzero(~ok)
    return {
        "balls": int(len(radii)),
        "sandwiched": int(ok.sum()),
        "success_rate": float(ok.mean()) if len(radii) else 1.0,
        "C_max": float(C[ok].max()) if ok.any() else np.nan,
        "per_system": [int((t == s).sum()) for s in range(len(grids))],
        "failures": [{"center": int(centers[j]), "r": float(radii[j])} for j in fails[:max_failures]],
        "n_failures": int(fails.size),
    }
