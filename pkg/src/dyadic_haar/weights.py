"""Doubling, Muckenhoupt and reverse-Hölder constants of weights.

A weight ``w`` is a per-point function; its measure is ``w(E) = sum_E w mu``.
Every constant is an exact maximum over a finite family of sets: all balls
(prefixes of the distance orderings) or all dyadic cubes of a grid, always
restricted to sets of positive ``mu`` mass.  Essential infima and suprema
ignore points of zero mass.

The A_p formulas are the standard Muckenhoupt ones; A_inf uses the
exponential-of-log-average (Hruščëv) form.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import DyadicGrid, sandwich_balls, sandwich_search
from .maximal import ball_lengths
from .space import BallIndex, doubling_ratio


class BallSets:
    """Prefix balls ``(centre, length)``; defaults to every distinct ball."""

    def __init__(self, space, measure, index: BallIndex | None = None, centers=None, lengths=None):
        self.index = index or BallIndex(space)
        self.m = measure.mass
        if centers is None:
            centers, lengths, _, _ = self.index.ball_list()
        self.centers = np.asarray(centers)
        self.lengths = np.asarray(lengths)
        mass = self._prefix(self.m, np.cumsum)
        keep = mass > 0
        self.centers, self.lengths = self.centers[keep], self.lengths[keep]
        self.mass = mass[keep]

    def _prefix(self, v, acc):
        P = acc(v[self.index.order], axis=1)
        return P[self.centers, self.lengths - 1]

    def sum(self, v):
        return self._prefix(v * self.m, np.cumsum)

    def min_pos(self, v):
        return self._prefix(np.where(self.m > 0, v, np.inf), np.minimum.accumulate)

    def max_pos(self, v):
        return self._prefix(np.where(self.m > 0, v, -np.inf), np.maximum.accumulate)

    def describe(self, j):
        return {"center": int(self.centers[j]), "size": int(self.lengths[j])}


class CubeSets:
    """All cubes of positive mass at all levels of a grid."""

    def __init__(self, grid: DyadicGrid):
        self.grid = grid
        self.m = grid.measure.mass
        rows, cols, self.keys = [], [], []
        offset = 0
        for i in range(grid.nlevels):
            rows.append(offset + grid.labels[i])
            cols.append(np.arange(grid.space.n))
            self.keys += [(grid.kmin + i, a) for a in range(len(grid.centers[i]))]
            offset += len(grid.centers[i])
        self.row = np.concatenate(rows)
        self.col = np.concatenate(cols)
        self.nsets = offset
        mass = self._reduce(self.m, np.add, 0.0)
        self.keep = mass > 0
        self.mass = mass[self.keep]
        self.keys = [k for k, ok in zip(self.keys, self.keep) if ok]

    def _reduce(self, v, ufunc, init):
        out = np.full(self.nsets, init, dtype=float)
        ufunc.at(out, self.row, v[self.col])
        return out

    def sum(self, v):
        return self._reduce(v * self.m, np.add, 0.0)[self.keep]

    def min_pos(self, v):
        return self._reduce(np.where(self.m > 0, v, np.inf), np.minimum, np.inf)[self.keep]

    def max_pos(self, v):
        return self._reduce(np.where(self.m > 0, v, -np.inf), np.maximum, -np.inf)[self.keep]

    def describe(self, j):
        k, a = self.keys[j]
        return {"k": int(k), "alpha": int(a)}


def _sup(values, family):
    if not values.size:
        return 1.0, None
    j = int(np.nanargmax(values))
    return float(values[j]), (family.describe(j) if family is not None else None)


def _check_weight(w, m):
    w = np.asarray(w, float)
    if w.shape != m.shape:
        raise ValueError("weight length does not match the space")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    return w


def ap_values(family, w, p):
    """A_p quantity of every set in ``family``."""
    w = _check_weight(w, family.m)
    avg = family.sum(w) / family.mass
    with np.errstate(divide="ignore", invalid="ignore"):
        if p == 1:
            return avg / family.min_pos(w)
        if np.isinf(p):
            logs = np.where(family.m > 0, np.log(np.where(w > 0, w, 1.0)), 0.0)
            logs = np.where((w <= 0) & (family.m > 0), -np.inf, logs)
            return avg * np.exp(-family.sum(logs) / family.mass)
        sigma = np.where(w > 0, w, np.inf) ** (-1.0 / (p - 1.0))
        sigma = np.where(w > 0, sigma, np.inf)
        return avg * (family.sum(sigma) / family.mass) ** (p - 1.0)


def rh_values(family, w, p):
    """Reverse-Hölder quantity of every set in ``family``."""
    w = _check_weight(w, family.m)
    avg = family.sum(w) / family.mass
    with np.errstate(divide="ignore", invalid="ignore"):
        if p == 1:
            wlogw = np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0)
            alog = np.where(avg > 0, avg * np.log(np.where(avg > 0, avg, 1.0)), 0.0)
            return (family.sum(wlogw) / family.mass - alog) / avg
        if np.isinf(p):
            return family.max_pos(w) / avg
        return (family.sum(w ** p) / family.mass) ** (1.0 / p) / avg


def ap_constant(space, measure, w, p, index=None):
    return _sup(ap_values(BallSets(space, measure, index), w, p), None)[0]


def dyadic_ap_constant(grid, w, p):
    return _sup(ap_values(CubeSets(grid), w, p), None)[0]


def rhp_constant(space, measure, w, p, index=None):
    return _sup(rh_values(BallSets(space, measure, index), w, p), None)[0]


def dyadic_rhp_sup(grid, w, p):
    return _sup(rh_values(CubeSets(grid), w, p), None)[0]


def dyadic_rhp_constant(grid, w, p) -> dict:
    """The larger of the dyadic reverse-Hölder supremum and the dyadic
    doubling constant, with both parts reported."""
    sup = dyadic_rhp_sup(grid, w, p)
    dd = dyadic_doubling_constant(grid, w)["constant"]
    return {"constant": max(sup, dd), "sup": sup, "dyadic_doubling": dd}


def doubling_constant(space, measure, w, index=None) -> dict:
    w = _check_weight(w, measure.mass)
    c, wit = doubling_ratio(space, w * measure.mass, index)
    return {"constant": c, "witness": wit, "undefined": bool(np.isnan(c))}


def dyadic_doubling_constant(grid: DyadicGrid, w) -> dict:
    """Largest ``w(Q) / w(Q')`` over children ``Q'`` and the sibling form
    ``max w(Q') / w(Q'')``; a zero-weight child makes both infinite."""
    w = _check_weight(w, grid.measure.mass)
    wm = w * grid.measure.mass
    best, sib, witness = 1.0, 1.0, None
    for i in range(grid.nlevels - 1):
        parent_w = np.bincount(grid.labels[i], weights=wm, minlength=len(grid.centers[i]))
        child_w = np.bincount(grid.labels[i + 1], weights=wm, minlength=len(grid.centers[i + 1]))
        par = grid.parents[i + 1]
        pw = parent_w[par]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(pw > 0, pw / child_w, 1.0)
        j = int(np.argmax(r))
        if r[j] > best:
            best, witness = float(r[j]), {"k": grid.kmin + i + 1, "alpha": j}
        # siblings: largest over smallest within each parent
        hi = np.full(len(parent_w), -np.inf)
        lo = np.full(len(parent_w), np.inf)
        np.maximum.at(hi, par, child_w)
        np.minimum.at(lo, par, child_w)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(hi > 0, hi / lo, 1.0)
        sib = max(sib, float(s.max()))
    return {"constant": best, "sibling": sib, "witness": witness, "infinite": bool(np.isinf(best)),
            "sibling_equivalent": bool(sib <= best * (1 + 1e-12) and best <= grid.M * sib * (1 + 1e-12))}


def descent_generations(A0: float, delta: float) -> int:
    """Generations needed for a descendant cube to fit inside a ball of half
    the radius of one sandwiching it."""
    return int(math.ceil(math.log(16.0 * A0 ** 3 / delta ** 4) / math.log(1.0 / delta)))


def _exp_step(c1, C1):
    return 1.0 + math.log2(C1 / c1)


def intersection_report(grids, space, measure, w, cls: str = "doubling", p: float = 2.0) -> dict:
    """Continuous constant, every dyadic constant and the implication checks.

    Forward bounds (continuous implies dyadic) are the proof chains with
    measured ``c1, C1`` and exact doubling constants, so violations are
    hard failures.  The reverse direction compares against
    ``C_dydbl ** N`` for doubling and reports the sandwich-based bound for
    the other classes.
    """
    grids = list(grids)
    index = BallIndex(space)
    w = _check_weight(w, measure.mass)
    A0 = space.A0
    C_mu = doubling_ratio(space, measure.mass, index)[0]
    C_w = doubling_constant(space, measure, w, index)["constant"]
    out = {"class": cls, "p": p, "C_dbl_measure": C_mu, "C_dbl_weight": C_w, "systems": [], "checks": {}}
    dyd = [dyadic_doubling_constant(g, w) for g in grids]
    if cls == "doubling":
        out["continuous"] = C_w
        ok = True
        for g, d in zip(grids, dyd):
            bound = C_w ** (1.0 + math.log2(2 * A0 * g.C1 / (g.c1 * g.delta)))
            out["systems"].append({"dyadic": d["constant"], "sibling": d["sibling"], "bound": bound})
            ok &= d["constant"] <= bound * (1 + 1e-12)
        out["checks"]["continuous_implies_dyadic"] = bool(ok)
        N = descent_generations(A0, grids[0].delta)
        top = max(d["constant"] for d in dyd)
        out["N"] = N
        out["reverse_bound"] = top ** N
        out["checks"]["dyadic_implies_continuous"] = bool(C_w <= top ** N * (1 + 1e-12))
        return out

    values = ap_values if cls == "ap" else rh_values
    balls = BallSets(space, measure, index)
    cont = _sup(values(balls, w, p), balls)
    out["continuous"], out["witness"] = cont
    ok = True
    for g, d in zip(grids, dyd):
        cubes = CubeSets(g)
        dy, wit = _sup(values(cubes, w, p), cubes)
        e = _exp_step(g.c1, g.C1)
        entry = {"dyadic": dy, "witness": wit, "dyadic_doubling": d["constant"]}
        if cls == "ap":
            power = 1.0 if p == 1 else (np.nan if np.isinf(p) else p)
            bound = cont[0] * C_mu ** (e * power) if np.isfinite(power) else np.nan
        else:
            if p == 1 or np.isinf(p):
                bound = np.nan
            else:
                bound = cont[0] * C_mu ** (e / p) * C_w ** e
            entry["constant"] = max(dy, d["constant"])
            entry["doubling_bound"] = C_w ** (1.0 + math.log2(2 * A0 * g.C1 / (g.c1 * g.delta)))
            if d["constant"] > entry["doubling_bound"] * (1 + 1e-12):
                ok = False
        entry["bound"] = bound
        if np.isfinite(bound) and dy > bound * (1 + 1e-12):
            ok = False
        out["systems"].append(entry)
    out["checks"]["continuous_implies_dyadic"] = bool(ok)
    # reverse: balls sandwiched by some cube, proof-form bound with measured C
    centers, radii = sandwich_balls(space)
    C, _, _, hit = sandwich_search(grids, space, centers, radii)
    if hit.any():
        L = ball_lengths(index, centers[hit], radii[hit])
        sw = BallSets(space, measure, index, centers[hit], L)
        sw_val = _sup(values(sw, w, p), sw)[0]
        Cmax = float(C[hit].max())
        top = max(s["dyadic"] for s in out["systems"])
        if cls == "rhp" and not (p == 1 or np.isinf(p)):
            rb = top * C_mu ** ((1 + math.log2(Cmax)) / p) * C_w ** (1 + math.log2(Cmax))
        elif cls == "ap" and np.isfinite(p):
            rb = top * C_mu ** ((1 + math.log2(Cmax)) * (1.0 if p == 1 else p))
        else:
            rb = np.nan
        out["sandwiched_continuous"] = sw_val
        out["reverse_bound"] = rb
        out["C_sandwich"] = Cmax
        out["checks"]["dyadic_implies_continuous_on_sandwiched"] = bool(not np.isfinite(rb) or sw_val <= rb * (1 + 1e-12))
    return out


def product_weight_report(space1, measure1, space2, measure2, W, cls="ap", p=2.0) -> dict:
    """Factorwise constants of a two-variable weight: the worst constant in
    each variable with the other frozen, and their maximum."""
    W = np.asarray(W, float)
    fn = {"ap": ap_values, "rhp": rh_values}[cls]
    b1, b2 = BallSets(space1, measure1), BallSets(space2, measure2)
    c1 = max(np.nanmax(fn(b1, W[:, j], p)) for j in range(W.shape[1]) if measure2.mass[j] > 0)
    c2 = max(np.nanmax(fn(b2, W[i], p)) for i in range(W.shape[0]) if measure1.mass[i] > 0)
    return {"first": float(c1), "second": float(c2), "constant": float(max(c1, c2))}
