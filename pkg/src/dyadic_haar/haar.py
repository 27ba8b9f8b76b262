"""Haar functions adapted to a dyadic system and an arbitrary point measure.

The children of a cube are sorted by increasing mass.  With ``E_u`` the
union of the children from position ``u`` on, the ``u``-th function is
``a_u`` on the ``u``-th child and ``-b_u`` on ``E_{u+1}``; the weights make
it mean zero with unit L2 norm.  Children of zero mass produce the zero
function and are never indexed.

Everything is stored as two sparse matrices over "child slots" (one slot per
cube below the coarsest level): ``W`` holds each function's value on every
child, and ``Ind`` maps points to the slots containing them.  Analysis of a
signal ``f`` is then ``W @ (Ind @ (f * mass))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .grid import DyadicGrid, GridError


@dataclass
class ChildOrdering:
    cube: tuple
    order: list
    masses: np.ndarray
    tails: np.ndarray

    def tail_members(self, grid: DyadicGrid, u: int) -> np.ndarray:
        """Points of ``E_u`` (1-based ``u``)."""
        i = grid.level(self.cube[0]) + 1
        return np.concatenate([grid.members[i][c] for c in self.order[u - 1:]])


@dataclass
class HaarFunction:
    key: tuple
    cube: tuple
    u: int
    values: dict
    a: float
    b: float


def order_children(grid: DyadicGrid, k: int, alpha: int) -> ChildOrdering:
    """Children of cube ``(k, alpha)`` by increasing mass, ties by index."""
    i = grid.level(k)
    ch = list(grid.children[i][alpha])
    if i + 1 >= grid.nlevels:
        raise GridError("finest-level cubes have no children")
    m = grid.masses(k + 1)[ch]
    perm = np.lexsort((np.array(ch), m))
    order = [ch[j] for j in perm]
    masses = m[perm]
    tails = np.cumsum(masses[::-1])[::-1]
    return ChildOrdering((k, alpha), order, masses, tails)


def tail_inequality_holds(ordering: ChildOrdering) -> bool:
    """Exact rational check that the tail from position u holds at least
    ``1 - (u - 1) / M_Q`` of the cube's mass."""
    fm = [Fraction(float(v)) for v in ordering.masses]
    total = sum(fm, Fraction(0))
    MQ = len(fm)
    tail = total
    for u in range(1, MQ + 1):
        if tail < (1 - Fraction(u - 1, MQ)) * total:
            return False
        tail -= fm[u - 1]
    return True


class HaarBasis:
    """Haar system of a grid: cancellative functions keyed ``(k, alpha, u)``
    plus one normalised indicator for each coarsest cube of positive mass."""

    def __init__(self, grid: DyadicGrid):
        self.grid = grid
        self.measure = grid.measure
        g = grid
        n = g.space.n
        self.slot_offset = np.zeros(g.nlevels + 1, dtype=int)
        for i in range(1, g.nlevels):
            self.slot_offset[i + 1] = self.slot_offset[i] + len(g.centers[i])
        nslots = int(self.slot_offset[-1])
        rows = np.concatenate([self.slot_offset[i] + g.labels[i] for i in range(1, g.nlevels)]) \
            if g.nlevels > 1 else np.empty(0, int)
        cols = np.tile(np.arange(n), g.nlevels - 1)
        self.Ind = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(nslots, n))

        keys, a_list, b_list, orderings = [], [], [], {}
        wr, wc, wv = [], [], []
        for i in range(g.nlevels - 1):
            k = g.kmin + i
            for alpha in range(len(g.centers[i])):
                if len(g.children[i][alpha]) < 2:
                    continue
                od = order_children(g, k, alpha)
                orderings[(k, alpha)] = od
                E = od.tails
                for u in range(1, len(od.order)):
                    q = od.masses[u - 1]
                    if q <= 0:
                        continue
                    e_u, e_next = E[u - 1], E[u]
                    a = np.sqrt(e_next) / (np.sqrt(q) * np.sqrt(e_u))
                    b = np.sqrt(q) / (np.sqrt(e_u) * np.sqrt(e_next))
                    row = len(keys)
                    keys.append((k, alpha, u))
                    a_list.append(a)
                    b_list.append(b)
                    base = self.slot_offset[i + 1]
                    wr.append(row); wc.append(base + od.order[u - 1]); wv.append(a)
                    for c in od.order[u:]:
                        wr.append(row); wc.append(base + c); wv.append(-b)
        self.keys = keys
        self.key_index = {kk: j for j, kk in enumerate(keys)}
        self.a = np.array(a_list)
        self.b = np.array(b_list)
        self.orderings = orderings
        self.W = sp.csr_matrix((wv, (wr, wc)), shape=(len(keys), nslots))
        top = g.masses(g.kmin)
        self.coarse_alphas = np.flatnonzero(top > 0)
        self.coarse_mass = top

    @property
    def size(self) -> int:
        return len(self.keys)

    def function(self, key) -> HaarFunction:
        j = self.key_index[tuple(key)]
        k, alpha, u = self.keys[j]
        od = self.orderings[(k, alpha)]
        vals = {od.order[u - 1]: float(self.a[j])}
        for c in od.order[u:]:
            vals[c] = -float(self.b[j])
        return HaarFunction(tuple(key), (k, alpha), u, vals, float(self.a[j]), float(self.b[j]))

    def evaluate(self, key) -> np.ndarray:
        j = self.key_index[tuple(key)]
        return np.asarray(self.Ind.T @ self.W[j].toarray().ravel()).ravel()

    def matrix(self) -> np.ndarray:
        """Dense ``(size, n)`` matrix of function values."""
        return (self.W @ self.Ind).toarray()

    def coarse_matrix(self) -> np.ndarray:
        """Rows ``mu(Q)**-1/2 1_Q`` for coarsest cubes of positive mass."""
        g = self.grid
        lab = g.labels[0]
        rows = np.zeros((self.coarse_alphas.size, g.space.n))
        for r, a in enumerate(self.coarse_alphas):
            rows[r, lab == a] = self.coarse_mass[a] ** -0.5
        return rows

    def full_matrix(self) -> np.ndarray:
        return np.vstack([self.coarse_matrix(), self.matrix()])

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Cancellative coefficients; ``f`` may be ``(n,)`` or ``(n, s)``."""
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.grid.space.n:
            raise ValueError(f"signal length {f.shape[0]} != {self.grid.space.n}")
        m = self.measure.mass
        g = f * (m if f.ndim == 1 else m[:, None])
        return np.asarray(self.W @ (self.Ind @ g))

    def synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        """Cancellative part ``sum c h`` for aligned coefficient arrays."""
        return np.asarray(self.Ind.T @ (self.W.T @ np.asarray(coeffs, float)))

    def coarse_averages(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, float)
        g = self.grid
        m = self.measure.mass
        nc = len(g.centers[0])
        tot = np.zeros((nc,) + f.shape[1:])
        np.add.at(tot, g.labels[0], f * (m if f.ndim == 1 else m[:, None]))
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = tot / (self.coarse_mass if f.ndim == 1 else self.coarse_mass[:, None])
        avg[self.coarse_mass == 0] = 0.0
        return avg


@dataclass
class HaarCoefficients:
    keys: list
    values: np.ndarray
    mean: float
    coarse: np.ndarray

    def as_dict(self) -> dict:
        return {k: float(v) for k, v in zip(self.keys, self.values)}


def build_basis(grid: DyadicGrid, validate: bool = False) -> HaarBasis:
    basis = HaarBasis(grid)
    if validate:
        rep = validate_basis(basis)
        if not rep["pass"]:
            raise ValueError(f"Haar basis failed validation: {rep['failed']}")
    return basis


def analyze(basis: HaarBasis, f) -> HaarCoefficients:
    """Inner products with every cancellative function, the coarse cube
    averages and the global mean."""
    f = np.asarray(f, dtype=float)
    if f.shape != (basis.grid.space.n,):
        raise ValueError(f"expected a signal of length {basis.grid.space.n}, got shape {f.shape}")
    m = basis.measure.mass
    mean = float(np.dot(f, m) / m.sum())
    return HaarCoefficients(list(basis.keys), basis.coefficients(f), mean, basis.coarse_averages(f))


def synthesize(basis: HaarBasis, coefficients, mean: float = 0.0, coarse=None) -> np.ndarray:
    """Pointwise sum of the expansion.

    ``coefficients`` is a ``HaarCoefficients``, an array aligned with
    ``basis.keys`` or a mapping from keys to values (missing keys are zero).
    ``coarse`` gives per-coarsest-cube averages; otherwise ``mean`` is used
    as a constant.
    """
    if isinstance(coefficients, HaarCoefficients):
        mean, coarse = coefficients.mean, coefficients.coarse
        vec = coefficients.values
    elif isinstance(coefficients, dict):
        vec = np.zeros(basis.size)
        for key, v in coefficients.items():
            key = tuple(int(t) for t in key)
            if key not in basis.key_index:
                raise KeyError(f"unknown Haar key {key}")
            vec[basis.key_index[key]] = v
    else:
        vec = np.asarray(coefficients, float)
        if vec.shape != (basis.size,):
            raise ValueError("coefficient array does not match the basis")
    out = basis.synthesis(vec)
    if coarse is not None:
        out = out + np.asarray(coarse, float)[basis.grid.labels[0]]
    else:
        out = out + mean
    return out


def conditional_expectation(grid: DyadicGrid, measure, f, k: int) -> np.ndarray:
    """Cube averages at level ``k``; zero on zero-mass cubes."""
    i = grid.level(k)
    f = np.asarray(f, float)
    lab = grid.labels[i]
    nc = len(grid.centers[i])
    tot = np.bincount(lab, weights=f * measure.mass, minlength=nc)
    mass = np.bincount(lab, weights=measure.mass, minlength=nc)
    avg = np.divide(tot, mass, out=np.zeros(nc), where=mass > 0)
    return avg[lab]


def martingale_difference(grid: DyadicGrid, measure, f, cube) -> np.ndarray:
    """``(E_{k+1} f - E_k f) 1_Q`` for ``cube = (k, alpha)``."""
    k, alpha = cube
    i = grid.level(k)
    if i + 1 >= grid.nlevels:
        raise GridError("martingale difference undefined on the finest level")
    d = conditional_expectation(grid, measure, f, k + 1) - conditional_expectation(grid, measure, f, k)
    return np.where(grid.labels[i] == alpha, d, 0.0)


def norm_bracket(M: int) -> float:
    """Constant ``c`` with every normalised Haar norm ratio in ``[1/c, c]``.

    Writing ``theta = mu(E_{u+1}) / mu(E_u) >= 1/M`` the p-norm ratio is
    ``(theta**(p/2) + theta**(1-p/2) (1-theta)**(p-1))**(1/p)``, which stays
    in ``[M**-0.5, 2 M**0.5]`` for every ``p`` in ``[1, inf]``; the product
    of the 1- and sup-norms equals ``2 max(theta, 1 - theta)`` in ``[1, 2]``.
    """
    return 2.0 * np.sqrt(max(M, 1))


def lp_norm(values: np.ndarray, mass: np.ndarray, p: float) -> float:
    pos = mass > 0
    if np.isinf(p):
        return float(np.abs(values[pos]).max()) if pos.any() else 0.0
    return float((np.abs(values) ** p @ mass) ** (1.0 / p))


def validate_basis(basis: HaarBasis, tol: float = 1e-10, cancel_tol: float = 1e-12,
                   ps=(1, 2, 4, np.inf)) -> dict:
    """Report on support, child constancy, cancellation, orthonormality,
    spanning and the normalised norm ratios of every function."""
    g = basis.grid
    m = basis.measure.mass
    H = basis.matrix()
    c = norm_bracket(g.M)
    failed = []
    worst = {"cancel": 0.0, "gram": 0.0}
    ratios = {str(p): [np.inf, 0.0] for p in ps}
    prod = [np.inf, 0.0]
    for j, (k, alpha, u) in enumerate(basis.keys):
        i = g.level(k)
        h = H[j]
        inside = g.labels[i] == alpha
        if np.any(h[~inside] != 0):
            failed.append(("support", basis.keys[j]))
        lab = g.labels[i + 1][inside]
        vals = h[inside]
        for child in np.unique(lab):
            v = vals[lab == child]
            if np.ptp(v) > 0:
                failed.append(("constant_on_children", basis.keys[j]))
                break
        integral = abs(float(h @ m))
        scale = max(1.0, float(np.abs(h) @ m))
        worst["cancel"] = max(worst["cancel"], integral / scale)
        if integral > cancel_tol * scale:
            failed.append(("cancellation", basis.keys[j]))
        od = basis.orderings[(k, alpha)]
        q = od.masses[u - 1]
        for p in ps:
            expo = (-0.5 if np.isinf(p) else 1.0 / p - 0.5)
            r = lp_norm(h, m, p) / q ** expo
            lo, hi = ratios[str(p)]
            ratios[str(p)] = [min(lo, r), max(hi, r)]
            if not 1.0 / c <= r <= c:
                failed.append((f"norm_ratio_p{p}", basis.keys[j]))
        pr = lp_norm(h, m, 1) * lp_norm(h, m, np.inf)
        prod = [min(prod[0], pr), max(prod[1], pr)]
        if not 1.0 / c <= pr <= c:
            failed.append(("norm_product", basis.keys[j]))
    # orthogonality within each cube and spanning of child-constant functions
    for (k, alpha), od in basis.orderings.items():
        rows = [basis.key_index[(k, alpha, u)] for u in range(1, len(od.order)) if (k, alpha, u) in basis.key_index]
        pos = od.masses > 0
        if rows:
            G = (H[rows] * m) @ H[rows].T
            err = float(np.abs(G - np.eye(len(rows))).max())
            worst["gram"] = max(worst["gram"], err)
            if err > tol:
                failed.append(("orthonormal_in_cube", (k, alpha)))
        # values on positive-mass children, weighted so the L2 geometry is Euclidean
        vals = np.ones((len(rows) + 1, int(pos.sum())))
        sw = np.sqrt(od.masses[pos])
        kept = [c for c, p in zip(od.order, pos) if p]
        for r, j in enumerate(rows):
            fn = basis.function(basis.keys[j])
            vals[r + 1] = [fn.values.get(cc, 0.0) for cc in kept]
        rank = np.linalg.matrix_rank(vals * sw, tol=1e-9)
        if rank != int(pos.sum()):
            failed.append(("span", (k, alpha)))
    tails_ok = all(tail_inequality_holds(od) for od in basis.orderings.values())
    if not tails_ok:
        failed.append(("tail_inequality", None))
    bounds_ok, bounds_w = subcube_mass_bounds(basis)
    if not bounds_ok:
        failed.append(("subcube_mass_bounds", bounds_w))
    finite = bool(np.all(np.isfinite(H)))
    if not finite:
        failed.append(("finite", None))
    return {"pass": not failed, "failed": failed[:50], "n_failed": len(failed),
            "bracket": c, "M": g.M, "ratios": ratios, "norm_product": prod,
            "max_cancellation": worst["cancel"], "max_gram_error": worst["gram"],
            "functions": basis.size}


def subcube_mass_bounds(basis: HaarBasis):
    """``mu(Q)/M <= mu(E_u) <= mu(Q)`` and
    ``1/M <= mu(E_{u+1})/mu(E_u) <= M/2`` for every indexed function."""
    M = basis.grid.M
    for (k, alpha, u) in basis.keys:
        od = basis.orderings[(k, alpha)]
        total = od.tails[0]
        eu, en = od.tails[u - 1], od.tails[u]
        rel = 1e-12 * total
        if not (total / M - rel <= eu <= total + rel):
            return False, (k, alpha, u)
        if not (1.0 / M - 1e-12 <= en / eu <= M / 2.0 + 1e-12):
            return False, (k, alpha, u)
    return True, None


def gram_matrix(basis: HaarBasis) -> np.ndarray:
    """Gram matrix of the full basis (coarse indicators first) in L2(mu)."""
    F = basis.full_matrix()
    return (F * basis.measure.mass) @ F.T


def classical_haar(f: np.ndarray, weight: float = 1.0) -> list:
    """Pyramid Haar transform of a length-2^m signal for uniform mass.

    Returns per-level detail arrays from coarsest to finest, each detail
    ``sqrt(weight) (left - right) / sqrt(2)`` on running averages.
    """
    a = np.asarray(f, float) * np.sqrt(weight)
    out = []
    while a.size > 1:
        out.append((a[0::2] - a[1::2]) / np.sqrt(2.0))
        a = (a[0::2] + a[1::2]) / np.sqrt(2.0)
    return out[::-1]
