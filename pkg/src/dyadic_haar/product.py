"""Two-parameter Haar analysis on a product of two finite spaces.

A product signal is an ``n1 x n2`` matrix.  Its cancellative coefficients
form the dense matrix ``C = H1 diag(mu1) F diag(mu2) H2^T`` indexed by
pairs of Haar keys; absent pairs (zero functions) are simply not indexed.
The square function, the BMO-type functional and the sequence norms are
all computed from ``|C|**2`` aggregated over dyadic rectangles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .haar import HaarBasis, build_basis, conditional_expectation


class FactorData:
    """Per-factor tables: Haar matrix, the cube of each function, and the
    membership and mass of those cubes."""

    def __init__(self, basis: HaarBasis):
        self.basis = basis
        g = basis.grid
        self.mass = basis.measure.mass
        self.H = basis.matrix()
        self.cubes = list(basis.orderings.keys())
        cube_pos = {c: j for j, c in enumerate(self.cubes)}
        self.func_cube = np.array([cube_pos[(k, a)] for k, a, _ in basis.keys], dtype=int)
        self.A = np.zeros((len(self.cubes), g.space.n), dtype=bool)
        for j, (k, a) in enumerate(self.cubes):
            self.A[j] = g.labels[g.level(k)] == a
        self.cube_mass = self.A.astype(float) @ self.mass
        # function -> cube aggregation
        self.G = np.zeros((len(self.cubes), basis.size))
        self.G[self.func_cube, np.arange(basis.size)] = 1.0
        # rows chi_Q / mu(Q) for each function's cube
        self.P = self.A[self.func_cube] / self.cube_mass[self.func_cube, None] if basis.size else np.zeros((0, g.space.n))


class ProductGrid:
    def __init__(self, basis1: HaarBasis, basis2: HaarBasis):
        self.basis1, self.basis2 = basis1, basis2
        self.f1, self.f2 = FactorData(basis1), FactorData(basis2)
        self.mass = np.outer(self.f1.mass, self.f2.mass)

    @classmethod
    def from_grids(cls, grid1, grid2):
        return cls(build_basis(grid1), build_basis(grid2))

    @property
    def shape(self):
        return (self.basis1.grid.space.n, self.basis2.grid.space.n)

    @property
    def tensor_shape(self):
        return (self.basis1.size, self.basis2.size)

    def check(self, f):
        f = np.asarray(f, float)
        if f.shape != self.shape:
            raise ValueError(f"signal shape {f.shape} does not match {self.shape}")
        return f

    def rect_energy(self, values):
        """Sum of ``|c|**2`` per dyadic rectangle (cube pair)."""
        return self.f1.G @ (np.asarray(values) ** 2) @ self.f2.G.T

    def rect_mass(self):
        return np.outer(self.f1.cube_mass, self.f2.cube_mass)

    def contained(self, omega):
        """Boolean (ncubes1, ncubes2): rectangle ``R`` lies inside ``omega``."""
        outside = (~np.asarray(omega, bool)).astype(float)
        return (self.f1.A.astype(float) @ outside @ self.f2.A.astype(float).T) == 0

    def rect_mask(self, j1, j2):
        return np.outer(self.f1.A[j1], self.f2.A[j2])


@dataclass
class CoefficientTensor:
    product: ProductGrid
    values: np.ndarray

    def to_dict(self) -> dict:
        k1, k2 = self.product.basis1.keys, self.product.basis2.keys
        out = {}
        for i, j in zip(*np.nonzero(self.values)):
            out[tuple(k1[i]) + tuple(k2[j])] = float(self.values[i, j])
        return out

    @classmethod
    def from_dict(cls, product: ProductGrid, data: dict) -> "CoefficientTensor":
        v = np.zeros(product.tensor_shape)
        i1, i2 = product.basis1.key_index, product.basis2.key_index
        for key, val in data.items():
            key = tuple(int(t) for t in key)
            a, b = key[:3], key[3:]
            if a not in i1 or b not in i2:
                raise KeyError(f"unknown product key {key}")
            v[i1[a], i2[b]] = val
        return cls(product, v)

    @classmethod
    def unit(cls, product: ProductGrid, key1, key2, value=1.0) -> "CoefficientTensor":
        v = np.zeros(product.tensor_shape)
        v[product.basis1.key_index[tuple(key1)], product.basis2.key_index[tuple(key2)]] = value
        return cls(product, v)


def product_analyze(product: ProductGrid, f) -> CoefficientTensor:
    f = product.check(f)
    a, b = product.f1, product.f2
    return CoefficientTensor(product, (a.H * a.mass) @ f @ (b.H * b.mass).T)


def projection(product: ProductGrid, s: CoefficientTensor) -> np.ndarray:
    """Synthesis from the cancellative pairs only."""
    return product.f1.H.T @ s.values @ product.f2.H


def lifting(product: ProductGrid, f) -> tuple:
    """``(tensor, residual)`` where the residual is the part of ``f`` not
    spanned by cancellative pairs (coarse and mean components)."""
    t = product_analyze(product, f)
    return t, product.check(f) - projection(product, t)


def cancellative_part(product: ProductGrid, f) -> np.ndarray:
    return projection(product, product_analyze(product, f))


def square_function(product: ProductGrid, tensor: CoefficientTensor) -> np.ndarray:
    """``S(x1, x2) = (sum |c|^2 chi_R / mu(R))**0.5`` from coefficients."""
    S2 = product.f1.P.T @ (tensor.values ** 2) @ product.f2.P
    return np.sqrt(np.maximum(S2, 0.0))


def _difference_operators(basis: HaarBasis):
    """Matrices of ``D_Q = 1_Q (E_{k+1} - E_k)`` for every non-finest cube."""
    g = basis.grid
    n = g.space.n
    m = basis.measure.mass
    eye = np.eye(n)
    ops = []
    E = [np.column_stack([conditional_expectation(g, basis.measure, eye[:, y], k) for y in range(n)])
         for k in g.ks]
    for i in range(g.nlevels - 1):
        D = E[i + 1] - E[i]
        for a in range(len(g.centers[i])):
            inside = g.labels[i] == a
            ops.append(((g.kmin + i, a), inside, D * inside[:, None]))
    return ops


def martingale_square_function(product: ProductGrid, f) -> np.ndarray:
    """Square function built from local martingale differences:
    ``sum_R 1_R avg_R |D_{Q1} D_{Q2} f|^2``, independent of the Haar keys."""
    f = product.check(f)
    m1, m2 = product.f1.mass, product.f2.mass
    ops1 = _difference_operators(product.basis1)
    ops2 = _difference_operators(product.basis2)
    S2 = np.zeros(f.shape)
    for (_, in1, D1), (_, in2, D2) in itertools.product(ops1, ops2):
        mass = float(m1[in1].sum() * m2[in2].sum())
        if mass <= 0:
            continue
        G = D1 @ f @ D2.T
        avg = float(m1 @ (G ** 2) @ m2) / mass
        if avg:
            S2 += avg * np.outer(in1, in2)
    return np.sqrt(S2)


def h1dd_norm(product: ProductGrid, f) -> float:
    S = square_function(product, product_analyze(product, f))
    return float((S * product.mass).sum())


def s1_norm(product: ProductGrid, s: CoefficientTensor) -> float:
    return float((square_function(product, s) * product.mass).sum())


def s2_norm(s: CoefficientTensor) -> float:
    return float(np.sqrt((s.values ** 2).sum()))


def omega_value(product: ProductGrid, energy, omega) -> float:
    """``(sum_{R in omega} energy(R) / mu(omega))**0.5`` for one point set."""
    omega = np.asarray(omega, bool)
    mass = float(product.mass[omega].sum())
    if mass <= 0:
        return 0.0
    inside = product.contained(omega)
    return float(np.sqrt(energy[inside].sum() / mass))


def rectangle_family(product: ProductGrid) -> list:
    """Every dyadic rectangle of positive mass."""
    rm = product.rect_mass()
    return [product.rect_mask(j1, j2) for j1, j2 in zip(*np.nonzero(rm > 0))]


def levelset_family(product: ProductGrid, tensor: CoefficientTensor) -> list:
    """Level sets ``{S > 2**k}`` of the square function together with their
    dyadic strong-maximal enlargements."""
    from .maximal import rectangle_maximal, cube_family

    family = []
    S = square_function(product, tensor)
    pos = S[S > 0]
    if not pos.size:
        return family
    g1, g2 = product.basis1.grid, product.basis2.grid
    A1, A2 = cube_family(g1), cube_family(g2)
    for k in range(int(np.floor(np.log2(pos.min()))) - 1, int(np.floor(np.log2(pos.max()))) + 1):
        om = S > 2.0 ** k
        if om.any():
            family.append(om)
            big = rectangle_maximal(A1, g1.measure.mass, A2, g2.measure.mass, om.astype(float)) > 0.5
            family.append(big | om)
    return family


def union_family(product: ProductGrid, tensor: CoefficientTensor, max_unions: int = 64) -> list:
    """Growing unions of the rectangles with the largest energy density."""
    family = []
    energy = product.rect_energy(tensor.values)
    rm = product.rect_mass()
    density = np.where(rm > 0, energy / np.where(rm > 0, rm, 1.0), 0.0)
    order = np.argsort(-density, axis=None, kind="stable")
    union = np.zeros(product.shape, bool)
    for idx in order[:max_unions]:
        j1, j2 = np.unravel_index(idx, density.shape)
        if density[j1, j2] <= 0:
            break
        union = union | product.rect_mask(j1, j2)
        family.append(union.copy())
    return family


def default_family(product: ProductGrid, tensor: CoefficientTensor, max_unions: int = 64) -> list:
    """Candidate open sets: every rectangle, the level sets of the square
    function and their enlargements, unions of the densest rectangles, and
    the whole product."""
    return (rectangle_family(product) + levelset_family(product, tensor)
            + union_family(product, tensor, max_unions) + [np.ones(product.shape, bool)])


OMEGA_FAMILIES = ("default", "rects", "levelsets")


def named_family(product: ProductGrid, tensor: CoefficientTensor, name: str = "default") -> list:
    if name == "default":
        return default_family(product, tensor)
    if name == "rects":
        return rectangle_family(product)
    if name == "levelsets":
        return levelset_family(product, tensor) + [np.ones(product.shape, bool)]
    raise ValueError(f"unknown set family {name!r}")


def bmodd_functional(product: ProductGrid, tensor: CoefficientTensor, family=None) -> dict:
    """Largest Carleson-type ratio over a finite family of point sets.

    This is a certified lower bound for the supremum over all open sets.
    """
    if family is None:
        family = default_family(product, tensor)
    if len(family) == 0:
        raise ValueError("empty set family")
    energy = product.rect_energy(tensor.values)
    best, arg = 0.0, None
    for j, om in enumerate(family):
        v = omega_value(product, energy, om)
        if v > best:
            best, arg = v, j
    return {"value": best, "index": arg, "family_size": len(family)}


def c1_norm(product: ProductGrid, t: CoefficientTensor, family=None) -> float:
    return bmodd_functional(product, t, family)["value"]


def pairing(s: CoefficientTensor, t: CoefficientTensor, family=None) -> dict:
    """``<s, t>`` with the ratio against ``||s||_s1 ||t||_c1``."""
    if s.product is not t.product:
        raise ValueError("tensors live on different product grids")
    val = float((s.values * t.values).sum())
    ns = s1_norm(s.product, s)
    nt = c1_norm(t.product, t, family)
    denom = ns * nt
    return {"pairing": val, "s1": ns, "c1": nt,
            "ratio": (abs(val) / denom) if denom > 0 else (0.0 if val == 0 else np.inf)}


def truncate(s: CoefficientTensor, levels: int) -> CoefficientTensor:
    """Keep only rectangles within ``levels`` of the coarsest level in both
    factors; finite truncations of this kind are dense in the sequence spaces."""
    b1, b2 = s.product.basis1, s.product.basis2
    k1 = np.array([k for k, _, _ in b1.keys]) - b1.grid.kmin
    k2 = np.array([k for k, _, _ in b2.keys]) - b2.grid.kmin
    keep = np.outer(k1 < levels, k2 < levels)
    return CoefficientTensor(s.product, np.where(keep, s.values, 0.0))
