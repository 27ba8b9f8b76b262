"""Deterministic reference spaces.

Each generator returns ``(source, mass, extras)`` where ``source`` is the
record accepted by ``load_space`` and ``extras`` may carry canonical grid
centres (coarse to fine), the grid ratio they assume and a distinguished
centre.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

MODELS = ("binary-lattice", "triadic", "perturbed-grid", "tree", "isolated-point")


def binary_lattice(n: int = 256, seed: int = 0, random_masses: bool = False):
    """Points ``0..n-1`` on the line; centres at the left ends of the
    standard dyadic blocks."""
    m = int(round(math.log2(n)))
    if 2 ** m != n:
        raise ValueError("binary lattice size must be a power of two")
    mass = np.ones(n) if not random_masses else np.random.default_rng(seed).uniform(0.5, 2.0, n)
    centers = [list(range(0, n, 2 ** (m - j))) for j in range(m + 1)]
    source = {"points": [[float(i)] for i in range(n)], "metric": "euclidean"}
    return source, mass, {"centers": centers, "delta": 0.5, "kmin": -m, "distinguished_center": 0}


def triadic(n: int = 81, seed: int = 0, random_masses: bool = False):
    """Points ``0..3^m-1``; centres at the middles of triadic blocks, so the
    global middle point is a centre at every level."""
    m = int(round(math.log(n, 3)))
    if 3 ** m != n:
        raise ValueError("triadic size must be a power of three")
    mass = np.ones(n) if not random_masses else np.random.default_rng(seed).uniform(0.5, 2.0, n)
    centers = []
    for j in range(m + 1):
        size = 3 ** (m - j)
        centers.append([b * size + (size - 1) // 2 for b in range(3 ** j)])
    source = {"points": [[float(i)] for i in range(n)], "metric": "euclidean"}
    return source, mass, {"centers": centers, "delta": 1.0 / 3.0, "kmin": -m,
                          "distinguished_center": (n - 1) // 2}


def perturbed_grid(n: int = 64, seed: int = 0, jitter: float = 0.25):
    side = int(math.isqrt(n))
    if side * side != n:
        raise ValueError("perturbed grid size must be a perfect square")
    rng = np.random.default_rng(seed)
    ij = np.array([(i, j) for i in range(side) for j in range(side)], float)
    pts = ij + rng.uniform(-jitter, jitter, ij.shape)
    mass = rng.uniform(0.5, 2.0, n)
    return {"points": pts.tolist(), "metric": "euclidean"}, mass, {}


def random_tree(n: int = 64, seed: int = 0):
    """Shortest-path metric of a random recursive tree with random edge lengths."""
    rng = np.random.default_rng(seed)
    parents = [int(rng.integers(0, i)) for i in range(1, n)]
    lengths = rng.uniform(0.5, 2.0, n - 1)
    G = csr_matrix((lengths, (np.arange(1, n), parents)), shape=(n, n))
    D = shortest_path(G, directed=False)
    mass = rng.uniform(0.5, 2.0, n)
    return {"dist_matrix": D.tolist(), "metric": "matrix"}, mass, {}


def isolated_point(n: int = 33, seed: int = 0, far: float = 1000.0, far_mass: float = 10.0):
    """A jittered cluster in ``[0, 1)`` plus one heavy point far away, whose
    cube stays a singleton below the top level."""
    rng = np.random.default_rng(seed)
    k = n - 1
    base = (np.arange(k) + rng.uniform(0.1, 0.9, k)) / k
    pts = np.concatenate([base, [far]])
    mass = np.concatenate([rng.uniform(0.5, 2.0, k), [far_mass]])
    return {"points": [[float(v)] for v in pts], "metric": "euclidean"}, mass, {"isolated": n - 1}


def generate(model: str, n: int | None = None, seed: int = 0, **kw):
    if model == "binary-lattice":
        return binary_lattice(n or 256, seed, **kw)
    if model == "triadic":
        return triadic(n or 81, seed, **kw)
    if model == "perturbed-grid":
        return perturbed_grid(n or 64, seed, **kw)
    if model == "tree":
        return random_tree(n or 64, seed)
    if model == "isolated-point":
        return isolated_point(n or 33, seed, **kw)
    raise ValueError(f"unknown corpus model {model!r}; choose from {', '.join(MODELS)}")


def random_cloud(n: int, seed: int, dim: int = 2):
    """Seeded doubling cloud: a uniform sample with a few denser clumps."""
    rng = np.random.default_rng(seed)
    k = max(1, n // 4)
    clumps = rng.random((3, dim))
    pts = np.vstack([rng.random((n - k, dim)),
                     clumps[rng.integers(0, 3, k)] + 0.02 * rng.normal(size=(k, dim))])
    # drop exact duplicates so distances stay positive
    pts = np.unique(np.round(pts, 12), axis=0)
    return pts, rng.uniform(0.2, 2.0, len(pts))
