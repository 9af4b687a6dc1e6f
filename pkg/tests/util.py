"""Shared builders and independent oracles for the test suite.

Oracles deliberately re-derive quantities through different code paths than
the library: eigenvalues via direct symmetrization of the kernel, boundary
ratios via set arithmetic, convolution via path enumeration.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

import relwalk as rw
from relwalk.walks import _assemble


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def cycle_relation(n: int) -> rw.FiniteRelation:
    return rw.build_relation([1.0 / n] * n, [0] * n)


def cycle_entries(n: int) -> list[tuple[int, int, float]]:
    entries = []
    for i in range(n):
        entries.append((i, (i + 1) % n, 0.5))
        entries.append((i, (i - 1) % n, 0.5))
    return entries


def cycle_walk(n: int) -> tuple[rw.FiniteRelation, rw.RandomWalk]:
    rel = cycle_relation(n)
    return rel, rw.custom_walk(rel, cycle_entries(n))


def cycle_graphing(n: int) -> rw.Graphing:
    return rw.build_graphing([(i, (i + 1) % n) for i in range(n)])


def complete_walk(m: int) -> tuple[rw.FiniteRelation, rw.RandomWalk]:
    rel = rw.build_relation([1.0 / m] * m, [0] * m)
    p = 1.0 / (m - 1)
    entries = [(x, y, p) for x in range(m) for y in range(m) if x != y]
    return rel, rw.custom_walk(rel, entries)


def lazy_uniform_walk(m: int) -> tuple[rw.FiniteRelation, rw.RandomWalk]:
    """Kernel 1/m everywhere: spectrum {1, 0, ..., 0}."""
    rel = rw.build_relation([1.0 / m] * m, [0] * m)
    entries = [(x, y, 1.0 / m) for x in range(m) for y in range(m)]
    return rel, rw.custom_walk(rel, entries)


def identity_walk(rel: rw.FiniteRelation) -> rw.RandomWalk:
    return rw.custom_walk(rel, [(x, x, 1.0) for x in range(rel.n_points)])


def random_masses(rng: np.random.Generator, n: int,
                  low: float = 0.5, high: float = 2.0) -> np.ndarray:
    u = rng.uniform(low, high, n)
    return u / u.sum()


def random_connected_edges(rng: np.random.Generator, points,
                           extra: float = 0.5) -> list[tuple[int, int]]:
    pts = [int(p) for p in points]
    order = list(rng.permutation(pts))
    edges = set()
    for a, b in zip(order, order[1:]):
        edges.add((min(a, b), max(a, b)))
    for a, b in combinations(pts, 2):
        if rng.random() < extra / max(len(pts), 2):
            edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def metropolis_entries(rel: rw.FiniteRelation,
                       edges: list[tuple[int, int]]) -> list[tuple[int, int, float]]:
    """Exactly reversible kernel for the relation's masses on the given edges."""
    n = rel.n_points
    deg = np.zeros(n, dtype=int)
    for x, y in edges:
        deg[x] += 1
        deg[y] += 1
    q = 1.0 / (deg.max() + 1)
    m = rel.mass
    entries = []
    stay = np.ones(n)
    for x, y in edges:
        pxy = q * min(1.0, m[y] / m[x])
        pyx = q * min(1.0, m[x] / m[y])
        entries.append((x, y, pxy))
        entries.append((y, x, pyx))
        stay[x] -= pxy
        stay[y] -= pyx
    for x in range(n):
        entries.append((x, x, stay[x]))
    return entries


def random_reversible_walk(rng: np.random.Generator, n: int,
                           extra: float = 1.0) -> tuple[rw.FiniteRelation, rw.RandomWalk]:
    rel = rw.build_relation(random_masses(rng, n), [0] * n)
    edges = random_connected_edges(rng, range(n), extra)
    return rel, rw.custom_walk(rel, metropolis_entries(rel, edges))


def schreier_walk(n: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    p1 = rng.permutation(n)
    p2 = rng.permutation(n)
    gens = [p1, np.argsort(p1), p2, np.argsort(p2)]
    return rw.cayley_action_walk(n, gens, [0.25] * 4)


def perturbed_walk(base: rw.RandomWalk, x: int, y: int, bump: float) -> rw.RandomWalk:
    """Bump one kernel entry and renormalize rows; detailed balance breaks."""
    kernel = base.kernel.copy()
    kernel[x, y] += bump
    kernel /= kernel.sum(axis=1, keepdims=True)
    return _assemble(base.rel, kernel, base.base_mass, base.base, base.base_scale)


# ---------------------------------------------------------------------------
# complexes
# ---------------------------------------------------------------------------

def tetrahedron(masses=None) -> rw.Complex2:
    tris = list(combinations(range(4), 3))
    return rw.build_complex(masses if masses is not None else [0.25] * 4, tris)


def octahedron() -> rw.Complex2:
    # antipodal pairs (0,1), (2,3), (4,5); faces avoid antipodes
    tris = [(a, b, c)
            for a in (0, 1) for b in (2, 3) for c in (4, 5)]
    return rw.build_complex([1.0 / 6] * 6, tris)


def torus7(masses=None) -> rw.Complex2:
    tris = [[i, (i + 1) % 7, (i + 3) % 7] for i in range(7)]
    tris += [[i, (i + 2) % 7, (i + 3) % 7] for i in range(7)]
    return rw.build_complex(masses if masses is not None else [1.0 / 7] * 7, tris)


def random_complex(rng: np.random.Generator, n_low: int = 5, n_high: int = 12,
                   ratio: float = 1.5) -> rw.Complex2:
    """Random 2-complex covering every vertex, edge mass ratios <= ratio."""
    n = int(rng.integers(n_low, n_high + 1))
    tris: set[tuple[int, int, int]] = set()
    while len(tris) < 2 * n:
        t = tuple(sorted(rng.choice(n, size=3, replace=False).tolist()))
        tris.add(t)
    covered = set(v for t in tris for v in t)
    for v in range(n):
        if v not in covered:
            others = [u for u in range(n) if u != v]
            a, b = rng.choice(others, size=2, replace=False).tolist()
            tris.add(tuple(sorted((v, a, b))))
    u = rng.uniform(2.0, 2.0 * ratio, n)
    return rw.build_complex(u / u.sum(), sorted(tris))


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def oracle_eigs(kernel: np.ndarray, base_mass: np.ndarray) -> np.ndarray:
    """Eigenvalues via direct symmetrization, independent of the library path."""
    root = np.sqrt(base_mass)
    s = root[:, None] * kernel / root[None, :]
    return np.linalg.eigvalsh((s + s.T) / 2.0)


def oracle_kappa(kernel: np.ndarray, base_mass: np.ndarray,
                 tol: float = 1e-9) -> float:
    vals = oracle_eigs(kernel, base_mass)
    return float(vals[vals <= 1.0 - tol].max())


def oracle_two_step(kernel: np.ndarray) -> np.ndarray:
    """Two-step probabilities by explicit path enumeration."""
    n = kernel.shape[0]
    out = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            for z in range(n):
                out[x, z] += kernel[x, y] * kernel[y, z]
    return out


def oracle_best_arc(n: int, mass_cap: float) -> tuple[float, int]:
    """Exhaustive search over arcs of the uniform n-cycle under the cap.

    Returns the best boundary-mass / set-mass ratio and the arc length.
    """
    best = (np.inf, 0)
    for start in range(n):
        for length in range(1, n):
            if length / n > mass_cap:
                continue
            arc = set((start + k) % n for k in range(length))
            bd = set()
            for v in arc:
                for u in ((v + 1) % n, (v - 1) % n):
                    if u not in arc:
                        bd.add(u)
            ratio = (len(bd) / n) / (length / n)
            if ratio < best[0]:
                best = (ratio, length)
    return best


def oracle_subsets(walk: rw.RandomWalk, mass_cap: float):
    """All nonempty proper subsets with their boundary ratios (tiny N only)."""
    n = walk.n_points
    adj = walk.kernel > 0
    adj = adj.copy()
    np.fill_diagonal(adj, False)
    m = walk.base_mass
    out = []
    for bits in range(1, 2 ** n - 1):
        inside = np.array([(bits >> i) & 1 for i in range(n)], dtype=bool)
        mass = float(m[inside].sum())
        if mass > mass_cap:
            continue
        bd = adj[inside].any(axis=0) & ~inside
        out.append((frozenset(np.flatnonzero(inside).tolist()),
                    float(m[bd].sum()) / mass))
    return out
