"""Reversible random walks supported on graphings.

A :class:`RandomWalk` bundles a row-stochastic kernel with the measure it is
in detailed balance with.  Downstream spectral code always reads the base
measure from the walk, so the kernel and its symmetrizing measure can never
drift apart.  Base measures are normalized to probability vectors; the
normalization constant is retained in ``base_scale``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    AsymmetricGeneratorSet,
    AsymmetricSupport,
    BaseMeasureMismatch,
    DetailedBalanceViolation,
    IsolatedPoint,
    NotEquivalent,
    ProbSumError,
    RowSumError,
    ValidationError,
)
from .relation import FiniteRelation, Graphing, _readonly, build_relation

ROW_SUM_TOL = 1e-12
DB_REL_TOL = 1e-10
BASE_MATCH_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class RandomWalk:
    """Row-stochastic kernel plus its detailed-balance base measure.

    ``eta`` is the smallest positive kernel entry.  ``declared_eta`` is the
    user-declared boundedness threshold (0 means report-only) and
    ``bounded`` records whether ``eta`` clears it.
    """

    rel: FiniteRelation
    kernel: np.ndarray       # shape (N, N)
    base_mass: np.ndarray    # probability vector the walk is symmetric for
    base: str                # "mu" | "tilde"
    base_scale: float        # total mass of the unnormalized base measure
    eta: float
    declared_eta: float
    bounded: bool
    db_residual: float       # max |m(x) k(x,y) - m(y) k(y,x)|

    @property
    def n_points(self) -> int:
        return self.rel.n_points

    @property
    def support(self) -> np.ndarray:
        return self.kernel > 0.0

    def support_edges(self) -> tuple[tuple[int, int], ...]:
        xs, ys = np.nonzero(self.kernel)
        return tuple((int(x), int(y)) for x, y in zip(xs, ys) if x < y)


def _assemble(rel, kernel, base_mass, base, base_scale, declared_eta=0.0) -> RandomWalk:
    kernel = np.asarray(kernel, dtype=float)
    base_mass = np.asarray(base_mass, dtype=float)
    pos = kernel[kernel > 0]
    eta = float(pos.min()) if pos.size else 0.0
    residual = detailed_balance_residual(kernel, base_mass)
    return RandomWalk(
        rel=rel,
        kernel=_readonly(kernel),
        base_mass=_readonly(base_mass),
        base=base,
        base_scale=float(base_scale),
        eta=eta,
        declared_eta=float(declared_eta),
        bounded=bool(eta >= declared_eta),
        db_residual=residual,
    )


def detailed_balance_residual(kernel: np.ndarray, base_mass: np.ndarray) -> float:
    flux = base_mass[:, None] * kernel
    return float(np.abs(flux - flux.T).max())


def detailed_balance_violation(walk: RandomWalk) -> float:
    """Max over ordered pairs of ``|m(x) k(x,y) - m(y) k(y,x)|``."""
    return detailed_balance_residual(walk.kernel, walk.base_mass)


def regular_walk(rel: FiniteRelation, graphing: Graphing) -> RandomWalk:
    """Degree-like walk on a graphing, reweighted by square-root mass ratios.

    ``k(x, y)`` is proportional to ``sqrt(mass(y))`` over the neighbors of
    ``x``, which makes the walk reversible for the reweighted measure
    ``m(x) = sqrt(mass(x)) * sum_neighbors sqrt(mass(y))`` (normalized here;
    the constant is kept in ``base_scale``).
    """
    n = rel.n_points
    adj = np.zeros((n, n), dtype=bool)
    for x, y in graphing.edges:
        if x >= n or y >= n:
            raise ValidationError(f"edge ({x}, {y}) is out of range for {n} points")
        if rel.class_of[x] != rel.class_of[y]:
            raise NotEquivalent(f"edge ({x}, {y}) joins two different classes")
        adj[x, y] = adj[y, x] = True

    degrees = adj.sum(axis=1)
    if np.any(degrees == 0):
        lonely = int(np.argmin(degrees))
        raise IsolatedPoint(f"point {lonely} is incident to no edge of the graphing")

    root = np.sqrt(rel.mass)
    weights = np.where(adj, root[None, :], 0.0)   # weight sqrt(mass(y)) on edge x->y
    row = weights.sum(axis=1)
    kernel = weights / row[:, None]

    tilde = root * row
    scale = float(tilde.sum())
    return _assemble(rel, kernel, tilde / scale, base="tilde", base_scale=scale)


def custom_walk(rel: FiniteRelation, entries, base: str = "mu",
                declared_eta: float = 0.0) -> RandomWalk:
    """Validate an explicit kernel given as ``(x, y, p)`` triples.

    ``base="mu"`` checks detailed balance against the relation's masses;
    ``base="tilde"`` derives the reversible measure from the kernel itself
    (spanning-tree propagation per support component, anchored at the
    component's lowest-index point) and then validates consistency.
    """
    n = rel.n_points
    kernel = np.zeros((n, n), dtype=float)
    for i, (x, y, p) in enumerate(entries):
        x, y, p = int(x), int(y), float(p)
        if x < 0 or x >= n or y < 0 or y >= n:
            raise ValidationError(f"entry {i}: pair ({x}, {y}) out of range for {n} points")
        if p < 0 or not np.isfinite(p):
            raise ValidationError(f"entry {i}: probability {p!r} is not a nonnegative real")
        if rel.class_of[x] != rel.class_of[y]:
            raise NotEquivalent(f"entry {i}: pair ({x}, {y}) joins two different classes")
        kernel[x, y] += p

    rows = kernel.sum(axis=1)
    bad = np.abs(rows - 1.0) > ROW_SUM_TOL
    if np.any(bad):
        x = int(np.argmax(np.abs(rows - 1.0)))
        raise RowSumError(f"row {x} sums to {rows[x]!r}, expected 1 within {ROW_SUM_TOL}")

    support = kernel > 0
    if not np.array_equal(support, support.T):
        xs, ys = np.nonzero(support & ~support.T)
        raise AsymmetricSupport(
            f"kernel({int(xs[0])}->{int(ys[0])}) > 0 but the reverse entry is 0"
        )

    if base == "mu":
        base_mass, scale = rel.mass, 1.0
    elif base == "tilde":
        base_mass, scale = _derived_base(rel, kernel)
    else:
        raise ValidationError(f"unknown base measure selector {base!r}")

    residual = detailed_balance_residual(kernel, base_mass)
    flux = base_mass[:, None] * kernel
    denom = max(float(flux.max()), 1e-300)
    if residual > DB_REL_TOL * denom:
        raise DetailedBalanceViolation(
            f"detailed-balance residual {residual!r} exceeds {DB_REL_TOL} relative",
            residual=residual,
        )
    return _assemble(rel, kernel, base_mass, base, scale, declared_eta)


def _derived_base(rel: FiniteRelation, kernel: np.ndarray) -> tuple[np.ndarray, float]:
    """Reversible measure determined by the kernel on each support component."""
    n = rel.n_points
    support = kernel > 0
    measure = np.zeros(n, dtype=float)
    seen = np.zeros(n, dtype=bool)
    for start in range(n):
        if seen[start]:
            continue
        measure[start] = rel.mass[start]
        seen[start] = True
        stack = [start]
        while stack:
            x = stack.pop()
            for y in np.flatnonzero(support[x]):
                y = int(y)
                if not seen[y]:
                    measure[y] = measure[x] * kernel[x, y] / kernel[y, x]
                    seen[y] = True
                    stack.append(y)
    scale = float(measure.sum())
    return measure / scale, scale


def convolve(w1: RandomWalk, w2: RandomWalk) -> RandomWalk:
    """Kernel of the two-step chain ``w1`` then ``w2``."""
    if w1.rel is not w2.rel:
        if w1.rel.n_points != w2.rel.n_points or not (
            np.array_equal(w1.rel.mass, w2.rel.mass)
            and np.array_equal(w1.rel.class_of, w2.rel.class_of)
        ):
            raise BaseMeasureMismatch("walks live on different relations")
    if not np.allclose(w1.base_mass, w2.base_mass, rtol=BASE_MATCH_RTOL, atol=0.0):
        raise BaseMeasureMismatch("walks are symmetric for different base measures")
    kernel = w1.kernel @ w2.kernel
    return _assemble(w1.rel, kernel, w1.base_mass, w1.base, w1.base_scale,
                     declared_eta=0.0)


def power(walk: RandomWalk, n: int) -> RandomWalk:
    """n-fold convolution of a walk with itself (n >= 1)."""
    if n < 1:
        raise ValidationError("convolution power requires n >= 1")
    out = walk
    for _ in range(n - 1):
        out = convolve(out, walk)
    return out


def with_declared_eta(walk: RandomWalk, declared_eta: float) -> RandomWalk:
    return replace(walk, declared_eta=float(declared_eta),
                   bounded=bool(walk.eta >= declared_eta))


def cayley_action_walk(n: int, generators, probs) -> tuple[FiniteRelation, RandomWalk]:
    """Walk on ``0..n-1`` generated by permutations with given probabilities.

    The relation's classes are the orbits of the generated group; masses are
    uniform, so the walk is in detailed balance for the uniform measure as
    long as the generator multiset is symmetric (each non-involution listed
    with its inverse at the same probability).
    """
    perms = []
    for gi, g in enumerate(generators):
        img = [int(v) for v in g]
        if sorted(img) != list(range(n)):
            raise ValidationError(f"generator {gi} is not a permutation of 0..{n - 1}")
        perms.append(tuple(img))
    probs = [float(p) for p in probs]
    if len(probs) != len(perms):
        raise ValidationError("generators and probs must have the same length")
    if any(p <= 0 for p in probs):
        raise ProbSumError("all generator probabilities must be > 0")
    total = sum(probs)
    if abs(total - 1.0) > 1e-12:
        raise ProbSumError(f"generator probabilities sum to {total!r}, expected 1")

    weight: dict[tuple[int, ...], float] = {}
    for g, p in zip(perms, probs):
        weight[g] = weight.get(g, 0.0) + p
    for g, p in weight.items():
        inv = tuple(np.argsort(g))
        if abs(weight.get(inv, 0.0) - p) > 1e-12:
            raise AsymmetricGeneratorSet(
                "each generator must be an involution or listed with its inverse "
                "at the same probability"
            )

    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    kernel = np.zeros((n, n), dtype=float)
    for g, p in zip(perms, probs):
        for x in range(n):
            kernel[x, g[x]] += p
            ra, rb = find(x), find(g[x])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    labels = [find(x) for x in range(n)]
    rel = build_relation(np.full(n, 1.0 / n), labels)
    walk = _assemble(rel, kernel, rel.mass, base="mu", base_scale=1.0)
    return rel, walk


def support_components(walk: RandomWalk) -> np.ndarray:
    """Component index per point of the support graph (diagonal ignored)."""
    n = walk.n_points
    support = walk.support.copy()
    np.fill_diagonal(support, False)
    comp = np.full(n, -1, dtype=np.int64)
    cid = 0
    for start in range(n):
        if comp[start] >= 0:
            continue
        comp[start] = cid
        stack = [start]
        while stack:
            x = stack.pop()
            for y in np.flatnonzero(support[x]):
                if comp[y] < 0:
                    comp[y] = cid
                    stack.append(int(y))
        cid += 1
    return comp
