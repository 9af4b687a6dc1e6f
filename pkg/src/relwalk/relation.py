"""Finite partitioned probability spaces and graph structures on their classes.

A :class:`FiniteRelation` is a probability vector on ``0..N-1`` together with
a partition into classes.  The mass-ratio cocycle ``delta(x, y) =
mass(x) / mass(y)`` is derived, never stored, so the chain rule holds by
construction.  A :class:`Graphing` is a set of unordered edges meant to join
points within classes; :func:`validate_graphing` reports (rather than
raises) structural problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyClass,
    MassSumMismatch,
    NonPositiveMass,
    NotEquivalent,
    ValidationError,
)

MASS_SUM_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteRelation:
    """Point masses plus a dense class assignment.

    Instances are immutable; all derived quantities are pure functions of
    the two arrays.
    """

    mass: np.ndarray      # shape (N,), strictly positive, sums to 1
    class_of: np.ndarray  # shape (N,), values in 0..n_classes-1
    n_classes: int

    @property
    def n_points(self) -> int:
        return int(self.mass.shape[0])

    def points_in(self, class_id: int) -> np.ndarray:
        return np.flatnonzero(self.class_of == class_id)

    def same_class(self, x: int, y: int) -> bool:
        return bool(self.class_of[x] == self.class_of[y])

    def cocycle(self, x: int, y: int) -> float:
        return cocycle(self, x, y)


def build_relation(masses, class_of) -> FiniteRelation:
    """Build a relation from masses and a class assignment.

    ``class_of`` is either one label per point, or a partition given as a
    list of point lists.  Labels are normalized to dense integers in order
    of first appearance.
    """
    mass = np.asarray([float(m) for m in masses], dtype=float)
    if mass.ndim != 1 or mass.size == 0:
        raise MassSumMismatch("masses must be a nonempty 1-d sequence")
    if np.any(mass <= 0) or not np.all(np.isfinite(mass)):
        bad = int(np.argmin(mass))
        raise NonPositiveMass(f"mass of point {bad} is {mass[bad]!r}; all masses must be > 0")
    total = float(mass.sum())
    if abs(total - 1.0) > MASS_SUM_TOL:
        raise MassSumMismatch(f"masses sum to {total!r}, expected 1 within {MASS_SUM_TOL}")

    n = mass.size
    labels = _expand_partition(class_of, n)
    ids: dict[object, int] = {}
    dense = np.empty(n, dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab not in ids:
            ids[lab] = len(ids)
        dense[i] = ids[lab]
    return FiniteRelation(mass=_readonly(mass), class_of=_readonly(dense), n_classes=len(ids))


def _expand_partition(class_of, n: int) -> list:
    """Accept per-point labels or a list-of-lists partition."""
    seq = list(class_of)
    if seq and all(isinstance(b, (list, tuple, np.ndarray)) for b in seq):
        labels: list = [None] * n
        for cid, block in enumerate(seq):
            if len(block) == 0:
                raise EmptyClass(f"class {cid} is empty")
            for p in block:
                p = int(p)
                if p < 0 or p >= n:
                    raise ValidationError(f"class {cid} mentions point {p}, out of range 0..{n - 1}")
                if labels[p] is not None:
                    raise ValidationError(f"point {p} assigned to two classes")
                labels[p] = cid
        missing = [i for i, lab in enumerate(labels) if lab is None]
        if missing:
            raise ValidationError(f"points {missing} not assigned to any class")
        return labels
    if len(seq) != n:
        raise ValidationError(f"class assignment has length {len(seq)}, expected {n}")
    return seq


def cocycle(rel: FiniteRelation, x: int, y: int) -> float:
    """Mass-ratio cocycle ``mass(x) / mass(y)``; requires ``x ~ y``."""
    if not rel.same_class(x, y):
        raise NotEquivalent(f"points {x} and {y} lie in different classes")
    return float(rel.mass[x] / rel.mass[y])


@dataclass(frozen=True, eq=False)
class Graphing:
    """Symmetric edge set, stored as sorted unordered pairs.

    ``degree_bound`` is the declared uniform bound on vertex degrees; it is
    data, checked by :func:`validate_graphing`, not enforced here.
    """

    edges: tuple[tuple[int, int], ...]
    degree_bound: int | None = None

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incident_counts(self, n_points: int) -> np.ndarray:
        deg = np.zeros(n_points, dtype=np.int64)
        for x, y in self.edges:
            deg[x] += 1
            deg[y] += 1
        return deg


def build_graphing(edges, degree_bound: int | None = None) -> Graphing:
    """Canonicalize an edge list: unordered pairs, no self-loops, no duplicates."""
    canon = set()
    for e in edges:
        x, y = int(e[0]), int(e[1])
        if x == y:
            raise ValidationError(f"self-loop edge ({x}, {y}) is not allowed in a graphing")
        if x < 0 or y < 0:
            raise ValidationError(f"edge ({x}, {y}) has a negative endpoint")
        canon.add((min(x, y), max(x, y)))
    return Graphing(edges=tuple(sorted(canon)), degree_bound=degree_bound)


@dataclass(frozen=True, eq=False)
class GraphingReport:
    per_class_connected: tuple[bool, ...]
    max_degree: int
    degree_bound: int | None
    degree_bound_ok: bool | None
    cross_class_violations: tuple[tuple[int, int], ...]
    out_of_range: tuple[tuple[int, int], ...]
    ok: bool


def validate_graphing(rel: FiniteRelation, graphing: Graphing) -> GraphingReport:
    """Report per-class connectivity, max degree and cross-class edges."""
    n = rel.n_points
    cross = []
    out = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for x, y in graphing.edges:
        if x >= n or y >= n:
            out.append((x, y))
            continue
        if rel.class_of[x] != rel.class_of[y]:
            cross.append((x, y))
            continue
        adj[x].append(y)
        adj[y].append(x)

    connected = []
    for c in range(rel.n_classes):
        pts = rel.points_in(c)
        connected.append(_is_connected(pts, adj))

    deg = graphing.incident_counts(max(n, 1 + max((max(e) for e in graphing.edges), default=0)))
    max_degree = int(deg.max()) if deg.size else 0
    bound_ok = None if graphing.degree_bound is None else bool(max_degree <= graphing.degree_bound)
    ok = not cross and not out and (bound_ok is not False)
    return GraphingReport(
        per_class_connected=tuple(connected),
        max_degree=max_degree,
        degree_bound=graphing.degree_bound,
        degree_bound_ok=bound_ok,
        cross_class_violations=tuple(cross),
        out_of_range=tuple(out),
        ok=ok,
    )


def _is_connected(points: np.ndarray, adj: list[list[int]]) -> bool:
    if points.size <= 1:
        return True
    wanted = set(int(p) for p in points)
    seen = {int(points[0])}
    stack = [int(points[0])]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y in wanted and y not in seen:
                seen.add(y)
                stack.append(y)
    return seen == wanted
