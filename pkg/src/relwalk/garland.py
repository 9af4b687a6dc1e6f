"""Two-dimensional complexes, vertex links, and the weighted link criterion.

The criterion compares the smallest link gap against half the cubed edge
mass-ratio bound.  All quantities live on a finite complex, so the verdict
states that the criterion inequality holds on this model; it is evidence,
not a proof about any infinite object.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConsistencyError,
    DegenerateTriangle,
    DisconnectedLink,
    DuplicateTriangle,
    EmptyLink,
    IsolatedVertex,
    SupportViolation,
    ValidationError,
)
from .relation import FiniteRelation, build_relation
from .spectral import eigensystem, energy, energy_n, simple_diffusion, spectrum
from .walks import RandomWalk, _assemble

IDENTITY_TOL = 1e-12
STRICT_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class Complex2:
    """Vertex masses plus triangles; edges and counts are derived.

    Classes of the underlying relation are the connected components of the
    1-skeleton.  ``tau_edge[i, j]`` counts triangles containing edge
    ``{i, j}`` and ``tau_vertex[i]`` counts triangles containing vertex ``i``.
    """

    rel: FiniteRelation
    triangles: tuple[tuple[int, int, int], ...]
    edges: tuple[tuple[int, int], ...]
    tau_edge: np.ndarray     # (N, N) int, symmetric
    tau_vertex: np.ndarray   # (N,) int
    max_degree: int
    degree_bound: int | None

    @property
    def n_vertices(self) -> int:
        return self.rel.n_points

    def neighbors(self, x: int) -> np.ndarray:
        return np.flatnonzero(self.tau_edge[x])


def build_complex(masses, triangles, degree_bound: int | None = None) -> Complex2:
    """Validate triangles and derive the edge structure and counts."""
    mass = np.asarray([float(m) for m in masses], dtype=float)
    n = mass.size
    canon: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int, int]] = set()
    for t in triangles:
        tri = tuple(int(v) for v in t)
        if len(tri) != 3:
            raise ValidationError(f"triangle {tri} does not have 3 vertices")
        if len(set(tri)) != 3:
            raise DegenerateTriangle(f"triangle {tri} repeats a vertex")
        if any(v < 0 or v >= n for v in tri):
            raise ValidationError(f"triangle {tri} is out of range for {n} vertices")
        key = tuple(sorted(tri))
        if key in seen:
            raise DuplicateTriangle(f"triangle {key} listed twice")
        seen.add(key)
        canon.append(key)
    canon.sort()

    tau_edge = np.zeros((n, n), dtype=np.int64)
    tau_vertex = np.zeros(n, dtype=np.int64)
    for a, b, c in canon:
        tau_edge[a, b] += 1
        tau_edge[b, a] += 1
        tau_edge[a, c] += 1
        tau_edge[c, a] += 1
        tau_edge[b, c] += 1
        tau_edge[c, b] += 1
        tau_vertex[a] += 1
        tau_vertex[b] += 1
        tau_vertex[c] += 1

    # classes = connected components of the 1-skeleton
    labels = _components(tau_edge > 0)
    rel = build_relation(mass, labels)

    edges = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(tau_edge))))
    degrees = (tau_edge > 0).sum(axis=1)
    return Complex2(
        rel=rel,
        triangles=tuple(canon),
        edges=edges,
        tau_edge=tau_edge,
        tau_vertex=tau_vertex,
        max_degree=int(degrees.max()) if n else 0,
        degree_bound=degree_bound,
    )


def _components(adj: np.ndarray) -> list[int]:
    n = adj.shape[0]
    comp = [-1] * n
    cid = 0
    for start in range(n):
        if comp[start] >= 0:
            continue
        comp[start] = cid
        stack = [start]
        while stack:
            x = stack.pop()
            for y in np.flatnonzero(adj[x]):
                if comp[y] < 0:
                    comp[y] = cid
                    stack.append(int(y))
        cid += 1
    return comp


# ---------------------------------------------------------------------------
# links
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinkGraph:
    """Graph of the edges and triangles at a vertex.

    Vertices are the neighbors of the center; each triangle through the
    center contributes one edge.  The valence of a link vertex ``y`` equals
    the number of triangles on the edge ``{center, y}`` and the number of
    link edges equals the triangle count of the center.
    """

    center: int
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    valence: tuple[int, ...]          # aligned with ``vertices``
    total: int                        # triangles at the center
    stationary: tuple[float, ...]     # valence / (2 * total)


def link(cx: Complex2, x: int) -> LinkGraph:
    if cx.tau_vertex[x] == 0:
        raise EmptyLink(f"vertex {x} lies in no triangle")
    verts = tuple(int(v) for v in cx.neighbors(x))
    index = {v: i for i, v in enumerate(verts)}
    edges = []
    for a, b, c in cx.triangles:
        if x == a:
            edges.append((min(b, c), max(b, c)))
        elif x == b:
            edges.append((min(a, c), max(a, c)))
        elif x == c:
            edges.append((min(a, b), max(a, b)))
    edges.sort()
    valence = [0] * len(verts)
    for u, v in edges:
        valence[index[u]] += 1
        valence[index[v]] += 1
    total = int(cx.tau_vertex[x])
    if len(edges) != total or any(
        valence[index[v]] != cx.tau_edge[x, v] for v in verts
    ):
        raise ConsistencyError(f"link bookkeeping failed at vertex {x}")
    stationary = tuple(val / (2.0 * total) for val in valence)
    return LinkGraph(center=x, vertices=verts, edges=tuple(edges),
                     valence=tuple(valence), total=total, stationary=stationary)


def link_lambda1(lk: LinkGraph, tol: float = 1e-9) -> float:
    """Smallest nonzero eigenvalue of the normalized link Laplacian."""
    m = len(lk.vertices)
    index = {v: i for i, v in enumerate(lk.vertices)}
    adj = np.zeros((m, m), dtype=float)
    for u, v in lk.edges:
        adj[index[u], index[v]] = 1.0
        adj[index[v], index[u]] = 1.0
    if not _connected_dense(adj):
        raise DisconnectedLink(
            f"link at vertex {lk.center} is disconnected", vertex=lk.center
        )
    w = np.asarray(lk.valence, dtype=float)
    s = adj / np.sqrt(np.outer(w, w))
    vals = np.linalg.eigvalsh(np.eye(m) - s)
    positive = vals[vals > tol]
    if positive.size == 0:
        raise DisconnectedLink(
            f"link at vertex {lk.center} has no spectral gap", vertex=lk.center
        )
    return float(positive.min())


def _connected_dense(adj: np.ndarray) -> bool:
    m = adj.shape[0]
    if m == 0:
        return False
    seen = np.zeros(m, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        x = stack.pop()
        for y in np.flatnonzero(adj[x]):
            if not seen[y]:
                seen[y] = True
                stack.append(int(y))
    return bool(seen.all())


def delta_mu_bound(cx: Complex2) -> float:
    """Largest mass ratio across any edge (at least 1)."""
    bound = 1.0
    for i, j in cx.edges:
        r = float(cx.rel.mass[i] / cx.rel.mass[j])
        bound = max(bound, r, 1.0 / r)
    return bound


# ---------------------------------------------------------------------------
# triangle walks
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TriangleWalks:
    """One-step edge walk and the link-averaged two-step walk.

    Both are reversible for the same reweighted vertex measure; with uniform
    masses ``link_walk`` coincides with the two-step convolution of
    ``edge_walk``.
    """

    edge_walk: RandomWalk
    link_walk: RandomWalk
    tilde_mass: np.ndarray
    tilde_scale: float


def triangle_walks(cx: Complex2) -> TriangleWalks:
    n = cx.n_vertices
    if np.any(cx.tau_vertex == 0):
        lonely = int(np.argmin(cx.tau_vertex))
        raise IsolatedVertex(f"vertex {lonely} lies in no triangle")

    mass = cx.rel.mass
    t_edge = np.zeros((n, n), dtype=float)     # apex-mass-weighted triangle counts per ordered edge
    for a, b, c in cx.triangles:
        t_edge[b, c] += mass[a] / mass[b]
        t_edge[c, b] += mass[a] / mass[c]
        t_edge[a, c] += mass[b] / mass[a]
        t_edge[c, a] += mass[b] / mass[c]
        t_edge[a, b] += mass[c] / mass[a]
        t_edge[b, a] += mass[c] / mass[b]

    # per-vertex weight: half the ratio-weighted triangle count over incident edges
    t_vertex = np.zeros(n, dtype=float)
    for y in range(n):
        for x in cx.neighbors(y):
            t_vertex[y] += (mass[x] / mass[y]) * cx.tau_edge[x, y]
    t_vertex *= 0.5

    rows = t_edge.sum(axis=1)
    if np.any(np.abs(rows - 2.0 * t_vertex) > IDENTITY_TOL * np.maximum(rows, 1.0)):
        raise ConsistencyError("edge-count identity sum_z t(y,z) = 2 t(y) failed")
    flux = mass[:, None] * t_edge
    if np.abs(flux - flux.T).max() > IDENTITY_TOL * max(flux.max(), 1.0):
        raise ConsistencyError("mass symmetry of weighted edge counts failed")

    # link-averaged two-step counts, diagonal included
    t_two = np.zeros((n, n), dtype=float)
    for x in range(n):
        nb = cx.neighbors(x)
        val = cx.tau_edge[x, nb].astype(float)
        contrib = np.outer(val, val) / (2.0 * cx.tau_vertex[x])
        ratios = mass[x] / mass[nb]
        t_two[np.ix_(nb, nb)] += contrib * ratios[:, None]
    rows_two = t_two.sum(axis=1)
    if np.any(np.abs(rows_two - 2.0 * t_vertex) > IDENTITY_TOL * np.maximum(rows_two, 1.0)):
        raise ConsistencyError("two-step count identity failed")

    nu = t_edge / (2.0 * t_vertex[:, None])
    nu_two = t_two / (2.0 * t_vertex[:, None])
    tilde = 2.0 * t_vertex * mass
    scale = float(tilde.sum())
    base = tilde / scale

    edge_walk = _assemble(cx.rel, nu, base, base="tilde", base_scale=scale)
    link_walk = _assemble(cx.rel, nu_two, base, base="tilde", base_scale=scale)
    return TriangleWalks(edge_walk=edge_walk, link_walk=link_walk,
                         tilde_mass=base, tilde_scale=scale)


@dataclass(frozen=True, eq=False)
class DominationReport:
    max_ratio: float
    bound: float       # cube of the edge mass-ratio bound
    residual: float    # max_ratio - bound (nonpositive up to roundoff)


def step2_domination(cx: Complex2) -> DominationReport:
    """Entrywise comparison of the two-step kernel against the link walk."""
    tw = triangle_walks(cx)
    two_step = tw.edge_walk.kernel @ tw.edge_walk.kernel
    averaged = tw.link_walk.kernel
    if np.any((two_step > 0) & (averaged == 0)):
        xs, ys = np.nonzero((two_step > 0) & (averaged == 0))
        raise SupportViolation(
            f"two-step kernel positive at ({int(xs[0])}, {int(ys[0])}) where the "
            "link walk vanishes"
        )
    mask = averaged > 0
    max_ratio = float((two_step[mask] / averaged[mask]).max())
    bound = delta_mu_bound(cx) ** 3
    if max_ratio > bound + 1e-12:
        raise ConsistencyError(
            f"domination ratio {max_ratio!r} exceeds cubed bound {bound!r}"
        )
    return DominationReport(max_ratio=max_ratio, bound=bound,
                            residual=max_ratio - bound)


# ---------------------------------------------------------------------------
# verdict
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinkEntry:
    vertex: int
    lambda1: float | None
    connected: bool
    empty: bool
    link_size: int


@dataclass(frozen=True, eq=False)
class ZukReport:
    per_vertex: tuple[LinkEntry, ...]
    min_lambda1: float | None
    connectivity_failures: tuple[int, ...]
    delta_mu: float
    threshold: float              # delta_mu^3 / 2
    verdict: str                  # "certified" | "refuted-strict" | "inapplicable"
    c2_bound: float | None        # 1 + kappa of the edge walk's scalar diffusion
    domination_max_ratio: float | None
    domination_residual: float | None
    poincare_factor: float | None
    poincare_worst_slack: float | None
    n_fields: int
    seed: int
    tol: float
    note: str

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"


_NOTE = ("verdict states that the criterion inequality holds on this finite "
         "model; it does not prove any property of an infinite object")


def zuk_report(cx: Complex2, tol: float = 1e-9, n_fields: int = 50,
               seed: int = 0, workers: int = 1) -> ZukReport:
    """Per-vertex link gaps, the mass-ratio threshold, and the verdict."""
    n = cx.n_vertices

    def solve(x: int) -> LinkEntry:
        if cx.tau_vertex[x] == 0:
            return LinkEntry(vertex=x, lambda1=None, connected=False, empty=True,
                             link_size=0)
        lk = link(cx, x)
        try:
            lam1 = link_lambda1(lk, tol)
        except DisconnectedLink:
            return LinkEntry(vertex=x, lambda1=None, connected=False, empty=False,
                             link_size=len(lk.vertices))
        return LinkEntry(vertex=x, lambda1=lam1, connected=True, empty=False,
                         link_size=len(lk.vertices))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = tuple(pool.map(solve, range(n)))
    else:
        entries = tuple(solve(x) for x in range(n))

    failures = tuple(e.vertex for e in entries if not e.connected)
    gaps = [e.lambda1 for e in entries if e.lambda1 is not None]
    min_lambda1 = min(gaps) if gaps else None
    delta = delta_mu_bound(cx)
    threshold = delta ** 3 / 2.0

    if failures or not gaps:
        verdict = "inapplicable"
    elif min_lambda1 - threshold > STRICT_MARGIN:
        verdict = "certified"
    else:
        verdict = "refuted-strict"

    c2_bound = None
    dom_ratio = dom_residual = None
    factor = worst_slack = None
    if not failures and gaps:
        tw = triangle_walks(cx)
        dom = step2_domination(cx)
        dom_ratio, dom_residual = dom.max_ratio, dom.residual
        op = simple_diffusion(tw.edge_walk)
        spec = spectrum(op, tol=tol)
        if spec.kappa is not None:
            c2_bound = 1.0 + spec.kappa
        lam = min_lambda1
        if lam and lam > 0:
            factor = delta ** 3 / lam
            worst_slack = _poincare_slack(op, factor, n_fields, seed, tol)

    return ZukReport(
        per_vertex=entries,
        min_lambda1=min_lambda1,
        connectivity_failures=failures,
        delta_mu=delta,
        threshold=threshold,
        verdict=verdict,
        c2_bound=c2_bound,
        domination_max_ratio=dom_ratio,
        domination_residual=dom_residual,
        poincare_factor=factor,
        poincare_worst_slack=worst_slack,
        n_fields=n_fields,
        seed=seed,
        tol=tol,
        note=_NOTE,
    )


def _poincare_slack(op, factor: float, n_fields: int, seed: int, tol: float) -> float:
    """Worst slack of the two-step comparison over sampled and spectral fields."""
    from .spectral import Field

    rng = np.random.default_rng(seed)
    n = op.size
    worst = -np.inf
    probes = [rng.standard_normal(n) for _ in range(n_fields)]
    system = eigensystem(op, tol)
    for idx in np.flatnonzero(system.values <= 1.0 - tol):
        probes.append(np.real(system.vectors[:, idx]))
    for v in probes:
        xi = Field(values=v.astype(complex)[:, None])
        slack = energy_n(op, xi, 2) - factor * energy(op, xi)
        worst = max(worst, slack)
    return float(worst)
