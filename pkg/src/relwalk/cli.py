"""Command-line front-end: parse documents, dispatch computations, emit JSON.

Document schemas are versioned in ``docs/formats.md``.  All randomness flows
from the single ``--seed`` flag, reports never contain timestamps or thread
counts, and floats are emitted with full round-trip precision, so identical
inputs produce byte-identical reports regardless of worker-pool size.

Exit codes: 0 success, 2 validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import ergodic, garland, spectral, walks
from .errors import NumericalError, ParseError, ValidationError
from .relation import FiniteRelation, Graphing, build_graphing, build_relation
from .spectral import Field

DEFAULT_TOL = 1e-9


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class PermutationDoc:
    n: int
    generators: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]


def parse_document(source, relation: FiniteRelation | None = None):
    """Parse a JSON document into a typed value.

    ``source`` is a path or raw JSON text.  Walk and representation
    documents need the ambient relation to resolve against.
    """
    text = _read_source(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}"
        ) from exc
    if not isinstance(doc, dict):
        raise ParseError("document root must be a JSON object")

    if "masses" in doc and "classes" in doc:
        return _parse_relation(doc)
    if "masses" in doc and "triangles" in doc:
        return _parse_complex(doc)
    if "entries" in doc and "base" in doc:
        return _parse_walk(doc, _need_relation(relation, "walk"))
    if "mode" in doc and "blocks" in doc:
        return _parse_representation(doc, _need_relation(relation, "representation"))
    if "dim" in doc and "values" in doc:
        return _parse_field(doc)
    if "edges" in doc:
        return _parse_graphing(doc)
    if "generators" in doc and "probs" in doc:
        return _parse_perms(doc)
    raise ParseError("unrecognized document: no known key combination found")


def _read_source(source) -> str:
    if isinstance(source, Path):
        return source.read_text()
    if isinstance(source, str):
        stripped = source.lstrip()
        if stripped.startswith("{") or stripped.startswith("["):
            return source
        return Path(source).read_text()
    raise ParseError(f"cannot read document from {type(source).__name__}")


def _need_relation(relation, kind):
    if relation is None:
        raise ParseError(f"a {kind} document needs an ambient relation")
    return relation


def _number(value, pointer: str) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError as exc:
            raise ParseError(f"{value!r} is not a decimal number", pointer) from exc
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ParseError(f"expected a number, got {type(value).__name__}", pointer)


def _complex_entry(value, pointer: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(_number(value[0], pointer), _number(value[1], pointer))
    raise ParseError("expected a number or an [re, im] pair", pointer)


def _parse_relation(doc) -> FiniteRelation:
    masses = [_number(v, f"/masses/{i}") for i, v in enumerate(doc["masses"])]
    classes = doc["classes"]
    if len(classes) != len(masses):
        raise ParseError("masses and classes must be parallel arrays", "/classes")
    return build_relation(masses, classes)


def _parse_graphing(doc) -> Graphing:
    edges = []
    for i, e in enumerate(doc["edges"]):
        if not isinstance(e, list) or len(e) != 2:
            raise ParseError("edge must be a pair", f"/edges/{i}")
        edges.append((int(e[0]), int(e[1])))
    bound = doc.get("degree_bound")
    return build_graphing(edges, None if bound is None else int(bound))


def _parse_walk(doc, relation) -> walks.RandomWalk:
    entries = []
    for i, row in enumerate(doc["entries"]):
        if not isinstance(row, list) or len(row) != 3:
            raise ParseError("walk entry must be [x, y, p]", f"/entries/{i}")
        entries.append((int(row[0]), int(row[1]), _number(row[2], f"/entries/{i}/2")))
    base = doc["base"]
    if base not in ("mu", "tilde"):
        raise ParseError(f"base must be 'mu' or 'tilde', got {base!r}", "/base")
    return walks.custom_walk(relation, entries, base=base,
                             declared_eta=float(doc.get("eta", 0.0)))


def _parse_complex(doc) -> garland.Complex2:
    masses = [_number(v, f"/masses/{i}") for i, v in enumerate(doc["masses"])]
    triangles = []
    for i, t in enumerate(doc["triangles"]):
        if not isinstance(t, list) or len(t) != 3:
            raise ParseError("triangle must be a vertex triple", f"/triangles/{i}")
        triangles.append([int(v) for v in t])
    bound = doc.get("degree_bound")
    return garland.build_complex(masses, triangles,
                                 None if bound is None else int(bound))


def _parse_matrix(raw, dim: int, pointer: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != dim:
        raise ParseError(f"matrix must have {dim} rows", pointer)
    out = np.empty((dim, dim), dtype=complex)
    for r, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"matrix row must have {dim} entries", f"{pointer}/{r}")
        for c, entry in enumerate(row):
            out[r, c] = _complex_entry(entry, f"{pointer}/{r}/{c}")
    return out


def _parse_representation(doc, relation) -> spectral.Representation:
    dim = int(doc.get("dim", 0))
    if dim < 1:
        raise ParseError("representation dim must be a positive integer", "/dim")
    mode = doc["mode"]
    tol = float(doc.get("tol", 1e-8))
    if mode == "gauge":
        blocks = {}
        for i, pair in enumerate(doc["blocks"]):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError("block must be [point, matrix]", f"/blocks/{i}")
            blocks[int(pair[0])] = _parse_matrix(pair[1], dim, f"/blocks/{i}/matrix")
        missing = [x for x in range(relation.n_points) if x not in blocks]
        if missing:
            raise ParseError(f"gauge blocks missing for points {missing}", "/blocks")
        return spectral.gauge_representation(
            relation, dim, [blocks[x] for x in range(relation.n_points)]
        )
    if mode == "raw":
        blocks = {}
        edges = []
        for i, pair in enumerate(doc["blocks"]):
            if (not isinstance(pair, list) or len(pair) != 2
                    or not isinstance(pair[0], list) or len(pair[0]) != 2):
                raise ParseError("block must be [[x, y], matrix]", f"/blocks/{i}")
            x, y = int(pair[0][0]), int(pair[0][1])
            blocks[(x, y)] = _parse_matrix(pair[1], dim, f"/blocks/{i}/matrix")
            edges.append((x, y))
        graphing = build_graphing(edges)
        return spectral.raw_representation(relation, graphing, blocks, tol=tol)
    raise ParseError(f"mode must be 'gauge' or 'raw', got {mode!r}", "/mode")


def _parse_field(doc) -> Field:
    dim = int(doc.get("dim", 0))
    if dim < 1:
        raise ParseError("field dim must be a positive integer", "/dim")
    rows = doc["values"]
    out = np.empty((len(rows), dim), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"value row must have {dim} entries", f"/values/{i}")
        for j, entry in enumerate(row):
            out[i, j] = _complex_entry(entry, f"/values/{i}/{j}")
    return Field(values=out)


def _parse_perms(doc) -> PermutationDoc:
    n = int(doc.get("n", 0))
    if n < 1:
        raise ParseError("permutation document needs a positive n", "/n")
    gens = []
    for i, g in enumerate(doc["generators"]):
        if not isinstance(g, list) or len(g) != n:
            raise ParseError(f"generator must list {n} images", f"/generators/{i}")
        gens.append(tuple(int(v) for v in g))
    probs = tuple(_number(p, f"/probs/{i}") for i, p in enumerate(doc["probs"]))
    return PermutationDoc(n=n, generators=tuple(gens), probs=probs)


# -- serialization ------------------------------------------------------------

def relation_to_document(rel: FiniteRelation) -> dict:
    return {"masses": [float(m) for m in rel.mass],
            "classes": [int(c) for c in rel.class_of]}


def walk_to_document(walk: walks.RandomWalk) -> dict:
    xs, ys = np.nonzero(walk.kernel)
    entries = [[int(x), int(y), float(walk.kernel[x, y])] for x, y in zip(xs, ys)]
    return {"entries": entries, "base": walk.base}


def complex_to_document(cx: garland.Complex2) -> dict:
    return {"masses": [float(m) for m in cx.rel.mass],
            "triangles": [list(t) for t in cx.triangles]}


def field_to_document(field: Field) -> dict:
    return {"dim": field.dim,
            "values": [[[float(z.real), float(z.imag)] for z in row]
                       for row in field.values]}


def graphing_to_document(graphing: Graphing) -> dict:
    doc = {"edges": [list(e) for e in graphing.edges]}
    if graphing.degree_bound is not None:
        doc["degree_bound"] = graphing.degree_bound
    return doc


def serialize(obj) -> str:
    """JSON text for a relation, walk, complex, field or graphing."""
    for kind, writer in (
        (FiniteRelation, relation_to_document),
        (walks.RandomWalk, walk_to_document),
        (garland.Complex2, complex_to_document),
        (Field, field_to_document),
        (Graphing, graphing_to_document),
    ):
        if isinstance(obj, kind):
            return _dumps(writer(obj))
    raise ValidationError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# JSON emission
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            key = "lambda" if f.name == "lam" else f.name
            out[key] = _jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------

def _load_relation(args) -> FiniteRelation:
    if not getattr(args, "relation", None):
        raise ParseError("this command needs --relation")
    value = parse_document(Path(args.relation))
    if not isinstance(value, FiniteRelation):
        raise ParseError(f"{args.relation} is not a relation document")
    return value


def _load_walk(args, rel: FiniteRelation) -> walks.RandomWalk:
    if getattr(args, "walk", None):
        value = parse_document(Path(args.walk), relation=rel)
        if not isinstance(value, walks.RandomWalk):
            raise ParseError(f"{args.walk} is not a walk document")
        return value
    if getattr(args, "graphing", None):
        graphing = parse_document(Path(args.graphing))
        if not isinstance(graphing, Graphing):
            raise ParseError(f"{args.graphing} is not a graphing document")
        return walks.regular_walk(rel, graphing)
    raise ParseError("this command needs --walk or --graphing")


def _load_rep(args, rel: FiniteRelation):
    if getattr(args, "rep", None):
        value = parse_document(Path(args.rep), relation=rel)
        if not isinstance(value, spectral.Representation):
            raise ParseError(f"{args.rep} is not a representation document")
        return value
    return spectral.trivial_representation(rel)


def _walk_info(walk: walks.RandomWalk) -> dict:
    return {
        "base": walk.base,
        "base_scale": walk.base_scale,
        "eta": walk.eta,
        "bounded": walk.bounded,
        "detailed_balance_residual": walk.db_residual,
    }


def cmd_validate(args) -> tuple[int, dict]:
    checks = []
    rel = None

    def run(name, fn):
        try:
            info = fn()
        except (ValidationError, NumericalError) as exc:
            checks.append({"name": name, "ok": False,
                           "error": {"type": type(exc).__name__, "message": str(exc)}})
            return None
        checks.append({"name": name, "ok": True, "info": info})
        return info

    if args.relation:
        def load_rel():
            nonlocal rel
            rel = _load_relation(args)
            return {"n_points": rel.n_points, "n_classes": rel.n_classes}
        run("relation", load_rel)
    if args.graphing:
        def load_graphing():
            graphing = parse_document(Path(args.graphing))
            if rel is None:
                return {"n_edges": graphing.n_edges}
            from .relation import validate_graphing
            rep = validate_graphing(rel, graphing)
            if not rep.ok:
                raise ValidationError(
                    f"graphing violations: cross-class {list(rep.cross_class_violations)}, "
                    f"out of range {list(rep.out_of_range)}"
                )
            return {"n_edges": graphing.n_edges, "max_degree": rep.max_degree,
                    "per_class_connected": list(rep.per_class_connected)}
        run("graphing", load_graphing)
    if args.walk:
        run("walk", lambda: _walk_info(_load_walk(args, _need_relation(rel, "walk"))))
    if getattr(args, "complex", None):
        def load_complex():
            cx = parse_document(Path(getattr(args, "complex")))
            if not isinstance(cx, garland.Complex2):
                raise ParseError(f"{getattr(args, 'complex')} is not a complex document")
            info = {"n_vertices": cx.n_vertices, "n_triangles": len(cx.triangles),
                    "n_edges": len(cx.edges), "max_degree": cx.max_degree}
            if np.all(cx.tau_vertex > 0):
                tw = garland.triangle_walks(cx)
                info["triangle_walk_db_residual"] = tw.edge_walk.db_residual
            else:
                info["isolated_vertices"] = [int(v) for v in
                                             np.flatnonzero(cx.tau_vertex == 0)]
            return info
        run("complex", load_complex)
    if args.rep:
        def load_rep():
            rep = _load_rep(args, _need_relation(rel, "representation"))
            return {"dim": rep.dim, "mode": rep.mode,
                    "cycle_residual": rep.cycle_residual}
        run("representation", load_rep)
    if args.field:
        def load_field():
            fld = parse_document(Path(args.field[0]))
            if rel is not None and fld.n_points != rel.n_points:
                raise ValidationError(
                    f"field has {fld.n_points} points, relation has {rel.n_points}"
                )
            return {"n_points": fld.n_points, "dim": fld.dim}
        run("field", load_field)

    if not checks:
        raise ParseError("nothing to validate: pass at least one input")
    ok = all(c["ok"] for c in checks)
    return (0 if ok else 2), {"ok": ok, "checks": checks}


def cmd_spectrum(args) -> tuple[int, dict]:
    rel = _load_relation(args)
    walk = _load_walk(args, rel)
    rep = _load_rep(args, rel)
    report = spectral.spectrum(spectral.diffusion(walk, rep), tol=args.tol)
    return 0, {"spectrum": report, "walk": _walk_info(walk),
               "representation": {"dim": rep.dim, "mode": rep.mode}}


def cmd_gap(args) -> tuple[int, dict]:
    rel = _load_relation(args)
    walk = _load_walk(args, rel)
    rep = _load_rep(args, rel)
    report = spectral.spectrum(spectral.diffusion(walk, rep), tol=args.tol)
    payload = {
        "kappa": report.kappa,
        "lambda": report.lam,
        "fixed_dim": report.fixed_dim,
        "degenerate": report.degenerate,
        "c_inf": report.c_inf,
        "eigenvalue_min": report.eigenvalues[0] if report.eigenvalues else None,
        "eigenvalue_max": report.eigenvalues[-1] if report.eigenvalues else None,
        "walk": _walk_info(walk),
    }
    if args.c2_family > 0:
        dims = tuple((i % 4) + 1 for i in range(args.c2_family))
        payload["c2"] = spectral.c2_criterion(rel, walk, gauge_dims=dims,
                                              seed=args.seed, workers=args.threads,
                                              tol=args.tol)
    return 0, payload


def cmd_poincare(args) -> tuple[int, dict]:
    rel = _load_relation(args)
    walk = _load_walk(args, rel)
    rep = _load_rep(args, rel)
    report = spectral.poincare_report(spectral.diffusion(walk, rep), args.n,
                                      tol=args.tol)
    return 0, {"poincare": report, "walk": _walk_info(walk)}


def cmd_dirichlet(args) -> tuple[int, dict]:
    rel = _load_relation(args)
    walk = _load_walk(args, rel)
    rep = _load_rep(args, rel)
    report = spectral.dirichlet_report(spectral.diffusion(walk, rep),
                                       n_samples=args.samples, seed=args.seed,
                                       tol=args.tol)
    return 0, {"dirichlet": report, "walk": _walk_info(walk)}


def cmd_energy(args) -> tuple[int, dict]:
    rel = _load_relation(args)
    walk = _load_walk(args, rel)
    rep = _load_rep(args, rel)
    field = parse_document(Path(args.field[0]))
    if not isinstance(field, Field):
        raise ParseError(f"{args.field[0]} is not a field document")
    op = spectral.diffusion(walk, rep)
    e = spectral.energy(op, field)
    g = spectral.gradient_energy(walk, rep, field)
    payload = {"energy": e, "gradient_energy": g, "difference": e - g,
               "norm_sq": spectral.weighted_norm_sq(op, field.values)}
    if args.n is not None:
        payload["n"] = args.n
        payload["energy_n"] = spectral.energy_n(op, field, args.n)
    return 0, payload


def cmd_zuk(args) -> tuple[int, dict]:
    cx = parse_document(Path(getattr(args, "complex")))
    if not isinstance(cx, garland.Complex2):
        raise ParseError(f"{getattr(args, 'complex')} is not a complex document")
    report = garland.zuk_report(cx, tol=args.tol, n_fields=args.fields,
                                seed=args.seed, workers=args.threads)
    return 0, {"zuk": report}


def cmd_folner(args) -> tuple[int, dict]:
    rel = _load_relation(args)
    walk = _load_walk(args, rel)
    report = ergodic.folner_search(walk, eps=args.eps, mass_cap=args.cap,
                                   tol=args.tol)
    return 0, {"folner": report, "walk": _walk_info(walk)}


def cmd_kesten(args) -> tuple[int, dict]:
    doc = parse_document(Path(args.perms))
    if not isinstance(doc, PermutationDoc):
        raise ParseError(f"{args.perms} is not a permutation document")
    rel, walk = walks.cayley_action_walk(doc.n, doc.generators, doc.probs)
    report = spectral.spectrum(spectral.simple_diffusion(walk), tol=args.tol)
    return 0, {
        "n": doc.n,
        "n_orbits": rel.n_classes,
        "eta": walk.eta,
        "kappa": report.kappa,
        "lambda": report.lam,
        "fixed_dim": report.fixed_dim,
        "degenerate": report.degenerate,
        "note": "finite actions exhibit, and never prove, spectral behavior "
                "of the infinite group",
    }


def cmd_concentrate(args) -> tuple[int, dict]:
    rel = _load_relation(args)
    fields = []
    for path in args.field or []:
        fld = parse_document(Path(path))
        if not isinstance(fld, Field):
            raise ParseError(f"{path} is not a field document")
        fields.append(fld)
    if not fields:
        raise ParseError("concentrate needs at least one --field")
    report = ergodic.concentration_report(fields, rel, eps=args.eps,
                                          n_samples=args.samples, seed=args.seed)
    return 0, {"concentration": report}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relwalk",
        description="spectral toolkit for reversible walks on finite "
                    "partitioned probability spaces",
    )
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for all randomized computations (default 0)")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="eigenvalue clustering tolerance (default 1e-9)")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("RELWALK_THREADS", "1")),
                        help="worker pool size (default $RELWALK_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(handler=fn)
        return p

    p = add("validate", cmd_validate, help="check documents and report violations")
    p.add_argument("--relation")
    p.add_argument("--graphing")
    p.add_argument("--walk")
    p.add_argument("--complex")
    p.add_argument("--rep")
    p.add_argument("--field", action="append")

    for name, fn, extra in (
        ("spectrum", cmd_spectrum, ()),
        ("gap", cmd_gap, ("c2",)),
        ("poincare", cmd_poincare, ("n",)),
        ("dirichlet", cmd_dirichlet, ("samples",)),
        ("energy", cmd_energy, ("field", "optn")),
    ):
        p = add(name, fn, help=f"{name} of a diffusion operator")
        p.add_argument("--relation", required=True)
        p.add_argument("--walk")
        p.add_argument("--graphing")
        p.add_argument("--rep")
        if "n" in extra:
            p.add_argument("--n", type=int, required=True)
        if "optn" in extra:
            p.add_argument("--n", type=int, default=None)
        if "samples" in extra:
            p.add_argument("--samples", type=int, default=100)
        if "field" in extra:
            p.add_argument("--field", action="append", required=True)
        if "c2" in extra:
            p.add_argument("--c2-family", type=int, default=0, dest="c2_family",
                           help="also run the representation-family c2 scan "
                                "with this many random gauge representations")

    p = add("zuk", cmd_zuk, help="link gaps and criterion verdict for a 2-complex")
    p.add_argument("--complex", required=True)
    p.add_argument("--fields", type=int, default=50,
                   help="random fields for the integrated comparison (default 50)")

    p = add("folner", cmd_folner, help="search for a small-boundary set")
    p.add_argument("--relation", required=True)
    p.add_argument("--walk")
    p.add_argument("--graphing")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--cap", type=float, default=1.0)

    p = add("kesten", cmd_kesten, help="gap of a permutation-action walk")
    p.add_argument("--perms", required=True)

    p = add("concentrate", cmd_concentrate, help="observable concentration report")
    p.add_argument("--relation", required=True)
    p.add_argument("--field", action="append")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--samples", type=int, default=50)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        code, payload = args.handler(args)
    except ValidationError as exc:
        _emit({"error": {"type": type(exc).__name__, "message": str(exc)}})
        return 2
    except NumericalError as exc:
        _emit({"error": {"type": type(exc).__name__, "message": str(exc)}})
        return 3
    report = {"command": args.command, "seed": args.seed,
              "tolerances": {"eig": args.tol}}
    report.update(payload)
    _emit(report)
    return code


def _emit(report: dict) -> None:
    sys.stdout.write(_dumps(report) + "\n")


if __name__ == "__main__":
    raise SystemExit(main())
