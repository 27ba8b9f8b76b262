"""Command-line entry point ``dyadic-haar``.

Every subcommand writes a JSON report (to ``--report`` or stdout) and exits
0 iff all hard checks pass, 1 if one fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import corpus, io
from .atoms import ENLARGEMENTS, atomic_decompose, structure_check, validate_atom
from .grid import GridError, build_adjacent_systems, build_grid, verify_grid, verify_sandwich
from .haar import analyze, build_basis, gram_matrix, synthesize, tail_inequality_holds, validate_basis
from .maximal import compare_maximal
from .product import (OMEGA_FAMILIES, CoefficientTensor, ProductGrid, bmodd_functional,
                      h1dd_norm, lifting, martingale_square_function, named_family, pairing,
                      product_analyze, s1_norm, square_function)
from .reports import Report, RunConfig, default_seed
from .space import PointMassMeasure, SpaceError, load_space
from .weights import intersection_report


class InputError(Exception):
    pass


# argument groups

def _common(p):
    p.add_argument("--seed", type=int, default=None, help="default: $DYADIC_SEED or 0")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--no-timing", action="store_true", help="omit the timing field")


def _space(p, suffix=""):
    p.add_argument(f"--space{suffix}", help="space file (JSON or CSV)")
    p.add_argument(f"--measure{suffix}", help="measure CSV id,mass")


def _grid_args(p, suffix=""):
    p.add_argument(f"--grid{suffix}", help="grid JSON; built on the fly when omitted")


def _build_args(p):
    p.add_argument("--delta", type=float, default=None, help="grid ratio (default 0.5)")
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--center", type=int, help="distinguished centre id")
    p.add_argument("--canonical", action="store_true",
                   help="use the centre lists stored in the space file")


def _product_args(p):
    _space(p, "1")
    _space(p, "2")
    _grid_args(p, "1")
    _grid_args(p, "2")
    _build_args(p)
    p.add_argument("--lattice", type=int, default=8,
                   help="binary-lattice size used for a factor given no space file")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dyadic-haar", description="Dyadic cubes, Haar bases and dyadic function spaces on finite spaces.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus", help="write a reference space and measure")
    _common(p)
    p.add_argument("--model", required=True, choices=corpus.MODELS)
    p.add_argument("--n", type=int)
    p.add_argument("--random-masses", action="store_true")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("build-grid")
    _common(p); _space(p); _build_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify-grid")
    _common(p); _space(p)
    p.add_argument("--grid", required=True)

    p = sub.add_parser("adjacent")
    _common(p); _space(p); _build_args(p)
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--out-dir")

    p = sub.add_parser("haar-analyze")
    _common(p); _space(p); _grid_args(p); _build_args(p)
    p.add_argument("--signal", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("haar-synthesize")
    _common(p); _space(p); _grid_args(p); _build_args(p)
    p.add_argument("--coefficients", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("haar-validate")
    _common(p); _space(p); _grid_args(p); _build_args(p)

    p = sub.add_parser("maximal-compare")
    _common(p); _space(p); _build_args(p)
    p.add_argument("--grids", help="comma-separated grid files")
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--signal")
    p.add_argument("--signals", type=int, default=10, help="random signals when --signal is absent")

    p = sub.add_parser("weights")
    _common(p); _space(p); _build_args(p)
    p.add_argument("--class", dest="cls", required=True, choices=("ap", "rhp", "doubling"))
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--grids")
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--weight", help="weight CSV id,weight (default: seeded log-normal)")

    p = sub.add_parser("product-analyze")
    _common(p); _product_args(p)
    p.add_argument("--signal", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("h1dd")
    _common(p); _product_args(p)
    p.add_argument("--signal")

    p = sub.add_parser("bmodd")
    _common(p); _product_args(p)
    p.add_argument("--signal")
    p.add_argument("--tensor")
    p.add_argument("--omega-family", choices=OMEGA_FAMILIES + ("file",), default="default")
    p.add_argument("--omega-file")

    p = sub.add_parser("atoms")
    _common(p); _product_args(p)
    p.add_argument("--signal")
    p.add_argument("--ctilde", type=float, default=0.25)
    p.add_argument("--enlargement", choices=ENLARGEMENTS, default="strong")

    p = sub.add_parser("duality-bench")
    _common(p); _product_args(p)
    p.add_argument("--trials", type=int, default=1000)

    p = sub.add_parser("structure-check")
    _common(p); _product_args(p)
    p.add_argument("--signal")
    p.add_argument("--T1", type=int, default=2)
    p.add_argument("--T2", type=int, default=2)
    p.add_argument("--ctilde", type=float, default=0.25)
    p.add_argument("--enlargement", choices=ENLARGEMENTS, default="strong")
    return ap


# input helpers

def _load(args, suffix=""):
    path = getattr(args, f"space{suffix}", None)
    if path is None:
        raise InputError(f"--space{suffix} is required")
    try:
        return io.load_inputs(path, getattr(args, f"measure{suffix}", None))
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read space {path}: {exc}") from exc


def _lattice(n):
    src, mass, extras = corpus.binary_lattice(n)
    src = dict(src, grid_hint=extras)
    return load_space(src), PointMassMeasure(mass), src


def _grid_kwargs(args, src, seed):
    hint = src.get("grid_hint") or {}
    if args.delta is not None:
        delta = args.delta
    else:
        delta = hint.get("delta", 0.5) if args.canonical else 0.5
    kw = {"delta": delta, "seed": seed, "strict": args.strict,
          "distinguished_center": args.center}
    if args.canonical:
        if "centers" not in hint:
            raise InputError("--canonical needs centre lists in the space file")
        cen = hint["centers"]
        kw["centers"] = cen
        kw["k_range"] = (hint["kmin"], hint["kmin"] + len(cen) - 1)
        if args.center is None:
            kw["distinguished_center"] = hint.get("distinguished_center")
    elif args.kmin is not None or args.kmax is not None:
        if args.kmin is None or args.kmax is None:
            raise InputError("--kmin and --kmax go together")
        kw["k_range"] = (args.kmin, args.kmax)
    return kw


def _grid(args, space, measure, src, seed, suffix=""):
    path = getattr(args, f"grid{suffix}", None)
    if path:
        try:
            return io.read_grid(path, space, measure)
        except (OSError, ValueError, KeyError, IndexError) as exc:
            raise InputError(f"cannot read grid {path}: {exc}") from exc
    return build_grid(space, measure, **_grid_kwargs(args, src, seed))


def _factor(args, suffix, seed):
    if getattr(args, f"space{suffix}") is None:
        space, measure, src = _lattice(args.lattice)
        canonical = args.canonical
        args.canonical = True
        try:
            g = _grid(args, space, measure, src, seed, suffix)
        finally:
            args.canonical = canonical
        return space, measure, src, g
    space, measure, src = _load(args, suffix)
    return space, measure, src, _grid(args, space, measure, src, seed, suffix)


def _product(args, seed):
    s1, m1, src1, g1 = _factor(args, "1", seed)
    s2, m2, src2, g2 = _factor(args, "2", seed)
    return ProductGrid(build_basis(g1), build_basis(g2))


def _product_signal(args, product, rng):
    if args.signal:
        try:
            F, _ = io.read_product_signal(args.signal)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read product signal: {exc}") from exc
        if F.shape != product.shape:
            raise InputError(f"product signal shape {F.shape} does not match {product.shape}")
        return F
    return rng.normal(size=product.shape)


def _signal(path, n):
    try:
        return io.read_vector(path, n)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read signal {path}: {exc}") from exc


def _grid_checks(rep, grid, label=""):
    res = verify_grid(grid)
    for name, c in res["checks"].items():
        rep.add(f"{label}{name}", f"dyadic cube axiom: {name.replace('_', ' ')}", c["pass"],
                witnesses=[c["witness"]] if c["witness"] else [])
    rep.add(f"{label}grid_constants", "measured ball sandwich constants of the cubes", "measured",
            constants=res["constants"])
    for w in grid.warnings:
        rep.add(f"{label}strict_mode", "strict ratio bound", "measured",
                constants={"required": w.required, "actual": w.actual}, witnesses=[w.message])
    return res


# commands

def cmd_corpus(args, rep, seed):
    kw = {"random_masses": True} if args.random_masses and args.model in ("binary-lattice", "triadic") else {}
    src, mass, extras = corpus.generate(args.model, args.n, seed, **kw)
    src = dict(src, grid_hint=extras) if extras else dict(src)
    out = Path(args.out)
    io.write_space(out / "space.json", src)
    io.write_measure(out / "measure.csv", mass)
    space = load_space(src)
    rep.data.update({"model": args.model, "n": space.n, "A0": space.A0,
                     "files": ["space.json", "measure.csv"]})
    rep.add("corpus_written", "reference space generator", "measured",
            constants={"n": space.n, "A0": space.A0, "total_mass": float(np.sum(mass))})


def cmd_build_grid(args, rep, seed):
    space, measure, src = _load(args)
    try:
        grid = build_grid(space, measure, **_grid_kwargs(args, src, seed))
    except GridError as exc:
        raise InputError(str(exc)) from exc
    io.write_grid(args.out, grid)
    _grid_checks(rep, grid)


def cmd_verify_grid(args, rep, seed):
    space, measure, _ = _load(args)
    try:
        grid = io.read_grid(args.grid, space, measure)
    except (OSError, ValueError, KeyError, IndexError, TypeError) as exc:
        rep.add("grid_readable", "grid file structure", False, witnesses=[str(exc)])
        return
    _grid_checks(rep, grid)


def cmd_adjacent(args, rep, seed):
    space, measure, src = _load(args)
    kw = _grid_kwargs(args, src, seed)
    kw.pop("centers", None)
    strict = kw.pop("strict")
    kw.pop("seed")
    systems = build_adjacent_systems(space, measure, T=args.T, seed=seed, strict=strict, **kw)
    for t, g in enumerate(systems.grids):
        _grid_checks(rep, g, f"system{t}.")
        if args.out_dir:
            io.write_grid(Path(args.out_dir) / f"grid_{t}.json", g)
    for w in systems.warnings:
        rep.add("strict_mode_adjacent", "strict ratio bound for several systems", "measured",
                constants={"required": w.required, "actual": w.actual}, witnesses=[w.message])
    s = systems.report
    rep.add("sandwich", "every ball lies between a cube and its dilate in some system", "measured",
            constants={k: s[k] for k in ("balls", "sandwiched", "success_rate", "C_max", "n_failures")},
            witnesses=s["failures"])
    rep.data["per_system"] = s["per_system"]


def cmd_haar_analyze(args, rep, seed):
    space, measure, src = _load(args)
    grid = _grid(args, space, measure, src, seed)
    basis = build_basis(grid)
    f = _signal(args.signal, space.n)
    c = analyze(basis, f)
    io.write_coefficients(args.out, c, grid.kmin)
    m = measure.mass
    energy = float((c.values ** 2).sum() + (c.coarse ** 2) @ grid.masses(grid.kmin))
    l2 = float(f ** 2 @ m)
    err = float(np.abs(synthesize(basis, c) - f).max())
    rep.add("parseval", "energy of the signal equals the energy of its expansion",
            abs(energy - l2) <= args.tolerance * max(1.0, l2), constants={"energy": energy, "l2": l2})
    rep.add("round_trip", "analysis then synthesis reproduces the signal",
            err <= args.tolerance * max(1.0, float(np.abs(f).max())), constants={"max_error": err})
    rep.data["functions"] = basis.size


def cmd_haar_synthesize(args, rep, seed):
    space, measure, src = _load(args)
    grid = _grid(args, space, measure, src, seed)
    basis = build_basis(grid)
    try:
        coef, coarse = io.read_coefficients(args.coefficients)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read coefficients: {exc}") from exc
    nc = len(grid.centers[0])
    if coarse and sorted(coarse) != list(range(nc)):
        raise InputError("coarse averages must cover every coarsest cube")
    try:
        f = synthesize(basis, coef, coarse=[coarse[a] for a in range(nc)] if coarse else None)
    except KeyError as exc:
        raise InputError(str(exc)) from exc
    io.write_vector(args.out, f)
    rep.add("synthesized", "pointwise sum of the expansion", "measured",
            constants={"coefficients": len(coef), "coarse": len(coarse)})


def cmd_haar_validate(args, rep, seed):
    space, measure, src = _load(args)
    grid = _grid(args, space, measure, src, seed)
    basis = build_basis(grid)
    res = validate_basis(basis, tol=args.tolerance)
    rep.add("haar_properties", "support, constancy on children, cancellation, orthonormality, spanning",
            res["pass"], constants={"n_failed": res["n_failed"], "max_cancellation": res["max_cancellation"],
                                    "max_gram_error": res["max_gram_error"], "functions": res["functions"]},
            witnesses=res["failed"][:20])
    rep.add("norm_bracket", "normalised Lp norms of each Haar function bounded in terms of M", "measured",
            constants={"bracket": res["bracket"], "M": res["M"], "ratios": res["ratios"],
                       "norm_product": res["norm_product"]})
    bad = [list(c) for c, o in basis.orderings.items() if not tail_inequality_holds(o)]
    rep.add("tail_inequality", "tail masses of ordered children, exact rational comparison",
            not bad, witnesses=bad[:20])
    G = gram_matrix(basis)
    gerr = float(np.abs(G - np.eye(len(G))).max()) if G.size else 0.0
    rep.add("gram_identity", "full basis is orthonormal", gerr <= args.tolerance,
            constants={"max_error": gerr})


def cmd_maximal_compare(args, rep, seed):
    space, measure, src = _load(args)
    if args.grids:
        grids = [_grid(argparse.Namespace(grid=p), space, measure, src, seed) for p in args.grids.split(",")]
    else:
        kw = _grid_kwargs(args, src, seed)
        kw.pop("centers", None)
        kw.pop("seed")
        grids = [build_grid(space, measure, seed=seed + t, **kw) for t in range(args.T)]
    if args.signal:
        F = _signal(args.signal, space.n)
    else:
        F = np.random.default_rng(seed).normal(size=(space.n, args.signals))
    r = compare_maximal(grids, space, measure, F)
    rep.add("dyadic_below_ball", "dyadic maximal function at most C* times the ball maximal function",
            r.forward_ok, constants={"ratio": r.forward_ratio, "C_star": r.C_star, "C_dbl": r.C_dbl})
    rep.add("ball_below_dyadic_sum", "restricted maximal function on sandwiched balls at most C' times the sum",
            r.reverse_ok, constants={"C_prime": r.C_prime, "C_prime_proof": r.C_prime_proof,
                                     "sandwich_rate": r.sandwich_rate})
    rep.add("ball_below_dyadic_sum_all", "empirical ratio over all balls", "measured",
            constants={"ratio": r.reverse_ratio, **r.extra})


def cmd_weights(args, rep, seed):
    space, measure, src = _load(args)
    if args.grids:
        grids = [_grid(argparse.Namespace(grid=p), space, measure, src, seed) for p in args.grids.split(",")]
    else:
        kw = _grid_kwargs(args, src, seed)
        kw.pop("centers", None)
        kw.pop("seed")
        grids = [build_grid(space, measure, seed=seed + t, **kw) for t in range(args.T)]
    if args.weight:
        w = _signal(args.weight, space.n)
    else:
        w = np.exp(np.random.default_rng(seed).normal(0.0, 0.5, space.n))
    try:
        res = intersection_report(grids, space, measure, w, args.cls, args.p)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    checks = res.pop("checks")
    for name, ok in checks.items():
        rep.add(name, f"weight class implication: {name.replace('_', ' ')}", ok)
    rep.add("weight_constants", "continuous and dyadic weight constants", "measured", constants=res)


def cmd_product_analyze(args, rep, seed):
    P = _product(args, seed)
    F = _product_signal(args, P, None)
    t, resid = lifting(P, F)
    io.write_tensor(args.out, t)
    rep.add("tensor_written", "cancellative coefficients of the product signal", "measured",
            constants={"pairs": int(np.count_nonzero(t.values)), "residual_max": float(np.abs(resid).max()),
                       "h1dd": s1_norm(P, t)})


def cmd_h1dd(args, rep, seed):
    P = _product(args, seed)
    F = _product_signal(args, P, np.random.default_rng(seed))
    S = square_function(P, product_analyze(P, F))
    Sm = martingale_square_function(P, F)
    err = float(np.abs(S - Sm).max())
    rep.add("square_function_forms", "coefficient and martingale square functions agree",
            err <= args.tolerance, constants={"max_error": err})
    rep.add("h1dd_norm", "L1 norm of the square function", "measured",
            constants={"value": h1dd_norm(P, F)})


def cmd_bmodd(args, rep, seed):
    P = _product(args, seed)
    if args.tensor:
        try:
            t = CoefficientTensor.from_dict(P, io.read_tensor_dict(args.tensor))
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"cannot read tensor: {exc}") from exc
    else:
        t = product_analyze(P, _product_signal(args, P, np.random.default_rng(seed)))
    if args.omega_family == "file":
        if not args.omega_file:
            raise InputError("--omega-family file needs --omega-file")
        try:
            family = io.read_masks(args.omega_file, P.shape)
        except (OSError, ValueError, KeyError, IndexError) as exc:
            raise InputError(f"cannot read set family: {exc}") from exc
    else:
        family = named_family(P, t, args.omega_family)
    if not family:
        raise InputError("empty set family")
    res = bmodd_functional(P, t, family)
    rep.add("bmodd_value", "largest Carleson-type ratio over the set family (a lower bound)", "measured",
            constants=res)


def cmd_atoms(args, rep, seed):
    P = _product(args, seed)
    F = _product_signal(args, P, np.random.default_rng(seed))
    dec = atomic_decompose(P, F, args.ctilde, args.enlargement)
    bad = []
    for j, a in enumerate(dec.atoms):
        v = validate_atom(P, a, args.tolerance)
        if not v["pass"]:
            bad.append({"atom": j, "failed": [n for n, c in v["checks"].items() if not c["pass"]]})
    rep.add("atoms_valid", "every atom is supported, sized and doubly cancellative", not bad,
            constants={"atoms": len(dec.atoms)}, witnesses=bad[:20])
    rep.add("reconstruction", "atoms sum to the cancellative part", dec.reconstruction_error <= 1e-8,
            constants={"max_error": dec.reconstruction_error})
    rep.add("lambda_sum", "sum of atom weights against the square-function norm", "measured",
            constants={"lambda_sum": dec.lambda_sum, "h1dd": dec.h1_norm, "ratio": dec.ratio,
                       "support_failures": dec.support_failures})


def cmd_duality_bench(args, rep, seed):
    P = _product(args, seed)
    rng = np.random.default_rng(seed)
    n1, n2 = P.tensor_shape
    if n1 * n2 == 0:
        raise InputError("product has no cancellative pairs")
    k1, k2 = P.basis1.keys[0], P.basis2.keys[0]
    s = CoefficientTensor.unit(P, k1, k2, 1.0)
    single = pairing(s, s)
    rep.add("single_rectangle", "one-pair tensors attain the duality bound",
            abs(single["ratio"] - 1.0) <= args.tolerance, constants=single)
    ratios = np.empty(args.trials)
    for j in range(args.trials):
        sv = rng.normal(size=(n1, n2))
        if j % 2:
            sv = sv * (rng.random((n1, n2)) < 0.2)
        s = CoefficientTensor(P, sv)
        t = CoefficientTensor(P, rng.normal(size=(n1, n2)))
        ratios[j] = pairing(s, t)["ratio"]
    run_max = float(ratios.max())
    rep.add("pairing_ratio", "pairing against sequence norms over seeded random pairs",
            bool(np.all(ratios <= run_max)),
            constants={"run_max": run_max, "mean": float(ratios.mean()), "trials": args.trials},
            witnesses=[int(np.argmax(ratios))])


def cmd_structure_check(args, rep, seed):
    s1, m1, src1, _ = _factor(args, "1", seed)
    s2, m2, src2, _ = _factor(args, "2", seed)

    def systems(space, measure, src, T):
        kw = _grid_kwargs(argparse.Namespace(**{**vars(args), "canonical": False}), src, seed)
        kw.pop("seed")
        return [build_grid(space, measure, seed=seed + t, **kw) for t in range(T)]

    G1, G2 = systems(s1, m1, src1, args.T1), systems(s2, m2, src2, args.T2)
    rng = np.random.default_rng(seed)
    F = _product_signal(args, ProductGrid(build_basis(G1[0]), build_basis(G2[0])), rng)
    res = structure_check(G1, G2, F, args.ctilde, args.enlargement)
    rep.add("split_reconstruction", "pieces split among system pairs sum to the cancellative part",
            res["reconstruction_error"] <= 1e-8, constants={"max_error": res["reconstruction_error"]})
    rep.add("split_norms", "norms of the per-pair parts", "measured",
            constants={k: res[k] for k in ("reference_h1", "lambda_sum", "part_norms", "part_norm_sum", "atoms")},
            witnesses=res["unassignable"][:20])
    rep.add("bmo_spread", "BMO-type functional in every system pair", "measured",
            constants={k: res[k] for k in ("bmo", "bmo_max", "bmo_min")})
    rep.data["sandwich"] = {"first": verify_sandwich(G1, s1)["success_rate"],
                            "second": verify_sandwich(G2, s2)["success_rate"]}


COMMANDS = {
    "corpus": cmd_corpus, "build-grid": cmd_build_grid, "verify-grid": cmd_verify_grid,
    "adjacent": cmd_adjacent, "haar-analyze": cmd_haar_analyze, "haar-synthesize": cmd_haar_synthesize,
    "haar-validate": cmd_haar_validate, "maximal-compare": cmd_maximal_compare, "weights": cmd_weights,
    "product-analyze": cmd_product_analyze, "h1dd": cmd_h1dd, "bmodd": cmd_bmodd, "atoms": cmd_atoms,
    "duality-bench": cmd_duality_bench, "structure-check": cmd_structure_check,
}

_CONFIG_KEYS = ("delta", "strict", "T", "T1", "T2", "omega_family")


def _config(args, seed) -> RunConfig:
    ns = vars(args)
    paths = {k: v for k, v in ns.items()
             if isinstance(v, str) and k in ("space", "measure", "grid", "grids", "signal", "out", "weight",
                                             "coefficients", "tensor", "omega_file", "out_dir",
                                             "space1", "space2", "measure1", "measure2", "grid1", "grid2")}
    skip = set(paths) | {"command", "seed", "report", "tolerance", "no_timing", *_CONFIG_KEYS}
    params = {k: v for k, v in ns.items() if k not in skip and v is not None}
    return RunConfig(seed=seed, delta=args.delta if getattr(args, "delta", None) is not None else 0.5,
                     strict_mode=bool(getattr(args, "strict", False)), T=getattr(args, "T", 3),
                     T1=getattr(args, "T1", 1), T2=getattr(args, "T2", 1), tolerance=args.tolerance,
                     omega_family=getattr(args, "omega_family", "default"), paths=paths, params=params)


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    seed = args.seed if args.seed is not None else default_seed()
    rep = Report(args.command, _config(args, seed))
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args, rep, seed)
    except (InputError, SpaceError, GridError) as exc:
        print(f"dyadic-haar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    rep.wall_time = round(time.perf_counter() - start, 6)
    timing = not args.no_timing
    if args.report:
        rep.write(args.report, timing)
        status = "PASS" if rep.ok else "FAIL"
        print(f"{args.command}: {status} ({len(rep.checks)} checks) -> {args.report}")
    else:
        sys.stdout.write(rep.text(timing))
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
