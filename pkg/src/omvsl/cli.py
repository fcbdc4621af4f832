"""Command-line front end: ``omvsl {fit,transform,eval,solve-eig,bench,verify}``.

Exit status: 0 on success, 2 for input errors, 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bench import fit_exponent, run_bench
from .eigsolve import NumericalError, Pencil, SolverConfig, loecg
from .estimator import fit_projections
from .evaluation import (
    accuracy,
    knn1,
    mlknn_fit,
    mlknn_predict,
    multilabel_metrics,
    pca_concat,
    project_fuse,
    random_splits,
)
from .io import (
    InputError,
    dump_json,
    load_bundle,
    load_dataset,
    read_manifest,
    read_matrix,
    save_bundle,
    write_matrix,
)
from .linop import DenseOperator
from .models import MODEL_KINDS, ModelSpec
from .osave import ViewDegeneracyError

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("OMVSL_THREADS", "1")))
    except ValueError:
        return 1


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _add_solver_flags(p):
    p.add_argument("--krylov-order", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--guard-tol", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)


def _add_model_flags(p, models=MODEL_KINDS):
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", default="OMLDA", choices=models)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--alpha", type=float, default=None,
                   help="cross-view weight (default 1; ignored by OMVMDA/OMCCA/OM2CCA)")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--degeneracy", choices=("raise", "fallback"), default="raise")
    _add_solver_flags(p)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(args.krylov_order, args.tol, args.max_iters, args.guard_tol, args.seed)


def _model_spec(args, k=None, alpha=None) -> ModelSpec:
    a = args.alpha if alpha is None else alpha
    spec = ModelSpec(args.model, 1.0 if a is None else a, args.epsilon, args.k if k is None else k)
    if a is not None and not spec.uses_alpha:
        warnings.warn(f"{spec.kind} has no alpha parameter; --alpha {a} is ignored", UserWarning)
    return spec


def _clean(x):
    """JSON-friendly floats (no numpy scalars)."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def cmd_fit(args) -> int:
    manifest = read_manifest(args.manifest)
    ds = load_dataset(manifest)
    spec = _model_spec(args)
    t0 = time.perf_counter()
    P, meta = fit_projections(ds, spec, _solver_config(args), args.degeneracy)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    view_ids = [e.id for e in manifest.views]
    meta_out = {
        "dataset": manifest.name,
        "model": spec.kind,
        "k": spec.k,
        "alpha": float(spec.alpha) if spec.uses_alpha else None,
        "epsilon": spec.epsilon,
        "solver": meta["solver"],
        "orthonormal": P.orthonormal,
        "krylov_order": args.krylov_order,
        "tol": args.tol,
        "max_iters": args.max_iters,
        "guard_tol": args.guard_tol,
        "seed": args.seed,
        "eigenvalues": P.eigenvalues.tolist(),
        "converged": list(P.converged),
        "objective": meta["objective"],
        "label_projection_file": None,
    }
    if meta["label_view"]:
        meta_out["label_projection_file"] = "projection_labels.csv"
    save_bundle(out, view_ids, P.matrices[:ds.v], _clean(meta_out), manifest.delimiter)
    if meta["label_view"]:
        write_matrix(out / "projection_labels.csv", P.matrices[ds.v], manifest.delimiter)
    # wall clock lives apart from meta.json so the bundle stays byte-stable
    (out / "timing.json").write_text(dump_json({"wall_clock_seconds": elapsed}))
    print(f"wrote {len(view_ids)} projections (k={spec.k}) to {out}")
    if args.verify:
        return _verify_dir(out, tol=1e-10)
    return 0


def _verify_dir(bundle, tol: float) -> int:
    meta, mats = load_bundle(bundle)
    if not meta.get("orthonormal", True):
        print("bundle holds ratio-trace projections; orthonormality not expected")
        return 0
    ok = True
    for vid, P in zip(meta["views"], mats):
        err = float(np.max(np.abs(P.T @ P - np.eye(P.shape[1]))))
        status = "ok" if err <= tol else "FAIL"
        ok &= err <= tol
        print(f"view {vid}: max|P^T P - I| = {err:.3e} [{status}]")
    return 0 if ok else EXIT_NUMERICAL


def cmd_verify(args) -> int:
    return _verify_dir(Path(args.bundle), args.tol)


def _parse_indices(spec: str, n: int) -> np.ndarray:
    if spec == "all":
        return np.arange(n)
    if spec.startswith("@"):
        vals = Path(spec[1:]).read_text().replace(",", " ").split()
        idx = np.array([int(v) for v in vals], dtype=int)
    elif ":" in spec:
        a, b = spec.split(":", 1)
        idx = np.arange(int(a or 0), int(b or n))
    else:
        idx = np.array(_ints(spec), dtype=int)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= n:
        raise InputError(f"index selection {spec!r} is empty or out of range for n={n}")
    return idx


def cmd_transform(args) -> int:
    manifest = read_manifest(args.manifest)
    ds = load_dataset(manifest)
    meta, mats = load_bundle(args.bundle)
    ids = [e.id for e in manifest.views]
    if meta["views"] != ids:
        raise InputError(f"bundle views {meta['views']} do not match manifest views {ids}")
    for vid, P, X in zip(ids, mats, ds.views):
        if P.shape[0] != X.shape[0]:
            raise InputError(f"view {vid!r}: projection has {P.shape[0]} rows, data has {X.shape[0]}")
    idx = _parse_indices(args.indices, ds.n)
    fused = project_fuse(mats, ds, idx)
    write_matrix(args.out, fused, manifest.delimiter)
    print(f"wrote {fused.shape[0]} x {fused.shape[1]} fused features to {args.out}")
    return 0


def _eval_point(ds, args, splits, k, alpha):
    multiclass = ds.label_kind == "multiclass_onehot"
    per_split = []
    for sp in splits:
        train = ds.subset(sp.train_idx)
        if args.model == "PCA_CONCAT":
            mats = pca_concat(ds, sp.train_idx, k)
        else:
            P, _ = fit_projections(train, _model_spec(args, k, alpha), _solver_config(args),
                                   args.degeneracy)
            mats = P.matrices
        Ftr = project_fuse(mats, ds, sp.train_idx)
        Fte = project_fuse(mats, ds, sp.test_idx)
        if multiclass:
            y = np.argmax(ds.labels, axis=0)
            pred = knn1(Ftr, y[sp.train_idx], Fte)
            per_split.append({"seed": sp.seed, "accuracy": accuracy(pred, y[sp.test_idx])})
        else:
            model = mlknn_fit(Ftr, ds.labels[:, sp.train_idx], args.k_nn, args.smoothing)
            scores, pred = mlknn_predict(model, Fte)
            rep = multilabel_metrics(scores, pred, ds.labels[:, sp.test_idx])
            per_split.append({"seed": sp.seed, **rep.as_dict()})
    keys = [key for key in per_split[0] if key != "seed"]
    mean = {key: float(np.mean([r[key] for r in per_split])) for key in keys}
    std = {key: float(np.std([r[key] for r in per_split])) for key in keys}
    return {"k": k, "alpha": alpha, "per_split": per_split, "mean": mean, "std": std}


def cmd_eval(args) -> int:
    manifest = read_manifest(args.manifest)
    ds = load_dataset(manifest)
    if ds.labels is None:
        raise InputError("eval needs a label file in the manifest")
    splits = random_splits(ds.n, args.split_ratio, args.splits, args.seed)
    ks = _ints(args.grid_k) if args.grid_k else [args.k]
    uses_alpha = args.model != "PCA_CONCAT" and ModelSpec(args.model).uses_alpha
    if args.grid_alpha and uses_alpha:
        alphas = _floats(args.grid_alpha)
    else:
        alphas = [None if args.alpha is None or not uses_alpha else args.alpha]
    points = [(k, a) for k in ks for a in alphas]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        if _threads() > 1 and len(points) > 1:
            with ThreadPoolExecutor(_threads()) as pool:
                grid = list(pool.map(lambda p: _eval_point(ds, args, splits, *p), points))
        else:
            grid = [_eval_point(ds, args, splits, k, a) for k, a in points]
    report = _clean({
        "dataset": manifest.name,
        "model": args.model,
        "label_kind": ds.label_kind,
        "classifier": "1nn" if ds.label_kind == "multiclass_onehot" else "mlknn",
        "split_ratio": args.split_ratio,
        "n_splits": args.splits,
        "seed": args.seed,
        "grid": grid,
    })
    text = dump_json(report)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
        lines = ["k,alpha,metric,mean,std"]
        for g in grid:
            a = "" if g["alpha"] is None else repr(float(g["alpha"]))
            for key in g["mean"]:
                lines.append(f"{g['k']},{a},{key},{g['mean'][key]:.17g},{g['std'][key]:.17g}")
        (out / "table.csv").write_text("\n".join(lines) + "\n")
    return 0


def _check_symmetric_matrix(M, name):
    if M.shape[0] != M.shape[1]:
        raise InputError(f"{name} must be square, got {M.shape}")
    if np.max(np.abs(M - M.T)) > 1e-8 * max(1.0, float(np.max(np.abs(M)))):
        raise InputError(f"{name} is not symmetric to 1e-8")


def cmd_solve_eig(args) -> int:
    A = read_matrix(args.A, args.delimiter)
    B = read_matrix(args.B, args.delimiter)
    _check_symmetric_matrix(A, "A")
    _check_symmetric_matrix(B, "B")
    if A.shape != B.shape:
        raise InputError(f"A is {A.shape} but B is {B.shape}")
    try:
        pencil = Pencil(DenseOperator(0.5 * (A + A.T)), DenseOperator(0.5 * (B + B.T)))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    res = loecg(pencil, _solver_config(args))
    print(dump_json(_clean({"rho": res.rho, "residual": res.residual, "iterations": res.iters,
                            "converged": res.converged, "seed": res.seed})), end="")
    if args.eigvec_out:
        write_matrix(args.eigvec_out, res.x[:, None], args.delimiter)
    return 0 if res.converged else EXIT_NUMERICAL


def cmd_bench(args) -> int:
    sizes, ks = _ints(args.sizes), _ints(args.ks)
    t0 = time.perf_counter()
    rows = run_bench(sizes, ks, _solver_config(args), v=args.views, n=args.samples, seed=args.seed)
    lines = ["d,k,matvecs,seconds,apply_seconds"]
    for r in rows:
        lines.append(f"{r.d},{r.k},{r.matvecs},{r.seconds:.6g},{r.apply_seconds:.6g}")
    summary = {}
    if len(ks) > 1:
        per_d = [fit_exponent(ks, [r.matvecs for r in rows if r.d == d]) for d in sizes]
        summary["k_exponent_matvecs"] = float(np.mean(per_d))
    if len(sizes) > 1:
        apply = [next(r.apply_seconds for r in rows if r.d == d) for d in sizes]
        summary["d_exponent_apply"] = fit_exponent(sizes, apply)
    summary["total_seconds"] = time.perf_counter() - t0
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    sys.stdout.write(dump_json(summary))
    if args.out:
        Path(args.out).write_text(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omvsl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"omvsl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="learn per-view projections and write a bundle")
    _add_model_flags(p)
    p.add_argument("--out", required=True, help="bundle directory")
    p.add_argument("--verify", action="store_true", help="recheck orthonormality after writing")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("transform", help="project and fuse samples with a saved bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--indices", default="all", help="'all', 'a:b', 'i,j,...' or @file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("eval", help="seeded split evaluation with 1-NN or ML-kNN")
    _add_model_flags(p, MODEL_KINDS + ("PCA_CONCAT",))
    p.add_argument("--split-ratio", type=float, default=0.1, help="training fraction")
    p.add_argument("--splits", type=int, default=10)
    p.add_argument("--grid-k", default=None, help="comma-separated k values to sweep")
    p.add_argument("--grid-alpha", default=None, help="comma-separated alpha values to sweep")
    p.add_argument("--k-nn", type=int, default=10)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--out", default=None, help="directory for report.json and table.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("solve-eig", help="top eigenpair of a dense symmetric pencil")
    p.add_argument("--A", required=True)
    p.add_argument("--B", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--eigvec-out", default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve_eig)

    p = sub.add_parser("bench", help="matvec and timing scaling in d and k")
    p.add_argument("--sizes", default="1000,2000")
    p.add_argument("--ks", default="2,4,8")
    p.add_argument("--views", type=int, default=2)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out", default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="check orthonormality of a saved bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, ViewDegeneracyError) as exc:
        print(f"omvsl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, ValueError, OSError, KeyError) as exc:
        print(f"omvsl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
