"""Command-line driver: ``qlinsrm <command> --config cfg.json [overrides]``.

Every command reads a JSON config, applies flag and ``--set key=value``
overrides, validates the result and writes JSON or CSV to ``--out`` (or
stdout). Outputs carry the artifact version and a hash of the effective
config. Exit codes: 0 success, 2 domain or schema error, 3 budget error.

The worker count comes from ``QLINSRM_WORKERS`` and only affects speed:
sweep points are independent jobs reduced in grid order.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import ansatz as ans
from . import bounds as bnd
from . import constructions as con
from . import oracle as orc
from .errors import DivergenceError, QlinError, SchemaError
from .featuremap import FeatureMapSpec, kernel_matrix, load_jsonl_dataset
from .model import (
    ExplicitClassifier,
    LabeledDataset,
    OptimizerConfig,
    classifier_from_json,
    decision_values,
    frobenius_norm_explicit,
    margin_error,
    observable,
    train_explicit,
    train_implicit,
    training_error,
)
from .qcore import HermitianOperator, hermitian_basis_coords, matrix_from_json, matrix_to_json, numerical_rank
from .serialize import CSV_SCHEMA_VERSION, config_hash, csv_text, dumps

WORKERS_ENV = "QLINSRM_WORKERS"

SWEEP_COLUMNS = (
    "schema_version",
    "knob",
    "value",
    "r",
    "eta",
    "training_error",
    "margin_error",
    "achieved_margin",
    "bound_kind",
    "training_term",
    "complexity_term",
    "confidence_term",
    "total_bound",
    "status",
)


# --------------------------------------------------------------------------
# config helpers


def _require(cfg: dict, key: str, kind, where: str = ""):
    if key not in cfg or cfg[key] is None:
        raise SchemaError(f"field '{where}{key}': required")
    v = cfg[key]
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or float(v) != int(v):
            raise SchemaError(f"field '{where}{key}': expected an integer, got {v!r}")
        return int(v)
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError(f"field '{where}{key}': expected a finite number, got {v!r}")
        return float(v)
    if kind is bool:
        if not isinstance(v, bool):
            raise SchemaError(f"field '{where}{key}': expected true or false, got {v!r}")
        return v
    if kind is str:
        if not isinstance(v, str):
            raise SchemaError(f"field '{where}{key}': expected a string, got {v!r}")
        return v
    if kind is list:
        if not isinstance(v, list):
            raise SchemaError(f"field '{where}{key}': expected a list, got {type(v).__name__}")
        return v
    if kind is dict:
        if not isinstance(v, dict):
            raise SchemaError(f"field '{where}{key}': expected an object, got {type(v).__name__}")
        return v
    return v


def _optional(cfg: dict, key: str, kind, default):
    if cfg.get(key) is None:
        return default
    return _require(cfg, key, kind)


def _set_dotted(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    cur = cfg
    for k in keys[:-1]:
        if not isinstance(cur.get(k), dict):
            cur[k] = {}
        cur = cur[k]
    cur[keys[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise SchemaError("config must be a JSON object")
    for dest, key in getattr(args, "_flag_keys", {}).items():
        v = getattr(args, dest, None)
        if v is not None:
            _set_dotted(cfg, key, v)
    for item in args.set or []:
        if "=" not in item:
            raise SchemaError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        _set_dotted(cfg, k, _parse_value(v))
    return cfg


def provenance(command: str, cfg: dict) -> dict:
    return {
        "artifact_version": __version__,
        "command": command,
        "config_hash": config_hash(cfg),
        "schema_version": CSV_SCHEMA_VERSION,
    }


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise SchemaError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise SchemaError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn, jobs: list, workers: int) -> list:
    """``[fn(j) for j in jobs]``, fanned out over a process pool when ``workers > 1``."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# --------------------------------------------------------------------------
# shared builders


def _featuremap(cfg: dict) -> FeatureMapSpec:
    return FeatureMapSpec.from_json(_require(cfg, "featuremap", dict))


def build_dataset(spec: dict) -> LabeledDataset:
    """Dataset from a config block: ``path``, inline ``inputs``/``labels`` or a ``generator``."""
    if not isinstance(spec, dict):
        raise SchemaError("field 'dataset': expected an object")
    if "path" in spec:
        xs, ys = load_jsonl_dataset(_require(spec, "path", str, "dataset."))
        return LabeledDataset(tuple(xs), tuple(ys))
    if "inputs" in spec:
        xs = _require(spec, "inputs", list, "dataset.")
        ys = _require(spec, "labels", list, "dataset.")
        return LabeledDataset(tuple(xs), tuple(ys))
    gen = _require(spec, "generator", str, "dataset.")
    if gen == "margin":
        m = _require(spec, "m", int, "dataset.")
        n = _require(spec, "n", int, "dataset.")
        eta = _optional(spec, "eta", float, 1.0)
        D, _, _ = con.margin_dataset(m, n, eta)
        xs = [np.eye(2**n)[i] for i in range(m)]
        return LabeledDataset(tuple(xs), D.labels)
    if gen == "probe":
        return con.hard_dataset_for_rank(
            _require(spec, "rank", int, "dataset."),
            _require(spec, "qubits", int, "dataset."),
            _require(spec, "size", int, "dataset."),
            seed=_optional(spec, "seed", int, 0),
        )
    raise SchemaError(f"field 'dataset.generator': unknown generator {gen!r}")


def _optimizer(cfg: dict) -> OptimizerConfig:
    o = cfg.get("optimizer") or {}
    if not isinstance(o, dict):
        raise SchemaError("field 'optimizer': expected an object")
    base = OptimizerConfig()
    return OptimizerConfig(
        learning_rate=_optional(o, "learning_rate", float, base.learning_rate),
        iterations=_optional(o, "iterations", int, base.iterations),
        fd_step=_optional(o, "fd_step", float, base.fd_step),
    )


def _child_seeds(seed: int, k: int) -> list[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(k)]


# --------------------------------------------------------------------------
# commands


def cmd_bounds(cfg: dict) -> dict:
    kind = _require(cfg, "kind", str)
    if kind == "vc":
        r = _require(cfg, "r", int)
        if r < 0:
            raise SchemaError("field 'r': must be >= 0")
        report = {"kind": "vc", "inputs": {"r": r}, "value": bnd.vc_bound(r), "components": {}}
    elif kind == "fat":
        eta, gamma, N = _require(cfg, "eta", float), _require(cfg, "gamma", float), _require(cfg, "N", int)
        report = {"kind": "fat", "inputs": {"eta": eta, "gamma": gamma, "N": N}, "value": bnd.fat_bound(eta, gamma, N), "components": {}}
    elif kind == "thm1":
        k = cfg.get("k")
        k = _require(cfg, "k", int) if k is not None else bnd.vc_bound(_require(cfg, "r", int))
        report = bnd.thm1_bound(_require(cfg, "train_err", float), k, _require(cfg, "m", int), _require(cfg, "delta", float)).to_json()
    elif kind == "thm2":
        if cfg.get("k") is not None:
            k = _require(cfg, "k", int)
        else:
            eta, gamma = _require(cfg, "eta", float), _require(cfg, "gamma", float)
            N = cfg.get("N")
            N = _require(cfg, "N", int) if N is not None else 4 ** _require(cfg, "n_qubits", int)
            k = bnd.fat_bound(eta, gamma / bnd.FAT_SCALE_DIVISOR, N)
        report = bnd.thm2_bound(_require(cfg, "margin_err", float), k, _require(cfg, "m", int), _require(cfg, "delta", float)).to_json()
    else:
        raise SchemaError(f"field 'kind': expected one of vc, fat, thm1, thm2; got {kind!r}")
    report["constants"] = {name: {"value": v, "formula": f} for name, (v, f) in bnd.CONSTANTS.items()}
    return report


def _classifier_metrics(clf, D: LabeledDataset, gamma: float) -> dict:
    f = decision_values(clf, D.items)
    obs = observable(clf)
    return {
        "training_error": training_error(clf, D),
        "margin_error": margin_error(clf, D, gamma),
        "achieved_margin": float(np.min(D.y * f)),
        "frobenius_norm": obs.frobenius_norm,
        "rank": numerical_rank(obs),
    }


def cmd_train(cfg: dict) -> tuple[dict, str | None]:
    """Returns the JSON result and, for explicit runs, the history CSV text."""
    model = _require(cfg, "model", str)
    fm = _featuremap(cfg)
    D = build_dataset(_require(cfg, "dataset", dict))
    seed = _optional(cfg, "seed", int, 0)
    if model == "explicit":
        spec = ans.from_json(_require(cfg, "ansatz", dict))
        gamma0 = _optional(cfg, "gamma0", float, 0.1)
        clf, hist = train_explicit(
            fm,
            spec,
            D,
            gamma0=gamma0,
            frobenius_weight=_optional(cfg, "frobenius_weight", float, 0.0),
            rank=_optional(cfg, "rank", int, None),
            optimizer=_optimizer(cfg),
            seed=seed,
        )
        rows = [[r[c] for c in hist.COLUMNS] for r in hist.rows]
        return {"classifier": clf.to_json(), "metrics": _classifier_metrics(clf, D, gamma0)}, (hist.COLUMNS, rows)
    if model == "implicit":
        clf, rep = train_implicit(
            fm,
            D,
            frobenius_cap=_optional(cfg, "frobenius_cap", float, None),
            tolerance=_optional(cfg, "tolerance", float, 1e-10),
            penalty=_optional(cfg, "penalty", float, None),
        )
        out = {"classifier": clf.to_json(), "metrics": _classifier_metrics(clf, D, _optional(cfg, "gamma", float, 0.0))}
        out["report"] = {"margin": rep.margin, "kkt_residual": rep.kkt_residual, "iterations": rep.iterations, "hard_margin": rep.hard_margin}
        return out, None
    raise SchemaError(f"field 'model': expected explicit or implicit, got {model!r}")


def _bound_terms(kind: str, stats: bnd.ModelStats, delta: float):
    rep = bnd.srm_objective(stats, kind, delta)
    c = rep.components
    return c["training"], c["complexity"], c["confidence"], rep.value


def _rank_row(job: dict, clf: ExplicitClassifier, D: LabeledDataset, status: str = "ok") -> list:
    spec = clf.ansatz
    ell = job["value"]
    r = ans.r_bound(spec, ell)
    f = decision_values(clf, D.items)
    err = training_error(clf, D)
    merr = margin_error(clf, D, job["gamma"])
    eta = frobenius_norm_explicit(clf)
    if job["bound"] == "thm1":
        stats = bnd.ModelStats(m=len(D), train_err=err, r=r)
    else:
        stats = bnd.ModelStats(m=len(D), margin_err=merr, eta=max(eta, 1e-300), gamma=job["gamma"], n_qubits=spec.n_qubits)
    terms = _bound_terms(job["bound"], stats, job["delta"])
    return [CSV_SCHEMA_VERSION, "rank", ell, r, eta, err, merr, float(np.min(D.y * f)), job["bound"], *terms, status]


def _failed_row(knob: str, value, bound: str, status: str) -> list:
    return [CSV_SCHEMA_VERSION, knob, value, None, None, None, None, None, bound, None, None, None, None, status]


def _sweep_rank_point(job: dict, init=None) -> tuple[list, ExplicitClassifier | None]:
    cfg = job["cfg"]
    D = build_dataset(cfg["dataset"])
    fm = _featuremap(cfg)
    spec = ans.from_json(cfg["ansatz"])
    try:
        clf, _ = train_explicit(
            fm,
            spec,
            D,
            gamma0=job["gamma0"],
            frobenius_weight=job["frobenius_weight"],
            rank=job["value"],
            optimizer=_optimizer(cfg),
            seed=job["seed"],
            init=init,
        )
    except DivergenceError as exc:
        return _failed_row("rank", job["value"], job["bound"], f"diverged: {exc}"), init
    if init is not None and training_error(init, D) < training_error(clf, D):
        # the smaller-rank solution is feasible here too; keep it when it fits better
        clf = init
    return _rank_row(job, clf, D), clf


def _sweep_rank_job(job: dict) -> list:
    return _sweep_rank_point(job)[0]


def _sweep_eta_job(job: dict) -> list:
    cfg = job["cfg"]
    D = build_dataset(cfg["dataset"])
    fm = _featuremap(cfg)
    eta = job["value"]
    try:
        clf, rep = train_implicit(fm, D, frobenius_cap=eta, penalty=job["penalty"])
    except QlinError as exc:
        return _failed_row("eta", eta, job["bound"], f"{type(exc).__name__}: {exc}")
    err = training_error(clf, D)
    gamma = job["gamma"]
    merr = margin_error(clf, D, gamma)
    r = numerical_rank(observable(clf))
    if job["bound"] == "thm1":
        stats = bnd.ModelStats(m=len(D), train_err=err, r=r)
    else:
        stats = bnd.ModelStats(m=len(D), margin_err=merr, eta=eta, gamma=gamma, n_qubits=fm.n_qubits)
    terms = _bound_terms(job["bound"], stats, job["delta"])
    return [CSV_SCHEMA_VERSION, "eta", eta, r, eta, err, merr, rep.margin, job["bound"], *terms, "ok"]


def cmd_sweep(cfg: dict, workers: int = 1) -> tuple[tuple, list]:
    """One row per grid point, in grid order.

    ``knob="rank"`` trains explicit models with a rank-``l`` measurement;
    with ``nested`` (default true) each point is warm-started from the
    previous one and runs sequentially, otherwise points are independent jobs.
    ``knob="eta"`` trains Frobenius-capped implicit models.
    """
    knob = _require(cfg, "knob", str)
    grid = _require(cfg, "grid", list)
    if not grid:
        raise SchemaError("field 'grid': must be nonempty")
    _featuremap(cfg)
    build_dataset(_require(cfg, "dataset", dict))
    seed = _optional(cfg, "seed", int, 0)
    bound = _optional(cfg, "bound", str, "thm1" if knob == "rank" else "thm2")
    if bound not in ("thm1", "thm2"):
        raise SchemaError(f"field 'bound': expected thm1 or thm2, got {bound!r}")
    delta = _optional(cfg, "delta", float, 0.05)
    seeds = _child_seeds(seed, len(grid))
    if knob == "rank":
        ans.from_json(_require(cfg, "ansatz", dict))
        gamma0 = _optional(cfg, "gamma0", float, 0.1)
        gamma = _optional(cfg, "gamma", float, gamma0)
        jobs = [
            {
                "cfg": cfg,
                "value": int(v),
                "seed": s,
                "gamma0": gamma0,
                "gamma": gamma,
                "frobenius_weight": _optional(cfg, "frobenius_weight", float, 0.0),
                "bound": bound,
                "delta": delta,
            }
            for v, s in zip(grid, seeds)
        ]
        if _optional(cfg, "nested", bool, True):
            rows, prev = [], None
            for job in jobs:
                init = None
                if prev is not None:
                    init = ExplicitClassifier(prev.featuremap, prev.ansatz, prev.theta, prev.lam, prev.d)
                row, prev = _sweep_rank_point(job, init)
                rows.append(row)
        else:
            rows = ordered_map(_sweep_rank_job, jobs, workers)
    elif knob == "eta":
        if bound == "thm2" and cfg.get("gamma") is None:
            raise SchemaError("field 'gamma': required for the thm2 bound")
        gamma = _optional(cfg, "gamma", float, 0.0)
        penalty = _optional(cfg, "penalty", float, None)
        jobs = [{"cfg": cfg, "value": float(v), "gamma": gamma, "penalty": penalty, "bound": bound, "delta": delta} for v in grid]
        rows = ordered_map(_sweep_eta_job, jobs, workers)
    else:
        raise SchemaError(f"field 'knob': expected rank or eta, got {knob!r}")
    return SWEEP_COLUMNS, rows


def _points(cfg: dict) -> np.ndarray:
    if "points" in cfg:
        pts = np.asarray(_require(cfg, "points", list), dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return pts
    fm = _featuremap(cfg)
    from .featuremap import density

    return np.array([hermitian_basis_coords(density(fm, x)) for x in _require(cfg, "inputs", list)])


def cmd_shatter(cfg: dict) -> dict:
    mode = _optional(cfg, "mode", str, "points")
    if mode == "points":
        pts = _points(cfg)
        out = {"m": int(pts.shape[0]), "D": int(pts.shape[1])}
        if cfg.get("gamma") is not None:
            gamma, eta = _require(cfg, "gamma", float), _require(cfg, "eta", float)
            res = orc.is_gamma_shattered(pts, gamma, eta)
            out.update(decision=res.shattered, best_gamma=res.best_gamma, offsets=None if res.offsets is None else res.offsets.tolist())
            return out
        res = orc.is_shattered(pts)
        out.update(
            decision=res.shattered,
            failing_labeling=None if res.failing_labeling is None else list(res.failing_labeling),
            witnesses=[{"labels": list(y), "w": np.asarray(w).tolist(), "d": float(d)} for y, w, d in res.witnesses],
        )
        return out
    if mode == "search":
        sampler = orc.make_sampler(_require(cfg, "sampler", dict))
        res = orc.vc_lower_bound_search(
            sampler,
            _require(cfg, "max_m", int),
            _require(cfg, "trials", int),
            seed=_optional(cfg, "seed", int, 0),
        )
        return {"size": res.size, "trials_used": res.trials_used, "witness": None if res.witness is None else res.witness.tolist()}
    raise SchemaError(f"field 'mode': expected points or search, got {mode!r}")


def _probe_target(cfg: dict, r: int, n: int):
    target = _optional(cfg, "target", str, "builtin")
    if target == "builtin":
        return con.target_classifier(r, n)
    try:
        with open(target) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read target {target}: {exc}") from None
    if "model" in obj:
        clf = classifier_from_json(obj)
        return observable(clf), clf.d
    if "observable" in obj:
        return HermitianOperator(matrix_from_json(obj["observable"])), float(obj.get("threshold", 0.0))
    raise SchemaError("target file needs a classifier ('model') or an 'observable' with 'threshold'")


def cmd_probe(cfg: dict) -> dict:
    r, n = _require(cfg, "rank", int), _require(cfg, "qubits", int)
    base = con.ProbeMesh()
    mesh = con.ProbeMesh(
        xi=_optional(cfg, "mesh_xi", float, base.xi),
        zeta=_optional(cfg, "mesh_zeta", float, base.zeta),
    )
    o, d = _probe_target(cfg, r, n)
    if o.dim != 2**n:
        raise SchemaError(f"target acts on dimension {o.dim}, expected {2**n}")
    cert = con.tomography_probe(con.classifier_blackbox(o, d), r, n, mesh, refine=_optional(cfg, "refine", bool, True))
    return cert.to_json()


def cmd_kernel(cfg: dict) -> list:
    fm = _featuremap(cfg)
    if "inputs" in cfg:
        xs = _require(cfg, "inputs", list)
    else:
        xs = list(build_dataset(_require(cfg, "dataset", dict)).items)
    if not xs:
        raise SchemaError("field 'inputs': must be nonempty")
    return kernel_matrix(fm, xs).tolist()


def cmd_construct(cfg: dict) -> dict:
    kind = _require(cfg, "kind", str)
    if kind == "target":
        o, d = con.target_classifier(_require(cfg, "rank", int), _require(cfg, "qubits", int))
        return {"observable": matrix_to_json(o.matrix), "threshold": d}
    if kind == "margin-dataset":
        m, n, eta = _require(cfg, "m", int), _require(cfg, "qubits", int), _require(cfg, "eta", float)
        D, o, d = con.margin_dataset(m, n, eta)
        xs = [np.eye(2**n)[i].tolist() for i in range(m)]
        return {
            "dataset": [{"x": x, "y": y} for x, y in zip(xs, D.labels)],
            "observable": matrix_to_json(o.matrix),
            "threshold": d,
            "margin": eta / math.sqrt(m),
        }
    if kind == "probe-dataset":
        D = con.hard_dataset_for_rank(
            _require(cfg, "rank", int), _require(cfg, "qubits", int), _require(cfg, "size", int), seed=_optional(cfg, "seed", int, 0)
        )
        return {"dataset": [{"state": s.to_json(), "y": y} for s, y in zip(D.items, D.labels)]}
    if kind == "embed":
        w = np.asarray(_require(cfg, "w", list), dtype=float)
        e = con.embed_linear_as_quantum(w)
        return {"n_qubits": e.n_qubits, "observable": matrix_to_json(e.observable.matrix), "threshold": e.threshold, "anchor": e.anchor}
    raise SchemaError(f"field 'kind': expected target, margin-dataset, probe-dataset or embed; got {kind!r}")


# --------------------------------------------------------------------------
# argument parsing and output


def _add_flag(p, flag: str, key: str, type_, help_: str):
    dest = flag.lstrip("-").replace("-", "_")
    p.add_argument(flag, dest=dest, type=type_, default=None, help=help_)
    p.set_defaults(_flag_keys={**p.get_default("_flag_keys"), dest: key})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlinsrm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qlinsrm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "bounds": "evaluate capacity and generalization bounds",
        "train": "train an explicit or implicit classifier",
        "sweep": "train over a grid of ranks or Frobenius caps",
        "shatter": "decide shattering or search for shattered sets",
        "probe": "run the label-only rank probe",
        "kernel": "compute a kernel matrix",
        "construct": "emit constructed observables and datasets",
    }
    subs = {}
    for name, h in helps.items():
        p = sub.add_parser(name, help=h)
        p.set_defaults(_flag_keys={})
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a (dotted) config key; VALUE is parsed as JSON")
        p.add_argument("--out", help="output path (default: stdout)")
        subs[name] = p
    b = subs["bounds"]
    _add_flag(b, "--kind", "kind", str, "vc, fat, thm1 or thm2")
    for flag, key, t in (
        ("--r", "r", int),
        ("--eta", "eta", float),
        ("--gamma", "gamma", float),
        ("--N", "N", int),
        ("--k", "k", int),
        ("--m", "m", int),
        ("--delta", "delta", float),
        ("--train-err", "train_err", float),
        ("--margin-err", "margin_err", float),
        ("--qubits", "n_qubits", int),
    ):
        _add_flag(b, flag, key, t, key)
    _add_flag(subs["train"], "--seed", "seed", int, "master seed")
    subs["train"].add_argument("--history", help="write the explicit-training history CSV here")
    _add_flag(subs["sweep"], "--seed", "seed", int, "master seed")
    _add_flag(subs["shatter"], "--seed", "seed", int, "search seed")
    p = subs["probe"]
    _add_flag(p, "--rank", "rank", int, "target rank r")
    _add_flag(p, "--qubits", "qubits", int, "number of qubits n")
    _add_flag(p, "--mesh-zeta", "mesh_zeta", float, "phase mesh step")
    _add_flag(p, "--mesh-xi", "mesh_xi", float, "amplitude mesh step")
    _add_flag(p, "--target", "target", str, "'builtin' or a classifier/observable JSON file")
    _add_flag(subs["construct"], "--kind", "kind", str, "target, margin-dataset, probe-dataset or embed")
    return parser


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        prov = provenance(args.command, cfg)
        if args.command == "sweep":
            cols, rows = cmd_sweep(cfg, worker_count())
            _write(csv_text(cols, rows, prov), args.out)
        elif args.command == "kernel":
            _write(csv_text(None, cmd_kernel(cfg), prov), args.out)
        elif args.command == "train":
            result, hist = cmd_train(cfg)
            history_path = args.history or cfg.get("history")
            if hist is not None and history_path:
                with open(history_path, "w", newline="") as fh:
                    fh.write(csv_text(*hist, prov))
            _write(dumps({"provenance": prov, "result": result}), args.out)
        else:
            fn = {"bounds": cmd_bounds, "shatter": cmd_shatter, "probe": cmd_probe, "construct": cmd_construct}[args.command]
            _write(dumps({"provenance": prov, "result": fn(cfg)}), args.out)
    except QlinError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        if getattr(exc, "failing_bound", None):
            err["failing_bound"] = exc.failing_bound
        sys.stderr.write(dumps(err))
        return exc.exit_code
    return 0


def main() -> None:
    sys.exit(run())
