"""Benchmark orchestration and the command-line interface.

Verbs: run, compare, ablate, boundary, scaling, fit-powerlaw,
validate-config. A run is driven by one declarative JSON config; CLI flags
override scalar fields. All randomness flows from the run seed through
named sub-seeds recorded in the manifest, so reruns with deterministic
predictors are byte-identical apart from manifest timestamps.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics as mt
from . import normalize as nz
from .importance import IMPORTANCE_MODES
from .predictors import (EndpointConfig, LlmClient, PredictionRecord, PromptTemplate,
                         context_rows_for_prompt, ensemble, fit_prompt, ingest_predictions,
                         knn_predict)
from .retrieval import ContextPool, RetrievalConfig, build_pool, context_trace, retrieve, retrieve_random
from .synthgen import ToySpec, boundary_grid, generate_scaling_pools, generate_toy, write_grid
from .util import dump_json, fmt_float, load_json, subseed

ABLATION_VARIANTS = {
    "full": {},
    "NoFeatImp": {"importance_mode": "uniform"},
    "NoNorm": {"numeric_norm": "none", "distance_minmax_rescale": False},
    "NoCorr": {"importance_mode": "pps_only"},
    "NoPPS": {"importance_mode": "pearson_only"},
}

PREDICTIONS_HEADER = ["dataset", "policy", "train_size", "context_size", "predictor",
                      "row_index", "context_used", "flag", "estimate", "probs"]


@dataclass
class DatasetEntry:
    id: str
    table: str
    schema: str
    split: dict = field(default_factory=lambda: {"ratios": [0.8, 0.1, 0.1]})
    train_cap: int = ds.DEFAULT_TRAIN_CAP
    test_cap: int = ds.DEFAULT_TEST_CAP


@dataclass
class RunConfig:
    datasets: list[DatasetEntry]
    predictors: list[dict]
    retrieval: dict = field(default_factory=dict)
    policies: list[dict] = field(default_factory=lambda: [{"id": "rag"}])
    context_sizes: list[int] = field(default_factory=lambda: [128])
    train_sizes: list[int] | None = None
    seed: int = 0
    output_dir: str = "run_out"
    workers: int = 1
    write_traces: bool = False
    prompt: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        raw = load_json(path)
        entries = [DatasetEntry(**e) for e in raw.pop("datasets")]
        return cls(datasets=entries, **raw)

    def to_dict(self) -> dict:
        out = {"datasets": [vars(e) for e in self.datasets]}
        for k in ("predictors", "retrieval", "policies", "context_sizes", "train_sizes",
                  "seed", "output_dir", "workers", "write_traces", "prompt"):
            out[k] = getattr(self, k)
        return out


def validate_config(cfg: RunConfig) -> list[str]:
    """Collect every problem up front; run() refuses to start on a non-empty list."""
    problems = []
    if not cfg.datasets:
        problems.append("no datasets configured")
    if not cfg.predictors:
        problems.append("no predictors configured")
    if not cfg.context_sizes:
        problems.append("context_sizes must be non-empty")
    if cfg.train_sizes is not None and not cfg.train_sizes:
        problems.append("train_sizes must be non-empty when given")
    seen = set()
    for e in cfg.datasets:
        if e.id in seen:
            problems.append(f"duplicate dataset id {e.id!r}")
        seen.add(e.id)
        for p, kind in ((e.table, "table"), (e.schema, "schema")):
            if not Path(p).is_file():
                problems.append(f"dataset {e.id!r}: {kind} path {p!r} does not exist")
        if "file" in e.split and not Path(e.split["file"]).is_file():
            problems.append(f"dataset {e.id!r}: split file {e.split['file']!r} does not exist")
        if "ratios" in e.split and abs(sum(e.split["ratios"]) - 1.0) > 1e-9:
            problems.append(f"dataset {e.id!r}: split ratios must sum to 1")
    try:
        _resolve_retrieval(cfg.retrieval, {})
    except (TypeError, ValueError) as exc:
        problems.append(f"retrieval config: {exc}")
    ids = []
    for p in cfg.predictors:
        pid, ptype = p.get("id"), p.get("type")
        if not pid or ptype not in ("knn", "llm", "external", "ensemble"):
            problems.append(f"bad predictor entry {p}")
            continue
        if ptype == "external" and not Path(p.get("path", "")).is_file():
            problems.append(f"predictor {pid!r}: prediction file missing")
        if ptype == "llm" and not p.get("base_url"):
            problems.append(f"predictor {pid!r}: llm endpoint needs base_url")
        if ptype == "ensemble":
            missing = [m for m in p.get("members", []) if m not in ids]
            if missing or not p.get("members"):
                problems.append(f"predictor {pid!r}: members must be previously defined ids")
        ids.append(pid)
    for pol in cfg.policies:
        if pol.get("type", "rag") not in ("rag", "random"):
            problems.append(f"bad policy entry {pol}")
    return problems


def _resolve_retrieval(base: dict, overrides: dict, quota: int | None = None) -> RetrievalConfig:
    merged = {**base, **{k: v for k, v in overrides.items() if k not in ("id", "type")}}
    if quota is not None:
        merged["quota"] = quota
    if "match_constraints" in merged:
        merged["match_constraints"] = tuple(merged["match_constraints"])
    return RetrievalConfig(**merged)


def _load_split(entry: DatasetEntry, d: ds.Dataset, run_seed: int) -> ds.SplitAssignment:
    spec = entry.split
    if "file" in spec:
        return ds.load_split_file(spec["file"], d.n_rows, entry.train_cap, entry.test_cap)
    seed = spec.get("seed", subseed(run_seed, "split", entry.id))
    return ds.make_split(d, tuple(spec.get("ratios", [0.8, 0.1, 0.1])), seed,
                         entry.train_cap, entry.test_cap)


def _prompt_template(cfg: RunConfig) -> PromptTemplate:
    p = cfg.prompt
    kwargs = {}
    if "preamble" in p:
        kwargs["preamble"] = p["preamble"]
    if "anonymize" in p:
        kwargs["anonymize"] = p["anonymize"]
    if "chars_per_token" in p:
        kwargs["chars_per_token"] = p["chars_per_token"]
    if p.get("file"):
        return PromptTemplate.from_file(p["file"], **kwargs)
    return PromptTemplate(**kwargs)


def _score_records(d: ds.Dataset, records: list[PredictionRecord],
                   dataset_id: str, predictor_id: str) -> mt.MetricReport:
    if d.task == ds.TASK_CLASSIFICATION:
        labels = [d.labels()[r.row_index] for r in records]
        P = [r.class_probabilities for r in records]
        value = mt.auroc(labels, P, d.class_labels)
        kind = mt.METRIC_AUROC
    else:
        labels = [float(d.labels()[r.row_index]) for r in records]
        value = mt.nmae(labels, [r.point_estimate for r in records])
        kind = mt.METRIC_NMAE
    flag = None if value is not None else "undefined"
    return mt.MetricReport(dataset_id, predictor_id, kind, value, len(records), flag)


def _prediction_row(dataset_id, policy_id, train_size, ctx_size, rec: PredictionRecord) -> list:
    probs = "" if rec.class_probabilities is None else "|".join(repr(float(p)) for p in rec.class_probabilities)
    est = "" if rec.point_estimate is None else fmt_float(rec.point_estimate)
    return [dataset_id, policy_id, str(train_size), str(ctx_size), rec.predictor_id,
            str(rec.row_index), str(rec.context_size), rec.flag or "", est, probs]


def _process_dataset(cfg: RunConfig, entry: DatasetEntry):
    """One dataset's full sweep. Returns (pred_rows, report_dicts, weights, traces, info)."""
    d = ds.load_dataset(entry.table, entry.schema)
    split = _load_split(entry, d, cfg.seed)
    test_rows = split.test
    pred_rows, reports, weights_out, traces = [], [], {}, []

    sizes = cfg.train_sizes or [len(split.train)]
    subsets = generate_scaling_pools(split.train, sorted(sizes), subseed(cfg.seed, "subsets", entry.id))
    tmpl = _prompt_template(cfg)
    token_budget = cfg.prompt.get("token_budget", 16384)
    shuffle_ctx = cfg.prompt.get("shuffle_context", False)

    external_records: dict[str, list[PredictionRecord]] = {}
    for p in cfg.predictors:
        if p["type"] == "external":
            external_records[p["id"]] = ingest_predictions(p["path"], d, p["id"], valid_rows=test_rows)
            pred_rows.extend(_prediction_row(entry.id, "external", 0, 0, r)
                             for r in external_records[p["id"]])
            reports.append(_score_records(d, external_records[p["id"]], entry.id, p["id"]).to_dict())

    for train_size, subset in zip(sorted(sizes), subsets):
        for pol in cfg.policies:
            pol_id = pol.get("id", pol.get("type", "rag"))
            pol_type = pol.get("type", "rag")
            base = _resolve_retrieval(cfg.retrieval, pol if pol_type == "rag" else {"importance_mode": "uniform"})
            pool = build_pool(d, subset, base)
            if pol_type == "rag" and (pool.pearson_weights or pool.pps_weights):
                weights_out[f"{pol_id}/n{train_size}"] = {
                    "pearson": pool.pearson_weights, "pps": pool.pps_weights}
            for ctx_size in cfg.context_sizes:
                rcfg = replace(base, quota=ctx_size)
                contexts = {}
                for row in test_rows:
                    if pol_type == "random":
                        rseed = subseed(cfg.seed, "random-policy", entry.id, train_size, ctx_size, int(row))
                        contexts[int(row)] = retrieve_random(pool, ctx_size, rseed)
                    else:
                        contexts[int(row)] = retrieve(pool, d.feature_row(int(row)), rcfg)
                if cfg.write_traces:
                    traces.extend({"dataset": entry.id, "policy": pol_id, "train_size": train_size,
                                   "context_size": ctx_size, **context_trace(c, r)}
                                  for r, c in contexts.items())

                coord_records: dict[str, list[PredictionRecord]] = dict(external_records)
                for p in cfg.predictors:
                    if p["type"] == "knn":
                        recs = [knn_predict(contexts[int(r)], pool, p["id"], int(r)) for r in test_rows]
                    elif p["type"] == "llm":
                        recs = _llm_records(p, d, pool, contexts, test_rows, tmpl, token_budget,
                                            shuffle_ctx, cfg.seed)
                    elif p["type"] == "ensemble":
                        recs = ensemble([coord_records[m] for m in p["members"]], p["id"])
                    else:
                        continue
                    coord_records[p["id"]] = recs
                    pred_rows.extend(_prediction_row(entry.id, pol_id, train_size, ctx_size, r)
                                     for r in recs)
                    reports.append({**_score_records(d, recs, entry.id, p["id"]).to_dict(),
                                    "policy": pol_id, "train_size": train_size,
                                    "context_size": ctx_size})
    info = {"n_rows": d.n_rows, "n_train": len(split.train), "n_test": len(test_rows),
            "split_seed": split.seed}
    return pred_rows, reports, weights_out, traces, info


def _llm_records(p: dict, d: ds.Dataset, pool: ContextPool, contexts, test_rows,
                 tmpl: PromptTemplate, token_budget: int, shuffle_ctx: bool,
                 run_seed: int) -> list[PredictionRecord]:
    endpoint = EndpointConfig(
        base_url=p["base_url"], model=p.get("model", "default"),
        api_key_env=p.get("api_key_env", "TABCTX_API_KEY"),
        timeout=p.get("timeout", 60.0), max_retries=p.get("max_retries", 2),
        concurrency=p.get("concurrency", 4),
        max_output_tokens=p.get("max_output_tokens", 64), chat=p.get("chat", True))
    client = LlmClient(endpoint)
    features = [c.name for c in d.feature_columns]
    label_name = d.label_column.name
    jobs = []
    for row in test_rows:
        ctx = contexts[int(row)]
        seed = subseed(run_seed, "prompt-order", int(row)) if shuffle_ctx else None
        rows_lab = context_rows_for_prompt(ctx, pool, shuffle_seed=seed)
        text, used = fit_prompt(tmpl, rows_lab, d.feature_row(int(row)), features,
                                label_name, token_budget)
        if d.task == ds.TASK_REGRESSION:
            ctx_labels = [float(v) for _, v in rows_lab[:used]]
            ctx_mean = float(np.mean(ctx_labels)) if ctx_labels else pool.train_label_mean()
        else:
            ctx_mean = 0.0
        jobs.append({"prompt": text, "task": d.task, "class_labels": d.class_labels,
                     "context_mean": ctx_mean, "row_index": int(row), "context_size": used})
    return client.predict_many(jobs, predictor_id=p["id"])


def run(cfg: RunConfig, output_dir: str | Path | None = None) -> Path:
    problems = validate_config(cfg)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()

    results = {}
    errors = {}

    def guarded(entry: DatasetEntry):
        try:
            return entry.id, _process_dataset(cfg, entry), None
        except Exception as exc:  # noqa: BLE001 - one dataset must not sink the run
            return entry.id, None, f"{type(exc).__name__}: {exc}"

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(guarded, cfg.datasets))
    else:
        outcomes = [guarded(e) for e in cfg.datasets]
    for ds_id, payload, err in outcomes:
        if err is None:
            results[ds_id] = payload
        else:
            errors[ds_id] = err

    with open(out / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTIONS_HEADER)
        for entry in cfg.datasets:
            if entry.id in results:
                writer.writerows(results[entry.id][0])

    reports = [r for e in cfg.datasets if e.id in results for r in results[e.id][1]]
    dump_json(out / "metrics.json", {"metrics": reports})
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "predictor", "policy", "train_size", "context_size",
                         "metric", "value", "n_test", "flag"])
        for r in reports:
            writer.writerow([r["dataset"], r["predictor"], r.get("policy", ""),
                             r.get("train_size", ""), r.get("context_size", ""),
                             r["metric"], fmt_float(r["value"]), r["n_test"], r["flag"] or ""])

    weights = {e.id: results[e.id][2] for e in cfg.datasets if e.id in results and results[e.id][2]}
    if weights:
        dump_json(out / "weights.json", weights)
    if cfg.write_traces:
        with open(out / "traces.jsonl", "w", encoding="utf-8") as fh:
            for entry in cfg.datasets:
                if entry.id in results:
                    for t in results[entry.id][3]:
                        fh.write(json.dumps(t) + "\n")

    manifest = {
        "config": cfg.to_dict(),
        "seed_scheme": "blake2b(root:tag) sub-seeds",
        "datasets": {e.id: ({"status": "ok", **results[e.id][4]} if e.id in results
                            else {"status": "error", "error": errors[e.id]})
                     for e in cfg.datasets},
        "started_at": started,
        "finished_at": time.time(),
    }
    dump_json(out / "manifest.json", manifest)
    return out


# ---------------------------------------------------------------------------
# compare / ablate / scaling


def _collect_metrics(paths) -> list[dict]:
    rows = []
    for p in paths:
        p = Path(p)
        mfile = p / "metrics.json" if p.is_dir() else p
        label = p.name if p.is_dir() else p.stem
        for r in load_json(mfile)["metrics"]:
            key = ":".join([label, r["predictor"], str(r.get("policy", "")),
                            str(r.get("train_size", "")), str(r.get("context_size", ""))])
            rows.append({**r, "method": key})
    return rows


def compare(paths, target: str | None = None, baseline: str | None = None) -> dict:
    """Per-dataset comparison across methods found in the metric files.
    Gap orientation makes positive always mean the target is better; ties
    count as neither outperformed."""
    rows = _collect_metrics(paths)
    if not rows:
        raise ValueError("no metrics found")
    methods = sorted({r["method"] for r in rows})
    by_ds: dict[str, dict[str, dict]] = {}
    for r in rows:
        if r["value"] is not None:
            by_ds.setdefault(r["dataset"], {})[r["method"]] = r

    normalized = {}
    for dset, per_method in sorted(by_ds.items()):
        ms = sorted(per_method)
        if len(ms) < 2:
            continue
        higher = per_method[ms[0]]["metric"] == mt.METRIC_AUROC
        vals = mt.minmax_normalize([per_method[m]["value"] for m in ms], higher_better=higher)
        normalized[dset] = dict(zip(ms, vals))

    out = {"methods": methods, "normalized": normalized}
    if target and baseline:
        gaps = []
        for dset, per_method in sorted(by_ds.items()):
            if target in per_method and baseline in per_method:
                t, b = per_method[target]["value"], per_method[baseline]["value"]
                gap = (t - b) if per_method[target]["metric"] == mt.METRIC_AUROC else (b - t)
                gaps.append({"dataset": dset, "gap": gap})
        if not gaps:
            raise ValueError("target and baseline share no datasets")
        gaps.sort(key=lambda g: (-g["gap"], g["dataset"]))
        wins = sum(1 for g in gaps if g["gap"] > 0)
        out.update({"target": target, "baseline": baseline, "gaps": gaps,
                    "fraction_outperformed": wins / len(gaps)})
    return out


def ablate(cfg: RunConfig, output_dir: str | Path) -> Path:
    """Run the full policy and its four reduced variants with identical seeds,
    then emit a normalized side-by-side table."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, overrides in ABLATION_VARIANTS.items():
        vcfg = replace(cfg, retrieval={**cfg.retrieval, **overrides},
                       policies=[{"id": name, "type": "rag"}])
        run(vcfg, out / name)
    summary = compare([out / name for name in ABLATION_VARIANTS])
    dump_json(out / "ablation.json", summary)
    return out


def _median_errors(run_dir: Path) -> dict[tuple[str, int, int], list[tuple[int, float]]]:
    """(policy, context_size) -> [(train_size, median error across datasets)]."""
    rows = load_json(Path(run_dir) / "metrics.json")["metrics"]
    grouped: dict = {}
    for r in rows:
        if r["value"] is None or "train_size" not in r:
            continue
        err = 1.0 - r["value"] if r["metric"] == mt.METRIC_AUROC else r["value"]
        key = (r["policy"], r["context_size"], r["predictor"])
        grouped.setdefault(key, {}).setdefault(r["train_size"], []).append(err)
    out = {}
    for key, per_size in grouped.items():
        out[key] = sorted((size, float(np.median(v))) for size, v in per_size.items())
    return out


def scaling(cfg: RunConfig, sizes: list[int], output_dir: str | Path) -> Path:
    """Sweep nested training-pool sizes for the retrieval policy and the
    random baseline, then fit the error-vs-size power law per group."""
    out = Path(output_dir)
    vcfg = replace(cfg, train_sizes=sorted(sizes),
                   policies=[{"id": "rag", "type": "rag"}, {"id": "random", "type": "random"}])
    run(vcfg, out)
    fits = {}
    for (policy, ctx_size, predictor), pts in sorted(_median_errors(out).items()):
        usable = [(d, l) for d, l in pts if l > 0]
        key = f"{policy}/{predictor}/c{ctx_size}"
        if len(usable) >= 2:
            fits[key] = mt.fit_power_law(usable).to_dict()
        else:
            fits[key] = {"error": "fewer than 2 positive-error points", "points": pts}
    dump_json(out / "fits.json", fits)
    return out


# ---------------------------------------------------------------------------
# argparse wiring


def _add_run_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output-dir", "-o", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--quota", type=int, default=None)
    p.add_argument("--traces", action="store_true")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if getattr(args, "quota", None) is not None:
        cfg.context_sizes = [args.quota]
    if getattr(args, "traces", False):
        cfg.write_traces = True
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tabctx",
                                     description="Context retrieval benchmark harness for tabular data")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a benchmark config")
    p_run.add_argument("config")
    _add_run_overrides(p_run)

    p_val = sub.add_parser("validate-config", help="check a config without running it")
    p_val.add_argument("config")

    p_cmp = sub.add_parser("compare", help="per-dataset comparison of metric files")
    p_cmp.add_argument("paths", nargs="+")
    p_cmp.add_argument("--target", default=None)
    p_cmp.add_argument("--baseline", default=None)
    p_cmp.add_argument("--out", default=None)

    p_abl = sub.add_parser("ablate", help="run the retrieval ablation variants")
    p_abl.add_argument("config")
    _add_run_overrides(p_abl)

    p_sca = sub.add_parser("scaling", help="training-size sweep plus power-law fit")
    p_sca.add_argument("config")
    p_sca.add_argument("--sizes", required=True, help="comma-separated ascending pool sizes")
    _add_run_overrides(p_sca)

    p_fit = sub.add_parser("fit-powerlaw", help="fit (size, error) points")
    p_fit.add_argument("--points", help="JSON file of [D, L] pairs")
    p_fit.add_argument("--run-dir", help="run directory to pull median errors from")
    p_fit.add_argument("--out", default=None)

    p_bnd = sub.add_parser("boundary", help="export a decision-boundary grid for a toy dataset")
    p_bnd.add_argument("--shape", choices=("circle", "moon", "linear_rotation"), default="circle")
    p_bnd.add_argument("--noise", type=float, default=0.1)
    p_bnd.add_argument("--n-train", type=int, default=64)
    p_bnd.add_argument("--seed", type=int, default=0)
    p_bnd.add_argument("--resolution", type=int, default=100)
    p_bnd.add_argument("--quota", type=int, default=16)
    p_bnd.add_argument("--importance-mode", choices=IMPORTANCE_MODES, default="dual")
    p_bnd.add_argument("--numeric-norm", choices=nz.MODES, default="quantile")
    p_bnd.add_argument("--no-rescale", action="store_true")
    p_bnd.add_argument("--output-dir", "-o", default="boundary_out")

    args = parser.parse_args(argv)

    if args.verb == "run":
        out = run(_load_config(args))
        print(f"run complete: {out}")
        return 0
    if args.verb == "validate-config":
        problems = validate_config(RunConfig.from_file(args.config))
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        print("config ok" if not problems else f"{len(problems)} problem(s)")
        return 1 if problems else 0
    if args.verb == "compare":
        result = compare(args.paths, args.target, args.baseline)
        text = json.dumps(result, indent=2)
        if args.out:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(text)
        return 0
    if args.verb == "ablate":
        out = ablate(_load_config(args), args.output_dir or "ablation_out")
        print(f"ablation complete: {out}")
        return 0
    if args.verb == "scaling":
        sizes = [int(s) for s in args.sizes.split(",")]
        out = scaling(_load_config(args), sizes, args.output_dir or "scaling_out")
        print(f"scaling sweep complete: {out}")
        return 0
    if args.verb == "fit-powerlaw":
        if args.points:
            fit = mt.fit_power_law(load_json(args.points))
            payload = fit.to_dict()
        elif args.run_dir:
            payload = {}
            for (policy, ctx, predictor), pts in sorted(_median_errors(Path(args.run_dir)).items()):
                usable = [(d, l) for d, l in pts if l > 0]
                if len(usable) >= 2:
                    payload[f"{policy}/{predictor}/c{ctx}"] = mt.fit_power_law(usable).to_dict()
        else:
            print("error: need --points or --run-dir", file=sys.stderr)
            return 1
        text = json.dumps(payload, indent=2)
        if args.out:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(text)
        return 0
    if args.verb == "boundary":
        spec = ToySpec(args.shape, args.noise, args.n_train, args.seed)
        d = generate_toy(spec)
        rcfg = RetrievalConfig(quota=args.quota, importance_mode=args.importance_mode,
                               numeric_norm=args.numeric_norm,
                               distance_minmax_rescale=not args.no_rescale)
        pool = build_pool(d, np.arange(d.n_rows), rcfg)
        grid = boundary_grid(pool, lambda ctx, q: knn_predict(ctx, pool), rcfg, args.resolution)
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_grid(grid, out / "grid.csv", out / "grid.json")
        print(f"grid written: {out}")
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
