"""``heteroflow`` command-line entry point.

Exit codes: 0 success, 1 usage or I/O problem, 2 invalid input, 3 numerical
failure.
"""

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, config, datagen, dynamics, io, models, pipeline
from .errors import HeteroflowError, InvalidConfig, ValidationError
from .graph import Graph

PRESETS = {
    "desk": {"gen.backbone_count": 200, "gen.motif_variants": 5},
    # 500 backbones x 5 motifs x (positive, negative) = 5000 graphs per quadrant
    "paper": {"gen.backbone_count": 500, "gen.motif_variants": 5},
}

WEIGHT_PRESETS = ("neg-identity", "identity", "zero", "random")


# ------------------------------------------------------------------ helpers

def _out_dir(cfg):
    path = Path(cfg["run"]["out"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _snapshot(out, cfg, command):
    io.write_json(out / f"{command}.config.json",
                  {"command": command, "version": __version__, "seed": cfg["run"]["seed"], "config": cfg})


def _range(text, name):
    vals = config.parse_list(text, int)
    if len(vals) != 2:
        raise InvalidConfig(f"{name} must be 'lo,hi'")
    return tuple(vals)


def gen_config(cfg, quadrant):
    g = cfg["gen"]
    return datagen.GenConfig(
        seed=cfg["run"]["seed"],
        quadrant=quadrant,
        backbone_count=g["backbone_count"],
        motif_variants=g["motif_variants"],
        backbone_n_range=_range(g["backbone_n_range"], "backbone_n_range"),
        motif_n_range=_range(g["motif_n_range"], "motif_n_range"),
        noise_sigma=g["noise_sigma"],
        feature_dim=g["feature_dim"],
        num_classes=g["num_classes"],
        edge_mode=g["edge_mode"],
        embedding_seed=config.parse_optional(g["embedding_seed"], int),
    )


def _quadrants(cfg):
    qs = config.parse_list(cfg["gen"]["quadrants"])
    bad = [q for q in qs if q not in datagen.QUADRANTS]
    if bad or not qs:
        raise InvalidConfig(f"unknown quadrants {bad}; choose from {datagen.QUADRANTS}")
    return qs


def _ratios(cfg):
    r = config.parse_list(cfg["gen"]["ratios"], float)
    if len(r) != 3:
        raise InvalidConfig("ratios must have three entries")
    return tuple(r)


def train_config(cfg):
    t = cfg["train"]
    return models.TrainConfig(
        learning_rate=t["learning_rate"],
        epochs=t["epochs"],
        seed=cfg["run"]["seed"],
        task=t["task"],
        layers=t["layers"],
        hidden=config.parse_optional(t["hidden"], int),
        tau=t["tau"],
        dtype=t["dtype"],
    )


def _graph_source(spec, rng):
    """``barbell:k,p``, ``random:n`` or a path to a graph JSON file."""
    kind, _, arg = spec.partition(":")
    if kind == "barbell":
        k, p = _range(arg, "barbell")
        return dynamics.barbell_graph(k, p)
    if kind == "random":
        n = int(arg)
        return datagen.random_skeleton(n, rng)
    return Graph.from_dict(io.read_json(spec))


def _weight_source(spec, d, rng):
    if spec == "neg-identity":
        return dynamics.WeightSpec(-np.eye(d))
    if spec == "identity":
        return dynamics.WeightSpec(np.eye(d))
    if spec == "zero":
        return dynamics.WeightSpec(np.zeros((d, d)))
    if spec == "random":
        return dynamics.WeightSpec(dynamics.random_weight(rng, d))
    obj = io.read_json(spec)
    w = np.asarray(obj["w"] if isinstance(obj, dict) else obj, dtype=np.float64)
    return dynamics.WeightSpec(w)


def _load_quadrant(data_dir, quadrant):
    records = io.read_dataset(Path(data_dir) / f"{quadrant}.jsonl")
    idx = io.read_splits(Path(data_dir) / f"{quadrant}.splits.json")
    return records, idx


def _splits(records, idx):
    return tuple([records[i] for i in part] for part in idx)


# ----------------------------------------------------------------- commands

def cmd_gen(cfg, args):
    out = _out_dir(cfg)
    manifest = {"seed": cfg["run"]["seed"], "version": __version__, "quadrants": {}}
    for q in _quadrants(cfg):
        gcfg = gen_config(cfg, q)
        records, idx = pipeline.quadrant_splits(gcfg, _ratios(cfg))
        io.write_dataset(out / f"{q}.jsonl", records)
        io.write_splits(out / f"{q}.splits.json", idx, seed=gcfg.seed, ratios=list(_ratios(cfg)))
        pos = sum(r.graph_label for r in records)
        manifest["quadrants"][q] = {"records": len(records), "positives": pos, "negatives": len(records) - pos,
                                    "train": len(idx[0]), "val": len(idx[1]), "test": len(idx[2])}
        print(f"{q}: {len(records)} records ({pos} with motif)")
    io.write_json(out / "manifest.json", manifest)
    _snapshot(out, cfg, "gen")
    return 0


def cmd_split(cfg, args):
    records = io.read_dataset(args.dataset)
    rng = np.random.default_rng(cfg["run"]["seed"])
    idx = datagen.split_indices([r.graph_label for r in records], _ratios(cfg), rng)
    out = _out_dir(cfg)
    name = Path(args.dataset).name.removesuffix(".jsonl")
    io.write_splits(out / f"{name}.splits.json", idx, seed=cfg["run"]["seed"], ratios=list(_ratios(cfg)))
    _snapshot(out, cfg, "split")
    print(f"train {len(idx[0])}, val {len(idx[1])}, test {len(idx[2])}")
    return 0


def _graph_and_weight(cfg):
    s = cfg["simulate"]
    rng = np.random.default_rng(cfg["run"]["seed"])
    g = _graph_source(s["graph"], rng)
    w = _weight_source(s["weight"], s["dim"], rng)
    return g, w, rng


def cmd_regime(cfg, args):
    g, w, _ = _graph_and_weight(cfg)
    pred = dynamics.predict_regime(g, w)
    print(f"predicted {pred.regime}: margin {pred.margin:.6g}, lambda_max {pred.lambda_max:.6g}, "
          f"mu_min {pred.mu_min:.6g}, mu_max {pred.mu_max:.6g}")
    out = _out_dir(cfg)
    io.write_json(out / "regime.json", asdict(pred))
    _snapshot(out, cfg, "regime")
    return 0


def cmd_simulate(cfg, args):
    s = cfg["simulate"]
    g, w, rng = _graph_and_weight(cfg)
    f0 = rng.standard_normal((g.n, w.d))
    trace = dynamics.simulate(g, f0, w, s["tau"], s["steps"], s["variant"], s["renormalize"],
                              snapshot_every=s["steps"])
    pred = dynamics.predict_regime(g, w)
    degenerate = not np.any(w.w)
    empirical = dynamics.classify_regime_empirical(trace, g.spectrum, s["eps"])
    out = _out_dir(cfg)
    io.write_trace_csv(out / "trace.csv", trace)
    verdict = {"predicted": pred.regime, "empirical": empirical, "margin": pred.margin,
               "lambda_max": pred.lambda_max, "final_rayleigh": float(trace.rayleigh[-1]),
               "degenerate": degenerate}
    io.write_json(out / "verdict.json", verdict)
    _snapshot(out, cfg, "simulate")
    note = " (W = 0: degenerate, the features do not move)" if degenerate else ""
    print(f"predicted {pred.regime}, empirical {empirical}{note}")
    return 0


def _report_rows(result):
    r = result.report
    return [(k + 1, float(a), float(b)) for k, (a, b) in enumerate(zip(r.train_loss, r.val_loss))]


def _write_job(out, result, cfg):
    stem = out / f"{result.quadrant}.{result.family}.seed{result.seed}"
    r = result.report
    io.write_checkpoint(f"{stem}.checkpoint.json", r.params, config=cfg["train"], seed=result.seed)
    io.write_csv(f"{stem}.loss.csv", ("epoch", "train_loss", "val_loss"), _report_rows(result))
    io.write_json(f"{stem}.report.json", {
        "scenario": result.quadrant, "model": result.family, "seed": result.seed,
        "selected_epoch": r.selected_epoch, r.test_metric_name: r.test_metric,
        "mmd2": result.mmd.mmd2, "bandwidth": result.mmd.bandwidth, "shrink": result.shrink,
    })


def _write_summary(out, results):
    summary = pipeline.summarize(results)
    io.write_json(out / "summary.json", summary)
    rows = []
    for q in sorted(summary):
        for f in models.FAMILIES:
            cell = summary[q]["families"].get(f)
            if cell is not None:
                rows.append((q, f, cell["mmd2"], cell["metric"], "" if cell["quotient"] is None else cell["quotient"]))
    io.write_csv(out / "mmd_bars.csv", ("scenario", "model", "mmd2", "metric", "shrink_quotient"), rows)
    return summary


def _print_summary(summary):
    for q in sorted(summary):
        flags = summary[q]["flags"]
        cells = " ".join(f"{f}={c['mmd2']:.4f}" for f, c in summary[q]["families"].items())
        mark = "" if not flags else f"  adaptive_mix above baselines: {flags.get('mmd_above_baselines')}"
        print(f"{q}: {cells}{mark}")


def cmd_train(cfg, args):
    tcfg = train_config(cfg)
    families = config.parse_list(cfg["train"]["families"])
    for f in families:
        if f not in models.FAMILIES:
            raise InvalidConfig(f"unknown family {f!r}")
    seeds = config.parse_list(cfg["train"]["seeds"], int)
    datasets = {}
    if args.dataset:
        records = io.read_dataset(args.dataset)
        if args.splits:
            idx = io.read_splits(args.splits)
        else:
            idx = datagen.split_indices([r.graph_label for r in records], _ratios(cfg),
                                        np.random.default_rng(cfg["run"]["seed"]))
        datasets[Path(args.dataset).name.removesuffix(".jsonl")] = _splits(records, idx)
    else:
        for q in _quadrants(cfg):
            datasets[q] = _splits(*_load_quadrant(args.data, q))
    bandwidth = config.parse_optional(cfg["eval"]["bandwidth"], float)
    subsample = config.parse_optional(cfg["eval"]["subsample"], int)
    results = pipeline.run_train_eval(datasets, families, seeds, tcfg, cfg["run"]["jobs"], bandwidth, subsample)
    out = _out_dir(cfg)
    for r in results:
        _write_job(out, r, cfg)
        print(f"{r.quadrant} {r.family} seed {r.seed}: {r.report.test_metric_name} "
              f"{r.report.test_metric:.4f}, mmd2 {r.mmd.mmd2:.4f}, epoch {r.report.selected_epoch}")
    _print_summary(_write_summary(out, results))
    _snapshot(out, cfg, "train")
    return 0


def _checkpoints(run_dir):
    paths = sorted(Path(run_dir).glob("*.checkpoint.json"))
    if not paths:
        raise io.IoError(f"no checkpoints in {run_dir}")
    for p in paths:
        quadrant, family, seed = p.name.removesuffix(".checkpoint.json").split(".")
        yield quadrant, family, int(seed.removeprefix("seed")), io.read_checkpoint(p)


def cmd_eval_mmd(cfg, args):
    from . import metrics

    bandwidth = config.parse_optional(cfg["eval"]["bandwidth"], float)
    subsample = config.parse_optional(cfg["eval"]["subsample"], int)
    out = _out_dir(cfg)
    rows = []
    for q, f, seed, params in _checkpoints(args.run):
        records, idx = _load_quadrant(args.data, q)
        test = [records[i] for i in idx[2]]
        emb = models.embed_graphs(params, test)
        rng = np.random.default_rng(seed) if subsample else None
        res = metrics.class_mmd(emb, [r.graph_label for r in test], bandwidth, subsample, rng)
        io.write_json(out / f"{q}.{f}.seed{seed}.mmd.json",
                      {"scenario": q, "model": f, "seed": seed, "mmd2": res.mmd2, "bandwidth": res.bandwidth,
                       "p": res.p, "q": res.q})
        rows.append((q, f, seed, res.mmd2, res.bandwidth))
        print(f"{q} {f} seed {seed}: mmd2 {res.mmd2:.6g} (bandwidth {res.bandwidth:.4g})")
    io.write_csv(out / "mmd.csv", ("scenario", "model", "seed", "mmd2", "bandwidth"), rows)
    _snapshot(out, cfg, "eval-mmd")
    return 0


def cmd_shrink(cfg, args):
    out = _out_dir(cfg)
    rows = []
    for q, f, seed, params in _checkpoints(args.run):
        records, idx = _load_quadrant(args.data, q)
        shrink = pipeline.shrink_summary(params, [records[i] for i in idx[2]])
        io.write_json(out / f"{q}.{f}.seed{seed}.shrink.json",
                      {"scenario": q, "model": f, "seed": seed, "shrink": shrink})
        rows.append((q, f, seed, shrink["boundary"], shrink["intra"], shrink["quotient"]))
        print(f"{q} {f} seed {seed}: boundary {shrink['boundary']:.4f}, intra {shrink['intra']:.4f}")
    io.write_csv(out / "shrink.csv", ("scenario", "model", "seed", "boundary", "intra", "quotient"), rows)
    _snapshot(out, cfg, "shrink")
    return 0


def cmd_ingest(cfg, args):
    records = io.ingest_graph_regression(args.input, require_target=not args.no_target)
    out = _out_dir(cfg)
    name = Path(args.input).name.removesuffix(".jsonl")
    io.write_dataset(out / f"{name}.jsonl", records)
    _snapshot(out, cfg, "ingest")
    print(f"{len(records)} records ingested")
    return 0


def cmd_report(cfg, args):
    summary = io.read_json(Path(args.run) / "summary.json")
    _print_summary(summary)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "split": cmd_split,
    "simulate": cmd_simulate,
    "regime": cmd_regime,
    "train": cmd_train,
    "eval-mmd": cmd_eval_mmd,
    "shrink": cmd_shrink,
    "ingest": cmd_ingest,
    "report": cmd_report,
}


# ------------------------------------------------------------------ parsing

def build_parser():
    p = argparse.ArgumentParser(prog="heteroflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"heteroflow {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run], [gen], [simulate], [train], [eval] sections")
    common.add_argument("--seed", dest="run.seed", type=int)
    common.add_argument("--out", dest="run.out")
    common.add_argument("--jobs", dest="run.jobs", type=int)
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override any config value")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", parents=[common], help="generate the synthetic quadrants")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--quadrants", dest="gen.quadrants")
    s.add_argument("--backbones", dest="gen.backbone_count", type=int)
    s.add_argument("--motifs", dest="gen.motif_variants", type=int)

    s = sub.add_parser("split", parents=[common], help="stratified train/val/test split of a dataset file")
    s.add_argument("dataset")
    s.add_argument("--ratios", dest="gen.ratios")

    for name, text in (("simulate", "integrate the linear dynamics"), ("regime", "predict the frequency regime")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--graph", dest="simulate.graph", help="barbell:K,P | random:N | graph JSON file")
        s.add_argument("--weight", dest="simulate.weight", help=f"{' | '.join(WEIGHT_PRESETS)} | JSON file")
        s.add_argument("--dim", dest="simulate.dim", type=int)
        if name == "simulate":
            s.add_argument("--tau", dest="simulate.tau", type=float)
            s.add_argument("--steps", dest="simulate.steps", type=int)
            s.add_argument("--variant", dest="simulate.variant", choices=("simplified", "full"))
            s.add_argument("--no-renormalize", dest="simulate.renormalize", action="store_const", const=False)

    s = sub.add_parser("train", parents=[common], help="train and evaluate model families")
    s.add_argument("--data", default="out", help="directory written by 'gen'")
    s.add_argument("--dataset", help="single dataset file instead of the quadrant directory")
    s.add_argument("--splits", help="split file for --dataset")
    s.add_argument("--quadrants", dest="gen.quadrants")
    s.add_argument("--families", dest="train.families")
    s.add_argument("--seeds", dest="train.seeds")
    s.add_argument("--epochs", dest="train.epochs", type=int)
    s.add_argument("--task", dest="train.task", choices=("binary_classification", "regression"))

    for name, text in (("eval-mmd", "MMD between class embeddings of saved models"),
                       ("shrink", "boundary/intra shrink ratios of saved models")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--run", required=True, help="directory with checkpoints from 'train'")
        s.add_argument("--data", default="out", help="directory written by 'gen'")
        if name == "eval-mmd":
            s.add_argument("--bandwidth", dest="eval.bandwidth")
            s.add_argument("--subsample", dest="eval.subsample")

    s = sub.add_parser("ingest", parents=[common], help="validate a graph-regression JSON-lines file")
    s.add_argument("input")
    s.add_argument("--no-target", action="store_true", help="allow records without a target")

    s = sub.add_parser("report", parents=[common], help="print the summary of a training run")
    s.add_argument("--run", required=True)
    return p


def resolve(args):
    overrides = dict(PRESETS.get(getattr(args, "preset", None), {}))
    overrides.update({k: v for k, v in vars(args).items() if "." in k})
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidConfig(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    return config.load(args.config, overrides)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; usage maps to 1 here
        return 0 if exc.code == 0 else 1
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except HeteroflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
