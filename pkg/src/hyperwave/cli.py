"""Command-line front door.

Subcommands: ``synth`` (write a synthetic fixture), ``ingest-check``
(validate inputs and print a summary), ``run`` (full pipeline, or a rerun
via ``--from-manifest``), ``eval-only`` and ``cluster-only`` (recompute one
report from an existing embedding).  Exit codes: 0 success, 2 config
error, 3 data error, 4 numerical failure.
"""

import argparse
import dataclasses
import sys
import traceback

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, HyperwaveError
from .ingest import ingest
from .pipeline import CACHE_ENV, cluster_only, eval_only, rerun_from_manifest, run_pipeline
from .synth import SynthConfig, generate, write_fixture


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperwave",
        description="Hypergraph diffusion-wavelet niche embeddings for spatial omics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, out_required=True, config_required=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=config_required,
                       help="TOML config file")
        if out_required is not None:
            p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (1 = bitwise deterministic)")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override (synth generator / k-means)")
        return p

    run = add("run", "execute the full pipeline", config_required=False)
    run.add_argument("--from-manifest", default=None,
                     help="rerun from a manifest.json config snapshot")
    run.add_argument("--cache", default=None,
                     help=f"cache directory (default: ${CACHE_ENV})")
    add("eval-only", "recompute metrics.json from an existing embedding")
    add("cluster-only", "recompute clusters.csv from an existing embedding")
    add("ingest-check", "parse and validate the input files", out_required=None)
    add("synth", "write a deterministic synthetic fixture", config_required=False)
    return parser


def _load_run_config(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required unless --from-manifest is given")
    cfg = load_config(args.config)
    if getattr(args, "threads", None) is not None:
        cfg = dataclasses.replace(cfg, threads=args.threads)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg, cluster=dataclasses.replace(cfg.cluster, seed=args.seed))
    return cfg


def _cmd_run(args) -> int:
    if args.from_manifest is not None:
        result = rerun_from_manifest(args.from_manifest, args.out, cache_dir=args.cache)
    else:
        result = run_pipeline(_load_run_config(args), args.out, cache_dir=args.cache)
    manifest = result["manifest"]
    print(f"wrote {len(manifest['outputs'])} outputs to {args.out}")
    for entry in manifest["stage_timings"]:
        print(f"  {entry['name']:<20s} {entry['seconds']:8.3f} s")
    return 0


def _cmd_eval_only(args) -> int:
    metrics = eval_only(_load_run_config(args), args.out)
    rep = metrics["probe"]["representation"]
    print(f"vendi score: {metrics['vendi']['score']:.4f}")
    print(f"probe accuracy: {rep['mean_accuracy']:.4f} +/- {rep['std_accuracy']:.4f}")
    print(f"probe auroc:    {rep['mean_auroc_ovr']:.4f} +/- {rep['std_auroc_ovr']:.4f}")
    return 0


def _cmd_cluster_only(args) -> int:
    result = cluster_only(_load_run_config(args), args.out)
    flag = " (fallback to raw rows)" if result["used_fallback"] else ""
    print(f"clustered into {result['n_clusters']} groups{flag}")
    return 0


def _cmd_ingest_check(args) -> int:
    cfg = _load_run_config(args)
    if cfg.cells is None or cfg.expression is None:
        raise ConfigError("config must name both inputs.cells and inputs.expression")
    ds = ingest(cfg.cells, cfg.expression)
    print(f"cells: {ds.n}")
    print(f"genes: {ds.q}")
    for name, cat in ds.type_levels + (("condition", ds.condition),):
        print(f"{name} vocabulary: {cat.size}")
    return 0


def _cmd_synth(args) -> int:
    synth_cfg = SynthConfig()
    if args.config is not None:
        cfg = load_config(args.config)
        if cfg.synth is not None:
            synth_cfg = cfg.synth
    if args.seed is not None:
        synth_cfg = dataclasses.replace(synth_cfg, seed=args.seed)
    result = generate(synth_cfg)
    paths = write_fixture(result, args.out)
    print(f"wrote {result.coords.shape[0]} cells, {len(result.gene_names)} genes")
    for name, p in paths.items():
        print(f"  {name}: {p}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "eval-only": _cmd_eval_only,
    "cluster-only": _cmd_cluster_only,
    "ingest-check": _cmd_ingest_check,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except HyperwaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception:  # pragma: no cover - unexpected failure path
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
