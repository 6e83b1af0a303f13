"""Stage orchestration: graph → lift → featurize → wavelets → eval/cluster.

Each stage is timed into the run manifest; errors are re-raised with the
stage name attached and any files already written by the failing run are
removed.  The expensive featurize+wavelet product is content-addressed by
input digests and the relevant config subset, so re-evaluating an existing
embedding never recomputes it when ``HYPERWAVE_CACHE_DIR`` is set.
"""

import json
import os
import shutil
import time
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

from . import __version__, formats
from .backends import HAS_NUMBA
from .config import RunConfig, config_from_snapshot, config_snapshot
from .diffusion import DiffusionOperator
from .errors import ConfigError, DataError, HyperwaveError
from .evaluation import linear_probe, spectral_cluster, vendi_score
from .ingest import ingest, read_cells
from .niche import (
    build_spatial_graph,
    hyperedge_features,
    khop_lift,
    lognormalize,
    niche_representations,
)

CACHE_ENV = "HYPERWAVE_CACHE_DIR"


def set_threads(threads: int) -> None:
    """Honor the --threads contract; 1 guarantees bitwise determinism."""
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    if HAS_NUMBA:
        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


@contextmanager
def _stage(name: str, timings: list):
    start = time.perf_counter()
    try:
        yield
    except HyperwaveError as exc:
        exc.args = (f"stage {name}: {exc}",)
        raise
    finally:
        timings.append({"name": name, "seconds": time.perf_counter() - start})


def _probe_dict(report) -> dict:
    doc = {
        "mean_accuracy": report.mean_accuracy,
        "std_accuracy": report.std_accuracy,
        "mean_macro_f1": report.mean_macro_f1,
        "std_macro_f1": report.std_macro_f1,
        "mean_auroc_ovr": report.mean_auroc_ovr,
        "std_auroc_ovr": report.std_auroc_ovr,
        "all_converged": report.all_converged,
        "per_seed": [],
    }
    for m in report.per_seed:
        doc["per_seed"].append({
            "split_seed": m.split_seed,
            "accuracy": m.accuracy,
            "macro_f1": m.macro_f1,
            "auroc_ovr": m.auroc_ovr,
            "converged": m.converged,
            "final_grad_norm": m.final_grad_norm,
            "iterations": m.iterations,
            "per_class": [asdict(c) for c in m.per_class],
        })
    return doc


def _label_column(dataset, name: str):
    return {
        "condition": dataset.condition,
        "cell_type": dataset.cell_types,
        "subclass": dataset.subclasses,
        "supertype": dataset.supertypes,
    }[name]


def _cache_key(cfg: RunConfig, cells_digest: str, expr_digest: str) -> str:
    snap = config_snapshot(cfg)
    payload = json.dumps({
        "cells": cells_digest,
        "expression": expr_digest,
        "niche": snap["niche"],
        "wavelets": snap["wavelets"],
        "version": __version__,
    }, sort_keys=True)
    return formats.sha256_text(payload)


def _resolve_cache_dir(cache_dir):
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV)
    return Path(cache_dir) if cache_dir else None


def run_pipeline(cfg: RunConfig, out_dir, cache_dir=None) -> dict:
    """Execute the full pipeline; returns output paths plus the manifest."""
    if cfg.cells is None or cfg.expression is None:
        raise ConfigError("config must name both inputs.cells and inputs.expression")
    set_threads(cfg.threads)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = formats.output_paths(out_dir)
    created = []
    try:
        manifest = _run_stages(cfg, paths, created, _resolve_cache_dir(cache_dir))
    except Exception:
        for p in created:
            Path(p).unlink(missing_ok=True)
        raise
    return {"paths": paths, "manifest": manifest}


def _run_stages(cfg: RunConfig, paths: dict, created: list, cache_dir) -> dict:
    timings = []

    with _stage("ingest", timings):
        for label, p in (("cells", cfg.cells), ("expression", cfg.expression)):
            if not Path(p).is_file():
                raise DataError(f"{label} file not found: {p}")
        cells_digest = formats.sha256_file(cfg.cells)
        expr_digest = formats.sha256_file(cfg.expression)
        dataset = ingest(cfg.cells, cfg.expression)

    key = _cache_key(cfg, cells_digest, expr_digest)
    cache_hit = False
    jitter_log = []
    if cache_dir is not None:
        entry = cache_dir / key
        if (entry / "meta.json").is_file():
            with _stage("cache_restore", timings):
                shutil.copyfile(entry / "representations.bin", paths["representations"])
                created.append(paths["representations"])
                shutil.copyfile(entry / "niche_features.csv", paths["niche_features"])
                created.append(paths["niche_features"])
                meta = formats.read_json(entry / "meta.json")
                jitter_log = [tuple(j) for j in meta["jitter"]]
                representations = formats.read_matrix(paths["representations"])
                anchor_ids = dataset.cell_ids
                cache_hit = True

    if not cache_hit:
        with _stage("graph", timings):
            contact = build_spatial_graph(dataset.coords, cfg.niche, jitter_log)
        with _stage("lift", timings):
            lifted = khop_lift(contact, cfg.niche.hop_k)
            anchor_ids = dataset.cell_ids[lifted.anchors]
        with _stage("featurize", timings):
            norm_expr = lognormalize(dataset.expression)
            op = DiffusionOperator(lifted)
            fm = hyperedge_features(lifted, norm_expr, dataset.type_levels, cfg.niche, op,
                                    gene_names=dataset.gene_names)
        with _stage("wavelets", timings):
            representations = niche_representations(lifted, fm, cfg.scales)
        with _stage("write_embedding", timings):
            formats.write_matrix(paths["representations"], representations)
            created.append(paths["representations"])
            formats.write_matrix_csv(paths["niche_features"], fm.values, fm.headers(),
                                     anchor_ids, "anchor_cell_id")
            created.append(paths["niche_features"])
        if cache_dir is not None:
            entry = cache_dir / key
            entry.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(paths["representations"], entry / "representations.bin")
            shutil.copyfile(paths["niche_features"], entry / "niche_features.csv")
            formats.write_json(entry / "meta.json", {"jitter": [list(j) for j in jitter_log]})

    if cfg.write_representations_csv:
        with _stage("write_embedding_csv", timings):
            rep_headers = [f"r{i:05d}" for i in range(representations.shape[1])]
            formats.write_matrix_csv(paths["representations_csv"], representations,
                                     rep_headers, anchor_ids, "anchor_cell_id")
            created.append(paths["representations_csv"])

    metrics = {"probe": None, "vendi": None, "clustering": None}
    labels = _label_column(dataset, cfg.probe_label).labels()
    with _stage("vendi", timings):
        metrics["vendi"] = {
            "kernel": cfg.vendi_kernel,
            "standardize": cfg.vendi_standardize,
            "score": vendi_score(representations, kernel=cfg.vendi_kernel,
                                 standardize=cfg.vendi_standardize),
        }
    with _stage("probe", timings):
        probe = {"label": cfg.probe_label,
                 "representation": _probe_dict(linear_probe(representations, labels, cfg.eval))}
        if cfg.baseline:
            baseline_features = lognormalize(dataset.expression)
            probe["baseline"] = _probe_dict(linear_probe(baseline_features, labels, cfg.eval))
        else:
            probe["baseline"] = None
        metrics["probe"] = probe
    if cfg.cluster.enabled:
        with _stage("cluster", timings):
            result = spectral_cluster(representations, cfg.cluster.n_clusters,
                                      n_neighbors=cfg.cluster.n_neighbors,
                                      seed=cfg.cluster.seed, restarts=cfg.cluster.restarts)
            formats.write_clusters_csv(paths["clusters"], anchor_ids, result.labels)
            created.append(paths["clusters"])
            metrics["clustering"] = {
                "n_clusters": result.n_clusters,
                "inertia": result.inertia,
                "used_fallback": result.used_fallback,
            }

    with _stage("write_reports", timings):
        formats.write_json(paths["metrics"], metrics)
        created.append(paths["metrics"])
        manifest = {
            "library_version": __version__,
            "config": config_snapshot(cfg),
            "inputs": {
                "cells": {"path": cfg.cells, "sha256": cells_digest},
                "expression": {"path": cfg.expression, "sha256": expr_digest},
            },
            "seeds": {
                "probe_seeds": list(cfg.eval.seeds),
                "kmeans_seed": cfg.cluster.seed,
                "synth_seed": None if cfg.synth is None else cfg.synth.seed,
            },
            "jitter": [{"index": i, "dx": dx, "dy": dy} for i, dx, dy in jitter_log],
            "cache": {"key": key, "hit": cache_hit,
                      "dir": None if cache_dir is None else str(cache_dir)},
            "stage_timings": timings,
            "outputs": {},
        }
        for name, p in paths.items():
            if name != "manifest" and Path(p).is_file():
                manifest["outputs"][name] = {"path": str(p), "sha256": formats.sha256_file(p)}
        formats.write_json(paths["manifest"], manifest)
        created.append(paths["manifest"])
    return manifest


def rerun_from_manifest(manifest_path, out_dir, cache_dir=None) -> dict:
    """Re-execute a run from its manifest's config snapshot."""
    manifest = formats.read_json(manifest_path)
    if "config" not in manifest:
        raise DataError(f"{manifest_path}: manifest has no config snapshot")
    cfg = config_from_snapshot(manifest["config"])
    return run_pipeline(cfg, out_dir, cache_dir=cache_dir)


def eval_only(cfg: RunConfig, out_dir) -> dict:
    """Recompute metrics.json from an existing representations.bin."""
    set_threads(cfg.threads)
    out_dir = Path(out_dir)
    paths = formats.output_paths(out_dir)
    if not Path(paths["representations"]).is_file():
        raise DataError(f"no representations.bin under {out_dir}; run the pipeline first")
    if cfg.cells is None or cfg.expression is None:
        raise ConfigError("config must name both inputs.cells and inputs.expression")
    representations = formats.read_matrix(paths["representations"])
    dataset = ingest(cfg.cells, cfg.expression)
    if representations.shape[0] != dataset.n:
        raise DataError(
            f"representations have {representations.shape[0]} rows for {dataset.n} cells")
    labels = _label_column(dataset, cfg.probe_label).labels()
    metrics = {
        "vendi": {
            "kernel": cfg.vendi_kernel,
            "standardize": cfg.vendi_standardize,
            "score": vendi_score(representations, kernel=cfg.vendi_kernel,
                                 standardize=cfg.vendi_standardize),
        },
        "probe": {"label": cfg.probe_label,
                  "representation": _probe_dict(linear_probe(representations, labels, cfg.eval)),
                  "baseline": None},
        "clustering": None,
    }
    if cfg.baseline:
        metrics["probe"]["baseline"] = _probe_dict(
            linear_probe(lognormalize(dataset.expression), labels, cfg.eval))
    formats.write_json(paths["metrics"], metrics)
    _refresh_manifest(paths, ("metrics",))
    return metrics


def cluster_only(cfg: RunConfig, out_dir) -> dict:
    """Recompute clusters.csv from an existing representations.bin."""
    set_threads(cfg.threads)
    out_dir = Path(out_dir)
    paths = formats.output_paths(out_dir)
    if not Path(paths["representations"]).is_file():
        raise DataError(f"no representations.bin under {out_dir}; run the pipeline first")
    if cfg.cells is None:
        raise ConfigError("config must name inputs.cells (for anchor ids)")
    representations = formats.read_matrix(paths["representations"])
    cell_ids, _, _ = read_cells(cfg.cells)
    if representations.shape[0] != cell_ids.shape[0]:
        raise DataError(
            f"representations have {representations.shape[0]} rows for "
            f"{cell_ids.shape[0]} cells")
    result = spectral_cluster(representations, cfg.cluster.n_clusters,
                              n_neighbors=cfg.cluster.n_neighbors,
                              seed=cfg.cluster.seed, restarts=cfg.cluster.restarts)
    formats.write_clusters_csv(paths["clusters"], cell_ids, result.labels)
    _refresh_manifest(paths, ("clusters",))
    return {
        "n_clusters": result.n_clusters,
        "inertia": result.inertia,
        "used_fallback": result.used_fallback,
    }


def _refresh_manifest(paths: dict, names) -> None:
    manifest_path = Path(paths["manifest"])
    if not manifest_path.is_file():
        return
    manifest = formats.read_json(manifest_path)
    for name in names:
        p = Path(paths[name])
        if p.is_file():
            manifest.setdefault("outputs", {})[name] = {
                "path": str(p), "sha256": formats.sha256_file(p)}
    formats.write_json(manifest_path, manifest)
