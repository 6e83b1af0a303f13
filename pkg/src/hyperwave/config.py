"""Run configuration: strict TOML parsing and manifest snapshots.

Unknown keys are rejected rather than ignored so typos fail fast.  A parsed
config can be serialized to a plain-dict snapshot (stored in the run
manifest) and rebuilt from it, which is what makes manifest-driven reruns
self-contained.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .evaluation import EvalConfig
from .niche import NicheConfig
from .synth import SynthConfig
from .wavelets import ScaleSequence, dyadic_scales

PROBE_LABELS = ("condition", "cell_type", "subclass", "supertype")


@dataclass(frozen=True)
class ClusterConfig:
    enabled: bool = True
    n_clusters: int = 8
    n_neighbors: int = 15
    seed: int = 0
    restarts: int = 20

    def __post_init__(self):
        if self.n_clusters < 2:
            raise ConfigError(f"n_clusters must be >= 2, got {self.n_clusters}")
        if self.n_neighbors < 1 or self.restarts < 1:
            raise ConfigError("n_neighbors and restarts must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    cells: Optional[str]
    expression: Optional[str]
    niche: NicheConfig
    scales: ScaleSequence
    eval: EvalConfig
    cluster: ClusterConfig
    synth: Optional[SynthConfig]
    probe_label: str = "condition"
    vendi_kernel: str = "cosine"
    vendi_standardize: bool = True
    baseline: bool = True
    write_representations_csv: bool = True
    threads: int = 1


def _check_keys(table: dict, allowed, section: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{section}]")


def _typed(table: dict, key: str, kinds, default, section: str):
    if key not in table:
        return default
    value = table[key]
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"[{section}] {key} has wrong type bool")
    if not isinstance(value, tuple(kinds)):
        names = "/".join(k.__name__ for k in kinds)
        raise ConfigError(f"[{section}] {key} must be {names}, got {type(value).__name__}")
    return value


def _int_list(table: dict, key: str, default, section: str):
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"[{section}] {key} must be a list of integers")
    return tuple(value)


def _parse_niche(table: dict) -> NicheConfig:
    _check_keys(table, {"graph_method", "knn_k", "hop_k", "gene_pairs",
                        "top_variance_genes", "min_cells_for_correlation"}, "niche")
    gene_pairs = None
    if "gene_pairs" in table:
        raw = table["gene_pairs"]
        ok = isinstance(raw, list) and all(
            isinstance(p, list) and len(p) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in p) for p in raw)
        if not ok:
            raise ConfigError("[niche] gene_pairs must be a list of [int, int] pairs")
        gene_pairs = tuple(tuple(p) for p in raw)
    return NicheConfig(
        graph_method=_typed(table, "graph_method", [str], "delaunay", "niche"),
        knn_k=_typed(table, "knn_k", [int], 6, "niche"),
        hop_k=_typed(table, "hop_k", [int], 3, "niche"),
        gene_pairs=gene_pairs,
        top_variance_genes=_typed(table, "top_variance_genes", [int], 20, "niche"),
        min_cells_for_correlation=_typed(table, "min_cells_for_correlation", [int], 3, "niche"),
    )


def _parse_scales(table: dict) -> ScaleSequence:
    _check_keys(table, {"scales", "levels"}, "wavelets")
    if "scales" in table and "levels" in table:
        raise ConfigError("[wavelets] give either scales or levels, not both")
    if "scales" in table:
        return ScaleSequence(_int_list(table, "scales", None, "wavelets"))
    return dyadic_scales(_typed(table, "levels", [int], 4, "wavelets"))


def _parse_eval(table: dict) -> EvalConfig:
    _check_keys(table, {"standardize", "train_fraction", "l2_penalty", "max_iterations",
                        "tolerance", "seeds"}, "eval")
    return EvalConfig(
        standardize=_typed(table, "standardize", [bool], True, "eval"),
        train_fraction=float(_typed(table, "train_fraction", [int, float], 0.8, "eval")),
        l2_penalty=float(_typed(table, "l2_penalty", [int, float], 1e-2, "eval")),
        max_iterations=_typed(table, "max_iterations", [int], 500, "eval"),
        tolerance=float(_typed(table, "tolerance", [int, float], 1e-8, "eval")),
        seeds=_int_list(table, "seeds", (0, 1, 2, 3, 4), "eval"),
    )


def _parse_cluster(table: dict) -> ClusterConfig:
    _check_keys(table, {"enabled", "n_clusters", "n_neighbors", "seed", "restarts"}, "cluster")
    return ClusterConfig(
        enabled=_typed(table, "enabled", [bool], True, "cluster"),
        n_clusters=_typed(table, "n_clusters", [int], 8, "cluster"),
        n_neighbors=_typed(table, "n_neighbors", [int], 15, "cluster"),
        seed=_typed(table, "seed", [int], 0, "cluster"),
        restarts=_typed(table, "restarts", [int], 20, "cluster"),
    )


def _parse_synth(table: dict) -> SynthConfig:
    allowed = {"grid_side", "n_archetypes", "n_conditions", "n_genes", "tile",
               "section_gap", "jitter", "diag_weight", "preferred_weight",
               "marker_strength", "base_rate", "n_supertypes", "seed",
               "archetype_mixtures"}
    _check_keys(table, allowed, "synth")
    kwargs = {}
    for key in allowed - {"archetype_mixtures", "section_gap", "jitter", "diag_weight",
                          "preferred_weight", "marker_strength", "base_rate"}:
        if key in table:
            kwargs[key] = _typed(table, key, [int], None, "synth")
    for key in ("section_gap", "jitter", "diag_weight", "preferred_weight",
                "marker_strength", "base_rate"):
        if key in table:
            kwargs[key] = float(_typed(table, key, [int, float], None, "synth"))
    if "archetype_mixtures" in table:
        raw = table["archetype_mixtures"]
        ok = isinstance(raw, list) and all(
            isinstance(r, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                        for v in r) for r in raw)
        if not ok:
            raise ConfigError("[synth] archetype_mixtures must be a list of number lists")
        kwargs["archetype_mixtures"] = tuple(tuple(float(v) for v in r) for r in raw)
    return SynthConfig(**kwargs)


def parse_config(document: dict, base_dir=".") -> RunConfig:
    """Validate a parsed TOML document; input paths resolve against base_dir."""
    if not isinstance(document, dict):
        raise ConfigError("config root must be a table")
    _check_keys(document, {"threads", "inputs", "niche", "wavelets", "eval",
                           "cluster", "output", "synth"}, "root")
    base = Path(base_dir)

    inputs = document.get("inputs", {})
    _check_keys(inputs, {"cells", "expression"}, "inputs")
    cells = _typed(inputs, "cells", [str], None, "inputs")
    expression = _typed(inputs, "expression", [str], None, "inputs")

    output = document.get("output", {})
    _check_keys(output, {"probe_label", "vendi_kernel", "vendi_standardize",
                         "baseline", "write_representations_csv"}, "output")
    probe_label = _typed(output, "probe_label", [str], "condition", "output")
    if probe_label not in PROBE_LABELS:
        raise ConfigError(f"[output] probe_label must be one of {PROBE_LABELS}")
    vendi_kernel = _typed(output, "vendi_kernel", [str], "cosine", "output")
    if vendi_kernel not in ("cosine", "rbf"):
        raise ConfigError("[output] vendi_kernel must be 'cosine' or 'rbf'")

    return RunConfig(
        cells=str((base / cells).resolve()) if cells is not None else None,
        expression=str((base / expression).resolve()) if expression is not None else None,
        niche=_parse_niche(document.get("niche", {})),
        scales=_parse_scales(document.get("wavelets", {})),
        eval=_parse_eval(document.get("eval", {})),
        cluster=_parse_cluster(document.get("cluster", {})),
        synth=_parse_synth(document["synth"]) if "synth" in document else None,
        probe_label=probe_label,
        vendi_kernel=vendi_kernel,
        vendi_standardize=_typed(output, "vendi_standardize", [bool], True, "output"),
        baseline=_typed(output, "baseline", [bool], True, "output"),
        write_representations_csv=_typed(
            output, "write_representations_csv", [bool], True, "output"),
        threads=_typed(document, "threads", [int], 1, "root"),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            document = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(document, base_dir=path.parent)


def config_snapshot(cfg: RunConfig) -> dict:
    """Plain-dict form of a resolved config, as stored in manifests."""
    snap = {
        "threads": cfg.threads,
        "inputs": {"cells": cfg.cells, "expression": cfg.expression},
        "niche": {
            "graph_method": cfg.niche.graph_method,
            "knn_k": cfg.niche.knn_k,
            "hop_k": cfg.niche.hop_k,
            "gene_pairs": None if cfg.niche.gene_pairs is None
            else [list(p) for p in cfg.niche.gene_pairs],
            "top_variance_genes": cfg.niche.top_variance_genes,
            "min_cells_for_correlation": cfg.niche.min_cells_for_correlation,
        },
        "wavelets": {"scales": list(cfg.scales.scales)},
        "eval": {
            "standardize": cfg.eval.standardize,
            "train_fraction": cfg.eval.train_fraction,
            "l2_penalty": cfg.eval.l2_penalty,
            "max_iterations": cfg.eval.max_iterations,
            "tolerance": cfg.eval.tolerance,
            "seeds": list(cfg.eval.seeds),
        },
        "cluster": {
            "enabled": cfg.cluster.enabled,
            "n_clusters": cfg.cluster.n_clusters,
            "n_neighbors": cfg.cluster.n_neighbors,
            "seed": cfg.cluster.seed,
            "restarts": cfg.cluster.restarts,
        },
        "output": {
            "probe_label": cfg.probe_label,
            "vendi_kernel": cfg.vendi_kernel,
            "vendi_standardize": cfg.vendi_standardize,
            "baseline": cfg.baseline,
            "write_representations_csv": cfg.write_representations_csv,
        },
    }
    if cfg.synth is not None:
        s = cfg.synth
        snap["synth"] = {
            "grid_side": s.grid_side, "n_archetypes": s.n_archetypes,
            "n_conditions": s.n_conditions, "n_genes": s.n_genes, "tile": s.tile,
            "section_gap": s.section_gap, "jitter": s.jitter,
            "diag_weight": s.diag_weight, "preferred_weight": s.preferred_weight,
            "marker_strength": s.marker_strength, "base_rate": s.base_rate,
            "n_supertypes": s.n_supertypes, "seed": s.seed,
            "archetype_mixtures": None if s.archetype_mixtures is None
            else [list(r) for r in s.archetype_mixtures],
        }
    return snap


def config_from_snapshot(snapshot: dict) -> RunConfig:
    """Rebuild a RunConfig from a manifest snapshot (paths already resolved)."""
    document = {k: (dict(v) if isinstance(v, dict) else v) for k, v in snapshot.items()}
    for section in ("niche", "synth"):
        if section in document and isinstance(document[section], dict):
            document[section] = {k: v for k, v in document[section].items() if v is not None}
    inputs = document.get("inputs", {})
    document["inputs"] = {k: v for k, v in inputs.items() if v is not None}
    return parse_config(document, base_dir=".")
