"""Deterministic synthetic tissue generator for end-to-end oracles.

Cells sit on a jittered grid split into one spatial section per condition.
Each section is partitioned into square tiles, every tile is assigned a
"niche archetype" with frequencies given by the condition's archetype
mixture, each cell draws a (3-level) type from its archetype's composition,
and counts are Poisson with type-specific marker genes.  Conditions differ
only through archetype frequencies, so single-cell features carry weak
condition signal while neighborhood composition carries a strong one, and
the ground-truth archetype labels double as a clustering oracle.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidGeneratorConfigError
from .niche import Categorical, SpatialDataset


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs; every draw is a function of ``seed`` alone."""

    grid_side: int = 41
    n_archetypes: int = 3
    n_conditions: int = 3
    n_genes: int = 50
    tile: int = 6
    section_gap: float = 6.0
    jitter: float = 0.15
    diag_weight: float = 0.7
    preferred_weight: float = 0.8
    marker_strength: float = 3.0
    base_rate: float = 0.3
    n_supertypes: int = 12
    seed: int = 0
    archetype_mixtures: Optional[tuple] = None

    def __post_init__(self):
        if self.grid_side < 2:
            raise InvalidGeneratorConfigError(f"grid_side must be >= 2, got {self.grid_side}")
        if self.n_archetypes < 1 or self.n_conditions < 1:
            raise InvalidGeneratorConfigError("need at least 1 archetype and 1 condition")
        if self.n_genes < 1:
            raise InvalidGeneratorConfigError("n_genes must be >= 1")
        if self.tile < 1:
            raise InvalidGeneratorConfigError(f"tile must be >= 1, got {self.tile}")
        if not 0.0 <= self.jitter < 0.5:
            raise InvalidGeneratorConfigError("jitter must be in [0, 0.5) grid units")
        if self.section_gap < 1.0:
            raise InvalidGeneratorConfigError("section_gap must be >= 1 grid unit")
        if not 0.0 < self.diag_weight <= 1.0 or not 0.0 < self.preferred_weight <= 1.0:
            raise InvalidGeneratorConfigError("mixture weights must be in (0, 1]")
        if self.marker_strength < 0 or self.base_rate <= 0:
            raise InvalidGeneratorConfigError("marker_strength >= 0 and base_rate > 0 required")
        if self.n_supertypes < self.n_archetypes:
            raise InvalidGeneratorConfigError("need at least one supertype per archetype")
        if self.archetype_mixtures is not None:
            mix = np.asarray(self.archetype_mixtures, dtype=np.float64)
            if mix.shape != (self.n_conditions, self.n_archetypes):
                raise InvalidGeneratorConfigError(
                    f"archetype_mixtures must be {self.n_conditions}x{self.n_archetypes}, "
                    f"got {mix.shape}")
            if (mix < 0).any() or (mix.sum(axis=1) <= 0).any():
                raise InvalidGeneratorConfigError(
                    "archetype_mixtures rows must be nonnegative with positive sums")


@dataclass(frozen=True)
class SynthResult:
    """Generated tissue plus the ground truth the generator knows."""

    coords: np.ndarray
    expression: np.ndarray
    supertype_codes: np.ndarray
    condition_codes: np.ndarray
    archetypes: np.ndarray
    cell_ids: np.ndarray
    gene_names: tuple
    config: SynthConfig

    def to_dataset(self) -> SpatialDataset:
        t = self.supertype_codes
        return SpatialDataset(
            coords=self.coords,
            expression=self.expression.astype(np.float64),
            cell_types=Categorical.from_labels([f"ct{v // 4}" for v in t]),
            subclasses=Categorical.from_labels([f"sc{v // 2:02d}" for v in t]),
            supertypes=Categorical.from_labels([f"st{v:02d}" for v in t]),
            condition=Categorical.from_labels([f"cond{c}" for c in self.condition_codes]),
            cell_ids=self.cell_ids,
            gene_names=self.gene_names,
        )


def _condition_mixtures(cfg: SynthConfig) -> np.ndarray:
    if cfg.archetype_mixtures is not None:
        mix = np.asarray(cfg.archetype_mixtures, dtype=np.float64)
        return mix / mix.sum(axis=1, keepdims=True)
    a = cfg.n_archetypes
    if a == 1:
        return np.ones((cfg.n_conditions, 1))
    mix = np.full((cfg.n_conditions, a), (1.0 - cfg.diag_weight) / (a - 1))
    for c in range(cfg.n_conditions):
        mix[c, c % a] = cfg.diag_weight
    return mix


def _type_mixtures(cfg: SynthConfig) -> np.ndarray:
    # archetype a prefers a contiguous block of supertypes; blocks are disjoint
    t, a = cfg.n_supertypes, cfg.n_archetypes
    block = t // a
    mix = np.zeros((a, t))
    for i in range(a):
        lo, hi = i * block, (i + 1) * block if i < a - 1 else t
        mix[i, lo:hi] = cfg.preferred_weight / (hi - lo)
        rest = t - (hi - lo)
        if rest:
            outside = np.ones(t, dtype=bool)
            outside[lo:hi] = False
            mix[i, outside] = (1.0 - cfg.preferred_weight) / rest
        else:
            mix[i, lo:hi] += (1.0 - cfg.preferred_weight) / (hi - lo)
    return mix


def _largest_remainder_counts(weights: np.ndarray, total: int) -> np.ndarray:
    ideal = weights * total
    counts = np.floor(ideal).astype(np.int64)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(ideal - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def marker_genes(cfg: SynthConfig, supertype: int) -> np.ndarray:
    """Gene indices boosted for a supertype (cyclic when the panel is narrow)."""
    per = max(1, min(2, cfg.n_genes // cfg.n_supertypes))
    return (supertype * per + np.arange(per)) % cfg.n_genes


def generate(cfg: SynthConfig) -> SynthResult:
    """Build the tissue in memory; fixed config means identical output."""
    rng = np.random.default_rng(cfg.seed)
    side = cfg.grid_side
    mixtures = _condition_mixtures(cfg)
    type_mix = _type_mixtures(cfg)
    tiles_per_side = -(-side // cfg.tile)

    coords, conditions, archetypes = [], [], []
    for c in range(cfg.n_conditions):
        n_tiles = tiles_per_side * tiles_per_side
        tile_counts = _largest_remainder_counts(mixtures[c], n_tiles)
        tile_arch = rng.permutation(np.repeat(np.arange(cfg.n_archetypes), tile_counts))
        tile_arch = tile_arch.reshape(tiles_per_side, tiles_per_side)
        offset = c * (side + cfg.section_gap)
        ii, jj = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        ii, jj = ii.reshape(-1), jj.reshape(-1)
        xy = np.column_stack([ii + offset, jj]).astype(np.float64)
        xy += rng.uniform(-cfg.jitter, cfg.jitter, xy.shape)
        coords.append(xy)
        conditions.append(np.full(side * side, c, dtype=np.int64))
        archetypes.append(tile_arch[ii // cfg.tile, jj // cfg.tile])
    coords = np.concatenate(coords)
    conditions = np.concatenate(conditions)
    archetypes = np.concatenate(archetypes)
    n = coords.shape[0]

    supertypes = np.empty(n, dtype=np.int64)
    for a in range(cfg.n_archetypes):
        mask = archetypes == a
        supertypes[mask] = rng.choice(cfg.n_supertypes, size=int(mask.sum()), p=type_mix[a])

    rates = np.full((n, cfg.n_genes), cfg.base_rate)
    for t in range(cfg.n_supertypes):
        mask = supertypes == t
        if mask.any():
            rates[np.ix_(mask, marker_genes(cfg, t))] += cfg.marker_strength
    expression = rng.poisson(rates).astype(np.int64)
    empty = np.flatnonzero(expression.sum(axis=1) == 0)
    for i in empty:  # keep every cell normalizable; vanishingly rare
        expression[i, marker_genes(cfg, int(supertypes[i]))[0]] = 1

    return SynthResult(
        coords=coords,
        expression=expression,
        supertype_codes=supertypes,
        condition_codes=conditions,
        archetypes=archetypes,
        cell_ids=np.asarray([f"c{i:05d}" for i in range(n)], dtype=object),
        gene_names=tuple(f"g{i:04d}" for i in range(cfg.n_genes)),
        config=cfg,
    )


def write_fixture(result: SynthResult, outdir) -> dict:
    """Write cells/expression/ground-truth CSVs; returns the path map."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t = result.supertype_codes
    paths = {
        "cells": outdir / "cells.csv",
        "expression": outdir / "expression.csv",
        "archetypes": outdir / "archetypes.csv",
    }
    with open(paths["cells"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "x", "y", "cell_type", "subclass", "supertype", "condition"])
        for i in range(result.coords.shape[0]):
            w.writerow([
                result.cell_ids[i],
                f"{result.coords[i, 0]:.6f}",
                f"{result.coords[i, 1]:.6f}",
                f"ct{t[i] // 4}",
                f"sc{t[i] // 2:02d}",
                f"st{t[i]:02d}",
                f"cond{result.condition_codes[i]}",
            ])
    with open(paths["expression"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id"] + list(result.gene_names))
        for i in range(result.expression.shape[0]):
            w.writerow([result.cell_ids[i]] + [str(int(v)) for v in result.expression[i]])
    with open(paths["archetypes"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_id", "archetype"])
        for i in range(result.archetypes.shape[0]):
            w.writerow([result.cell_ids[i], str(int(result.archetypes[i]))])
    return paths
