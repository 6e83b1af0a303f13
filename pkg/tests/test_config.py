"""Strict TOML config parsing and manifest snapshot round trips."""

import json

import pytest

from hyperwave.config import (
    ClusterConfig,
    config_from_snapshot,
    config_snapshot,
    load_config,
    parse_config,
)
from hyperwave.errors import ConfigError, InvalidScalesError

FULL_DOC = {
    "threads": 2,
    "inputs": {"cells": "data/cells.csv", "expression": "data/expr.csv"},
    "niche": {"graph_method": "knn", "knn_k": 4, "hop_k": 2,
              "gene_pairs": [[0, 1], [2, 3]], "min_cells_for_correlation": 4},
    "wavelets": {"scales": [0, 1, 3, 9]},
    "eval": {"standardize": False, "train_fraction": 0.7, "l2_penalty": 0.1,
             "max_iterations": 50, "tolerance": 1e-6, "seeds": [7, 8]},
    "cluster": {"enabled": False, "n_clusters": 4, "n_neighbors": 9, "seed": 3,
                "restarts": 5},
    "output": {"probe_label": "supertype", "vendi_kernel": "rbf",
               "vendi_standardize": False, "baseline": False,
               "write_representations_csv": False},
    "synth": {"grid_side": 12, "n_archetypes": 2, "n_genes": 10, "tile": 4, "seed": 5,
              "archetype_mixtures": [[0.5, 0.5], [1, 0], [0, 1]]},
}


class TestDefaults:
    def test_empty_document(self):
        cfg = parse_config({})
        assert cfg.cells is None and cfg.expression is None
        assert cfg.scales.scales == (0, 1, 2, 4, 8)
        assert cfg.niche.graph_method == "delaunay" and cfg.niche.hop_k == 3
        assert cfg.eval.standardize is True
        assert cfg.eval.seeds == (0, 1, 2, 3, 4)
        assert cfg.cluster.enabled is True and cfg.cluster.n_clusters == 8
        assert cfg.probe_label == "condition"
        assert cfg.vendi_kernel == "cosine" and cfg.vendi_standardize is True
        assert cfg.baseline is True and cfg.write_representations_csv is True
        assert cfg.threads == 1 and cfg.synth is None

    def test_levels_shorthand(self):
        cfg = parse_config({"wavelets": {"levels": 3}})
        assert cfg.scales.scales == (0, 1, 2, 4)


class TestValidation:
    def test_unknown_keys_rejected_everywhere(self):
        for doc, key in [
            ({"speed": 9}, "speed"),
            ({"inputs": {"cells_file": "x"}}, "cells_file"),
            ({"niche": {"hops": 3}}, "hops"),
            ({"wavelets": {"j": 4}}, "j"),
            ({"eval": {"folds": 5}}, "folds"),
            ({"cluster": {"k": 8}}, "k"),
            ({"output": {"csv": True}}, "csv"),
            ({"synth": {"cells": 100}}, "cells"),
        ]:
            with pytest.raises(ConfigError, match=key):
                parse_config(doc)

    def test_scales_and_levels_conflict(self):
        with pytest.raises(ConfigError, match="not both"):
            parse_config({"wavelets": {"scales": [0, 1], "levels": 2}})

    def test_invalid_scale_sequence_propagates(self):
        with pytest.raises(InvalidScalesError):
            parse_config({"wavelets": {"scales": [0, 2, 4]}})

    def test_type_errors(self):
        with pytest.raises(ConfigError):
            parse_config({"threads": "many"})
        with pytest.raises(ConfigError):
            parse_config({"eval": {"standardize": 1}})
        with pytest.raises(ConfigError, match="bool"):
            parse_config({"niche": {"knn_k": True}})
        with pytest.raises(ConfigError):
            parse_config({"eval": {"seeds": [0, 1.5]}})
        with pytest.raises(ConfigError):
            parse_config({"niche": {"gene_pairs": [[0]]}})

    def test_output_choices(self):
        with pytest.raises(ConfigError, match="probe_label"):
            parse_config({"output": {"probe_label": "donor"}})
        with pytest.raises(ConfigError, match="vendi_kernel"):
            parse_config({"output": {"vendi_kernel": "poly"}})

    def test_cluster_config_bounds(self):
        with pytest.raises(ConfigError):
            ClusterConfig(n_clusters=1)
        with pytest.raises(ConfigError):
            ClusterConfig(restarts=0)


class TestPaths:
    def test_inputs_resolve_against_base_dir(self, tmp_path):
        cfg = parse_config({"inputs": {"cells": "sub/c.csv", "expression": "e.csv"}},
                           base_dir=tmp_path)
        assert cfg.cells == str(tmp_path / "sub" / "c.csv")
        assert cfg.expression == str(tmp_path / "e.csv")

    def test_load_config_resolves_beside_file(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text('[inputs]\ncells = "cells.csv"\nexpression = "expr.csv"\n')
        cfg = load_config(p)
        assert cfg.cells == str(tmp_path / "cells.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "none.toml")

    def test_bad_toml_syntax(self, tmp_path):
        p = tmp_path / "run.toml"
        p.write_text("inputs = {\n")
        with pytest.raises(ConfigError):
            load_config(p)


class TestSnapshot:
    def test_round_trip_preserves_everything(self, tmp_path):
        cfg = parse_config(FULL_DOC, base_dir=tmp_path)
        snap = config_snapshot(cfg)
        rebuilt = config_from_snapshot(snap)
        assert rebuilt == cfg

    def test_round_trip_with_defaults(self):
        cfg = parse_config({})
        assert config_from_snapshot(config_snapshot(cfg)) == cfg

    def test_snapshot_is_json_safe(self, tmp_path):
        cfg = parse_config(FULL_DOC, base_dir=tmp_path)
        snap = config_snapshot(cfg)
        assert json.loads(json.dumps(snap)) == snap

    def test_survives_json_round_trip(self, tmp_path):
        """Snapshot -> JSON -> snapshot -> config must land on the same config."""
        cfg = parse_config(FULL_DOC, base_dir=tmp_path)
        snap = json.loads(json.dumps(config_snapshot(cfg)))
        assert config_from_snapshot(snap) == cfg

    def test_synth_mixtures_preserved(self, tmp_path):
        cfg = parse_config(FULL_DOC, base_dir=tmp_path)
        assert cfg.synth.archetype_mixtures == ((0.5, 0.5), (1.0, 0.0), (0.0, 1.0))
        rebuilt = config_from_snapshot(config_snapshot(cfg))
        assert rebuilt.synth == cfg.synth
