"""Tests for checkpoint persistence."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from apps.agents import CheckpointError, config_hash, load_checkpoint, save_checkpoint
from apps.agents.checkpoint import MANIFEST_KEY


def test_round_trip_is_bit_exact(tmp_path: Path, rng: np.random.Generator) -> None:
    groups = {"actor": {"w": rng.normal(size=(3, 2))}, "critic": {"b": rng.normal(size=4)}}
    path = save_checkpoint(tmp_path / "agent1.npz", groups, {"seed": 42, "partial": True})
    loaded = load_checkpoint(path)
    assert loaded.partial is True
    assert loaded.manifest["seed"] == 42
    assert loaded.manifest["groups"] == ["actor", "critic"]
    for group, params in groups.items():
        for name, value in params.items():
            assert np.array_equal(loaded.groups[group][name], value)


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError) as exc_info:
        load_checkpoint(tmp_path / "nope.npz")
    assert exc_info.value.reason == "file not found"


def test_unsupported_format_version(tmp_path: Path) -> None:
    path = tmp_path / "old.npz"
    np.savez(path, **{MANIFEST_KEY: np.array(json.dumps({"format_version": 99}))})
    with pytest.raises(CheckpointError, match="format version 99"):
        load_checkpoint(path)


def test_group_names_cannot_contain_slash(tmp_path: Path) -> None:
    with pytest.raises(CheckpointError):
        save_checkpoint(tmp_path / "x.npz", {"a/b": {"w": np.zeros(1)}}, {})


def test_config_hash_ignores_key_order() -> None:
    assert config_hash({"a": 1, "b": 2.5}) == config_hash({"b": 2.5, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 16
