"""
Checkpoint persistence.

A checkpoint is one ``.npz`` archive: every parameter array stored under
``<group>/<name>`` (groups are e.g. ``actor``, ``critic``, ``target``) plus a
JSON manifest string under ``__manifest__`` describing the format version,
the architectures, the run config hash and whether the run finished.
Arrays round-trip bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import structlog

from apps.agents.networks import Params

logger = structlog.get_logger()

FORMAT_VERSION = 1
MANIFEST_KEY = "__manifest__"


class CheckpointError(Exception):
    """Raised when a checkpoint cannot be written or read back."""

    def __init__(self, path: Path, reason: str) -> None:
        self.path = path
        self.reason = reason
        super().__init__(f"Checkpoint {path}: {reason}")


@dataclass(frozen=True)
class Checkpoint:
    """Loaded checkpoint.

    Attributes:
        manifest: Metadata written alongside the arrays.
        groups:   Parameter dicts keyed by group name.
    """

    manifest: dict[str, Any]
    groups: dict[str, Params] = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.manifest.get("partial", False))


def config_hash(config: Mapping[str, Any]) -> str:
    """Stable short hash of a flat config mapping."""
    blob = json.dumps(dict(config), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(
    path: Path,
    groups: Mapping[str, Mapping[str, np.ndarray]],
    manifest: Mapping[str, Any],
) -> Path:
    """Write ``groups`` and ``manifest`` to ``path`` atomically."""
    arrays: dict[str, np.ndarray] = {}
    for group, params in groups.items():
        if "/" in group:
            raise CheckpointError(path, f"group name {group!r} may not contain '/'")
        for name, value in params.items():
            arrays[f"{group}/{name}"] = np.asarray(value)
    meta = {"format_version": FORMAT_VERSION, "groups": sorted(groups), **dict(manifest)}
    arrays[MANIFEST_KEY] = np.array(json.dumps(meta, sort_keys=True, default=str))

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("wb") as fh:
            np.savez(fh, **arrays)  # type: ignore[arg-type]
        os.replace(tmp, path)
    except OSError as exc:
        raise CheckpointError(path, str(exc)) from exc

    logger.info(
        "checkpoint.saved",
        path=str(path),
        groups=sorted(groups),
        partial=bool(meta.get("partial", False)),
    )
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint written by ``save_checkpoint``.

    Raises:
        CheckpointError: If the file is missing, unreadable or of an
            unsupported format version.
    """
    if not path.exists():
        raise CheckpointError(path, "file not found")
    try:
        with np.load(path, allow_pickle=False) as data:
            if MANIFEST_KEY not in data.files:
                raise CheckpointError(path, "manifest missing")
            manifest = json.loads(str(data[MANIFEST_KEY]))
            groups: dict[str, Params] = {}
            for key in data.files:
                if key == MANIFEST_KEY:
                    continue
                group, _, name = key.partition("/")
                groups.setdefault(group, {})[name] = np.array(data[key])
    except (OSError, ValueError) as exc:
        raise CheckpointError(path, str(exc)) from exc

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(path, f"unsupported format version {version}")
    return Checkpoint(manifest=manifest, groups=groups)
