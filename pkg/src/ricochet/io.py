"""Canonical CSV rendering and run manifests.

Floats are written with ``repr``, the shortest decimal that round-trips to
the same binary64 value, so identical runs give identical bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .engine import Collision


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")
    return str(path)


def read_csv(path) -> List[Dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


COLLISION_HEADER = ("back_index", "front_index", "time", "position")


class CollisionWriter:
    """Append-only collision sink; pass the instance as ``collision_sink``."""

    def __init__(self, path):
        self.path = str(path)
        self.count = 0
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(",".join(COLLISION_HEADER) + "\n")

    def __call__(self, batch: List[Collision]):
        self._fh.writelines(
            f"{c.back_index},{c.front_index},{c.time!r},{c.position!r}\n" for c in batch)
        self.count += len(batch)

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class RunManifest:
    subcommand: str
    config: Dict
    seed: int
    version: str
    outputs: List[str] = field(default_factory=list)
    wall_seconds: float = 0.0
    counters: Dict[str, int] = field(default_factory=dict)
    argv: List[str] = field(default_factory=list)

    def write(self, directory) -> str:
        path = os.path.join(directory, "manifest.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))
