"""Table cells, content-addressed cache and artifact export behind the CLI."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from systolic.filling_search import SearchOptions, max_minimal_filling, min_filling
from systolic.homology import build_combinatorial_map, homology_span_rank
from systolic.hyperbolic import (
    build_chart,
    check_eutactic,
    cut_to_polygon,
    index_formula,
    length_jacobian,
    numerical_rank,
)
from systolic.surface import build_surface, genus_of

SCHEMA_VERSION = 1
COLUMNS = ("m", "genus", "systoles", "min", "max", "rank", "index")
HEAVY = ("min", "max", "index")  # resource-bound from m = 7 on
CACHE_ENV = "SYSTOLIC_CACHE"
DEFAULT_MAX_SECONDS = 600.0  # search budget for the maximum beyond exhaustive range


class InvariantError(RuntimeError):
    """A computed quantity contradicts a structural identity."""


class CacheCorrupted(RuntimeError):
    pass


@lru_cache(maxsize=1)
def code_hash() -> str:
    """Digest of the package sources; cache entries are keyed on it."""
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _checksum(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


class Cache:
    """``root/m{m}/{kind}-{key}.json``, where the key hashes code version and parameters."""

    def __init__(self, root=None, enabled: bool = True):
        self.root = Path(root or os.environ.get(CACHE_ENV, "cache"))
        self.enabled = enabled

    def path(self, m: int, kind: str, params: dict) -> Path:
        key = hashlib.sha256(canonical_json([code_hash(), m, kind, params]).encode()).hexdigest()[:16]
        return self.root / f"m{m}" / f"{kind}-{key}.json"

    def load(self, m: int, kind: str, params: dict):
        if not self.enabled:
            return None
        path = self.path(m, kind, params)
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text())
            ok = entry["checksum"] == _checksum(entry["payload"])
        except (ValueError, KeyError, TypeError):
            ok = False
        if not ok:
            raise CacheCorrupted(f"checksum mismatch in {path}; delete it or run with --no-cache")
        return entry["payload"]

    def store(self, m: int, kind: str, params: dict, payload) -> None:
        if not self.enabled:
            return
        path = self.path(m, kind, params)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"schema_version": SCHEMA_VERSION, "code_hash": code_hash(), "m": m, "kind": kind,
                 "params": params, "payload": payload, "checksum": _checksum(payload)}
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(entry) + "\n")
        os.replace(tmp, path)


@dataclass
class RunConfig:
    solver: str = "bridge"
    time_limit: float | None = None
    threads: int = 1
    symmetry: bool = True
    fd_step: float = 1e-5
    rank_tol: float = 1e-6
    newton_tol: float = 1e-12
    unbounded: bool = False
    skip: tuple[str, ...] = ()
    export_dir: str | None = None

    def search(self, default_limit=None) -> SearchOptions:
        limit = self.time_limit if self.time_limit is not None else default_limit
        return SearchOptions(solver=self.solver, time_limit=None if self.unbounded else limit,
                             threads=self.threads, symmetry=self.symmetry)


@dataclass
class Cell:
    name: str
    value: int | None
    provenance: str  # computed | cached | skipped
    complete: bool = True  # False when a time limit cut the search short
    detail: dict = field(default_factory=dict)

    def text(self) -> str:
        return "-" if self.value is None else str(self.value)

    def to_json(self) -> dict:
        out = {"value": self.value, "provenance": self.provenance, "complete": self.complete}
        if self.provenance == "skipped":
            out["reason"] = self.detail.get("reason", "")
        return out


# ---------------------------------------------------------------------------
# computations; each returns a JSON-ready payload with a "value" entry


def compute_min(m: int, config: RunConfig) -> dict:
    model = build_surface(m)
    res = min_filling(model, config.search())
    return {"value": res.cardinality, "complete": res.proved_optimal, **res.to_json(model)}


def compute_max(m: int, config: RunConfig) -> dict:
    model = build_surface(m)
    res = max_minimal_filling(model, config.search(DEFAULT_MAX_SECONDS))
    return {"value": res.cardinality, "complete": res.proved_optimal, "status": res.status,
            **res.to_json(model)}


def compute_rank(m: int, config: RunConfig) -> dict:
    model = build_surface(m)
    cmap = build_combinatorial_map(model)
    return {"value": homology_span_rank(range(model.n), cmap), "complete": True}


def critical_point(m: int, config: RunConfig, subset=None):
    """Polygon, chart and Jacobian at the critical point of the given minimal filling set."""
    model = build_surface(m)
    cmap = build_combinatorial_map(model)
    if subset is None:
        subset = min_filling(model, config.search()).subset
    polygon = cut_to_polygon(subset, cmap)
    chart = build_chart(polygon, cmap, newton_tol=config.newton_tol)
    jac = length_jacobian(chart, config.fd_step, workers=config.threads)
    return polygon, chart, jac


def compute_index(m: int, config: RunConfig) -> dict:
    polygon, chart, jac = critical_point(m, config)
    report = numerical_rank(jac.matrix, config.rank_tol)
    if report.rank != index_formula(m):
        raise InvariantError(f"index {report.rank} differs from m*2^(m-3)-(m+3) = {index_formula(m)}")
    if config.export_dir:
        export_critical_point(Path(config.export_dir), polygon, jac)
    return {"value": report.rank, "complete": True, "gap": float(f"{report.gap:.6e}"),
            "singular_values": [float(f"{s:.6e}") for s in report.singular_values],
            "eutactic": bool(check_eutactic(jac, config.rank_tol)),
            "dependent": list(chart.dependent), "fd_step": config.fd_step}


def export_critical_point(directory: Path, polygon, jac) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    m = polygon.model.m
    body = {"schema_version": SCHEMA_VERSION, **polygon.to_json()}
    (directory / f"polygon_m{m}.json").write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")
    (directory / f"jacobian_m{m}.csv").write_text(jac.to_csv())


COMPUTE = {"min": compute_min, "max": compute_max, "rank": compute_rank, "index": compute_index}


def cache_params(kind: str, config: RunConfig) -> dict:
    if kind == "index":
        return {"fd_step": config.fd_step, "rank_tol": config.rank_tol, "newton_tol": config.newton_tol}
    return {}


def cell(m: int, kind: str, config: RunConfig, cache: Cache) -> Cell:
    if kind == "m":
        return Cell(kind, m, "computed")
    if kind == "genus":
        return Cell(kind, genus_of(m), "computed")
    if kind == "systoles":
        return Cell(kind, build_surface(m).n, "computed")
    if kind in config.skip:
        return Cell(kind, None, "skipped", detail={"reason": "requested"})
    if kind in HEAVY and m >= 7 and not config.unbounded:
        return Cell(kind, None, "skipped", detail={"reason": "resource-bound"})
    params = cache_params(kind, config)
    payload = cache.load(m, kind, params)
    provenance = "cached"
    if payload is None:
        payload = COMPUTE[kind](m, config)
        provenance = "computed"
        # incomplete answers stay out of the cache so a longer run can improve them
        if payload["complete"]:
            cache.store(m, kind, params, payload)
    if kind == "index" and config.export_dir and provenance == "cached":
        export_critical_point(Path(config.export_dir), *_polygon_and_jacobian(m, config))
    return Cell(kind, int(payload["value"]), provenance, bool(payload["complete"]), payload)


def _polygon_and_jacobian(m: int, config: RunConfig):
    polygon, _, jac = critical_point(m, config)
    return polygon, jac


def table_row(m: int, config: RunConfig, cache: Cache) -> list[Cell]:
    return [cell(m, kind, config, cache) for kind in COLUMNS]


def row_csv(cells: list[Cell]) -> str:
    return ",".join(c.text() for c in cells)


def row_json(m: int, cells: list[Cell]) -> dict:
    return {"schema_version": SCHEMA_VERSION, "m": m, "columns": list(COLUMNS),
            "cells": {c.name: c.to_json() for c in cells}}


def surface_json(m: int) -> dict:
    model = build_surface(m)
    A = np.zeros((model.n, model.n), dtype=int)
    for a, b in model.square_to_systoles:
        A[a, b] = A[b, a] = 1
    return {"schema_version": SCHEMA_VERSION, "m": m, "genus": model.genus, "systoles": model.labels(range(model.n)),
            "squares": len(model.squares), "intersections": [list(map(int, p)) for p in model.square_to_systoles],
            "degrees": sorted(set(int(d) for d in A.sum(axis=1)))}
