"""Run configuration: one JSON document with every default embedded.

The merged configuration is echoed into the run manifest so any output
directory is self-describing.  Validation failures name the offending
field; the CLI maps them to exit code 2.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

from .kernels import KERNEL_KINDS, KernelSpec

DEFAULT_CONFIG = {
    "seed": 20240817,
    "d": 1,
    "beta": 0.5,
    "kernel": {"kind": "exponential-petermann", "lambda": 1.0, "normalize_unit_variance": True},
    "backend": {"kind": "grid", "h": None, "L": None},
    "n_grid": [4, 9, 16, 25],
    "alphas": [0.6, 0.7, 0.75, 0.8],
    "nu": 0.75,
    "M": 1000,
    "R": 200,
    "threads": 1,
    "output_dir": "polymerlab-out",
}


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config field {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config field {where!r} must be an object")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


@dataclass(frozen=True)
class RunConfig:
    seed: int
    d: int
    beta: float
    kernel: KernelSpec
    backend_kind: str
    h: float | None
    L: float | None
    n_grid: tuple
    alphas: tuple
    nu: float
    M: int
    R: int
    threads: int
    output_dir: str
    raw: dict = field(repr=False, default_factory=dict)

    def env_seeds(self, count: int | None = None) -> list[int]:
        """Per-replica environment seeds derived from the run seed."""
        return [self.seed + r for r in range(self.R if count is None else count)]


def validate_config(doc: dict) -> RunConfig:
    _require(isinstance(doc.get("seed"), int), "seed must be an integer")
    seed = doc["seed"] & 0xFFFFFFFFFFFFFFFF
    _require(isinstance(doc.get("d"), int) and doc["d"] >= 1, "d must be an integer >= 1")
    beta = doc.get("beta")
    _require(isinstance(beta, (int, float)) and beta >= 0, "beta must be a real >= 0")

    kdoc = doc["kernel"]
    _require(kdoc.get("kind") in KERNEL_KINDS,
             f"kernel.kind must be one of {KERNEL_KINDS}, got {kdoc.get('kind')!r}")
    lam = kdoc.get("lambda")
    _require(isinstance(lam, (int, float)) and lam > 0, "kernel.lambda must be positive")
    _require(isinstance(kdoc.get("normalize_unit_variance"), bool),
             "kernel.normalize_unit_variance must be true or false")
    kernel = KernelSpec(kind=kdoc["kind"], lam=float(lam),
                        normalize_unit_variance=kdoc["normalize_unit_variance"])

    bdoc = doc["backend"]
    _require(bdoc.get("kind") in ("exact", "grid"),
             f"backend.kind must be 'exact' or 'grid', got {bdoc.get('kind')!r}")
    for name in ("h", "L"):
        value = bdoc.get(name)
        _require(value is None or (isinstance(value, (int, float)) and value > 0),
                 f"backend.{name} must be positive when given")

    n_grid = doc["n_grid"]
    _require(isinstance(n_grid, list) and len(n_grid) > 0, "n_grid must be a nonempty list")
    _require(all(isinstance(n, int) and n >= 1 for n in n_grid), "n_grid entries must be integers >= 1")
    _require(list(n_grid) == sorted(n_grid), "n_grid must be sorted ascending")

    alphas = doc["alphas"]
    _require(isinstance(alphas, list) and len(alphas) > 0, "alphas must be a nonempty list")
    _require(all(isinstance(a, (int, float)) and a > 0 for a in alphas), "alphas entries must be positive")

    _require(isinstance(doc.get("nu"), (int, float)) and doc["nu"] > 0.5, "nu must exceed 0.5")
    _require(isinstance(doc.get("M"), int) and doc["M"] >= 2, "M must be an integer >= 2")
    _require(isinstance(doc.get("R"), int) and doc["R"] >= 2, "R must be an integer >= 2")
    _require(isinstance(doc.get("threads"), int) and doc["threads"] >= 1, "threads must be an integer >= 1")
    _require(isinstance(doc.get("output_dir"), str) and doc["output_dir"], "output_dir must be a nonempty string")

    return RunConfig(
        seed=seed, d=doc["d"], beta=float(beta), kernel=kernel,
        backend_kind=bdoc["kind"],
        h=None if bdoc.get("h") is None else float(bdoc["h"]),
        L=None if bdoc.get("L") is None else float(bdoc["L"]),
        n_grid=tuple(n_grid), alphas=tuple(float(a) for a in alphas),
        nu=float(doc["nu"]), M=doc["M"], R=doc["R"], threads=doc["threads"],
        output_dir=doc["output_dir"], raw=doc)


def load_config(path: str | None = None, seed: int | None = None,
                threads: int | None = None, output_dir: str | None = None) -> RunConfig:
    """Merge a JSON config file (if any) and CLI overrides into the defaults."""
    doc = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config document must be a JSON object")
        doc = _merge(doc, loaded)
    if seed is not None:
        doc["seed"] = seed
    if threads is not None:
        doc["threads"] = threads
    if output_dir is not None:
        doc["output_dir"] = output_dir
    return validate_config(doc)
