"""Run configuration: a YAML key-value tree validated into typed specs.

Every validation error names the offending key.  The same RunConfig drives
all CLI subcommands; command-line flags (--grid, --tol, --seed, --jobs)
override the corresponding entries after loading.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .fields import OperatorField, ScaleSpec, build_Ht
from .grid import LatticeSpec, SampledWindow, TorusGrid, window_preset, WINDOW_PRESETS

DEFAULTS = {
    "torus": {"n_alpha": 512},
    "truncation": {"M": 1},
    "tolerances": {"check": 1e-6, "orthogonality": 1e-8},
    "trials": 20,
    "seed": 0,
}


@dataclass(frozen=True)
class WindowSpec:
    preset: Optional[str] = None
    n: int = 4096
    support: tuple[float, float] = (0.0, 1.0)
    samples_file: Optional[str] = None

    def build(self, base_dir: Path) -> SampledWindow:
        if self.samples_file:
            return load_window_file(base_dir / self.samples_file)
        return window_preset(self.preset, self.n, self.support)


@dataclass(frozen=True)
class FieldSpec:
    t: float = 0.5
    scale: ScaleSpec = ScaleSpec("const", 1.0)
    scale2: ScaleSpec = ScaleSpec("const", 1.0)
    t_list: tuple[float, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    window: WindowSpec
    window2: Optional[WindowSpec]
    lattice: LatticeSpec
    field: FieldSpec
    n_alpha: int
    M: int
    tol_check: float
    tol_orth: float
    trials: int
    seed: int
    scan_include_endpoint: bool = True
    out_dir: str = "out"
    base_dir: str = "."
    raw: dict = dc_field(default_factory=dict)

    def build_windows(self) -> tuple[SampledWindow, SampledWindow]:
        """First and second analysis windows; identical specs share one object."""
        base = Path(self.base_dir)
        w1 = self.window.build(base)
        if self.window2 is None or self.window2 == self.window:
            return w1, w1
        return w1, self.window2.build(base)

    def build_fields(self) -> tuple[OperatorField, OperatorField]:
        w1, w2 = self.build_windows()
        phi = build_Ht(w1, self.field.t, self.field.scale)
        psi = build_Ht(w2, self.field.t, self.field.scale2)
        return phi, psi

    def torus_grid(self) -> TorusGrid:
        return TorusGrid.midpoint(self.n_alpha)


def _need(tree: dict, key: str, ctx: str):
    if key not in tree:
        raise ConfigError(f"{ctx}.{key}: missing required key")
    return tree[key]


def _num(tree: dict, key: str, ctx: str, default=None, kind=float):
    if key not in tree:
        if default is None:
            raise ConfigError(f"{ctx}.{key}: missing required key")
        return default
    try:
        return kind(tree[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{ctx}.{key}: expected a number, got {tree[key]!r}")


def _parse_scale(tree, ctx: str) -> ScaleSpec:
    if tree is None:
        return ScaleSpec("const", 1.0)
    if not isinstance(tree, dict):
        raise ConfigError(f"{ctx}: expected a mapping with a 'kind' key")
    kind = tree.get("kind", "const")
    if kind == "const":
        return ScaleSpec("const", _num(tree, "value", ctx, default=1.0))
    if kind == "power":
        return ScaleSpec("power", _num(tree, "p", ctx))
    raise ConfigError(f"{ctx}.kind: unknown scale kind {kind!r} (allowed: const, power)")


def _parse_window(tree, ctx: str) -> WindowSpec:
    if not isinstance(tree, dict):
        raise ConfigError(f"{ctx}: expected a mapping")
    if "samples_file" in tree:
        return WindowSpec(samples_file=str(tree["samples_file"]))
    preset = _need(tree, "preset", ctx)
    if preset not in WINDOW_PRESETS:
        raise ConfigError(
            f"{ctx}.preset: unknown window preset {preset!r} (known: {', '.join(WINDOW_PRESETS)})"
        )
    n = _num(tree, "n", ctx, default=4096, kind=int)
    if n < 2:
        raise ConfigError(f"{ctx}.n: need at least 2 samples, got {n}")
    support = tree.get("support", [0.0, 1.0])
    if not (isinstance(support, (list, tuple)) and len(support) == 2):
        raise ConfigError(f"{ctx}.support: expected [lo, hi]")
    lo, hi = float(support[0]), float(support[1])
    if not hi > lo:
        raise ConfigError(f"{ctx}.support: empty interval [{lo}, {hi})")
    return WindowSpec(preset=preset, n=n, support=(lo, hi))


def parse_config(tree: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(tree, dict):
        raise ConfigError("config root: expected a key-value mapping")
    window = _parse_window(_need(tree, "window", "config"), "window")
    window2 = _parse_window(tree["window2"], "window2") if "window2" in tree else None

    lat_tree = _need(tree, "lattice", "config")
    try:
        lattice = LatticeSpec(
            a=_num(lat_tree, "a", "lattice"),
            b=_num(lat_tree, "b", "lattice"),
            k_max=_num(lat_tree, "k_max", "lattice", default=4, kind=int),
            central_range=_num(lat_tree, "central_range", "lattice", default=4, kind=int),
        )
    except ConfigError as exc:
        raise ConfigError(f"lattice: {exc}") from None

    f_tree = tree.get("field", {})
    t = _num(f_tree, "t", "field", default=0.5)
    if not (0.0 < t < 1.0):
        raise ConfigError(f"field.t: must lie strictly inside (0, 1), got {t}")
    t_list = tuple(float(x) for x in tree.get("gabor_scan", {}).get("t_list", [t]))
    for tx in t_list:
        if not (0.0 < tx < 1.0):
            raise ConfigError(f"gabor_scan.t_list: every t must lie in (0, 1), got {tx}")
    fieldspec = FieldSpec(
        t=t,
        scale=_parse_scale(f_tree.get("scale"), "field.scale"),
        scale2=_parse_scale(f_tree.get("scale2"), "field.scale2"),
        t_list=t_list,
    )

    torus = tree.get("torus", {})
    n_alpha = _num(torus, "n_alpha", "torus", default=DEFAULTS["torus"]["n_alpha"], kind=int)
    if n_alpha < 2:
        raise ConfigError(f"torus.n_alpha: need at least 2 points, got {n_alpha}")
    M = _num(tree.get("truncation", {}), "M", "truncation", default=DEFAULTS["truncation"]["M"], kind=int)
    if M < 0:
        raise ConfigError(f"truncation.M: must be nonnegative, got {M}")
    tols = tree.get("tolerances", {})
    tol_check = _num(tols, "check", "tolerances", default=DEFAULTS["tolerances"]["check"])
    tol_orth = _num(tols, "orthogonality", "tolerances", default=DEFAULTS["tolerances"]["orthogonality"])
    if tol_check <= 0 or tol_orth <= 0:
        raise ConfigError("tolerances: must be positive")
    trials = _num(tree, "trials", "config", default=DEFAULTS["trials"], kind=int)
    seed = _num(tree, "seed", "config", default=DEFAULTS["seed"], kind=int)
    include_endpoint = bool(tree.get("gabor_scan", {}).get("include_endpoint", True))
    out_dir = str(tree.get("output", {}).get("dir", "out"))
    return RunConfig(
        window=window,
        window2=window2,
        lattice=lattice,
        field=fieldspec,
        n_alpha=n_alpha,
        M=M,
        tol_check=tol_check,
        tol_orth=tol_orth,
        trials=trials,
        seed=seed,
        scan_include_endpoint=include_endpoint,
        out_dir=out_dir,
        base_dir=base_dir,
        raw=tree,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        tree = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from None
    return parse_config(tree, base_dir=str(path.parent))


def load_window_file(path) -> SampledWindow:
    """A window stored as JSON: {x0, dx, samples: [[re, im], ...]}."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"window samples file not found: {path}")
    try:
        tree = json.loads(path.read_text(encoding="utf-8"))
        samples = np.array([complex(re, im) for re, im in tree["samples"]])
        return SampledWindow(samples, float(tree["x0"]), float(tree["dx"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"window samples file {path}: {exc}") from None


def load_instance(path) -> list[dict]:
    """Classification instance: JSON list of per-fiber system/dual pairs.

    Schema: {"fibers": [{"alpha": float, "weights": [...]?,
    "system": [[[re, im], ...], ...], "dual": [[[re, im], ...], ...]}]}
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"instance file not found: {path}")
    try:
        tree = json.loads(path.read_text(encoding="utf-8"))
        fibers = tree["fibers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"instance file {path}: {exc}") from None
    if not fibers:
        raise ConfigError("instance file: empty fiber list")
    out = []
    for i, fib in enumerate(fibers):
        try:
            alpha = float(fib["alpha"])
            system = np.array([[complex(re, im) for re, im in row] for row in fib["system"]])
            dual = np.array([[complex(re, im) for re, im in row] for row in fib["dual"]])
            weights = np.asarray(fib.get("weights", np.ones(system.shape[0])), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"instance fiber {i}: {exc}") from None
        if system.ndim != 2 or system.shape != dual.shape:
            raise ConfigError(f"instance fiber {i}: system and dual must be equal-shape matrices")
        if system.shape[1] > 64:
            raise ConfigError(
                f"instance fiber {i}: dimension {system.shape[1]} exceeds the desk-scale cap 64"
            )
        out.append({"alpha": alpha, "system": system, "dual": dual, "weights": weights})
    return out
