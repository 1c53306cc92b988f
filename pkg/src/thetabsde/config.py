"""Declarative scenario configs.

Two input encodings parse to the same nested dict:

* line format — one ``dotted.key = value`` per line, values in JSON
  notation (bare words fall back to strings), ``#`` comments allowed;
* a single JSON object.

Validation builds every referenced object up front (cheap, no paths are
simulated) so dimension mismatches surface before any compute, naming the
first offending field.
"""

import json

import numpy as np

from .drivers import (AffineDriver, GLimitDriver, GRegularizedDriver,
                      ProjectionDriver, RegularizedProjectionDriver, StateFn,
                      ZeroDriver, validate_driver)
from .engine import Payoff, Scenario, SdeSpec, TimeGrid
from .pde import PdeGrid, auto_grid
from .sets import Ball, Box, PointCloud, UnionSet

KINDS = ("solve", "fk_check", "epsilon_sweep", "eos_demo", "theta_bm",
         "theta_qv", "axiom_check", "martingale_check")


class ConfigError(ValueError):
    pass


def _parse_lines(text):
    root = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {ln}: empty key")
        try:
            value = json.loads(val.strip())
        except json.JSONDecodeError:
            value = val.strip()
        node = root
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"line {ln}: {key} conflicts with a scalar key")
        node[parts[-1]] = value
    return root


class ScenarioConfig:
    """Validated config; equality is by parsed content."""

    def __init__(self, data):
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        self.data = data
        self._validate()

    def __eq__(self, other):
        return isinstance(other, ScenarioConfig) and self.data == other.data

    @property
    def kind(self):
        return self.data.get("kind")

    @property
    def name(self):
        return self.data.get("name", self.kind)

    @property
    def mc(self):
        return self.data.get("mc", {})

    def _validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if "seed" not in self.mc:
            raise ConfigError("mc.seed required")
        build_scenario(self)  # raises naming the offending field


def parse_config(text):
    text = text.lstrip("﻿").strip()
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"JSON config: {e}") from None
    else:
        data = _parse_lines(text)
    return ScenarioConfig(data)


# builders ------------------------------------------------------------------

def _need(section, key, where):
    if key not in section:
        raise ConfigError(f"{where}.{key} required")
    return section[key]


def build_set(spec, where="set"):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be a mapping")
    typ = _need(spec, "type", where)
    try:
        if typ == "box":
            return Box(_need(spec, "lower", where), _need(spec, "upper", where))
        if typ == "ball":
            return Ball(_need(spec, "center", where), _need(spec, "radius", where))
        if typ == "cloud":
            return PointCloud(np.asarray(_need(spec, "points", where), dtype=float))
        if typ == "union":
            members = _need(spec, "members", where)
            return UnionSet([build_set(m, f"{where}.members[{i}]")
                             for i, m in enumerate(members)])
    except ConfigError:
        raise
    except Exception as e:
        raise ConfigError(f"{where}: {e}") from None
    raise ConfigError(f"{where}.type unknown: {typ!r}")


def _build_statefn(spec, where, vector=False):
    if isinstance(spec, (int, float)):
        if vector:
            return StateFn(c0=np.atleast_1d(float(spec)))
        return StateFn(c0=float(spec))
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be a number or mapping")
    c0 = spec.get("const")
    if c0 is None and vector:
        # infer the codomain dimension from the coefficient blocks
        dim = 1
        for key in ("t", "y"):  # vector coefficients: one entry per output
            v = spec.get(key)
            if v is not None:
                dim = np.atleast_1d(np.asarray(v, dtype=float)).size
                break
        else:
            for key in ("x", "z"):  # matrix coefficients: one row per output
                v = spec.get(key)
                if v is not None:
                    dim = len(np.atleast_2d(np.asarray(v, dtype=float)))
                    break
        c0 = np.zeros(dim)
    elif c0 is None:
        c0 = 0.0
    elif vector:
        c0 = np.atleast_1d(np.asarray(c0, dtype=float))
    try:
        return StateFn(c0=np.asarray(c0, dtype=float),
                       c_t=spec.get("t"), C_x=spec.get("x"),
                       c_y=spec.get("y"), C_z=spec.get("z"))
    except Exception as e:
        raise ConfigError(f"{where}: {e}") from None


def build_driver(spec, where="driver"):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be a mapping")
    typ = _need(spec, "type", where)
    try:
        if typ == "zero":
            return ZeroDriver()
        if typ == "affine":
            return AffineDriver(spec.get("alpha", 0.0), spec.get("beta", 0.0),
                                spec.get("gamma", [0.0]))
        if typ == "projection":
            return ProjectionDriver(
                _build_statefn(spec.get("h", 0.0), f"{where}.h"),
                _build_statefn(_need(spec, "g", where), f"{where}.g", vector=True))
        if typ == "regularized_projection":
            return RegularizedProjectionDriver(
                _build_statefn(spec.get("h", 0.0), f"{where}.h"),
                _build_statefn(_need(spec, "g", where), f"{where}.g", vector=True),
                _need(spec, "eps", where))
        if typ == "g_regularized":
            return GRegularizedDriver(_need(spec, "eps", where),
                                      _need(spec, "a0", where))
        if typ == "g_limit":
            return GLimitDriver()
    except ConfigError:
        raise
    except Exception as e:
        raise ConfigError(f"{where}: {e}") from None
    raise ConfigError(f"{where}.type unknown: {typ!r}")


def build_sde(spec, where="sde"):
    spec = spec or {}
    dim_x = int(spec.get("dim_x", 1))
    dim_b = int(spec.get("dim_b", dim_x))
    vol = spec.get("vol_const")
    if vol is None and "vol_lin" not in spec:
        vol = np.eye(dim_x, dim_b)  # default: driving noise passes through
    try:
        return SdeSpec(dim_x=dim_x, dim_b=dim_b,
                       x0=spec.get("x0", np.zeros(dim_x)),
                       drift_const=spec.get("drift_const"),
                       drift_t=spec.get("drift_t"),
                       drift_lin=spec.get("drift_lin"),
                       vol_const=vol, vol_lin=spec.get("vol_lin"))
    except Exception as e:
        raise ConfigError(f"{where}: {e}") from None


def build_terminal(spec, where="terminal"):
    spec = spec or {}
    try:
        return Payoff(spec.get("coeffs", [0.0, 1.0]), clamp=spec.get("clamp"))
    except Exception as e:
        raise ConfigError(f"{where}: {e}") from None


def build_grid(spec, where="grid"):
    spec = spec or {}
    try:
        return TimeGrid(float(spec.get("t0", 0.0)), float(_need(spec, "T", where)),
                        int(_need(spec, "n_steps", where)))
    except ConfigError:
        raise
    except Exception as e:
        raise ConfigError(f"{where}: {e}") from None


def build_scenario(cfg):
    d = cfg.data
    uset = build_set(_need(d, "set", "config"))
    driver = build_driver(_need(d, "driver", "config"))
    sde = build_sde(d.get("sde"))
    terminal = build_terminal(d.get("terminal"))
    grid = build_grid(_need(d, "grid", "config"))
    mc = d.get("mc", {})
    try:
        validate_driver(driver, uset, sde.dim_b)
    except Exception as e:
        raise ConfigError(f"driver/set/sde dimensions: {e}") from None
    y_clip = mc.get("y_clip")
    if y_clip is not None:
        try:
            lo, hi = (float(v) for v in y_clip)
        except (TypeError, ValueError):
            raise ConfigError("mc.y_clip must be a [lo, hi] pair") from None
        if not lo < hi:
            raise ConfigError("mc.y_clip must satisfy lo < hi")
        y_clip = (lo, hi)
    return Scenario(sde=sde, driver=driver, uset=uset, terminal=terminal,
                    grid=grid,
                    n_paths=int(mc.get("n_paths", 1000)),
                    seed=int(_need(mc, "seed", "mc")),
                    regression_degree=int(mc.get("regression_degree", 3)),
                    picard_iters=int(mc.get("picard_iters", 3)),
                    y_clip=y_clip)


def build_pde_grid(cfg, scenario):
    spec = cfg.data.get("pde", {})
    if {"x_min", "x_max", "n_x", "n_t"} <= set(spec):
        try:
            return PdeGrid(float(spec["x_min"]), float(spec["x_max"]),
                           int(spec["n_x"]), int(spec["n_t"]),
                           scenario.grid.t0, scenario.grid.T,
                           scenario.sde.sigma_max())
        except Exception as e:
            raise ConfigError(f"pde: {e}") from None
    return auto_grid(scenario.sde, scenario.grid, n_x=int(spec.get("n_x", 400)))
