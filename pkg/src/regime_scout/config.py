"""Strict JSON run configuration.

A config file has six sections::

    system    kind, coefficients, ics, free_axes[{name, min, max}], t_f, n_t,
              substeps, horizon_units
    embedding n_f, transient_fraction
    cluster   eps, min_pts
    gp        sigma_n, length, sigma_l (each [lo, hi]; sigma_l hi may be null),
              zeta_ei, n_starts, refit_every
    stop      zeta_stop and/or t_max
    sampling  budget, initial_fraction, n_candidates, grid_resolution, seed

Unknown keys, wrong types and out-of-range values raise
:class:`ConfigInvalid` whose ``path`` names the offending key.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .clustering import ClusterParams
from .dynamics import Axis, SystemSpec
from .embedding import EmbeddingConfig
from .errors import ConfigInvalid
from .explorer import ExplorationConfig
from .gpr import SearchBox

_SECTIONS = {
    "system": {"kind", "coefficients", "ics", "free_axes", "t_f", "n_t", "substeps", "horizon_units"},
    "embedding": {"n_f", "transient_fraction"},
    "cluster": {"eps", "min_pts"},
    "gp": {"sigma_n", "length", "sigma_l", "zeta_ei", "n_starts", "refit_every"},
    "stop": {"zeta_stop", "t_max"},
    "sampling": {"budget", "initial_fraction", "n_candidates", "grid_resolution", "seed"},
}
_REQUIRED = {
    "system": {"kind", "free_axes", "t_f", "n_t"},
    "cluster": {"eps", "min_pts"},
    "sampling": {"budget"},
}
PRESETS = ("pendulum", "lorenz", "duffing")


def _check_keys(obj, allowed, path, required=()):
    if not isinstance(obj, dict):
        raise ConfigInvalid("expected an object", path)
    for key in obj:
        if key not in allowed:
            raise ConfigInvalid("unknown key", f"{path}.{key}" if path else key)
    for key in sorted(required):
        if key not in obj:
            raise ConfigInvalid("missing required key", f"{path}.{key}" if path else key)


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalid(f"expected a number, got {value!r}", path)
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigInvalid(f"expected an integer, got {value!r}", path)
    return value


def _named_numbers(obj, path):
    if not isinstance(obj, dict):
        raise ConfigInvalid("expected an object of name: number", path)
    return {name: _number(v, f"{path}.{name}") for name, v in obj.items()}


def _interval(value, path, open_top=False):
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigInvalid("expected [lo, hi]", path)
    lo = _number(value[0], f"{path}[0]")
    if open_top and value[1] is None:
        return lo, None
    hi = _number(value[1], f"{path}[1]")
    if not 0 < lo <= hi:
        raise ConfigInvalid("need 0 < lo <= hi", path)
    return lo, hi


def _system(obj) -> SystemSpec:
    _check_keys(obj, _SECTIONS["system"], "system", _REQUIRED["system"])
    axes_raw = obj["free_axes"]
    if not isinstance(axes_raw, list) or not axes_raw:
        raise ConfigInvalid("expected a non-empty list", "system.free_axes")
    axes = []
    for i, ax in enumerate(axes_raw):
        path = f"system.free_axes[{i}]"
        _check_keys(ax, {"name", "min", "max"}, path, {"name", "min", "max"})
        if not isinstance(ax["name"], str):
            raise ConfigInvalid("name must be a string", f"{path}.name")
        axes.append(Axis(ax["name"], _number(ax["min"], f"{path}.min"), _number(ax["max"], f"{path}.max")))
    if not isinstance(obj["kind"], str):
        raise ConfigInvalid("expected a string", "system.kind")
    return SystemSpec(
        kind=obj["kind"],
        coefficients=_named_numbers(obj.get("coefficients", {}), "system.coefficients"),
        initial_conditions=_named_numbers(obj.get("ics", {}), "system.ics"),
        free_axes=tuple(axes),
        t_f=_number(obj["t_f"], "system.t_f"),
        n_t=_integer(obj["n_t"], "system.n_t"),
        substeps=_integer(obj.get("substeps", 1), "system.substeps"),
        horizon_units=obj.get("horizon_units", "time"),
    )


def parse_config(doc: dict) -> ExplorationConfig:
    """Build an :class:`ExplorationConfig` from a decoded JSON document."""
    _check_keys(doc, _SECTIONS, "", {"system", "cluster", "sampling", "stop"})
    for name, keys in _SECTIONS.items():
        _check_keys(doc.get(name, {}), keys, name, _REQUIRED.get(name, ()))
    system = _system(doc["system"])

    emb = doc.get("embedding", {})
    try:
        embedding = EmbeddingConfig(
            n_f=_integer(emb.get("n_f", 1024), "embedding.n_f"),
            transient_fraction=_number(emb.get("transient_fraction", 0.5), "embedding.transient_fraction"),
        )
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "embedding") from exc

    cl = doc["cluster"]
    try:
        cluster = ClusterParams(_number(cl["eps"], "cluster.eps"), _integer(cl["min_pts"], "cluster.min_pts"))
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "cluster") from exc

    gp = doc.get("gp", {})
    default = SearchBox()
    box = SearchBox(
        sigma_n=_interval(gp["sigma_n"], "gp.sigma_n") if "sigma_n" in gp else default.sigma_n,
        length=_interval(gp["length"], "gp.length") if "length" in gp else default.length,
        sigma_l=_interval(gp["sigma_l"], "gp.sigma_l", open_top=True) if "sigma_l" in gp else default.sigma_l,
    )

    stop = doc["stop"]
    sampling = doc["sampling"]
    zeta_stop = stop.get("zeta_stop")
    t_max = stop.get("t_max")
    return ExplorationConfig(
        system=system,
        embedding=embedding,
        cluster=cluster,
        budget=_integer(sampling["budget"], "sampling.budget"),
        zeta_stop=None if zeta_stop is None else _number(zeta_stop, "stop.zeta_stop"),
        t_max=None if t_max is None else _integer(t_max, "stop.t_max"),
        gp_box=box,
        zeta_ei=_number(gp.get("zeta_ei", 0.01), "gp.zeta_ei"),
        initial_fraction=_number(sampling.get("initial_fraction", 0.2), "sampling.initial_fraction"),
        n_candidates=_integer(sampling.get("n_candidates", 2048), "sampling.n_candidates"),
        grid_resolution=_integer(sampling.get("grid_resolution", 101), "sampling.grid_resolution"),
        seed=_integer(sampling.get("seed", 0), "sampling.seed"),
        gp_n_starts=_integer(gp.get("n_starts", 8), "gp.n_starts"),
        refit_every=_integer(gp.get("refit_every", 1), "gp.refit_every"),
    )


def config_to_dict(cfg: ExplorationConfig) -> dict:
    """Inverse of :func:`parse_config`; every field is written out explicitly."""
    s = cfg.system
    stop = {}
    if cfg.zeta_stop is not None:
        stop["zeta_stop"] = cfg.zeta_stop
    if cfg.t_max is not None:
        stop["t_max"] = cfg.t_max
    return {
        "system": {
            "kind": s.kind,
            "coefficients": dict(s.coefficients),
            "ics": dict(s.initial_conditions),
            "free_axes": [{"name": a.name, "min": a.lower, "max": a.upper} for a in s.free_axes],
            "t_f": s.t_f,
            "n_t": s.n_t,
            "substeps": s.substeps,
            "horizon_units": s.horizon_units,
        },
        "embedding": {"n_f": cfg.embedding.n_f, "transient_fraction": cfg.embedding.transient_fraction},
        "cluster": {"eps": cfg.cluster.eps, "min_pts": cfg.cluster.min_pts},
        "gp": {
            "sigma_n": list(cfg.gp_box.sigma_n),
            "length": list(cfg.gp_box.length),
            "sigma_l": list(cfg.gp_box.sigma_l),
            "zeta_ei": cfg.zeta_ei,
            "n_starts": cfg.gp_n_starts,
            "refit_every": cfg.refit_every,
        },
        "stop": stop,
        "sampling": {
            "budget": cfg.budget,
            "initial_fraction": cfg.initial_fraction,
            "n_candidates": cfg.n_candidates,
            "grid_resolution": cfg.grid_resolution,
            "seed": cfg.seed,
        },
    }


def read_document(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"not valid JSON ({exc.msg} at line {exc.lineno})", str(path)) from exc


def load_config(path) -> ExplorationConfig:
    """Parse a config file, or a bundled preset given by bare name (``pendulum``)."""
    if str(path) in PRESETS and not Path(path).exists():
        return load_preset(str(path))
    return parse_config(read_document(path))


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigInvalid(f"no preset named {name!r}; choose from {', '.join(PRESETS)}", "preset")
    return json.loads(resources.files("regime_scout").joinpath("presets", f"{name}.json").read_text())


def load_preset(name: str) -> ExplorationConfig:
    return parse_config(preset_document(name))
