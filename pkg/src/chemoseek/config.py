"""JSON run configuration: strict schema, defaults, canonical form.

The schema has five sections (swimmer, filter, field, sim required; noise
and init optional). Unknown keys anywhere are hard errors naming the
dotted path, so typos cannot silently fall back to defaults. Loading then
re-serializing is byte-stable: `resolved_dict` fills in every default and
`canonical_json` fixes key order and spacing, which is also what the
content digest hashes.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .fields import FieldSpec, NoiseSpec
from .kinematics import SwimmerParams
from .signaling import FilterParams
from .simulate import SimConfig


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key."""


_TOP_KEYS = ("swimmer", "filter", "field", "noise", "sim", "init")
_REQUIRED_TOP = ("swimmer", "filter", "field", "sim")


def _reject_constant(name: str) -> float:
    raise ConfigError(f"non-finite number {name!r} is not allowed in configs")


def _section(data: dict, name: str) -> dict:
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be an object")
    return dict(sec)


def _num(section: str, key: str, val) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {val!r}")
    return float(val)


def _intval(section: str, key: str, val) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {val!r}")
    return val


def _vec3(section: str, key: str, val) -> list[float]:
    if not isinstance(val, list) or len(val) != 3:
        raise ConfigError(f"{section}.{key} must be a list of 3 numbers")
    return [_num(section, key, x) for x in val]


def _matrix(section: str, key: str, val) -> np.ndarray:
    flat: list[float] = []
    if isinstance(val, list) and len(val) == 9:
        flat = [_num(section, key, x) for x in val]
    elif (isinstance(val, list) and len(val) == 3
          and all(isinstance(r, list) and len(r) == 3 for r in val)):
        flat = [_num(section, key, x) for row in val for x in row]
    else:
        raise ConfigError(f"{section}.{key} must be 3x3 nested lists "
                          "or a flat list of 9 numbers")
    return np.array(flat).reshape(3, 3)


def _take(sec: dict, section: str, key: str, default=None, required: bool = False):
    if key in sec:
        return sec.pop(key)
    if required:
        raise ConfigError(f"missing required key {section}.{key}")
    return default


def _no_leftovers(sec: dict, section: str) -> None:
    if sec:
        key = sorted(sec)[0]
        raise ConfigError(f"unknown key {section + '.' + key!r}")


def parse_config(data: dict) -> SimConfig:
    """Build a validated SimConfig from a raw JSON-shaped dict."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key!r}")
    for key in _REQUIRED_TOP:
        if key not in data:
            raise ConfigError(f"missing required section {key!r}")

    sec = _section(data, "swimmer")
    try:
        swimmer = SwimmerParams(
            v=_num("swimmer", "v", _take(sec, "swimmer", "v", required=True)),
            omega_par_0=_num("swimmer", "omega_par_0",
                             _take(sec, "swimmer", "omega_par_0", required=True)),
            omega_perp_0=_num("swimmer", "omega_perp_0",
                              _take(sec, "swimmer", "omega_perp_0", required=True)),
            omega_par_1=_num("swimmer", "omega_par_1",
                             _take(sec, "swimmer", "omega_par_1", 0.0)),
            omega_perp_1=_num("swimmer", "omega_perp_1",
                              _take(sec, "swimmer", "omega_perp_1", 0.0)))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"swimmer: {exc}") from exc
    _no_leftovers(sec, "swimmer")

    sec = _section(data, "filter")
    try:
        filt = FilterParams(
            sigma1=_num("filter", "sigma1",
                        _take(sec, "filter", "sigma1", required=True)),
            sigma2=_num("filter", "sigma2",
                        _take(sec, "filter", "sigma2", required=True)),
            mu=_num("filter", "mu", _take(sec, "filter", "mu", required=True)),
            rho_max=_num("filter", "rho_max",
                         _take(sec, "filter", "rho_max", 1e6)))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"filter: {exc}") from exc
    _no_leftovers(sec, "filter")

    sec = _section(data, "field")
    variant = _take(sec, "field", "variant", required=True)
    if not isinstance(variant, str):
        raise ConfigError(f"field.variant must be a string, got {variant!r}")
    kwargs: dict = {"variant": variant}
    if "source" in sec:
        kwargs["source"] = _vec3("field", "source", sec.pop("source"))
    if "direction" in sec:
        kwargs["direction"] = _vec3("field", "direction", sec.pop("direction"))
    for key in ("l0", "clamp_radius", "slope", "offset", "width", "peak", "level"):
        if key in sec:
            kwargs[key] = _num("field", key, sec.pop(key))
    _no_leftovers(sec, "field")
    try:
        fld = FieldSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"field: {exc}") from exc

    sec = _section(data, "noise")
    kind = _take(sec, "noise", "kind", "none")
    if not isinstance(kind, str):
        raise ConfigError(f"noise.kind must be a string, got {kind!r}")
    try:
        noise = NoiseSpec(
            kind=kind,
            std=_num("noise", "std", _take(sec, "noise", "std", 0.0)),
            seed=_intval("noise", "seed", _take(sec, "noise", "seed", 0)))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"noise: {exc}") from exc
    _no_leftovers(sec, "noise")

    sec = _section(data, "sim")
    t_end = _num("sim", "t_end", _take(sec, "sim", "t_end", required=True))
    dt_raw = _take(sec, "sim", "dt")
    dt = None if dt_raw is None else _num("sim", "dt", dt_raw)
    record_stride = _intval("sim", "record_stride",
                            _take(sec, "sim", "record_stride", 1))
    renorm_stride = _intval("sim", "renorm_stride",
                            _take(sec, "sim", "renorm_stride", 1))
    _no_leftovers(sec, "sim")

    sec = _section(data, "init")
    p0 = _vec3("init", "p", _take(sec, "init", "p", [0.0, 0.0, 0.0]))
    R_raw = _take(sec, "init", "R")
    R0 = np.eye(3) if R_raw is None else _matrix("init", "R", R_raw)
    z1_raw = _take(sec, "init", "zeta1")
    z2_raw = _take(sec, "init", "zeta2")
    zeta1 = None if z1_raw is None else _num("init", "zeta1", z1_raw)
    zeta2 = None if z2_raw is None else _num("init", "zeta2", z2_raw)
    rho = _num("init", "rho", _take(sec, "init", "rho", 1.0))
    _no_leftovers(sec, "init")

    try:
        return SimConfig(swimmer=swimmer, filter=filt, field=fld, noise=noise,
                         t_end=t_end, dt=dt, p0=p0, R0=R0,
                         zeta1_0=zeta1, zeta2_0=zeta2, rho0=rho,
                         record_stride=record_stride,
                         renorm_stride=renorm_stride)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def resolved_dict(config: SimConfig) -> dict:
    """Fully expanded config with every default filled in."""
    sw, fl, fd, nz = config.swimmer, config.filter, config.field, config.noise
    return {
        "swimmer": {
            "v": sw.v,
            "omega_par_0": sw.omega_par_0,
            "omega_perp_0": sw.omega_perp_0,
            "omega_par_1": sw.omega_par_1,
            "omega_perp_1": sw.omega_perp_1,
        },
        "filter": {
            "sigma1": fl.sigma1,
            "sigma2": fl.sigma2,
            "mu": fl.mu,
            "rho_max": fl.rho_max,
        },
        "field": {
            "variant": fd.variant,
            "source": fd.source.tolist(),
            "l0": fd.l0,
            "clamp_radius": fd.clamp_radius,
            "direction": fd.direction.tolist(),
            "slope": fd.slope,
            "offset": fd.offset,
            "width": fd.width,
            "peak": fd.peak,
            "level": fd.level,
        },
        "noise": {"kind": nz.kind, "std": nz.std, "seed": nz.seed},
        "sim": {
            "t_end": config.t_end,
            "dt": config.dt,
            "record_stride": config.record_stride,
            "renorm_stride": config.renorm_stride,
        },
        "init": {
            "p": config.p0.tolist(),
            "R": config.R0.tolist(),
            "zeta1": config.zeta1_0,
            "zeta2": config.zeta2_0,
            "rho": config.rho0,
        },
    }


def canonical_json(data: dict) -> str:
    """Key-sorted, whitespace-free serialization; the digestable form."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def config_digest(data: dict) -> str:
    """Hex sha256 of the canonical serialization."""
    return hashlib.sha256(canonical_json(data).encode("ascii")).hexdigest()


def load_config_dict(path: str | Path) -> dict:
    """Read raw JSON, rejecting non-finite numeric literals."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return data


def load_config(path: str | Path) -> SimConfig:
    return parse_config(load_config_dict(path))


def set_path(data: dict, path: str, value) -> None:
    """Assign a dotted-path leaf in a raw config dict, in place.

    Dict levels are created as needed (schema validation happens later, in
    parse_config, so misspelled paths still fail loudly). Numeric segments
    index existing lists.
    """
    parts = path.split(".")
    if not all(parts):
        raise ConfigError(f"bad parameter path {path!r}")
    node = data
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            node = _list_item(node, part, path)
        elif isinstance(node, dict):
            nxt = node.get(part)
            if nxt is None:
                nxt = {}
                node[part] = nxt
            node = nxt
        else:
            raise ConfigError(f"path {path!r} descends into a scalar at {part!r}")
    last = parts[-1]
    if isinstance(node, list):
        idx = _list_index(node, last, path)
        node[idx] = value
    elif isinstance(node, dict):
        node[last] = value
    else:
        raise ConfigError(f"path {path!r} descends into a scalar at {last!r}")


def _list_index(node: list, part: str, path: str) -> int:
    try:
        idx = int(part)
    except ValueError:
        raise ConfigError(f"path {path!r}: {part!r} is not a list index") from None
    if not 0 <= idx < len(node):
        raise ConfigError(f"path {path!r}: index {idx} out of range")
    return idx


def _list_item(node: list, part: str, path: str):
    return node[_list_index(node, part, path)]
