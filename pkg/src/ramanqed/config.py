"""Scenario files: YAML with a fixed key set, presets and strict validation.

Grammar (every key optional unless a preset or another key requires it)::

    preset: default | toy2x2 | rb85
    model: effective | full | both
    system:
      omega_p: float            # pump frequency
      omega_31: float           # 1-3 splitting
      n_atoms: int              # >= 2
      gamma: float              # flat continuum coupling giving this rate
      coupling:                 # or an explicit profile (not both)
        kind: flat | lorentzian-window | user-table
        lambda0: float
        center: float           # lorentzian-window
        width: float            # lorentzian-window
        points: [[omega, lambda], ...]   # user-table
    grid:
      bandwidth_gamma: float    # or bandwidth (absolute)
      n_modes: int
      continuum: bool           # couplings are densities, scaled by sqrt(spacing)
      include_dark: bool
      validate: bool
    integrator:
      method: expm | rk4
      dt_gamma: float           # or dt
      t_max_gamma: float        # or t_max
      samples: int
    full:
      g_p: float                # with g_s and detuning2, or
      g_s: float
      detuning2: float
      ratio: float              # derive everything from the effective coupling
      stark_shift: float
    adiabatic:
      ratios: [float, ...]      # or detuning2: [float, ...]
    sweep:
      axis: lambda0 | n_atoms | bandwidth | n_modes | detuning2
      values: [number, ...]
    output:
      dir: path
      formats: [csv, json]

Keys ending in ``_gamma`` are in units of the reference decay rate of the
base scenario (1/gamma for times).  Frequencies are in the system's unit.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .core import (
    CouplingProfile,
    ModeGrid,
    SystemParams,
    build_continuum_grid,
    build_mode_grid,
    continuum_coupling,
    continuum_gamma,
    rb85_params,
)
from .dynamics import MAX_DIM
from .errors import RamanQEDError
from .full_model import FullParams

MODELS = ("effective", "full", "both")
METHODS = ("expm", "rk4")
SWEEP_AXES = ("lambda0", "n_atoms", "bandwidth", "n_modes", "detuning2")
FORMATS = ("csv", "json")
MAX_SWEEP_POINTS = 10_000
DEFAULT_STARK_SHIFT = 2.5

_NUM = "number"
_INT = "integer"
_BOOL = "boolean"
_STR = "string"
_LIST = "list"

SCHEMA: dict = {
    "preset": _STR,
    "model": _STR,
    "system": {
        "omega_p": _NUM,
        "omega_31": _NUM,
        "n_atoms": _INT,
        "gamma": _NUM,
        "coupling": {
            "kind": _STR,
            "lambda0": _NUM,
            "center": _NUM,
            "width": _NUM,
            "points": _LIST,
        },
    },
    "grid": {
        "bandwidth_gamma": _NUM,
        "bandwidth": _NUM,
        "n_modes": _INT,
        "continuum": _BOOL,
        "include_dark": _BOOL,
        "validate": _BOOL,
    },
    "integrator": {
        "method": _STR,
        "dt_gamma": _NUM,
        "dt": _NUM,
        "t_max_gamma": _NUM,
        "t_max": _NUM,
        "samples": _INT,
    },
    "full": {
        "g_p": _NUM,
        "g_s": _NUM,
        "detuning2": _NUM,
        "ratio": _NUM,
        "stark_shift": _NUM,
    },
    "adiabatic": {"ratios": _LIST, "detuning2": _LIST},
    "sweep": {"axis": _STR, "values": _LIST},
    "output": {"dir": _STR, "formats": _LIST},
}

RB85_GAMMA = 1e-3
_RB85 = rb85_params(RB85_GAMMA)

PRESETS: dict = {
    "default": {
        "model": "effective",
        "system": {"omega_p": 20.5, "omega_31": 0.25, "n_atoms": 2, "gamma": 1.0},
        "grid": {"bandwidth_gamma": 40.0, "n_modes": 1600, "continuum": True},
        "integrator": {"method": "expm", "dt_gamma": 1e-3, "t_max_gamma": 5.0, "samples": 501},
    },
    # single resonant mode flanked by two uncoupled ones: plain Rabi flopping
    "toy2x2": {
        "model": "effective",
        "system": {
            "omega_p": 10.0,
            "omega_31": 3.0,
            "n_atoms": 2,
            "coupling": {"kind": "user-table", "points": [[6.0, 0.0], [7.0, 0.1], [8.0, 0.0]]},
        },
        "grid": {"bandwidth": 2.0, "n_modes": 3, "continuum": False, "validate": False},
        "integrator": {"method": "expm", "dt": 1e-3, "t_max": 60.0, "samples": 601},
    },
    "rb85": {
        "model": "effective",
        "system": {
            "omega_p": _RB85.omega_p,
            "omega_31": _RB85.omega_31,
            "n_atoms": 2,
            "gamma": RB85_GAMMA,
        },
        "grid": {"bandwidth_gamma": 40.0, "n_modes": 1600, "continuum": True},
        "integrator": {"method": "expm", "t_max_gamma": 5.0, "samples": 501},
    },
}


class ConfigError(RamanQEDError):
    """Invalid scenario file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


# -- YAML loading with key line numbers --------------------------------------


class _Mapping(dict):
    """dict that remembers the source line of each key."""

    lines: dict


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader: _Loader, node: yaml.MappingNode) -> _Mapping:
    loader.flatten_mapping(node)
    out = _Mapping()
    out.lines = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        line = key_node.start_mark.line + 1
        if not isinstance(key, str):
            raise ConfigError(f"keys must be strings, got {key!r}", line)
        if key in out:
            raise ConfigError(f"duplicate key '{key}'", line)
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = line
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _collect_lines(node, prefix=(), acc=None) -> dict:
    acc = {} if acc is None else acc
    if isinstance(node, _Mapping):
        for key, value in node.items():
            acc[prefix + (key,)] = node.lines[key]
            _collect_lines(value, prefix + (key,), acc)
    return acc


def _plain(node):
    if isinstance(node, dict):
        return {k: _plain(v) for k, v in node.items()}
    if isinstance(node, list):
        return [_plain(v) for v in node]
    return node


def load_text(text: str, source: str = "<config>") -> tuple[dict, dict]:
    """Parse YAML text into (plain dict, {key path: line})."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except ConfigError:
        raise
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{source}: YAML syntax error: {exc.problem}", line) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: YAML error: {exc}") from exc
    if doc is None:
        raise ConfigError(f"{source}: configuration is empty", 1)
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a mapping of sections", 1)
    return _plain(doc), _collect_lines(doc)


# -- schema checks -----------------------------------------------------------


def _type_ok(value, kind: str) -> bool:
    if kind == _BOOL:
        return isinstance(value, bool)
    if kind == _INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == _NUM:
        return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if kind == _STR:
        return isinstance(value, str)
    if kind == _LIST:
        return isinstance(value, list)
    return False


def _check_schema(doc: dict, schema: dict, lines: dict, prefix=()) -> None:
    for key, value in doc.items():
        path = prefix + (key,)
        line = lines.get(path)
        dotted = ".".join(path)
        if key not in schema:
            allowed = ", ".join(sorted(schema))
            raise ConfigError(f"unknown key '{dotted}' (allowed here: {allowed})", line)
        kind = schema[key]
        if isinstance(kind, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{dotted}' must be a mapping", line)
            _check_schema(value, kind, lines, path)
        elif not _type_ok(value, kind):
            raise ConfigError(f"'{dotted}' must be a finite {kind}, got {value!r}", line)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


# -- resolved scenario -------------------------------------------------------


@dataclass(frozen=True)
class GridSettings:
    bandwidth: float
    n_modes: int
    continuum: bool = True
    include_dark: bool = False
    validate: bool = True


@dataclass(frozen=True)
class IntegratorSettings:
    method: str
    dt: float
    t_max: float
    samples: int

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.samples)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated scenario; built by :func:`resolve`."""

    model: str
    params: SystemParams
    gamma_ref: float
    grid: GridSettings
    integrator: IntegratorSettings
    full: Optional[FullParams]
    ladder: tuple = ()
    ladder_kind: str = ""
    ladder_values: tuple = ()
    sweep_axis: Optional[str] = None
    sweep_values: tuple = ()
    output_dir: Optional[str] = None
    formats: tuple = FORMATS
    raw: dict = field(default_factory=dict, compare=False)
    digest: str = ""

    def build_grid(self) -> ModeGrid:
        if self.grid.continuum:
            return build_continuum_grid(self.params, self.grid.bandwidth, self.grid.n_modes)
        return build_mode_grid(self.params, self.grid.bandwidth, self.grid.n_modes)

    @property
    def spacing(self) -> float:
        return self.grid.bandwidth / (self.grid.n_modes - 1)

    @property
    def coupling_scale(self) -> float:
        return math.sqrt(self.spacing) if self.grid.continuum else 1.0


def _fail(msg: str, lines: dict, *path) -> ConfigError:
    return ConfigError(msg, lines.get(tuple(path)))


def _profile(sysd: dict, lines: dict) -> CouplingProfile:
    cd = sysd["coupling"]
    kind = cd.get("kind", "flat")
    line = ("system", "coupling")
    try:
        if kind == "flat":
            _only(cd, {"kind", "lambda0"}, lines, line)
            return CouplingProfile.flat(float(cd["lambda0"]))
        if kind == "lorentzian-window":
            _only(cd, {"kind", "lambda0", "center", "width"}, lines, line)
            return CouplingProfile.lorentzian_window(
                float(cd["lambda0"]), float(cd["center"]), float(cd["width"])
            )
        if kind == "user-table":
            _only(cd, {"kind", "points"}, lines, line)
            pts = cd["points"]
            if not all(isinstance(p, list) and len(p) == 2 and all(_type_ok(v, _NUM) for v in p) for p in pts):
                raise _fail("'system.coupling.points' must be [[omega, lambda], ...]", lines, *line, "points")
            return CouplingProfile.user_table([(float(w), float(l)) for w, l in pts])
    except KeyError as exc:
        raise _fail(f"coupling kind '{kind}' needs key '{exc.args[0]}'", lines, *line) from None
    raise _fail(f"unknown coupling kind '{kind}'", lines, *line, "kind")


def _only(d: dict, allowed: set, lines: dict, prefix: tuple) -> None:
    for key in d:
        if key not in allowed:
            raise _fail(f"key '{key}' does not apply to this coupling kind", lines, *prefix, key)


def _pick(section: dict, name: str, gamma_ref: float, lines: dict, sec: str, required=True):
    """Return the absolute value of ``name`` or ``name_gamma`` (exactly one)."""
    rel = f"{name}_gamma"
    has_abs, has_rel = name in section, rel in section
    if has_abs and has_rel:
        raise _fail(f"give either '{sec}.{name}' or '{sec}.{rel}', not both", lines, sec, rel)
    if has_abs:
        return float(section[name])
    if has_rel:
        if not gamma_ref > 0:
            raise _fail(f"'{sec}.{rel}' needs a nonzero reference decay rate", lines, sec, rel)
        value = float(section[rel])
        return value / gamma_ref if name in ("dt", "t_max") else value * gamma_ref
    if required:
        raise _fail(f"missing '{sec}.{name}' (or '{sec}.{rel}')", lines, sec)
    return None


def _positive(value, what: str, lines: dict, *path):
    if not value > 0:
        raise _fail(f"'{what}' must be > 0", lines, *path)
    return value


def _system(doc: dict, lines: dict, preset: Optional[str]) -> tuple[SystemParams, Optional[float]]:
    sysd = doc.get("system", {})
    for key in ("omega_p", "omega_31"):
        if key not in sysd:
            raise _fail(f"missing 'system.{key}'", lines, "system")
    n = sysd.get("n_atoms", 2)
    if "gamma" in sysd and "coupling" in sysd:
        raise _fail("give either 'system.gamma' or 'system.coupling', not both", lines, "system", "gamma")
    if "gamma" in sysd:
        gamma = float(sysd["gamma"])
        if not gamma >= 0:
            raise _fail("'system.gamma' must be >= 0", lines, "system", "gamma")
        profile = CouplingProfile.flat(continuum_coupling(gamma, n))
        given = gamma
    elif "coupling" in sysd:
        profile = _profile(sysd, lines)
        given = None
    else:
        raise _fail("missing 'system.gamma' or 'system.coupling'", lines, "system")
    params = SystemParams(float(sysd["omega_p"]), float(sysd["omega_31"]), n, profile)
    if preset == "rb85":
        params = dataclasses.replace(
            params,
            frequency_unit=_RB85.frequency_unit,
            frequency_unit_label=_RB85.frequency_unit_label,
            metadata=dict(_RB85.metadata),
        )
    return params, given


def _reference_gamma(params: SystemParams, doc: dict, lines: dict, continuum: bool) -> float:
    """Decay rate used to interpret the ``*_gamma`` keys."""
    try:
        lam = float(params.coupling_profile.evaluate(params.omega_res))
    except RamanQEDError as exc:
        raise _fail(f"coupling profile does not cover the resonance: {exc}", lines, "system") from None
    if continuum:
        return continuum_gamma(lam, params.n_atoms)
    gd = doc.get("grid", {})
    if "bandwidth_gamma" in gd:
        raise _fail(
            "'grid.bandwidth_gamma' needs 'grid.continuum: true'; give 'grid.bandwidth'",
            lines, "grid", "bandwidth_gamma",
        )
    if "bandwidth" not in gd or "n_modes" not in gd:
        return 0.0
    grid = build_mode_grid(params, float(gd["bandwidth"]), int(gd["n_modes"]))
    return 2 * math.pi * grid.density * params.n_atoms * grid.coupling_near(params.omega_res) ** 2


def _full(doc: dict, lines: dict, params: SystemParams, scale: float) -> Optional[FullParams]:
    fd = doc.get("full")
    if fd is None:
        return None
    explicit = {"g_p", "g_s", "detuning2"}
    derived = {"ratio"}
    if fd.keys() & explicit and fd.keys() & derived:
        raise _fail("'full' takes either g_p/g_s/detuning2 or ratio, not both", lines, "full", "ratio")
    if "ratio" in fd:
        ratio = _positive(float(fd["ratio"]), "full.ratio", lines, "full", "ratio")
        stark = _positive(float(fd.get("stark_shift", DEFAULT_STARK_SHIFT)), "full.stark_shift", lines, "full", "stark_shift")
        return FullParams.from_effective(params, ratio, stark, scale)
    missing = explicit - fd.keys()
    if missing:
        raise _fail(f"'full' is missing {sorted(missing)}", lines, "full")
    if "stark_shift" in fd:
        raise _fail("'full.stark_shift' only applies together with 'full.ratio'", lines, "full", "stark_shift")
    g_s = float(fd["g_s"])
    if not g_s >= 0:
        raise _fail("'full.g_s' must be >= 0", lines, "full", "g_s")
    return FullParams(
        float(fd["g_p"]),
        CouplingProfile.flat(g_s * scale),
        float(fd["detuning2"]),
        params.omega_p,
        params.omega_31,
        params.n_atoms,
    )


def _ladder(doc: dict, lines: dict, params: SystemParams, full: Optional[FullParams], scale: float):
    ad = doc.get("adiabatic")
    if ad is None:
        return (), "", ()
    if "ratios" in ad and "detuning2" in ad:
        raise _fail("'adiabatic' takes either ratios or detuning2, not both", lines, "adiabatic", "detuning2")
    kind = "ratios" if "ratios" in ad else "detuning2" if "detuning2" in ad else None
    if kind is None:
        raise _fail("'adiabatic' needs 'ratios' or 'detuning2'", lines, "adiabatic")
    values = ad[kind]
    if not values or not all(_type_ok(v, _NUM) for v in values):
        raise _fail(f"'adiabatic.{kind}' must be a non-empty list of numbers", lines, "adiabatic", kind)
    if any(v == 0 for v in values):
        raise _fail(
            f"'adiabatic.{kind}' contains 0: a resonant intermediate level cannot be eliminated",
            lines, "adiabatic", kind,
        )
    if kind == "ratios":
        if any(v < 0 for v in values):
            raise _fail("'adiabatic.ratios' must be positive", lines, "adiabatic", kind)
        stark = float(doc.get("full", {}).get("stark_shift", DEFAULT_STARK_SHIFT))
        points = tuple(FullParams.from_effective(params, float(r), stark, scale) for r in values)
    else:
        if full is None or full.detuning2 == 0:
            raise _fail(
                "'adiabatic.detuning2' needs a 'full' reference with nonzero detuning2",
                lines, "adiabatic", kind,
            )
        points = tuple(_rescaled(full, float(d)) for d in values)
    return points, kind, tuple(float(v) for v in values)


def _rescaled(ref: FullParams, detuning2: float) -> FullParams:
    """Move to a new detuning with g's scaled by sqrt(|d/d_ref|); |lambda_eff| stays put."""
    s = math.sqrt(abs(detuning2 / ref.detuning2))
    return FullParams(
        ref.g_p * s,
        ref.g_s_profile.scaled(s),
        detuning2,
        ref.omega_p,
        ref.omega_31,
        ref.n_atoms,
    )


def resolve(doc: dict, lines: Optional[dict] = None) -> ScenarioConfig:
    """Validate a merged config dict and build the scenario objects."""
    lines = lines or {}
    _check_schema(doc, SCHEMA, lines)
    preset = doc.get("preset")
    if preset is not None and preset not in PRESETS:
        raise _fail(f"unknown preset '{preset}' (choose from {', '.join(PRESETS)})", lines, "preset")
    model = doc.get("model", "effective")
    if model not in MODELS:
        raise _fail(f"'model' must be one of {', '.join(MODELS)}", lines, "model")
    try:
        return _resolve(doc, lines, preset, model)
    except ConfigError:
        raise
    except RamanQEDError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve(doc: dict, lines: dict, preset, model: str) -> ScenarioConfig:
    gd = doc.get("grid", {})
    continuum = bool(gd.get("continuum", True))
    params, given = _system(doc, lines, preset)
    if given is not None and not continuum:
        raise _fail("'system.gamma' needs 'grid.continuum: true'", lines, "system", "gamma")
    gamma_ref = given if given is not None else _reference_gamma(params, doc, lines, continuum)

    bandwidth = _positive(_pick(gd, "bandwidth", gamma_ref, lines, "grid"), "grid.bandwidth", lines, "grid")
    if "n_modes" not in gd:
        raise _fail("missing 'grid.n_modes'", lines, "grid")
    n_modes = int(gd["n_modes"])
    if n_modes < 3:
        raise _fail("'grid.n_modes' must be >= 3", lines, "grid", "n_modes")
    grid = GridSettings(bandwidth, n_modes, continuum, bool(gd.get("include_dark", False)), bool(gd.get("validate", True)))

    it = doc.get("integrator", {})
    method = it.get("method", "expm")
    if method not in METHODS:
        raise _fail(f"'integrator.method' must be one of {', '.join(METHODS)}", lines, "integrator", "method")
    t_max = _positive(_pick(it, "t_max", gamma_ref, lines, "integrator"), "integrator.t_max", lines, "integrator")
    dt = _pick(it, "dt", gamma_ref, lines, "integrator", required=(method == "rk4"))
    if dt is None:
        dt = 1e-3 / gamma_ref if gamma_ref > 0 else 1e-3 * t_max
    dt = _positive(dt, "integrator.dt", lines, "integrator")
    samples = int(it.get("samples", 501))
    if samples < 2:
        raise _fail("'integrator.samples' must be >= 2", lines, "integrator", "samples")
    integrator = IntegratorSettings(method, dt, t_max, samples)

    dim = 1 + n_modes + (n_modes + 1 if grid.include_dark else 0)
    if dim > MAX_DIM:
        raise _fail(f"grid gives a {dim}-dimensional basis (limit {MAX_DIM})", lines, "grid", "n_modes")
    try:
        probe = build_mode_grid(params, bandwidth, n_modes, CouplingProfile.flat(0.0))
        params.coupling_profile.evaluate(probe.frequencies)
    except RamanQEDError as exc:
        raise _fail(f"grid: {exc}", lines, "grid") from None
    spacing = probe.spacing
    scale = math.sqrt(spacing) if continuum else 1.0
    full = _full(doc, lines, params, scale)
    if model in ("full", "both") and full is None:
        raise _fail(f"model '{model}' needs a 'full' section", lines, "model")
    ladder, ladder_kind, ladder_values = _ladder(doc, lines, params, full, scale)

    axis, values = None, ()
    sd = doc.get("sweep")
    if sd is not None:
        axis = sd.get("axis")
        if axis not in SWEEP_AXES:
            raise _fail(f"'sweep.axis' must be one of {', '.join(SWEEP_AXES)}", lines, "sweep", "axis")
        vals = sd.get("values")
        if not vals or not all(_type_ok(v, _NUM) for v in vals):
            raise _fail("'sweep.values' must be a non-empty list of numbers", lines, "sweep", "values")
        if len(vals) > MAX_SWEEP_POINTS:
            raise _fail(f"sweep has more than {MAX_SWEEP_POINTS} points", lines, "sweep", "values")
        if axis in ("n_atoms", "n_modes") and not all(isinstance(v, int) for v in vals):
            raise _fail(f"'{axis}' sweep values must be integers", lines, "sweep", "values")
        if axis == "detuning2":
            if full is None:
                raise _fail("a detuning2 sweep needs a 'full' section", lines, "sweep", "axis")
            if any(v == 0 for v in vals):
                raise _fail("'sweep.values' contains detuning2 = 0", lines, "sweep", "values")
        if axis in ("n_atoms", "n_modes", "lambda0", "bandwidth") and any(v <= 0 for v in vals):
            raise _fail(f"'{axis}' sweep values must be positive", lines, "sweep", "values")
        values = tuple(vals)

    od = doc.get("output", {})
    formats = tuple(od.get("formats", FORMATS))
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise _fail(f"unknown output format {bad[0]!r}", lines, "output", "formats")

    return ScenarioConfig(
        model=model,
        params=params,
        gamma_ref=gamma_ref,
        grid=grid,
        integrator=integrator,
        full=full,
        ladder=ladder,
        ladder_kind=ladder_kind,
        ladder_values=ladder_values,
        sweep_axis=axis,
        sweep_values=values,
        output_dir=od.get("dir"),
        formats=formats,
        raw=doc,
        digest=config_digest(doc),
    )


def config_digest(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


_ALTERNATIVES = {
    "system": [("gamma", "coupling")],
    "grid": [("bandwidth", "bandwidth_gamma")],
    "integrator": [("dt", "dt_gamma"), ("t_max", "t_max_gamma")],
    "full": [("ratio", "g_p"), ("ratio", "g_s"), ("ratio", "detuning2"), ("stark_shift", "g_p")],
    "adiabatic": [("ratios", "detuning2")],
}


def merged(doc: dict) -> dict:
    """Apply the named preset underneath the user's keys."""
    preset = doc.get("preset")
    if preset not in PRESETS:
        return doc
    base = copy.deepcopy(PRESETS[preset])
    # a user key replaces its preset alternative instead of clashing with it
    for section, pairs in _ALTERNATIVES.items():
        user, pre = doc.get(section), base.get(section)
        if not isinstance(user, dict) or not isinstance(pre, dict):
            continue
        for a, b in pairs:
            if a in user:
                pre.pop(b, None)
            if b in user:
                pre.pop(a, None)
    return _merge(base, doc)


def load_config(path) -> ScenarioConfig:
    """Read, merge with its preset, and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from exc
    return parse_config(text, str(p))


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """Validate scenario text; ``source`` names it in error messages."""
    doc, lines = load_text(text, source)
    _check_schema(doc, SCHEMA, lines)
    return resolve(merged(doc), lines)


def profile_config(profile: CouplingProfile) -> dict:
    """Config-file form of a coupling profile."""
    if profile.kind == "flat":
        return {"kind": "flat", "lambda0": profile.lambda0}
    if profile.kind == "lorentzian-window":
        center, width = profile.shape_params
        return {"kind": profile.kind, "lambda0": profile.lambda0, "center": center, "width": width}
    return {"kind": profile.kind, "points": [[w, lam] for w, lam in profile.shape_params]}


def absolute_config(cfg: ScenarioConfig) -> dict:
    """Copy of ``cfg.raw`` with shorthand keys replaced by explicit values.

    ``system.gamma`` becomes a flat coupling and ``*_gamma`` keys become
    absolute, all evaluated for the base scenario.  Sweeps edit this form so
    that changing one axis leaves every other physical input untouched.
    """
    doc = copy.deepcopy(cfg.raw)
    sysd = doc.setdefault("system", {})
    if "gamma" in sysd:
        del sysd["gamma"]
        sysd["coupling"] = profile_config(cfg.params.coupling_profile)
    gd = doc.setdefault("grid", {})
    gd.pop("bandwidth_gamma", None)
    gd["bandwidth"] = cfg.grid.bandwidth
    it = doc.setdefault("integrator", {})
    for key in ("dt", "t_max"):
        it.pop(f"{key}_gamma", None)
    it["dt"] = cfg.integrator.dt
    it["t_max"] = cfg.integrator.t_max
    return doc
