"""Sectioned plain-text configuration for simulation runs.

Format: INI-style "[section]" headers with "key = value" lines and '#'
comments.  Parsing is strict — unknown sections or keys are errors, and
every diagnostic names the offending "section.key" path — so a config
file is an exact, diffable record of a run.  serialize_config emits a
canonical form whose reparse compares equal, and whose SHA-256 digest
identifies the experiment in summary outputs.
"""

import configparser
import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .evolution import GrowthLaw
from .fields import NOFLUX, PERIODIC, ScalarField, build_grid
from .tensors import (diagonal_tensor, identity_tensor, rotation_tensor,
                      smooth_tensor)

SECTIONS = ("grid", "time", "model", "initial", "solver", "output")
ANISOTROPY_PRESETS = ("identity", "diagonal", "rotation-mixed",
                      "smooth-varying")
INITIAL_PRESETS = ("constant", "gauss-bump", "segregated-blocks")
FORMATS = ("auto", "csv", "raw")


class ConfigError(Exception):
    """Invalid configuration; the message names the key path."""


@dataclass(frozen=True)
class GridSection:
    dimension: int
    half_length: float
    cells_per_axis: int
    boundary: str = NOFLUX


@dataclass(frozen=True)
class TimeSection:
    t_final: float
    cfl_safety: float = 0.4
    record_every_steps: int = 1


@dataclass(frozen=True)
class ModelSection:
    nu: float
    anisotropy: str = "identity"
    anisotropy_entries: tuple = ()
    anisotropy_angle: float = 0.0
    anisotropy_base: float = 0.0
    anisotropy_amplitude: float = 0.0
    anisotropy_time_frequency: float = 0.0
    anisotropy_cross: float = 0.0
    nbar1: float = 1.0
    slope1: float = 0.5
    nbar2: float = 1.0
    slope2: float = 0.5


@dataclass(frozen=True)
class InitialSection:
    preset: str
    # gauss-bump
    center1: tuple = ()
    width1: float = 0.0
    amplitude1: float = 0.0
    center2: tuple = ()
    width2: float = 0.0
    amplitude2: float = 0.0
    # constant
    value1: float = 0.0
    value2: float = 0.0
    # segregated-blocks
    interface: float = 0.0
    height1: float = 0.0
    height2: float = 0.0


@dataclass(frozen=True)
class SolverSection:
    rel_tolerance: float = 1e-10
    max_iterations: int = 0
    preconditioner: str = "jacobi"


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    snapshot_every_steps: int = 0
    formats: str = "auto"


@dataclass(frozen=True)
class SimConfig:
    grid: GridSection
    time: TimeSection
    model: ModelSection
    initial: InitialSection
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputSection = field(default_factory=OutputSection)

    def with_nu(self, nu):
        return replace(self, model=replace(self.model, nu=float(nu)))

    def with_cells(self, n):
        return replace(self, grid=replace(self.grid, cells_per_axis=int(n)))

    def with_directory(self, directory):
        return replace(self, output=replace(self.output,
                                            directory=str(directory)))


def _to_float(path, raw):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{path}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{path}: value must be finite")
    return value


def _to_int(path, raw):
    try:
        return int(raw, 10)
    except ValueError:
        raise ConfigError(f"{path}: expected an integer, got {raw!r}") from None


def _to_floats(path, raw):
    parts = [p.strip() for p in str(raw).split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{path}: expected a comma-separated number list")
    return tuple(_to_float(path, p) for p in parts)


def _to_str(path, raw):
    return str(raw).strip()


_PARSERS = {"float": _to_float, "int": _to_int, "floats": _to_floats,
            "str": _to_str}

# Per-section key schemas: key -> value kind.  Keys marked in _REQUIRED
# must appear; the rest fall back to the dataclass defaults.  Keys that
# only make sense for a particular preset are admitted conditionally.
_GRID_KEYS = {"dimension": "int", "half_length": "float",
              "cells_per_axis": "int", "boundary": "str"}
_TIME_KEYS = {"t_final": "float", "cfl_safety": "float",
              "record_every_steps": "int"}
_MODEL_BASE_KEYS = {"nu": "float", "anisotropy": "str", "nbar1": "float",
                    "slope1": "float", "nbar2": "float", "slope2": "float"}
_MODEL_PRESET_KEYS = {
    "identity": {},
    "diagonal": {"anisotropy_entries": "floats"},
    "rotation-mixed": {"anisotropy_entries": "floats",
                       "anisotropy_angle": "float"},
    "smooth-varying": {"anisotropy_base": "float",
                       "anisotropy_amplitude": "float",
                       "anisotropy_time_frequency": "float",
                       "anisotropy_cross": "float"},
}
_INITIAL_PRESET_KEYS = {
    "constant": {"value1": "float", "value2": "float"},
    "gauss-bump": {"center1": "floats", "width1": "float",
                   "amplitude1": "float", "center2": "floats",
                   "width2": "float", "amplitude2": "float"},
    "segregated-blocks": {"interface": "float", "height1": "float",
                          "height2": "float"},
}
_SOLVER_KEYS = {"rel_tolerance": "float", "max_iterations": "int",
                "preconditioner": "str"}
_OUTPUT_KEYS = {"directory": "str", "snapshot_every_steps": "int",
                "formats": "str"}

_REQUIRED = {
    "grid": ("dimension", "half_length", "cells_per_axis"),
    "time": ("t_final",),
    "model": ("nu",),
    "initial": ("preset",),
}
# Preset-conditional required keys (everything the preset admits).
_PRESET_REQUIRED = {
    ("model", "diagonal"): ("anisotropy_entries",),
    ("model", "rotation-mixed"): ("anisotropy_entries", "anisotropy_angle"),
    ("model", "smooth-varying"): ("anisotropy_base", "anisotropy_amplitude"),
    ("initial", "constant"): ("value1", "value2"),
    ("initial", "gauss-bump"): ("center1", "width1", "amplitude1",
                                "center2", "width2", "amplitude2"),
    ("initial", "segregated-blocks"): ("interface", "height1", "height2"),
}


def _read_section(cp, name, keys, required):
    if not cp.has_section(name):
        if required:
            raise ConfigError(f"missing section [{name}]")
        return {}
    out = {}
    for key in cp.options(name):
        if key not in keys:
            raise ConfigError(f"unknown key {name}.{key}")
        out[key] = _PARSERS[keys[key]](f"{name}.{key}", cp.get(name, key))
    for key in _REQUIRED.get(name, ()):
        if key not in out:
            raise ConfigError(f"missing required key {name}.{key}")
    return out


def _check_preset(path, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{path}: unknown preset {value!r} "
                          f"(expected one of {', '.join(allowed)})")


def _require_for_preset(section, preset, have):
    for key in _PRESET_REQUIRED.get((section, preset), ()):
        if key not in have:
            raise ConfigError(f"missing key {section}.{key} "
                              f"(required by preset {preset!r})")


def parse_config(text):
    """Parse and fully validate the sectioned key-value format."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")

    grid_raw = _read_section(cp, "grid", _GRID_KEYS, required=True)
    time_raw = _read_section(cp, "time", _TIME_KEYS, required=True)

    # model and initial have preset-dependent key sets: read the preset
    # first, then admit exactly the keys that preset defines.
    if not cp.has_section("model"):
        raise ConfigError("missing section [model]")
    aniso = cp.get("model", "anisotropy", fallback="identity").strip()
    _check_preset("model.anisotropy", aniso, ANISOTROPY_PRESETS)
    model_keys = dict(_MODEL_BASE_KEYS, **_MODEL_PRESET_KEYS[aniso])
    model_raw = _read_section(cp, "model", model_keys, required=True)
    _require_for_preset("model", aniso, model_raw)

    if not cp.has_section("initial"):
        raise ConfigError("missing section [initial]")
    preset = cp.get("initial", "preset", fallback="").strip()
    if not preset:
        raise ConfigError("missing required key initial.preset")
    _check_preset("initial.preset", preset, INITIAL_PRESETS)
    initial_keys = dict({"preset": "str"}, **_INITIAL_PRESET_KEYS[preset])
    initial_raw = _read_section(cp, "initial", initial_keys, required=True)
    _require_for_preset("initial", preset, initial_raw)

    solver_raw = _read_section(cp, "solver", _SOLVER_KEYS, required=False)
    output_raw = _read_section(cp, "output", _OUTPUT_KEYS, required=False)

    cfg = SimConfig(grid=GridSection(**grid_raw),
                    time=TimeSection(**time_raw),
                    model=ModelSection(**model_raw),
                    initial=InitialSection(**initial_raw),
                    solver=SolverSection(**solver_raw),
                    output=OutputSection(**output_raw))
    validate_config(cfg)
    return cfg


def _check(cond, path, message):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def validate_config(cfg):
    g, t, m, i = cfg.grid, cfg.time, cfg.model, cfg.initial
    d = g.dimension
    _check(d in (1, 2), "grid.dimension", "must be 1 or 2")
    _check(g.half_length > 0, "grid.half_length", "must be positive")
    _check(g.cells_per_axis >= 2, "grid.cells_per_axis", "must be at least 2")
    _check(g.boundary in (PERIODIC, NOFLUX), "grid.boundary",
           f"must be '{PERIODIC}' or '{NOFLUX}', got {g.boundary!r}")

    _check(t.t_final >= 0, "time.t_final", "must be nonnegative")
    _check(0 < t.cfl_safety <= 1, "time.cfl_safety", "must lie in (0, 1]")
    _check(t.record_every_steps >= 1, "time.record_every_steps",
           "must be at least 1")

    _check(m.nu >= 0, "model.nu", "must be nonnegative")
    for sp in (1, 2):
        nbar = getattr(m, f"nbar{sp}")
        slope = getattr(m, f"slope{sp}")
        _check(nbar > 0, f"model.nbar{sp}", "must be positive")
        _check(slope >= 0, f"model.slope{sp}", "must be nonnegative")
    if m.anisotropy == "diagonal":
        _check(len(m.anisotropy_entries) == d, "model.anisotropy_entries",
               f"needs exactly {d} entries")
        _check(min(m.anisotropy_entries) > 0, "model.anisotropy_entries",
               "entries must be positive")
    elif m.anisotropy == "rotation-mixed":
        _check(d == 2, "model.anisotropy", "rotation-mixed needs dimension 2")
        _check(len(m.anisotropy_entries) == 2, "model.anisotropy_entries",
               "needs exactly 2 entries")
        _check(min(m.anisotropy_entries) > 0, "model.anisotropy_entries",
               "entries must be positive")
    elif m.anisotropy == "smooth-varying":
        floor = (m.anisotropy_base - abs(m.anisotropy_amplitude)
                 - abs(m.anisotropy_cross))
        _check(floor > 0, "model.anisotropy_base",
               "must exceed |amplitude| + |cross|")
        _check(d == 2 or m.anisotropy_cross == 0.0, "model.anisotropy_cross",
               "cross term needs dimension 2")

    nbar = max(m.nbar1, m.nbar2)
    if i.preset == "constant":
        for sp in (1, 2):
            val = getattr(i, f"value{sp}")
            _check(0 <= val <= getattr(m, f"nbar{sp}"), f"initial.value{sp}",
                   f"must lie in [0, nbar{sp}]")
    elif i.preset == "gauss-bump":
        for sp in (1, 2):
            center = getattr(i, f"center{sp}")
            _check(len(center) == d, f"initial.center{sp}",
                   f"needs exactly {d} coordinates")
            _check(max(abs(c) for c in center) <= g.half_length,
                   f"initial.center{sp}", "must lie inside the domain")
            _check(getattr(i, f"width{sp}") > 0, f"initial.width{sp}",
                   "must be positive")
            amp = getattr(i, f"amplitude{sp}")
            _check(0 <= amp <= getattr(m, f"nbar{sp}"),
                   f"initial.amplitude{sp}", f"must lie in [0, nbar{sp}]")
    elif i.preset == "segregated-blocks":
        _check(abs(i.interface) < g.half_length, "initial.interface",
               "must lie strictly inside the domain")
        for sp in (1, 2):
            h = getattr(i, f"height{sp}")
            _check(0 <= h <= getattr(m, f"nbar{sp}"), f"initial.height{sp}",
                   f"must lie in [0, nbar{sp}]")

    s = cfg.solver
    _check(0 < s.rel_tolerance < 1, "solver.rel_tolerance",
           "must lie in (0, 1)")
    _check(s.max_iterations >= 0, "solver.max_iterations",
           "must be nonnegative (0 = automatic)")
    _check(s.preconditioner in ("none", "jacobi"), "solver.preconditioner",
           "must be 'none' or 'jacobi'")

    o = cfg.output
    _check(bool(o.directory), "output.directory", "must be nonempty")
    _check(o.snapshot_every_steps >= 0, "output.snapshot_every_steps",
           "must be nonnegative (0 = off)")
    _check(o.formats in FORMATS, "output.formats",
           f"must be one of {', '.join(FORMATS)}")
    if o.formats == "csv":
        _check(d == 1, "output.formats", "csv snapshots need dimension 1")
    if o.formats == "raw":
        _check(d == 2, "output.formats", "raw snapshots need dimension 2")
    return cfg


def _fmt(value):
    if isinstance(value, bool):
        raise TypeError("no boolean config values")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(cfg):
    """Canonical text form; parse(serialize(cfg)) compares equal to cfg."""
    m, i = cfg.model, cfg.initial
    lines = []

    def emit(section, pairs):
        lines.append(f"[{section}]")
        for key, value in pairs:
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")

    g = cfg.grid
    emit("grid", [("dimension", g.dimension), ("half_length", g.half_length),
                  ("cells_per_axis", g.cells_per_axis),
                  ("boundary", g.boundary)])
    t = cfg.time
    emit("time", [("t_final", t.t_final), ("cfl_safety", t.cfl_safety),
                  ("record_every_steps", t.record_every_steps)])
    model_pairs = [("nu", m.nu), ("anisotropy", m.anisotropy)]
    for key in sorted(_MODEL_PRESET_KEYS[m.anisotropy]):
        model_pairs.append((key, getattr(m, key)))
    model_pairs += [("nbar1", m.nbar1), ("slope1", m.slope1),
                    ("nbar2", m.nbar2), ("slope2", m.slope2)]
    emit("model", model_pairs)
    initial_pairs = [("preset", i.preset)]
    for key in sorted(_INITIAL_PRESET_KEYS[i.preset]):
        initial_pairs.append((key, getattr(i, key)))
    emit("initial", initial_pairs)
    s = cfg.solver
    emit("solver", [("rel_tolerance", s.rel_tolerance),
                    ("max_iterations", s.max_iterations),
                    ("preconditioner", s.preconditioner)])
    o = cfg.output
    emit("output", [("directory", o.directory),
                    ("snapshot_every_steps", o.snapshot_every_steps),
                    ("formats", o.formats)])
    return "\n".join(lines)


def config_digest(cfg):
    """SHA-256 of the canonical serialization; identifies the experiment."""
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def build_grid_from(cfg):
    g = cfg.grid
    return build_grid(g.dimension, g.half_length, g.cells_per_axis,
                      g.boundary)


def build_tensor(cfg, grid):
    m = cfg.model
    if m.anisotropy == "identity":
        return identity_tensor(grid)
    if m.anisotropy == "diagonal":
        return diagonal_tensor(grid, m.anisotropy_entries)
    if m.anisotropy == "rotation-mixed":
        a1, a2 = m.anisotropy_entries
        return rotation_tensor(grid, a1, a2, m.anisotropy_angle)
    return smooth_tensor(grid, m.anisotropy_base, m.anisotropy_amplitude,
                         m.anisotropy_time_frequency, m.anisotropy_cross)


def build_laws(cfg):
    m = cfg.model
    return (GrowthLaw(nbar=m.nbar1, slope=m.slope1),
            GrowthLaw(nbar=m.nbar2, slope=m.slope2))


def _gauss(grid, center, width, amplitude):
    mesh = grid.center_mesh()
    if grid.dimension == 1:
        arg = (mesh[0] - center[0]) ** 2
    else:
        arg = (mesh[0] - center[0]) ** 2 + (mesh[1] - center[1]) ** 2
    return amplitude * np.exp(-arg / (2.0 * width * width))


def build_initial(cfg, grid, laws):
    """Construct (n1, n2) from the initial-data preset and check the
    built fields against the density ceiling."""
    i = cfg.initial
    if i.preset == "constant":
        n1 = np.full(grid.cell_shape, i.value1)
        n2 = np.full(grid.cell_shape, i.value2)
    elif i.preset == "gauss-bump":
        n1 = _gauss(grid, i.center1, i.width1, i.amplitude1)
        n2 = _gauss(grid, i.center2, i.width2, i.amplitude2)
    else:
        # Exact cell averages of the two blocks: the cell straddling the
        # interface is split by volume fraction, so both species coexist
        # there and the discrete total is the average of the exact one.
        x = grid.center_mesh()[0]
        left = np.clip((i.interface - (x - 0.5 * grid.cell_size))
                       / grid.cell_size, 0.0, 1.0)
        n1 = i.height1 * left
        n2 = i.height2 * (1.0 - left)
    nbar = max(law.nbar for law in laws)
    peak = float(np.max(n1 + n2))
    if peak > nbar * (1.0 + 1e-12):
        raise ConfigError(
            "initial.preset: built initial data peaks at "
            f"{peak:.12g}, above the density ceiling {nbar:g}")
    return ScalarField(grid, n1), ScalarField(grid, n2)
