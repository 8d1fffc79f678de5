"""Configuration parsing: strictness, defaults, key-path diagnostics,
round-tripping, and construction of grids/tensors/laws/initial data.
"""

import numpy as np
import pytest

from crossfv import (ConfigError, build_grid_from, build_initial, build_laws,
                     build_tensor, config_digest, integrate, parse_config,
                     serialize_config)

MINIMAL = """\
[grid]
dimension = 1
half_length = 1.0
cells_per_axis = 16

[time]
t_final = 0.1

[model]
nu = 0.0

[initial]
preset = constant
value1 = 0.3
value2 = 0.2
"""


def _parse(text):
    return parse_config(text)


def test_minimal_config_fills_defaults():
    cfg = _parse(MINIMAL)
    assert cfg.grid.boundary == "noflux"
    assert cfg.time.cfl_safety == 0.4
    assert cfg.time.record_every_steps == 1
    assert cfg.model.anisotropy == "identity"
    assert cfg.solver.rel_tolerance == 1e-10
    assert cfg.solver.preconditioner == "jacobi"
    assert cfg.output.directory == "out"
    assert cfg.output.formats == "auto"


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match=r"\[plotting\]"):
        _parse(MINIMAL + "\n[plotting]\nstyle = dark\n")


def test_unknown_key_names_path():
    with pytest.raises(ConfigError, match="grid.spacing"):
        _parse(MINIMAL.replace("cells_per_axis = 16",
                               "cells_per_axis = 16\nspacing = 0.1"))


def test_missing_required_key_names_path():
    with pytest.raises(ConfigError, match="time.t_final"):
        _parse(MINIMAL.replace("t_final = 0.1", ""))


def test_bad_number_names_path():
    with pytest.raises(ConfigError, match="model.nu"):
        _parse(MINIMAL.replace("nu = 0.0", "nu = viscous"))


def test_bad_boundary_names_key():
    with pytest.raises(ConfigError, match="grid.boundary"):
        _parse(MINIMAL.replace("cells_per_axis = 16",
                               "cells_per_axis = 16\nboundary = periodic3"))


def test_unknown_presets_rejected():
    with pytest.raises(ConfigError, match="initial.preset"):
        _parse(MINIMAL.replace("preset = constant", "preset = ring"))
    with pytest.raises(ConfigError, match="model.anisotropy"):
        _parse(MINIMAL.replace("nu = 0.0", "nu = 0.0\nanisotropy = full"))


def test_preset_key_admission_is_conditional():
    # gauss-bump keys are errors under the constant preset...
    with pytest.raises(ConfigError, match="initial.width1"):
        _parse(MINIMAL.replace("value2 = 0.2", "value2 = 0.2\nwidth1 = 0.5"))
    # ... and the keys a preset requires must all be present.
    with pytest.raises(ConfigError, match="initial.value2"):
        _parse(MINIMAL.replace("value2 = 0.2", ""))
    with pytest.raises(ConfigError, match="anisotropy_entries"):
        _parse(MINIMAL.replace("nu = 0.0", "nu = 0.0\nanisotropy = diagonal"))


def test_value_range_validation():
    with pytest.raises(ConfigError, match="initial.value1"):
        _parse(MINIMAL.replace("value1 = 0.3", "value1 = 1.5"))  # above nbar
    with pytest.raises(ConfigError, match="model.nu"):
        _parse(MINIMAL.replace("nu = 0.0", "nu = -0.1"))
    with pytest.raises(ConfigError, match="cfl_safety"):
        _parse(MINIMAL.replace("t_final = 0.1",
                               "t_final = 0.1\ncfl_safety = 1.5"))
    with pytest.raises(ConfigError, match="rel_tolerance"):
        _parse(MINIMAL + "\n[solver]\nrel_tolerance = 2.0\n")


def test_malformed_text_rejected():
    with pytest.raises(ConfigError, match="malformed"):
        _parse("not a config at all\n")


def test_comments_and_inline_comments_ignored():
    cfg = _parse(MINIMAL.replace("value1 = 0.3",
                                 "# species one\nvalue1 = 0.3  # amplitude"))
    assert cfg.initial.value1 == 0.3


def test_round_trip_identity():
    gauss = MINIMAL.replace(
        "preset = constant\nvalue1 = 0.3\nvalue2 = 0.2",
        "preset = gauss-bump\ncenter1 = 0.0\nwidth1 = 0.5\n"
        "amplitude1 = 0.45\ncenter2 = 0.25\nwidth2 = 0.1\namplitude2 = 0.4")
    for text in (MINIMAL, gauss):
        cfg = _parse(text)
        again = _parse(serialize_config(cfg))
        assert again == cfg
        assert config_digest(again) == config_digest(cfg)


def test_digest_distinguishes_configs():
    a = config_digest(_parse(MINIMAL))
    b = config_digest(_parse(MINIMAL.replace("nu = 0.0", "nu = 0.5")))
    assert a != b
    assert len(a) == 64 and all(c in "0123456789abcdef" for c in a)


def test_with_nu_and_with_cells():
    cfg = _parse(MINIMAL)
    assert cfg.with_nu(0.25).model.nu == 0.25
    assert cfg.with_cells(64).grid.cells_per_axis == 64
    assert cfg.with_directory("elsewhere").output.directory == "elsewhere"
    # Originals untouched (frozen dataclasses).
    assert cfg.model.nu == 0.0


# ------------------------------------------------------------ builders

def test_builders_from_minimal():
    cfg = _parse(MINIMAL)
    grid = build_grid_from(cfg)
    assert grid.cells_per_axis == 16
    tensor = build_tensor(cfg, grid)
    assert tensor.preset == "identity"
    laws = build_laws(cfg)
    assert laws[0].nbar == 1.0 and laws[0].slope == 0.5  # documented default
    n1, n2 = build_initial(cfg, grid, laws)
    assert np.all(n1.values == 0.3)
    assert np.all(n2.values == 0.2)


def test_build_initial_gauss_bump():
    text = MINIMAL.replace(
        "preset = constant\nvalue1 = 0.3\nvalue2 = 0.2",
        "preset = gauss-bump\ncenter1 = 0.0\nwidth1 = 0.5\n"
        "amplitude1 = 0.45\ncenter2 = 0.25\nwidth2 = 0.1\namplitude2 = 0.4")
    cfg = _parse(text)
    grid = build_grid_from(cfg)
    n1, n2 = build_initial(cfg, grid, build_laws(cfg))
    assert float(np.max(n1.values)) <= 0.45
    assert float(np.max(n2.values)) <= 0.4
    x = grid.axis_centers()
    peak1 = x[int(np.argmax(n1.values))]
    assert abs(peak1 - 0.0) <= grid.cell_size


def test_build_initial_blocks_cell_averaged():
    text = MINIMAL.replace(
        "preset = constant\nvalue1 = 0.3\nvalue2 = 0.2",
        "preset = segregated-blocks\ninterface = 0.1\n"
        "height1 = 0.6\nheight2 = 0.5")
    cfg = _parse(text)
    grid = build_grid_from(cfg)
    n1, n2 = build_initial(cfg, grid, build_laws(cfg))
    # Mass equals the exact block masses (cell averaging is exact).
    assert integrate(n1) == pytest.approx(0.6 * (0.1 - (-1.0)), rel=1e-13)
    assert integrate(n2) == pytest.approx(0.5 * (1.0 - 0.1), rel=1e-13)
    # Away from the interface the fields are the pure block heights and
    # the species do not overlap except in the straddling cell.
    both = (n1.values > 0) & (n2.values > 0)
    assert int(np.sum(both)) <= 1


def test_build_initial_rejects_ceiling_violation():
    # Two bumps stacked at the same center exceed nbar = 1.
    text = MINIMAL.replace(
        "preset = constant\nvalue1 = 0.3\nvalue2 = 0.2",
        "preset = gauss-bump\ncenter1 = 0.0\nwidth1 = 0.5\n"
        "amplitude1 = 0.9\ncenter2 = 0.0\nwidth2 = 0.5\namplitude2 = 0.9")
    cfg = _parse(text)
    grid = build_grid_from(cfg)
    with pytest.raises(ConfigError, match="ceiling"):
        build_initial(cfg, grid, build_laws(cfg))


def test_gauss_center_dimension_checked():
    text = MINIMAL.replace(
        "preset = constant\nvalue1 = 0.3\nvalue2 = 0.2",
        "preset = gauss-bump\ncenter1 = 0.0, 0.0\nwidth1 = 0.5\n"
        "amplitude1 = 0.4\ncenter2 = 0.0\nwidth2 = 0.5\namplitude2 = 0.4")
    with pytest.raises(ConfigError, match="center1"):
        _parse(text)


def test_formats_dimension_compatibility():
    with pytest.raises(ConfigError, match="output.formats"):
        _parse(MINIMAL + "\n[output]\nformats = raw\n")  # raw needs 2D
    cfg = _parse(MINIMAL + "\n[output]\nformats = csv\n")
    assert cfg.output.formats == "csv"
