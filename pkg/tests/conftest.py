"""Shared fixtures: the calibrated default experiment and its variants.

Everything expensive (trajectories, sweeps, refinement ladders) is
session-scoped so the acceptance module and the unit tests can share the
same computed runs.  The acceptance verdicts are collected in a
CriterionLog and rendered as one line per criterion at the end of the
session.
"""

import time

import pytest

from crossfv import parse_config, run_refinement, run_single, run_sweep

DEFAULT_INI = """\
[grid]
dimension = 1
half_length = 2.0
cells_per_axis = 256
boundary = noflux

[time]
t_final = 1.0
cfl_safety = 0.4

[model]
nu = 0.01
anisotropy = identity
nbar1 = 1.0
slope1 = 0.3
nbar2 = 1.0
slope2 = 0.3

[initial]
preset = gauss-bump
center1 = 0.0
width1 = 1.0
amplitude1 = 0.45
center2 = 0.2
width2 = 0.05
amplitude2 = 0.4

[solver]
rel_tolerance = 1e-10

[output]
directory = out
"""

#: Same flow but with both growth laws switched off.
CONSERVATION_INI = (DEFAULT_INI
                    .replace("slope1 = 0.3", "slope1 = 0.0")
                    .replace("slope2 = 0.3", "slope2 = 0.0"))

#: Two equal-height blocks meeting inside a cell: the canonical
#: segregated datum (uniform total density, zero velocity).
BLOCKS_INI = """\
[grid]
dimension = 1
half_length = 1.0
cells_per_axis = 128
boundary = noflux

[time]
t_final = 0.5
cfl_safety = 0.4

[model]
nu = 0.0
anisotropy = identity
nbar1 = 1.0
slope1 = 0.3
nbar2 = 1.0
slope2 = 0.3

[initial]
preset = segregated-blocks
interface = 0.3333333333333333
height1 = 0.7
height2 = 0.7

[solver]
rel_tolerance = 1e-10

[output]
directory = out
"""

#: Single species, no growth, inviscid: a pure porous-medium spreading run.
PME_INI = """\
[grid]
dimension = 1
half_length = 1.0
cells_per_axis = 64
boundary = noflux

[time]
t_final = 0.5
cfl_safety = 0.4

[model]
nu = 0.0
anisotropy = identity
nbar1 = 1.0
slope1 = 0.0
nbar2 = 1.0
slope2 = 0.0

[initial]
preset = gauss-bump
center1 = 0.0
width1 = 0.5
amplitude1 = 0.8
center2 = 0.0
width2 = 0.5
amplitude2 = 0.0

[solver]
rel_tolerance = 1e-10

[output]
directory = out
"""

SWEEP_NUS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
REFINE_CELLS = (64, 128, 256, 512)
BLOCKS_CELLS = (128, 256, 512)


class CriterionLog:
    """One verdict per acceptance criterion, reported at session end."""

    LABELS = {
        1: "elliptic solver exactness",
        2: "density ceiling",
        3: "species mass conservation",
        4: "viscous entropy audit refinement",
        5: "inviscid entropy audit refinement",
        6: "vanishing-viscosity rates",
        7: "uniform dissipation bounds",
        8: "uniform scaled-gradient bound",
        9: "second-moment envelope",
        10: "segregation overlap decay",
        11: "single-species self-convergence",
        12: "byte-identical reruns",
    }

    def __init__(self):
        self.results = {}

    def check(self, number, passed, detail=""):
        """Record the verdict, then assert it."""
        self.results[number] = (bool(passed), detail)
        assert passed, f"criterion {number:02d} failed: {detail}"

    def lines(self):
        out = []
        for number in sorted(self.LABELS):
            label = self.LABELS[number]
            if number not in self.results:
                out.append(f"CRITERION {number:02d} FAIL {label}"
                           " (not evaluated)")
                continue
            passed, detail = self.results[number]
            verdict = "PASS" if passed else "FAIL"
            suffix = f": {detail}" if detail else ""
            out.append(f"CRITERION {number:02d} {verdict} {label}{suffix}")
        return out


def pytest_configure(config):
    config._criterion_log = CriterionLog()
    config._criteria_collected = False


def pytest_collection_modifyitems(config, items):
    config._criteria_collected = any("test_acceptance" in item.nodeid
                                     for item in items)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "_criterion_log", None)
    if log is None or not getattr(config, "_criteria_collected", False):
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for line in log.lines():
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criteria(request):
    return request.config._criterion_log


@pytest.fixture(scope="session")
def default_config():
    return parse_config(DEFAULT_INI)


@pytest.fixture(scope="session")
def brinkman_run(default_config):
    return run_single(default_config, write_outputs=False)


@pytest.fixture(scope="session")
def darcy_run(default_config):
    return run_single(default_config.with_nu(0.0), write_outputs=False)


@pytest.fixture(scope="session")
def conservation_runs():
    cfg = parse_config(CONSERVATION_INI)
    return {"brinkman": run_single(cfg, write_outputs=False),
            "darcy": run_single(cfg.with_nu(0.0), write_outputs=False)}


@pytest.fixture(scope="session")
def sweep_result(default_config):
    start = time.perf_counter()
    table = run_sweep(default_config, list(SWEEP_NUS), write_outputs=False)
    return table, time.perf_counter() - start


@pytest.fixture(scope="session")
def brinkman_refinement(default_config):
    return run_refinement(default_config, list(REFINE_CELLS),
                          write_outputs=False)


@pytest.fixture(scope="session")
def darcy_refinement(default_config):
    return run_refinement(default_config.with_nu(0.0), list(REFINE_CELLS),
                          write_outputs=False)


@pytest.fixture(scope="session")
def blocks_overlaps():
    cfg = parse_config(BLOCKS_INI)
    out = []
    for n in BLOCKS_CELLS:
        res = run_single(cfg.with_cells(n), write_outputs=False)
        out.append((res.grid.cell_size, res.records[-1].overlap, res))
    return out


@pytest.fixture(scope="session")
def pme_refinement():
    return run_refinement(parse_config(PME_INI), list(REFINE_CELLS),
                          write_outputs=False)


@pytest.fixture(scope="session")
def acceptance_runs(brinkman_run, darcy_run, conservation_runs, sweep_result,
                    brinkman_refinement, darcy_refinement, blocks_overlaps,
                    pme_refinement):
    """Every trajectory the acceptance suite computes, in one list."""
    runs = [brinkman_run, darcy_run, *conservation_runs.values()]
    runs += sweep_result[0].extras["results"]
    runs += brinkman_refinement.results
    runs += darcy_refinement.results
    runs += [res for _, _, res in blocks_overlaps]
    runs += pme_refinement.results
    return runs
