"""Shared fixtures: the bundled demo scene context and one converged run.

The full-ISAC Nelder-Mead run is expensive (seconds), so it is computed once
per session and shared by the optimizer, evaluation and acceptance tests.
"""

from importlib import resources

import pytest

from risdeploy import cli

VERDICTS = []


def record_verdict(line: str):
    "Collect acceptance verdicts for the end-of-run summary."
    VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


def demo_config_path() -> str:
    return str(resources.files("risdeploy").joinpath("data/demo_config.json"))


@pytest.fixture(scope="session")
def demo_cfg():
    return cli.load_config(demo_config_path())


@pytest.fixture(scope="session")
def ctx_full(demo_cfg):
    return cli.build_context(demo_cfg, "full-isac")


@pytest.fixture(scope="session")
def nm_result(ctx_full, demo_cfg):
    return cli.optimize(ctx_full, demo_cfg)


@pytest.fixture(scope="session")
def run_dir(demo_cfg, tmp_path_factory):
    "Artifacts of one full-isac pipeline run."
    out = tmp_path_factory.mktemp("run")
    code = cli.run_pipeline(dict(demo_cfg), out, mode="full-isac")
    assert code == cli.EXIT_OK
    return out


@pytest.fixture(scope="session")
def compare_rows(demo_cfg, tmp_path_factory):
    "Comparison table across all four modes (one optimization per mode)."
    import json

    out = tmp_path_factory.mktemp("compare")
    code = cli.compare_modes(dict(demo_cfg), list(cli.MODES), out)
    assert code == cli.EXIT_OK
    with open(out / "comparison.json") as fh:
        return json.load(fh)
