import json
import os

import numpy as np
import pytest

from regobs.cli import main

DEFAULT_SEED = 42


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=None, help="seed for randomized tests")


@pytest.fixture
def seed(request) -> int:
    value = request.config.getoption("--seed")
    if value is None:
        value = int(os.environ.get("REGOBS_TEST_SEED", DEFAULT_SEED))
    return value


@pytest.fixture
def rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


@pytest.fixture
def write_config(tmp_path):
    def _write(doc: dict, name: str = "config.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return _write


@pytest.fixture
def run_cli(capsys):
    """Run the CLI in-process and return ``(exit_code, stdout, stderr)``."""

    def _run(*argv):
        code = main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err

    return _run


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, summary_lines
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in summary_lines():
        terminalreporter.write_line(line)
