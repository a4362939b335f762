import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(ROOT, "configs")


@pytest.fixture
def report(capsys):
    """Print one verdict line straight to the terminal, bypassing capture."""

    def emit(tag: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            sys.stdout.write(f"\n{'PASS' if ok else 'FAIL'} {tag} {detail}".rstrip() + "\n")
            sys.stdout.flush()

    return emit


@pytest.fixture
def config_path():
    return lambda name: os.path.join(CONFIGS, name + ".cfg")
