import os
import shutil
from pathlib import Path

import pytest


def _find_cli():
    env = os.environ.get("SINGELL_CLI")
    if env:
        return env
    local = Path(__file__).resolve().parents[2] / "build" / "singular-elliptic"
    if local.exists():
        return str(local)
    return shutil.which("singular-elliptic")


@pytest.fixture(scope="session")
def cli():
    path = _find_cli()
    if not path:
        pytest.skip("singular-elliptic executable not found (set SINGELL_CLI)")
    return str(Path(path).resolve())
