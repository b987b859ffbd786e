from __future__ import annotations

import shutil
from pathlib import Path

import pytest

CORPUS_DIR = Path(__file__).parent / "data" / "corpus"


@pytest.fixture()
def corpus_copy(tmp_path: Path) -> Path:
    """Writable copy of the bundled fixture corpus."""
    target = tmp_path / "corpus"
    shutil.copytree(CORPUS_DIR, target)
    return target


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS_DIR
