import numpy as np
import pytest

import provenance
from states import stream


@pytest.fixture(autouse=True)
def _provenance_to_tmp(tmp_path, monkeypatch):
    # niente log nella working directory durante i test
    monkeypatch.setattr(provenance, "LOG_DIR", str(tmp_path / "logs"))


@pytest.fixture
def rng() -> np.random.Generator:
    return stream(20240611, 0)
