"""Shared test setup.

Thread pinning must happen before numpy is imported anywhere, so this module
sets the env vars at import time (pytest loads conftest first).
"""

import os

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import pytest  # noqa: E402


@pytest.fixture(autouse=True)
def _isolate_seed_env(monkeypatch):
    """Keep an ambient APR_SEED from leaking into tests that rely on flags."""
    monkeypatch.delenv("APR_SEED", raising=False)
