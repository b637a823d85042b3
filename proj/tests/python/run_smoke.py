"""Runs the Python smoke tests; exits 77 (skip) when the package is not installed."""

import importlib.util
import sys
from pathlib import Path

if importlib.util.find_spec("divaudit") is None or importlib.util.find_spec("pytest") is None:
    print("divaudit Python package not installed; run `pip install --no-build-isolation .`")
    sys.exit(77)

import pytest

sys.exit(pytest.main(["-q", "-p", "no:cacheprovider", str(Path(__file__).with_name("test_smoke.py"))]))
