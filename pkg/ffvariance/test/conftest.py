#!/usr/bin/env python3
"""
pytest 共通設定

src/ のモジュールを素の名前で import できるようにし、よく使う体と
hypothesis の設定を用意します。
"""

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

SRC_DIR = Path(__file__).resolve().parent.parent / "src"
if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

from finite_field import construct_field  # noqa: E402
from poly_ring import Poly  # noqa: E402

settings.register_profile(
    "ffvariance",
    derandomize=True,
    deadline=None,
    max_examples=500,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ffvariance")


@pytest.fixture
def F2():
    return construct_field(2, 1)


@pytest.fixture
def F3():
    return construct_field(3, 1)


@pytest.fixture
def F4():
    return construct_field(2, 2)


@pytest.fixture
def F5():
    return construct_field(5, 1)


@pytest.fixture
def T3(F3):
    return Poly.T(F3)


@pytest.fixture
def test_data_dir():
    return Path(__file__).resolve().parent.parent / "data" / "test_data"
