"""
测试公共夹具
"""
import random
import shutil
from pathlib import Path

import pytest

from app.core.config import AnnotationConfig, get_annotation_config
from app.services.registry_service import Registry, load_registry_csv

FIXTURES_DIR = Path(__file__).parent / "fixtures"
GOLD_DIR = FIXTURES_DIR / "gold"
GOLD_DOCUMENT = "r3-L1-S1-N1-1976-06-03"


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240607)


@pytest.fixture
def config() -> AnnotationConfig:
    return get_annotation_config()


@pytest.fixture
def gold_registry_path() -> Path:
    return GOLD_DIR / "registry.csv"


@pytest.fixture
def gold_registry(gold_registry_path) -> Registry:
    return Registry(load_registry_csv(gold_registry_path)).freeze()


@pytest.fixture
def gold_input(tmp_path) -> Path:
    """复制到临时目录的金标准输入目录"""
    target = tmp_path / "input"
    shutil.copytree(GOLD_DIR / "input", target)
    return target


@pytest.fixture
def gold_expected() -> bytes:
    return (GOLD_DIR / "expected" / f"{GOLD_DOCUMENT}.xml").read_bytes()
