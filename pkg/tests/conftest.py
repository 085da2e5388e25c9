from pathlib import Path

import pytest

from splcmap.asset_scanner import ScanConfig, scan_corpus
from splcmap.feature_model import parse_feature_model

DATA_DIR = Path(__file__).parent / "data"
MINI_SPL = DATA_DIR / "mini_spl"
GOLDEN_DIR = DATA_DIR / "golden"


@pytest.fixture(scope="session")
def mini_spl_dir() -> Path:
    return MINI_SPL


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def mini_model():
    return parse_feature_model((MINI_SPL / "model.fm").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def mini_scan_config():
    return ScanConfig.from_file(MINI_SPL / "scan.json")


@pytest.fixture(scope="session")
def mini_table(mini_model, mini_scan_config):
    known = frozenset([mini_model.root.name] + [f.name for f in mini_model.features])
    return scan_corpus(MINI_SPL / "corpus", mini_scan_config, known)
