import json
from pathlib import Path

import pytest

from sear_hub.infra.settings import SettingsLoader
from sear_hub.logging_config import LoggerSingleton

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Каждый тест - в своём каталоге, без config.json: работают DEFAULTS."""
    monkeypatch.chdir(tmp_path)
    SettingsLoader.reset()
    LoggerSingleton().configure()
    yield
    SettingsLoader.reset()


@pytest.fixture
def config_file(tmp_path):
    def write(**values) -> Path:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(values), encoding="utf-8")
        return path
    return write


@pytest.fixture
def write_ndjson(tmp_path):
    def write(name: str, rows) -> Path:
        path = tmp_path / name
        lines = [r if isinstance(r, str) else json.dumps(r) for r in rows]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path
    return write


@pytest.fixture
def corpus_path() -> Path:
    return DATA / "corpus.ndjson"


@pytest.fixture
def templates_path() -> Path:
    return DATA / "templates.json"


@pytest.fixture
def personas_path() -> Path:
    return DATA / "personas.json"


@pytest.fixture
def questionnaire_path() -> Path:
    return DATA / "questionnaire.json"
