from sear_hub.infra.database import DatabaseManager
from sear_hub.infra.settings import SettingsLoader


def test_defaults_without_config_file():
    settings = SettingsLoader()
    assert settings.get("EMBEDDING_DIM") == 256
    assert settings.get("ROLE_MATCH_THRESHOLD") == 0.35
    assert settings.get("NO_SUCH_KEY", "x") == "x"


def test_config_file_overrides_defaults(config_file):
    path = config_file(EMBEDDING_DIM=64, HISTORY_WINDOW=2)
    settings = SettingsLoader(str(path))
    assert settings.get("EMBEDDING_DIM") == 64
    assert settings.get("HISTORY_WINDOW") == 2
    assert settings.get("FRAME_SIZE") == 1024


def test_flag_override_wins_and_reload_clears_it(config_file):
    settings = SettingsLoader(str(config_file(EMBEDDING_DIM=64)))
    settings.override("EMBEDDING_DIM", 32)
    assert settings.get("EMBEDDING_DIM") == 32
    assert settings.as_dict()["EMBEDDING_DIM"] == 32
    settings.reload()
    assert settings.get("EMBEDDING_DIM") == 64


def test_singleton():
    assert SettingsLoader() is SettingsLoader()
    assert DatabaseManager() is DatabaseManager()


def test_database_save_is_stable(tmp_path):
    db = DatabaseManager()
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    db.save(first, {"b": 1, "a": [1, 2]})
    db.save(second, {"a": [1, 2], "b": 1})
    assert first.read_bytes() == second.read_bytes()
    assert db.load(first) == {"a": [1, 2], "b": 1}


def test_iter_lines_skips_blank_lines(tmp_path):
    path = tmp_path / "x.ndjson"
    path.write_text('{"a":1}\n\n  \n{"b":2}\n', encoding="utf-8")
    assert list(DatabaseManager().iter_lines(path)) == [(1, '{"a":1}'), (4, '{"b":2}')]
