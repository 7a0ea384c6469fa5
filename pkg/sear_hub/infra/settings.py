from pathlib import Path
from typing import Any

from sear_hub.infra.database import DatabaseManager


class SettingsLoader:
    _instance = None

    DEFAULTS = {
        "EMBEDDING_DIM": 256,
        "ROLE_MATCH_THRESHOLD": 0.35,
        "FRAME_SIZE": 1024,
        "SAMPLE_RATE_HZ": 16000,
        "SPEAKER_BAND_HZ": [0, 1000],
        "SPEAKER_RATIO_THRESHOLD": 0.60,
        "SILENCE_FLOOR": 1e-6,
        "TRAIT_VOCABULARY": [
            "profession", "ageBand", "residence", "education", "employer", "hometown",
        ],
        "EXPRESSION_KEYS": [
            "expression.smile", "expression.frown", "expression.surprise",
            "expression.neutral", "expression.eyeContact", "expression.browRaise",
        ],
        "EMOTION_TABLE": {
            "expression.smile": "happy",
            "expression.frown": "displeased",
            "expression.surprise": "surprised",
            "expression.neutral": "neutral",
            "expression.eyeContact": "engaged",
            "expression.browRaise": "curious",
        },
        "ENVIRONMENT_VOCABULARY": {
            "sofa": "Indoor", "lamp": "Indoor", "desk": "Indoor", "bed": "Indoor",
            "tv": "Indoor", "bookshelf": "Indoor", "refrigerator": "Indoor",
            "tree": "Outdoor", "car": "Outdoor", "traffic light": "Outdoor",
            "bench": "Outdoor", "bicycle": "Outdoor", "bus": "Outdoor",
            "person": "Neutral", "cup": "Neutral", "book": "Neutral",
        },
        "POSITIVE_TOKENS": [
            "love", "great", "yes", "sure", "cool", "awesome", "nice", "definitely",
            "absolutely", "fun", "interesting", "like",
        ],
        "NEGATIVE_TOKENS": [
            "no", "stop", "busy", "not", "never", "hate", "boring", "leave", "nope",
        ],
        "ABORT_TOKENS": ["leave me alone", "stop"],
        "HISTORY_WINDOW": 6,
        "TOPIC_BOOST": 1.0,
        "SALIENCE_BUMP": 0.1,
        "HALF_LIFE_DAYS": 30,
        "DEDUPE_JACCARD": 0.9,
        "ADAPT_TOP_K": 3,
        "PAYLOAD_DENYLIST": ["face.imageRef", "face.embedding", "voice.sampleRef"],
        "CHAT_BASE_URL": "http://127.0.0.1:8000/v1",
        "CHAT_MODEL": "gemma-3-12b-it",
        "CHAT_API_KEY_ENV": "SEAR_CHAT_API_KEY",
        "CHAT_TIMEOUT_MS": 30000,
        "CHAT_MAX_ATTEMPTS": 3,
        "CHAT_BACKOFF_BASE_MS": 250,
        "CHAT_MAX_TOKENS": 256,
        "ANON_KEY_ENV": "SEAR_ANON_KEY",
        "REJECT_WARNING_RATIO": 0.5,
        "LOG_DIR": "logs",
        "LOG_FILE": "actions.log",
        "LOG_LEVEL": "INFO",
        "LOG_MAX_BYTES": 1_000_000,
        "LOG_BACKUP_COUNT": 3,
    }

    def __new__(cls, config_path: str | None = None):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self, config_path: str | None = None):
        if self._initialized and (config_path is None
                                  or Path(config_path) == self._config_path):
            return
        self._config_path = Path(config_path or "config.json")
        self._data = {}
        self._overrides = {}
        self.reload()
        self._initialized = True

    @property
    def config_path(self) -> Path:
        return self._config_path

    def get(self, key: str, default: Any = None) -> Any:
        """
        Возвращает значение конфигурации по ключу.
        Порядок: переопределение из флагов, файл, DEFAULTS, default.
        Пример: settings.get("EMBEDDING_DIM") -> 256
        """
        if key in self._overrides:
            return self._overrides[key]
        if key in self._data:
            return self._data[key]
        return self.DEFAULTS.get(key, default)

    def override(self, key: str, value: Any) -> None:
        """Переопределяет ключ конфигурации значением из флага командной строки."""
        self._overrides[key] = value

    def reload(self):
        """Перезагружает конфигурацию с диска. Нет файла - работаем на DEFAULTS."""
        self._overrides = {}
        if not self._config_path.exists():
            self._data = {}
            return
        self._data = DatabaseManager().load(self._config_path)

    def as_dict(self) -> dict:
        """Возвращает полную конфигурацию в виде словаря."""
        merged = dict(self.DEFAULTS)
        merged.update(self._data)
        merged.update(self._overrides)
        return merged

    @classmethod
    def reset(cls) -> None:
        """Сбрасывает синглтон (нужно тестам и повторному запуску CLI)."""
        cls._instance = None
