import logging
import os
from logging.handlers import RotatingFileHandler
from pathlib import Path

from sear_hub.infra.settings import SettingsLoader

LOGGER_NAME = "sear.actions"
LOG_FORMAT = "%(levelname)s %(asctime)s %(message)s"
REDACTED = "***"


class SecretFilter(logging.Filter):
    """Вырезает из сообщений значения секретов (ключ чата и ключ псевдонимизации)."""

    def __init__(self, env_keys: tuple[str, ...]):
        super().__init__()
        self.env_keys = env_keys

    def filter(self, record: logging.LogRecord) -> bool:
        message = record.getMessage()
        for env_key in self.env_keys:
            secret = os.environ.get(env_key)
            if secret and secret in message:
                message = message.replace(secret, REDACTED)
                record.msg, record.args = message, ()
        return True


class LoggerSingleton:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        if self._initialized:
            return
        self.logger = logging.getLogger(LOGGER_NAME)
        self.logger.propagate = False
        self.log_file: Path | None = None
        self.configure()
        self._initialized = True

    def configure(self) -> Path:
        """Пересобирает обработчик по текущим LOG_* (после --config и --set)."""
        settings = SettingsLoader()

        log_dir = Path(settings.get("LOG_DIR", "logs"))
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = (log_dir / settings.get("LOG_FILE", "actions.log")).resolve()

        level_name = str(settings.get("LOG_LEVEL", "INFO")).upper()
        self.logger.setLevel(getattr(logging, level_name, logging.INFO))

        if log_file == self.log_file and self.logger.handlers:
            return log_file

        for old in list(self.logger.handlers):
            self.logger.removeHandler(old)
            old.close()

        handler = RotatingFileHandler(
            log_file,
            maxBytes=settings.get("LOG_MAX_BYTES", 1_000_000),
            backupCount=settings.get("LOG_BACKUP_COUNT", 3),
            encoding="utf-8",
        )
        handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%dT%H:%M:%S"))
        handler.addFilter(SecretFilter((
            settings.get("CHAT_API_KEY_ENV", "SEAR_CHAT_API_KEY"),
            settings.get("ANON_KEY_ENV", "SEAR_ANON_KEY"),
        )))
        self.logger.addHandler(handler)
        self.log_file = log_file
        return log_file


logger = LoggerSingleton().logger
