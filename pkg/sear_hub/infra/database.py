import json
import os
from pathlib import Path
from threading import Lock
from typing import Callable, Iterable, Iterator, Optional

from sear_hub.core.exceptions import FormatError

LineErrorHandler = Callable[[int, str], None]


class DatabaseManager:

    _instance = None
    _lock = Lock()

    def __new__(cls):
        with cls._lock:
            if cls._instance is None:
                cls._instance = super().__new__(cls)
        return cls._instance

    def load(self, path: str | Path):
        """Загружает данные из json."""
        if not os.path.exists(path):
            raise FileNotFoundError(2, "Файл не найден", str(path))
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def save(self, path: str | Path, data):
        """Сохраняет данные в json (стабильный порядок ключей)."""
        os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True)
            f.write("\n")

    def iter_lines(self, path: str | Path, on_error: Optional[LineErrorHandler] = None
                   ) -> Iterator[tuple[int, str]]:
        """
        Построчно читает NDJSON, отдаёт (номер строки, строка) без пустых строк.
        Строка не в UTF-8 уходит в on_error(номер, причина) и пропускается;
        без on_error это FormatError.
        """
        if not os.path.exists(path):
            raise FileNotFoundError(2, "Файл не найден", str(path))
        with open(path, "rb") as f:
            for lineno, raw in enumerate(f, start=1):
                try:
                    line = raw.decode("utf-8").strip()
                except UnicodeDecodeError as e:
                    reason = f"строка не в UTF-8: {e.reason} (байт {e.start})"
                    if on_error is None:
                        raise FormatError(str(path), reason, lineno)
                    on_error(lineno, reason)
                    continue
                if line:
                    yield lineno, line

    def save_lines(self, path: str | Path, lines: Iterable[str]):
        """Сохраняет готовые строки NDJSON, по одной на запись."""
        os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line)
                f.write("\n")
