import json
from typing import Any, Type, TypeVar

T = TypeVar("T")

SIGNIFICANT_DIGITS = 9


def dumps(data: Any) -> str:
    """Одна строка JSON: отсортированные ключи, UTF-8 без экранирования."""
    return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def encode(value: Any) -> str:
    """Кодирует доменное значение в JSON-объект (lowerCamelCase)."""
    return dumps(value.to_dict())


def decode(cls: Type[T], text: str) -> T:
    """Обратная операция к encode."""
    return cls.from_dict(json.loads(text))


def round_floats(data: Any, digits: int = SIGNIFICANT_DIGITS) -> Any:
    """Округляет все float до заданного числа значащих цифр (для файловых писателей)."""
    if isinstance(data, bool):
        return data
    if isinstance(data, float):
        return float(f"{data:.{digits}g}")
    if isinstance(data, dict):
        return {k: round_floats(v, digits) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [round_floats(v, digits) for v in data]
    return data
