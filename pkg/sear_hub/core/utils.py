import re
from typing import Iterable, List, Sequence

_TOKEN_SPLIT = re.compile(r"[\W_]+")


def tokenize(text: str) -> List[str]:
    """Нижний регистр, разбиение по всему, что не буква/цифра (любого алфавита)."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Коэффициент Жаккара двух множеств токенов. Пустое множество ни с чем не совпадает."""
    sa, sb = set(a), set(b)
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


def contains_phrase(tokens: Sequence[str], phrase: str) -> bool:
    """Есть ли фраза в списке токенов как непрерывная подпоследовательность."""
    needle = tokenize(phrase)
    if not needle:
        return False
    n = len(needle)
    return any(list(tokens[i:i + n]) == needle for i in range(len(tokens) - n + 1))


def mentions(text: str, phrase: str) -> bool:
    """Фраза встречается в тексте по границам токенов, без учёта регистра."""
    return contains_phrase(tokenize(text), phrase)
