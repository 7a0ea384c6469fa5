import hashlib
from abc import ABC, abstractmethod

import numpy as np

from sear_hub.core.utils import tokenize
from sear_hub.infra.settings import SettingsLoader


def hash64(token: str) -> int:
    """Стабильный 64-битный хеш токена (не зависит от PYTHONHASHSEED)."""
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


class Embedder(ABC):
    """Переводит текст в единичный вектор фиксированной размерности."""

    def __init__(self, dimension: int | None = None):
        self.dimension = dimension or SettingsLoader().get("EMBEDDING_DIM")

    @abstractmethod
    def embed(self, text: str) -> np.ndarray:
        """Детерминированно: одинаковый текст - одинаковый вектор."""
        pass


class MockEmbedder(Embedder):
    """Хеширование токенов в корзины вместо обученного кодировщика."""

    def embed(self, text: str) -> np.ndarray:
        return mock_embed(text, self.dimension)


def mock_embed(text: str, dimension: int | None = None) -> np.ndarray:
    dimension = dimension or SettingsLoader().get("EMBEDDING_DIM")
    vector = np.zeros(dimension, dtype=np.float64)
    for token in tokenize(text):
        vector[hash64(token) % dimension] += 1.0
    norm = np.linalg.norm(vector)
    if norm == 0:
        vector[0] = 1.0
        return vector
    return vector / norm
