"""Векторное хранилище с точным перебором (косинусная близость)."""
from __future__ import annotations

from threading import Lock
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from sear_hub.core.exceptions import ArgumentError
from sear_hub.core.models import EmbeddingEntry, SourceModality
from sear_hub.core.validation import NORM_TOLERANCE, Violation, _join, _validate, validate
from sear_hub.infra.settings import SettingsLoader


class VectorStore:
    """
    Много читателей или один писатель: запись идёт под блокировкой и
    подменяет снимок целиком, чтение работает с текущим снимком.
    """

    def __init__(self, dimension: Optional[int] = None,
                 entries: Iterable[EmbeddingEntry] = ()):
        self.dimension = dimension or SettingsLoader().get("EMBEDDING_DIM")
        self._lock = Lock()
        self._entries: Tuple[EmbeddingEntry, ...] = ()
        self._rows: List[np.ndarray] = []
        self._matrix: Optional[np.ndarray] = None
        for entry in entries:
            self._append(entry, keep_id=True)

    @property
    def entries(self) -> Tuple[EmbeddingEntry, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def _check_vector(self, vector: np.ndarray) -> None:
        if vector.ndim != 1 or vector.shape[0] != self.dimension:
            raise ArgumentError("vector", f"размерность {vector.shape} вместо D={self.dimension}")
        if not np.all(np.isfinite(vector)):
            raise ArgumentError("vector", "вектор содержит нечисловые значения")
        norm = float(np.linalg.norm(vector))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ArgumentError("vector", f"норма {norm:.9f} вместо 1")

    def _append(self, entry: EmbeddingEntry, keep_id: bool) -> int:
        vector = np.asarray(entry.vector, dtype=np.float64)
        self._check_vector(vector)
        with self._lock:
            last_id = self._entries[-1].entry_id if self._entries else None
            next_id = last_id + 1 if last_id is not None else 0
            entry_id = entry.entry_id if keep_id else next_id
            if keep_id and last_id is not None and entry_id <= last_id:
                raise ArgumentError("entryId", "идентификаторы должны строго возрастать")
            stored = EmbeddingEntry(entry_id, tuple(float(x) for x in vector),
                                    entry.role_id, entry.source_ref, entry.modality)
            self._entries = self._entries + (stored,)
            self._rows.append(vector)
            self._matrix = None
        return entry_id

    def insert(self, entry: EmbeddingEntry) -> int:
        """Добавляет запись; id = предыдущий максимум + 1 (0 для пустого хранилища)."""
        return self._append(entry, keep_id=False)

    def add(self, vector: np.ndarray, role_id: str, source_ref: str,
            modality: SourceModality = SourceModality.TEXT) -> int:
        return self.insert(EmbeddingEntry(-1, tuple(vector), role_id, source_ref, modality))

    def query_top_k(self, query: np.ndarray, k: int) -> List[Tuple[EmbeddingEntry, float]]:
        """
        Точный перебор: косинус по убыванию, при равенстве - меньший entryId.
        Длина результата min(k, |entries|).
        """
        query = np.asarray(query, dtype=np.float64)
        self._check_vector(query)
        if k < 1:
            raise ArgumentError("k", "k должно быть не меньше 1")
        with self._lock:
            entries = self._entries
            if not entries:
                return []
            if self._matrix is None:
                self._matrix = np.vstack(self._rows)
            matrix = self._matrix
        ids = np.array([e.entry_id for e in entries], dtype=np.int64)
        scores = np.clip(matrix @ query, -1.0, 1.0)
        order = np.lexsort((ids, -scores))[:k]
        return [(entries[i], float(scores[i])) for i in order]

    def for_role(self, role_id: str) -> List[EmbeddingEntry]:
        return [e for e in self._entries if e.role_id == role_id]

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorStore):
            return NotImplemented
        return self.dimension == other.dimension and self._entries == other._entries


def query_top_k(store: VectorStore, query: np.ndarray,
                k: int) -> List[Tuple[EmbeddingEntry, float]]:
    return store.query_top_k(query, k)


def insert(store: VectorStore, entry: EmbeddingEntry) -> int:
    return store.insert(entry)


@_validate.register
def _(entity: VectorStore, path: str, **context) -> Sequence[Violation]:
    out = []
    previous = None
    for i, entry in enumerate(entity.entries):
        out.extend(validate(entry, _join(path, f"entries[{i}]"), dimension=entity.dimension))
        if previous is not None and entry.entry_id <= previous:
            out.append(Violation(_join(path, f"entries[{i}].entryId"),
                                 "entryId strictly increasing"))
        previous = entry.entry_id
    return out
