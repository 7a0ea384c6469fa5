import json
from pathlib import Path
from typing import List, Sequence, Tuple

from sear_hub.core.codec import dumps, round_floats
from sear_hub.core.exceptions import FormatError
from sear_hub.core.models import EmbeddingEntry, RoleRecord
from sear_hub.infra.database import DatabaseManager
from sear_hub.rag.vector_store import VectorStore

ROLES_FILE = "roles.json"
EMBEDDINGS_FILE = "embeddings.ndjson"


class RoleDatabaseStorage:
    """База ролей на диске: roles.json + embeddings.ndjson в одном каталоге."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.roles_file = self.directory / ROLES_FILE
        self.embeddings_file = self.directory / EMBEDDINGS_FILE

    def save(self, roles: Sequence[RoleRecord], store: VectorStore) -> None:
        """Сохраняет роли и векторы; повторное сохранение даёт те же байты."""
        self.directory.mkdir(parents=True, exist_ok=True)
        DatabaseManager().save(self.roles_file, round_floats([r.to_dict() for r in roles]))
        DatabaseManager().save_lines(
            self.embeddings_file,
            (dumps(round_floats(e.to_dict())) for e in store.entries),
        )

    def load(self, dimension: int | None = None) -> Tuple[List[RoleRecord], VectorStore]:
        """Загружает роли и векторы. Размерность берётся из файла, если не задана."""
        try:
            roles = [RoleRecord.from_dict(r) for r in DatabaseManager().load(self.roles_file)]
        except json.JSONDecodeError as e:
            raise FormatError(str(self.roles_file), e.msg, e.lineno)
        except (KeyError, ValueError, TypeError) as e:
            raise FormatError(str(self.roles_file), f"некорректная роль: {e}")

        entries = []
        for lineno, line in DatabaseManager().iter_lines(self.embeddings_file):
            try:
                entries.append(EmbeddingEntry.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise FormatError(str(self.embeddings_file), str(e), lineno)

        if dimension is None and entries:
            dimension = len(entries[0].vector)
        return roles, VectorStore(dimension, entries)
