"""Социальный корпус: NDJSON, один документ (черта или факт) на строку."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from sear_hub.core.codec import dumps, round_floats
from sear_hub.core.exceptions import CorpusError
from sear_hub.core.models import FactCategory, SourceModality
from sear_hub.infra.database import DatabaseManager


class DocKind(Enum):
    TRAIT = "trait"
    FACT = "fact"


@dataclass(frozen=True)
class SocialCorpusDoc:
    doc_id: str
    person_ref: str
    kind: DocKind
    content: str
    modality: SourceModality = SourceModality.TEXT
    category: Optional[FactCategory] = None
    timestamp_ms: int = 0
    source: str = "profile"
    salience: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "docId": self.doc_id,
            "personRef": self.person_ref,
            "kind": self.kind.value,
            "modality": self.modality.value,
            "content": self.content,
            "timestamp": self.timestamp_ms,
            "source": self.source,
        }
        if self.category is not None:
            data["category"] = self.category.value
        if self.salience is not None:
            data["salience"] = self.salience
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SocialCorpusDoc:
        category = data.get("category")
        return cls(
            doc_id=data["docId"],
            person_ref=data.get("personRef") or "",
            kind=DocKind(data["kind"]),
            content=data.get("content", ""),
            modality=SourceModality(data.get("modality", "Text")),
            category=FactCategory(category) if category else None,
            timestamp_ms=data.get("timestamp", 0),
            source=data.get("source", "profile"),
            salience=data.get("salience"),
        )


def load_corpus(path: str | Path) -> List[SocialCorpusDoc]:
    """Загружает корпус; любая ошибка строки - CorpusError с номером строки."""
    docs: List[SocialCorpusDoc] = []
    seen = set()
    def undecodable(lineno: int, reason: str) -> None:
        raise CorpusError(reason, line=lineno)

    for lineno, line in DatabaseManager().iter_lines(path, undecodable):
        try:
            doc = SocialCorpusDoc.from_dict(json.loads(line))
        except json.JSONDecodeError as e:
            raise CorpusError(f"некорректный JSON: {e.msg}", line=lineno)
        except (KeyError, ValueError, TypeError) as e:
            raise CorpusError(f"некорректный документ: {e}", line=lineno)
        if doc.doc_id in seen:
            raise CorpusError("повторный docId", doc_id=doc.doc_id, line=lineno)
        if not doc.person_ref:
            raise CorpusError("нет personRef", doc_id=doc.doc_id, line=lineno)
        seen.add(doc.doc_id)
        docs.append(doc)
    return docs


def write_corpus(path: str | Path, docs: Sequence[SocialCorpusDoc]) -> None:
    DatabaseManager().save_lines(path, (dumps(round_floats(d.to_dict())) for d in docs))
