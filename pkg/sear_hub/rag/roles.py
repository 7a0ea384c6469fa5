"""Этап 2: база ролей из социального корпуса и опознание ролей по контексту."""
from __future__ import annotations

import re
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from sear_hub.core.exceptions import ArgumentError, CorpusError
from sear_hub.core.models import (
    Fact,
    RoleRecord,
    SocialContextFrame,
    Speaker,
)
from sear_hub.core.utils import jaccard, normalize_whitespace, tokenize
from sear_hub.dataset.corpus import DocKind, SocialCorpusDoc
from sear_hub.decorators import log_action
from sear_hub.infra.settings import SettingsLoader
from sear_hub.logging_config import logger
from sear_hub.rag.embedder import Embedder
from sear_hub.rag.vector_store import VectorStore

DEFAULT_SALIENCE = 0.5


@dataclass(frozen=True)
class RoleMatch:
    """Результат опознания трека. role_id=None - роль не опознана (Unknown)."""
    role_id: Optional[str]
    similarity: float

    @property
    def is_unknown(self) -> bool:
        return self.role_id is None


def role_id_for(person_ref: str) -> str:
    slug = re.sub(r"[\W_]+", "-", person_ref.strip().lower()).strip("-")
    return f"role-{slug}"


def _parse_traits(doc: SocialCorpusDoc, vocabulary: set) -> Dict[str, str]:
    traits = {}
    for raw in doc.content.splitlines():
        if not raw.strip():
            continue
        if "=" not in raw:
            raise CorpusError(f"строка черты без '=': '{raw.strip()}'", doc_id=doc.doc_id)
        key, value = (part.strip() for part in raw.split("=", 1))
        if key not in vocabulary:
            raise CorpusError(f"черта '{key}' не входит в словарь", doc_id=doc.doc_id)
        traits[key] = value
    return traits


@log_action("BUILD_ROLES")
def build_role_database(corpus: Sequence[SocialCorpusDoc], embedder: Embedder,
                        dedupe_threshold: Optional[float] = None
                        ) -> Tuple[List[RoleRecord], VectorStore]:
    """
    Группирует документы по personRef: черты из документов kind=trait,
    остальные документы - факты (подписи к фото и видео тоже текст).
    Почти дубликаты (Жаккар ≥ порога) отбрасываются, остаётся более ранний.
    """
    settings = SettingsLoader()
    vocabulary = set(settings.get("TRAIT_VOCABULARY"))
    if dedupe_threshold is None:
        dedupe_threshold = settings.get("DEDUPE_JACCARD")

    grouped: "OrderedDict[str, List[SocialCorpusDoc]]" = OrderedDict()
    owners: Dict[str, str] = {}
    seen_docs = set()
    for doc in corpus:
        if not doc.person_ref:
            raise CorpusError("нет personRef", doc_id=doc.doc_id)
        if doc.doc_id in seen_docs:
            raise CorpusError("повторный docId", doc_id=doc.doc_id)
        seen_docs.add(doc.doc_id)
        role_id = role_id_for(doc.person_ref)
        if owners.setdefault(role_id, doc.person_ref) != doc.person_ref:
            raise CorpusError(
                f"roleId '{role_id}' получен из разных personRef "
                f"'{owners[role_id]}' и '{doc.person_ref}'", doc_id=doc.doc_id)
        grouped.setdefault(role_id, []).append(doc)

    store = VectorStore(embedder.dimension)
    roles: List[RoleRecord] = []
    for role_id in sorted(grouped):
        traits: Dict[str, str] = {}
        facts: List[Fact] = []
        kept_tokens: List[List[str]] = []
        refs: List[str] = []
        for doc in grouped[role_id]:
            if doc.kind is DocKind.TRAIT:
                traits.update(_parse_traits(doc, vocabulary))
                continue
            text = normalize_whitespace(doc.content)
            if not text:
                raise CorpusError("пустой текст факта", doc_id=doc.doc_id)
            if doc.category is None:
                raise CorpusError("у факта нет category", doc_id=doc.doc_id)
            tokens = tokenize(text)
            if any(jaccard(tokens, prev) >= dedupe_threshold for prev in kept_tokens):
                logger.info(f"DEDUPE role_id='{role_id}' doc_id='{doc.doc_id}' result=SKIPPED")
                continue
            kept_tokens.append(tokens)
            salience = DEFAULT_SALIENCE if doc.salience is None else doc.salience
            facts.append(Fact(doc.category, text, salience, doc.modality, doc.timestamp_ms))
            refs.append(doc.doc_id)

        embedding_ids = tuple(
            store.add(embedder.embed(fact.text), role_id, ref, fact.source_modality)
            for fact, ref in zip(facts, refs)
        )
        person_ref = owners[role_id]
        roles.append(RoleRecord(role_id, person_ref, traits, tuple(facts), embedding_ids))

    return roles, store


def _speech_for_track(frame: SocialContextFrame, track_id: str) -> List[str]:
    """Реплики собеседников (Other), которые можно приписать этому треку."""
    texts = []
    for seg in frame.transcript:
        if seg.speaker is not Speaker.OTHER:
            continue
        speakers = [t.track_id for t in frame.face_tracks
                    if any(seg.start_ms <= ms <= seg.end_ms for ms in t.speaking_ms)]
        if not speakers and len(frame.face_tracks) == 1:
            speakers = [frame.face_tracks[0].track_id]
        if track_id in speakers:
            texts.append(seg.text)
    return texts


def query_text_for_track(frame: SocialContextFrame, track_id: str) -> str:
    """Выражение лица + приписанная речь + метки окружения."""
    track = next(t for t in frame.face_tracks if t.track_id == track_id)
    parts = []
    if track.expression_scores:
        parts.append(track.dominant_expression)
    parts.extend(_speech_for_track(frame, track_id))
    parts.extend(frame.environment.object_labels)
    return " ".join(parts)


@log_action("IDENTIFY_ROLES")
def identify_roles(store: VectorStore, roles: Sequence[RoleRecord],
                   frame: SocialContextFrame, embedder: Embedder,
                   tau: Optional[float] = None) -> Dict[str, RoleMatch]:
    """
    Для каждого трека лица - роль с наибольшим косинусом ≥ tau.
    Назначение инъективно: спорную роль получает трек с большим сходством,
    остальные берут следующего кандидата или остаются Unknown.
    """
    if tau is None:
        tau = SettingsLoader().get("ROLE_MATCH_THRESHOLD")
    if not 0 < tau <= 1:
        raise ArgumentError("tau", "порог должен лежать в (0, 1]")

    known = {r.role_id for r in roles}
    best_any: Dict[str, float] = {}
    pairs: List[Tuple[float, str, str]] = []
    for track in frame.face_tracks:
        per_role: Dict[str, float] = {}
        if len(store) and known:
            query = embedder.embed(query_text_for_track(frame, track.track_id))
            for entry, cosine in store.query_top_k(query, len(store)):
                if entry.role_id in known and entry.role_id not in per_role:
                    per_role[entry.role_id] = cosine
        best_any[track.track_id] = max(per_role.values(), default=0.0)
        pairs.extend((sim, track.track_id, role_id)
                     for role_id, sim in per_role.items() if sim >= tau)

    result: Dict[str, RoleMatch] = {}
    taken = set()
    for sim, track_id, role_id in sorted(pairs, key=lambda p: (-p[0], p[1], p[2])):
        if track_id in result or role_id in taken:
            continue
        result[track_id] = RoleMatch(role_id, sim)
        taken.add(role_id)
    for track in frame.face_tracks:
        if track.track_id not in result:
            result[track.track_id] = RoleMatch(None, best_any[track.track_id])
    return dict(sorted(result.items()))
