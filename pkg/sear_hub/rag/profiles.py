"""Социальный профиль: ранжирование фактов и динамическая адаптация."""
from __future__ import annotations

from dataclasses import replace
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from sear_hub.core.exceptions import ProfileStateError
from sear_hub.core.models import (
    EnvironmentContext,
    Fact,
    FactCategory,
    RankedFact,
    RoleRecord,
    Setting,
    SocialContextFrame,
    SocialProfile,
)
from sear_hub.decorators import log_action
from sear_hub.infra.settings import SettingsLoader
from sear_hub.rag.embedder import Embedder
from sear_hub.rag.vector_store import VectorStore

MS_PER_DAY = 86_400_000

# Хобби и уязвимости полезнее разрозненной демографии.
CATEGORY_WEIGHTS: Dict[FactCategory, float] = {
    FactCategory.INTEREST: 1.0,
    FactCategory.VULNERABILITY: 1.0,
    FactCategory.EVENT: 0.8,
    FactCategory.RELATIONAL: 0.5,
    FactCategory.DEMOGRAPHIC: 0.2,
}


def rank_score(fact: Fact, now_ms: int, half_life_days: Optional[float] = None) -> float:
    if half_life_days is None:
        half_life_days = SettingsLoader().get("HALF_LIFE_DAYS")
    age_days = max(0, now_ms - fact.observed_at_ms) / MS_PER_DAY
    return CATEGORY_WEIGHTS[fact.category] * fact.salience * 2.0 ** (-age_days / half_life_days)


def rank_facts(facts: Iterable[Fact], now_ms: int) -> Tuple[RankedFact, ...]:
    ranked = [RankedFact(f, rank_score(f, now_ms)) for f in facts]
    ranked.sort(key=lambda rf: (-rf.rank_score, rf.fact.text))
    return tuple(ranked)


@log_action("GENERATE_PROFILE")
def generate_profile(role: RoleRecord,
                     setting: Union[Setting, EnvironmentContext] = Setting.UNKNOWN,
                     now_ms: int = 0) -> SocialProfile:
    """Профиль роли: черты как есть, факты по убыванию полезности."""
    environment = setting if isinstance(setting, EnvironmentContext) \
        else EnvironmentContext((), setting)
    return SocialProfile(
        role_id=role.role_id,
        core_identity=dict(role.traits),
        ranked_facts=rank_facts(role.facts, now_ms),
        environment_context=environment,
        last_updated_ms=now_ms,
    )


@log_action("ADAPT_PROFILE")
def adapt_profile(profile: SocialProfile, frame: SocialContextFrame, store: VectorStore,
                  embedder: Embedder, now_ms: int,
                  roles: Mapping[str, RoleRecord]) -> SocialProfile:
    """
    Каждый сегмент транскрипта окна ищет top-3 факта той же роли;
    найденные факты получают +0.1 к salience (не выше 1), после чего
    профиль переранжируется.
    """
    role = roles.get(profile.role_id)
    if role is None:
        raise ProfileStateError(profile.role_id)

    settings = SettingsLoader()
    bump = settings.get("SALIENCE_BUMP")
    top_k = settings.get("ADAPT_TOP_K")

    facts: List[Fact] = list(profile.facts)
    index_by_text = {f.text: i for i, f in enumerate(facts)}
    text_by_entry = {eid: f.text for eid, f in zip(role.embedding_ids, role.facts)}
    has_entries = any(e.role_id == role.role_id for e in store.entries)

    for segment in frame.transcript if has_entries else ():
        query = embedder.embed(segment.text)
        hits = [e for e, _ in store.query_top_k(query, len(store))
                if e.role_id == role.role_id][:top_k]
        for entry in hits:
            i = index_by_text.get(text_by_entry.get(entry.entry_id))
            if i is None:
                continue
            facts[i] = replace(facts[i], salience=min(1.0, facts[i].salience + bump))

    return replace(
        profile,
        ranked_facts=rank_facts(facts, now_ms),
        environment_context=frame.environment,
        last_updated_ms=now_ms,
    )
