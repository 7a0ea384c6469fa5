import random

import numpy as np
import pytest

from sear_hub.core.exceptions import ArgumentError, CorpusError
from sear_hub.core.models import (
    EnvironmentContext,
    FaceTrack,
    FactCategory,
    Segment,
    SocialContextFrame,
    Speaker,
)
from sear_hub.core.utils import jaccard, tokenize
from sear_hub.core.validation import validate
from sear_hub.dataset.corpus import DocKind, SocialCorpusDoc, load_corpus
from sear_hub.rag.embedder import Embedder, MockEmbedder
from sear_hub.rag.roles import (
    build_role_database,
    identify_roles,
    query_text_for_track,
    role_id_for,
)
from sear_hub.rag.storage import RoleDatabaseStorage
from sear_hub.rag.vector_store import VectorStore


class TableEmbedder(Embedder):
    """Тексты с заранее заданными векторами; всё остальное - первый базисный вектор."""

    def __init__(self, table):
        super().__init__(3)
        self.table = {k: np.asarray(v, dtype=np.float64) / np.linalg.norm(v)
                      for k, v in table.items()}

    def embed(self, text):
        return self.table.get(text, np.eye(3)[0])


def fact(doc_id, person, text, category=FactCategory.INTEREST, salience=0.5):
    return SocialCorpusDoc(doc_id, person, DocKind.FACT, text,
                           category=category, salience=salience)


def trait(doc_id, person, content):
    return SocialCorpusDoc(doc_id, person, DocKind.TRAIT, content)


def speech_frame(*speakers):
    """speakers: (trackId, text) - каждый трек говорит в своём отрезке."""
    tracks, segments = [], []
    for i, (track_id, text) in enumerate(speakers):
        start = i * 1000
        tracks.append(FaceTrack(track_id, {}, "neutral", (start + 10,)))
        segments.append(Segment(Speaker.OTHER, text, start, start + 500))
    return SocialContextFrame(0, 10_000, tuple(tracks), tuple(segments))


def test_role_id_slug():
    assert role_id_for("Jonny") == "role-jonny"
    assert role_id_for("  Mary Ann O'Neil ") == "role-mary-ann-o-neil"


def test_empty_corpus():
    roles, store = build_role_database([], MockEmbedder())
    assert roles == []
    assert len(store) == 0


def test_jonny_corpus(corpus_path):
    roles, store = build_role_database(load_corpus(corpus_path), MockEmbedder())
    [jonny] = roles
    assert jonny.role_id == "role-jonny"
    assert jonny.traits["education"] == "CMU"
    assert len(jonny.facts) == 3
    assert len(store) == 3
    assert jonny.embedding_ids == (0, 1, 2)
    assert validate(jonny) == []
    assert validate(store) == []


def test_one_trait_doc_and_two_facts():
    corpus = [
        trait("t", "Ada", "profession=nurse\nresidence=Leeds"),
        fact("f1", "Ada", "Runs the Leeds half marathon every spring"),
        fact("f2", "Ada", "Lost her phone at the train station", FactCategory.EVENT),
    ]
    [ada], store = build_role_database(corpus, MockEmbedder())
    assert ada.traits == {"profession": "nurse", "residence": "Leeds"}
    assert [f.text for f in ada.facts] == [
        "Runs the Leeds half marathon every spring", "Lost her phone at the train station"]
    assert [e.source_ref for e in store.for_role("role-ada")] == ["f1", "f2"]


def test_near_duplicates_keep_earlier_fact():
    corpus = [
        fact("a", "Ada", "Loves hiking in the Peak District"),
        fact("b", "Ada", "loves   hiking in the peak district"),
        fact("c", "Ada", "Plays chess on Sundays"),
    ]
    [ada], store = build_role_database(corpus, MockEmbedder())
    assert [f.text for f in ada.facts] == [
        "Loves hiking in the Peak District", "Plays chess on Sundays"]
    assert len(store) == 2


def test_missing_salience_defaults_to_half():
    [ada], _ = build_role_database([fact("a", "Ada", "Plays chess", salience=None)],
                                   MockEmbedder())
    assert ada.facts[0].salience == 0.5


def test_build_is_idempotent(corpus_path):
    corpus = load_corpus(corpus_path)
    first = build_role_database(corpus, MockEmbedder())
    second = build_role_database(corpus, MockEmbedder())
    assert first[0] == second[0]
    assert first[1] == second[1]


@pytest.mark.parametrize("corpus", [
    [fact("a", "", "Plays chess")],
    [fact("a", "Ada", "Plays chess"), fact("a", "Ada", "Reads novels")],
    [fact("a", "Mary Ann", "Plays chess"), fact("b", "mary-ann", "Reads novels")],
    [trait("t", "Ada", "shoeSize=42")],
    [trait("t", "Ada", "no separator here")],
    [SocialCorpusDoc("a", "Ada", DocKind.FACT, "Plays chess")],
])
def test_corpus_errors(corpus):
    with pytest.raises(CorpusError):
        build_role_database(corpus, MockEmbedder())


def test_load_corpus_reports_line(write_ndjson):
    path = write_ndjson("corpus.ndjson", [
        {"docId": "a", "personRef": "Ada", "kind": "fact", "category": "Interest",
         "content": "Plays chess"},
        "{broken",
    ])
    with pytest.raises(CorpusError) as info:
        load_corpus(path)
    assert info.value.line == 2


def test_load_corpus_undecodable_line(tmp_path):
    path = tmp_path / "corpus.ndjson"
    path.write_bytes(b'{"docId":"a","personRef":"Ada","kind":"fact","category":"Interest",'
                     b'"content":"Plays chess"}\n{"docId":"b\xff"}\n')
    with pytest.raises(CorpusError) as info:
        load_corpus(path)
    assert info.value.line == 2


def test_tokenize_keeps_non_latin_words():
    assert tokenize("Café au lait!") == ["café", "au", "lait"]
    assert tokenize("Вяжет свитера по выходным") == ["вяжет", "свитера", "по", "выходным"]
    assert tokenize("snake_case") == ["snake", "case"]
    assert jaccard([], []) == 0.0
    assert jaccard(["a"], []) == 0.0


def test_cyrillic_facts_are_not_merged():
    corpus = [
        fact("f1", "Ада", "Вяжет свитера по выходным"),
        fact("f2", "Ада", "Работает медсестрой в Лидсе", FactCategory.DEMOGRAPHIC),
    ]
    [ada], store = build_role_database(corpus, MockEmbedder())
    assert ada.role_id == role_id_for("Ада") == "role-ада"
    assert [f.text for f in ada.facts] == ["Вяжет свитера по выходным",
                                          "Работает медсестрой в Лидсе"]
    assert len(store) == 2


def test_identity_query_matches_own_role(corpus_path):
    embedder = MockEmbedder()
    roles, store = build_role_database(load_corpus(corpus_path), embedder)
    frame = speech_frame(("t1", "Coffee with my sister before her flight to Seattle"))
    matches = identify_roles(store, roles, frame, embedder)
    assert matches["t1"].role_id == "role-jonny"
    assert matches["t1"].similarity == pytest.approx(1.0)


def test_query_text_joins_expression_speech_and_labels():
    frame = SocialContextFrame(
        0, 1000,
        (FaceTrack("t1", {"expression.smile": 0.9}, "expression.smile"),),
        (Segment(Speaker.OTHER, "video games", 0, 500),
         Segment(Speaker.PRIMARY, "hello", 600, 700)),
        EnvironmentContext(("sofa",)),
    )
    assert query_text_for_track(frame, "t1") == "expression.smile video games sofa"


def contested():
    embedder = TableEmbedder({
        "alpha fact": [1, 0, 0],
        "beta fact": [0, 1, 0],
        "q1": [1, 0, 0],
        "q2": [0.9, 0.3, 0],
    })
    roles, store = build_role_database(
        [fact("a", "Alpha", "alpha fact"), fact("b", "Beta", "beta fact")], embedder)
    return roles, store, embedder


def test_contested_role_goes_to_closer_track():
    roles, store, embedder = contested()
    frame = speech_frame(("t1", "q1"), ("t2", "q2"))
    matches = identify_roles(store, roles, frame, embedder, tau=0.3)
    assert matches["t1"].role_id == "role-alpha"
    assert matches["t1"].similarity == pytest.approx(1.0)
    assert matches["t2"].role_id == "role-beta"
    assert matches["t2"].similarity == pytest.approx(0.3 / np.sqrt(0.9))


def test_runner_up_below_threshold_stays_unknown():
    roles, store, embedder = contested()
    frame = speech_frame(("t1", "q1"), ("t2", "q2"))
    matches = identify_roles(store, roles, frame, embedder)
    assert matches["t1"].role_id == "role-alpha"
    assert matches["t2"].is_unknown
    assert matches["t2"].similarity == pytest.approx(0.9 / np.sqrt(0.9))


def test_empty_store_gives_unknown():
    frame = speech_frame(("t1", "anything"))
    matches = identify_roles(VectorStore(256), [], frame, MockEmbedder())
    assert matches["t1"].is_unknown
    assert matches["t1"].similarity == 0.0


@pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
def test_tau_out_of_range(tau):
    roles, store, embedder = contested()
    with pytest.raises(ArgumentError):
        identify_roles(store, roles, speech_frame(("t1", "q1")), embedder, tau=tau)


WORDS = ["chess", "coffee", "hiking", "seattle", "games", "piano", "garden", "cats",
         "soccer", "jazz", "sushi", "poetry", "boxing", "sailing", "yoga", "camping"]


def test_assignment_is_injective_over_random_frames():
    rng = random.Random(20)
    embedder = MockEmbedder()
    for _ in range(200):
        corpus = []
        for p in range(rng.randint(1, 5)):
            for f in range(rng.randint(1, 3)):
                corpus.append(fact(f"d{p}-{f}", f"person{p}", " ".join(rng.sample(WORDS, 3))))
        roles, store = build_role_database(corpus, embedder)
        speakers = [(f"t{i}", " ".join(rng.sample(WORDS, rng.randint(1, 4))))
                    for i in range(rng.randint(1, 6))]
        tau = rng.choice([0.1, 0.35, 0.6])
        matches = identify_roles(store, roles, speech_frame(*speakers), embedder, tau=tau)

        assert sorted(matches) == sorted(t for t, _ in speakers)
        assigned = [m.role_id for m in matches.values() if not m.is_unknown]
        assert len(assigned) == len(set(assigned))
        assert all(m.similarity >= tau for m in matches.values() if not m.is_unknown)


def test_storage_round_trip(tmp_path, corpus_path):
    roles, store = build_role_database(load_corpus(corpus_path), MockEmbedder())
    RoleDatabaseStorage(tmp_path / "first").save(roles, store)
    loaded_roles, loaded_store = RoleDatabaseStorage(tmp_path / "first").load()
    assert loaded_roles == roles
    assert loaded_store.dimension == 256
    assert [e.entry_id for e in loaded_store.entries] == [0, 1, 2]

    RoleDatabaseStorage(tmp_path / "second").save(loaded_roles, loaded_store)
    for name in ("roles.json", "embeddings.ndjson"):
        assert (tmp_path / "first" / name).read_bytes() == \
            (tmp_path / "second" / name).read_bytes()


def test_rebuild_is_byte_identical(tmp_path, corpus_path):
    for name in ("a", "b"):
        roles, store = build_role_database(load_corpus(corpus_path), MockEmbedder())
        RoleDatabaseStorage(tmp_path / name).save(roles, store)
    for name in ("roles.json", "embeddings.ndjson"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
