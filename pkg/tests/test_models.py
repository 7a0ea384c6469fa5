import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sear_hub.core.codec import decode, dumps, encode, round_floats
from sear_hub.core.models import (
    Author,
    ConversationState,
    CueEvent,
    Emotion,
    EmbeddingEntry,
    EnvironmentContext,
    FaceTrack,
    Fact,
    FactCategory,
    Modality,
    RankedFact,
    RoleRecord,
    Segment,
    Setting,
    SocialContextFrame,
    SocialProfile,
    SourceModality,
    Speaker,
    StageSpec,
    StrategyTemplate,
    TranscriptToken,
    Utterance,
)
from sear_hub.core.validation import validate


def rules(entity, **context):
    return {v.rule for v in validate(entity, **context)}


def test_visual_cue_needs_track_id():
    assert "Visual cue carries a trackId" in rules(CueEvent(0, Modality.VISUAL, {}))
    assert validate(CueEvent(0, Modality.VISUAL, {}, "t1")) == []


def test_environment_cue_has_no_track_id():
    assert "Environment cue has no trackId" in rules(
        CueEvent(5, Modality.ENVIRONMENT, {"object.label": "sofa"}, "t1"))


def test_negative_timestamp():
    assert "timestampMs ≥ 0" in rules(CueEvent(-1, Modality.AUDIO, {}))


def test_token_bounds():
    assert rules(TranscriptToken("hi", 10, 5)) == {"startMs ≤ endMs"}
    assert validate(TranscriptToken("hi", 5, 5)) == []


def test_frame_segment_outside_window():
    frame = SocialContextFrame(0, 100, transcript=(Segment(Speaker.OTHER, "x", 50, 150),))
    assert "segment lies within the window" in rules(frame)


def test_frame_undeclared_expression_key():
    track = FaceTrack("t1", {"expression.wink": 0.5}, "wink")
    assert "expression key is declared" in rules(SocialContextFrame(0, 10, face_tracks=(track,)))


def test_fact_salience_range():
    assert "salience ∈ [0,1]" in rules(Fact(FactCategory.INTEREST, "games", 1.5))
    assert "text non-empty" in rules(Fact(FactCategory.INTEREST, "   "))


def test_role_trait_vocabulary():
    role = RoleRecord("role-a", "a", traits={"shoeSize": "44"})
    assert "trait key in declared vocabulary" in rules(role)


def test_duplicate_role_ids():
    roles = [RoleRecord("role-a", "a"), RoleRecord("role-a", "b")]
    assert "roleId unique within a role database" in rules(roles)


def test_embedding_dimension_and_norm():
    assert "dimension equals D=3" in rules(EmbeddingEntry(0, (1.0, 0.0), "r", "d"), dimension=3)
    assert "|‖vector‖₂ − 1| ≤ 1e-6" in rules(EmbeddingEntry(0, (1.0, 1.0), "r", "d"),
                                              dimension=2)


def test_profile_must_be_sorted():
    low = RankedFact(Fact(FactCategory.DEMOGRAPHIC, "b"), 0.1)
    high = RankedFact(Fact(FactCategory.INTEREST, "a"), 0.5)
    assert validate(SocialProfile("r", ranked_facts=(high, low))) == []
    assert "rankedFacts sorted by rankScore, ties by text" in rules(
        SocialProfile("r", ranked_facts=(low, high)))


def test_template_invariants():
    stage = StageSpec("Opening", "o", "p", max_retries=-1)
    template = StrategyTemplate("t", stages=(stage, stage))
    found = rules(template)
    assert "stage names unique within template" in found
    assert "maxRetries ≥ 0" in found
    assert "at least one stage" in rules(StrategyTemplate("empty"))


def test_conversation_authors_alternate():
    history = (Utterance(Author.AGENT, "hi", "Opening", 0),
               Utterance(Author.AGENT, "again", "Opening", 1))
    assert "authors alternate" in rules(ConversationState(history=history))
    assert "currentStageIndex ≤ number of stages" in rules(
        ConversationState(current_stage_index=4), stage_count=3)


def test_validate_never_raises():
    violations = validate(object())
    assert len(violations) == 1
    assert "unknown domain type" in violations[0].rule


def test_frame_codec_round_trip():
    frame = SocialContextFrame(
        window_start_ms=0,
        window_end_ms=1000,
        face_tracks=(FaceTrack("t1", {"expression.smile": 0.9}, "smile", (120,)),),
        transcript=(Segment(Speaker.OTHER, "hello there", 100, 400),),
        environment=EnvironmentContext(("lamp", "sofa"), Setting.INDOOR),
        emotion={"t1": Emotion("happy", 0.9)},
    )
    assert decode(SocialContextFrame, encode(frame)) == frame


def test_dumps_is_single_sorted_line():
    text = dumps({"b": "line\nbreak", "a": "Привет"})
    assert text == '{"a":"Привет","b":"line\\nbreak"}'
    assert "\n" not in text


def test_round_floats_nine_significant_digits():
    assert round_floats(0.12345678912345) == 0.123456789
    assert round_floats({"x": [1.0000000001, True, 3]}) == {"x": [1.0, True, 3]}


@pytest.mark.parametrize("value", [0.0, 0.5, 1.0])
def test_fact_salience_bounds_accepted(value):
    assert validate(Fact(FactCategory.EVENT, "graduation", value)) == []


unit_floats = st.floats(0.0, 1.0, allow_nan=False)
fact_values = st.builds(
    Fact,
    category=st.sampled_from(list(FactCategory)),
    text=st.text(min_size=1, max_size=40),
    salience=unit_floats,
    source_modality=st.sampled_from(list(SourceModality)),
    observed_at_ms=st.integers(0, 2_000_000_000_000),
)
trait_maps = st.dictionaries(st.sampled_from(["profession", "ageBand", "residence", "education"]),
                           st.text(max_size=20))


@settings(max_examples=50)
@given(role_id=st.text(min_size=1, max_size=20), traits=trait_maps,
       facts=st.lists(fact_values, max_size=5), ids=st.lists(st.integers(0, 10_000), max_size=5))
def test_role_record_codec_round_trip(role_id, traits, facts, ids):
    record = RoleRecord(role_id, "P-0a1b2c3d", traits, tuple(facts), tuple(ids))
    assert decode(RoleRecord, encode(record)) == record


@settings(max_examples=50)
@given(traits=trait_maps, ranked=st.lists(st.tuples(fact_values, unit_floats), max_size=5),
       labels=st.lists(st.text(max_size=10), max_size=3),
       setting=st.sampled_from(list(Setting)), updated=st.integers(0, 2_000_000_000_000))
def test_social_profile_codec_round_trip(traits, ranked, labels, setting, updated):
    profile = SocialProfile("role-x", traits, tuple(RankedFact(f, s) for f, s in ranked),
                            EnvironmentContext(tuple(labels), setting), updated)
    assert decode(SocialProfile, encode(profile)) == profile
