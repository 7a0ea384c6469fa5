from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sear_hub.core.codec import decode, encode
from sear_hub.core.exceptions import ArgumentError, FormatError
from sear_hub.core.models import QuestionnaireResponse, Section
from sear_hub.survey.analytics import (
    aggregate_likert,
    aggregate_yes_no,
    baseline_comparison,
    bottom_three_fraction,
    build_report,
    display_mean,
    display_percent,
    load_responses,
    top_two_fraction,
    trust_shift,
)
from sear_hub.survey.schema import default_schema, load_schema

SE = Section.SE_EFFECTIVENESS


def answers(question_id, split, section=SE, offset=0):
    """split: {value: count}; участники p000, p001, ... по порядку."""
    out, i = [], offset
    for value, count in split.items():
        for _ in range(count):
            out.append(QuestionnaireResponse(f"p{i:03d}", section, question_id, value))
            i += 1
    return out


def test_mean_examples():
    _, mean = aggregate_likert(answers("PhotoLink", {5: 36, 4: 18, 3: 6}), "PhotoLink")
    assert display_mean(mean) == "4.50"
    _, mean = aggregate_likert(answers("PhotoLink", {5: 60}), "PhotoLink")
    assert display_mean(mean) == "5.00"
    counts, mean = aggregate_likert(answers("PhotoLink", {3: 1}), "PhotoLink")
    assert counts == {3: 1}
    assert display_mean(mean) == "3.00"


def test_no_answers_leaves_mean_undefined():
    counts, mean = aggregate_likert([], "SMS")
    assert counts == {}
    assert mean is None
    assert display_mean(mean) == "n/a"
    assert top_two_fraction([], "SMS") is None


@pytest.mark.parametrize("question_id,split,expected", [
    ("PhotoLink", {5: 24, 4: 32, 2: 4}, "93.3%"),
    ("SMS", {5: 27, 4: 28, 3: 5}, "91.7%"),
    ("PhoneCall", {5: 30, 4: 21, 3: 9}, "85.0%"),
])
def test_top_two_box(question_id, split, expected):
    fraction = top_two_fraction(answers(question_id, split), question_id)
    assert display_percent(fraction) == expected


def test_trust_shift():
    records = answers("TrustBefore", {5: 16, 3: 44}) + answers("TrustAfter", {5: 25, 4: 21, 2: 14})
    shift = trust_shift(records)
    assert display_percent(shift.at_least_4_after) == "76.7%"
    assert display_percent(shift.five_before) == "26.7%"
    assert shift.excluded == 0
    assert shift.shift[5] == 9


def test_trust_shift_excludes_unpaired_participants():
    records = answers("TrustBefore", {5: 3}) + answers("TrustAfter", {4: 2}) \
        + answers("TrustAfter", {1: 1}, offset=10)
    shift = trust_shift(records)
    assert shift.before == {5: 2}
    assert shift.after == {4: 2}
    assert shift.excluded == 2


def test_yes_no(questionnaire_path):
    records = [QuestionnaireResponse(f"p{i}", SE, "WouldMeetAgain", i < 45) for i in range(60)]
    schema = load_schema(questionnaire_path)
    yes, no, fraction = aggregate_yes_no(records, "WouldMeetAgain", schema)
    assert (yes, no) == (45, 15)
    assert display_percent(fraction) == "75.0%"


def test_wrong_question_kind():
    with pytest.raises(ArgumentError):
        aggregate_likert([], "Feedback")
    with pytest.raises(ArgumentError):
        aggregate_yes_no([], "PhotoLink")


@settings(max_examples=80)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=200))
def test_top_two_and_bottom_three_partition(values):
    records = [QuestionnaireResponse(f"p{i}", SE, "SMS", v) for i, v in enumerate(values)]
    total = top_two_fraction(records, "SMS") + bottom_three_fraction(records, "SMS")
    assert total == Fraction(1)


def test_percent_rounds_half_up():
    assert display_percent(Fraction(1, 8)) == "12.5%"
    assert display_percent(Fraction(1, 16)) == "6.3%"
    assert display_mean(Fraction(4005, 1000)) == "4.01"


def test_baseline_comparison():
    bc = Section.BASELINE_COMPARISON
    records = answers("Q1-Bare", {5: 28, 4: 20, 3: 12}, bc) \
        + answers("Q3-SEAR", {5: 46, 4: 14}, bc)
    arms = {a.question_id: a for a in baseline_comparison(records)}
    assert display_percent(arms["Q1-Bare"].very_good) == "46.7%"
    assert display_percent(arms["Q3-SEAR"].very_good) == "76.7%"
    assert arms["Q2-ARLLM"].very_good is None


def test_build_report_lists_answered_questions():
    records = answers("PhotoLink", {5: 24, 4: 32, 2: 4}) + answers("SMS", {5: 1})
    report = build_report(records)
    assert report.participants == 60
    assert [q.question_id for q in report.questions] == ["PhotoLink", "SMS"]
    sms = report.question("SMS")
    assert (sms.respondents, sms.missing) == (1, 59)
    assert report.question("PhotoLink").counts == {"2": 4, "4": 32, "5": 24}
    assert report.trust is None


def test_empty_report():
    report = build_report([])
    assert report.is_empty
    assert report.participants == 0


def test_load_responses_rejects_bad_lines(write_ndjson):
    good = {"participantPseudonym": "p1", "section": "SEEffectiveness",
            "questionId": "PhotoLink", "value": 5}
    path = write_ndjson("responses.ndjson", [
        good,
        "{not json",
        {**good, "questionId": "Unknown"},
        {**good, "participantPseudonym": "p2", "value": 6},
        {**good, "participantPseudonym": "p3", "value": True},
        good,
        {**good, "section": "Elsewhere"},
        {"participantPseudonym": "p4", "section": "OpenText", "questionId": "Feedback",
         "value": "Felt natural."},
    ])
    records, rejects = load_responses(path)
    assert [r.participant_pseudonym for r in records] == ["p1", "p4"]
    assert [r.line for r in rejects] == [2, 3, 4, 5, 6, 7]


def test_default_schema_shape():
    ids = [q.question_id for _, q in default_schema().questions()]
    assert len(ids) == len(set(ids))
    assert "TrustBefore" in ids and "Feedback" in ids


def test_broken_schema_file(tmp_path):
    path = tmp_path / "questionnaire.json"
    path.write_text('{"sections": [{"section": "Nowhere", "questions": []}]}', encoding="utf-8")
    with pytest.raises(FormatError):
        load_schema(path)


def test_load_responses_rejects_undecodable_line(tmp_path):
    good = ('{"participantPseudonym":"p1","section":"SEEffectiveness",'
            '"questionId":"PhotoLink","value":5}\n').encode("utf-8")
    path = tmp_path / "responses.ndjson"
    path.write_bytes(good + b'{"participantPseudonym":"p2\xff\xfe"}\n'
                     + good.replace(b"p1", b"p3"))
    records, rejects = load_responses(path)
    assert [r.participant_pseudonym for r in records] == ["p1", "p3"]
    assert [r.line for r in rejects] == [2]
    assert "UTF-8" in rejects[0].reason


def test_report_with_only_out_of_range_likert():
    report = build_report([QuestionnaireResponse("p1", SE, "PhotoLink", 9)])
    photo = report.question("PhotoLink")
    assert photo.respondents == 1
    assert photo.counts == {}
    assert photo.mean is None
    assert photo.top_two is None
    assert display_mean(photo.mean) == "n/a"


likert_values = st.lists(st.integers(1, 5), min_size=1, max_size=40)


def responses_for(values):
    return [QuestionnaireResponse(f"p{i:03d}", SE, "PhotoLink", v) for i, v in enumerate(values)]


@settings(max_examples=60)
@given(data=st.data(), values=likert_values)
def test_aggregates_ignore_record_order(data, values):
    records = responses_for(values)
    shuffled = data.draw(st.permutations(records))
    assert aggregate_likert(shuffled, "PhotoLink") == aggregate_likert(records, "PhotoLink")
    assert top_two_fraction(shuffled, "PhotoLink") == top_two_fraction(records, "PhotoLink")
    assert build_report(shuffled) == build_report(records)


@settings(max_examples=60)
@given(values=likert_values)
def test_extra_five_never_lowers_mean(values):
    records = responses_for(values)
    _, before = aggregate_likert(records, "PhotoLink")
    _, after = aggregate_likert(
        records + [QuestionnaireResponse("p-extra", SE, "PhotoLink", 5)], "PhotoLink")
    assert after >= before


@settings(max_examples=50)
@given(
    pseudonym=st.text(min_size=1, max_size=16),
    section=st.sampled_from(list(Section)),
    question_id=st.sampled_from(["PhotoLink", "TrustBefore", "Feedback"]),
    value=st.one_of(st.integers(1, 5), st.booleans(), st.text(max_size=30)),
)
def test_response_codec_round_trip(pseudonym, section, question_id, value):
    response = QuestionnaireResponse(pseudonym, section, question_id, value)
    assert decode(QuestionnaireResponse, encode(response)) == response
