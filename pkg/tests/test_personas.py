import json

import pytest

from sear_hub.backends.personas import (
    Persona,
    PersonaRule,
    PersonaTarget,
    ReceptivenessBias,
    ReplTarget,
    load_personas,
    persona_respond,
    save_personas,
)
from sear_hub.core.exceptions import ArgumentError, FormatError, InteractionError


@pytest.fixture
def personas(personas_path):
    return load_personas(personas_path)


def test_bundled_personas(personas):
    assert list(personas) == ["jonny-neutral", "friendly-stranger", "hostile-stranger"]
    assert personas["hostile-stranger"].receptiveness_bias is ReceptivenessBias.HOSTILE


def test_first_matching_rule_wins(personas):
    jonny = personas["jonny-neutral"]
    assert persona_respond(jonny, "Do you like video games?") == "I love Black Myth Wukong!"
    assert persona_respond(jonny, "Video games at the CMU graduation?") == \
        "I love Black Myth Wukong!"
    assert persona_respond(jonny, "Was the graduation fun?") == \
        "Yes, how did you know? I graduated last year."


def test_default_reply_carries_bias_prefix(personas):
    assert persona_respond(personas["jonny-neutral"], "Nice weather") == "Oh, okay."
    assert persona_respond(personas["friendly-stranger"], "Nice weather") == \
        "Sure — that sounds fun, tell me more."
    assert persona_respond(personas["hostile-stranger"], "Nice weather") == \
        "Hmm. no, I am not interested."


def test_termination_trigger_beats_rules(personas):
    hostile = personas["hostile-stranger"]
    assert persona_respond(hostile, "Want to meet this weekend?") == "stop"
    assert persona_respond(hostile, "How was your weekend?") == "Not your business, I am busy."


def test_keywords_match_whole_tokens():
    persona = Persona("p", "default", (PersonaRule(("cat",), "meow"),))
    assert persona_respond(persona, "I have a CAT.") == "meow"
    assert persona_respond(persona, "Concatenate these") == "default"


def test_reply_template_can_echo_utterance():
    persona = Persona("p", "default", (PersonaRule(("hello",), "You said: {UTTERANCE}"),))
    assert persona_respond(persona, "hello there") == "You said: hello there"


def test_empty_default_reply_rejected():
    with pytest.raises(ArgumentError):
        Persona("p", "   ")


def test_save_and_load(tmp_path, personas):
    path = tmp_path / "personas.json"
    save_personas(path, list(personas.values()))
    assert load_personas(path) == personas


def test_load_rejects_broken_file(tmp_path):
    path = tmp_path / "personas.json"
    path.write_text(json.dumps([{"personaId": "p", "defaultReply": ""}]), encoding="utf-8")
    with pytest.raises(FormatError):
        load_personas(path)


def test_persona_target(personas):
    target = PersonaTarget(personas["jonny-neutral"])
    assert target.name == "jonny-neutral"
    assert target.respond("Let's meet for coffee", ()) == "Sure, sounds good, let's do it."


def test_repl_target_reads_replies():
    shown = []
    target = ReplTarget(reader=lambda: "  sure thing  ", writer=shown.append)
    assert target.respond("Hi Jonny", ()) == "sure thing"
    assert shown == ["🤖 Агент: Hi Jonny"]


def test_repl_target_end_of_input_closes_channel():
    def reader():
        raise EOFError
    target = ReplTarget(reader=reader, writer=lambda _: None)
    with pytest.raises(InteractionError):
        target.respond("Hi", ())
    assert target.closed
    with pytest.raises(InteractionError):
        target.respond("Hi again", ())


def test_introduction_prefers_opening_line(personas):
    assert personas["jonny-neutral"].introduction().startswith("Spent the weekend playing")
    quiet = Persona("p", "Hm.", (PersonaRule(("cat",), "I have two cats."),))
    assert quiet.introduction() == "I have two cats. Hm."
