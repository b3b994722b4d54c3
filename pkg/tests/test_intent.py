"""Intent pipeline tests: prompt assembly golden strings, classification of
the labeled query corpus, the action-line grammar round trip, and backend
behavior."""

import json
import math

import pytest

from conftest import ROOT
from vrguide.agent import TELEPORT, WALK
from vrguide.errors import (AmbiguousReference, BackendUnavailable,
                            EmptyQuery, NonCanonicalName, UnknownAction,
                            UnknownReference)
from vrguide.intent import (ADD_BEACON, GO_TO, HOLISTIC_DESCRIPTION, OTHER,
                            VISUAL_QUESTION, Intent, PromptBundle,
                            RemoteBackend, RuleBackend, RuleGrounding,
                            ScriptedBackend, build_prompt_bundle,
                            build_system_prompt, classify_rule_based,
                            extract_action, parse_action_response,
                            refresh_due, render_action, render_reply,
                            resolve_object_reference, serialize_view)
from vrguide.personas import builtin_personas, get_persona
from vrguide.scene import (Pose, Vec3, birds_eye_view, first_person_view)

CORPUS_PATH = ROOT / "data" / "query_corpus.json"

SPAWN = Pose(position=Vec3(0.0, 0.0, 0.0), yaw=0.0)


def load_corpus():
    return json.loads(CORPUS_PATH.read_text(encoding="utf-8"))


def pose_of(entry):
    raw = entry.get("pose")
    if raw is None:
        return SPAWN
    return Pose(position=Vec3(*raw["position"]), yaw=raw["yaw"])


# --- corpus ------------------------------------------------------------------

def test_corpus_has_twenty_five_entries():
    assert len(load_corpus()) == 25


def test_corpus_classifies_with_zero_mismatches(town):
    mismatches = []
    for entry in load_corpus():
        expected = entry["expected_intent"]
        try:
            intent = classify_rule_based(entry["query"], town,
                                         pose=pose_of(entry))
            got = (intent.kind, intent.object_id, intent.mode)
        except AmbiguousReference:
            got = ("error:ambiguous_reference", None, None)
        except UnknownReference:
            got = ("error:unknown_reference", None, None)
        want = (expected, entry["expected_object"], entry["expected_mode"])
        if got != want:
            mismatches.append((entry["query"], want, got))
    assert mismatches == []


def test_corpus_covers_all_five_intents_and_both_errors():
    labels = {entry["expected_intent"] for entry in load_corpus()}
    assert {HOLISTIC_DESCRIPTION, VISUAL_QUESTION, GO_TO, ADD_BEACON, OTHER,
            "error:ambiguous_reference",
            "error:unknown_reference"} <= labels


# --- classifier edges ----------------------------------------------------------

def test_empty_query_rejected(town):
    with pytest.raises(EmptyQuery):
        classify_rule_based("", town)
    with pytest.raises(EmptyQuery):
        classify_rule_based("   ", town)


def test_curly_apostrophes_normalize(town):
    intent = classify_rule_based("What’s going on?", town, pose=SPAWN)
    assert intent.kind == HOLISTIC_DESCRIPTION


def test_whats_around_phrasings_are_holistic(town):
    for query in ("What is around me?", "What's around here?",
                  "Can you tell me what is around?"):
        intent = classify_rule_based(query, town, pose=SPAWN)
        assert intent.kind == HOLISTIC_DESCRIPTION, query
    # a named object keeps the question specific, not holistic
    specific = classify_rule_based("What is around the Red Car?", town,
                                   pose=SPAWN)
    assert specific.kind == VISUAL_QUESTION


def test_pure_deictic_question_picks_nearest_visible(town):
    intent = classify_rule_based("What's that?", town, pose=SPAWN)
    assert intent == Intent(kind=VISUAL_QUESTION, object_id="tall_building")


def test_teleport_word_sets_mode(town):
    intent = classify_rule_based("Teleport me to the Red Car.", town,
                                 pose=SPAWN)
    assert intent == Intent(kind=GO_TO, object_id="red_car", mode=TELEPORT)


def test_ambiguous_color_lists_both_candidates(town):
    with pytest.raises(AmbiguousReference) as excinfo:
        resolve_object_reference("the yellow one", town, pose=SPAWN)
    assert excinfo.value.candidates == ["tall_building", "sideways_building"]


def test_color_plus_shape_narrows_to_one(town):
    got = resolve_object_reference("the yellow cube", town, pose=SPAWN)
    assert got == "tall_building"


def test_unknown_reference_only_when_required(town):
    assert resolve_object_reference("the fountain", town, pose=SPAWN) is None
    with pytest.raises(UnknownReference):
        resolve_object_reference("the fountain", town, pose=SPAWN,
                                 required=True)


# --- prompt assembly -----------------------------------------------------------

def test_system_prompt_golden_strings(town):
    prompt = build_system_prompt(get_persona("human"), town)
    assert ("One of these photos is the bird's eye view of the entire scene. "
            "The other photo is the player's current perspective") in prompt
    assert "it seems" in prompt
    assert "teleport, walk, or add a sound" in prompt
    assert "address the player's question as best as you can" in prompt
    assert "<object name>, <teleport|walk|sound>" in prompt
    for obj in town.objects:
        assert obj.display_name in prompt
        assert obj.description in prompt


def test_system_prompt_embeds_each_persona_descriptor(town):
    for persona in builtin_personas():
        prompt = build_system_prompt(persona, town)
        assert persona.descriptor in prompt


def test_serialize_first_person_mentions_distance_and_bearing(town):
    view = first_person_view(town, SPAWN)
    text = serialize_view(view)
    assert "Tall Building" in text
    assert "distance 2.55 m" in text
    assert "12 o'clock" in text


def test_serialize_birds_eye_lists_every_object_with_position(town):
    text = serialize_view(birds_eye_view(town))
    for obj in town.objects:
        assert obj.display_name in text
    assert "x=0.50, z=2.50" in text


def test_bundle_messages_shape(town):
    bundle = build_prompt_bundle(get_persona("human"), town,
                                 birds_eye_view(town),
                                 first_person_view(town, SPAWN),
                                 "Where am I?")
    messages = bundle.messages()
    assert [m["role"] for m in messages] == ["system", "user"]
    assert messages[0]["content"] == bundle.system_prompt
    assert "[Bird's Eye View]" in messages[1]["content"]
    assert "[Player Perspective]" in messages[1]["content"]
    assert 'The player asked: "Where am I?"' in messages[1]["content"]


def test_refresh_due_cadence():
    assert refresh_due(0.0, None)
    assert not refresh_due(9.99, 0.0)
    assert refresh_due(10.0, 0.0)
    assert refresh_due(35.0, 0.0)
    with pytest.raises(ValueError):
        refresh_due(5.0, 10.0)


# --- action-line grammar ---------------------------------------------------------

def test_action_round_trip_every_object_and_action(town):
    cases = [Intent(kind=GO_TO, object_id=o.id, mode=m)
             for o in town.objects for m in (WALK, TELEPORT)]
    cases += [Intent(kind=ADD_BEACON, object_id=o.id) for o in town.objects]
    for intent in cases:
        line = render_action(intent, town)
        assert parse_action_response(line, town) == intent


def test_parse_action_is_case_insensitive(town):
    got = parse_action_response("sideways building, TELEPORT", town)
    assert got == Intent(kind=GO_TO, object_id="sideways_building",
                         mode=TELEPORT)


def test_paraphrased_name_rejected_with_suggestion(town):
    with pytest.raises(NonCanonicalName) as excinfo:
        parse_action_response("sideways yellow building, teleport", town)
    assert excinfo.value.suggestion == "sideways_building"


def test_unknown_action_word_rejected(town):
    with pytest.raises(UnknownAction):
        parse_action_response("Red Car, fly", town)
    with pytest.raises(UnknownAction):
        parse_action_response("no comma here", town)


def test_extract_action_splits_trailing_line(town):
    text = "Okay. Grab onto me and I will take you to Red Car.\nRed Car, walk"
    surfaced, intent = extract_action(text, town)
    assert surfaced == "Okay. Grab onto me and I will take you to Red Car."
    assert intent == Intent(kind=GO_TO, object_id="red_car", mode=WALK)


def test_extract_action_leaves_prose_alone(town):
    text = "Thanks, friend. That was fun."
    assert extract_action(text, town) == (text, None)


def test_extract_action_propagates_non_canonical_name(town):
    with pytest.raises(NonCanonicalName):
        extract_action("Sure thing.\nsideways yellow building, walk", town)


# --- rule backend ---------------------------------------------------------------

def _grounding(town, pose=SPAWN, persona_id="human"):
    return RuleGrounding(scene=town, pose=pose,
                         persona=get_persona(persona_id))


def _bundle(town, query, pose=SPAWN, persona_id="human"):
    return build_prompt_bundle(get_persona(persona_id), town,
                               birds_eye_view(town),
                               first_person_view(town, pose), query)


def test_rule_backend_requires_grounding(town):
    with pytest.raises(ValueError):
        RuleBackend().complete(_bundle(town, "Where am I?"))


def test_rule_backend_goto_reply_and_action_line(town):
    query = "Can you take me to Sideways Building?"
    text = RuleBackend().complete(_bundle(town, query), _grounding(town))
    surfaced, intent = extract_action(text, town)
    assert surfaced == ("Okay. Grab onto me and I will take you to "
                        "Sideways Building.")
    assert intent == Intent(kind=GO_TO, object_id="sideways_building",
                            mode=WALK)


def test_rule_backend_thanks_reply_verbatim(town):
    text = RuleBackend().complete(_bundle(town, "Thank you."),
                                  _grounding(town))
    assert text == ("You are welcome. Let me know if there is anything else "
                    "I can do.")


def test_rule_backend_holistic_names_every_object(town):
    text = RuleBackend().complete(
        _bundle(town, "Hello. Can you tell me what's going on?"),
        _grounding(town))
    for obj in town.objects:
        assert obj.display_name in text
        assert obj.description in text
    assert extract_action(text, town)[1] is None


def test_rule_backend_visual_reply_names_subject(town):
    turned = Pose(position=Vec3(0.0, 0.0, 0.0), yaw=3 * math.pi / 2)
    query = "Uh, can you tell me what the yellow thing in front of me is?"
    text = RuleBackend().complete(_bundle(town, query, pose=turned),
                                  _grounding(town, pose=turned))
    assert "Sideways Building" in text
    assert extract_action(text, town)[1] is None


def test_rule_backend_ambiguity_becomes_clarification(town):
    text = RuleBackend().complete(
        _bundle(town, "Take me to the yellow building."), _grounding(town))
    assert text == "Which one do you mean: Tall Building or Sideways Building?"
    assert extract_action(text, town)[1] is None


def test_rule_backend_unknown_reference_becomes_clarification(town):
    text = RuleBackend().complete(_bundle(town, "Take me to the fountain."),
                                  _grounding(town))
    assert "I do not see anything like that" in text


def test_every_register_ends_goto_with_grab_invitation(town):
    intent = Intent(kind=GO_TO, object_id="red_car", mode=WALK)
    for persona in builtin_personas():
        text = render_reply(intent, "take me to the red car", town, SPAWN,
                            persona)
        lines = text.split("\n")
        assert lines[0].endswith("Grab onto me and I will take you to "
                                 "Red Car.")
        assert lines[-1] == "Red Car, walk"


def test_beacon_reply_carries_sound_action(town):
    text = RuleBackend().complete(_bundle(town, "Add a sound to the Red Car."),
                                  _grounding(town))
    surfaced, intent = extract_action(text, town)
    assert intent == Intent(kind=ADD_BEACON, object_id="red_car")
    assert "Red Car" in surfaced


# --- scripted and remote backends -------------------------------------------------

def test_scripted_backend_replays_in_order(town):
    backend = ScriptedBackend(["first", "second"])
    bundle = _bundle(town, "Where am I?")
    assert backend.complete(bundle) == "first"
    assert backend.complete(bundle) == "second"
    with pytest.raises(BackendUnavailable):
        backend.complete(bundle)


def test_remote_backend_requires_url(town, monkeypatch):
    monkeypatch.delenv("GUIDE_LLM_URL", raising=False)
    with pytest.raises(BackendUnavailable):
        RemoteBackend().complete(_bundle(town, "Where am I?"))


def test_remote_backend_parses_chat_completion(town, monkeypatch):
    import requests

    captured = {}

    class FakeResponse:
        def raise_for_status(self):
            pass

        def json(self):
            return {"choices": [{"message": {"content": "Hi there."}}]}

    def fake_post(url, json=None, headers=None, timeout=None):
        captured["url"] = url
        captured["body"] = json
        captured["headers"] = headers
        return FakeResponse()

    monkeypatch.setattr(requests, "post", fake_post)
    backend = RemoteBackend(url="http://example.invalid/v1/chat",
                            key="secret", model="test-model")
    text = backend.complete(_bundle(town, "Where am I?"))
    assert text == "Hi there."
    assert captured["url"] == "http://example.invalid/v1/chat"
    assert captured["body"]["model"] == "test-model"
    assert captured["headers"]["Authorization"] == "Bearer secret"
    assert [m["role"] for m in captured["body"]["messages"]] == ["system",
                                                                 "user"]


def test_remote_backend_wraps_transport_and_shape_errors(town, monkeypatch):
    import requests

    def explode(*args, **kwargs):
        raise requests.ConnectionError("refused")

    monkeypatch.setattr(requests, "post", explode)
    backend = RemoteBackend(url="http://example.invalid/v1/chat")
    with pytest.raises(BackendUnavailable):
        backend.complete(_bundle(town, "Where am I?"))

    class WeirdResponse:
        def raise_for_status(self):
            pass

        def json(self):
            return {"unexpected": True}

    monkeypatch.setattr(requests, "post",
                        lambda *a, **kw: WeirdResponse())
    with pytest.raises(BackendUnavailable):
        backend.complete(_bundle(town, "Where am I?"))
