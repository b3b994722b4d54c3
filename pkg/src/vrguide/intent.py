"""Query understanding: prompt construction, the five-way intent taxonomy,
object-reference resolution, the action-line contract, and the pluggable
completion backends.

The rule-based path is a full offline stand-in for a language model: it
classifies deterministically and renders persona-flavored replies, so every
downstream behavior can be tested byte-for-byte.
"""

from __future__ import annotations

import difflib
import json
import os
import re
from dataclasses import dataclass, field

from .agent import TELEPORT, WALK
from .errors import (AmbiguousReference, BackendUnavailable, EmptyQuery,
                     NonCanonicalName, UnknownAction, UnknownReference)
from .personas import Persona
from .scene import (DEFAULT_FOV_DEG, DEFAULT_MAX_RANGE, FIRST_PERSON, Pose,
                    Scene, SceneView, birds_eye_view, first_person_view,
                    object_range_and_bearing)

HOLISTIC_DESCRIPTION = "holistic_description"
VISUAL_QUESTION = "visual_question"
GO_TO = "go_to"
ADD_BEACON = "add_beacon"
OTHER = "other"

CONTEXT_REFRESH_SECONDS = 10.0

ACTION_WORDS = {"teleport": (GO_TO, TELEPORT), "walk": (GO_TO, WALK),
                "sound": (ADD_BEACON, None)}

_NAV_TRIGGERS = ("take me", "go to", "walk me", "bring me", "lead me",
                 "navigate", "teleport")
_BEACON_TRIGGERS = ("add a sound", "put a sound", "beacon")
_HOLISTIC_OPENERS = ("what's going on", "describe",
                     "what does this place look like", "where am i",
                     "what is around", "what's around")
_INTERROGATIVES = ("what", "where", "which", "who", "how", "is ", "are ",
                   "can you", "could you", "do you", "does ", "please describe")
_DEICTIC = re.compile(r"\b(this|that|these|those)\b|in front of|over there")


@dataclass(frozen=True)
class Intent:
    kind: str
    object_id: str | None = None
    mode: str | None = None


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    context_blocks: tuple[tuple[str, str], ...]
    user_query: str

    def messages(self) -> list[dict]:
        """Chat-completion message array: system prompt, then one user turn
        carrying the serialized views and the query."""
        blocks = "\n\n".join(f"[{label}]\n{body}"
                             for label, body in self.context_blocks)
        user = f"{blocks}\n\nThe player asked: \"{self.user_query}\""
        return [{"role": "system", "content": self.system_prompt},
                {"role": "user", "content": user}]


@dataclass(frozen=True)
class LLMExchange:
    request: PromptBundle
    response_text: str
    latency: float
    backend: str


# --- prompt construction -----------------------------------------------------

_VIEW_FRAMING = (
    "The two photos you are seeing are two views of a video game. One of "
    "these photos is the bird's eye view of the entire scene. The other "
    "photo is the player's current perspective and what they are currently "
    "looking at in the scene. Here, each photo is provided as a labeled "
    "block of text.")

_ACTION_CONTRACT = (
    "If the player asks to go somewhere or to mark something with audio, "
    "say whether it seems like they want to teleport, walk, or add a sound "
    "to an object, and finish your reply with a final line of exactly this "
    "form:\n<object name>, <teleport|walk|sound>\nUse the object's name "
    "exactly as listed above, pulling the name from the list provided.")

_FALLBACK = (
    "For anything else, imagine as though a player in the game asked it, "
    "and address the player's question as best as you can.")


def build_system_prompt(persona: Persona, scene: Scene) -> str:
    if scene.objects:
        listing = "\n".join(f"- {o.display_name}: {o.description}"
                            for o in scene.objects)
        objects_block = ("These are the major objects in the environment, "
                         "along with descriptions of them:\n" + listing)
    else:
        objects_block = "There are no major objects in this environment."
    return (
        f"You are roleplaying as a {persona.descriptor}, guiding a player "
        f"through a virtual environment.\n\n"
        f"{_VIEW_FRAMING}\n\n"
        f"{objects_block}\n\n"
        f"{_ACTION_CONTRACT}\n\n"
        f"{_FALLBACK}\n")


def serialize_view(view: SceneView) -> str:
    lines = []
    for e in view.entries:
        if view.kind == FIRST_PERSON:
            lines.append(f"- {e.display_name}: {e.description} "
                         f"(distance {e.distance:.2f} m, at your "
                         f"{e.bearing} o'clock)")
        else:
            lines.append(f"- {e.display_name}: {e.description} "
                         f"(position x={e.position.x:.2f}, "
                         f"z={e.position.z:.2f})")
    if not lines:
        return "(nothing in view)"
    return "\n".join(lines)


def build_prompt_bundle(persona: Persona, scene: Scene, birds_eye: SceneView,
                        first_person: SceneView, query: str) -> PromptBundle:
    return PromptBundle(
        system_prompt=build_system_prompt(persona, scene),
        context_blocks=(
            ("Bird's Eye View", serialize_view(birds_eye)),
            ("Player Perspective", serialize_view(first_person)),
        ),
        user_query=query,
    )


def refresh_due(clock: float, last_capture: float | None) -> bool:
    if last_capture is None:
        return True
    if clock < last_capture:
        raise ValueError("clock runs forward only")
    # Tolerate fixed-step float drift right at the boundary.
    return clock - last_capture >= CONTEXT_REFRESH_SECONDS - 1e-9


# --- reference resolution ----------------------------------------------------

def _normalize(query: str) -> str:
    return query.replace("’", "'").strip().lower()


def _word_match(tag: str, text: str) -> bool:
    return re.search(rf"\b{re.escape(tag)}s?\b", text) is not None


def resolve_object_reference(query: str, scene: Scene, pose: Pose | None = None,
                             fov: float = DEFAULT_FOV_DEG,
                             max_range: float = DEFAULT_MAX_RANGE,
                             required: bool = False) -> str | None:
    """Map a free-text mention to an object id.

    Tried in order: exact display-name substring, then narrowing by the
    color/shape words the query mentions, then — if a deictic like "this" or
    "in front of me" is present — the nearest visible candidate. Ambiguity
    raises rather than guessing; with required=True a complete miss raises
    UnknownReference instead of returning None.
    """
    text = _normalize(query)

    named = [o for o in scene.objects if o.display_name.lower() in text]
    if len(named) == 1:
        return named[0].id
    if len(named) > 1:
        raise AmbiguousReference(
            "more than one named object matches",
            candidates=[o.id for o in named])

    colors = {o.color_tag for o in scene.objects if o.color_tag}
    shapes = {o.shape_tag for o in scene.objects if o.shape_tag}
    mentioned_colors = {c for c in colors if _word_match(c, text)}
    mentioned_shapes = {s for s in shapes if _word_match(s, text)}

    candidates = list(scene.objects)
    if mentioned_colors:
        candidates = [o for o in candidates if o.color_tag in mentioned_colors]
    if mentioned_shapes:
        candidates = [o for o in candidates if o.shape_tag in mentioned_shapes]

    has_feature = bool(mentioned_colors or mentioned_shapes)
    deictic = _DEICTIC.search(text) is not None

    if has_feature:
        if len(candidates) == 1:
            return candidates[0].id
        if not candidates:
            if required:
                raise UnknownReference(
                    "no object matches that combination of features")
            return None
        if deictic and pose is not None:
            visible = _visible_among(candidates, scene, pose, fov, max_range)
            if len(visible) >= 1:
                return visible[0]
        raise AmbiguousReference(
            "several objects match that description",
            candidates=[o.id for o in candidates])

    if deictic and pose is not None:
        visible = _visible_among(list(scene.objects), scene, pose, fov,
                                 max_range)
        if visible:
            return visible[0]

    if required:
        raise UnknownReference("nothing in this scene matches that reference")
    return None


def _visible_among(candidates, scene, pose, fov, max_range):
    """Candidate ids visible from the pose, nearest first."""
    view = first_person_view(scene, pose, fov=fov, max_range=max_range)
    wanted = {o.id for o in candidates}
    return [e.object_id for e in view.entries if e.object_id in wanted]


# --- rule-based classifier ---------------------------------------------------

def classify_rule_based(query: str, scene: Scene, pose: Pose | None = None,
                        fov: float = DEFAULT_FOV_DEG,
                        max_range: float = DEFAULT_MAX_RANGE) -> Intent:
    """Deterministic five-way classification by keyword and pattern.

    Precedence: navigation, beacon, holistic opener (without an explicit
    object reference), visual question about a resolvable reference, other.
    """
    text = _normalize(query)
    if not text:
        raise EmptyQuery("query is empty")

    def resolve(required):
        return resolve_object_reference(query, scene, pose=pose, fov=fov,
                                        max_range=max_range, required=required)

    if any(trigger in text for trigger in _NAV_TRIGGERS):
        mode = TELEPORT if "teleport" in text else WALK
        return Intent(kind=GO_TO, object_id=resolve(required=True), mode=mode)

    if any(trigger in text for trigger in _BEACON_TRIGGERS):
        return Intent(kind=ADD_BEACON, object_id=resolve(required=True))

    has_explicit_ref = _mentions_feature_or_name(text, scene)
    if any(opener in text for opener in _HOLISTIC_OPENERS) and not has_explicit_ref:
        return Intent(kind=HOLISTIC_DESCRIPTION)

    interrogative = "?" in text or any(text.startswith(w) or f" {w}" in text
                                       for w in _INTERROGATIVES)
    deictic = _DEICTIC.search(text) is not None
    if (has_explicit_ref or deictic) and interrogative:
        subject = resolve(required=False)
        if subject is not None:
            return Intent(kind=VISUAL_QUESTION, object_id=subject)

    return Intent(kind=OTHER)


def _mentions_feature_or_name(text: str, scene: Scene) -> bool:
    for o in scene.objects:
        if o.display_name.lower() in text:
            return True
        if o.color_tag and _word_match(o.color_tag, text):
            return True
        if o.shape_tag and _word_match(o.shape_tag, text):
            return True
    return False


# --- action-line contract ----------------------------------------------------

_ACTION_LINE = re.compile(r"^\s*(?P<name>.+?)\s*,\s*(?P<action>[A-Za-z]+)\s*\.?\s*$")


def parse_action_response(text: str, scene: Scene) -> Intent:
    """Parse the backend's action line: "<Display Name>, <teleport|walk|sound>".

    Names must match a listed display name exactly (case-insensitive); a
    paraphrase gets a NonCanonicalName carrying the closest listed object.
    """
    match = _ACTION_LINE.match(text)
    if not match:
        raise UnknownAction(f"not an action line: {text!r}")
    action = match.group("action").lower()
    if action not in ACTION_WORDS:
        raise UnknownAction(f"unknown action word {action!r}")
    name = match.group("name")
    by_name = {o.display_name.lower(): o.id for o in scene.objects}
    object_id = by_name.get(name.lower())
    if object_id is None:
        close = difflib.get_close_matches(name.lower(), list(by_name), n=1,
                                          cutoff=0.4)
        suggestion = by_name[close[0]] if close else None
        raise NonCanonicalName(
            f"{name!r} is not a listed object name", suggestion=suggestion)
    kind, mode = ACTION_WORDS[action]
    return Intent(kind=kind, object_id=object_id, mode=mode)


def render_action(intent: Intent, scene: Scene) -> str:
    display = scene.object_by_id(intent.object_id).display_name
    if intent.kind == GO_TO:
        word = "teleport" if intent.mode == TELEPORT else "walk"
    elif intent.kind == ADD_BEACON:
        word = "sound"
    else:
        raise ValueError(f"intent {intent.kind!r} has no action line")
    return f"{display}, {word}"


def extract_action(text: str, scene: Scene) -> tuple[str, Intent | None]:
    """Split a backend reply into surfaced text and an optional trailing
    action line. Returns the reply untouched when the last line is prose."""
    lines = text.rstrip().split("\n")
    last = lines[-1].strip()
    match = _ACTION_LINE.match(last)
    if match and match.group("action").lower() in ACTION_WORDS:
        intent = parse_action_response(last, scene)
        surfaced = "\n".join(lines[:-1]).rstrip()
        return surfaced, intent
    return text, None


# --- response templates ------------------------------------------------------

# Keyed by persona voice_profile; every go_to reply must end with the grab
# invitation so the session can rely on it verbatim.
_PREFIXES = {
    "warm": {"goto": "Okay. ", "beacon": "Of course. ", "holistic":
             "You are in a place called {scene}. Let me describe what is "
             "around us. ",
             "visual": "That is {name}. {description} It is about "
                       "{distance:.1f} meters away, at your {hour} o'clock.",
             "thanks": "You are welcome. Let me know if there is anything "
                       "else I can do.",
             "greeting": "Hello! It is lovely to meet you. How can I help "
                         "you today?",
             "smalltalk": "I am doing well, thank you for asking. How can I "
                          "help you?"},
    "excited": {"goto": "Oh yes! ", "beacon": "Yay! ", "holistic":
                "Ooh, we are in {scene} and there is so much to sniff out! ",
                "visual": "Ooh, that is {name}! {description} It is about "
                          "{distance:.1f} meters away, at your {hour} "
                          "o'clock!",
                "thanks": "You are welcome! Anything else, anything at all!",
                "greeting": "Hi hi! So glad you are here! What are we doing "
                            "first?",
                "smalltalk": "I am so happy you asked! I am great! What can "
                             "we do together?"},
    "succinct": {"goto": "", "beacon": "Done. ", "holistic":
                 "Scene: {scene}. Contents follow. ",
                 "visual": "{name}. {description} Distance {distance:.1f} "
                           "meters, bearing {hour} o'clock.",
                 "thanks": "You are welcome.",
                 "greeting": "Ready.",
                 "smalltalk": "Operational. State your request."},
    "robotic": {"goto": "Affirmative. ", "beacon": "Acknowledged. ",
                "holistic": "Scene designation: {scene}. Enumerating "
                            "objects. ",
                "visual": "Identified: {name}. {description} Range "
                          "{distance:.1f} meters. Bearing {hour} o'clock.",
                "thanks": "Acknowledged. I remain at your service.",
                "greeting": "Greetings. This unit is ready to assist.",
                "smalltalk": "This unit is functioning within normal "
                             "parameters. How may I assist?"},
    "archaic": {"goto": "Very well. ", "beacon": "As thou wishest. ",
                "holistic": "Hark, we find ourselves in {scene}. Attend, "
                            "and I shall recount what lies about. ",
                "visual": "Yonder stands {name}. {description} It lies some "
                          "{distance:.1f} meters hence, at thy {hour} "
                          "o'clock.",
                "thanks": "Thou art most welcome. Call upon me at thy "
                          "pleasure.",
                "greeting": "Well met, traveler. How may this old bird "
                            "serve thee?",
                "smalltalk": "I fare as well as these old wings allow. How "
                             "may I serve thee?"},
    "soft": {"goto": "Of course. ", "beacon": "Quietly done. ", "holistic":
             "We are in {scene}. Around us: ",
             "visual": "That is {name}. {description} About {distance:.1f} "
                       "meters, at your {hour} o'clock.",
             "thanks": "You are welcome.",
             "greeting": "Hello. I am here.",
             "smalltalk": "I am well. I am here if you need me."},
}

GRAB_INVITATION = "Grab onto me and I will take you to {name}."

CLARIFY_AMBIGUOUS = "Which one do you mean: {names}?"
CLARIFY_UNKNOWN = ("I do not see anything like that around here. Could you "
                   "describe it another way?")
CLARIFY_BUSY = ("We are already on our way. Release me first if you would "
                "like to go somewhere else.")
CLARIFY_UNREACHABLE = "I am sorry, I cannot find a way to reach {name} from here."
APOLOGY_UNAVAILABLE = ("I am sorry, I am having trouble thinking right now. "
                       "Please try again in a moment.")

_THANKS = ("thank you", "thanks", "thank u")
_GREETINGS = ("hello", "hi ", "hi!", "hi.", "hey", "good morning",
              "good evening", "good afternoon")
_SMALLTALK = ("how are you", "how do you do", "how are things")


def _profile(persona: Persona) -> dict:
    return _PREFIXES.get(persona.voice_profile, _PREFIXES["warm"])


def render_reply(intent: Intent, query: str, scene: Scene, pose: Pose,
                 persona: Persona) -> str:
    """Deterministic reply text for an intent, in the persona's register.

    For go_to and add_beacon the action line is appended as the final line,
    per the action-output contract.
    """
    table = _profile(persona)
    text = _normalize(query)

    if intent.kind == GO_TO:
        name = scene.object_by_id(intent.object_id).display_name
        reply = table["goto"] + GRAB_INVITATION.format(name=name)
        return f"{reply}\n{render_action(intent, scene)}"

    if intent.kind == ADD_BEACON:
        name = scene.object_by_id(intent.object_id).display_name
        reply = (table["beacon"]
                 + f"I put a sound on {name}. Listen for the pinging.")
        return f"{reply}\n{render_action(intent, scene)}"

    if intent.kind == HOLISTIC_DESCRIPTION:
        opener = table["holistic"].format(scene=scene.name)
        parts = [f"{o.display_name}: {o.description}" for o in scene.objects]
        return opener + " ".join(parts)

    if intent.kind == VISUAL_QUESTION and intent.object_id is not None:
        obj = scene.object_by_id(intent.object_id)
        distance, hour = object_range_and_bearing(scene, pose, obj.id)
        return table["visual"].format(name=obj.display_name,
                                      description=obj.description,
                                      distance=distance, hour=hour)

    # Other: thanks, greeting, small talk, and a generic fallback.
    if any(t in text for t in _THANKS):
        return table["thanks"]
    if any(text.startswith(g) for g in _GREETINGS):
        return table["greeting"]
    if any(s in text for s in _SMALLTALK):
        return table["smalltalk"]
    return table["smalltalk"]


def render_clarification(error, scene: Scene) -> str:
    if isinstance(error, AmbiguousReference):
        names = [scene.object_by_id(oid).display_name
                 for oid in error.candidates]
        return CLARIFY_AMBIGUOUS.format(names=" or ".join(names))
    if isinstance(error, UnknownReference):
        return CLARIFY_UNKNOWN
    raise error


# --- backends ----------------------------------------------------------------

@dataclass(frozen=True)
class RuleGrounding:
    """Everything the deterministic backend needs to classify and answer."""
    scene: Scene
    pose: Pose
    persona: Persona
    fov: float = DEFAULT_FOV_DEG
    max_range: float = DEFAULT_MAX_RANGE


class RuleBackend:
    """Deterministic stand-in for the language model."""

    name = "rule"
    deferred = False

    def complete(self, bundle: PromptBundle,
                 grounding: RuleGrounding | None = None) -> str:
        if grounding is None:
            raise ValueError("RuleBackend requires grounding")
        try:
            intent = classify_rule_based(
                bundle.user_query, grounding.scene, pose=grounding.pose,
                fov=grounding.fov, max_range=grounding.max_range)
        except (AmbiguousReference, UnknownReference) as exc:
            return render_clarification(exc, grounding.scene)
        return render_reply(intent, bundle.user_query, grounding.scene,
                            grounding.pose, grounding.persona)


class ScriptedBackend:
    """Replays canned responses in order; for tests."""

    name = "scripted"
    deferred = False

    def __init__(self, responses):
        self._responses = list(responses)
        self._cursor = 0

    def complete(self, bundle: PromptBundle, grounding=None) -> str:
        if self._cursor >= len(self._responses):
            raise BackendUnavailable("scripted backend is out of responses")
        response = self._responses[self._cursor]
        self._cursor += 1
        return response


class RemoteBackend:
    """HTTP chat-completion backend, configured via GUIDE_LLM_* variables."""

    name = "remote"
    deferred = True

    def __init__(self, url: str | None = None, key: str | None = None,
                 model: str | None = None, timeout: float = 30.0):
        self.url = url or os.environ.get("GUIDE_LLM_URL")
        self.key = key or os.environ.get("GUIDE_LLM_KEY")
        self.model = model or os.environ.get("GUIDE_LLM_MODEL", "gpt-4")
        self.timeout = timeout

    def complete(self, bundle: PromptBundle, grounding=None) -> str:
        if not self.url:
            raise BackendUnavailable("GUIDE_LLM_URL is not configured")
        import requests

        headers = {"Content-Type": "application/json"}
        if self.key:
            headers["Authorization"] = f"Bearer {self.key}"
        body = {"model": self.model, "messages": bundle.messages()}
        try:
            response = requests.post(self.url, json=body, headers=headers,
                                     timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendUnavailable(f"malformed completion response: {exc}") from exc
        except requests.RequestException as exc:
            raise BackendUnavailable(f"completion request failed: {exc}") from exc
