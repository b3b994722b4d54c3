"""A conversational sighted-guide engine for simulated 3D scenes.

The guide follows the user, answers questions about the surroundings from a
dual first-person/bird's-eye context, escorts them to objects after a
physical grab, places audio beacons, and can swap between personas — all
headless, deterministic, and scriptable.
"""

from .agent import (AWAITING_GRAB, ESCORTING, FOLLOWING, GUIDE_SPEED,
                    GuideState)
from .audio import AudioEvent, Beacon, BeaconRegistry, attenuate
from .errors import GuideError
from .intent import (Intent, LLMExchange, PromptBundle, RemoteBackend,
                     RuleBackend, ScriptedBackend, build_system_prompt,
                     classify_rule_based)
from .pathfinding import Path, advance, follow_anchor, plan_path
from .personas import Persona, builtin_personas, get_persona, persona_registry
from .scene import (Pose, Scene, SceneObject, Vec3, WalkGrid, birds_eye_view,
                    first_person_view, load_scene, serialize_scene)
from .server import GuideServer, serve
from .session import (Session, SessionConfig, create_session, parse_script,
                      run_script)
from .transcript import Transcript, TranscriptEntry, parse_transcript

__version__ = "0.1.0"

__all__ = [
    "AWAITING_GRAB", "AudioEvent", "Beacon", "BeaconRegistry", "ESCORTING",
    "FOLLOWING", "GUIDE_SPEED", "GuideError", "GuideServer", "GuideState",
    "Intent", "LLMExchange", "Path", "Persona", "Pose", "PromptBundle",
    "RemoteBackend", "RuleBackend", "Scene", "SceneObject", "ScriptedBackend",
    "Session", "SessionConfig", "Transcript", "TranscriptEntry", "Vec3",
    "WalkGrid", "advance", "attenuate", "birds_eye_view",
    "build_system_prompt", "builtin_personas", "classify_rule_based",
    "create_session", "first_person_view", "follow_anchor", "get_persona",
    "load_scene", "parse_script", "parse_transcript", "persona_registry",
    "plan_path", "run_script", "serialize_scene", "serve",
]
