import json
from pathlib import Path

import pytest

from vrguide.scene import load_scene

ROOT = Path(__file__).resolve().parent.parent
TOWN_PATH = ROOT / "scenes" / "town.json"

# 5x5 test scene: an open yard with one reachable crate and one object whose
# anchor cell is walled off on all sides (for unreachable-target paths).
YARD_DOC = {
    "name": "yard",
    "spawn": {"position": [1.5, 0.0, 1.5], "yaw": 0.0},
    "grid": {"origin": [0.0, 0.0, 0.0], "cell_size": 1.0,
             "width": 5, "height": 5,
             "blocked": [[3, 3], [3, 4], [4, 3]]},
    "objects": [
        {"id": "crate", "display_name": "Crate",
         "description": "A wooden crate.", "color": "brown", "shape": "cube",
         "position": [2.5, 0.0, 2.5], "radius": 0.4,
         "anchor": [1.5, 0.0, 2.5]},
        {"id": "island", "display_name": "Island",
         "description": "A pedestal walled off on every side.",
         "color": "gray", "shape": "cylinder",
         "position": [3.5, 0.0, 4.5], "radius": 0.4,
         "anchor": [4.5, 0.0, 4.5]},
    ],
}


@pytest.fixture(scope="session")
def town_bytes() -> bytes:
    return TOWN_PATH.read_bytes()


@pytest.fixture()
def town(town_bytes):
    return load_scene(town_bytes)


@pytest.fixture()
def yard():
    return load_scene(json.dumps(YARD_DOC))
