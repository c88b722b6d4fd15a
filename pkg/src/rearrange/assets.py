"""Access to bundled scene fixtures."""

from importlib import resources
from pathlib import Path
from typing import List

from .errors import SceneParseError
from .scene import Scene, load_scene

FIXTURES = ("scene1", "scene2", "scene3")


def fixture_names() -> List[str]:
    return list(FIXTURES)


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("rearrange").joinpath(f"data/scenes/{name}.json")))


def load_fixture(name: str) -> Scene:
    path = fixture_path(name)
    if not path.exists():
        raise SceneParseError(f"unknown scene fixture {name!r} (have {', '.join(FIXTURES)})")
    return load_scene(path.read_bytes())


def load_scene_arg(value: str) -> Scene:
    """Resolve a CLI scene argument: a fixture name or a path to a scene document."""
    if value in FIXTURES:
        return load_fixture(value)
    path = Path(value)
    if not path.exists():
        raise SceneParseError(f"scene {value!r} is neither a fixture name nor an existing file")
    return load_scene(path.read_bytes())
