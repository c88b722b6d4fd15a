"""Regenerate the bundled scene fixtures and seed experiences.

Run from the repository root: python scripts/generate_data.py
Every document is built through the package's own types so the bundled
data always passes scene validation.
"""

import json
from pathlib import Path

from rearrange.geometry import Calibration, OrientedBox
from rearrange.scene import ObjectRecord, Scene, Workspace, save_scene, validate_scene

ROOT = Path(__file__).resolve().parents[1]
SCENES = ROOT / "src" / "rearrange" / "data" / "scenes"
SEED = ROOT / "src" / "rearrange" / "data" / "seed"

WS = Workspace(640, 480, Calibration(px_per_meter=1000.0, origin_world=(0.0, 0.0), table_height=0.75))


def obj(oid, category, cx, cy, w, h, theta=0.0, movable=True, stacked_on=None):
    return ObjectRecord(oid, category, OrientedBox(cx, cy, w, h, theta), movable, stacked_on)


FIXTURES = {
    "scene1": [
        obj("plate_0", "plate", 320, 240, 120, 120),
        obj("eggplant_0", "eggplant", 150, 240, 60, 30),
    ],
    "scene2": [
        obj("plate_0", "plate", 320, 240, 120, 120),
        obj("potato_0", "potato", 150, 150, 70, 45),
        obj("potato_1", "potato", 150, 330, 70, 45),
    ],
    "scene3": [
        obj("plate_0", "plate", 320, 240, 120, 120),
        obj("eggplant_0", "eggplant", 150, 240, 60, 30),
        obj("carrot_0", "carrot", 320, 100, 90, 25),
        obj("potato_0", "potato", 480, 150, 70, 45),
        obj("pineapple_0", "pineapple", 480, 330, 90, 60),
    ],
}

# 8 two-object arrangements + 2 with more than two objects.
SEEDS = [
    (
        "seed-01",
        "put the apple on the plate",
        [
            obj("plate_0", "plate", 320, 240, 120, 120),
            obj("apple_0", "apple", 320, 240, 50, 50, stacked_on="plate_0"),
        ],
    ),
    (
        "seed-02",
        "put the banana beside the bowl",
        [
            obj("bowl_0", "bowl", 320, 240, 110, 110),
            obj("banana_0", "banana", 440, 240, 90, 35),
        ],
    ),
    (
        "seed-03",
        "put the orange in the bowl",
        [
            obj("bowl_0", "bowl", 320, 240, 110, 110),
            obj("orange_0", "orange", 320, 240, 48, 48, stacked_on="bowl_0"),
        ],
    ),
    (
        "seed-04",
        "put the cup behind the plate",
        [
            obj("plate_0", "plate", 320, 280, 120, 120),
            obj("cup_0", "cup", 320, 130, 55, 55),
        ],
    ),
    (
        "seed-05",
        "put the carrot to the left of the plate",
        [
            obj("plate_0", "plate", 360, 240, 120, 120),
            obj("carrot_0", "carrot", 235, 240, 90, 25),
        ],
    ),
    (
        "seed-06",
        "put the tomato to the right of the bowl",
        [
            obj("bowl_0", "bowl", 280, 240, 110, 110),
            obj("tomato_0", "tomato", 381, 240, 52, 52),
        ],
    ),
    (
        "seed-07",
        "put the lemon far away from the plate",
        [
            obj("plate_0", "plate", 180, 160, 120, 120),
            obj("lemon_0", "lemon", 560, 420, 45, 45),
        ],
    ),
    (
        "seed-08",
        "put the pear in front of the plate",
        [
            obj("plate_0", "plate", 320, 200, 120, 120),
            obj("pear_0", "pear", 320, 307.5, 50, 55),
        ],
    ),
    (
        "seed-09",
        "put the potatoes together",
        [
            obj("plate_0", "plate", 150, 150, 120, 120),
            obj("potato_0", "potato", 300, 240, 70, 45),
            obj("potato_1", "potato", 380, 240, 70, 45),
        ],
    ),
    (
        "seed-10",
        "put the apple and the banana on the plate",
        [
            obj("plate_0", "plate", 320, 240, 140, 140),
            obj("apple_0", "apple", 320, 210, 50, 50, stacked_on="plate_0"),
            obj("banana_0", "banana", 320, 275, 90, 35, stacked_on="plate_0"),
        ],
    ),
]


def main():
    SCENES.mkdir(parents=True, exist_ok=True)
    SEED.mkdir(parents=True, exist_ok=True)
    for name, objects in FIXTURES.items():
        scene = Scene(WS, tuple(objects))
        validate_scene(scene)
        (SCENES / f"{name}.json").write_bytes(save_scene(scene))
        print(f"wrote {name} ({len(objects)} objects)")

    order = []
    for idx, (seed_id, instruction, objects) in enumerate(SEEDS, start=1):
        scene = Scene(WS, tuple(objects))
        validate_scene(scene)
        doc = {
            "id": seed_id,
            "instruction": instruction,
            "workspace": json.loads(save_scene(scene))["workspace"],
            "objects": json.loads(save_scene(scene))["objects"],
            "created_at": f"2025-11-03T10:{idx:02d}:00+00:00",
            "source": "human",
        }
        (SEED / f"{seed_id}.experience").write_text(json.dumps(doc, indent=2) + "\n", "utf-8")
        order.append(seed_id)
        print(f"wrote {seed_id}: {instruction}")
    (SEED / "manifest.json").write_text(json.dumps({"order": order}, indent=2) + "\n", "utf-8")
    print(f"manifest with {len(order)} entries")


if __name__ == "__main__":
    main()
