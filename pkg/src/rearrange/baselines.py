"""Heuristic comparison methods: seeded random placement and a horizontal-row layout."""

from typing import List, Sequence

import numpy as np

from .errors import RearrangeError
from .scene import Placement, Scene, apply_move, check_pose

MAX_RANDOM_ATTEMPTS = 10_000
DEFAULT_GAP_PX = 40.0


def random_placement(scene: Scene, relevant_ids: Sequence[str], seed) -> List[Placement]:
    """Uniform collision-free poses for the relevant objects, reproducible per seed.

    Objects are placed sequentially; each draw is rejected until it clears
    the current state (already-placed objects at their new poses, the rest
    at their old ones). Rotations are kept.
    """
    rng = np.random.default_rng(seed)
    work = scene
    placements: List[Placement] = []
    for object_id in relevant_ids:
        obj = work.get(object_id)
        if not obj.movable:
            raise RearrangeError(f"object {object_id!r} is not movable")
        margin = obj.box.half_diagonal
        w, h = scene.workspace.width_px, scene.workspace.height_px
        if 2 * margin > w or 2 * margin > h:
            raise RearrangeError(f"object {object_id!r} cannot fit the workspace at any pose")
        placed = None
        for _ in range(MAX_RANDOM_ATTEMPTS):
            x = rng.uniform(margin, w - margin)
            y = rng.uniform(margin, h - margin)
            probe = check_pose(work, object_id, obj.box.moved(x, y), stacked_on=None)
            if probe.ok:
                placed = Placement(object_id, x, y, obj.box.theta)
                break
        if placed is None:
            raise RearrangeError(
                f"rejection sampling exhausted after {MAX_RANDOM_ATTEMPTS} attempts for {object_id!r}"
            )
        placements.append(placed)
        work = apply_move(work, object_id, placed)
    return placements


def geometric_placement(
    scene: Scene, relevant_ids: Sequence[str], gap_px: float = DEFAULT_GAP_PX
) -> List[Placement]:
    """Relevant objects on the horizontal center line, adjacent extents gap_px apart.

    Objects keep their scene order left to right, rotations are zeroed so the
    row is axis-aligned, and the whole group is horizontally centered.
    """
    if not relevant_ids:
        raise RearrangeError("geometric layout needs at least one object")
    objects = [scene.get(oid) for oid in relevant_ids]
    widths = [o.box.w for o in objects]
    total = sum(widths) + gap_px * (len(objects) - 1)
    w, h = scene.workspace.width_px, scene.workspace.height_px
    if total > w:
        raise RearrangeError(f"row width {total:.1f} px exceeds the {w} px workspace")
    x = (w - total) / 2.0
    y = h / 2.0
    placements = []
    for obj, width in zip(objects, widths):
        placements.append(Placement(obj.id, x + width / 2.0, y, 0.0))
        x += width + gap_px
    return placements
