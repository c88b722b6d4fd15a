/** Drawing-only box math.
 *
 * The console does no spatial reasoning: these helpers exist solely to
 * trace outlines on the canvas. The corner formula is the same one the
 * service uses, and the debug overlay draws the server-provided corners on
 * top so any divergence would be visible immediately.
 */

import type { BoxDoc, WaypointDoc, WorkspaceDoc } from "./types.js";

export type CornerList = [number, number][];

/** Four corners counter-clockwise from the local (+w/2, +h/2) corner. */
export function cornersOf(box: BoxDoc): CornerList {
  const c = Math.cos(box.theta);
  const s = Math.sin(box.theta);
  const hw = box.w / 2;
  const hh = box.h / 2;
  const local: [number, number][] = [
    [hw, hh],
    [-hw, hh],
    [-hw, -hh],
    [hw, -hh],
  ];
  return local.map(([dx, dy]) => [box.cx + dx * c - dy * s, box.cy + dx * s + dy * c]);
}

/** Project a world-frame waypoint back onto workspace pixels. */
export function projectWaypoint(ws: WorkspaceDoc, wp: WaypointDoc): [number, number] {
  return [
    (wp.x_m - ws.origin_world[0]) * ws.px_per_meter,
    (wp.y_m - ws.origin_world[1]) * ws.px_per_meter,
  ];
}

/** Largest deviation between our corner formula and a server-provided set. */
export function cornerMismatch(box: BoxDoc, serverCorners: CornerList): number {
  const ours = cornersOf(box);
  let worst = 0;
  for (let i = 0; i < 4; i++) {
    worst = Math.max(
      worst,
      Math.abs(ours[i][0] - serverCorners[i][0]),
      Math.abs(ours[i][1] - serverCorners[i][1]),
    );
  }
  return worst;
}
