/** Top-down canvas rendering: solid boxes for the scene, dashed ghosts for
 * the pending proposal, and an optional debug overlay tracing the corners
 * the service computed so formula drift would show up on screen.
 */

import { cornersOf, projectWaypoint } from "./geometry.js";
import type { BoxDoc, MoveLog, ObjectDoc, SceneDoc } from "./types.js";

/** The subset of CanvasRenderingContext2D the renderer needs (fakeable in tests). */
export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
}

const CATEGORY_COLORS: Record<string, string> = {
  plate: "#cfd6dd",
  eggplant: "#7b4b94",
  potato: "#c9a227",
  carrot: "#e0701a",
  pineapple: "#b8b42d",
  apple: "#c92a2a",
  banana: "#e6c229",
  bowl: "#9db4c0",
  cup: "#5c7a99",
};

function colorFor(category: string): string {
  return CATEGORY_COLORS[category] ?? "#888f98";
}

function tracePolygon(ctx: Draw2D, pts: [number, number][], zoom: number): void {
  ctx.beginPath();
  ctx.moveTo(pts[0][0] * zoom, pts[0][1] * zoom);
  for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i][0] * zoom, pts[i][1] * zoom);
  ctx.closePath();
}

export interface GhostPose {
  x: number;
  y: number;
  rotation: number;
  repaired: boolean;
}

export class SceneRenderer {
  /** Workspace pixels map 1:1 to canvas units at zoom 1.0. */
  zoom = 1.0;

  constructor(private ctx: Draw2D) {}

  render(scene: SceneDoc, ghosts: Map<string, GhostPose>, debugOverlay = false): void {
    const { width_px, height_px } = scene.workspace;
    this.ctx.clearRect(0, 0, width_px * this.zoom, height_px * this.zoom);
    this.ctx.setLineDash([]);
    for (const obj of scene.objects) {
      this.drawObject(obj);
    }
    for (const [objectId, pose] of ghosts) {
      const obj = scene.objects.find((o) => o.id === objectId);
      if (obj) this.drawGhost(obj, pose);
    }
    if (debugOverlay && scene.corners) {
      this.drawServerCorners(scene);
    }
  }

  private drawObject(obj: ObjectDoc): void {
    const pts = cornersOf(obj.box);
    this.ctx.globalAlpha = 1.0;
    this.ctx.fillStyle = colorFor(obj.category);
    this.ctx.strokeStyle = obj.movable ? "#2b2f36" : "#6b7280";
    this.ctx.lineWidth = 1.5;
    tracePolygon(this.ctx, pts, this.zoom);
    this.ctx.fill();
    this.ctx.stroke();
    this.ctx.fillStyle = "#1c1e22";
    this.ctx.font = "12px system-ui, sans-serif";
    this.ctx.fillText(obj.id, obj.box.cx * this.zoom + 4, obj.box.cy * this.zoom - 4);
  }

  private drawGhost(obj: ObjectDoc, pose: GhostPose): void {
    const ghostBox: BoxDoc = { ...obj.box, cx: pose.x, cy: pose.y, theta: pose.rotation };
    const pts = cornersOf(ghostBox);
    this.ctx.globalAlpha = 0.45;
    this.ctx.fillStyle = colorFor(obj.category);
    this.ctx.strokeStyle = pose.repaired ? "#d9480f" : "#1864ab";
    this.ctx.lineWidth = 2;
    this.ctx.setLineDash([6, 4]);
    tracePolygon(this.ctx, pts, this.zoom);
    this.ctx.fill();
    this.ctx.stroke();
    this.ctx.setLineDash([]);
    this.ctx.globalAlpha = 1.0;
  }

  private drawServerCorners(scene: SceneDoc): void {
    this.ctx.globalAlpha = 1.0;
    this.ctx.strokeStyle = "#e8590c";
    this.ctx.lineWidth = 1;
    this.ctx.setLineDash([2, 3]);
    for (const pts of Object.values(scene.corners ?? {})) {
      tracePolygon(this.ctx, pts, this.zoom);
      this.ctx.stroke();
    }
    this.ctx.setLineDash([]);
  }

  /** Polyline of each move's waypoints, projected to canvas coordinates. */
  motionPaths(scene: SceneDoc, moves: MoveLog[]): [number, number][][] {
    return moves.map((move) =>
      move.waypoints.map((wp) => {
        const [x, y] = projectWaypoint(scene.workspace, wp);
        return [x * this.zoom, y * this.zoom] as [number, number];
      }),
    );
  }
}
