import { describe, expect, it } from "vitest";

import { cornerMismatch, cornersOf, projectWaypoint } from "../src/geometry.js";
import { SceneRenderer } from "../src/render.js";
import type { Draw2D } from "../src/render.js";
import { sceneFixture } from "./mockService.js";

class RecordingContext implements Draw2D {
  ops: string[] = [];
  fillStyle: string | CanvasGradient | CanvasPattern = "#000";
  strokeStyle: string | CanvasGradient | CanvasPattern = "#000";
  lineWidth = 1;
  font = "";
  globalAlpha = 1;

  clearRect(): void {
    this.ops.push("clear");
  }
  beginPath(): void {
    this.ops.push("begin");
  }
  moveTo(x: number, y: number): void {
    this.ops.push(`move ${x.toFixed(1)},${y.toFixed(1)}`);
  }
  lineTo(): void {
    this.ops.push("line");
  }
  closePath(): void {
    this.ops.push("close");
  }
  fill(): void {
    this.ops.push("fill");
  }
  stroke(): void {
    this.ops.push("stroke");
  }
  fillText(text: string): void {
    this.ops.push(`text ${text}`);
  }
  setLineDash(segments: number[]): void {
    this.ops.push(`dash ${segments.join(",")}`);
  }
}

describe("corner formula", () => {
  it("matches the axis-aligned cases", () => {
    expect(cornersOf({ cx: 0, cy: 0, w: 2, h: 2, theta: 0 })).toEqual([
      [1, 1],
      [-1, 1],
      [-1, -1],
      [1, -1],
    ]);
    expect(cornersOf({ cx: 5, cy: 5, w: 4, h: 2, theta: 0 })).toEqual([
      [7, 6],
      [3, 6],
      [3, 4],
      [7, 4],
    ]);
  });

  it("matches the rotated square case", () => {
    const r2 = Math.SQRT2;
    const pts = cornersOf({ cx: 0, cy: 0, w: 2, h: 2, theta: Math.PI / 4 });
    const expected = [
      [0, r2],
      [-r2, 0],
      [0, -r2],
      [r2, 0],
    ];
    pts.forEach(([x, y], i) => {
      expect(x).toBeCloseTo(expected[i][0], 9);
      expect(y).toBeCloseTo(expected[i][1], 9);
    });
  });

  it("agrees with the corners the service reports", () => {
    const scene = sceneFixture();
    for (const obj of scene.objects) {
      const server = scene.corners![obj.id];
      expect(cornerMismatch(obj.box, server)).toBeLessThan(1e-6);
    }
  });
});

describe("waypoint projection", () => {
  it("inverts the service's pixel-to-world map", () => {
    const ws = sceneFixture().workspace;
    const [x, y] = projectWaypoint(ws, { name: "pick", x_m: 0.15, y_m: 0.24, z_m: 0.75, yaw: 0 });
    expect(x).toBeCloseTo(150, 9);
    expect(y).toBeCloseTo(240, 9);
  });
});

describe("scene renderer", () => {
  it("draws one filled polygon per object and dashed ghosts only when pending", () => {
    const ctx = new RecordingContext();
    const renderer = new SceneRenderer(ctx);
    const scene = sceneFixture();

    renderer.render(scene, new Map());
    const fills = ctx.ops.filter((op) => op === "fill").length;
    expect(fills).toBe(scene.objects.length);
    expect(ctx.ops.filter((op) => op === "dash 6,4").length).toBe(0);

    ctx.ops = [];
    const ghosts = new Map([["eggplant_0", { x: 430, y: 240, rotation: 0, repaired: false }]]);
    renderer.render(scene, ghosts);
    expect(ctx.ops.filter((op) => op === "fill").length).toBe(scene.objects.length + 1);
    expect(ctx.ops.filter((op) => op === "dash 6,4").length).toBe(1);
  });

  it("debug overlay strokes the server corner sets", () => {
    const ctx = new RecordingContext();
    const renderer = new SceneRenderer(ctx);
    const scene = sceneFixture();
    renderer.render(scene, new Map(), true);
    expect(ctx.ops.filter((op) => op === "dash 2,3").length).toBe(1);
    // two extra strokes for the two server corner polygons
    const strokes = ctx.ops.filter((op) => op === "stroke").length;
    expect(strokes).toBe(scene.objects.length + 2);
  });

  it("projects motion paths at canvas scale", () => {
    const ctx = new RecordingContext();
    const renderer = new SceneRenderer(ctx);
    const scene = sceneFixture();
    const paths = renderer.motionPaths(scene, [
      {
        step: 0,
        object: "eggplant_0",
        from: { x: 150, y: 240, rotation: 0 },
        to: { x: 430, y: 240, rotation: 0 },
        waypoints: [
          { name: "pick-hover", x_m: 0.15, y_m: 0.24, z_m: 0.9, yaw: 0 },
          { name: "place", x_m: 0.43, y_m: 0.24, z_m: 0.75, yaw: 0 },
        ],
        repaired: false,
      },
    ]);
    expect(paths).toEqual([
      [
        [150, 240],
        [430, 240],
      ],
    ]);
  });
});
