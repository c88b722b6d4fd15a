/** DOM bootstrap: wires the store to the canvas and the control panel. */

import { ServiceClient } from "./api.js";
import { SceneRenderer } from "./render.js";
import { ConsoleStore } from "./store.js";
import type { ConsoleState } from "./store.js";
import type { MoveLog, SceneDoc } from "./types.js";

const METHOD_LABELS: Record<string, string> = {
  with_reference: "ours (with reference)",
  without_reference: "ours (no reference)",
  random: "random baseline",
  geometric: "geometric baseline",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function animateMoves(
  renderer: SceneRenderer,
  ctx: CanvasRenderingContext2D,
  scene: SceneDoc,
  moves: MoveLog[],
  done: () => void,
): void {
  const paths = renderer.motionPaths(scene, moves);
  if (paths.length === 0) {
    done();
    return;
  }
  const start = performance.now();
  const duration = 650;
  const tick = (now: number) => {
    const t = Math.min(1, (now - start) / duration);
    renderer.render(scene, new Map());
    ctx.save();
    ctx.strokeStyle = "#1864ab";
    ctx.lineWidth = 2;
    ctx.setLineDash([4, 4]);
    for (const path of paths) {
      const upto = Math.max(2, Math.ceil(path.length * t));
      ctx.beginPath();
      ctx.moveTo(path[0][0], path[0][1]);
      for (const [x, y] of path.slice(1, upto)) ctx.lineTo(x, y);
      ctx.stroke();
    }
    ctx.restore();
    if (t < 1) {
      requestAnimationFrame(tick);
    } else {
      done();
    }
  };
  requestAnimationFrame(tick);
}

function main(): void {
  const api = new ServiceClient("");
  const store = new ConsoleStore(api);

  const canvas = el<HTMLCanvasElement>("scene-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const renderer = new SceneRenderer(ctx);

  const instructionInput = el<HTMLInputElement>("instruction-input");
  const submitBtn = el<HTMLButtonElement>("submit-btn");
  const applyBtn = el<HTMLButtonElement>("apply-btn");
  const rejectBtn = el<HTMLButtonElement>("reject-btn");
  const saveBtn = el<HTMLButtonElement>("save-btn");
  const methodSelect = el<HTMLSelectElement>("method-select");
  const resetSelect = el<HTMLSelectElement>("reset-select");
  const debugToggle = el<HTMLInputElement>("debug-toggle");
  const banner = el<HTMLDivElement>("error-banner");
  const bannerText = el<HTMLSpanElement>("error-text");
  const bannerDismiss = el<HTMLButtonElement>("error-dismiss");
  const stepsList = el<HTMLOListElement>("steps-list");
  const referenceCard = el<HTMLDivElement>("reference-card");
  const experienceList = el<HTMLUListElement>("experience-list");
  const statusLine = el<HTMLDivElement>("status-line");

  let animating = false;

  function render(state: ConsoleState): void {
    if (state.scene) {
      canvas.width = state.scene.workspace.width_px;
      canvas.height = state.scene.workspace.height_px;
      if (!animating) {
        renderer.render(state.scene, store.ghostPlacements(), state.debugOverlay);
      }
    }

    const pending = state.proposal !== null;
    submitBtn.disabled = state.busy;
    applyBtn.disabled = state.busy || !pending;
    rejectBtn.disabled = state.busy || !pending;
    saveBtn.disabled = state.busy || state.lastApplied === null;
    methodSelect.disabled = state.busy;
    resetSelect.disabled = state.busy;

    banner.hidden = state.error === null;
    bannerText.textContent = state.error ?? "";

    stepsList.replaceChildren(
      ...(state.proposal?.steps ?? []).map((step, i) => {
        const li = document.createElement("li");
        li.textContent = step;
        const repaired = state.proposal?.placements[i]?.some((p) => p.repaired);
        if (repaired) {
          const mark = document.createElement("em");
          mark.textContent = " (repaired)";
          li.appendChild(mark);
        }
        return li;
      }),
    );

    if (state.proposal?.reference) {
      referenceCard.hidden = false;
      referenceCard.innerHTML =
        `<strong>reference</strong> ${state.proposal.reference.id}` +
        ` (score ${state.proposal.reference.score ?? "?"})<br>` +
        `<q></q>`;
      referenceCard.querySelector("q")!.textContent = state.proposal.reference.instruction;
    } else {
      referenceCard.hidden = true;
    }

    experienceList.replaceChildren(
      ...state.experiences.map((exp) => {
        const li = document.createElement("li");
        li.textContent = `${exp.instruction} — ${exp.source}`;
        li.title = `${exp.id} (${exp.created_at})`;
        return li;
      }),
    );

    if (state.config && methodSelect.options.length === 0) {
      for (const mode of state.config.modes) {
        const opt = document.createElement("option");
        opt.value = mode;
        opt.textContent = METHOD_LABELS[mode] ?? mode;
        methodSelect.appendChild(opt);
      }
      methodSelect.value = state.method;
      for (const fixture of state.config.fixtures) {
        const opt = document.createElement("option");
        opt.value = fixture;
        opt.textContent = fixture;
        resetSelect.appendChild(opt);
      }
    }

    statusLine.textContent = state.busy
      ? "working…"
      : pending
        ? "proposal pending — apply or reject"
        : "idle";
  }

  store.subscribe(render);

  submitBtn.addEventListener("click", () => {
    void store.submitInstruction(instructionInput.value);
  });
  instructionInput.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") void store.submitInstruction(instructionInput.value);
  });
  applyBtn.addEventListener("click", async () => {
    const sceneBefore = store.state.scene;
    const result = await store.apply();
    if (result && sceneBefore) {
      const moves = result.log.steps.flatMap((s) => s.moves);
      animating = true;
      animateMoves(renderer, ctx, sceneBefore, moves, () => {
        animating = false;
        render(store.state);
      });
    }
  });
  rejectBtn.addEventListener("click", () => void store.reject());
  saveBtn.addEventListener("click", () => void store.saveAsExperience());
  methodSelect.addEventListener("change", () => store.setMethod(methodSelect.value));
  resetSelect.addEventListener("change", () => {
    if (resetSelect.value) void store.resetScene(resetSelect.value);
  });
  debugToggle.addEventListener("change", () => store.toggleDebugOverlay());
  bannerDismiss.addEventListener("click", () => store.dismissError());

  void store.refresh();
}

main();
