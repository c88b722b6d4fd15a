/** Console state and the workflows against the service.
 *
 * Strictly a thin client: every pose in the state came out of a service
 * response. Mutating calls are serialized through a busy flag, and a failed
 * call never touches local state beyond the error banner.
 */

import { ApiError, ServiceClient } from "./api.js";
import type {
  ApplyResult,
  ExperienceEntry,
  Proposal,
  SceneDoc,
  ServiceConfigDoc,
} from "./types.js";

export interface ConsoleState {
  scene: SceneDoc | null;
  proposal: Proposal | null;
  experiences: ExperienceEntry[];
  config: ServiceConfigDoc | null;
  method: string;
  busy: boolean;
  error: string | null;
  /** Instruction of the last applied proposal, offered for "save as experience". */
  lastApplied: string | null;
  debugOverlay: boolean;
}

type Listener = (state: ConsoleState) => void;

export class ConsoleStore {
  private api: ServiceClient;
  private listeners: Listener[] = [];

  state: ConsoleState = {
    scene: null,
    proposal: null,
    experiences: [],
    config: null,
    method: "with_reference",
    busy: false,
    error: null,
    lastApplied: null,
    debugOverlay: false,
  };

  constructor(api: ServiceClient) {
    this.api = api;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private update(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  private fail(err: unknown): void {
    const message =
      err instanceof ApiError && err.stage
        ? `${err.stage}: ${err.message}`
        : err instanceof Error
          ? err.message
          : String(err);
    this.update({ busy: false, error: message });
  }

  dismissError(): void {
    this.update({ error: null });
  }

  setMethod(method: string): void {
    this.update({ method });
  }

  toggleDebugOverlay(): void {
    this.update({ debugOverlay: !this.state.debugOverlay });
  }

  /** Load scene, experiences, and config; used at startup and after mutations. */
  async refresh(): Promise<void> {
    try {
      const [scene, experiences, config] = await Promise.all([
        this.api.getScene(),
        this.api.getExperiences(),
        this.api.getConfig(),
      ]);
      this.update({ scene, experiences, config });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Ask for a proposal; ghosts appear, the scene itself is untouched. */
  async submitInstruction(text: string): Promise<void> {
    if (this.state.busy || !text.trim()) return;
    this.update({ busy: true, error: null });
    try {
      const proposal = await this.api.propose(text, this.state.method);
      this.update({ busy: false, proposal });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Commit the pending proposal, then poll the scene back from the service. */
  async apply(): Promise<ApplyResult | null> {
    if (this.state.busy || !this.state.proposal) return null;
    const instruction = this.state.proposal.instruction;
    this.update({ busy: true, error: null });
    try {
      const result = await this.api.apply();
      const scene = await this.api.getScene();
      this.update({ busy: false, proposal: null, scene, lastApplied: instruction });
      return result;
    } catch (err) {
      this.fail(err);
      return null;
    }
  }

  async reject(): Promise<void> {
    if (this.state.busy || !this.state.proposal) return;
    this.update({ busy: true, error: null });
    try {
      await this.api.reject();
      this.update({ busy: false, proposal: null });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Store the current arrangement under the executed instruction. */
  async saveAsExperience(instruction?: string): Promise<void> {
    const text = instruction ?? this.state.lastApplied;
    if (this.state.busy || !text) return;
    this.update({ busy: true, error: null });
    try {
      await this.api.acceptExperience(text);
      const experiences = await this.api.getExperiences();
      this.update({ busy: false, experiences });
    } catch (err) {
      this.fail(err);
    }
  }

  async resetScene(fixture: string): Promise<void> {
    if (this.state.busy) return;
    this.update({ busy: true, error: null });
    try {
      await this.api.reset(fixture);
      const scene = await this.api.getScene();
      this.update({ busy: false, scene, proposal: null, lastApplied: null });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Final predicted pose per object across the proposal's steps. */
  ghostPlacements(): Map<string, { x: number; y: number; rotation: number; repaired: boolean }> {
    const ghosts = new Map();
    if (!this.state.proposal) return ghosts;
    for (const step of this.state.proposal.placements) {
      for (const p of step) {
        ghosts.set(p.object_id, { x: p.x, y: p.y, rotation: p.rotation, repaired: p.repaired });
      }
    }
    return ghosts;
  }
}
