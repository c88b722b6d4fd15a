/** Wire types mirroring the control service's JSON responses. */

export interface BoxDoc {
  cx: number;
  cy: number;
  w: number;
  h: number;
  theta: number;
}

export interface ObjectDoc {
  id: string;
  category: string;
  box: BoxDoc;
  movable: boolean;
  stacked_on?: string | null;
}

export interface WorkspaceDoc {
  width_px: number;
  height_px: number;
  px_per_meter: number;
  origin_world: [number, number];
  table_height_m: number;
}

export interface SceneDoc {
  workspace: WorkspaceDoc;
  objects: ObjectDoc[];
  /** Server-derived corner coordinates, used by the debug overlay cross-check. */
  corners?: Record<string, [number, number][]>;
}

export interface PlacementDoc {
  object_id: string;
  x: number;
  y: number;
  rotation: number;
  stacked_on: string | null;
  repaired: boolean;
}

export interface ReferenceCard {
  id: string;
  instruction: string;
  score: number | null;
}

export interface WaypointDoc {
  name: string;
  x_m: number;
  y_m: number;
  z_m: number;
  yaw: number;
}

export interface MoveLog {
  step: number;
  object: string;
  from: { x: number; y: number; rotation: number };
  to: { x: number; y: number; rotation: number };
  waypoints: WaypointDoc[];
  repaired: boolean;
}

export interface StepLog {
  index: number;
  instruction: string;
  moves: MoveLog[];
  scene_after: SceneDoc;
}

export interface Proposal {
  instruction: string;
  mode: string;
  steps: string[];
  placements: PlacementDoc[][];
  reference: ReferenceCard | null;
  log: { steps: StepLog[] };
}

export interface ApplyResult {
  log: { steps: StepLog[] };
  scene: SceneDoc;
}

export interface ExperienceEntry {
  id: string;
  instruction: string;
  created_at: string;
  source: string;
}

export interface ServiceConfigDoc {
  backend: string;
  mode: string;
  gap_px: number;
  seed: number;
  modes: string[];
  methods: string[];
  fixtures: string[];
}

export interface ServiceError {
  status: number;
  stage?: string;
  message: string;
}
