/**
 * Wire protocol types and codec. Mirrors PROTOCOL.md: newline-delimited
 * JSON, version field on the first message in each direction.
 */

export const PROTOCOL_VERSION = 1;

export type ActionKind = "pick" | "place" | "open" | "close" | "press" | "pour";

export interface HandAction {
  kind: ActionKind;
  actor: string;
  args: string[];
}

export type InboundMessage =
  | { type: "gaze"; object: string }
  | { type: "hand_action"; action: HandAction }
  | { type: "speech"; text: string }
  | { type: "answer"; value: "yes" | "no" }
  | { type: "plan_feedback"; feedback: "approve" }
  | { type: "plan_feedback"; feedback: "reject"; step: number }
  | { type: "tick" };

export type CueKind =
  | "object_label"
  | "action_label"
  | "highlight"
  | "particles"
  | "avatar_step"
  | "hologram"
  | "speech";

export interface SceneObject {
  id: string;
  type: string;
  capacity: number;
  pose: [number, number] | null;
}

export interface SceneZone {
  id: string;
  pos: [number, number];
}

export interface WorldUpdatePayload {
  added: string[];
  removed: string[];
  poses?: Record<string, [number, number]>;
  scene?: { objects: SceneObject[]; zones: SceneZone[] };
  step?: number;
  name?: string;
  intervention?: string;
}

export interface CuePayload {
  kind: CueKind;
  object?: string;
  label?: string;
  action?: string;
  actor?: string;
  objects?: string[];
  color?: "green" | "red";
  index?: number;
  name?: string;
  origin?: string;
  pose?: [number, number];
  text?: string;
  cost_before?: number;
  cost_after?: number;
}

export interface QuestionPayload {
  id: string;
  text: string;
  highlight: string[];
}

export interface PlanStepDoc {
  index: number;
  origin: "learned-skill" | "primitive";
  name: string;
  args: string[];
  added?: string[];
  removed?: string[];
}

export interface PlanProposalPayload {
  goal: string[];
  status: string;
  steps: PlanStepDoc[];
  text: string;
}

export interface ErrorPayload {
  code: string;
  message: string;
}

export interface OutboundMessage {
  seq: number;
  type: "cue" | "world_update" | "question" | "plan_proposal" | "error";
  payload:
    | CuePayload
    | WorldUpdatePayload
    | QuestionPayload
    | PlanProposalPayload
    | ErrorPayload;
  v?: number;
}

/** Canonical one-line encoding: sorted keys, compact separators. */
export function encodeLine(message: Record<string, unknown>): string {
  const sortValue = (value: unknown): unknown => {
    if (Array.isArray(value)) return value.map(sortValue);
    if (value !== null && typeof value === "object") {
      const out: Record<string, unknown> = {};
      for (const key of Object.keys(value as Record<string, unknown>).sort()) {
        out[key] = sortValue((value as Record<string, unknown>)[key]);
      }
      return out;
    }
    return value;
  };
  return JSON.stringify(sortValue(message));
}

export function decodeLine(line: string): OutboundMessage {
  const parsed = JSON.parse(line) as unknown;
  if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed)) {
    throw new Error(`protocol: message must be an object: ${line}`);
  }
  const msg = parsed as Partial<OutboundMessage>;
  if (typeof msg.seq !== "number" || typeof msg.type !== "string") {
    throw new Error(`protocol: missing seq/type: ${line}`);
  }
  return msg as OutboundMessage;
}

/** Parse "pred(a, b)" into its parts. */
export function parseFact(text: string): { predicate: string; args: string[] } {
  const m = /^([\w-]+)\(([^()]*)\)$/.exec(text.trim());
  if (!m || m[1] === undefined) throw new Error(`bad fact: ${text}`);
  const body = (m[2] ?? "").trim();
  return {
    predicate: m[1],
    args: body ? body.split(",").map((a) => a.trim()) : [],
  };
}
