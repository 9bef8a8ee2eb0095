/**
 * Scene store: a pure reducer over the outbound message stream plus local
 * interaction events. Replaying the same stream with the same timestamps
 * reconstructs the identical state.
 */

import {
  CuePayload,
  ErrorPayload,
  OutboundMessage,
  PlanProposalPayload,
  PROTOCOL_VERSION,
  QuestionPayload,
  SceneObject,
  SceneZone,
  WorldUpdatePayload,
  parseFact,
} from "./protocol.js";
import { ConnectionStatus } from "./transport.js";

export interface Overlay {
  kind: CuePayload["kind"];
  seq: number;
  receivedAt: number;
  /** labels/particles/speech expire; highlights and holograms persist */
  transient: boolean;
  payload: CuePayload;
}

export interface ActiveQuestion {
  id: string;
  text: string;
  highlight: string[];
  seq: number;
}

export const TRANSIENT_TTL_MS = 1500;
const HAND_POSITION: [number, number] = [-0.5, -0.5];
const STACK_OFFSET = 0.06;

type LocationIndex = Map<string, { predicate: string; other: string }>;

export class SceneStore {
  connection: ConnectionStatus = "idle";
  versionChecked = false;
  objects = new Map<string, SceneObject>();
  zones = new Map<string, [number, number]>();
  facts = new Set<string>();
  poses = new Map<string, [number, number]>();
  overlays: Overlay[] = [];
  question: ActiveQuestion | null = null;
  proposal: PlanProposalPayload | null = null;
  errors: ErrorPayload[] = [];
  lastSeq = -1;
  private locations: LocationIndex = new Map();

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
    if (status !== "connected") this.versionChecked = false;
  }

  /** Fold one engine message into the state. `at` is the arrival time. */
  apply(message: OutboundMessage, at: number): void {
    if (!this.versionChecked) {
      if (message.v !== PROTOCOL_VERSION) {
        this.connection = "version-mismatch";
        return;
      }
      this.versionChecked = true;
    }
    this.lastSeq = message.seq;
    switch (message.type) {
      case "world_update":
        this.applyWorldUpdate(message.payload as WorldUpdatePayload, message.seq);
        break;
      case "cue":
        this.applyCue(message.payload as CuePayload, message.seq, at);
        break;
      case "question": {
        const q = message.payload as QuestionPayload;
        this.question = { ...q, seq: message.seq };
        break;
      }
      case "plan_proposal":
        this.proposal = message.payload as PlanProposalPayload;
        break;
      case "error":
        this.errors.push(message.payload as ErrorPayload);
        break;
    }
  }

  private applyWorldUpdate(payload: WorldUpdatePayload, seq: number): void {
    if (payload.scene) {
      this.objects = new Map(payload.scene.objects.map((o) => [o.id, o]));
      this.zones = new Map(payload.scene.zones.map((z) => [z.id, z.pos]));
      this.facts = new Set();
      this.poses = new Map(
        payload.scene.objects
          .filter((o) => o.pose !== null)
          .map((o) => [o.id, o.pose as [number, number]])
      );
    }
    for (const fact of payload.removed) this.facts.delete(fact);
    for (const fact of payload.added) this.facts.add(fact);
    if (payload.poses) {
      for (const [id, pose] of Object.entries(payload.poses)) {
        this.poses.set(id, pose);
      }
    }
    if (payload.intervention !== undefined) {
      // the announced relocation happened: retire its hologram
      this.overlays = this.overlays.filter(
        (o) => !(o.kind === "hologram" && o.payload.object === payload.intervention)
      );
    }
    this.reindex();
  }

  private applyCue(payload: CuePayload, seq: number, at: number): void {
    const transient = ["object_label", "action_label", "particles", "speech"].includes(
      payload.kind
    );
    this.overlays.push({ kind: payload.kind, seq, receivedAt: at, transient, payload });
  }

  private reindex(): void {
    this.locations = new Map();
    for (const text of this.facts) {
      const fact = parseFact(text);
      const a0 = fact.args[0];
      const a1 = fact.args[1];
      if ((fact.predicate === "at" || fact.predicate === "in") && a0 && a1) {
        this.locations.set(a0, { predicate: fact.predicate, other: a1 });
      } else if (fact.predicate === "holding" && a0 && a1) {
        this.locations.set(a1, { predicate: "holding", other: a0 });
      }
    }
  }

  /** Local interaction: the user answered the pending question. */
  dismissQuestion(): void {
    this.question = null;
    // question highlights are dismissed with the dialog
    this.overlays = this.overlays.filter((o) => o.kind !== "highlight");
  }

  /** Local interaction: plan playback finished (approved or replaced). */
  clearProposal(): void {
    this.proposal = null;
  }

  /** Overlays still visible at `now`. */
  activeOverlays(now: number): Overlay[] {
    return this.overlays.filter(
      (o) => !o.transient || now - o.receivedAt <= TRANSIENT_TTL_MS
    );
  }

  heldBy(id: string): string | null {
    const loc = this.locations.get(id);
    return loc && loc.predicate === "holding" ? loc.other : null;
  }

  containerOf(id: string): string | null {
    const loc = this.locations.get(id);
    return loc && loc.predicate === "in" ? loc.other : null;
  }

  zoneOf(id: string): string | null {
    const loc = this.locations.get(id);
    return loc && loc.predicate === "at" ? loc.other : null;
  }

  contentsOf(id: string): string[] {
    const out: string[] = [];
    for (const [oid, loc] of this.locations) {
      if (loc.predicate === "in" && loc.other === id) out.push(oid);
    }
    return out.sort();
  }

  /**
   * Deterministic sprite position: explicit pose, else the containment
   * chain's anchor (zone or holder), stacking contents with a small offset.
   */
  positionOf(id: string, depth = 0): [number, number] | null {
    if (depth > this.objects.size) return null;
    const pose = this.poses.get(id);
    if (pose) return pose;
    const loc = this.locations.get(id);
    if (!loc) return null;
    if (loc.predicate === "at") return this.zones.get(loc.other) ?? null;
    if (loc.predicate === "holding") return HAND_POSITION;
    const base = this.positionOf(loc.other, depth + 1);
    if (!base) return null;
    const index = this.contentsOf(loc.other).indexOf(id);
    return [base[0], base[1] + STACK_OFFSET * (index + 1)];
  }
}
