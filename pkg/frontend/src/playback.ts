/**
 * Plan playback: a ghost avatar walks the proposed steps; the user approves
 * or rejects a step. Ghost sprites never touch the live scene layer.
 */

import { InboundMessage, PlanProposalPayload, parseFact } from "./protocol.js";
import { SceneStore } from "./store.js";

export interface PlaybackView {
  proposal: PlanProposalPayload;
  /** index of the step currently previewed; -1 before the first "next" */
  currentStep: number;
  finished: boolean;
}

export function startPlayback(proposal: PlanProposalPayload): PlaybackView {
  return { proposal, currentStep: -1, finished: proposal.steps.length === 0 };
}

/** Advance the ghost avatar one step. */
export function next(view: PlaybackView): PlaybackView {
  const last = view.proposal.steps.length - 1;
  const currentStep = Math.min(view.currentStep + 1, last);
  return { ...view, currentStep, finished: currentStep >= last };
}

export function approve(view: PlaybackView): InboundMessage {
  return { type: "plan_feedback", feedback: "approve" };
}

export function reject(view: PlaybackView, step?: number): InboundMessage {
  const index = step ?? Math.max(view.currentStep, 0);
  return { type: "plan_feedback", feedback: "reject", step: index };
}

export interface GhostSprite {
  id: string;
  x: number;
  y: number;
}

/**
 * Ghost positions after the previewed steps: for every object whose location
 * changes in steps [0..currentStep], a translucent twin at its future place.
 */
export function ghostPositions(store: SceneStore, view: PlaybackView): GhostSprite[] {
  const future = new Map<string, string>(); // object -> "at zone" | "in container"
  for (let i = 0; i <= view.currentStep && i < view.proposal.steps.length; i++) {
    const step = view.proposal.steps[i];
    if (!step) continue;
    for (const text of step.added ?? []) {
      const fact = parseFact(text);
      const a0 = fact.args[0];
      const a1 = fact.args[1];
      if ((fact.predicate === "at" || fact.predicate === "in") && a0 && a1) {
        future.set(a0, a1);
      }
    }
  }
  const ghosts: GhostSprite[] = [];
  for (const [id, anchor] of [...future.entries()].sort()) {
    const zone = store.zones.get(anchor);
    const pos = zone ?? store.positionOf(anchor);
    if (!pos) continue;
    ghosts.push({ id, x: pos[0], y: pos[1] });
  }
  return ghosts;
}
