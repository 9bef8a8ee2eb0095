/**
 * Engine client: wires a transport to the scene store and exposes the
 * interaction surface (gestures, question dialog, plan playback).
 */

import {
  InboundMessage,
  OutboundMessage,
  PROTOCOL_VERSION,
  decodeLine,
  encodeLine,
} from "./protocol.js";
import { GestureRouter } from "./gestures.js";
import { PlaybackView, startPlayback } from "./playback.js";
import { SceneStore } from "./store.js";
import { Transport } from "./transport.js";

export interface ClientOptions {
  actor?: string;
  /** clock used to timestamp arrivals; injectable for deterministic tests */
  now?: () => number;
}

export class EngineClient {
  readonly store = new SceneStore();
  readonly gestures: GestureRouter;
  playback: PlaybackView | null = null;
  private sentAny = false;
  private readonly now: () => number;
  private listeners: Array<(msg: OutboundMessage) => void> = [];

  constructor(private readonly transport: Transport, options: ClientOptions = {}) {
    this.gestures = new GestureRouter(this.store, options.actor ?? "human");
    this.now = options.now ?? Date.now;
    transport.onStatus((status) => {
      if (this.store.connection !== "version-mismatch" || status !== "connected") {
        this.store.setConnection(status);
      }
      if (status === "connected") this.sentAny = false;
    });
    transport.onLine((line) => {
      const message = decodeLine(line);
      this.store.apply(message, this.now());
      if (message.type === "plan_proposal" && this.store.proposal) {
        this.playback = startPlayback(this.store.proposal);
      }
      for (const cb of this.listeners) cb(message);
    });
  }

  start(): void {
    this.transport.connect();
  }

  stop(): void {
    this.transport.close();
  }

  onMessage(cb: (msg: OutboundMessage) => void): void {
    this.listeners.push(cb);
  }

  /** Send one message; the first one carries the protocol version. */
  send(message: InboundMessage | null): void {
    if (message === null) return;
    const body: Record<string, unknown> = { ...message };
    if (!this.sentAny) {
      body["v"] = PROTOCOL_VERSION;
      this.sentAny = true;
    }
    this.transport.send(encodeLine(body));
  }

  /** Answer the open question; the dialog closes locally. */
  answer(value: "yes" | "no"): void {
    if (!this.store.question) return;
    this.store.dismissQuestion();
    this.send({ type: "answer", value });
  }

  approvePlan(): void {
    if (!this.playback) return;
    this.playback = null;
    this.store.clearProposal();
    this.send({ type: "plan_feedback", feedback: "approve" });
  }

  rejectPlanStep(step: number): void {
    if (!this.playback) return;
    this.playback = null;
    this.store.clearProposal();
    this.send({ type: "plan_feedback", feedback: "reject", step });
  }
}
