/**
 * Scene rendering to an abstract draw list. The draw list is the testable
 * "pixel" layer: identical lists mean identical rendered frames. A canvas
 * adapter can replay a draw list onto a 2D context in the browser.
 */

import { SceneStore } from "./store.js";
import { PlaybackView, ghostPositions } from "./playback.js";

export interface DrawOp {
  layer: "zones" | "sprites" | "overlays" | "ghosts" | "hud";
  kind: string;
  id?: string;
  x?: number;
  y?: number;
  color?: string;
  text?: string;
}

const DEVICE_TYPES = new Set(["toaster", "microwave", "fridge", "kettle"]);

export function renderScene(
  store: SceneStore,
  now: number,
  playback: PlaybackView | null = null
): DrawOp[] {
  const ops: DrawOp[] = [];
  for (const [id, pos] of [...store.zones.entries()].sort()) {
    ops.push({ layer: "zones", kind: "zone", id, x: pos[0], y: pos[1] });
  }
  for (const id of [...store.objects.keys()].sort()) {
    const obj = store.objects.get(id)!;
    if (obj.type === "human" || obj.type === "robot") continue;
    const pos = store.positionOf(id);
    if (!pos) continue;
    ops.push({
      layer: "sprites",
      kind: DEVICE_TYPES.has(obj.type) ? "device" : "item",
      id,
      x: pos[0],
      y: pos[1],
    });
  }
  for (const overlay of store.activeOverlays(now)) {
    const p = overlay.payload;
    switch (overlay.kind) {
      case "object_label": {
        const pos = p.object ? store.positionOf(p.object) : null;
        ops.push({
          layer: "overlays",
          kind: "label",
          id: p.object,
          text: p.label,
          x: pos?.[0],
          y: pos?.[1],
        });
        break;
      }
      case "action_label":
        ops.push({ layer: "overlays", kind: "action_label", text: p.action });
        break;
      case "highlight":
        for (const id of p.objects ?? []) {
          const pos = store.positionOf(id);
          ops.push({ layer: "overlays", kind: "highlight", id, x: pos?.[0], y: pos?.[1] });
        }
        break;
      case "particles":
        for (const id of p.objects ?? []) {
          const pos = store.positionOf(id);
          ops.push({
            layer: "overlays",
            kind: "particles",
            id,
            color: p.color,
            x: pos?.[0],
            y: pos?.[1],
          });
        }
        break;
      case "hologram":
        ops.push({
          layer: "overlays",
          kind: "hologram",
          id: p.object,
          x: p.pose?.[0],
          y: p.pose?.[1],
        });
        break;
      case "speech":
        ops.push({ layer: "hud", kind: "speech", text: p.text });
        break;
      case "avatar_step":
        break; // consumed by plan playback, not drawn directly
    }
  }
  if (playback) {
    for (const ghost of ghostPositions(store, playback)) {
      ops.push({ layer: "ghosts", kind: "ghost", id: ghost.id, x: ghost.x, y: ghost.y });
    }
  }
  ops.push({ layer: "hud", kind: "status", text: store.connection });
  if (store.question) {
    ops.push({ layer: "hud", kind: "question", text: store.question.text });
  }
  return ops;
}

/** Stable serialization of one layer, for pixel-stability checks. */
export function serializeLayer(ops: DrawOp[], layer: DrawOp["layer"]): string {
  return ops
    .filter((op) => op.layer === layer)
    .map((op) =>
      [op.kind, op.id ?? "", op.x ?? "", op.y ?? "", op.color ?? "", op.text ?? ""].join("|")
    )
    .join("\n");
}

/** Replay a draw list onto a canvas 2D context (browser adapter). */
export function drawToCanvas(
  ops: DrawOp[],
  ctx: {
    fillRect(x: number, y: number, w: number, h: number): void;
    strokeRect(x: number, y: number, w: number, h: number): void;
    fillText(text: string, x: number, y: number): void;
  },
  scale = 100
): void {
  let hudLine = 0;
  for (const op of ops) {
    const x = (op.x ?? 0) * scale;
    const y = (op.y ?? 0) * scale;
    switch (op.layer) {
      case "zones":
        ctx.strokeRect(x - 40, y - 40, 80, 80);
        break;
      case "sprites":
        ctx.fillRect(x - 10, y - 10, 20, 20);
        break;
      case "ghosts":
        ctx.strokeRect(x - 10, y - 10, 20, 20);
        break;
      case "overlays":
        if (op.text) ctx.fillText(op.text, x, y - 14);
        else ctx.strokeRect(x - 14, y - 14, 28, 28);
        break;
      case "hud":
        hudLine += 1;
        ctx.fillText(`${op.kind}: ${op.text ?? ""}`, 4, 12 * hudLine);
        break;
    }
  }
}
