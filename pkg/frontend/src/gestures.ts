/**
 * Gesture routing: direct manipulation over the 2D scene becomes engine
 * messages. Every gesture yields exactly one message or none.
 */

import { HandAction, InboundMessage } from "./protocol.js";
import { SceneStore } from "./store.js";

export const GAZE_DWELL_MS = 500;

const LIQUID_TYPES = new Set(["liquid", "milk", "water", "juice"]);
const FIXED_TYPES = new Set(["microwave", "fridge"]);
const DOOR_TYPES = new Set(["microwave", "fridge"]);
const PRESSABLE_TYPES = new Set(["toaster", "microwave", "kettle"]);

export class GestureRouter {
  private dragging: string | null = null;
  private hoverTarget: string | null = null;
  private hoverSince = 0;
  private gazeSent = false;

  constructor(
    private readonly store: SceneStore,
    private readonly actor: string = "human"
  ) {}

  private action(kind: HandAction["kind"], ...args: string[]): InboundMessage {
    return { type: "hand_action", action: { kind, actor: this.actor, args } };
  }

  private typeOf(id: string): string | null {
    return this.store.objects.get(id)?.type ?? null;
  }

  private interactive(id: string): boolean {
    const type = this.typeOf(id);
    if (type === null || type === "human" || type === "robot") return false;
    return !LIQUID_TYPES.has(type) && !FIXED_TYPES.has(type);
  }

  /** Drag start on a sprite: the pick gesture. Non-interactive -> null. */
  dragStart(id: string): InboundMessage | null {
    if (!this.interactive(id) || this.dragging) return null;
    this.dragging = id;
    return this.action("pick", id);
  }

  /**
   * Drop while dragging. On a container or zone this places; dropping a
   * liquid-bearing vessel onto another vessel pours instead. Elsewhere the
   * object stays in hand and no message is sent.
   */
  drop(targetId: string | null): InboundMessage | null {
    if (!this.dragging) return null;
    const held = this.dragging;
    if (targetId === null) return null;
    if (this.store.zones.has(targetId)) {
      this.dragging = null;
      return this.action("place", held, targetId);
    }
    const target = this.store.objects.get(targetId);
    if (!target || target.capacity <= 0) return null;
    const heldType = this.typeOf(held);
    const targetType = target.type;
    const heldHasLiquid = this.store
      .contentsOf(held)
      .some((x) => LIQUID_TYPES.has(this.typeOf(x) ?? ""));
    const vesselish = (t: string | null) =>
      t !== null && ["cup", "bottle", "glass", "kettle", "vessel"].includes(t);
    if (heldHasLiquid && vesselish(targetType)) {
      // pouring keeps the vessel in hand
      return this.action("pour", held, targetId);
    }
    this.dragging = null;
    return this.action("place", held, targetId);
  }

  /** Click on a device body: the press gesture (toaster lever, start button). */
  click(id: string): InboundMessage | null {
    const type = this.typeOf(id);
    if (type === null || !PRESSABLE_TYPES.has(type)) return null;
    return this.action("press", id);
  }

  /** Click on a door-device's door: toggles open/close. */
  clickDoor(id: string): InboundMessage | null {
    const type = this.typeOf(id);
    if (type === null || !DOOR_TYPES.has(type)) return null;
    const isOpen = this.store.facts.has(`open(${id})`);
    return this.action(isOpen ? "close" : "open", id);
  }

  /** Hover dwell: emits one gaze once the dwell threshold passes. */
  hover(id: string | null, now: number): InboundMessage | null {
    if (id !== this.hoverTarget) {
      this.hoverTarget = id;
      this.hoverSince = now;
      this.gazeSent = false;
      return null;
    }
    if (
      id !== null &&
      !this.gazeSent &&
      now - this.hoverSince >= GAZE_DWELL_MS &&
      this.store.objects.has(id)
    ) {
      this.gazeSent = true;
      return { type: "gaze", object: id };
    }
    return null;
  }

  get heldObject(): string | null {
    return this.dragging;
  }
}
