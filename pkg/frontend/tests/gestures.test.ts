import { describe, expect, it } from "vitest";

import { GAZE_DWELL_MS, GestureRouter } from "../src/gestures.js";
import { SceneStore } from "../src/store.js";

function kitchenStore(): SceneStore {
  const store = new SceneStore();
  store.setConnection("connected");
  store.apply(
    {
      seq: 0,
      type: "world_update",
      v: 1,
      payload: {
        added: [
          "at(bread1, counter)",
          "at(toaster1, counter)",
          "at(cup1, table)",
          "in(milk1, cup1)",
          "at(kettle1, counter)",
          "at(microwave1, counter)",
        ],
        removed: [],
        scene: {
          objects: [
            { id: "bread1", type: "bread", capacity: 0, pose: [0, 0] },
            { id: "toaster1", type: "toaster", capacity: 1, pose: [0, 0] },
            { id: "cup1", type: "cup", capacity: 2, pose: [1.5, 0] },
            { id: "milk1", type: "milk", capacity: 0, pose: [1.5, 0] },
            { id: "kettle1", type: "kettle", capacity: 2, pose: [0, 0] },
            { id: "microwave1", type: "microwave", capacity: 1, pose: [0, 0] },
            { id: "human", type: "human", capacity: 0, pose: null },
          ],
          zones: [
            { id: "counter", pos: [0, 0] },
            { id: "table", pos: [1.5, 0] },
          ],
        },
      },
    } as never,
    0
  );
  return store;
}

describe("gesture routing", () => {
  it("drag bread onto toaster emits pick then place", () => {
    const router = new GestureRouter(kitchenStore());
    const pick = router.dragStart("bread1");
    expect(pick).toEqual({
      type: "hand_action",
      action: { kind: "pick", actor: "human", args: ["bread1"] },
    });
    const place = router.drop("toaster1");
    expect(place).toEqual({
      type: "hand_action",
      action: { kind: "place", actor: "human", args: ["bread1", "toaster1"] },
    });
    expect(router.heldObject).toBeNull();
  });

  it("double drag-start does not emit twice", () => {
    const router = new GestureRouter(kitchenStore());
    expect(router.dragStart("bread1")).not.toBeNull();
    expect(router.dragStart("bread1")).toBeNull();
    expect(router.dragStart("cup1")).toBeNull();
  });

  it("dropping on empty space keeps the object in hand, no message", () => {
    const router = new GestureRouter(kitchenStore());
    router.dragStart("bread1");
    expect(router.drop(null)).toBeNull();
    expect(router.heldObject).toBe("bread1");
    expect(router.drop("counter")).not.toBeNull();
  });

  it("liquids and fixed devices are not draggable", () => {
    const router = new GestureRouter(kitchenStore());
    expect(router.dragStart("milk1")).toBeNull();
    expect(router.dragStart("microwave1")).toBeNull();
  });

  it("dropping a liquid-bearing vessel onto a vessel pours", () => {
    const store = kitchenStore();
    const router = new GestureRouter(store);
    router.dragStart("cup1");
    const pour = router.drop("kettle1");
    expect(pour).toEqual({
      type: "hand_action",
      action: { kind: "pour", actor: "human", args: ["cup1", "kettle1"] },
    });
    // the cup stays in hand after pouring
    expect(router.heldObject).toBe("cup1");
  });

  it("click presses pressable devices only", () => {
    const router = new GestureRouter(kitchenStore());
    expect(router.click("toaster1")).toEqual({
      type: "hand_action",
      action: { kind: "press", actor: "human", args: ["toaster1"] },
    });
    expect(router.click("bread1")).toBeNull();
  });

  it("door clicks toggle open and close", () => {
    const store = kitchenStore();
    const router = new GestureRouter(store);
    expect(router.clickDoor("microwave1")).toEqual({
      type: "hand_action",
      action: { kind: "open", actor: "human", args: ["microwave1"] },
    });
    store.facts.add("open(microwave1)");
    expect(router.clickDoor("microwave1")).toEqual({
      type: "hand_action",
      action: { kind: "close", actor: "human", args: ["microwave1"] },
    });
    expect(router.clickDoor("toaster1")).toBeNull();
  });

  it("hover dwell emits a single gaze", () => {
    const router = new GestureRouter(kitchenStore());
    expect(router.hover("milk1", 0)).toBeNull();
    expect(router.hover("milk1", GAZE_DWELL_MS - 1)).toBeNull();
    expect(router.hover("milk1", GAZE_DWELL_MS + 100)).toEqual({
      type: "gaze",
      object: "milk1",
    });
    // no duplicate gaze while the pointer stays put
    expect(router.hover("milk1", GAZE_DWELL_MS + 900)).toBeNull();
    // moving away and back re-arms the dwell
    router.hover(null, 2000);
    expect(router.hover("milk1", 2100)).toBeNull();
    expect(router.hover("milk1", 2100 + GAZE_DWELL_MS)).not.toBeNull();
  });
});
