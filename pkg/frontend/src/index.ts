export * from "./protocol.js";
export * from "./transport.js";
export * from "./store.js";
export * from "./scene.js";
export * from "./gestures.js";
export * from "./playback.js";
export * from "./client.js";
