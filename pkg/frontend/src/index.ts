export * from "./schema.js";
export * from "./state.js";
export * from "./client.js";
export * from "./render.js";
export { startApp } from "./main.js";
