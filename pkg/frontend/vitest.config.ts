import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // the e2e suite talks to a local service; making the window share
    // its origin keeps happy-dom's same-origin fetch policy happy
    environmentOptions: {
      happyDOM: { url: "http://127.0.0.1:8931" },
    },
    include: ["tests/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
