import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // Conformance tests drive a live server through a real 76-trial
    // session; unit tests never get near these limits.
    testTimeout: 15_000,
    hookTimeout: 180_000,
  },
});
