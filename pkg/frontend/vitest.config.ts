import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 30000,
    hookTimeout: 30000,
    // The live test owns a child relay process; keep files sequential so
    // two tests never race on spawning interpreters.
    fileParallelism: false,
  },
});
