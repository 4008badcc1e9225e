import { defineConfig } from "vitest/config";

// the live suite trains a small model and runs real 20 Hz traces
export default defineConfig({
  test: {
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
