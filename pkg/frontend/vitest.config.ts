import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the end-to-end run boots the real service
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
