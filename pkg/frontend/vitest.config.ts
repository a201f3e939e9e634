import { defineConfig } from "vitest/config";

export default defineConfig({
  resolve: {
    // sources import each other with .js suffixes (they run unbundled in
    // the browser); map those back to the .ts files for the test runner
    alias: [{ find: /^(\.{1,2}\/.*)\.js$/, replacement: "$1" }],
  },
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    testTimeout: 240_000,
    hookTimeout: 240_000,
  },
});
