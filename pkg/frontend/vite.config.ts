import { defineConfig } from "vitest/config";

export default defineConfig({
  base: "/ui/",
  build: {
    outDir: "dist/static",
    emptyOutDir: true,
  },
  server: {
    // vite dev server proxies API calls to a locally running service
    proxy: {
      "/nodes": "http://127.0.0.1:8787",
      "/scenarios": "http://127.0.0.1:8787",
      "/attacks": "http://127.0.0.1:8787",
      "/inject": "http://127.0.0.1:8787",
      "/flows": "http://127.0.0.1:8787",
      "/probe": "http://127.0.0.1:8787",
      "/exec": "http://127.0.0.1:8787",
      "/topology": "http://127.0.0.1:8787",
      "/events": "http://127.0.0.1:8787",
      "/tick": "http://127.0.0.1:8787",
      "/health": "http://127.0.0.1:8787",
    },
  },
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
  },
});
