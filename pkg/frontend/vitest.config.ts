import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    globals: true,
    environment: 'happy-dom',
    include: ['tests/**/*.test.ts'],
    testTimeout: 30000,
    hookTimeout: 30000,
    // The e2e file boots the backend service; running files sequentially
    // keeps its startup and DOM waits off a contended CPU.
    fileParallelism: false,
  },
});
