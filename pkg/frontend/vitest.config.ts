import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    exclude: ['tests/acceptance/**'],
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
