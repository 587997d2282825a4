import { defineConfig } from 'vitest/config';

// Full training runs for the qualitative convergence gates; budget ~15 min.
export default defineConfig({
  test: {
    include: ['tests/acceptance/**/*.test.ts'],
    testTimeout: 3_600_000,
    hookTimeout: 120_000,
  },
});
