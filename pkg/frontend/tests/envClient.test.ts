/** Integration with the real environment server over the wire protocol. */
import { describe, expect, it } from 'vitest';

import { EnvServerClient } from '../src/envClient.js';
import { ProtocolFailure } from '../src/protocol.js';

const SERVER = { m: 3, l: 50, r: 5, pbar: 100, blermax: 0.01, w: 300, i: 100 };

describe('EnvServerClient', () => {
  it('handshakes, steps, and reports stats', async () => {
    const client = new EnvServerClient(SERVER);
    try {
      const conf = await client.hello();
      expect(conf).toMatchObject({ type: 'config', m: 3, l: 50, r: 5,
                                   pbar: 100, blermax: 0.01, pmax: 400 });
      const st = await client.reset(42);
      expect(st.state).toEqual([0, 0]);
      expect(st.slot).toBe(0);
      const tr = await client.step(50);
      expect(tr.type).toBe('transition');
      expect(tr.slot).toBe(1);
      expect(typeof tr.reward).toBe('number');
      const stats = await client.stats();
      expect(stats.slot).toBe(1);
    } finally {
      await client.shutdown();
    }
  });

  it('replays identical transitions for identical seeds', async () => {
    const run = async () => {
      const client = new EnvServerClient(SERVER);
      try {
        await client.reset(7);
        const out = [];
        for (let i = 0; i < 50; i++) {
          out.push(await client.step(30 + (i % 4) * 10));
        }
        return JSON.stringify(out);
      } finally {
        await client.shutdown();
      }
    };
    expect(await run()).toEqual(await run());
  });

  it('surfaces protocol errors without killing the session', async () => {
    const client = new EnvServerClient(SERVER);
    try {
      await expect(client.step(1)).rejects.toThrowError(ProtocolFailure);
      await client.reset(1);
      const tr = await client.step(10);
      expect(tr.type).toBe('transition');
    } finally {
      await client.shutdown();
    }
  });
});
