/** Greedy evaluation of a saved policy checkpoint against a fresh server. */
import { parseArgs } from 'node:util';

import { evaluateAgent, loadCheckpoint } from './ddpg.js';
import { EnvServerClient } from './envClient.js';
import { Rng } from './rng.js';

const { values } = parseArgs({
  options: {
    checkpoint: { type: 'string', default: 'policy.json' },
    slots: { type: 'string', default: '20000' },
    seed: { type: 'string', default: '99' },
    'pbar-db': { type: 'string', default: '20' },
    'bler-max': { type: 'string', default: '0.01' },
    m: { type: 'string', default: '5' },
    l: { type: 'string', default: '50' },
    r: { type: 'string', default: '5' },
    window: { type: 'string', default: '300' },
  },
});

async function main(): Promise<void> {
  const { agent } = loadCheckpoint(values.checkpoint!, new Rng(0));
  const client = new EnvServerClient({
    m: Number(values.m),
    l: Number(values.l),
    r: Number(values.r),
    pbar: Math.pow(10, Number(values['pbar-db']) / 10),
    blermax: Number(values['bler-max']),
    w: Number(values.window),
  });
  try {
    const report = await evaluateAgent(client, agent, Number(values.slots),
                                       Number(values.seed));
    console.log(JSON.stringify(report));
  } finally {
    await client.shutdown();
  }
}

main().catch(err => {
  console.error(err);
  process.exit(1);
});
