/** Training entry point: spawns the environment server and runs DDPG. */
import { parseArgs } from 'node:util';

import { defaultHyper, train } from './ddpg.js';
import { EnvServerClient } from './envClient.js';

const { values } = parseArgs({
  options: {
    'pbar-db': { type: 'string', default: '20' },
    'bler-max': { type: 'string', default: '0.01' },
    m: { type: 'string', default: '5' },
    l: { type: 'string', default: '50' },
    r: { type: 'string', default: '5' },
    lambda: { type: 'string', default: '1' },
    window: { type: 'string', default: '300' },
    period: { type: 'string', default: '100' },
    'no-truncation': { type: 'boolean', default: false },
    rho0: { type: 'string' },
    nu0: { type: 'string' },
    'tau-rho': { type: 'string' },
    'tau-nu': { type: 'string' },
    slots: { type: 'string', default: String(defaultHyper.totalSlots) },
    seed: { type: 'string', default: '1' },
    csv: { type: 'string', default: 'training.csv' },
    checkpoint: { type: 'string', default: 'policy.json' },
    resume: { type: 'boolean', default: false },
    optimizer: { type: 'string', default: 'adam' },
  },
});

async function main(): Promise<void> {
  const slots = Number(values.slots);
  const hyper = {
    ...defaultHyper,
    totalSlots: slots,
    optimizer: values.optimizer === 'sgd' ? 'sgd' as const : 'adam' as const,
  };
  const pbar = Math.pow(10, Number(values['pbar-db']) / 10);
  const r = Number(values.r);
  const client = new EnvServerClient({
    m: Number(values.m),
    l: Number(values.l),
    r,
    lambda: Number(values.lambda),
    pbar,
    blermax: Number(values['bler-max']),
    // the untruncated variant averages over the whole history
    w: values['no-truncation'] ? slots : Number(values.window),
    i: Number(values.period),
    // scale-aware dual defaults: the power term starts comparable to the
    // rate term and a full-budget mismatch doubles rho per update
    rho0: values.rho0 !== undefined ? Number(values.rho0) : r / pbar,
    nu0: values.nu0 !== undefined ? Number(values.nu0) : 1.0,
    tau_rho: values['tau-rho'] !== undefined
      ? Number(values['tau-rho']) : r / (pbar * pbar),
    tau_nu: values['tau-nu'] !== undefined ? Number(values['tau-nu']) : 0.1,
  });
  try {
    const result = await train(client, hyper, Number(values.seed), {
      csvPath: values.csv,
      checkpointPath: values.checkpoint,
      resume: values.resume,
      onEpoch: row => console.error(
        `epoch ${row.epoch}: ltat=${row.ltatWindow.toFixed(3)} ` +
        `bler=${row.blerWindow.toFixed(4)} power=${row.powerWindow.toFixed(1)} ` +
        `rho=${row.rho.toFixed(3)} nu=${row.nu.toFixed(3)} ` +
        `mbar=${row.mbar.toFixed(3)}`),
    });
    console.error(`done: ${result.slots} slots, ` +
                  `checkpoint ${values.checkpoint}, curves ${values.csv}`);
  } finally {
    await client.shutdown();
  }
}

main().catch(err => {
  console.error(err);
  process.exit(1);
});
