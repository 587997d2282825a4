/**
 * DDPG power-allocation agent and training loop.
 *
 * Actor and critic are two-hidden-layer (64, 64) tanh networks; the
 * actor's linear head is squashed to [0, 1] and scaled by the
 * environment's power ceiling, the critic takes the (scaled) action
 * concatenated onto the state at its input layer.  Training follows the
 * usual off-policy loop: Gaussian exploration noise with linear decay,
 * prioritized replay with importance-weighted squared-TD-error critic
 * updates, policy-gradient actor updates through the critic, and soft
 * target-network tracking.  Dual-variable bookkeeping lives inside the
 * environment; the trainer only consumes rewards.
 */
import { appendFileSync, existsSync, readFileSync, writeFileSync } from 'node:fs';

import { Adam, GradBuffer, Mlp } from './mlp.js';
import { EnvConfigMsg, EnvEndpoint } from './protocol.js';
import { PrioritizedReplay, SampledBatch } from './replay.js';
import { Rng } from './rng.js';

export interface HyperParams {
  bufferSize: number;
  minibatch: number;
  priorityExponent: number;
  isExponent: number;
  priorityFloor: number;
  discount: number;
  softUpdate: number;
  actorLr: number;
  criticLr: number;
  totalSlots: number;
  warmupSlots: number;
  trainEvery: number;
  noiseStart: number;
  noiseEnd: number;
  epochSlots: number;
  optimizer: 'adam' | 'sgd';
}

export const defaultHyper: HyperParams = {
  bufferSize: 3000,
  minibatch: 64,
  priorityExponent: 0.6,
  isExponent: 0.4,
  priorityFloor: 1e-3,
  discount: 0.95,
  softUpdate: 5e-3,
  actorLr: 1e-4,
  criticLr: 1e-3,
  totalSlots: 60_000,
  warmupSlots: 500,
  trainEvery: 1,
  noiseStart: 0.2,
  noiseEnd: 0.02,
  epochSlots: 1000,
  optimizer: 'adam',
};

const HIDDEN = [64, 64];

export interface TrainStepInfo {
  tdErrors: Float64Array;
  criticLoss: number;
}

export class DdpgAgent {
  readonly stateDim: number;
  readonly pmax: number;
  actor: Mlp;
  critic: Mlp;
  targetActor: Mlp;
  targetCritic: Mlp;
  private actorOpt: Adam;
  private criticOpt: Adam;
  private actorGrads: GradBuffer;
  private criticGrads: GradBuffer;
  private scratchGrads: GradBuffer;

  constructor(stateDim: number, pmax: number, readonly hyper: HyperParams,
              rng: Rng) {
    this.stateDim = stateDim;
    this.pmax = pmax;
    this.actor = new Mlp([stateDim, ...HIDDEN, 1], rng.split(1));
    this.critic = new Mlp([stateDim + 1, ...HIDDEN, 1], rng.split(2));
    this.targetActor = this.actor.clone();
    this.targetCritic = this.critic.clone();
    const sgd = hyper.optimizer === 'sgd';
    this.actorOpt = new Adam(this.actor, hyper.actorLr, 0.9, 0.999, 1e-8, sgd);
    this.criticOpt = new Adam(this.critic, hyper.criticLr, 0.9, 0.999, 1e-8,
                              sgd);
    this.actorGrads = new GradBuffer(this.actor);
    this.criticGrads = new GradBuffer(this.critic);
    this.scratchGrads = new GradBuffer(this.critic);
  }

  /** Squashed policy output in [0, 1] (fraction of pmax). */
  policy(stateScaled: Float64Array, net: Mlp = this.actor): number {
    const y = net.forward(stateScaled)[0];
    return 0.5 * (Math.tanh(y) + 1);
  }

  /** TD targets r_i + discount * targetQ(s', targetPolicy(s')). */
  tdTargets(batch: SampledBatch): Float64Array {
    const out = new Float64Array(batch.transitions.length);
    for (let k = 0; k < batch.transitions.length; k++) {
      const tr = batch.transitions[k];
      const aNext = this.policy(tr.nextState, this.targetActor);
      const qNext = this.targetCritic.forward(
        concat(tr.nextState, aNext))[0];
      out[k] = tr.reward + this.hyper.discount * qNext;
    }
    return out;
  }

  trainStep(batch: SampledBatch): TrainStepInfo {
    const n = batch.transitions.length;
    const targets = this.tdTargets(batch);
    const tdErrors = new Float64Array(n);
    let loss = 0;

    this.criticGrads.zero();
    for (let k = 0; k < n; k++) {
      const tr = batch.transitions[k];
      const cache = { acts: [] as Float64Array[] };
      const q = this.critic.forward(concat(tr.state, tr.action), cache)[0];
      const delta = q - targets[k];
      tdErrors[k] = delta;
      const w = batch.weights[k];
      loss += (w * delta * delta) / (2 * n);
      this.critic.backward(cache, Float64Array.of((w * delta) / n),
                           this.criticGrads);
    }
    this.criticOpt.step(this.criticGrads);

    this.actorGrads.zero();
    this.scratchGrads.zero();
    for (let k = 0; k < n; k++) {
      const tr = batch.transitions[k];
      const aCache = { acts: [] as Float64Array[] };
      const y = this.actor.forward(tr.state, aCache)[0];
      const a = 0.5 * (Math.tanh(y) + 1);
      const cCache = { acts: [] as Float64Array[] };
      this.critic.forward(concat(tr.state, a), cCache);
      const dIn = this.critic.backward(cCache, Float64Array.of(1 / n),
                                       this.scratchGrads);
      const dqDa = dIn[this.stateDim];
      const th = Math.tanh(y);
      const dAdY = 0.5 * (1 - th * th);
      // gradient ascent on the action score: minimize its negation
      this.actor.backward(aCache, Float64Array.of(-dqDa * dAdY),
                          this.actorGrads);
    }
    this.actorOpt.step(this.actorGrads);

    this.targetActor.softUpdateFrom(this.actor, this.hyper.softUpdate);
    this.targetCritic.softUpdateFrom(this.critic, this.hyper.softUpdate);
    return { tdErrors, criticLoss: loss };
  }
}

function concat(state: Float64Array, action: number): Float64Array {
  const out = new Float64Array(state.length + 1);
  out.set(state);
  out[state.length] = action;
  return out;
}

// ---------------------------------------------------------------------------
// checkpoints: JSON header plus flat weight arrays
// ---------------------------------------------------------------------------

export interface Checkpoint {
  header: {
    stateDim: number;
    hidden: number[];
    pmax: number;
    hyper: HyperParams;
    slot: number;
    envConfig: EnvConfigMsg | null;
  };
  weights: {
    actor: number[];
    critic: number[];
    targetActor: number[];
    targetCritic: number[];
  };
}

export function saveCheckpoint(path: string, agent: DdpgAgent, slot: number,
                               envConfig: EnvConfigMsg | null): void {
  const ck: Checkpoint = {
    header: {
      stateDim: agent.stateDim,
      hidden: HIDDEN.slice(),
      pmax: agent.pmax,
      hyper: agent.hyper,
      slot,
      envConfig,
    },
    weights: {
      actor: Array.from(agent.actor.flat()),
      critic: Array.from(agent.critic.flat()),
      targetActor: Array.from(agent.targetActor.flat()),
      targetCritic: Array.from(agent.targetCritic.flat()),
    },
  };
  writeFileSync(path, JSON.stringify(ck));
}

export function loadCheckpoint(path: string, rng: Rng): {
  agent: DdpgAgent; slot: number;
} {
  const ck = JSON.parse(readFileSync(path, 'utf8')) as Checkpoint;
  const agent = new DdpgAgent(ck.header.stateDim, ck.header.pmax,
                              ck.header.hyper, rng);
  agent.actor.setFlat(ck.weights.actor);
  agent.critic.setFlat(ck.weights.critic);
  agent.targetActor.setFlat(ck.weights.targetActor);
  agent.targetCritic.setFlat(ck.weights.targetCritic);
  return { agent, slot: ck.header.slot };
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

export interface EpochRow {
  epoch: number;
  ltatWindow: number;
  blerWindow: number;
  powerWindow: number;
  rho: number;
  nu: number;
  mbar: number;
}

const CSV_HEADER = 'epoch,ltat_window,bler_window,power_window,rho,nu,mbar';

export function appendEpochRow(path: string, row: EpochRow): void {
  if (!existsSync(path)) writeFileSync(path, CSV_HEADER + '\n');
  appendFileSync(path, [row.epoch, row.ltatWindow, row.blerWindow,
                        row.powerWindow, row.rho, row.nu, row.mbar]
                 .join(',') + '\n');
}

export function readEpochRows(path: string): EpochRow[] {
  if (!existsSync(path)) return [];
  const lines = readFileSync(path, 'utf8').trim().split('\n').slice(1);
  return lines.filter(l => l.length > 0).map(l => {
    const [epoch, ltatWindow, blerWindow, powerWindow, rho, nu, mbar] =
      l.split(',').map(Number);
    return { epoch, ltatWindow, blerWindow, powerWindow, rho, nu, mbar };
  });
}

export class NanLossError extends Error {
  constructor(readonly checkpointPath: string | null) {
    super('training diverged to a non-finite loss'
          + (checkpointPath ? `; last checkpoint at ${checkpointPath}` : ''));
  }
}

export interface TrainOptions {
  csvPath?: string;
  checkpointPath?: string;
  resume?: boolean;
  onEpoch?: (row: EpochRow) => void;
}

export interface TrainResult {
  agent: DdpgAgent;
  slots: number;
  epochs: EpochRow[];
  envConfig: EnvConfigMsg;
}

export async function train(endpoint: EnvEndpoint, hyper: HyperParams,
                            seed: number,
                            opts: TrainOptions = {}): Promise<TrainResult> {
  const config = await endpoint.hello();
  const stateDim = Math.max(config.m - 1, 1);
  const rng = new Rng(seed >>> 0);

  let agent: DdpgAgent;
  let startSlot = 0;
  if (opts.resume && opts.checkpointPath && existsSync(opts.checkpointPath)) {
    const loaded = loadCheckpoint(opts.checkpointPath, rng.split(11));
    agent = loaded.agent;
    startSlot = loaded.slot;
  } else {
    agent = new DdpgAgent(stateDim, config.pmax, hyper, rng.split(11));
  }
  const replay = new PrioritizedReplay(hyper.bufferSize,
                                       hyper.priorityExponent,
                                       hyper.priorityFloor, rng.split(12));
  const noiseRng = rng.split(13);
  const epochs: EpochRow[] = readEpochRows(opts.csvPath ?? '');
  let epoch = epochs.length ? epochs[epochs.length - 1].epoch : 0;

  const stateMsg = await endpoint.reset(seed + startSlot);
  let state = scaleState(stateMsg.state, config.pmax, stateDim);
  let epochRate = 0;
  const result: EpochRow[] = [];

  for (let t = 1; t <= hyper.totalSlots; t++) {
    const frac = Math.min(t / hyper.totalSlots, 1.0);
    const sigma = hyper.noiseStart
      + (hyper.noiseEnd - hyper.noiseStart) * frac;
    let aScaled = agent.policy(state) + sigma * noiseRng.gauss();
    aScaled = Math.min(Math.max(aScaled, 0), 1);

    const tr = await endpoint.step(aScaled * config.pmax);
    const nextState = scaleState(tr.state, config.pmax, stateDim);
    replay.add({
      state,
      action: aScaled,
      reward: tr.reward / config.r,  // unit-scale the rate term for the critic
      nextState,
    });
    state = nextState;
    epochRate += tr.rate;

    if (t > hyper.warmupSlots && t % hyper.trainEvery === 0
        && replay.size >= hyper.minibatch) {
      const batch = replay.sample(hyper.minibatch, hyper.isExponent);
      const info = agent.trainStep(batch);
      replay.updatePriorities(batch.indices, info.tdErrors);
      if (!Number.isFinite(info.criticLoss)) {
        if (opts.checkpointPath) {
          saveCheckpoint(opts.checkpointPath, agent, startSlot + t, config);
        }
        throw new NanLossError(opts.checkpointPath ?? null);
      }
    }

    if (t % hyper.epochSlots === 0) {
      const stats = await endpoint.stats();
      epoch += 1;
      const row: EpochRow = {
        epoch,
        ltatWindow: epochRate / hyper.epochSlots,
        blerWindow: stats.final_failure_rate,
        powerWindow: stats.avg_power,
        rho: stats.rho ?? 0,
        nu: stats.nu ?? 0,
        mbar: stats.mbar,
      };
      epochRate = 0;
      result.push(row);
      if (opts.csvPath) appendEpochRow(opts.csvPath, row);
      if (opts.checkpointPath) {
        saveCheckpoint(opts.checkpointPath, agent, startSlot + t, config);
      }
      opts.onEpoch?.(row);
    }
  }
  if (opts.checkpointPath) {
    saveCheckpoint(opts.checkpointPath, agent, startSlot + hyper.totalSlots,
                   config);
  }
  return { agent, slots: startSlot + hyper.totalSlots,
           epochs: [...epochs, ...result], envConfig: config };
}

export function scaleState(raw: number[], pmax: number,
                           stateDim: number): Float64Array {
  const out = new Float64Array(stateDim);
  for (let i = 0; i < Math.min(raw.length, stateDim); i++) {
    out[i] = raw[i] / pmax;
  }
  return out;
}

// ---------------------------------------------------------------------------
// greedy evaluation
// ---------------------------------------------------------------------------

export interface EvalReport {
  ltat: number;
  blerWindow: number;
  powerWindow: number;
  mbar: number;
  slots: number;
}

/** Noise-free rollout of an arbitrary action rule (watts in, watts out). */
export async function evaluateRollout(
    endpoint: EnvEndpoint, actionWatts: (state: number[]) => number,
    slots: number, seed: number): Promise<EvalReport> {
  const st = await endpoint.reset(seed);
  let raw = st.state;
  let rateSum = 0;
  for (let t = 0; t < slots; t++) {
    const tr = await endpoint.step(actionWatts(raw));
    raw = tr.state;
    rateSum += tr.rate;
  }
  const stats = await endpoint.stats();
  return {
    ltat: rateSum / slots,
    blerWindow: stats.final_failure_rate,
    powerWindow: stats.avg_power,
    mbar: stats.mbar,
    slots,
  };
}

/** Greedy rollout of a trained agent. */
export async function evaluateAgent(endpoint: EnvEndpoint, agent: DdpgAgent,
                                    slots: number,
                                    seed: number): Promise<EvalReport> {
  const config = await endpoint.hello();
  const stateDim = agent.stateDim;
  return evaluateRollout(
    endpoint,
    raw => agent.policy(scaleState(raw, config.pmax, stateDim)) * config.pmax,
    slots, seed);
}
