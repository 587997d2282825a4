/** Wire-protocol message shapes and the endpoint interface the trainer
 * consumes; the out-of-process client and the scripted test environments
 * both implement EnvEndpoint. */

export interface EnvConfigMsg {
  type: 'config';
  m: number;
  l: number;
  r: number;
  lambda: number;
  pbar: number;
  blermax: number;
  w: number;
  i: number;
  pmax: number;
}

export interface StateMsg {
  type: 'state';
  state: number[];
  slot: number;
}

export interface TransitionMsg {
  type: 'transition';
  state: number[];
  reward: number;
  rate: number;
  round: number;
  success: boolean;
  final_failure: boolean;
  rho: number;
  nu: number;
  mbar: number;
  slot: number;
}

export interface StatsMsg {
  type: 'stats';
  avg_power: number;
  final_failure_rate: number;
  mbar: number;
  rho?: number;
  nu?: number;
  slot?: number;
}

export interface EnvEndpoint {
  hello(): Promise<EnvConfigMsg>;
  reset(seed: number): Promise<StateMsg>;
  step(power: number): Promise<TransitionMsg>;
  stats(): Promise<StatsMsg>;
  shutdown(): Promise<void>;
}

export class ProtocolFailure extends Error {
  constructor(readonly code: string, detail: string) {
    super(`${code}: ${detail}`);
  }
}
