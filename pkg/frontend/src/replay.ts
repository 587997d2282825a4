/**
 * Prioritized experience replay: each entry carries priority
 * (|tdError| + floor)^alpha, sampling is proportional to priority, and
 * importance weights follow (batch * p_i)^(-beta), normalized by their
 * maximum.  The floor keeps every entry's sampling probability positive.
 */
import { Rng } from './rng.js';

export interface StoredTransition {
  state: Float64Array;
  action: number;
  reward: number;
  nextState: Float64Array;
}

export interface SampledBatch {
  indices: number[];
  transitions: StoredTransition[];
  weights: Float64Array;
  /** normalized sampling probabilities of the drawn entries */
  probs: Float64Array;
}

export class PrioritizedReplay {
  private entries: StoredTransition[] = [];
  private priorities: number[] = [];
  private head = 0;
  private maxPriority = 1.0;

  constructor(readonly capacity: number, readonly alpha: number,
              readonly floor: number, private rng: Rng) {
    if (capacity < 1) throw new Error('capacity must be positive');
    if (floor <= 0) throw new Error('priority floor must be positive');
  }

  get size(): number {
    return this.entries.length;
  }

  /** New experience enters at the current maximum priority. */
  add(tr: StoredTransition): void {
    if (this.entries.length < this.capacity) {
      this.entries.push(tr);
      this.priorities.push(this.maxPriority);
    } else {
      this.entries[this.head] = tr;
      this.priorities[this.head] = this.maxPriority;
      this.head = (this.head + 1) % this.capacity;
    }
  }

  sample(batch: number, beta: number): SampledBatch {
    const n = this.entries.length;
    if (n === 0) throw new Error('replay buffer is empty');
    let total = 0;
    const cumulative = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      total += this.priorities[i];
      cumulative[i] = total;
    }
    const indices: number[] = [];
    const probs = new Float64Array(batch);
    for (let k = 0; k < batch; k++) {
      const u = this.rng.uniform() * total;
      let lo = 0;
      let hi = n - 1;
      while (lo < hi) {
        const mid = (lo + hi) >> 1;
        if (cumulative[mid] <= u) lo = mid + 1;
        else hi = mid;
      }
      indices.push(lo);
      probs[k] = this.priorities[lo] / total;
    }
    const weights = new Float64Array(batch);
    let wMax = 0;
    for (let k = 0; k < batch; k++) {
      weights[k] = Math.pow(batch * probs[k], -beta);
      wMax = Math.max(wMax, weights[k]);
    }
    for (let k = 0; k < batch; k++) weights[k] /= wMax;
    return {
      indices,
      transitions: indices.map(i => this.entries[i]),
      weights,
      probs,
    };
  }

  /** Re-prioritize sampled entries with their fresh TD errors. */
  updatePriorities(indices: number[], tdErrors: ArrayLike<number>): void {
    for (let k = 0; k < indices.length; k++) {
      const p = Math.pow(Math.abs(tdErrors[k]) + this.floor, this.alpha);
      this.priorities[indices[k]] = p;
      this.maxPriority = Math.max(this.maxPriority, p);
    }
  }

  minPriority(): number {
    return Math.min(...this.priorities);
  }
}
