/**
 * Minimal dense network with tanh hidden layers and a linear head, plus
 * an Adam optimizer.  Sized for the two-hidden-layer-of-64 actor/critic
 * pair; everything runs on flat Float64Arrays so parameters can be
 * checkpointed, soft-updated, and compared directly.
 */
import { Rng } from './rng.js';

export interface ForwardCache {
  /** activations per layer, index 0 = input */
  acts: Float64Array[];
}

export class Mlp {
  readonly sizes: number[];
  /** weights[l] is (sizes[l+1] x sizes[l]) row-major; biases[l] matches. */
  weights: Float64Array[];
  biases: Float64Array[];

  constructor(sizes: number[], rng?: Rng) {
    this.sizes = sizes.slice();
    this.weights = [];
    this.biases = [];
    for (let l = 0; l + 1 < sizes.length; l++) {
      const w = new Float64Array(sizes[l + 1] * sizes[l]);
      if (rng) {
        const scale = Math.sqrt(1 / sizes[l]);
        for (let i = 0; i < w.length; i++) w[i] = rng.gauss() * scale;
      }
      this.weights.push(w);
      this.biases.push(new Float64Array(sizes[l + 1]));
    }
  }

  private get last(): number {
    return this.weights.length - 1;
  }

  forward(x: Float64Array | number[], cache?: ForwardCache): Float64Array {
    let a = Float64Array.from(x);
    if (cache) cache.acts = [a];
    for (let l = 0; l < this.weights.length; l++) {
      const w = this.weights[l];
      const b = this.biases[l];
      const nIn = this.sizes[l];
      const nOut = this.sizes[l + 1];
      const z = new Float64Array(nOut);
      for (let i = 0; i < nOut; i++) {
        let s = b[i];
        const row = i * nIn;
        for (let j = 0; j < nIn; j++) s += w[row + j] * a[j];
        z[i] = l === this.last ? s : Math.tanh(s);
      }
      a = z;
      if (cache) cache.acts.push(a);
    }
    return a;
  }

  /**
   * Backpropagate dLoss/dOutput for one sample through the cached
   * forward pass; accumulates parameter gradients into grads and
   * returns dLoss/dInput.
   */
  backward(cache: ForwardCache, dOut: Float64Array,
           grads: GradBuffer): Float64Array {
    let delta = Float64Array.from(dOut);
    for (let l = this.last; l >= 0; l--) {
      const nIn = this.sizes[l];
      const nOut = this.sizes[l + 1];
      const aIn = cache.acts[l];
      const aOut = cache.acts[l + 1];
      if (l !== this.last) {
        for (let i = 0; i < nOut; i++) delta[i] *= 1 - aOut[i] * aOut[i];
      }
      const gw = grads.weights[l];
      const gb = grads.biases[l];
      for (let i = 0; i < nOut; i++) {
        const row = i * nIn;
        const d = delta[i];
        gb[i] += d;
        for (let j = 0; j < nIn; j++) gw[row + j] += d * aIn[j];
      }
      const dIn = new Float64Array(nIn);
      const w = this.weights[l];
      for (let i = 0; i < nOut; i++) {
        const row = i * nIn;
        const d = delta[i];
        for (let j = 0; j < nIn; j++) dIn[j] += d * w[row + j];
      }
      delta = dIn;
    }
    return delta;
  }

  flat(): Float64Array {
    const total = this.weights.reduce((n, w) => n + w.length, 0)
      + this.biases.reduce((n, b) => n + b.length, 0);
    const out = new Float64Array(total);
    let k = 0;
    for (let l = 0; l < this.weights.length; l++) {
      out.set(this.weights[l], k);
      k += this.weights[l].length;
      out.set(this.biases[l], k);
      k += this.biases[l].length;
    }
    return out;
  }

  setFlat(flat: ArrayLike<number>): void {
    let k = 0;
    for (let l = 0; l < this.weights.length; l++) {
      this.weights[l].set(
        (flat as Float64Array).subarray
          ? (flat as Float64Array).subarray(k, k + this.weights[l].length)
          : Array.prototype.slice.call(flat, k, k + this.weights[l].length));
      k += this.weights[l].length;
      this.biases[l].set(
        (flat as Float64Array).subarray
          ? (flat as Float64Array).subarray(k, k + this.biases[l].length)
          : Array.prototype.slice.call(flat, k, k + this.biases[l].length));
      k += this.biases[l].length;
    }
    if (k !== (flat as ArrayLike<number>).length) {
      throw new Error(`flat parameter size mismatch: ${k} vs ${flat.length}`);
    }
  }

  clone(): Mlp {
    const copy = new Mlp(this.sizes);
    copy.setFlat(this.flat());
    return copy;
  }

  /** theta_target += tau * (theta - theta_target), elementwise. */
  softUpdateFrom(online: Mlp, tau: number): void {
    for (let l = 0; l < this.weights.length; l++) {
      const wt = this.weights[l];
      const wo = online.weights[l];
      for (let i = 0; i < wt.length; i++) wt[i] += tau * (wo[i] - wt[i]);
      const bt = this.biases[l];
      const bo = online.biases[l];
      for (let i = 0; i < bt.length; i++) bt[i] += tau * (bo[i] - bt[i]);
    }
  }
}

export class GradBuffer {
  weights: Float64Array[];
  biases: Float64Array[];

  constructor(net: Mlp) {
    this.weights = net.weights.map(w => new Float64Array(w.length));
    this.biases = net.biases.map(b => new Float64Array(b.length));
  }

  zero(): void {
    for (const w of this.weights) w.fill(0);
    for (const b of this.biases) b.fill(0);
  }
}

export class Adam {
  private m: Float64Array[];
  private v: Float64Array[];
  private t = 0;

  constructor(private net: Mlp, private lr: number,
              private beta1 = 0.9, private beta2 = 0.999,
              private eps = 1e-8, private plainSgd = false) {
    const arrays = [...net.weights, ...net.biases];
    this.m = arrays.map(a => new Float64Array(a.length));
    this.v = arrays.map(a => new Float64Array(a.length));
  }

  /** Apply one descent step along grads (minimization). */
  step(grads: GradBuffer): void {
    this.t += 1;
    const params = [...this.net.weights, ...this.net.biases];
    const gs = [...grads.weights, ...grads.biases];
    for (let k = 0; k < params.length; k++) {
      const p = params[k];
      const g = gs[k];
      if (this.plainSgd) {
        for (let i = 0; i < p.length; i++) p[i] -= this.lr * g[i];
        continue;
      }
      const m = this.m[k];
      const v = this.v[k];
      const c1 = 1 - Math.pow(this.beta1, this.t);
      const c2 = 1 - Math.pow(this.beta2, this.t);
      for (let i = 0; i < p.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
        p[i] -= this.lr * (m[i] / c1) / (Math.sqrt(v[i] / c2) + this.eps);
      }
    }
  }
}
