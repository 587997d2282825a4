/**
 * Seeded deterministic randomness: a splitmix32 core with helpers for
 * uniforms, Gaussians (Box-Muller), and integer ranges.  One instance per
 * consumer keeps draw order reproducible.
 */
export class Rng {
  private state: number;
  private spare: number | null = null;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  /** Next uint32 (splitmix32). */
  nextU32(): number {
    this.state = (this.state + 0x9e3779b9) >>> 0;
    let z = this.state;
    z ^= z >>> 16;
    z = Math.imul(z, 0x21f0aaad);
    z ^= z >>> 15;
    z = Math.imul(z, 0x735a2d97);
    z ^= z >>> 15;
    return z >>> 0;
  }

  /** Uniform in [0, 1) with 32-bit resolution. */
  uniform(): number {
    return this.nextU32() / 4294967296;
  }

  /** Standard normal via Box-Muller (pairs cached). */
  gauss(): number {
    if (this.spare !== null) {
      const out = this.spare;
      this.spare = null;
      return out;
    }
    let u = 0;
    while (u === 0) u = this.uniform();
    const v = this.uniform();
    const r = Math.sqrt(-2 * Math.log(u));
    this.spare = r * Math.sin(2 * Math.PI * v);
    return r * Math.cos(2 * Math.PI * v);
  }

  /** Integer in [0, n). */
  int(n: number): number {
    return Math.floor(this.uniform() * n);
  }

  /** Derived generator with an independent stream. */
  split(tag: number): Rng {
    return new Rng((this.nextU32() ^ Math.imul(tag + 1, 0x85ebca6b)) >>> 0);
  }
}
