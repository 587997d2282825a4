/**
 * Out-of-process environment client: spawns the Python environment
 * server and exchanges newline-delimited JSON over its stdio, strictly
 * one request in flight at a time.
 */
import { spawn, ChildProcessByStdio } from 'node:child_process';
import { once } from 'node:events';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { createInterface, Interface } from 'node:readline';
import { Readable, Writable } from 'node:stream';

import { EnvConfigMsg, EnvEndpoint, ProtocolFailure, StateMsg, StatsMsg,
         TransitionMsg } from './protocol.js';

export interface ServerConfig {
  m: number;
  l: number;
  r: number;
  lambda?: number;
  pbar: number;
  blermax: number;
  w?: number;
  i?: number;
  pmax?: number;
  tau_rho?: number;
  tau_nu?: number;
  rho0?: number;
  nu0?: number;
}

const PYTHON = process.env.HARQLAB_PYTHON ?? 'python3';

export class EnvServerClient implements EnvEndpoint {
  private child: ChildProcessByStdio<Writable, Readable, null>;
  private lines: Interface;
  private queue: Array<{ resolve: (v: any) => void;
                         reject: (e: Error) => void }> = [];
  private closed = false;

  constructor(config: ServerConfig) {
    const dir = mkdtempSync(join(tmpdir(), 'harqlab-env-'));
    const confPath = join(dir, 'env.json');
    writeFileSync(confPath, JSON.stringify(config));
    this.child = spawn(PYTHON, ['-m', 'harqlab.cli', 'env-server',
                                '--config', confPath],
                       { stdio: ['pipe', 'pipe', 'inherit'] });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on('line', line => this.onLine(line));
    this.child.on('exit', () => {
      this.closed = true;
      for (const p of this.queue.splice(0)) {
        p.reject(new Error('environment server exited'));
      }
    });
  }

  private onLine(line: string): void {
    const pending = this.queue.shift();
    if (!pending) return;
    let msg: any;
    try {
      msg = JSON.parse(line);
    } catch (e) {
      pending.reject(new Error(`unparseable reply: ${line}`));
      return;
    }
    if (msg.type === 'error') {
      pending.reject(new ProtocolFailure(msg.code, msg.detail));
    } else {
      pending.resolve(msg);
    }
  }

  private request<T>(payload: object): Promise<T> {
    if (this.closed) return Promise.reject(new Error('client closed'));
    return new Promise<T>((resolve, reject) => {
      this.queue.push({ resolve, reject });
      this.child.stdin.write(JSON.stringify(payload) + '\n');
    });
  }

  hello(): Promise<EnvConfigMsg> {
    return this.request({ type: 'hello' });
  }

  reset(seed: number): Promise<StateMsg> {
    return this.request({ type: 'reset', seed });
  }

  step(power: number): Promise<TransitionMsg> {
    return this.request({ type: 'step', power });
  }

  stats(): Promise<StatsMsg> {
    return this.request({ type: 'stats' });
  }

  async shutdown(): Promise<void> {
    if (this.closed) return;
    try {
      await this.request({ type: 'shutdown' });
    } catch {
      // server may already be gone
    }
    this.closed = true;
    this.child.stdin.end();
    if (this.child.exitCode === null) {
      const gone = once(this.child, 'exit');
      setTimeout(() => this.child.kill(), 2000).unref();
      await gone;
    }
  }
}
