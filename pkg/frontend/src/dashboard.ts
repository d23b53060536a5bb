// Device dashboard poller: refreshes backend state on a fixed interval and
// tracks staleness when a poll fails. Timer functions are injectable so
// tests can drive time.

import { ApiClient } from "./api.js";
import type { DeviceEntry } from "./types.js";

export const POLL_INTERVAL_MS = 2000;

export interface DashboardSnapshot {
  devices: DeviceEntry[];
  stale: boolean;
  lastError: string | null;
}

type Scheduler = (fn: () => void, ms: number) => unknown;
type Canceller = (handle: unknown) => void;

export class DeviceDashboard {
  snapshot: DashboardSnapshot = { devices: [], stale: false, lastError: null };
  private handle: unknown = null;

  constructor(
    private api: ApiClient,
    private onUpdate: (snapshot: DashboardSnapshot) => void = () => {},
    private schedule: Scheduler = (fn, ms) => setInterval(fn, ms),
    private cancel: Canceller = (h) => clearInterval(h as number),
  ) {}

  async poll(): Promise<DashboardSnapshot> {
    try {
      const devices = await this.api.listDevices();
      this.snapshot = { devices, stale: false, lastError: null };
    } catch (err) {
      // keep the last good device list, just mark it stale
      this.snapshot = { ...this.snapshot, stale: true, lastError: String(err) };
    }
    this.onUpdate(this.snapshot);
    return this.snapshot;
  }

  start(): void {
    if (this.handle !== null) return;
    void this.poll();
    this.handle = this.schedule(() => void this.poll(), POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
  }
}
