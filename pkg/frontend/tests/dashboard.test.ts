import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { DeviceDashboard, POLL_INTERVAL_MS } from "../src/dashboard.js";
import { FakeService } from "./fake_service.js";

let service: FakeService;
let api: ApiClient;

beforeEach(() => {
  service = new FakeService();
  api = new ApiClient("http://svc", service.fetch);
});

describe("device dashboard", () => {
  it("polls immediately on start and then on the interval", async () => {
    vi.useFakeTimers();
    try {
      const updates: boolean[] = [];
      const dashboard = new DeviceDashboard(api, (snap) => updates.push(snap.stale));
      dashboard.start();
      await vi.advanceTimersByTimeAsync(0);
      expect(updates).toHaveLength(1);
      await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
      expect(updates).toHaveLength(2);
      await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 3);
      expect(updates).toHaveLength(5);
      dashboard.stop();
      await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 2);
      expect(updates).toHaveLength(5);
    } finally {
      vi.useRealTimers();
    }
  });

  it("marks the snapshot stale when a poll fails, keeping the last data", async () => {
    const dashboard = new DeviceDashboard(api);
    await dashboard.poll();
    expect(dashboard.snapshot.stale).toBe(false);
    expect(dashboard.snapshot.devices).toHaveLength(1);

    service.failDevices = true;
    await dashboard.poll();
    expect(dashboard.snapshot.stale).toBe(true);
    expect(dashboard.snapshot.devices).toHaveLength(1); // last good list retained

    service.failDevices = false;
    await dashboard.poll();
    expect(dashboard.snapshot.stale).toBe(false);
  });

  it("reflects device state changes between polls", async () => {
    const dashboard = new DeviceDashboard(api);
    await dashboard.poll();
    expect(dashboard.snapshot.devices[0].state.on).toBe(false);
    // a command flips state server-side; the next poll must show it
    await api.sendDirectCommand("s1", "some-uuid", "switch_on");
    await dashboard.poll();
    expect(dashboard.snapshot.devices[0].state.on).toBe(true);
  });
});
