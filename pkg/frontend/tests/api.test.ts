import { describe, expect, it } from "vitest";

import { ApiClient, ServiceError } from "../src/api.js";
import { FakeService } from "./fake_service.js";

describe("api client", () => {
  it("raises ServiceError carrying the error envelope", async () => {
    const service = new FakeService();
    const api = new ApiClient("http://svc", service.fetch);
    try {
      await api.sendCommand("s1", "gibberish");
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(ServiceError);
      const se = err as ServiceError;
      expect(se.kind).toBe("unparsable_command");
      expect(se.status).toBe(400);
    }
  });

  it("carries candidates and action through ambiguous errors", async () => {
    const service = new FakeService();
    const api = new ApiClient("http://svc", service.fetch);
    try {
      await api.sendCommand("s1", "turn on the light");
      expect.unreachable("should have thrown");
    } catch (err) {
      const se = err as ServiceError;
      expect(se.kind).toBe("ambiguous_target");
      expect(se.payload.candidates).toHaveLength(3);
      expect(se.payload.action).toBe("switch_on");
    }
  });

  it("builds the static annotated image url", () => {
    const api = new ApiClient("http://svc", new FakeService().fetch);
    expect(api.annotatedImageUrl("abc")).toBe("http://svc/static/abc/annotated.png");
  });
});
