import { describe, expect, it } from "vitest";

import { BackendError, StudioClient, type FetchLike } from "../src/api.js";

function fetchReturning(doc: unknown, status = 200): { fetch: FetchLike; seen: string[] } {
  const seen: string[] = [];
  const fetch: FetchLike = async (url, init) => {
    seen.push(`${init?.method ?? "GET"} ${url}${init?.body ? " " + init.body : ""}`);
    return { ok: status < 400, status, json: async () => doc };
  };
  return { fetch, seen };
}

describe("StudioClient", () => {
  it("serializes bodies and paths per the wire contract", async () => {
    const { fetch, seen } = fetchReturning({ q: 5, p: 2, count: 10, seed: 7 });
    const client = new StudioClient("http://x", fetch);
    await client.generateSamples("sid", 5, 7);
    expect(seen[0]).toBe('POST http://x/session/sid/samples {"q":5,"seed":7}');
  });

  it("encodes the overview view as a query parameter", async () => {
    const { fetch, seen } = fetchReturning({ view: "state", bins: [] });
    const client = new StudioClient("", fetch);
    await client.getOverview("sid", "state");
    expect(seen[0]).toBe("GET /session/sid/overview?view=state");
  });

  it("raises typed errors with the backend's detail", async () => {
    const { fetch } = fetchReturning(
      { error: "ValidationError", detail: "alpha_u must be > 0" },
      422,
    );
    const client = new StudioClient("", fetch);
    await expect(client.patchHyperparams("sid", { alpha_u: -1 })).rejects.toThrow(
      BackendError,
    );
    try {
      await client.patchHyperparams("sid", { alpha_u: -1 });
    } catch (err) {
      const e = err as BackendError;
      expect(e.status).toBe(422);
      expect(e.kind).toBe("ValidationError");
      expect(e.message).toContain("alpha_u");
    }
  });
});
