import { describe, expect, it } from "vitest";

import type { ApiClient, StreamHandlers } from "../src/api.js";
import {
  MemoryHistoryStorage,
  SessionStore,
  parseMarkers,
  parseTissues,
} from "../src/store.js";
import type { AnnotateBody, JobEvent, JobPayload } from "../src/types.js";

function makeEvent(seq: number, overrides: Partial<JobEvent> = {}): JobEvent {
  return {
    seq,
    job_id: "job-1",
    iteration: Math.floor((seq - 1) / 5) + 1,
    task: "broad_query",
    status: "completed",
    summary: `event ${seq}`,
    timestamp: 1000 + seq,
    terminal: false,
    ...overrides,
  };
}

const doneJob: JobPayload = {
  job_id: "job-1",
  state: "done",
  request: { markers: ["CD4"], tissues: ["Blood"], global: false, iterations: 1, mode: "graph" },
  result: { label: "T cell", votes: { "t cell": 1 }, mode: "graph", trace: [] },
  error: null,
  events: 2,
};

class ManualApi implements ApiClient {
  submissions: AnnotateBody[] = [];
  handlers: StreamHandlers | null = null;
  streamsOpened = 0;
  job: JobPayload = doneJob;

  async submitAnnotation(body: AnnotateBody): Promise<string> {
    this.submissions.push(body);
    return "job-1";
  }

  async getJob(): Promise<JobPayload> {
    return this.job;
  }

  streamEvents(_jobId: string, handlers: StreamHandlers) {
    this.handlers = handlers;
    this.streamsOpened += 1;
    return { close: () => undefined };
  }
}

async function settle(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("parseMarkers", () => {
  it("splits on commas and whitespace, uppercases, dedupes", () => {
    expect(parseMarkers("IL7R, tmsb10 CD4\ncd4,,  MAL")).toEqual([
      "IL7R",
      "TMSB10",
      "CD4",
      "MAL",
    ]);
  });

  it("returns empty for blank text", () => {
    expect(parseMarkers("  ,  \n ")).toEqual([]);
  });
});

describe("parseTissues", () => {
  it("splits on commas only (tissue names contain spaces)", () => {
    expect(parseTissues("Blood, Peripheral blood, Blood")).toEqual([
      "Blood",
      "Peripheral blood",
    ]);
  });
});

describe("SessionStore", () => {
  it("blocks empty-marker submission without any request", async () => {
    const api = new ManualApi();
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "   " });
    await store.submit();
    expect(store.getState().formError).toMatch(/marker/i);
    expect(store.getState().view).toBe("form");
    expect(api.submissions).toHaveLength(0);
  });

  it("submits parsed markers and transitions to processing", async () => {
    const api = new ManualApi();
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "cd4, il7r", tissuesText: "Blood" });
    await store.submit();
    expect(api.submissions[0]).toMatchObject({
      markers: ["CD4", "IL7R"],
      tissues: ["Blood"],
      global: false,
    });
    expect(store.getState().view).toBe("processing");
  });

  it("global mode drops tissue names from the request", async () => {
    const api = new ManualApi();
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "CD4", tissuesText: "Blood", global: true });
    await store.submit();
    expect(api.submissions[0]).toMatchObject({ tissues: [], global: true });
  });

  it("appends events strictly in sequence order and drops replays", async () => {
    const api = new ManualApi();
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "CD4" });
    await store.submit();
    const handlers = api.handlers!;
    handlers.onEvent(makeEvent(1));
    handlers.onEvent(makeEvent(2));
    // reconnect replay: duplicates must not render twice
    handlers.onEvent(makeEvent(1));
    handlers.onEvent(makeEvent(2));
    handlers.onEvent(makeEvent(3));
    const seqs = store.getState().events.map((e) => e.seq);
    expect(seqs).toEqual([1, 2, 3]);
  });

  it("a sequence gap clears the log and reopens the stream", async () => {
    const api = new ManualApi();
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "CD4" });
    await store.submit();
    expect(api.streamsOpened).toBe(1);
    api.handlers!.onEvent(makeEvent(1));
    api.handlers!.onEvent(makeEvent(5));
    expect(api.streamsOpened).toBe(2);
    expect(store.getState().events).toEqual([]);
  });

  it("terminal close fetches the job and records immutable history", async () => {
    const api = new ManualApi();
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "CD4", tissuesText: "Blood" });
    await store.submit();
    api.handlers!.onEvent(makeEvent(1));
    api.handlers!.onEvent(makeEvent(2, { task: "terminal", terminal: true, iteration: 0 }));
    api.handlers!.onClose();
    await settle();
    const state = store.getState();
    expect(state.view).toBe("result");
    expect(state.job?.result?.label).toBe("T cell");
    expect(state.history).toHaveLength(1);
    expect(Object.isFrozen(state.history[0])).toBe(true);
  });

  it("re-run pre-fills the form from the finished request", async () => {
    const api = new ManualApi();
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "CD4", tissuesText: "Blood" });
    await store.submit();
    api.handlers!.onEvent(makeEvent(1, { task: "terminal", terminal: true }));
    api.handlers!.onClose();
    await settle();
    store.rerunCurrent();
    const state = store.getState();
    expect(state.view).toBe("form");
    expect(state.form.markersText).toBe("CD4");
    expect(state.form.tissuesText).toBe("Blood");
  });

  it("failed submission surfaces the server error inline", async () => {
    const api = new ManualApi();
    api.submitAnnotation = async () => {
      throw new Error("503: graph not loaded");
    };
    const store = new SessionStore(api, new MemoryHistoryStorage());
    store.setForm({ markersText: "CD4" });
    await store.submit();
    expect(store.getState().formError).toContain("503");
    expect(store.getState().view).toBe("form");
  });
});
