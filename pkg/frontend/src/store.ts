import type { ApiClient, StreamHandle } from "./api.js";
import type { FormState, JobEvent, JobPayload } from "./types.js";

export type View = "form" | "processing" | "result";

export interface HistoryEntry {
  jobId: string;
  label: string;
  state: string;
  markers: string[];
  tissues: string[];
  global: boolean;
  iterations: number;
  finishedAt: number;
}

export interface SessionState {
  form: FormState;
  view: View;
  activeJobId: string | null;
  events: JobEvent[];
  job: JobPayload | null;
  formError: string | null;
  streamError: string | null;
  history: HistoryEntry[];
}

export interface HistoryStorage {
  load(): HistoryEntry[];
  save(entries: HistoryEntry[]): void;
}

export class LocalHistoryStorage implements HistoryStorage {
  private static KEY = "cellannot.history";

  load(): HistoryEntry[] {
    try {
      const raw = window.localStorage.getItem(LocalHistoryStorage.KEY);
      return raw ? (JSON.parse(raw) as HistoryEntry[]) : [];
    } catch {
      return [];
    }
  }

  save(entries: HistoryEntry[]): void {
    try {
      window.localStorage.setItem(LocalHistoryStorage.KEY, JSON.stringify(entries));
    } catch {
      // storage full or unavailable: history is best-effort
    }
  }
}

export class MemoryHistoryStorage implements HistoryStorage {
  private entries: HistoryEntry[] = [];

  load(): HistoryEntry[] {
    return this.entries;
  }

  save(entries: HistoryEntry[]): void {
    this.entries = entries;
  }
}

export function parseMarkers(text: string): string[] {
  const seen = new Set<string>();
  const markers: string[] = [];
  for (const token of text.split(/[\s,]+/)) {
    const symbol = token.trim().toUpperCase();
    if (symbol && !seen.has(symbol)) {
      seen.add(symbol);
      markers.push(symbol);
    }
  }
  return markers;
}

export function parseTissues(text: string): string[] {
  const seen = new Set<string>();
  const tissues: string[] = [];
  for (const token of text.split(",")) {
    const name = token.trim();
    if (name && !seen.has(name)) {
      seen.add(name);
      tissues.push(name);
    }
  }
  return tissues;
}

function initialForm(): FormState {
  return { markersText: "", tissuesText: "", global: false, iterations: 5, mode: "graph" };
}

type Listener = (state: SessionState) => void;

/**
 * Single UI store: every mutation funnels through one place, so view
 * updates are serialized and event ordering is enforced centrally.
 */
export class SessionStore {
  private state: SessionState;
  private listeners: Listener[] = [];
  private stream: StreamHandle | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly storage: HistoryStorage = new MemoryHistoryStorage(),
  ) {
    this.state = {
      form: initialForm(),
      view: "form",
      activeJobId: null,
      events: [],
      job: null,
      formError: null,
      streamError: null,
      history: storage.load(),
    };
  }

  getState(): SessionState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  setForm(patch: Partial<FormState>): void {
    this.update({ form: { ...this.state.form, ...patch }, formError: null });
  }

  /** Validate and submit; empty markers block with an inline error. */
  async submit(): Promise<void> {
    const markers = parseMarkers(this.state.form.markersText);
    if (markers.length === 0) {
      this.update({ formError: "Enter at least one marker gene symbol." });
      return;
    }
    const tissues = this.state.form.global ? [] : parseTissues(this.state.form.tissuesText);
    this.stream?.close();
    try {
      const jobId = await this.api.submitAnnotation({
        markers,
        tissues,
        global: this.state.form.global,
        iterations: this.state.form.iterations,
        mode: this.state.form.mode,
      });
      this.update({
        view: "processing",
        activeJobId: jobId,
        events: [],
        job: null,
        formError: null,
        streamError: null,
      });
      this.openStream(jobId);
    } catch (error) {
      this.update({ formError: error instanceof Error ? error.message : String(error) });
    }
  }

  private openStream(jobId: string): void {
    this.stream = this.api.streamEvents(jobId, {
      onEvent: (event) => this.acceptEvent(jobId, event),
      onClose: () => void this.finishJob(jobId),
      onError: (message) => this.update({ streamError: message }),
    });
  }

  /** Append strictly in sequence order; replayed duplicates are dropped. */
  private acceptEvent(jobId: string, event: JobEvent): void {
    if (this.state.activeJobId !== jobId) return;
    const lastSeq = this.state.events.length
      ? this.state.events[this.state.events.length - 1].seq
      : 0;
    if (event.seq <= lastSeq) return; // duplicate from a reconnect replay
    if (event.seq !== lastSeq + 1) {
      // gap: drop the partial log and re-stream (server replays from 1)
      this.stream?.close();
      this.update({ events: [] });
      this.openStream(jobId);
      return;
    }
    this.update({ events: [...this.state.events, event] });
  }

  private async finishJob(jobId: string): Promise<void> {
    if (this.state.activeJobId !== jobId) return;
    try {
      const job = await this.api.getJob(jobId);
      const entry: HistoryEntry = Object.freeze({
        jobId,
        label: job.result?.label ?? (job.error ?? "failed"),
        state: job.state,
        markers: [...job.request.markers],
        tissues: [...job.request.tissues],
        global: job.request.global,
        iterations: job.request.iterations,
        finishedAt: Date.now(),
      });
      const history = [entry, ...this.state.history];
      this.storage.save(history);
      this.update({ view: "result", job, history });
    } catch (error) {
      this.update({
        view: "result",
        streamError: error instanceof Error ? error.message : String(error),
      });
    }
  }

  /** The what-if loop: pre-fill the form from a finished run. */
  rerun(entry: { markers: string[]; tissues: string[]; global: boolean; iterations: number }): void {
    this.stream?.close();
    this.update({
      view: "form",
      form: {
        markersText: entry.markers.join(", "),
        tissuesText: entry.tissues.join(", "),
        global: entry.global,
        iterations: entry.iterations,
        mode: this.state.form.mode,
      },
      formError: null,
      streamError: null,
    });
  }

  rerunCurrent(): void {
    const job = this.state.job;
    if (!job) return;
    this.rerun(job.request);
  }

  backToForm(): void {
    this.update({ view: "form", formError: null, streamError: null });
  }
}
