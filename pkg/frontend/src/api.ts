import type { AnnotateBody, JobEvent, JobPayload } from "./types.js";

export interface StreamHandlers {
  onEvent: (event: JobEvent) => void;
  /** Called once, after the terminal event has been delivered. */
  onClose: () => void;
  onError?: (message: string) => void;
}

export interface StreamHandle {
  close: () => void;
}

/** The one seam between the UI and the service; tests substitute a replay. */
export interface ApiClient {
  submitAnnotation(body: AnnotateBody): Promise<string>;
  getJob(jobId: string): Promise<JobPayload>;
  streamEvents(jobId: string, handlers: StreamHandlers): StreamHandle;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

/** fetch + EventSource against the live service. */
export class HttpApiClient implements ApiClient {
  constructor(private readonly base: string = "") {}

  async submitAnnotation(body: AnnotateBody): Promise<string> {
    const response = await fetch(`${this.base}/api/annotate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    const payload = await response.json();
    return payload.job_id as string;
  }

  async getJob(jobId: string): Promise<JobPayload> {
    const response = await fetch(`${this.base}/api/jobs/${jobId}`);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as JobPayload;
  }

  streamEvents(jobId: string, handlers: StreamHandlers): StreamHandle {
    const source = new EventSource(`${this.base}/api/jobs/${jobId}/events`);
    const deliver = (raw: MessageEvent) => {
      try {
        handlers.onEvent(JSON.parse(raw.data) as JobEvent);
      } catch {
        // malformed frame: ignore, the seq guard keeps ordering intact
      }
    };
    source.addEventListener("progress", deliver);
    source.addEventListener("terminal", (raw) => {
      deliver(raw as MessageEvent);
      source.close();
      handlers.onClose();
    });
    source.onerror = () => {
      // EventSource auto-reconnects; the server replays from seq 1 and the
      // store drops duplicates. Only report when the stream is fully dead.
      if (source.readyState === EventSource.CLOSED) {
        handlers.onError?.("event stream closed unexpectedly");
      }
    };
    return { close: () => source.close() };
  }
}

/** Replays a recorded job (fixture) without any network. */
export class RecordedApiClient implements ApiClient {
  readonly submissions: AnnotateBody[] = [];

  constructor(
    private readonly job: JobPayload,
    private readonly events: JobEvent[],
  ) {}

  async submitAnnotation(body: AnnotateBody): Promise<string> {
    this.submissions.push(body);
    return this.job.job_id;
  }

  async getJob(): Promise<JobPayload> {
    return this.job;
  }

  streamEvents(_jobId: string, handlers: StreamHandlers): StreamHandle {
    let closed = false;
    queueMicrotask(() => {
      for (const event of this.events) {
        if (closed) return;
        handlers.onEvent(event);
      }
      handlers.onClose();
    });
    return {
      close: () => {
        closed = true;
      },
    };
  }
}
