import type { SessionState, SessionStore } from "./store.js";
import type { AssociationTable, JobEvent, TraceEntry } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function renderForm(state: SessionState, store: SessionStore): HTMLElement {
  const markers = el("textarea", {
    id: "markers-input",
    rows: "3",
    placeholder: "IL7R, TMSB10, CD4, ITGB1, LTB, TRAC, AQP3, LDHB, IL32, MAL",
  }) as HTMLTextAreaElement;
  markers.value = state.form.markersText;
  markers.addEventListener("input", () => store.setForm({ markersText: markers.value }));

  const tissues = el("input", {
    id: "tissues-input",
    type: "text",
    placeholder: "Blood, Peripheral blood",
  }) as HTMLInputElement;
  tissues.value = state.form.tissuesText;
  tissues.disabled = state.form.global;
  tissues.addEventListener("input", () => store.setForm({ tissuesText: tissues.value }));

  const globalToggle = el("input", { id: "global-toggle", type: "checkbox" }) as HTMLInputElement;
  globalToggle.checked = state.form.global;
  globalToggle.addEventListener("change", () => store.setForm({ global: globalToggle.checked }));

  const iterations = el("input", {
    id: "iterations-input",
    type: "number",
    min: "1",
    max: "25",
  }) as HTMLInputElement;
  iterations.value = String(state.form.iterations);
  iterations.addEventListener("input", () =>
    store.setForm({ iterations: Math.max(1, Number(iterations.value) || 1) }),
  );

  const submit = el("button", { id: "submit-button", type: "submit" }, ["Annotate"]);
  const form = el("form", { id: "annotate-form" }, [
    el("label", { for: "markers-input" }, ["Top differentially expressed markers"]),
    markers,
    el("label", { for: "tissues-input" }, ["Tissues (comma separated)"]),
    tissues,
    el("label", { class: "toggle-row", for: "global-toggle" }, [
      globalToggle,
      " Global query (no tissue constraint)",
    ]),
    el("label", { for: "iterations-input" }, ["Iterations"]),
    iterations,
    submit,
  ]);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void store.submit();
  });

  const children: (Node | string)[] = [form];
  if (state.formError) {
    children.push(el("p", { id: "form-error", class: "error", role: "alert" }, [state.formError]));
  }
  if (state.history.length) {
    children.push(renderHistory(state, store));
  }
  return el("section", { id: "view-form" }, children);
}

function renderHistory(state: SessionState, store: SessionStore): HTMLElement {
  const items = state.history.map((entry) => {
    const restore = el("button", { class: "history-restore", type: "button" }, ["Restore"]);
    restore.addEventListener("click", () => store.rerun(entry));
    return el("li", { class: "history-entry" }, [
      el("span", { class: "history-label" }, [entry.label]),
      el("span", { class: "history-markers" }, [entry.markers.join(", ")]),
      restore,
    ]);
  });
  return el("aside", { id: "history-panel" }, [
    el("h2", {}, ["Session history"]),
    el("ul", { id: "history-list" }, items),
  ]);
}

function renderEvent(event: JobEvent): HTMLElement {
  const scope = event.terminal ? "job" : `iteration ${event.iteration}`;
  return el(
    "li",
    {
      class: `event event-${event.status}`,
      "data-seq": String(event.seq),
      "data-task": event.task,
    },
    [
      el("span", { class: "event-seq" }, [`#${event.seq}`]),
      el("span", { class: "event-scope" }, [scope]),
      el("span", { class: "event-task" }, [event.task]),
      el("span", { class: "event-status" }, [event.status]),
      el("span", { class: "event-summary" }, [event.summary]),
    ],
  );
}

function renderProcessing(state: SessionState): HTMLElement {
  const children: (Node | string)[] = [
    el("h2", {}, ["Processing"]),
    el("p", { id: "processing-job" }, [`job ${state.activeJobId ?? ""}`]),
    el("ol", { id: "event-log" }, state.events.map(renderEvent)),
  ];
  if (state.streamError) {
    children.push(el("p", { class: "error" }, [state.streamError]));
  }
  return el("section", { id: "view-processing" }, children);
}

function renderEvidence(table: AssociationTable | null, idPrefix: string): HTMLElement {
  if (!table) {
    return el("p", { class: "evidence-empty" }, ["no evidence recorded"]);
  }
  const rows = Object.entries(table.rows).map(([marker, entities]) => {
    const chips = entities.length
      ? entities.map((entity) => el("span", { class: "chip" }, [entity]))
      : [el("span", { class: "chip chip-unknown" }, ["unknown"])];
    return el("li", { class: "evidence-row", "data-marker": marker }, [
      el("span", { class: "evidence-marker" }, [marker]),
      el("span", { class: "evidence-entities" }, chips),
    ]);
  });
  return el("ul", { class: "evidence", id: idPrefix }, rows);
}

function renderTrace(trace: TraceEntry): HTMLElement {
  const children: (Node | string)[] = [
    el("h4", {}, [`Iteration ${trace.iteration}`]),
  ];
  if (trace.graph_uninformed) {
    children.push(el("span", { class: "badge badge-uninformed" }, ["graph-uninformed"]));
  }
  children.push(
    el("h5", {}, ["Broad cell type evidence"]),
    renderEvidence(trace.broad_table, `broad-evidence-${trace.iteration}`),
    el("p", { class: "selection broad-selection" }, [
      "Selected broad type: ",
      el("strong", {}, [trace.broad_selection ?? "unanswered"]),
    ]),
    el("h5", {}, ["Feature/function evidence"]),
    renderEvidence(trace.feature_table, `feature-evidence-${trace.iteration}`),
    el("p", { class: "selection feature-selection" }, [
      "Selected features: ",
      el("strong", {}, [trace.feature_selection?.join(", ") ?? "unanswered"]),
    ]),
    el("p", { class: "iteration-label" }, ["Label: ", el("strong", {}, [trace.label])]),
  );
  for (const note of trace.notes) {
    children.push(el("p", { class: "trace-note" }, [note]));
  }
  return el("details", { class: "trace-entry", "data-iteration": String(trace.iteration) }, children);
}

function renderResult(state: SessionState, store: SessionStore): HTMLElement {
  const job = state.job;
  const children: (Node | string)[] = [el("h2", {}, ["Result"])];

  if (!job || job.state === "failed" || state.streamError) {
    const reason = job?.error ?? state.streamError ?? "unknown failure";
    const retry = el("button", { id: "retry-button", type: "button" }, ["Retry"]);
    retry.addEventListener("click", () => {
      if (job) {
        store.rerun(job.request);
      } else {
        store.backToForm();
      }
    });
    children.push(
      el("div", { id: "failure-panel", class: "error" }, [
        el("p", {}, [`Annotation failed: ${reason}`]),
        retry,
      ]),
    );
    return el("section", { id: "view-result" }, children);
  }

  const result = job.result!;
  const votes = Object.entries(result.votes)
    .sort((a, b) => b[1] - a[1])
    .map(([label, count]) =>
      el("li", { class: "vote-row" }, [`${count}/${job.request.iterations}  ${label}`]),
    );
  const rerun = el("button", { id: "rerun-button", type: "button" }, ["Re-run with changes"]);
  rerun.addEventListener("click", () => store.rerunCurrent());

  children.push(
    el("p", { id: "final-label" }, [el("strong", {}, [result.label])]),
    el("ul", { id: "vote-tally" }, votes),
    rerun,
    el("h3", {}, ["Reasoning trace"]),
    el("div", { id: "trace-panel" }, result.trace.map(renderTrace)),
    el("details", { id: "progress-details" }, [
      el("summary", {}, [`Progress log (${state.events.length} events)`]),
      el("ol", { id: "event-log" }, state.events.map(renderEvent)),
    ]),
  );
  return el("section", { id: "view-result" }, children);
}

/** Mount the console; re-renders the active view on every store update. */
export function mount(root: HTMLElement, store: SessionStore): void {
  const render = (state: SessionState) => {
    root.replaceChildren(
      el("h1", {}, ["Cell type annotation console"]),
      state.view === "form"
        ? renderForm(state, store)
        : state.view === "processing"
          ? renderProcessing(state)
          : renderResult(state, store),
    );
  };
  store.subscribe(render);
  render(store.getState());
}
