// DOM wiring: the only module that touches the document. Renders the
// overview, inspection panels, and the hyper-parameter form from the store
// state; all numbers displayed come from backend payloads.

import { StudioClient } from "./api.js";
import { buildInspectionViewModel, makeScrubber, renderTimeseries } from "./fields.js";
import {
  FIELD_SPECS,
  editField,
  canSubmit,
  makeFormState,
  FormState,
} from "./hyperform.js";
import { buildOverviewViewModel, renderOverview } from "./overview.js";
import { StudioStore } from "./state.js";
import { formatNumber } from "./scales.js";

const TABS: { id: "state" | "control"; label: string }[] = [
  { id: "state", label: "State prior" },
  { id: "control", label: "Control sensitivity" },
];

export function mountStudio(root: HTMLElement, baseUrl = ""): StudioStore {
  const client = new StudioClient(baseUrl);
  const store = new StudioStore(client);
  let form: FormState | null = null;

  root.innerHTML = `
    <header>
      <h1>discrepancy sample studio</h1>
      <form id="session-form">
        <select id="problem">
          <option value="stationary-1d">stationary-1d</option>
          <option value="transient-1d">transient-1d</option>
          <option value="stationary-2d">stationary-2d</option>
        </select>
        <input id="n-space" type="number" value="33" min="3"/>
        <button type="submit">new session</button>
      </form>
    </header>
    <nav id="tabs"></nav>
    <div id="error" class="error" hidden></div>
    <main>
      <section id="overview"></section>
      <aside>
        <div id="hyper-form"></div>
        <button id="resample" disabled>resample</button>
        <button id="timeseries" hidden>time series</button>
        <div id="inspection"></div>
      </aside>
    </main>`;

  const overviewEl = root.querySelector<HTMLElement>("#overview")!;
  const inspectionEl = root.querySelector<HTMLElement>("#inspection")!;
  const formEl = root.querySelector<HTMLElement>("#hyper-form")!;
  const errorEl = root.querySelector<HTMLElement>("#error")!;
  const tabsEl = root.querySelector<HTMLElement>("#tabs")!;
  const resampleBtn = root.querySelector<HTMLButtonElement>("#resample")!;
  const timeseriesBtn = root.querySelector<HTMLButtonElement>("#timeseries")!;
  let timeIndex = 0;

  function renderTabs(): void {
    tabsEl.innerHTML = TABS.map(
      (t) =>
        `<button data-view="${t.id}" class="${
          store.state.view === t.id ? "active" : ""
        }">${t.label}</button>`,
    ).join("");
  }

  function renderFormPanel(): void {
    if (store.state.hyper === null) {
      formEl.innerHTML = "<em>create a session to edit hyper-parameters</em>";
      return;
    }
    if (form === null) form = makeFormState(store.state.hyper);
    const disabled = store.state.pending ? "disabled" : "";
    const rows = FIELD_SPECS.map((spec) => {
      const issue = form!.issues.find((x) => x.key === spec.key);
      const current = (store.state.hyper as unknown as Record<string, number>)[spec.key];
      return `
        <label>${spec.label} <small>(${spec.key})</small>
          <input data-key="${spec.key}" value="${formatNumber(current)}" ${disabled}/>
          ${issue ? `<span class="issue">${issue.message}</span>` : ""}
        </label>`;
    }).join("");
    formEl.innerHTML = `
      <form id="patch-form">${rows}
        <button type="submit" ${canSubmit(form) && !store.state.pending ? "" : "disabled"}>
          apply + resample
        </button>
      </form>`;
  }

  function renderAll(): void {
    renderTabs();
    renderFormPanel();
    errorEl.hidden = store.state.error === null;
    errorEl.textContent = store.state.error ?? "";
    resampleBtn.disabled = store.state.pending || store.state.sessionId === null;
    timeseriesBtn.hidden = store.state.problem !== "transient-1d";
    timeseriesBtn.disabled = store.state.pending;
    const vm = buildOverviewViewModel(store.state.overview, store.state.selection);
    overviewEl.innerHTML = renderOverview(vm);
    if (store.state.record !== null) {
      const record = store.state.record;
      const transient = Array.isArray(record.diff_field.values[0]);
      if (!transient) timeIndex = 0;
      const ivm = buildInspectionViewModel(record, store.state.view, true, timeIndex);
      let scrubber = "";
      if (transient) {
        const steps = makeScrubber(record.diff_field).nSteps;
        scrubber =
          `<label>time step <input id="scrubber" type="range" min="0" ` +
          `max="${steps - 1}" step="1" value="${timeIndex}"/> ` +
          `<span>${timeIndex + 1}/${steps}</span></label>`;
      }
      inspectionEl.innerHTML =
        scrubber +
        ivm.panels.map((p) => p.svg).join("") +
        `<dl class="metrics">` +
        Object.entries(ivm.metrics)
          .map(([k, v]) => `<dt>${k}</dt><dd>${formatNumber(v)}</dd>`)
          .join("") +
        `</dl>`;
    } else if (store.state.timeseries !== null) {
      inspectionEl.innerHTML = renderTimeseries(store.state.timeseries);
    } else {
      inspectionEl.innerHTML = "<em>click a point to inspect</em>";
    }
  }

  store.subscribe(renderAll);

  root.querySelector<HTMLFormElement>("#session-form")!.addEventListener(
    "submit",
    (ev) => {
      ev.preventDefault();
      const problem = root.querySelector<HTMLSelectElement>("#problem")!.value;
      const nSpace = Number(root.querySelector<HTMLInputElement>("#n-space")!.value);
      form = null;
      void store
        .createSession({ problem, n_space: nSpace, regularization: 1e-4, seed: 0 })
        .then(() => store.resample());
    },
  );

  tabsEl.addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest("button[data-view]");
    if (btn) void store.switchView(btn.getAttribute("data-view") as "state" | "control");
  });

  resampleBtn.addEventListener("click", () => void store.resample());
  timeseriesBtn.addEventListener("click", () => void store.loadTimeseries());

  inspectionEl.addEventListener("input", (ev) => {
    const input = ev.target as HTMLInputElement;
    if (input.id === "scrubber") {
      timeIndex = Number(input.value);
      renderAll();
    }
  });

  overviewEl.addEventListener("click", (ev) => {
    const el = ev.target as Element;
    if (el.getAttribute("data-action") === "resample") {
      void store.resample();
      return;
    }
    const i = el.getAttribute("data-i");
    const k = el.getAttribute("data-k");
    if (i !== null && k !== null) void store.select(Number(i), Number(k));
  });

  formEl.addEventListener("input", (ev) => {
    const input = ev.target as HTMLInputElement;
    const key = input.getAttribute("data-key");
    if (key && form) {
      form = editField(form, key, input.value);
      renderFormPanel();
    }
  });

  formEl.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (form && canSubmit(form)) {
      const edited = form.edited;
      form = null;
      void store.applyHyperParams(edited);
    }
  });

  renderAll();
  return store;
}

declare global {
  interface Window {
    discalStudio?: StudioStore;
  }
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    window.discalStudio = mountStudio(root);
  }
}
