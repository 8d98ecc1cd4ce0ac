// Entry point: wires the store, the API client, the event stream and
// the DOM together. Status is polled every 500 ms as the source of
// truth; the SSE feed is push-only garnish on top.

import { ApiError, OperatorApi } from "./api.js";
import { EventStream } from "./sse.js";
import { ConsoleStore } from "./store.js";
import { grabElements, render } from "./view.js";

const POLL_MS = 500;

function apiBase(): string {
  const fromQuery = new URLSearchParams(location.search).get("api");
  if (fromQuery) return fromQuery;
  if (location.protocol.startsWith("http")) return location.origin;
  return "http://127.0.0.1:8765";
}

function main(): void {
  const base = apiBase();
  const api = new OperatorApi(base);
  const store = new ConsoleStore();
  const els = grabElements(document);

  store.subscribe((state) => render(state, els));

  const poll = async (): Promise<void> => {
    try {
      store.setStatus(await api.status());
    } catch (err) {
      store.setStatusError(err instanceof Error ? err.message : String(err));
    }
  };
  void poll();
  setInterval(() => void poll(), POLL_MS);

  const stream = new EventStream(`${base}/events`, {
    onLine: (line) => store.pushWireLine(line),
    onState: (s) => store.setConnection(s),
  });
  stream.start();

  const form = document.getElementById("submit-form") as HTMLFormElement;
  const nameInput = document.getElementById("task-name") as HTMLInputElement;
  const priorityInput = document.getElementById("task-priority") as HTMLInputElement;

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const task_name = nameInput.value.trim();
    const priority = priorityInput.value === "" ? undefined : Number(priorityInput.value);
    void api
      .submitTask(priority === undefined ? { task_name } : { task_name, priority })
      .then((result) => store.applySubmit(result))
      .catch((err) => {
        if (err instanceof ApiError) {
          store.setToast(err.message);
        } else {
          store.setToast(String(err));
        }
      });
  });

  const cancel = document.getElementById("cancel-current") as HTMLButtonElement;
  cancel.addEventListener("click", () => {
    void api
      .cancelCurrent()
      .then((outcome) => store.applyCancel(outcome))
      .catch((err) => store.setToast(err instanceof Error ? err.message : String(err)));
  });
}

main();
