// Entry point: the whole client state is the session id in the URL
// hash. Reloading anywhere re-renders from GET /next.

import { ApiClient } from "./api.js";
import { renderScreen } from "./screens.js";

function sessionIdFromHash(): string | null {
  const match = window.location.hash.match(/sid=([\w-]+)/);
  return match ? match[1]! : null;
}

async function runSession(client: ApiClient, sessionId: string, root: HTMLElement): Promise<void> {
  const refresh = async (): Promise<void> => {
    const screen = await client.next(sessionId);
    renderScreen(screen, root, { client, sessionId, refresh });
  };
  await refresh();
}

function renderLobby(client: ApiClient, root: HTMLElement): void {
  root.replaceChildren();
  const section = document.createElement("section");
  section.className = "lobby";
  section.innerHTML = `
    <h2>Start a session</h2>
    <label>Task
      <select id="task">
        <option value="income">income</option>
        <option value="credit">credit</option>
      </select>
    </label>
    <label>Condition
      <select id="condition">
        <option value="">assigned at random</option>
        <option value="fair_machine_guidance">fair machine guidance</option>
        <option value="bias_feedback">bias feedback</option>
      </select>
    </label>
    <button class="primary" id="start">Start</button>
  `;
  root.appendChild(section);
  section.querySelector<HTMLButtonElement>("#start")!.addEventListener("click", () => {
    const task = section.querySelector<HTMLSelectElement>("#task")!.value;
    const condition = section.querySelector<HTMLSelectElement>("#condition")!.value;
    void client
      .createSession(task, condition || undefined)
      .then((snapshot) => {
        window.location.hash = `sid=${snapshot.session_id}`;
        void runSession(client, snapshot.session_id, root);
      })
      .catch((err) => {
        const banner = document.createElement("div");
        banner.className = "error-banner";
        banner.textContent = String(err);
        root.prepend(banner);
      });
  });
}

export function boot(baseUrl: string): void {
  const client = new ApiClient(baseUrl);
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const sessionId = sessionIdFromHash();
  if (sessionId) {
    void runSession(client, sessionId, root);
  } else {
    renderLobby(client, root);
  }
  window.addEventListener("hashchange", () => {
    const sid = sessionIdFromHash();
    if (sid) void runSession(client, sid, root);
    else renderLobby(client, root);
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(window.location.origin.replace(/:\d+$/, ":8000"));
}
