import { Api } from "./api.js";
import { renderAgentPanel } from "./agentPanel.js";
import { el } from "./dom.js";
import { renderTaskBoard } from "./taskBoard.js";
import { renderTimeline } from "./timeline.js";
import { renderWiki } from "./wiki.js";

type ViewName = "board" | "wiki" | "timeline" | "agent";

const VIEWS: { name: ViewName; label: string }[] = [
  { name: "board", label: "Task Board" },
  { name: "wiki", label: "Wiki" },
  { name: "timeline", label: "Timeline" },
  { name: "agent", label: "Agent" },
];

export function mountApp(root: HTMLElement, api: Api, pollMs = 1000): void {
  const nav = el("nav", { class: "tabs" });
  const view = el("main", { class: "view" });
  root.append(nav, view);

  const show = (name: ViewName): void => {
    for (const button of nav.querySelectorAll("button")) {
      button.classList.toggle("active", button.dataset.view === name);
    }
    if (name === "board") void renderTaskBoard(view, api);
    else if (name === "wiki") void renderWiki(view, api);
    else if (name === "timeline") void renderTimeline(view, api);
    else renderAgentPanel(view, api, pollMs);
  };

  for (const { name, label } of VIEWS) {
    const button = el("button", { "data-view": name }, [label]);
    button.addEventListener("click", () => show(name));
    nav.append(button);
  }
  show("board");
}

declare global {
  interface Window {
    deskagentApi?: Api;
  }
}

// Browser entry point; tests import mountApp and drive it directly.
if (typeof document !== "undefined" && document.getElementById("app")) {
  const api = new Api("");
  window.deskagentApi = api; // console access for debugging
  mountApp(document.getElementById("app") as HTMLElement, api);
}
