import { Api, ApiError } from "./api.js";
import { clear, el, notice, noticeSlot } from "./dom.js";
import type { Proposal, TaskItem } from "./types.js";

const STATUSES = ["not_started", "in_progress", "completed"];
const PRIORITIES = ["low", "medium", "high"];

function picker(current: string, options: string[], onPick: (v: string) => void): HTMLSelectElement {
  const select = el("select");
  for (const option of options) {
    const item = el("option", { value: option }, [option]);
    if (option === current) item.selected = true;
    select.append(item);
  }
  select.addEventListener("change", () => onPick(select.value));
  return select;
}

function applyArtifact(card: HTMLElement, artifact: Record<string, unknown>): void {
  const status = card.querySelector(".task-status");
  const priority = card.querySelector(".task-priority");
  const title = card.querySelector(".task-title");
  if (status && typeof artifact.status === "string") status.textContent = artifact.status;
  if (priority && typeof artifact.priority === "string") priority.textContent = artifact.priority;
  if (title && typeof artifact.title === "string") title.textContent = artifact.title;
}

function proposalBadge(
  root: HTMLElement,
  proposal: Proposal,
  api: Api,
  refresh: () => Promise<void>,
): HTMLElement {
  const badge = el("div", { class: "proposal", "data-proposal": proposal.id }, [
    el("span", { class: "badge" }, ["pending proposal"]),
    el("span", { class: "proposal-target" }, [
      proposal.target === "new" ? `new ${proposal.artifact_type}` : proposal.target,
    ]),
    el("p", { class: "rationale" }, [proposal.rationale]),
  ]);
  const approve = el("button", { class: "approve" }, ["Approve"]);
  const reject = el("button", { class: "reject" }, ["Reject"]);
  approve.addEventListener("click", async () => {
    try {
      const result = await api.decideProposal(proposal.id, true);
      if (result.artifact && typeof result.artifact.id === "string") {
        const card = root.querySelector<HTMLElement>(`[data-ref="${result.artifact.id}"]`);
        if (card) applyArtifact(card, result.artifact);
        else await refresh(); // a brand-new artifact needs a full redraw
      }
      badge.remove();
    } catch (err) {
      notice(root, err instanceof ApiError ? err.message : String(err));
    }
  });
  reject.addEventListener("click", async () => {
    try {
      await api.decideProposal(proposal.id, false);
      badge.remove(); // the card itself is intentionally untouched
    } catch (err) {
      notice(root, err instanceof ApiError ? err.message : String(err));
    }
  });
  badge.append(approve, reject);
  return badge;
}

function taskCard(task: TaskItem, api: Api, root: HTMLElement): HTMLElement {
  const card = el("article", { class: "card task-card", "data-ref": task.id }, [
    el("h3", { class: "task-title" }, [task.title]),
    el("p", {}, [task.description]),
    el("p", { class: "meta" }, [
      "status: ",
      el("span", { class: "task-status" }, [task.status]),
      "  priority: ",
      el("span", { class: "task-priority" }, [task.priority]),
      `  (${task.provenance})`,
    ]),
  ]);
  const controls = el("div", { class: "controls" });
  controls.append(
    picker(task.status, STATUSES, async (status) => {
      try {
        const updated = await api.patchTask(task.id, { status });
        applyArtifact(card, updated as unknown as Record<string, unknown>);
      } catch (err) {
        notice(root, err instanceof ApiError ? err.message : String(err));
      }
    }),
    picker(task.priority, PRIORITIES, async (priority) => {
      try {
        const updated = await api.patchTask(task.id, { priority });
        applyArtifact(card, updated as unknown as Record<string, unknown>);
      } catch (err) {
        notice(root, err instanceof ApiError ? err.message : String(err));
      }
    }),
  );
  card.append(controls);
  return card;
}

/** Task board: one card per task, plus every pending proposal that is not
 * wiki-typed (those appear on the wiki view) attached to its target card
 * or listed in the incoming section. */
export async function renderTaskBoard(root: HTMLElement, api: Api): Promise<void> {
  const refresh = () => renderTaskBoard(root, api);
  clear(root);
  root.append(noticeSlot(), el("h2", {}, ["Task Board"]));
  try {
    const [tasks, proposals] = await Promise.all([
      api.listTasks(),
      api.listProposals("pending"),
    ]);
    const list = el("div", { class: "cards" });
    const byTarget = new Map<string, Proposal[]>();
    const incoming: Proposal[] = [];
    for (const p of proposals) {
      if (p.artifact_type === "wiki") continue;
      if (p.target === "new") incoming.push(p);
      else byTarget.set(p.target, [...(byTarget.get(p.target) ?? []), p]);
    }
    for (const task of tasks) {
      const card = taskCard(task, api, root);
      for (const p of byTarget.get(task.id) ?? []) {
        card.append(proposalBadge(root, p, api, refresh));
      }
      list.append(card);
    }
    root.append(list);
    const orphans = [...byTarget.entries()].filter(
      ([target]) => !tasks.some((t) => t.id === target),
    );
    if (incoming.length || orphans.length) {
      const section = el("section", { class: "incoming" }, [
        el("h3", {}, ["Incoming proposals"]),
      ]);
      for (const p of incoming) section.append(proposalBadge(root, p, api, refresh));
      for (const [, group] of orphans) {
        for (const p of group) section.append(proposalBadge(root, p, api, refresh));
      }
      root.append(section);
    }
  } catch (err) {
    notice(root, err instanceof ApiError ? err.message : String(err));
  }
}
