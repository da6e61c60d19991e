import { Api, ApiError } from "./api.js";
import { clear, el, notice, noticeSlot } from "./dom.js";
import type { Proposal, WikiPage } from "./types.js";

function pageCard(page: WikiPage, api: Api, root: HTMLElement): HTMLElement {
  const card = el("article", { class: "card wiki-card", "data-ref": page.id }, [
    el("h3", { class: "wiki-title" }, [page.title]),
    el("span", { class: "format-tag", "data-format": page.format ?? "" }, [
      page.format ? `format: ${page.format}` : "unformatted",
    ]),
    el("p", { class: "meta" }, [
      page.tags.length ? `tags: ${page.tags.join(", ")}` : "no tags",
      `  (${page.provenance})`,
    ]),
  ]);
  const body = el("textarea", { class: "wiki-body", rows: "8" });
  body.value = page.body;
  const save = el("button", { class: "save" }, ["Save"]);
  save.addEventListener("click", async () => {
    try {
      await api.patchWiki(page.id, { body: body.value });
      notice(root, `saved ${page.id}`, "info");
    } catch (err) {
      notice(root, err instanceof ApiError ? err.message : String(err));
    }
  });
  card.append(body, save);
  return card;
}

function wikiProposal(p: Proposal, api: Api, root: HTMLElement): HTMLElement {
  const draft = p.change.artifact ?? {};
  const box = el("div", { class: "proposal", "data-proposal": p.id }, [
    el("span", { class: "badge" }, ["pending proposal"]),
    el("strong", {}, [typeof draft.title === "string" ? draft.title : p.target]),
    el("p", { class: "rationale" }, [p.rationale]),
  ]);
  if (typeof draft.body === "string") {
    box.append(el("pre", { class: "draft-body" }, [draft.body]));
  }
  const approve = el("button", { class: "approve" }, ["Approve"]);
  const reject = el("button", { class: "reject" }, ["Reject"]);
  approve.addEventListener("click", async () => {
    try {
      await api.decideProposal(p.id, true);
      await renderWiki(root, api); // the new page should appear immediately
    } catch (err) {
      notice(root, err instanceof ApiError ? err.message : String(err));
    }
  });
  reject.addEventListener("click", async () => {
    try {
      await api.decideProposal(p.id, false);
      box.remove();
    } catch (err) {
      notice(root, err instanceof ApiError ? err.message : String(err));
    }
  });
  box.append(approve, reject);
  return box;
}

export async function renderWiki(root: HTMLElement, api: Api): Promise<void> {
  clear(root);
  root.append(noticeSlot(), el("h2", {}, ["Wiki"]));
  try {
    const [pages, proposals] = await Promise.all([
      api.listWiki(),
      api.listProposals("pending"),
    ]);
    const list = el("div", { class: "cards" });
    for (const page of pages) list.append(pageCard(page, api, root));
    root.append(list);
    const drafts = proposals.filter((p) => p.artifact_type === "wiki");
    if (drafts.length) {
      const section = el("section", { class: "incoming" }, [
        el("h3", {}, ["Proposed pages"]),
      ]);
      for (const p of drafts) section.append(wikiProposal(p, api, root));
      root.append(section);
    }
  } catch (err) {
    notice(root, err instanceof ApiError ? err.message : String(err));
  }
}
