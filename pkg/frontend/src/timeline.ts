import { Api, ApiError } from "./api.js";
import { clear, el, notice, noticeSlot } from "./dom.js";
import type { TimelineEntry } from "./types.js";

function fmtDuration(ms: number): string {
  if (ms >= 3_600_000) return `${(ms / 3_600_000).toFixed(1)}h`;
  if (ms >= 60_000) return `${Math.round(ms / 60_000)}m`;
  return `${Math.round(ms / 1000)}s`;
}

/** Calendar of activity: one column per day, one chip per entry tag.
 * Clicking a chip drills down into the entry's summary and detail text. */
export async function renderTimeline(root: HTMLElement, api: Api): Promise<void> {
  clear(root);
  const detail = el("aside", { class: "timeline-detail hidden" });
  root.append(noticeSlot(), el("h2", {}, ["Timeline"]), detail);
  try {
    const entries = await api.listTimeline();
    const byDate = new Map<string, TimelineEntry[]>();
    for (const entry of entries) {
      byDate.set(entry.date, [...(byDate.get(entry.date) ?? []), entry]);
    }
    const grid = el("div", { class: "calendar" });
    for (const date of [...byDate.keys()].sort()) {
      const cell = el("div", { class: "day", "data-date": date }, [
        el("h4", {}, [date]),
      ]);
      for (const entry of byDate.get(date) ?? []) {
        const chip = el(
          "button",
          { class: "tag-chip", "data-entry": entry.id, "data-tag": entry.tag },
          [`${entry.tag} ${fmtDuration(entry.duration_ms)}`],
        );
        chip.addEventListener("click", () => {
          clear(detail);
          detail.classList.remove("hidden");
          detail.append(
            el("h3", {}, [`${entry.date} - ${entry.tag}`]),
            el("p", { class: "entry-summary" }, [entry.summary]),
            el("pre", { class: "entry-details" }, [entry.details || "(no details)"]),
            el("p", { class: "meta" }, [`duration ${fmtDuration(entry.duration_ms)}`]),
          );
        });
        cell.append(chip);
      }
      grid.append(cell);
    }
    root.append(grid);
    if (!entries.length) root.append(el("p", {}, ["No activity recorded yet."]));
  } catch (err) {
    notice(root, err instanceof ApiError ? err.message : String(err));
  }
}
