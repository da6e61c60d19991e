import { Api, ApiError } from "./api.js";
import { clear, el, notice, noticeSlot } from "./dom.js";
import type { AgentRun } from "./types.js";

const TERMINAL = new Set(["success", "failure", "budget_exhausted", "error"]);

function actionLine(run: AgentRun, index: number): string {
  const step = run.steps[index];
  if (!step.action) return "(no parsed action)";
  const a = step.action;
  if (a.target_id !== null) return `${a.kind}(${a.target_id})`;
  if (a.argument !== null) return `${a.kind}(${JSON.stringify(a.argument)})`;
  return `${a.kind}()`;
}

function renderRun(feed: HTMLElement, run: AgentRun, onChoice: (i: number) => void): void {
  clear(feed);
  feed.append(
    el("p", { class: "run-status", "data-status": run.status }, [
      `run ${run.run_id}: ${run.status}`,
    ]),
  );
  const steps = el("ol", { class: "steps" });
  run.steps.forEach((step, i) => {
    steps.append(
      el("li", { class: "step" }, [
        el("code", {}, [actionLine(run, i)]),
        step.result_note ? ` - ${step.result_note}` : "",
        el("p", { class: "diff" }, [step.diff_from_prev]),
      ]),
    );
  });
  feed.append(steps);
  if (run.status === "awaiting_choice" && run.options) {
    const box = el("div", { class: "choices" }, [
      el("p", {}, ["The agent needs a decision:"]),
    ]);
    run.options.forEach((option, i) => {
      const button = el("button", { class: "choice", "data-index": String(i) }, [option]);
      button.addEventListener("click", () => onChoice(i));
      box.append(button);
    });
    feed.append(box);
  }
  if (run.answer !== null) {
    feed.append(el("p", { class: "answer" }, [`Answer: ${run.answer}`]));
  }
  if (run.error) {
    feed.append(el("p", { class: "run-error" }, [run.error]));
  }
}

/** Launch panel plus a live feed that polls the run once per second until
 * it reaches a terminal state; choice buttons appear while paused. */
export function renderAgentPanel(root: HTMLElement, api: Api, pollMs = 1000): void {
  clear(root);
  const taskInput = el("input", {
    class: "task-id",
    placeholder: "fixture task id, e.g. catalog-hardware-count",
  });
  const instruction = el("textarea", {
    class: "instruction",
    rows: "3",
    placeholder: "Optional instruction override",
  });
  const launch = el("button", { class: "launch" }, ["Run agent"]);
  const feed = el("div", { class: "run-feed" });
  root.append(
    noticeSlot(),
    el("h2", {}, ["Agent"]),
    el("div", { class: "launch-form" }, [taskInput, instruction, launch]),
    feed,
  );

  let timer: ReturnType<typeof setInterval> | null = null;

  const follow = (runId: string): void => {
    if (timer !== null) clearInterval(timer);
    const tick = async (): Promise<void> => {
      let run: AgentRun;
      try {
        run = await api.getRun(runId);
      } catch (err) {
        notice(root, err instanceof ApiError ? err.message : String(err));
        if (timer !== null) clearInterval(timer);
        return;
      }
      renderRun(feed, run, async (index) => {
        try {
          await api.submitChoice(runId, index);
          await tick(); // reflect the resumed state promptly
        } catch (err) {
          notice(root, err instanceof ApiError ? err.message : String(err));
        }
      });
      if (TERMINAL.has(run.status) && timer !== null) {
        clearInterval(timer);
        timer = null;
      }
    };
    timer = setInterval(tick, pollMs);
    void tick();
  };

  launch.addEventListener("click", async () => {
    notice(root, "", "info");
    const body: Record<string, unknown> = { task_id: taskInput.value.trim() };
    if (instruction.value.trim()) body.instruction = instruction.value.trim();
    try {
      const handle = await api.launchRun(body);
      follow(handle.run_id);
    } catch (err) {
      notice(root, err instanceof ApiError ? err.message : String(err));
    }
  });
}
