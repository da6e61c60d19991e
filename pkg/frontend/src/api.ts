import type {
  AgentRun,
  DecisionResult,
  Proposal,
  RunHandle,
  RunListing,
  TaskItem,
  TimelineEntry,
  WikiPage,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

export interface NetworkCall {
  method: string;
  path: string;
}

/** Thin typed client; every request funnels through one fetch call so the
 * network surface can be observed (and asserted) in one place. */
export class Api {
  readonly calls: NetworkCall[] = [];

  constructor(private readonly base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.calls.push({ method, path });
    const resp = await fetch(this.base + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const parsed = (await resp.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  listTasks(): Promise<TaskItem[]> {
    return this.request("GET", "/tasks");
  }

  createTask(fields: Partial<TaskItem>): Promise<TaskItem> {
    return this.request("POST", "/tasks", fields);
  }

  patchTask(id: string, fields: Partial<TaskItem>): Promise<TaskItem> {
    return this.request("PATCH", `/tasks/${id}`, fields);
  }

  listWiki(): Promise<WikiPage[]> {
    return this.request("GET", "/wiki");
  }

  patchWiki(id: string, fields: Partial<WikiPage>): Promise<WikiPage> {
    return this.request("PATCH", `/wiki/${id}`, fields);
  }

  listTimeline(): Promise<TimelineEntry[]> {
    return this.request("GET", "/timeline");
  }

  listProposals(status?: string): Promise<Proposal[]> {
    const q = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.request("GET", `/proposals${q}`);
  }

  decideProposal(id: string, approve: boolean): Promise<DecisionResult> {
    return this.request("POST", `/proposals/${id}/decision`, { approve });
  }

  launchRun(body: Record<string, unknown>): Promise<RunHandle> {
    return this.request("POST", "/agent/runs", body);
  }

  listRuns(): Promise<RunListing[]> {
    return this.request("GET", "/agent/runs");
  }

  getRun(id: string): Promise<AgentRun> {
    return this.request("GET", `/agent/runs/${id}`);
  }

  submitChoice(id: string, index: number): Promise<RunHandle> {
    return this.request("POST", `/agent/runs/${id}/choice`, { index });
  }
}
