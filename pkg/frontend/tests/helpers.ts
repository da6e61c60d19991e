import { type ChildProcess, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const HERE = dirname(fileURLToPath(import.meta.url));

export interface Backend {
  base: string;
  stop: () => void;
}

export async function startBackend(port: number): Promise<Backend> {
  const proc: ChildProcess = spawn(
    "python3",
    [join(HERE, "server.py"), String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  proc.stderr?.on("data", (chunk: Buffer) => {
    stderr += chunk.toString();
  });
  const base = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (proc.exitCode !== null) {
      throw new Error(`backend exited early: ${stderr}`);
    }
    try {
      const resp = await fetch(`${base}/tasks`);
      if (resp.ok) {
        return { base, stop: () => proc.kill() };
      }
    } catch {
      // not listening yet
    }
    await sleep(100);
  }
  proc.kill();
  throw new Error(`backend never came up: ${stderr}`);
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function until(
  probe: () => boolean,
  timeoutMs = 10_000,
  stepMs = 50,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (probe()) return;
    await sleep(stepMs);
  }
  throw new Error("condition never became true");
}

/** Endpoint patterns lifted from the API reference; the network assertion
 * checks every observed call against these. */
export function documentedEndpoints(): { method: string; pattern: RegExp }[] {
  const text = readFileSync(join(HERE, "..", "..", "docs", "api.md"), "utf-8");
  const out: { method: string; pattern: RegExp }[] = [];
  for (const match of text.matchAll(/`(GET|POST|PATCH) (\/[^`\s?]*)/g)) {
    const raw = match[2];
    const pattern = raw
      .replace(/[.*+^${}()|[\]\\]/g, "\\$&")
      .replace(/\\\{[a-z_]+\\\}/g, "[^/]+");
    out.push({ method: match[1], pattern: new RegExp(`^${pattern}$`) });
  }
  if (!out.length) throw new Error("no endpoints parsed from docs/api.md");
  return out;
}
