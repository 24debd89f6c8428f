// Typed client for the anchorline service. All domain state flows through
// these endpoints; the UI never touches stores directly.

import type {
  EventMsg,
  ExecutionSummary,
  GridDoc,
  MissionDoc,
  MissionSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, body.error ?? "Error", body.detail ?? "");
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async getMap(): Promise<GridDoc> {
    return expectJson(await fetch(this.url("/map")));
  }

  async listMissions(): Promise<MissionSummary[]> {
    return expectJson(await fetch(this.url("/missions")));
  }

  async getMission(id: string): Promise<MissionDoc> {
    return expectJson(await fetch(this.url(`/missions/${id}`)));
  }

  async putMission(doc: MissionDoc): Promise<void> {
    await expectJson(
      await fetch(this.url(`/missions/${doc.id}`), {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(doc),
      }),
    );
  }

  async deleteMission(id: string): Promise<void> {
    await expectJson(await fetch(this.url(`/missions/${id}`), { method: "DELETE" }));
  }

  async startExecution(missionId: string | null): Promise<string> {
    const body = await expectJson<{ execution_id: string }>(
      await fetch(this.url("/executions"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ mission_id: missionId }),
      }),
    );
    return body.execution_id;
  }

  async getExecution(id: string): Promise<ExecutionSummary> {
    return expectJson(await fetch(this.url(`/executions/${id}`)));
  }

  async resolveBranch(id: string, node: string, order: number): Promise<void> {
    await expectJson(
      await fetch(this.url(`/executions/${id}/branch`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ node, order }),
      }),
    );
  }

  async preempt(id: string): Promise<void> {
    await expectJson(
      await fetch(this.url(`/executions/${id}/preempt`), { method: "POST" }),
    );
  }

  async sendGoal(id: string, x: number, y: number, yaw = 0): Promise<void> {
    await expectJson(
      await fetch(this.url(`/executions/${id}/command`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ kind: "goal", x, y, yaw }),
      }),
    );
  }

  /**
   * Subscribe to an execution's event stream. Resumes with ?from= after
   * drops, so the handler never sees a duplicate or a gap. Returns a stop
   * function.
   */
  streamEvents(
    id: string,
    onEvent: (event: EventMsg) => void,
    onEnd?: () => void,
  ): () => void {
    let stopped = false;
    let lastSeq = -1;

    const run = async () => {
      const { LineSplitter } = await import("./events.js");
      while (!stopped) {
        try {
          const response = await fetch(
            this.url(`/executions/${id}/events?from=${lastSeq + 1}`),
          );
          if (!response.ok || !response.body) break;
          const reader = response.body.getReader();
          const decoder = new TextDecoder();
          const splitter = new LineSplitter();
          while (!stopped) {
            const { value, done } = await reader.read();
            if (done) {
              // server closes the stream once the execution is terminal
              stopped = true;
              break;
            }
            for (const event of splitter.push(decoder.decode(value, { stream: true }))) {
              if (event.seq > lastSeq) {
                lastSeq = event.seq;
                onEvent(event);
              }
            }
          }
        } catch {
          // dropped connection: loop and resume from lastSeq + 1
          await new Promise((resolve) => setTimeout(resolve, 300));
        }
      }
      onEnd?.();
    };
    void run();
    return () => {
      stopped = true;
    };
  }
}
