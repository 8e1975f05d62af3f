/** Application state machine: mirrors the service phases.
 *
 * GENERATING -> poll for the next query; AWAITING_ANSWER -> render and
 * wait for the human; CONVERGED -> learned-constraint browser;
 * COLLAPSED -> terminal banner. The session id lives in the URL hash so
 * a reload reattaches. A stale-query conflict triggers a refresh.
 */

import { ApiError, Client } from "./api.js";
import { RenderError, buildQueryView } from "./model.js";
import {
  renderBanner,
  renderLearned,
  renderQuery,
  renderStats,
} from "./render.js";
import { singleFlight } from "./debounce.js";
import { buildStatsView } from "./model.js";
import type { TensorInfo } from "./types.js";

export class App {
  private tensors: TensorInfo[] = [];
  private stopped = false;

  constructor(
    private readonly client: Client,
    private readonly root: HTMLElement,
    private readonly sessionId: string,
  ) {}

  stop(): void {
    this.stopped = true;
  }

  private show(...nodes: HTMLElement[]): void {
    this.root.replaceChildren(...nodes);
  }

  async run(): Promise<void> {
    const info = await this.client.getSession(this.sessionId);
    this.tensors = info.tensors;
    while (!this.stopped) {
      const phase = await this.step();
      if (phase === "CONVERGED" || phase === "COLLAPSED") return;
    }
  }

  /** One poll-render-answer round; returns the phase afterwards. */
  private async step(): Promise<string> {
    let payload;
    try {
      payload = await this.client.getQuery(this.sessionId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        return await this.renderTerminalOrWait();
      }
      throw err;
    }
    return await this.askHuman(payload);
  }

  private askHuman(payload: Awaited<ReturnType<Client["getQuery"]>>): Promise<string> {
    return new Promise((resolve, reject) => {
      const submit = singleFlight(async (yes: boolean) => {
        try {
          const res = await this.client.postAnswer(
            this.sessionId,
            payload.query_id,
            yes,
          );
          resolve(res.phase);
        } catch (err) {
          if (err instanceof ApiError && err.code === "STALE_QUERY") {
            resolve("GENERATING"); // refresh: poll the real pending query
          } else if (err instanceof ApiError) {
            this.show(
              renderBanner("error", `${err.code}: ${err.message}`),
            );
            resolve("GENERATING");
          } else {
            reject(err);
          }
        }
      });
      try {
        this.show(renderQuery(buildQueryView(payload, this.tensors), (yes) => {
          void submit(yes);
        }));
      } catch (err) {
        if (err instanceof RenderError) {
          this.show(renderBanner("render-error", err.message));
          reject(err);
        } else {
          reject(err);
        }
      }
    });
  }

  private async renderTerminalOrWait(): Promise<string> {
    const info = await this.client.getSession(this.sessionId);
    if (info.phase === "CONVERGED") {
      const learned = await this.client.getLearned(this.sessionId);
      this.show(
        renderBanner("success", "Converged — every remaining candidate is redundant."),
        renderLearned(learned),
        renderStats(buildStatsView(info.stats)),
      );
    } else if (info.phase === "COLLAPSED") {
      this.show(
        renderBanner(
          "error",
          `Collapsed: ${info.error ?? "the bias cannot represent the target"}`,
        ),
      );
    }
    return info.phase;
  }
}

export async function boot(root: HTMLElement, base = ""): Promise<void> {
  const client = new Client(base);
  let sessionId = window.location.hash.slice(1);
  if (!sessionId) {
    const created = await client.createSession({ builtin: "sudoku4", method: "count" });
    sessionId = created.id;
    window.location.hash = sessionId;
  }
  const app = new App(client, root, sessionId);
  await app.run();
}
