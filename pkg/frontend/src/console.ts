// Command console controller. Holds the interaction state machine
// (idle -> resolved | ambiguous | error) and knows how to follow up an
// ambiguous outcome with a uuid-direct command when the user clicks a
// candidate. DOM-free for testability.

import { ApiClient, ServiceError } from "./api.js";
import type { ActionPayload, Candidate, CommandOutcome } from "./types.js";

export type ConsoleView =
  | { phase: "idle" }
  | { phase: "resolved"; outcome: CommandOutcome; highlighted: string[] }
  | { phase: "ambiguous"; candidates: Candidate[]; action: ActionPayload; detail: string }
  | { phase: "error"; kind: string; detail: string };

export class CommandConsole {
  view: ConsoleView = { phase: "idle" };

  constructor(
    private api: ApiClient,
    private sessionId: string,
  ) {}

  async submit(text: string): Promise<ConsoleView> {
    try {
      const outcome = await this.api.sendCommand(this.sessionId, text);
      this.view = {
        phase: "resolved",
        outcome,
        highlighted: outcome.commands.map((c) => c.uuid),
      };
    } catch (err) {
      this.view = this.errorView(err);
    }
    return this.view;
  }

  // Candidate click from an ambiguous outcome: execute directly by uuid
  // with the action the resolver already parsed.
  async pickCandidate(candidate: Candidate): Promise<ConsoleView> {
    if (this.view.phase !== "ambiguous") return this.view;
    const action = this.view.action;
    try {
      const outcome = await this.api.sendDirectCommand(this.sessionId, candidate.uuid, action);
      this.view = { phase: "resolved", outcome, highlighted: [candidate.uuid] };
    } catch (err) {
      this.view = this.errorView(err);
    }
    return this.view;
  }

  private errorView(err: unknown): ConsoleView {
    if (err instanceof ServiceError) {
      if (err.kind === "ambiguous_target" && err.payload.candidates && err.payload.action) {
        return {
          phase: "ambiguous",
          candidates: err.payload.candidates,
          action: err.payload.action,
          detail: err.payload.detail,
        };
      }
      return { phase: "error", kind: err.kind, detail: err.payload.detail };
    }
    return { phase: "error", kind: "network", detail: String(err) };
  }
}
