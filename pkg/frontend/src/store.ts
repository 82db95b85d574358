import { ApiError, type SessionApi } from "./api.js";
import {
  EMPTY_CART,
  type CartSnapshot,
  type ListViewRow,
  type Phase,
  type RoutePlan,
  type UnroutableGroup,
  type UserProfile,
} from "./types.js";

export type TranscriptEntry =
  | { kind: "user"; text: string; status: "pending" | "sent" | "failed" }
  | { kind: "assistant"; text: string };

export interface Banner {
  message: string;
  retryable: boolean;
  failedText: string | null;
}

export interface SessionView {
  sessionId: string | null;
  phase: Phase | null;
  transcript: TranscriptEntry[];
  currentList: ListViewRow[];
  cart: CartSnapshot;
  route: RoutePlan | null;
  finalTotalCents: number | null;
  unroutable: UnroutableGroup[];
  pending: boolean;
  banner: Banner | null;
}

function initialView(): SessionView {
  return {
    sessionId: null,
    phase: null,
    transcript: [],
    currentList: [],
    cart: EMPTY_CART,
    route: null,
    finalTotalCents: null,
    unroutable: [],
    pending: false,
    banner: null,
  };
}

/**
 * Client-side session state. Every product fact, cart amount, and phase
 * comes from server responses; this store only accumulates them. One turn
 * may be in flight at a time, mirroring the server's per-session
 * serialization.
 */
export class SessionStore {
  readonly view: SessionView = initialView();
  private listeners: Array<(view: SessionView) => void> = [];

  constructor(private readonly api: SessionApi) {}

  subscribe(listener: (view: SessionView) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.view);
  }

  async start(profile: UserProfile): Promise<void> {
    this.view.sessionId = await this.api.createSession(profile);
    this.view.phase = "awaiting_query"; // the server's documented initial phase
    this.emit();
  }

  get canSend(): boolean {
    return this.view.sessionId !== null && !this.view.pending && this.view.phase !== "finalized";
  }

  get canApprove(): boolean {
    return this.canSend && this.view.cart.lines.length > 0;
  }

  async sendTurn(text: string): Promise<void> {
    if (!this.canSend || !text.trim()) return;
    const bubble: TranscriptEntry = { kind: "user", text, status: "pending" };
    this.view.transcript.push(bubble);
    this.view.pending = true;
    this.view.banner = null;
    this.emit();
    try {
      const turn = await this.api.postMessage(this.view.sessionId!, text);
      bubble.status = "sent";
      this.view.transcript.push({ kind: "assistant", text: turn.text });
      this.view.cart = turn.cart;
      this.view.phase = turn.phase_after;
      if (turn.list_view !== null) {
        this.view.currentList = turn.list_view;
      }
    } catch (err) {
      bubble.status = "failed";
      const apiError = err instanceof ApiError ? err : new ApiError("unknown", String(err), false, 0);
      this.view.banner = {
        message: apiError.message,
        retryable: apiError.retryable,
        failedText: apiError.retryable ? text : null,
      };
    } finally {
      this.view.pending = false;
      this.emit();
    }
  }

  /** Re-send the turn a retryable error interrupted. */
  async retry(): Promise<void> {
    const failed = this.view.banner?.failedText;
    if (!failed) return;
    // drop the failed bubble; sendTurn pushes a fresh one
    const index = this.view.transcript.findIndex(
      (entry) => entry.kind === "user" && entry.status === "failed" && entry.text === failed,
    );
    if (index >= 0) this.view.transcript.splice(index, 1);
    this.view.banner = null;
    await this.sendTurn(failed);
  }

  /** Cart edits travel as ordinary modification turns. */
  removeItem(name: string): Promise<void> {
    return this.sendTurn(`Remove the ${name} from my list`);
  }

  setQuantity(name: string, qty: number): Promise<void> {
    if (qty < 1) return this.removeItem(name);
    return this.sendTurn(`Set the ${name} to ${qty}`);
  }

  async approve(): Promise<void> {
    if (!this.canApprove) return;
    this.view.pending = true;
    this.view.banner = null;
    this.emit();
    try {
      const body = await this.api.approve(this.view.sessionId!);
      this.view.route = body.route_plan;
      this.view.finalTotalCents = body.final_list.total_cents;
      this.view.unroutable = body.unroutable;
      this.view.phase = "finalized";
      this.view.cart = { ...this.view.cart, approved: true };
    } catch (err) {
      const apiError = err instanceof ApiError ? err : new ApiError("unknown", String(err), false, 0);
      this.view.banner = { message: apiError.message, retryable: apiError.retryable, failedText: null };
    } finally {
      this.view.pending = false;
      this.emit();
    }
  }
}
