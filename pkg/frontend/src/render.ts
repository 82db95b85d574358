import type { SessionView } from "./store.js";
import type { CartSnapshot, ListViewRow, RoutePlan, UnroutableGroup } from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Minor units to a display amount; never does arithmetic beyond splitting. */
export function formatCents(cents: number): string {
  const sign = cents < 0 ? "-" : "";
  const abs = Math.abs(cents);
  const whole = Math.floor(abs / 100);
  const minor = String(abs % 100).padStart(2, "0");
  return `${sign}€${whole}.${minor}`;
}

export function formatMeters(meters: number): string {
  return `${meters.toFixed(2)} m`;
}

const PHASE_LABELS: Record<string, string> = {
  awaiting_query: "ready",
  high_dialogue: "clarifying",
  list_review: "reviewing list",
  finalized: "finalized",
};

export function renderPhase(phase: string | null): string {
  const label = phase === null ? "connecting" : PHASE_LABELS[phase] ?? phase;
  return `<span class="phase phase-${escapeHtml(phase ?? "none")}">${escapeHtml(label)}</span>`;
}

export function renderTranscript(view: SessionView): string {
  const bubbles = view.transcript.map((entry) => {
    if (entry.kind === "assistant") {
      return `<div class="bubble assistant">${escapeHtml(entry.text)}</div>`;
    }
    return `<div class="bubble user ${entry.status}">${escapeHtml(entry.text)}</div>`;
  });
  if (view.pending) {
    bubbles.push('<div class="bubble assistant thinking">…</div>');
  }
  return `<div class="transcript">${bubbles.join("")}</div>`;
}

export function renderBanner(view: SessionView): string {
  if (!view.banner) return "";
  const retry = view.banner.retryable
    ? '<button type="button" data-action="retry">Retry</button>'
    : "";
  return `<div class="banner error">${escapeHtml(view.banner.message)} ${retry}</div>`;
}

export function renderListTable(rows: ListViewRow[]): string {
  if (rows.length === 0) return '<p class="empty">No tailored list yet.</p>';
  const body = rows
    .map(
      (row) => `<tr>
<td>${escapeHtml(row.name)}</td>
<td>${escapeHtml(row.brand)}</td>
<td class="num">${formatCents(row.price_cents)}</td>
<td>${escapeHtml(row.shelf_id)}</td>
<td class="reason">${escapeHtml(row.reason)}</td>
</tr>`,
    )
    .join("");
  return `<table class="list-table">
<thead><tr><th>Name</th><th>Brand</th><th>Price</th><th>Shelf</th><th>Why</th></tr></thead>
<tbody>${body}</tbody>
</table>`;
}

export function renderCart(cart: CartSnapshot, editable: boolean): string {
  if (cart.lines.length === 0) {
    return '<p class="empty">Cart is empty.</p>';
  }
  const rows = cart.lines
    .map((line) => {
      const name = escapeHtml(line.name);
      const stepper = editable
        ? `<button type="button" data-action="qty" data-name="${name}" data-qty="${line.qty - 1}">−</button>
<span class="qty">${line.qty}</span>
<button type="button" data-action="qty" data-name="${name}" data-qty="${line.qty + 1}">+</button>
<button type="button" data-action="remove" data-name="${name}">remove</button>`
        : `<span class="qty">${line.qty}</span>`;
      return `<tr>
<td>${name}</td>
<td class="num">${formatCents(line.price_cents)}</td>
<td class="stepper">${stepper}</td>
<td class="num">${formatCents(line.line_total_cents)}</td>
</tr>`;
    })
    .join("");
  return `<table class="cart-table">
<thead><tr><th>Item</th><th>Each</th><th>Qty</th><th>Total</th></tr></thead>
<tbody>${rows}</tbody>
<tfoot><tr><td colspan="3">Running total</td><td class="num total">${formatCents(cart.total_cents)}</td></tr></tfoot>
</table>`;
}

export function renderApproveButton(view: SessionView): string {
  const enabled = view.sessionId !== null && !view.pending
    && view.phase !== "finalized" && view.cart.lines.length > 0;
  return `<button type="button" data-action="approve" ${enabled ? "" : "disabled"}>Approve list</button>`;
}

export function renderRouteSketch(route: RoutePlan): string {
  if (route.waypoints.length === 0) return "";
  const xs = route.waypoints.map((w) => w.x);
  const ys = route.waypoints.map((w) => w.y);
  const pad = 1.5;
  const minX = Math.min(0, ...xs) - pad;
  const maxX = Math.max(0, ...xs) + pad;
  const minY = Math.min(0, ...ys) - pad;
  const maxY = Math.max(0, ...ys) + pad;
  const points = route.waypoints.map((w) => `${w.x},${w.y}`).join(" ");
  const dots = route.waypoints
    .map(
      (w, i) => `<circle cx="${w.x}" cy="${w.y}" r="0.45"><title>${i + 1}. ${escapeHtml(w.shelf_id)}</title></circle>`,
    )
    .join("");
  // y axis flipped so the plan reads like a floor map
  return `<svg class="route-sketch" viewBox="${minX} ${minY} ${maxX - minX} ${maxY - minY}" transform="scale(1,-1)">
<polyline points="0,0 ${points}" fill="none" stroke-width="0.2"></polyline>
<circle cx="0" cy="0" r="0.45" class="start"><title>start</title></circle>
${dots}
</svg>`;
}

export function renderRoute(route: RoutePlan | null, unroutable: UnroutableGroup[]): string {
  if (route === null) return "";
  const rows = route.waypoints
    .map(
      (w, i) => `<tr>
<td class="num">${i + 1}</td>
<td>${escapeHtml(w.shelf_id)}</td>
<td>${w.products.map(escapeHtml).join(", ")}</td>
<td class="num">${formatMeters(route.leg_distances[i] ?? 0)}</td>
</tr>`,
    )
    .join("");
  const warnings = unroutable
    .map(
      (group) => `<tr class="warning">
<td></td>
<td>${escapeHtml(group.shelf_id)}</td>
<td>${group.products.map(escapeHtml).join(", ")}</td>
<td>not on the map</td>
</tr>`,
    )
    .join("");
  return `<table class="route-table">
<thead><tr><th>#</th><th>Shelf</th><th>Pick up</th><th>Leg</th></tr></thead>
<tbody>${rows}${warnings}</tbody>
<tfoot><tr><td colspan="3">Total distance</td><td class="num total">${formatMeters(route.total_distance)}</td></tr></tfoot>
</table>${renderRouteSketch(route)}`;
}

export function renderApp(view: SessionView): string {
  return `<div class="columns">
<section class="chat">
  <header>Assistant ${renderPhase(view.phase)}</header>
  ${renderBanner(view)}
  ${renderTranscript(view)}
  <form data-role="composer">
    <input name="turn" type="text" placeholder="Ask for anything…" ${view.pending || view.phase === "finalized" ? "disabled" : ""} autocomplete="off">
    <button type="submit" ${view.pending || view.phase === "finalized" ? "disabled" : ""}>Send</button>
  </form>
</section>
<section class="sidebar">
  <h2>Tailored list</h2>
  ${renderListTable(view.currentList)}
  <h2>Cart</h2>
  ${renderCart(view.cart, view.phase !== "finalized" && !view.pending)}
  ${renderApproveButton(view)}
  ${view.finalTotalCents !== null ? `<p class="final-total">Final total: <strong>${formatCents(view.finalTotalCents)}</strong></p>` : ""}
  <h2>Route</h2>
  ${renderRoute(view.route, view.unroutable)}
</section>
</div>`;
}
