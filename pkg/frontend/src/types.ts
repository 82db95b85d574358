// Wire types mirroring the server's JSON bodies. The UI never invents or
// recomputes any of these values; money stays in integer cents until the
// final formatting step.

export type Phase = "awaiting_query" | "high_dialogue" | "list_review" | "finalized";

export interface ListViewRow {
  product_id: string;
  name: string;
  brand: string;
  price_cents: number;
  shelf_id: string;
  reason: string;
}

export interface CartLine {
  product_id: string;
  name: string;
  brand: string;
  price_cents: number;
  shelf_id: string;
  qty: number;
  line_total_cents: number;
}

export interface CartSnapshot {
  lines: CartLine[];
  total_cents: number;
  approved: boolean;
}

export interface AssistantTurn {
  text: string;
  list_view: ListViewRow[] | null;
  cart: CartSnapshot;
  phase_after: Phase;
  error_code: string | null;
}

export interface Waypoint {
  shelf_id: string;
  x: number;
  y: number;
  yaw: number;
  products: string[];
}

export interface RoutePlan {
  waypoints: Waypoint[];
  leg_distances: number[];
  total_distance: number;
}

export interface FinalList {
  lines: { product_id: string; qty: number }[];
  total_cents: number;
}

export interface UnroutableGroup {
  shelf_id: string;
  products: string[];
}

export interface ApproveResponse {
  final_list: FinalList;
  route_plan: RoutePlan;
  unroutable: UnroutableGroup[];
}

export interface UserProfile {
  diet?: string[];
  allergens?: string[];
  preferences?: string[];
  display_name?: string;
}

export const EMPTY_CART: CartSnapshot = { lines: [], total_cents: 0, approved: false };
