import { ApiClient } from "./api.js";
import { renderApp } from "./render.js";
import { SessionStore } from "./store.js";

declare global {
  interface Window {
    AISLEBOT_API_URL?: string;
  }
}

function apiBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.AISLEBOT_API_URL ?? "http://127.0.0.1:8765";
}

function profileFromQuery(): Record<string, unknown> {
  const raw = new URLSearchParams(window.location.search).get("profile");
  if (!raw) return { preferences: ["health_conscious"], display_name: "Alex" };
  try {
    return JSON.parse(raw);
  } catch {
    return {};
  }
}

function mount(root: HTMLElement): void {
  const store = new SessionStore(new ApiClient(apiBaseUrl()));

  store.subscribe((view) => {
    root.innerHTML = renderApp(view);
    const input = root.querySelector<HTMLInputElement>("input[name=turn]");
    input?.focus();
  });

  root.addEventListener("submit", (event) => {
    const form = event.target as HTMLFormElement;
    if (form.dataset.role !== "composer") return;
    event.preventDefault();
    const input = form.querySelector<HTMLInputElement>("input[name=turn]");
    const text = input?.value ?? "";
    if (text.trim()) void store.sendTurn(text);
  });

  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>("button[data-action]");
    if (!button || button.disabled) return;
    switch (button.dataset.action) {
      case "retry":
        void store.retry();
        break;
      case "approve":
        void store.approve();
        break;
      case "remove":
        void store.removeItem(button.dataset.name ?? "");
        break;
      case "qty":
        void store.setQuantity(button.dataset.name ?? "", Number(button.dataset.qty ?? "1"));
        break;
    }
  });

  void store.start(profileFromQuery());
}

const root = document.getElementById("app");
if (root) mount(root);
