import { ApiClient } from "./api.js";
import { GameController } from "./game.js";
import { KbMeta, mountApp } from "./view.js";

declare global {
  interface Window {
    EQ20_API_BASE?: string;
  }
}

// Same-origin by default so the bundled proxy server works out of the box;
// set window.EQ20_API_BASE to point straight at a service elsewhere.
const base = typeof window !== "undefined" && window.EQ20_API_BASE ? window.EQ20_API_BASE : "";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const api = new ApiClient(base);
  const controller = new GameController(api);
  let meta: KbMeta;
  try {
    const [categories, concepts] = await Promise.all([api.getCategories(), api.getConcepts()]);
    meta = {
      categories: categories.categories,
      conceptNames: new Map(concepts.concepts.map((c) => [c.id, c.name])),
    };
  } catch {
    root.textContent = "Cannot reach the eq20 service. Start it and reload.";
    return;
  }
  mountApp(root, controller, meta);
}

void boot();
