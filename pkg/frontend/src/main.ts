/**
 * Browser shell. All logic lives in the pure modules; this file only wires
 * DOM controls to the Explorer controller and splats SVG into containers.
 */

import { ApiClient } from "./api.js";
import { Explorer } from "./controller.js";
import { renderSvg } from "./render.js";
import { buildHistogramScene, buildPropagationScene } from "./scene.js";
import type { AmendmentAction, ColumnStrategy, RowStrategy, SignFilter } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

async function boot(): Promise<void> {
  const client = new ApiClient("");
  const explorer = new Explorer(client);

  const graphHost = el<HTMLDivElement>("graph");
  const statusHost = el<HTMLDivElement>("status");
  const panelHost = el<HTMLDivElement>("panel");

  const draw = () => {
    graphHost.innerHTML = renderSvg(explorer.scene());
    statusHost.textContent =
      explorer.graph === null
        ? "loading"
        : `${explorer.graph.entities.length} entities, ${explorer.graph.groups.length} groups` +
          (explorer.view.brushed.length > 0 ? `, brushed: ${explorer.view.brushed.join(", ")}` : "");
  };

  const refreshAndDraw = async () => {
    try {
      await explorer.refresh();
    } catch (err) {
      statusHost.textContent = String(err);
      return;
    }
    draw();
  };

  el<HTMLSelectElement>("rows").addEventListener("change", (ev) => {
    const rows = (ev.target as HTMLSelectElement).value as RowStrategy;
    void explorer.setStrategies(rows, explorer.view.columns, explorer.view.focusEntity).then(draw);
  });
  el<HTMLSelectElement>("columns").addEventListener("change", (ev) => {
    const columns = (ev.target as HTMLSelectElement).value as ColumnStrategy;
    const focus = columns === "topology" ? window.prompt("focus entity") : null;
    void explorer.setStrategies(explorer.view.rows, columns, focus).then(draw);
  });

  const applyFilters = () => {
    const minStrength = Number(el<HTMLInputElement>("min-strength").value || "0");
    const maxDegreeRaw = el<HTMLInputElement>("max-degree").value;
    const sign = el<HTMLSelectElement>("sign").value as SignFilter;
    void explorer
      .setFilters({ minStrength, maxDegree: maxDegreeRaw === "" ? null : Number(maxDegreeRaw), sign })
      .then(draw);
  };
  el<HTMLInputElement>("min-strength").addEventListener("change", applyFilters);
  el<HTMLInputElement>("max-degree").addEventListener("change", applyFilters);
  el<HTMLSelectElement>("sign").addEventListener("change", applyFilters);

  el<HTMLButtonElement>("focus-apply").addEventListener("click", () => {
    const start = Number(el<HTMLInputElement>("focus-start").value || "0");
    const length = Number(el<HTMLInputElement>("focus-length").value || "0");
    try {
      explorer.setFocusWindow(length === 0 ? null : { start, length });
    } catch (err) {
      statusHost.textContent = String(err);
      return;
    }
    draw();
  });
  el<HTMLButtonElement>("focus-left").addEventListener("click", () => {
    explorer.dragFocusBody(-1);
    draw();
  });
  el<HTMLButtonElement>("focus-right").addEventListener("click", () => {
    explorer.dragFocusBody(1);
    draw();
  });

  graphHost.addEventListener("click", (ev) => {
    const target = ev.target as SVGElement;
    const groupId = target.dataset ? target.dataset.group : undefined;
    const memberId = target.dataset ? target.dataset.member : undefined;
    if (memberId !== undefined && target.classList.contains("cause")) {
      const action = window.prompt("amendment (flip_sign | set_strength | delete)", "flip_sign");
      if (action === null) {
        return;
      }
      const value = action === "set_strength" ? Number(window.prompt("new strength", "0.5") ?? "0") : undefined;
      void explorer.amend(memberId, action as AmendmentAction, value).then((ok) => {
        statusHost.textContent = ok ? "amendment applied" : "amendment rejected, view restored";
        draw();
      });
      return;
    }
    if (groupId !== undefined) {
      const brushed = new Set(explorer.view.brushed);
      if (brushed.has(groupId)) {
        brushed.delete(groupId);
      } else {
        brushed.add(groupId);
      }
      explorer.brush([...brushed]);
      draw();
    }
  });

  el<HTMLButtonElement>("propagate").addEventListener("click", () => {
    const source = el<HTMLInputElement>("prop-source").value;
    const target = el<HTMLInputElement>("prop-target").value;
    void explorer
      .propagation(source, target)
      .then((res) => {
        panelHost.innerHTML = renderSvg(buildPropagationScene(res));
      })
      .catch((err) => {
        panelHost.textContent = String(err);
      });
  });

  el<HTMLButtonElement>("histogram").addEventListener("click", () => {
    const entity = el<HTMLInputElement>("hist-entity").value;
    const bin = Number(el<HTMLInputElement>("hist-bin").value || "1");
    void explorer
      .histogram(entity, bin)
      .then((res) => {
        panelHost.innerHTML = renderSvg(buildHistogramScene(res));
      })
      .catch((err) => {
        panelHost.textContent = String(err);
      });
  });

  await refreshAndDraw();
}

void boot();
