/** Bootstrap: wire the store to the four coordinated views.
 *
 * Query parameters: ?api=<base-url> (default same origin) and
 * ?snapshot=<id> (default: first snapshot listed).
 */

import { HttpApiClient } from "./api";
import { dimensionViewScene } from "./scene/dimensionView";
import { imageViewScene } from "./scene/imageView";
import { overviewScene } from "./scene/overview";
import { patternViewScene } from "./scene/patternView";
import { renderDimensionView } from "./render/dimensionView";
import { renderImageView } from "./render/imageView";
import { renderOverview } from "./render/overview";
import { renderPatternView } from "./render/patternView";
import { ExplorerStore } from "./state";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new HttpApiClient(params.get("api") ?? "");
  const store = new ExplorerStore(api);
  let showLegend = false;

  const banner = el("notice");
  const render = () => {
    const state = store.state;
    const snapshot = state.snapshotId ?? "";
    banner.textContent = state.notice ?? "";
    banner.style.display = state.notice ? "block" : "none";

    renderOverview(
      el("overview"),
      overviewScene(state.cells, state.annotations, state.gridM, state.selected),
      {
        onSelect: (row, col) => void store.selectCell(row, col),
        onAnnotate: (row, col) => {
          const text = window.prompt("annotate this cell:");
          if (text) {
            void store.selectCell(row, col).then(() => store.annotate(text));
          }
        },
        onTransform: () => undefined, // d3 mutates the stage directly
      },
      showLegend,
    );

    renderImageView(
      el("image-view"),
      imageViewScene(
        state.layout, store.pointsById(), state.brushed, state.conceptsOn, state.concepts,
      ),
      state.conceptsOn,
      {
        onBrush: (ids) => void store.brush(ids),
        onToggleConcepts: () => void store.toggleConcepts(),
        imageUrl: (imageId) => `/corpus/${imageId}`,
      },
    );

    renderPatternView(
      el("pattern-view"),
      patternViewScene(
        state.brushed, store.pointsById(), state.contributions, state.whatIf,
        (imageId, dim) => api.relevanceUrl(snapshot, imageId, dim),
      ),
      {
        onWhatIf: (imageId) => void store.runWhatIf(imageId),
        imageUrl: (imageId) => `/corpus/${imageId}`,
      },
    );

    renderDimensionView(
      el("dimension-view"),
      dimensionViewScene(
        state.globalDimensions, state.cellDimensions, state.dimensionFilter,
        store.selectedCell(), store.pointsById(),
      ),
      { onFilter: (f) => void store.setDimensionFilter(f) },
    );
  };

  store.subscribe(render);
  el("legend-toggle").addEventListener("click", () => {
    showLegend = !showLegend;
    render();
  });

  const snapshots = await api.snapshots();
  if (!snapshots.length) {
    banner.textContent = "no snapshots available";
    banner.style.display = "block";
    return;
  }
  const wanted = params.get("snapshot") ?? snapshots[0].snapshot_id;
  const info = snapshots.find((s) => s.snapshot_id === wanted) ?? snapshots[0];
  await store.init(info.snapshot_id, info.grid_m);
}

void boot();
