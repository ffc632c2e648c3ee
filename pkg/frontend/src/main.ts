// Console wiring: poll-free live view over the event stream, with the
// remedy composer bound to the currently escalated situation.

import { GatewayClient, GatewayError } from "./api.js";
import { RemedyDraft } from "./composer.js";
import {
  renderComposer,
  renderContextTable,
  renderPalette,
  renderPlanTree,
  renderVerdictBanner,
} from "./render.js";
import { applyMessage, newConsoleState, planToView } from "./store.js";
import { PaletteJson, SituationJson, ValidationReportJson } from "./types.js";

const client = new GatewayClient("");
const state = newConsoleState();
const draft = new RemedyDraft();

let palette: PaletteJson = { templates: [], verbs: [], anchors: [], selectors: [] };
let selected: SituationJson | null = null;
let lastReport: ValidationReportJson | null = null;
let lastCommitted: boolean | null = null;

function panel(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing panel #${id}`);
  return node;
}

async function refreshPlan(): Promise<void> {
  const body = await client.plan();
  const view = body.plan ? planToView(body.plan) : null;
  renderPlanTree(panel("plan-panel"), view, state.connectionStale);
}

async function refreshSituations(): Promise<void> {
  const situations = await client.situations();
  const escalated = situations.filter((s) => s.awaiting_remedy);
  selected = escalated[0] ?? selected;
  renderContextTable(panel("context-panel"), selected);
  redrawComposer();
}

function redrawComposer(): void {
  renderComposer(panel("composer-panel"), draft, palette, {
    onOperationPart: (card, part, value) => {
      draft.setOperationPart(card, part, value);
      redrawComposer();
    },
    onMoveCard: (from, to) => {
      draft.moveCard(from, to);
      redrawComposer();
    },
    onRemoveCard: (card) => {
      draft.removeCard(card);
      redrawComposer();
    },
    onPickTemplate: (card, name) => {
      const template = palette.templates.find((t) => t.name === name);
      draft.setWithTask(card, template ? template.task : null);
      redrawComposer();
    },
    onEditSpec: (card, key, value) => {
      draft.setTaskSpec(card, key, value);
      redrawComposer();
    },
    onEditReference: (card, alias, selector) => {
      draft.setReference(card, alias, selector);
      redrawComposer();
    },
    onEditMapping: (card, target, source) => {
      draft.setMappingRow(card, target, source);
      redrawComposer();
    },
    onSubmit: () => {
      void submitDraft();
    },
  });
}

async function submitDraft(): Promise<void> {
  if (!selected || draft.lint().length > 0) return;
  try {
    const result = await client.submitRemedy(selected.id, draft.toJson());
    lastReport = result.report;
    lastCommitted = result.committed;
    renderVerdictBanner(panel("verdict-panel"), lastReport, lastCommitted);
    if (result.committed) {
      await refreshPlan();
    }
  } catch (error) {
    if (error instanceof GatewayError && error.status === 409) {
      renderVerdictBanner(panel("verdict-panel"), {
        verdict: "fail",
        trace: [],
        failed_goal: null,
      }, false);
      panel("verdict-panel").prepend(
        Object.assign(document.createElement("div"), {
          className: "banner-fail",
          textContent: "target changed since the snapshot — refresh and retry; your draft is preserved",
        }),
      );
      await refreshPlan();
      await refreshSituations();
    } else {
      throw error;
    }
  }
}

async function followEvents(): Promise<void> {
  for (;;) {
    try {
      state.connectionStale = false;
      await client.readEvents(async (message) => {
        applyMessage(state, message);
        await refreshPlan();
        if (message.type === "event" &&
            message.event.kind === "situation_polled") {
          await refreshSituations();
        }
      });
    } catch {
      state.connectionStale = true;
      await refreshPlan().catch(() => undefined);
    }
    await new Promise((resolve) => setTimeout(resolve, 1000));
  }
}

async function start(): Promise<void> {
  palette = await client.palette();
  renderPalette(panel("palette-panel"), palette, (name) => {
    const index = draft.addCard();
    const template = palette.templates.find((t) => t.name === name);
    if (template) draft.setWithTask(index, template.task);
    redrawComposer();
  });
  await refreshPlan();
  await refreshSituations();
  redrawComposer();
  void followEvents();
}

start().catch((error) => {
  console.error("console failed to start", error);
});
