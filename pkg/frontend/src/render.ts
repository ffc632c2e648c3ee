// DOM rendering for the console panels. All state comes in as arguments;
// nothing here talks to the gateway.

import { RemedyDraft } from "./composer.js";
import { VERB_ANCHORS, isAst, parseOperation } from "./operation.js";
import { PlanNodeView, flattenView, statusClass } from "./store.js";
import {
  PaletteJson,
  SituationJson,
  ValidationReportJson,
} from "./types.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderPlanTree(container: HTMLElement,
                               root: PlanNodeView | null,
                               stale: boolean): void {
  container.replaceChildren();
  if (stale) {
    container.appendChild(el("div", "stale-banner",
      "connection lost — showing the last received state"));
  }
  if (root === null) {
    container.appendChild(el("div", "empty-state", "no plan yet"));
    return;
  }
  for (const node of flattenView(root)) {
    const row = el("div", `plan-node ${statusClass(node.status)}`);
    row.style.paddingLeft = `${node.depth * 16}px`;
    row.dataset.taskId = node.id;
    row.dataset.status = node.status;
    row.appendChild(el("span", "node-status", node.status));
    row.appendChild(el("span", "node-name", node.name));
    row.appendChild(el("span", "node-action", node.actionLine));
    container.appendChild(row);
  }
}

export function renderContextTable(container: HTMLElement,
                                   situation: SituationJson | null): void {
  container.replaceChildren();
  if (!situation) {
    container.appendChild(el("div", "empty-state", "no situation selected"));
    return;
  }
  const heading = el("div", "context-heading",
    `${situation.name} — ${situation.status} (task ${situation.task ?? "-"}, t=${situation.time})`);
  container.appendChild(heading);
  const table = el("table", "context-table");
  for (const [key, value] of Object.entries(situation.context)) {
    const row = el("tr");
    row.appendChild(el("td", "context-key", key));
    row.appendChild(el("td", "context-value", JSON.stringify(value)));
    table.appendChild(row);
  }
  container.appendChild(table);
}

export interface ComposerHooks {
  onOperationPart(card: number, part: "verb" | "anchor" | "target",
                  value: string): void;
  onMoveCard(from: number, to: number): void;
  onRemoveCard(card: number): void;
  onPickTemplate(card: number, templateName: string): void;
  onEditSpec(card: number, key: string, value: string): void;
  onEditReference(card: number, alias: string, selector: string): void;
  onEditMapping(card: number, target: string, source: string): void;
  onSubmit(): void;
}

function select(options: string[], current: string,
                onChange: (value: string) => void): HTMLSelectElement {
  const pick = document.createElement("select");
  for (const value of options) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    pick.appendChild(option);
  }
  pick.value = current;
  pick.addEventListener("change", () => onChange(pick.value));
  return pick;
}

function textInput(value: string, placeholder: string,
                   onChange: (value: string) => void): HTMLInputElement {
  const input = document.createElement("input");
  input.value = value;
  input.placeholder = placeholder;
  input.addEventListener("change", () => onChange(input.value));
  return input;
}

export function renderComposer(container: HTMLElement, draft: RemedyDraft,
                               palette: PaletteJson,
                               hooks: ComposerHooks): void {
  container.replaceChildren();
  draft.cards.forEach((card, index) => {
    const box = el("div", "remedy-card");
    box.dataset.card = String(index);
    const parsed = parseOperation(card.operationText);
    const ast = isAst(parsed) ? parsed : null;

    const header = el("div", "card-header", `action ${index + 1}`);
    const up = el("button", "card-move", "up");
    up.addEventListener("click", () => hooks.onMoveCard(index, index - 1));
    const down = el("button", "card-move", "down");
    down.addEventListener("click", () => hooks.onMoveCard(index, index + 1));
    const remove = el("button", "card-remove", "x");
    remove.addEventListener("click", () => hooks.onRemoveCard(index));
    header.append(up, down, remove);
    box.appendChild(header);

    box.appendChild(el("div", "card-operation", card.operationText));

    const pickers = el("div", "card-pickers");
    pickers.appendChild(select(palette.verbs, ast?.verb ?? "add",
      (value) => hooks.onOperationPart(index, "verb", value)));
    const anchors = ast ? VERB_ANCHORS[ast.verb] : palette.anchors;
    pickers.appendChild(select(anchors, ast?.anchor ?? anchors[0],
      (value) => hooks.onOperationPart(index, "anchor", value)));
    pickers.appendChild(textInput(ast?.target ?? "", "target alias",
      (value) => hooks.onOperationPart(index, "target", value)));
    box.appendChild(pickers);

    const refList = el("div", "card-references");
    for (const ref of card.references) {
      const row = el("div", "reference-row");
      row.appendChild(el("span", "row-label", ref.alias));
      row.appendChild(textInput(ref.selector, "selector",
        (value) => hooks.onEditReference(index, ref.alias, value)));
      refList.appendChild(row);
    }
    const addRef = el("button", "row-add", "+ reference");
    addRef.addEventListener("click", () => {
      const alias = window.prompt("reference alias?");
      if (alias) hooks.onEditReference(index, alias, "executing task");
    });
    refList.appendChild(addRef);
    box.appendChild(refList);

    const mapList = el("div", "card-mapping");
    for (const row of card.mapping) {
      const line = el("div", "mapping-row");
      line.appendChild(el("span", "row-label", row.target));
      line.appendChild(textInput(row.source, "source path",
        (value) => hooks.onEditMapping(index, row.target, value)));
      mapList.appendChild(line);
    }
    const addMap = el("button", "row-add", "+ mapping");
    addMap.addEventListener("click", () => {
      const target = window.prompt("mapping target path?");
      if (target) hooks.onEditMapping(index, target, "context.");
    });
    mapList.appendChild(addMap);
    box.appendChild(mapList);

    const taskBox = el("div", "card-with-task");
    if (card.withTask) {
      taskBox.appendChild(el("span", "row-label",
        `task: ${card.withTask.task_name}`));
      for (const [key, value] of Object.entries(card.withTask.specs)) {
        const spec = el("div", "spec-row");
        spec.appendChild(el("span", "row-label", `specs.${key}`));
        spec.appendChild(textInput(String(value ?? ""), "value",
          (edited) => hooks.onEditSpec(index, key, edited)));
        taskBox.appendChild(spec);
      }
      const addSpec = el("button", "row-add", "+ spec");
      addSpec.addEventListener("click", () => {
        const key = window.prompt("spec key?");
        if (key) hooks.onEditSpec(index, key, "");
      });
      taskBox.appendChild(addSpec);
    } else {
      taskBox.textContent = "no task attached — pick one from the palette";
    }
    box.appendChild(taskBox);
    container.appendChild(box);
  });

  const issues = draft.lint();
  const lintBox = el("div", "lint-box");
  for (const issue of issues) {
    lintBox.appendChild(
      el("div", "lint-issue", `card ${issue.card + 1} ${issue.field}: ${issue.message}`));
  }
  container.appendChild(lintBox);

  const submit = el("button", "submit-remedy", "submit") as HTMLButtonElement;
  submit.disabled = draft.empty || issues.length > 0;
  submit.addEventListener("click", () => hooks.onSubmit());
  container.appendChild(submit);
}

export function renderPalette(container: HTMLElement, palette: PaletteJson,
                              onPick: (templateName: string) => void): void {
  container.replaceChildren();
  container.appendChild(el("div", "palette-heading", "task templates"));
  const seen = new Set<string>();
  for (const template of palette.templates) {
    if (seen.has(template.name)) continue;
    seen.add(template.name);
    const chip = el("button", "palette-chip", template.name);
    chip.addEventListener("click", () => onPick(template.name));
    container.appendChild(chip);
  }
  container.appendChild(el("div", "palette-heading", "verbs"));
  for (const verb of palette.verbs) {
    container.appendChild(el("span", "palette-verb", verb));
  }
}

export function renderVerdictBanner(container: HTMLElement,
                                    report: ValidationReportJson | null,
                                    committed: boolean | null): void {
  container.replaceChildren();
  if (!report) return;
  const cls = report.verdict === "pass" ? "banner-pass" : "banner-fail";
  const headline = report.verdict === "pass"
    ? `validation passed${committed ? ", plan repaired" : ""}`
    : `validation failed${report.failed_goal
        ? ` — goal ${report.failed_goal.path} ${report.failed_goal.op} ${JSON.stringify(report.failed_goal.value)}`
        : ""}`;
  container.appendChild(el("div", cls, headline));
  const trace = el("div", "trace-list");
  for (const entry of report.trace) {
    trace.appendChild(el("div", `trace-${entry.outcome}`,
      `${entry.task_id} ${entry.phase}: ${entry.outcome}`));
  }
  container.appendChild(trace);
}
