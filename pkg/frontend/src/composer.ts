// Remedy draft model: an ordered list of action cards that serializes to
// exactly the gateway's remedy JSON schema. Loading a remedy file and
// re-serializing yields canonical-equal JSON: the operation phrase is
// kept verbatim until a picker edits it.

import { canonicalJson } from "./canonical.js";
import {
  Anchor,
  OperationAst,
  Verb,
  VERB_ANCHORS,
  isAst,
  parseOperation,
  renderOperation,
  selectorIsValid,
} from "./operation.js";
import { RemedyActionJson, TaskJson } from "./types.js";

export interface ActionCard {
  operationText: string;
  references: { alias: string; selector: string }[];
  mapping: { target: string; source: string }[];
  withTask: TaskJson | null;
}

export interface LintIssue {
  card: number;
  field: string;
  message: string;
}

export class RemedyDraft {
  cards: ActionCard[] = [];

  static fromJson(actions: RemedyActionJson[]): RemedyDraft {
    const draft = new RemedyDraft();
    for (const action of actions) {
      draft.cards.push({
        operationText: action.operation,
        references: Object.entries(action.references ?? {}).map(
          ([alias, selector]) => ({ alias, selector }),
        ),
        mapping: Object.entries(action.mapping ?? {}).map(
          ([target, source]) => ({ target, source }),
        ),
        withTask: action.with_task ?? null,
      });
    }
    return draft;
  }

  addCard(card?: Partial<ActionCard>): number {
    this.cards.push({
      operationText: card?.operationText ?? "add after the this_task",
      references: card?.references ?? [],
      mapping: card?.mapping ?? [],
      withTask: card?.withTask ?? null,
    });
    return this.cards.length - 1;
  }

  removeCard(index: number): void {
    this.cards.splice(index, 1);
  }

  moveCard(from: number, to: number): void {
    if (from === to || from < 0 || from >= this.cards.length) return;
    const [card] = this.cards.splice(from, 1);
    const bounded = Math.max(0, Math.min(to, this.cards.length));
    this.cards.splice(bounded, 0, card);
  }

  /** Update one picker of a card's operation, re-rendering the phrase. */
  setOperationPart(index: number, part: "verb" | "anchor" | "target",
                   value: string): void {
    const card = this.cards[index];
    const parsed = parseOperation(card.operationText);
    const ast: OperationAst = isAst(parsed)
      ? { ...parsed }
      : { verb: "add", anchor: "after", target: "this_task" };
    if (part === "verb") {
      ast.verb = value as Verb;
      if (!VERB_ANCHORS[ast.verb].includes(ast.anchor)) {
        ast.anchor = VERB_ANCHORS[ast.verb][0];
      }
    } else if (part === "anchor") {
      ast.anchor = value as Anchor;
    } else {
      ast.target = value;
    }
    card.operationText = renderOperation(ast);
  }

  setWithTask(index: number, task: TaskJson | null): void {
    this.cards[index].withTask = task ? structuredClone(task) : null;
  }

  setTaskSpec(index: number, key: string, value: unknown): void {
    const task = this.cards[index].withTask;
    if (!task) return;
    task.specs = { ...task.specs, [key]: value };
  }

  setReference(index: number, alias: string, selector: string): void {
    const refs = this.cards[index].references;
    const existing = refs.find((r) => r.alias === alias);
    if (existing) {
      existing.selector = selector;
    } else {
      refs.push({ alias, selector });
    }
  }

  setMappingRow(index: number, target: string, source: string): void {
    const rows = this.cards[index].mapping;
    const existing = rows.find((r) => r.target === target);
    if (existing) {
      existing.source = source;
    } else {
      rows.push({ target, source });
    }
  }

  toJson(): RemedyActionJson[] {
    return this.cards.map((card) => ({
      operation: card.operationText,
      references: Object.fromEntries(
        card.references.map((r) => [r.alias, r.selector]),
      ),
      mapping: Object.fromEntries(
        card.mapping.map((r) => [r.target, r.source]),
      ),
      with_task: card.withTask,
    }));
  }

  serialize(): string {
    return canonicalJson(this.toJson());
  }

  get empty(): boolean {
    return this.cards.length === 0;
  }

  /** Same checks the gateway applies on intake, runnable before submit. */
  lint(): LintIssue[] {
    const issues: LintIssue[] = [];
    this.cards.forEach((card, index) => {
      const parsed = parseOperation(card.operationText);
      if (!isAst(parsed)) {
        issues.push({ card: index, field: "operation",
                      message: `${parsed.message} (token ${parsed.position})` });
        return;
      }
      if (parsed.verb === "add" && card.withTask === null) {
        issues.push({ card: index, field: "with_task",
                      message: "add requires a task to insert" });
      }
      if ((parsed.verb === "delete" || parsed.verb === "abort") &&
          card.withTask !== null) {
        issues.push({ card: index, field: "with_task",
                      message: `${parsed.verb} takes no task` });
      }
      if (parsed.verb === "modify" && card.withTask === null &&
          card.mapping.length === 0) {
        issues.push({ card: index, field: "mapping",
                      message: "modify needs a task or mapping rows" });
      }
      const aliases = new Set<string>();
      for (const { alias, selector } of card.references) {
        if (aliases.has(alias)) {
          issues.push({ card: index, field: "references",
                        message: `duplicate alias '${alias}'` });
        }
        aliases.add(alias);
        if (!selectorIsValid(selector)) {
          issues.push({ card: index, field: "references",
                        message: `unknown selector '${selector}'` });
        }
      }
      const targets = new Set<string>();
      for (const { target } of card.mapping) {
        if (targets.has(target)) {
          issues.push({ card: index, field: "mapping",
                        message: `duplicate mapping target '${target}'` });
        }
        targets.add(target);
      }
    });
    return issues;
  }
}
