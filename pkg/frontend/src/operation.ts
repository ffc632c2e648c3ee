// Client-side mirror of the remedy operation grammar, used for the
// verb/anchor/target pickers and for linting before submission.

export type Verb = "add" | "delete" | "modify" | "abort";
export type Anchor = "after" | "before" | "at";

export interface OperationAst {
  verb: Verb;
  anchor: Anchor;
  target: string;
}

export interface OperationError {
  message: string;
  position: number;
}

const VERBS: Verb[] = ["add", "delete", "modify", "abort"];
const ANCHORS: Anchor[] = ["after", "before", "at"];
const ARTICLES = new Set(["the", "a", "an"]);

export const VERB_ANCHORS: Record<Verb, Anchor[]> = {
  add: ["after", "before"],
  delete: ["at"],
  modify: ["at"],
  abort: ["at"],
};

export function parseOperation(text: string): OperationAst | OperationError {
  const tokens = text.split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length === 0) {
    return { message: "empty operation", position: 0 };
  }
  const verb = tokens[0].toLowerCase() as Verb;
  if (!VERBS.includes(verb)) {
    return { message: `unknown verb '${tokens[0]}'`, position: 0 };
  }
  let pos = 1;
  let anchor: Anchor | null = null;
  if (pos < tokens.length && ANCHORS.includes(tokens[pos].toLowerCase() as Anchor)) {
    anchor = tokens[pos].toLowerCase() as Anchor;
    pos += 1;
    if (!VERB_ANCHORS[verb].includes(anchor)) {
      return {
        message: `anchor '${anchor}' not allowed with verb '${verb}'`,
        position: pos - 1,
      };
    }
  }
  if (anchor === null) {
    anchor = verb === "add" ? "after" : "at";
  }
  while (pos < tokens.length && ARTICLES.has(tokens[pos].toLowerCase())) {
    pos += 1;
  }
  if (pos >= tokens.length) {
    return { message: "missing target", position: pos };
  }
  const target = tokens[pos];
  if (pos + 1 < tokens.length) {
    return { message: `unexpected token '${tokens[pos + 1]}'`, position: pos + 1 };
  }
  return { verb, anchor, target };
}

export function isAst(result: OperationAst | OperationError): result is OperationAst {
  return (result as OperationAst).verb !== undefined;
}

export function renderOperation(ast: OperationAst): string {
  return `${ast.verb} ${ast.anchor} ${ast.target}`;
}

const SELECTOR_HEADS = ["task:", "new_task:"];
const SELECTOR_LITERALS = new Set([
  "executing task",
  "situation context",
  "situation",
]);

export function selectorIsValid(selector: string): boolean {
  const trimmed = selector.trim();
  if (SELECTOR_LITERALS.has(trimmed)) {
    return true;
  }
  return SELECTOR_HEADS.some((head) => trimmed.startsWith(head) &&
    trimmed.length > head.length);
}
