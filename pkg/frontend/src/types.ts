// Wire types mirroring the gateway's JSON schemas.

export type TaskStatus =
  | "unplanned"
  | "planned"
  | "executing"
  | "finished"
  | "failed"
  | "aborted"
  | "skipped";

export interface ActionJson {
  verb: string;
  args: [string, unknown][];
  actor: string;
}

export interface TaskJson {
  id: string;
  task_name: string;
  parent_task: string | null;
  sub_tasks: TaskJson[];
  action: ActionJson;
  specs: Record<string, unknown>;
  conditions: unknown[];
  effects: unknown[];
  context: Record<string, unknown>;
  goals: unknown[];
  est_time: number;
  actual_duration: number | null;
  mapping: Record<string, string>;
  status: TaskStatus;
}

export interface RemedyActionJson {
  operation: string;
  references: Record<string, string>;
  mapping: Record<string, string>;
  with_task: TaskJson | null;
}

export interface SituationJson {
  name: string;
  time: number;
  task: string | null;
  context: Record<string, unknown>;
  logics: Record<string, string>;
  remedy: RemedyActionJson[];
  goals: unknown[];
  status: string;
  id: string;
  awaiting_remedy?: boolean;
}

export interface ExecutionEventJson {
  seq: number;
  time: number;
  task_id: string;
  kind: string;
  detail: Record<string, unknown>;
}

export interface StreamMessage {
  type: "event";
  event: ExecutionEventJson;
}

export interface ValidationReportJson {
  verdict: "pass" | "fail";
  trace: {
    task_id: string;
    phase: string;
    outcome: string;
    detail: unknown;
  }[];
  failed_goal: { path: string; op: string; value: unknown } | null;
}

export interface RemedySubmitResult {
  verdict: "pass" | "fail";
  committed: boolean;
  report: ValidationReportJson;
}

export interface PaletteJson {
  templates: { name: string; context: Record<string, unknown>; task: TaskJson }[];
  verbs: string[];
  anchors: string[];
  selectors: string[];
}
