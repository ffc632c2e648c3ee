// Console state folded from gateway responses and the event stream.
// The view derives solely from what the gateway said; replaying the same
// messages reproduces the same view.

import { ExecutionEventJson, StreamMessage, TaskJson, TaskStatus } from "./types.js";

export interface PlanNodeView {
  id: string;
  name: string;
  status: TaskStatus;
  actionLine: string;
  depth: number;
  children: PlanNodeView[];
}

export function planToView(task: TaskJson, depth = 0): PlanNodeView {
  const args = task.action.args.map(([, value]) => String(value ?? "")).join(" ");
  return {
    id: task.id,
    name: task.task_name,
    status: task.status,
    actionLine: `${task.action.verb} ${args}`.trim(),
    depth,
    children: task.sub_tasks.map((sub) => planToView(sub, depth + 1)),
  };
}

export function flattenView(node: PlanNodeView): PlanNodeView[] {
  return [node, ...node.children.flatMap(flattenView)];
}

/** Status highlighting per the operator console's legend. */
export function statusClass(status: TaskStatus): string {
  switch (status) {
    case "executing":
      return "node-executing";
    case "failed":
      return "node-failed";
    case "aborted":
      return "node-aborted";
    case "finished":
      return "node-finished";
    case "skipped":
      return "node-skipped";
    default:
      return "node-pending";
  }
}

export class GapDetector {
  private last = 0;
  readonly gaps: { after: number; got: number }[] = [];

  observe(seq: number): void {
    if (this.last !== 0 && seq !== this.last + 1) {
      this.gaps.push({ after: this.last, got: seq });
    }
    this.last = Math.max(this.last, seq);
  }

  get clean(): boolean {
    return this.gaps.length === 0;
  }

  get lastSeq(): number {
    return this.last;
  }
}

export interface ConsoleState {
  snapshotSeq: number;
  events: ExecutionEventJson[];
  gapDetector: GapDetector;
  connectionStale: boolean;
}

export function newConsoleState(): ConsoleState {
  return {
    snapshotSeq: 0,
    events: [],
    gapDetector: new GapDetector(),
    connectionStale: false,
  };
}

export function applyMessage(state: ConsoleState, message: StreamMessage): void {
  if (message.type !== "event") return;
  state.gapDetector.observe(message.event.seq);
  state.events.push(message.event);
  state.snapshotSeq = Math.max(state.snapshotSeq, message.event.seq);
}

/** Feed a whole replayed stream; returns true when no seq was dropped. */
export function foldStream(state: ConsoleState,
                           messages: StreamMessage[]): boolean {
  for (const message of messages) {
    applyMessage(state, message);
  }
  return state.gapDetector.clean;
}
