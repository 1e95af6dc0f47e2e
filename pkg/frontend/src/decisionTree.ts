/** Walkable decision-tree state for quality labeling.
 *
 * The tree document comes from the server; terminals map one-to-one onto
 * the five quality labels. The suggestion is only a suggestion: the
 * annotator can always override it.
 */

import type { DecisionTreeDoc } from "./types.js";

export interface AnsweredStep {
  node: string;
  question: string;
  answer: "yes" | "no";
}

export class DecisionTreeState {
  private node: string | null;
  readonly answered: AnsweredStep[] = [];
  private terminal: string | null = null;

  constructor(private readonly doc: DecisionTreeDoc) {
    this.node = doc.start;
  }

  get currentQuestion(): string | null {
    if (this.node === null) return null;
    return this.doc.nodes[this.node]?.question ?? null;
  }

  get suggestion(): string | null {
    return this.terminal;
  }

  get done(): boolean {
    return this.terminal !== null;
  }

  answer(value: "yes" | "no"): void {
    if (this.node === null) return;
    const node = this.doc.nodes[this.node];
    if (!node) return;
    this.answered.push({ node: this.node, question: node.question, answer: value });
    const outcome = node[value];
    if (!outcome) return;
    if (outcome.label) {
      this.terminal = outcome.label;
      this.node = null;
    } else if (outcome.next) {
      this.node = outcome.next;
    }
  }

  reset(): void {
    this.node = this.doc.start;
    this.answered.length = 0;
    this.terminal = null;
  }
}

/** Every label reachable from the tree's terminals. */
export function terminalLabels(doc: DecisionTreeDoc): Set<string> {
  const labels = new Set<string>();
  for (const node of Object.values(doc.nodes)) {
    for (const branch of [node.yes, node.no]) {
      if (branch?.label) labels.add(branch.label);
    }
  }
  return labels;
}
