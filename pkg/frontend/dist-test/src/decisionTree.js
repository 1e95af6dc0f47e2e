/** Walkable decision-tree state for quality labeling.
 *
 * The tree document comes from the server; terminals map one-to-one onto
 * the five quality labels. The suggestion is only a suggestion: the
 * annotator can always override it.
 */
export class DecisionTreeState {
    doc;
    node;
    answered = [];
    terminal = null;
    constructor(doc) {
        this.doc = doc;
        this.node = doc.start;
    }
    get currentQuestion() {
        if (this.node === null)
            return null;
        return this.doc.nodes[this.node]?.question ?? null;
    }
    get suggestion() {
        return this.terminal;
    }
    get done() {
        return this.terminal !== null;
    }
    answer(value) {
        if (this.node === null)
            return;
        const node = this.doc.nodes[this.node];
        if (!node)
            return;
        this.answered.push({ node: this.node, question: node.question, answer: value });
        const outcome = node[value];
        if (!outcome)
            return;
        if (outcome.label) {
            this.terminal = outcome.label;
            this.node = null;
        }
        else if (outcome.next) {
            this.node = outcome.next;
        }
    }
    reset() {
        this.node = this.doc.start;
        this.answered.length = 0;
        this.terminal = null;
    }
}
/** Every label reachable from the tree's terminals. */
export function terminalLabels(doc) {
    const labels = new Set();
    for (const node of Object.values(doc.nodes)) {
        for (const branch of [node.yes, node.no]) {
            if (branch?.label)
                labels.add(branch.label);
        }
    }
    return labels;
}
