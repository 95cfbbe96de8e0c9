import type { ClassLabel } from "./types";

/**
 * Client-side labeling state: the currently selected display indices, the
 * labels accumulated per point, and an undo stack restoring the exact
 * prior state of every action. Nothing leaves this object except through
 * an explicit submit.
 */

interface UndoEntry {
  kind: "select" | "label" | "clear";
  /** Display indices whose state changed, with their prior values. */
  previousSelected: number[];
  previousLabels: Map<number, ClassLabel | undefined>;
}

export class SelectionState {
  activeLabel: ClassLabel = "Green";
  private selected = new Set<number>();
  private labels = new Map<number, ClassLabel>();
  private undoStack: UndoEntry[] = [];

  constructor(readonly displayCount: number) {}

  get selectedIndices(): number[] {
    return [...this.selected].sort((a, b) => a - b);
  }

  get selectedCount(): number {
    return this.selected.size;
  }

  isSelected(index: number): boolean {
    return this.selected.has(index);
  }

  labelOf(index: number): ClassLabel | undefined {
    return this.labels.get(index);
  }

  labeledEntries(): [number, ClassLabel][] {
    return [...this.labels.entries()].sort((a, b) => a[0] - b[0]);
  }

  get labeledCount(): number {
    return this.labels.size;
  }

  countByLabel(): Record<ClassLabel, number> {
    const counts: Record<ClassLabel, number> = { Green: 0, Yellow: 0, Trunk: 0 };
    for (const label of this.labels.values()) counts[label] += 1;
    return counts;
  }

  private validate(indices: Iterable<number>): number[] {
    const out: number[] = [];
    for (const i of indices) {
      if (!Number.isInteger(i) || i < 0 || i >= this.displayCount) {
        throw new RangeError(`display index ${i} out of range 0..${this.displayCount - 1}`);
      }
      out.push(i);
    }
    return out;
  }

  /** Replace the current selection (a completed lasso/box gesture). */
  select(indices: Iterable<number>): void {
    const next = this.validate(indices);
    this.undoStack.push({
      kind: "select",
      previousSelected: [...this.selected],
      previousLabels: new Map(),
    });
    this.selected = new Set(next);
  }

  /** Add to the current selection (shift-gesture). */
  addToSelection(indices: Iterable<number>): void {
    const extra = this.validate(indices);
    this.undoStack.push({
      kind: "select",
      previousSelected: [...this.selected],
      previousLabels: new Map(),
    });
    for (const i of extra) this.selected.add(i);
  }

  /** Assign the given label to every selected point; selection stays. */
  labelSelection(label: ClassLabel): number {
    if (this.selected.size === 0) return 0;
    const previousLabels = new Map<number, ClassLabel | undefined>();
    for (const i of this.selected) previousLabels.set(i, this.labels.get(i));
    this.undoStack.push({ kind: "label", previousSelected: [...this.selected], previousLabels });
    for (const i of this.selected) this.labels.set(i, label);
    return this.selected.size;
  }

  /** Drop all pending labels and the selection (after a submit). */
  clear(): void {
    const previousLabels = new Map<number, ClassLabel | undefined>();
    for (const [i, label] of this.labels) previousLabels.set(i, label);
    this.undoStack.push({ kind: "clear", previousSelected: [...this.selected], previousLabels });
    this.selected.clear();
    this.labels.clear();
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  /** Restore the exact state before the most recent action. */
  undo(): boolean {
    const entry = this.undoStack.pop();
    if (!entry) return false;
    this.selected = new Set(entry.previousSelected);
    for (const [i, prior] of entry.previousLabels) {
      if (prior === undefined) this.labels.delete(i);
      else this.labels.set(i, prior);
    }
    if (entry.kind === "clear") {
      // labels were wiped wholesale; previousLabels holds every entry
      for (const [i, prior] of entry.previousLabels) {
        if (prior !== undefined) this.labels.set(i, prior);
      }
    }
    return true;
  }
}
